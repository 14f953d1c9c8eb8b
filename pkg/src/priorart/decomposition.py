"""Dimensionality reduction of BOW features: truncated-SVD LSA and linear KPCA.

The kernel matrix is decomposed as-is, without the centering step of
textbook KPCA, so linear-kernel KPCA and LSA are truncations of the same
SVD and give identical pairwise cosines on training rows.

Small problems (min(D, L) <= 200) use a dense LAPACK SVD; larger ones a
randomized range finder with oversampling 10 and 4 power iterations.
"""

from __future__ import annotations

import struct

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import NumericError, ParameterError, ValidationError
from .features import FeatureMatrix, FeatureVector

_DENSE_CUTOFF = 200

_LSA_MAGIC = b"PRIORART-LSA\x01"
_KPCA_MAGIC = b"PRIORART-KPCA\x01"


def _as_matrix(X) -> sparse.csr_matrix:
    if isinstance(X, FeatureMatrix):
        return X.to_csr()
    if sparse.issparse(X):
        return X.tocsr()
    return sparse.csr_matrix(np.asarray(X, dtype=float))


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make each component's largest-magnitude coordinate positive."""
    out = components.copy()
    for row in out:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1
    return out


def randomized_svd(X: sparse.csr_matrix, k: int, oversample: int = 10,
                   power_iters: int = 4, seed: int = 0):
    """Truncated SVD via a Gaussian range finder with power iterations."""
    rng = np.random.default_rng(seed)
    n_probe = min(k + oversample, min(X.shape))
    Q = np.linalg.qr(X @ rng.standard_normal((X.shape[1], n_probe)))[0]
    for _ in range(power_iters):
        Q = np.linalg.qr(X.T @ Q)[0]
        Q = np.linalg.qr(X @ Q)[0]
    B = Q.T @ X
    Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
    return (Q @ Ub)[:, :k], s[:k], Vt[:k]


def _truncated_svd(X: sparse.csr_matrix, k: int, seed: int):
    if min(X.shape) <= _DENSE_CUTOFF:
        U, s, Vt = np.linalg.svd(X.toarray(), full_matrices=False)
        return U[:, :k], s[:k], Vt[:k]
    return randomized_svd(X, k, seed=seed)


class Lsa(BaseEstimator, TransformerMixin):
    """Latent semantic analysis: project documents onto the top singular
    directions of the document-term matrix.

    Parameters
    ----------
    n_components : int
        Target dimensionality; must satisfy 1 <= n_components <= min(D, L).
    random_state : int
        Seed for the randomized solver (only used above the dense cutoff).

    Attributes
    ----------
    components_ : ndarray of shape (n_components, n_features)
        Right singular vectors, rows orthonormal, signs fixed so each row's
        largest-magnitude coordinate is positive.
    singular_values_ : ndarray of shape (n_components,)
        Non-increasing, non-negative.
    """

    def __init__(self, n_components: int = 100, random_state: int = 0):
        self.n_components = n_components
        self.random_state = random_state

    def fit(self, X, y=None) -> "Lsa":
        M = _as_matrix(X)
        if not 1 <= self.n_components <= min(M.shape):
            raise ParameterError(
                f"n_components must be in [1, {min(M.shape)}], got {self.n_components}"
            )
        _, s, Vt = _truncated_svd(M, self.n_components, self.random_state)
        if not np.isfinite(s).all() or not np.isfinite(Vt).all():
            raise NumericError("SVD produced non-finite factors")
        self.components_ = _fix_signs(Vt)
        self.singular_values_ = np.maximum(s, 0.0)
        self.n_features_in_ = M.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        if isinstance(X, FeatureVector):
            return self.transform_vector(X)
        M = _as_matrix(X)
        if M.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected dim {self.n_features_in_}, got {M.shape[1]}")
        dense = np.asarray(M @ self.components_.T)
        ids = X.row_ids if isinstance(X, FeatureMatrix) else [str(i) for i in range(M.shape[0])]
        return FeatureMatrix(
            rows=[FeatureVector.from_dense(i, row) for i, row in zip(ids, dense)],
            dim=self.n_components,
        )

    def transform_vector(self, v: FeatureVector) -> FeatureVector:
        check_is_fitted(self, "components_")
        if v.dim != self.n_features_in_:
            raise ValidationError(f"expected dim {self.n_features_in_}, got {v.dim}")
        out = np.zeros(self.n_components)
        for i, w in v.entries.items():
            out += w * self.components_[:, i]
        return FeatureVector.from_dense(v.doc_id, out)

    def save(self, path) -> None:
        """Binary layout: magic, u32 n_components, u32 n_features, then the
        component rows and singular values as little-endian float64."""
        check_is_fitted(self, "components_")
        with open(path, "wb") as fh:
            fh.write(_LSA_MAGIC)
            fh.write(struct.pack("<II", self.n_components, self.n_features_in_))
            fh.write(self.components_.astype("<f8").tobytes(order="C"))
            fh.write(self.singular_values_.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "Lsa":
        with open(path, "rb") as fh:
            magic = fh.read(len(_LSA_MAGIC))
            if magic != _LSA_MAGIC:
                raise ValidationError(f"{path}: not an LSA model file")
            k, n_features = struct.unpack("<II", fh.read(8))
            comp = np.frombuffer(fh.read(8 * k * n_features), dtype="<f8").reshape(k, n_features)
            sv = np.frombuffer(fh.read(8 * k), dtype="<f8")
        model = cls(n_components=k)
        model.components_ = comp.copy()
        model.singular_values_ = sv.copy()
        model.n_features_in_ = n_features
        return model


class KernelPca(BaseEstimator, TransformerMixin):
    """Kernel PCA over the linear kernel of the training feature matrix.

    Projections scale by eigval**-1/2, so with all components retained the
    dot products of transformed training rows reproduce the kernel matrix.

    Attributes
    ----------
    eigenvectors_ : ndarray of shape (n_train, n_components)
    eigenvalues_ : ndarray of shape (n_components,)
        Non-increasing; tiny negative eigenvalues are clamped to 0.
    """

    def __init__(self, n_components: int = 100):
        self.n_components = n_components

    def fit(self, X, y=None) -> "KernelPca":
        M = _as_matrix(X)
        if not 1 <= self.n_components <= M.shape[0]:
            raise ParameterError(
                f"n_components must be in [1, {M.shape[0]}], got {self.n_components}"
            )
        K = np.asarray((M @ M.T).toarray())
        if not np.isfinite(K).all():
            raise NumericError("kernel matrix contains non-finite values")
        eigvals, eigvecs = np.linalg.eigh(K)
        order = np.argsort(eigvals)[::-1][: self.n_components]
        eigvals = eigvals[order]
        eigvals[eigvals < 0] = 0.0
        self.eigenvalues_ = eigvals
        self.eigenvectors_ = _fix_signs(eigvecs[:, order].T).T
        self.train_matrix_ = M
        self.n_features_in_ = M.shape[1]
        return self

    def _project(self, kernel_row: np.ndarray) -> np.ndarray:
        proj = self.eigenvectors_.T @ kernel_row
        out = np.zeros_like(proj)
        positive = self.eigenvalues_ > 0
        out[positive] = proj[positive] / np.sqrt(self.eigenvalues_[positive])
        return out

    def transform(self, X):
        check_is_fitted(self, "eigenvectors_")
        if isinstance(X, FeatureVector):
            return self.transform_vector(X)
        M = _as_matrix(X)
        if M.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected dim {self.n_features_in_}, got {M.shape[1]}")
        K_rows = np.asarray((self.train_matrix_ @ M.T).toarray()).T
        ids = X.row_ids if isinstance(X, FeatureMatrix) else [str(i) for i in range(M.shape[0])]
        return FeatureMatrix(
            rows=[FeatureVector.from_dense(i, self._project(row)) for i, row in zip(ids, K_rows)],
            dim=self.n_components,
        )

    def transform_vector(self, v: FeatureVector) -> FeatureVector:
        check_is_fitted(self, "eigenvectors_")
        if v.dim != self.n_features_in_:
            raise ValidationError(f"expected dim {self.n_features_in_}, got {v.dim}")
        dense = v.to_dense()
        kernel_row = np.asarray(self.train_matrix_ @ dense).ravel()
        return FeatureVector.from_dense(v.doc_id, self._project(kernel_row))

    def save(self, path, train_matrix_ref: str = "") -> None:
        """Binary layout: magic, u16 ref length + UTF-8 feature-file ref,
        u32 n_components, u32 n_train, eigenvector columns then eigenvalues
        as little-endian float64."""
        check_is_fitted(self, "eigenvectors_")
        ref = train_matrix_ref.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_KPCA_MAGIC)
            fh.write(struct.pack("<H", len(ref)))
            fh.write(ref)
            fh.write(struct.pack("<II", self.n_components, self.eigenvectors_.shape[0]))
            fh.write(self.eigenvectors_.astype("<f8").tobytes(order="C"))
            fh.write(self.eigenvalues_.astype("<f8").tobytes())

    @classmethod
    def load(cls, path, train_matrix: FeatureMatrix | None = None) -> tuple["KernelPca", str]:
        """Returns the model plus the stored training-matrix reference; pass
        the referenced matrix in to make the model usable for transforms."""
        with open(path, "rb") as fh:
            magic = fh.read(len(_KPCA_MAGIC))
            if magic != _KPCA_MAGIC:
                raise ValidationError(f"{path}: not a KPCA model file")
            (ref_len,) = struct.unpack("<H", fh.read(2))
            ref = fh.read(ref_len).decode("utf-8")
            k, n_train = struct.unpack("<II", fh.read(8))
            vecs = np.frombuffer(fh.read(8 * n_train * k), dtype="<f8").reshape(n_train, k)
            vals = np.frombuffer(fh.read(8 * k), dtype="<f8")
        model = cls(n_components=k)
        model.eigenvectors_ = vecs.copy()
        model.eigenvalues_ = vals.copy()
        if train_matrix is not None:
            if len(train_matrix) != n_train:
                raise ValidationError(
                    f"{path}: model was fit on {n_train} rows, reference matrix has {len(train_matrix)}"
                )
            model.train_matrix_ = train_matrix.to_csr()
            model.n_features_in_ = train_matrix.dim
        return model, ref

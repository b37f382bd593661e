"""Channel normalization and principal component extraction.

The diagnosis front end turns raw multichannel telemetry into a short
score vector: drop channels that never move, z-score the rest against
the training corpus, then project onto the leading eigenvectors of the
sample covariance.  Components are kept while they explain at least a
configurable fraction of total variance (2% by default), which both
compresses the input and filters measurement noise, since uncorrelated
per-channel noise lands mostly in the discarded directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreprocessingError, ShapeError

# A column whose spread is this small relative to its magnitude carries
# no information and would blow up the z-score.
CONSTANT_REL_TOL = 1e-12

DEFAULT_VARIANCE_CUTOFF = 0.02


def _as_matrix(X: np.ndarray, n_features: int | None = None) -> np.ndarray:
    A = np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise ShapeError(f"expected a 2-d sample matrix, got shape {A.shape}")
    if n_features is not None and A.shape[1] != n_features:
        raise ShapeError(
            f"expected {n_features} features, got {A.shape[1]}")
    return A


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

@dataclass
class Normalizer:
    """Per-channel z-scoring memorized from a training corpus.

    ``kept_columns`` indexes the original feature axis; constant columns
    are dropped at fit time and silently skipped on apply.
    """

    kept_columns: np.ndarray   # (k,) int indices into the raw feature axis
    mean: np.ndarray           # (k,)
    std: np.ndarray            # (k,) all strictly positive
    n_features: int

    @property
    def n_kept(self) -> int:
        return int(self.kept_columns.size)


def normalize_fit(X: np.ndarray) -> Normalizer:
    A = _as_matrix(X)
    if A.shape[0] < 2:
        raise PreprocessingError("need at least two rows to fit a normalizer")
    if not np.all(np.isfinite(A)):
        raise PreprocessingError("training matrix contains non-finite values")
    mean = A.mean(axis=0)
    std = A.std(axis=0)
    scale = np.maximum(1.0, np.abs(A).max(axis=0))
    kept = np.nonzero(std > CONSTANT_REL_TOL * scale)[0]
    if kept.size == 0:
        raise PreprocessingError("every column is constant; nothing to keep")
    return Normalizer(kept_columns=kept, mean=mean[kept], std=std[kept],
                      n_features=A.shape[1])


def normalize_apply(norm: Normalizer, X: np.ndarray) -> np.ndarray:
    A = _as_matrix(X, norm.n_features)
    return (A[:, norm.kept_columns] - norm.mean) / norm.std


def normalize_invert(norm: Normalizer, Z: np.ndarray) -> np.ndarray:
    """Map z-scores back to raw units (kept columns only)."""
    B = _as_matrix(Z, norm.n_kept)
    return B * norm.std + norm.mean


# ---------------------------------------------------------------------------
# Principal components
# ---------------------------------------------------------------------------

@dataclass
class PcaModel:
    """Eigenstructure of the training covariance.

    ``loadings`` holds every computed component as a row, eigenvalue
    order, so the retained block is ``loadings[:retained_count]``.
    """

    loadings: np.ndarray            # (k, n) orthonormal rows
    variance_fractions: np.ndarray  # (k,) nonnegative, sums to 1
    retained_count: int
    n_features: int
    n_samples: int

    @property
    def retained_loadings(self) -> np.ndarray:
        return self.loadings[:self.retained_count]


def pca_fit(X: np.ndarray,
            variance_cutoff: float = DEFAULT_VARIANCE_CUTOFF) -> PcaModel:
    """Fit components to normalized data via singular value decomposition.

    Works on the centered matrix directly rather than forming the
    covariance, which is better conditioned for near-collinear channels.
    A component is retained when its own share of total variance reaches
    ``variance_cutoff``; at least one is always kept.
    """
    A = _as_matrix(X)
    m, n = A.shape
    if m < 2:
        raise PreprocessingError("need at least two samples for components")
    if not 0.0 <= variance_cutoff < 1.0:
        raise PreprocessingError("variance cutoff must lie in [0, 1)")
    centered = A - A.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eigvals = svals ** 2 / (m - 1)
    total = eigvals.sum()
    if total <= 0.0:
        raise PreprocessingError("data has zero variance; components undefined")
    fractions = eigvals / total
    retained = int(np.sum(fractions >= variance_cutoff))
    retained = max(1, min(retained, min(m - 1, n)))
    # Deterministic sign: the largest-magnitude entry of each loading
    # points positive.
    flip = np.sign(vt[np.arange(vt.shape[0]), np.argmax(np.abs(vt), axis=1)])
    flip[flip == 0] = 1.0
    loadings = vt * flip[:, None]
    return PcaModel(loadings=loadings, variance_fractions=fractions,
                    retained_count=retained, n_features=n, n_samples=m)


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project onto the retained components; rows are score vectors."""
    A = _as_matrix(X, model.n_features)
    return A @ model.retained_loadings.T


def pca_residual(model: PcaModel,
                 X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split data into its retained-subspace part and the remainder.

    Returns ``(X_hat, E)`` with ``X == X_hat + E``; ``X_hat`` is the
    reconstruction from retained scores, ``E`` what the components drop.
    """
    A = _as_matrix(X, model.n_features)
    scores = A @ model.retained_loadings.T
    x_hat = scores @ model.retained_loadings
    return x_hat, A - x_hat

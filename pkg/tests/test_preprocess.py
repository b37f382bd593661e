"""Normalizer and component extraction, checked against eigendecomposition."""

import numpy as np
import pytest

from pwrdiag.errors import PreprocessingError, ShapeError
from pwrdiag.preprocess import (
    DEFAULT_VARIANCE_CUTOFF,
    normalize_apply,
    normalize_fit,
    normalize_invert,
    pca_fit,
    pca_residual,
    pca_transform,
)


# ---------------------------------------------------------------------------
# Normalizer
# ---------------------------------------------------------------------------

def test_normalizer_zero_mean_unit_std_on_train():
    rng = np.random.default_rng(0)
    X = rng.normal(5.0, 3.0, size=(400, 7)) * np.arange(1, 8)
    norm = normalize_fit(X)
    Z = normalize_apply(norm, X)
    assert norm.n_kept == 7
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-12)


def test_normalizer_drops_constant_columns():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(100, 5))
    X[:, 2] = 42.0
    X[:, 4] = 0.0
    norm = normalize_fit(X)
    np.testing.assert_array_equal(norm.kept_columns, [0, 1, 3])
    Z = normalize_apply(norm, X)
    assert Z.shape == (100, 3)


def test_normalizer_invert_round_trips():
    rng = np.random.default_rng(2)
    X = rng.normal(2.0, 0.5, size=(50, 4))
    norm = normalize_fit(X)
    Y = rng.normal(2.0, 0.5, size=(20, 4))
    np.testing.assert_allclose(
        normalize_invert(norm, normalize_apply(norm, Y)), Y, atol=1e-12)


def test_normalizer_rejects_degenerate_input():
    with pytest.raises(PreprocessingError):
        normalize_fit(np.ones((1, 3)))
    with pytest.raises(PreprocessingError):
        normalize_fit(np.full((10, 3), 7.0))
    bad = np.ones((10, 3))
    bad[3, 1] = np.nan
    with pytest.raises(PreprocessingError):
        normalize_fit(bad)


def test_normalizer_apply_checks_width():
    norm = normalize_fit(np.random.default_rng(3).normal(size=(20, 6)))
    with pytest.raises(ShapeError):
        normalize_apply(norm, np.zeros((5, 4)))
    one = normalize_apply(norm, np.zeros(6))
    assert one.shape == (1, 6)


# ---------------------------------------------------------------------------
# Components vs. brute-force eigendecomposition
# ---------------------------------------------------------------------------

def test_components_match_covariance_eigenstructure():
    """Every loading must be an eigenpair of the sample covariance.

    The implementation goes through a singular value decomposition; the
    oracle here forms the covariance matrix explicitly and runs a
    symmetric eigensolver on it.  One hundred random shapes and scales.
    """
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n = int(rng.integers(2, 12))
        m = int(rng.integers(n + 2, 200))
        scales = 10.0 ** rng.uniform(-3, 3, size=n)
        X = rng.normal(size=(m, n)) * scales + rng.normal(size=n)
        model = pca_fit(X)

        C = np.cov(X, rowvar=False)
        eig_desc = np.sort(np.linalg.eigvalsh(C))[::-1]
        svd_eigvals = model.variance_fractions * eig_desc.sum()
        np.testing.assert_allclose(
            svd_eigvals, eig_desc, rtol=1e-8,
            atol=1e-12 * eig_desc[0],
            err_msg=f"eigenvalue mismatch on trial {trial}")

        V = model.loadings
        np.testing.assert_allclose(V @ V.T, np.eye(V.shape[0]), atol=1e-10,
                                   err_msg=f"loadings not orthonormal, "
                                           f"trial {trial}")
        resid = C @ V.T - V.T * svd_eigvals
        assert np.abs(resid).max() <= 1e-8 * eig_desc[0], \
            f"loading is not an eigenvector on trial {trial}"


def test_components_on_a_known_line():
    # Points on y = 2x: one direction carries all the variance.
    t = np.linspace(-3, 3, 50)
    X = np.column_stack([t, 2 * t])
    model = pca_fit(X)
    assert model.retained_count == 1
    np.testing.assert_allclose(model.variance_fractions, [1.0, 0.0],
                               atol=1e-12)
    np.testing.assert_allclose(np.abs(model.loadings[0]),
                               [1 / np.sqrt(5), 2 / np.sqrt(5)], atol=1e-12)


def test_loading_sign_convention():
    rng = np.random.default_rng(7)
    for _ in range(20):
        X = rng.normal(size=(60, 5)) * rng.uniform(0.1, 10, size=5)
        model = pca_fit(X)
        for row in model.loadings:
            assert row[np.argmax(np.abs(row))] > 0.0


def test_reconstruction_identity_and_residual_orthogonality():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(120, 9)) @ rng.normal(size=(9, 9))
    model = pca_fit(X, variance_cutoff=0.05)
    x_hat, E = pca_residual(model, X)
    np.testing.assert_allclose(x_hat + E, X, atol=1e-10)
    # What the retained block drops really lies outside its span.
    np.testing.assert_allclose(E @ model.retained_loadings.T, 0.0, atol=1e-9)


def test_retention_respects_cutoff():
    rng = np.random.default_rng(9)
    base = rng.normal(size=(300, 8))
    # Hierarchical scales so variance fractions spread over decades.
    X = base * (2.0 ** -np.arange(8))
    loose = pca_fit(X, variance_cutoff=0.0)
    default = pca_fit(X, variance_cutoff=DEFAULT_VARIANCE_CUTOFF)
    tight = pca_fit(X, variance_cutoff=0.5)
    assert loose.retained_count == 8
    assert loose.retained_count >= default.retained_count >= 1
    assert default.retained_count >= tight.retained_count >= 1
    fr = default.variance_fractions
    assert np.all(np.diff(fr) <= 1e-15)
    assert fr.sum() == pytest.approx(1.0)
    kept = fr[:default.retained_count]
    assert kept[-1] >= DEFAULT_VARIANCE_CUTOFF
    if default.retained_count < fr.size:
        assert fr[default.retained_count] < DEFAULT_VARIANCE_CUTOFF


def test_transform_shapes_and_errors():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(40, 6))
    model = pca_fit(X, variance_cutoff=0.01)
    S = pca_transform(model, X)
    assert S.shape == (40, model.retained_count)
    single = pca_transform(model, X[0])
    np.testing.assert_allclose(single, S[:1], atol=1e-14)
    with pytest.raises(ShapeError):
        pca_transform(model, np.zeros((3, 5)))
    with pytest.raises(PreprocessingError):
        pca_fit(X[:1])
    with pytest.raises(PreprocessingError):
        pca_fit(np.zeros((30, 4)))
    with pytest.raises(PreprocessingError):
        pca_fit(X, variance_cutoff=1.0)
    with pytest.raises(PreprocessingError):
        pca_fit(X, variance_cutoff=-0.1)


def test_noise_lands_mostly_in_discarded_directions():
    """The low-variance tail should absorb uncorrelated channel noise."""
    rng = np.random.default_rng(11)
    t = rng.normal(size=(500, 2))
    mix = np.array([[1.0, 0.3, -0.5, 0.8, 0.1],
                    [0.2, -0.9, 0.4, 0.0, 0.7]])
    clean = t @ mix
    noisy = clean + 0.03 * rng.normal(size=clean.shape)
    model = pca_fit(noisy, variance_cutoff=0.02)
    assert model.retained_count == 2
    x_hat, _ = pca_residual(model, noisy)
    err_before = np.linalg.norm(noisy - clean)
    err_after = np.linalg.norm(x_hat - clean)
    assert err_after < err_before

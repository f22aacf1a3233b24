"""Correlation estimators: Pearson, polychoric, and their helpers."""

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from digestlab import (CorrelationMatrix, GeneratorSpec, ResponseMatrix,
                       bvn_cdf, generate_likert, pearson, polychoric, smc)
from digestlab.corr import polychoric_pair
from digestlab.synth import skewed_thresholds

# Reference CDF values from an independent implementation (numerical
# integration via scipy.stats.multivariate_normal), frozen.
BVN_CASES = [
    (0.5, -0.3, 0.4, 0.3171269282861651),
    (1.2, 0.8, -0.6, 0.674753208878766),
    (0.0, 0.7, 0.3, 0.4166773938486148),
    (0.0, 0.0, 0.5, 0.3333333333333333),
    (-1.5, 2.0, 0.9, 0.066807201268858),
]


def likert_matrix(values, ids=None):
    values = np.asarray(values, dtype=float)
    ids = ids or [f"c{j}" for j in range(values.shape[1])]
    return ResponseMatrix(item_ids=list(ids), values=values)


def test_correlation_matrix_validation():
    with pytest.raises(ValueError, match="square"):
        CorrelationMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError, match="unit diagonal"):
        CorrelationMatrix(np.array([[1.0, 0.2], [0.2, 0.9]]))
    with pytest.raises(ValueError, match="symmetric"):
        CorrelationMatrix(np.array([[1.0, 0.2], [0.3, 1.0]]))
    with pytest.raises(ValueError, match=r"\[-1, 1\]"):
        CorrelationMatrix(np.array([[1.0, 1.2], [1.2, 1.0]]))


@pytest.mark.parametrize("h,k,rho,expected", BVN_CASES)
def test_bvn_cdf_frozen_values(h, k, rho, expected):
    assert bvn_cdf(h, k, rho) == pytest.approx(expected, abs=1e-7)


def test_bvn_cdf_against_independent_oracle():
    rng = np.random.default_rng(5)
    for rho in (-0.95, -0.4, 0.0, 0.25, 0.8, 0.999):
        pts = np.concatenate([rng.normal(size=(25, 2)),
                              [[0.0, 0.6], [0.6, 0.0], [0.0, 0.0],
                               [0.0, -0.6], [-0.6, 0.0]]])
        ref = multivariate_normal(mean=[0, 0],
                                  cov=[[1, rho], [rho, 1]]).cdf(pts)
        ours = bvn_cdf(pts[:, 0], pts[:, 1], rho)
        assert np.max(np.abs(ours - ref)) < 1e-7


def test_bvn_cdf_limits_and_degenerate_rho():
    assert bvn_cdf(np.inf, np.inf, 0.3) == 1.0
    assert bvn_cdf(-np.inf, 1.0, 0.3) == 0.0
    assert bvn_cdf(np.inf, 0.0, -0.2) == pytest.approx(0.5, abs=1e-15)
    # rho = +-1 collapse onto one dimension
    assert bvn_cdf(0.3, 0.8, 1.0) == pytest.approx(
        bvn_cdf(0.3, np.inf, 0.0), abs=1e-15)
    assert bvn_cdf(0.0, 0.0, -1.0) == pytest.approx(0.0, abs=1e-15)


def test_pearson_hand_case():
    rm = likert_matrix([[1, 1], [2, 3], [3, 2], [4, 4]])
    assert pearson(rm).values[0, 1] == 0.8


def test_pearson_perfect_linear_relation():
    rm = likert_matrix([[1, 2], [2, 4], [3, 6]])
    assert pearson(rm).values[0, 1] == pytest.approx(1.0, abs=1e-15)


def test_pearson_constant_column_rejected():
    rm = likert_matrix([[2, 1], [2, 3], [2, 2]])
    with pytest.raises(ValueError, match="constant column"):
        pearson(rm)


def test_pearson_insufficient_overlap_rejected():
    values = np.array([[1, np.nan], [2, 2], [3, 3], [np.nan, 4]])
    with pytest.raises(ValueError, match="jointly observed"):
        pearson(likert_matrix(values))


def test_pearson_pairwise_deletion_matches_manual():
    values = np.array([
        [1, 1, 2],
        [2, 3, np.nan],
        [3, 2, 4],
        [4, 4, 1],
        [np.nan, 5, 3],
        [5, np.nan, 5],
    ])
    R = pearson(likert_matrix(values)).values

    def manual(i, j):
        x, y = values[:, i], values[:, j]
        m = np.isfinite(x) & np.isfinite(y)
        x, y = x[m] - x[m].mean(), y[m] - y[m].mean()
        return float(x @ y) / np.sqrt(float(x @ x) * float(y @ y))

    for i in range(3):
        for j in range(i + 1, 3):
            assert R[i, j] == pytest.approx(manual(i, j), abs=1e-15)


def test_pearson_invariant_under_positive_affine_recoding():
    rng = np.random.default_rng(3)
    base = rng.integers(1, 4, size=(40, 2)).astype(float)
    recoded = base.copy()
    recoded[:, 1] = 2 * base[:, 1] - 1  # {1,2,3} -> {1,3,5}
    r0 = pearson(likert_matrix(base)).values[0, 1]
    r1 = pearson(likert_matrix(recoded)).values[0, 1]
    assert r0 == pytest.approx(r1, abs=1e-12)


def test_polychoric_identical_columns_clamped():
    col = np.tile(np.arange(1, 7), 10).astype(float)
    rm = likert_matrix(np.column_stack([col, col]))
    assert polychoric(rm).values[0, 1] == 0.999


def test_polychoric_recovers_generating_rho():
    lam = np.sqrt(0.5)  # implied continuous correlation 0.5
    spec = GeneratorSpec(general=np.array([lam, lam]), group=np.zeros((2, 0)),
                         n=2000, seed=7)
    est = polychoric(generate_likert(spec)).values[0, 1]
    assert est == pytest.approx(0.5, abs=0.05)


def test_polychoric_near_zero_under_independence():
    spec = GeneratorSpec(general=np.zeros(2), group=np.zeros((2, 0)),
                         n=2000, seed=11)
    est = polychoric(generate_likert(spec)).values[0, 1]
    assert abs(est) < 0.06


def test_polychoric_recovers_under_skewed_thresholds():
    lam = np.sqrt(0.5)
    spec = GeneratorSpec(general=np.array([lam, lam]), group=np.zeros((2, 0)),
                         n=2000, seed=13, thresholds=skewed_thresholds())
    est = polychoric(generate_likert(spec)).values[0, 1]
    assert est == pytest.approx(0.5, abs=0.05)


def test_polychoric_single_category_rejected():
    rm = likert_matrix(np.column_stack([np.full(10, 4.0),
                                        np.tile([1.0, 2.0], 5)]))
    with pytest.raises(ValueError, match="2 observed categories"):
        polychoric(rm)


def test_polychoric_pair_is_symmetric():
    rng = np.random.default_rng(19)
    x = rng.integers(1, 7, size=200).astype(float)
    y = np.clip(x + rng.integers(-2, 3, size=200), 1, 6).astype(float)
    assert polychoric_pair(x, y) == pytest.approx(polychoric_pair(y, x),
                                                  abs=1e-9)


def test_estimators_produce_valid_matrices():
    rng = np.random.default_rng(23)
    values = rng.integers(1, 7, size=(250, 4)).astype(float)
    for estimate in (pearson, polychoric):
        R = estimate(likert_matrix(values)).values
        assert np.allclose(R, R.T)
        assert np.allclose(np.diag(R), 1.0)
        assert np.max(np.abs(R)) <= 1.0


def test_smc_identity_is_zero():
    assert np.all(smc(CorrelationMatrix(np.eye(4))) == 0.0)


def test_smc_two_variable_closed_form():
    R = CorrelationMatrix(np.array([[1.0, 0.6], [0.6, 1.0]]))
    assert smc(R) == pytest.approx([0.36, 0.36], abs=1e-12)


def test_smc_three_variable_equicorrelated():
    # 1 - (1 - r)(1 + 2r)/(1 + r) = 1/3 at r = 0.5
    R = CorrelationMatrix(np.full((3, 3), 0.5) + 0.5 * np.eye(3))
    assert smc(R) == pytest.approx([1 / 3] * 3, abs=1e-12)


def test_smc_bounded_on_random_matrices():
    rng = np.random.default_rng(29)
    for _ in range(20):
        A = rng.normal(size=(8, 5))
        S = A @ A.T + np.eye(8)
        d = np.sqrt(np.diag(S))
        R = CorrelationMatrix(S / np.outer(d, d))
        values = smc(R)
        assert np.all(values >= 0.0) and np.all(values < 1.0)

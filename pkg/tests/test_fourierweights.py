import itertools
import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial
from numpy.polynomial import hermite_e as herm_e
from scipy.stats import multivariate_normal

from rggdetect.fourierweights import (
    EDGE,
    FOUR_CYCLE,
    TWO_PATH,
    PatternGraph,
    _normal_rectangle,
    conditional_star_sw_exact2,
    conditional_star_sw_mc,
    enumerate_covering_tuples,
    gaussian_density_derivative,
    hermite,
    leading_term_lambda,
    leaf_zero_check,
    unconditional_star_sw_mc,
    verify_remainder_scaling,
)
from rggdetect.gaussmodel import calibrate
from rggdetect.rng import substream


# ---------------------------------------------------------------- hermite

# probabilists' Hermite coefficient tables, constant term first
_HERMITE_COEFS = {
    0: [1],
    1: [0, 1],
    2: [-1, 0, 1],
    3: [0, -3, 0, 1],
    4: [3, 0, -6, 0, 1],
    5: [0, 15, 0, -10, 0, 1],
    6: [-15, 0, 45, 0, -15, 0, 1],
    7: [0, -105, 0, 105, 0, -21, 0, 1],
    8: [105, 0, -420, 0, 210, 0, -28, 0, 1],
}


def test_hermite_hand_value():
    assert hermite(2, 1.5) == pytest.approx(1.25)


@pytest.mark.parametrize("k", sorted(_HERMITE_COEFS))
def test_hermite_coefficient_tables(k):
    xs = np.linspace(-3.0, 3.0, 13)
    expected = Polynomial(_HERMITE_COEFS[k])(xs)
    assert np.allclose(hermite(k, xs), expected, rtol=1e-12, atol=1e-12)


def test_hermite_matches_numpy_hermite_e():
    xs = np.linspace(-2.5, 2.5, 9)
    for k in (10, 25, 64):
        basis = np.zeros(k + 1)
        basis[k] = 1.0
        assert np.allclose(hermite(k, xs), herm_e.hermeval(xs, basis), rtol=1e-10)


def test_hermite_degree_cap():
    hermite(64, 0.3)
    with pytest.raises(ValueError):
        hermite(65, 0.3)
    with pytest.raises(ValueError):
        hermite(-1, 0.3)


# ---------------------------------------------------------------- density derivatives

def _phi_der_poly(j: int, x: float, sigma: float) -> float:
    """Independent route: differentiate the density directly.

    phi^(j) = P_j(x) phi(x) with P_0 = 1, P_{j+1} = P_j' - (x / sigma^2) P_j.
    """
    poly = Polynomial([1.0])
    ramp = Polynomial([0.0, 1.0])
    for _ in range(j):
        poly = poly.deriv() - ramp / sigma**2 * poly
    return float(poly(x) * math.exp(-x * x / (2 * sigma * sigma)) / (sigma * math.sqrt(2 * math.pi)))


@pytest.mark.parametrize("j", [0, 1, 2, 3, 5, 7])
def test_density_derivative_matches_polynomial_recurrence(j):
    for x in (-1.3, 0.0, 0.7, 2.1):
        for sigma in (1.0, 0.9, 1.7):
            assert gaussian_density_derivative(j, x, sigma) == pytest.approx(
                _phi_der_poly(j, x, sigma), rel=1e-10, abs=1e-15
            )


def test_density_derivative_finite_difference():
    # central difference of the (s-1)-th derivative reproduces the s-th
    s, sigma, x, h = 3, 0.9, 0.7, 1e-4
    fd = (
        gaussian_density_derivative(s - 1, x + h, sigma)
        - gaussian_density_derivative(s - 1, x - h, sigma)
    ) / (2 * h)
    assert gaussian_density_derivative(s, x, sigma) == pytest.approx(fd, rel=1e-5)


def test_density_derivative_base_case():
    x, sigma = 0.4, 1.3
    phi = math.exp(-x * x / (2 * sigma**2)) / (sigma * math.sqrt(2 * math.pi))
    assert gaussian_density_derivative(0, x, sigma) == pytest.approx(phi, rel=1e-14)
    with pytest.raises(ValueError):
        gaussian_density_derivative(1, 0.0, 0.0)


# ---------------------------------------------------------------- covering tuples

def _covering_tuples_brute(k: int):
    ell = (k + 1) // 2
    pairs = [(a, b) for a in range(k) for b in range(k)]
    out = []
    for tup in itertools.product(pairs, repeat=ell):
        support = set()
        for a, b in tup:
            support |= {a, b}
        if support == set(range(k)):
            out.append(tup)
    return out


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_covering_tuples_match_brute_force(k):
    cts = enumerate_covering_tuples(k)
    brute = _covering_tuples_brute(k)
    assert set(cts.tuples) == set(brute)
    assert len(cts.tuples) == len(brute)
    for tup, mult in zip(cts.tuples, cts.multiplicities):
        assert sum(mult) == 2 * cts.ell
        for i, s in enumerate(mult):
            assert s == sum((a == i) + (b == i) for a, b in tup)


def test_covering_tuple_counts():
    assert len(enumerate_covering_tuples(1).tuples) == 1
    assert len(enumerate_covering_tuples(2).tuples) == 2
    assert len(enumerate_covering_tuples(3).tuples) == 36
    assert len(enumerate_covering_tuples(4).tuples) == 24
    assert len(enumerate_covering_tuples(8).tuples) == 40320


def test_covering_tuples_cap():
    with pytest.raises(ValueError):
        enumerate_covering_tuples(9)
    with pytest.raises(ValueError):
        enumerate_covering_tuples(0)


# ---------------------------------------------------------------- leading term

def _lambda_loops(x: np.ndarray, cal) -> float:
    """Slow oracle: explicit loops and direct density differentiation."""
    k, d = x.shape
    sigma = cal.sigma_hat
    gram = x @ x.T / d
    cen = gram - sigma * sigma * np.eye(k)
    cts = enumerate_covering_tuples(k)
    total = 0.0
    for tup, mult in zip(cts.tuples, cts.multiplicities):
        term = 1.0
        for a, b in tup:
            term *= cen[a, b]
        for s in mult:
            term *= _phi_der_poly(s - 1, cal.tau, sigma)
        total += term
    return total / (2.0**cts.ell * math.factorial(cts.ell))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_leading_term_matches_loop_oracle(k):
    cal = calibrate(0.3, 24)
    rng = substream(101, k)
    for _ in range(5):
        x = rng.standard_normal((k, 24))
        assert leading_term_lambda(x, cal) == pytest.approx(
            _lambda_loops(x, cal), rel=1e-9, abs=1e-12
        )


def test_leading_term_size_one_closed_form():
    # single vertex: (1/2) (|x|^2/d - sigma^2) phi_sigma'(tau); pins the sign
    cal = calibrate(0.3, 16)
    rng = substream(103, 0)
    x = rng.standard_normal((1, 16))
    dev = float(x[0] @ x[0]) / 16 - cal.sigma_hat**2
    expected = 0.5 * dev * gaussian_density_derivative(1, cal.tau, cal.sigma_hat)
    assert leading_term_lambda(x, cal) == pytest.approx(expected, rel=1e-12)
    # tau < 0 at p < 1/2 makes phi' positive there: excess norm pushes up
    if dev > 0:
        assert leading_term_lambda(x, cal) > 0


def test_leading_term_size_two_closed_form():
    cal = calibrate(0.4, 32)
    rng = substream(107, 0)
    x = rng.standard_normal((2, 32))
    g12 = float(x[0] @ x[1]) / 32
    phi = gaussian_density_derivative(0, cal.tau, cal.sigma_hat)
    assert leading_term_lambda(x, cal) == pytest.approx(g12 * phi * phi, rel=1e-12)


def test_leading_term_vanishes_on_exact_reference():
    # rows orthogonal with squared norm d sigma^2 zero out every factor
    cal = calibrate(0.25, 12)
    x = np.zeros((3, 12))
    for i in range(3):
        x[i, i] = cal.sigma_hat * math.sqrt(12)
    assert leading_term_lambda(x, cal) == pytest.approx(0.0, abs=1e-15)


def test_leading_term_rotation_invariant():
    cal = calibrate(0.3, 20)
    rng = substream(109, 0)
    x = rng.standard_normal((4, 20))
    q, _ = np.linalg.qr(rng.standard_normal((20, 20)))
    assert leading_term_lambda(x @ q, cal) == pytest.approx(
        leading_term_lambda(x, cal), rel=1e-10
    )


def test_leading_term_validation():
    cal = calibrate(0.3, 8)
    with pytest.raises(ValueError):
        leading_term_lambda(np.zeros((2, 9)), cal)
    with pytest.raises(ValueError):
        leading_term_lambda(np.zeros(8), cal)


# ---------------------------------------------------------------- bivariate rectangle

def test_normal_rectangle_matches_scipy():
    for b1 in (-2.0, -0.3, 0.0, 1.1, 2.5):
        for b2 in (-1.5, 0.0, 0.8):
            for rho in (-0.95, -0.4, 0.0, 0.3, 0.99):
                ref = multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]]).cdf([b1, b2])
                assert _normal_rectangle(b1, b2, rho) == pytest.approx(ref, abs=5e-9)


def test_normal_rectangle_degenerate_correlations():
    from scipy.special import ndtr

    assert _normal_rectangle(0.5, 1.2, 1.0) == pytest.approx(float(ndtr(0.5)))
    assert _normal_rectangle(0.5, -0.5, -1.0) == pytest.approx(0.0)
    assert _normal_rectangle(1.0, 0.5, -1.0) == pytest.approx(
        float(ndtr(1.0) + ndtr(0.5) - 1.0)
    )
    with pytest.raises(ValueError):
        _normal_rectangle(0.0, 0.0, 1.5)


# ---------------------------------------------------------------- conditional star

def test_exact2_comonotone_and_antimonotone():
    d = 10
    cal = calibrate(0.5, d)
    x = np.zeros((2, d))
    x[0, 0] = x[1, 0] = math.sqrt(d)  # identical unit-variance rows
    assert conditional_star_sw_exact2(x, cal).value == pytest.approx(0.25, abs=1e-9)
    x[1, 0] = -math.sqrt(d)
    assert conditional_star_sw_exact2(x, cal).value == pytest.approx(-0.25, abs=1e-9)


def test_exact2_independent_rows_factorize():
    from scipy.special import ndtr

    d = 10
    cal = calibrate(0.3, d)
    x = np.zeros((2, d))
    x[0, 0] = math.sqrt(d) * 1.1
    x[1, 1] = math.sqrt(d) * 0.9
    b1 = cal.tau / 1.1
    b2 = cal.tau / 0.9
    expected = (float(ndtr(b1)) - 0.3) * (float(ndtr(b2)) - 0.3)
    assert conditional_star_sw_exact2(x, cal).value == pytest.approx(expected, abs=1e-9)


def test_exact2_rejects_degenerate_rows():
    cal = calibrate(0.3, 6)
    x = np.zeros((2, 6))
    x[0, 0] = 1.0  # second row identically zero
    with pytest.raises(ValueError, match="degenerate"):
        conditional_star_sw_exact2(x, cal)
    with pytest.raises(ValueError):
        conditional_star_sw_exact2(np.zeros((3, 6)), cal)


def test_mc_agrees_with_exact2():
    d = 40
    cal = calibrate(0.35, d)
    rng = substream(113, 0)
    worst = 0.0
    for _ in range(50):
        x = rng.standard_normal((2, d))
        exact = conditional_star_sw_exact2(x, cal).value
        est = conditional_star_sw_mc(x, cal, 40_000, rng)
        if est.std_error > 0:
            worst = max(worst, abs(est.value - exact) / est.std_error)
    assert worst < 3.0


def test_mc_gram_and_latent_spaces_agree():
    d = 30
    cal = calibrate(0.3, d)
    rng = substream(127, 0)
    x = rng.standard_normal((3, d))
    a = conditional_star_sw_mc(x, cal, 200_000, substream(127, 1), center_space="gram")
    b = conditional_star_sw_mc(x, cal, 200_000, substream(127, 2), center_space="latent")
    z = abs(a.value - b.value) / math.hypot(a.std_error, b.std_error)
    assert z < 4.0


def test_mc_validation():
    cal = calibrate(0.3, 8)
    x = np.ones((2, 8))
    with pytest.raises(ValueError, match="samples"):
        conditional_star_sw_mc(x, cal, 999, substream(0, 0))
    with pytest.raises(ValueError, match="center_space"):
        conditional_star_sw_mc(x, cal, 2000, substream(0, 0), center_space="exact")
    with pytest.raises(ValueError):
        conditional_star_sw_mc(np.ones((2, 9)), cal, 2000, substream(0, 0))


# ---------------------------------------------------------------- remainder scaling

def test_remainder_scaling_size_two_quick():
    report = verify_remainder_scaling(
        alpha_size=2, d_grid=(64, 256), rho=3.0, trials=8, rng=substream(131, 0)
    )
    assert report.estimator == "exact2"
    assert report.ell == 1
    assert report.residual_mc_se == (0.0, 0.0)
    assert not report.inconclusive
    assert len(report.shrink_factors) == 1
    # residual is O(1/d): a 4x dimension step should shrink it well past 2x
    assert report.shrink_factors[0] > 2.0
    assert report.passed
    parsed = __import__("json").loads(report.to_json())
    assert parsed["alpha_size"] == 2


def test_remainder_scaling_validation():
    with pytest.raises(ValueError):
        verify_remainder_scaling(2, (64,), 3.0, 4, substream(0, 0))
    with pytest.raises(ValueError):
        verify_remainder_scaling(9, (64, 128), 3.0, 4, substream(0, 0))
    with pytest.raises(ValueError):
        verify_remainder_scaling(2, (64, 128), 3.0, 1, substream(0, 0))


# ---------------------------------------------------------------- unconditional star

def test_star_is_exactly_zero_at_half():
    for d in (10, 100):
        est = unconditional_star_sw_mc(2, 0.5, d, 10_000, substream(137, 0))
        assert est.value == 0.0
        assert est.std_error == 0.0


def test_star_leaf_spaces_agree():
    d, p, trials = 30, 0.3, 400_000
    a = unconditional_star_sw_mc(2, p, d, trials, substream(139, 0), leaf_space="scale")
    b = unconditional_star_sw_mc(2, p, d, trials, substream(139, 1), leaf_space="bernoulli")
    c = unconditional_star_sw_mc(2, p, d, trials, substream(139, 2), leaf_space="latent")
    for other in (b, c):
        z = abs(a.value - other.value) / math.hypot(a.std_error, other.std_error)
        assert z < 4.0


def test_star_decays_in_dimension():
    a = unconditional_star_sw_mc(2, 0.3, 100, 200_000, substream(149, 0))
    b = unconditional_star_sw_mc(2, 0.3, 400, 200_000, substream(149, 1))
    assert abs(b.value) < abs(a.value)
    assert abs(a.value) > 10 * a.std_error  # resolvable signal at d=100


def test_star_shrinks_toward_degenerate_density():
    a = unconditional_star_sw_mc(2, 0.9, 50, 400_000, substream(151, 0))
    b = unconditional_star_sw_mc(2, 0.99, 50, 400_000, substream(151, 1))
    assert abs(b.value) < abs(a.value)


def test_star_validation():
    with pytest.raises(ValueError):
        unconditional_star_sw_mc(1, 0.3, 10, 1000, substream(0, 0))
    with pytest.raises(ValueError):
        unconditional_star_sw_mc(2, 0.3, 10, 1000, substream(0, 0), leaf_space="exact")


# ---------------------------------------------------------------- leaf patterns

def test_pattern_graph_properties():
    assert EDGE.has_leaf and EDGE.rows == 1 and EDGE.cols == 1
    assert TWO_PATH.has_leaf and TWO_PATH.cols == 2
    assert not FOUR_CYCLE.has_leaf
    assert FOUR_CYCLE.rows == FOUR_CYCLE.cols == 2
    with pytest.raises(ValueError):
        PatternGraph(edges=())
    with pytest.raises(ValueError):
        PatternGraph(edges=((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        PatternGraph(edges=((-1, 0),))


def test_leaf_patterns_center_at_zero():
    for pattern in (EDGE, TWO_PATH):
        report = leaf_zero_check(pattern, d=5, trials=200_000, rng=substream(157, 0))
        assert report.has_leaf
        assert abs(report.zscore) < 4.0


def test_four_cycle_is_far_from_zero():
    report = leaf_zero_check(FOUR_CYCLE, d=5, trials=200_000, rng=substream(163, 0))
    assert not report.has_leaf
    assert report.zscore > 6.0


def test_leaf_zero_conditioned_variant():
    report = leaf_zero_check(
        TWO_PATH, d=20, trials=3000, rng=substream(167, 0), conditioned=True, rho=3.0
    )
    assert report.conditioned
    assert abs(report.zscore) < 4.0
    with pytest.raises(ValueError, match="rho"):
        leaf_zero_check(TWO_PATH, d=20, trials=100, rng=substream(0, 0), conditioned=True)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2 as chi2_dist

from rggdetect.divergenceoracle import (
    OutcomeDistribution,
    chi2,
    chi2_direct_mc,
    chi2_via_signed_weights,
    known_vs_unknown_contrast,
    matrix_from_index,
    model_distribution_mc,
    null_distribution,
    outcome_index,
    tv,
)
from rggdetect.gaussmodel import ModelParams, calibrate
from rggdetect.rng import substream
from rggdetect.signedstats import signed_weight_of_pattern

# four-cycle signed weight at p = 1/2, d = 3: E[arcsin^2(rho)] / (4 pi^2) with
# rho uniform on the 2-sphere gives (pi^2/4 - 2) / (4 pi^2)
_C4_WEIGHT_D3 = (math.pi**2 / 4.0 - 2.0) / (4.0 * math.pi**2)


# ---------------------------------------------------------------- packing

def test_outcome_index_round_trip():
    m = np.array([[1, 0, 1], [0, 0, 1]], dtype=np.uint8)
    idx = outcome_index(m)
    assert np.array_equal(matrix_from_index(idx, 2, 3), m)
    assert outcome_index(np.zeros((2, 2), dtype=np.uint8)) == 0
    assert outcome_index(np.ones((2, 2), dtype=np.uint8)) == 15
    # row-major, bit i*m+j
    e = np.zeros((2, 3), dtype=np.uint8)
    e[1, 0] = 1
    assert outcome_index(e) == 1 << 3


@given(st.integers(0, 2**6 - 1))
def test_matrix_from_index_inverts(idx):
    assert outcome_index(matrix_from_index(idx, 2, 3)) == idx


def test_packing_validation():
    with pytest.raises(ValueError):
        outcome_index(np.array([[2, 0]]))
    with pytest.raises(ValueError):
        matrix_from_index(16, 2, 2)


# ---------------------------------------------------------------- null law

def test_null_distribution_exact_entries():
    dist = null_distribution(2, 2, 0.3)
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert dist.probs[0] == pytest.approx(0.7**4)
    assert dist.probs[15] == pytest.approx(0.3**4)
    assert dist.probs[5] == pytest.approx(0.3**2 * 0.7**2)
    uniform = null_distribution(2, 2, 0.5)
    assert np.allclose(uniform.probs, 1.0 / 16)


def test_null_distribution_validation():
    with pytest.raises(ValueError):
        null_distribution(4, 4, 0.5)  # 16 cells beyond the exact-enumeration cap
    with pytest.raises(ValueError):
        null_distribution(2, 2, 0.0)


def test_outcome_distribution_validation():
    with pytest.raises(ValueError):
        OutcomeDistribution(n=1, m=1, probs=np.array([0.5, 0.6]), provenance="x")
    with pytest.raises(ValueError):
        OutcomeDistribution(n=1, m=1, probs=np.array([1.5, -0.5]), provenance="x")
    with pytest.raises(ValueError):
        OutcomeDistribution(n=1, m=2, probs=np.array([1.0]), provenance="x")


# ---------------------------------------------------------------- divergences

def _dist(n, m, probs):
    return OutcomeDistribution(n=n, m=m, probs=np.asarray(probs, float), provenance="test")


def test_tv_and_chi2_hand_case():
    a = _dist(1, 1, [0.6, 0.4])
    b = _dist(1, 1, [0.5, 0.5])
    assert tv(a, b) == pytest.approx(0.1)
    assert chi2(a, b) == pytest.approx(0.04)
    assert tv(a, a) == 0.0
    assert chi2(a, a) == 0.0


def test_chi2_needs_dominance():
    a = _dist(1, 1, [1.0, 0.0])
    b = _dist(1, 1, [0.0, 1.0])
    with pytest.raises(ValueError):
        chi2(a, b)
    # but zero-outside-support is fine
    assert chi2(b, _dist(1, 1, [0.5, 0.5])) == pytest.approx(1.0)


def test_divergences_reject_shape_mismatch():
    a = _dist(1, 2, [0.25] * 4)
    b = _dist(2, 1, [0.25] * 4)
    with pytest.raises(ValueError):
        tv(a, b)


@given(st.lists(st.floats(0.01, 10.0), min_size=4, max_size=4),
       st.lists(st.floats(0.01, 10.0), min_size=4, max_size=4))
@settings(max_examples=50, deadline=None)
def test_tv_chi2_pinsker_style_inequality(wa, wb):
    # 2 TV^2 <= chi-square for any pair with full support
    a = _dist(1, 2, np.array(wa) / sum(wa))
    b = _dist(1, 2, np.array(wb) / sum(wb))
    assert 2.0 * tv(a, b) ** 2 <= chi2(a, b) + 1e-12


def test_divergences_invariant_under_relabeling():
    # swapping the two rows permutes outcomes; both laws transform together
    params = ModelParams(n=2, m=2, p=0.3, q=0.6, d=4)
    cal = calibrate(0.3, 4)
    a = model_distribution_mc(params, cal, "unknown-mask", 50_000, substream(211, 0))
    null = null_distribution(2, 2, 0.3)
    perm = np.array(
        [outcome_index(matrix_from_index(i, 2, 2)[::-1]) for i in range(16)]
    )
    a_perm = _dist(2, 2, a.probs[np.argsort(perm)])
    assert tv(a_perm, null) == pytest.approx(tv(a, null), abs=1e-12)
    assert chi2(a_perm, null) == pytest.approx(chi2(a, null), abs=1e-12)


# ---------------------------------------------------------------- model MC law

def test_model_distribution_q0_is_null():
    params = ModelParams(n=2, m=2, p=0.3, q=0.0, d=4)
    cal = calibrate(0.3, 4)
    trials = 200_000
    dist = model_distribution_mc(params, cal, "unknown-mask", trials, substream(223, 0))
    counts = np.rint(dist.probs * trials)
    expected = null_distribution(2, 2, 0.3).probs * trials
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < chi2_dist.ppf(1.0 - 1e-3, 15)


def test_model_distribution_mask_models_share_one_law():
    params = ModelParams(n=2, m=2, p=0.4, q=0.5, d=6)
    cal = calibrate(0.4, 6)
    a = model_distribution_mc(params, cal, "unknown-mask", 200_000, substream(227, 0))
    b = model_distribution_mc(params, cal, "known-mask-averaged", 200_000, substream(227, 1))
    assert tv(a, b) < 0.01


def test_pure_rgg_four_cycle_weight_matches_closed_form():
    params = ModelParams(n=2, m=2, p=0.5, q=1.0, d=3)
    cal = calibrate(0.5, 3)
    trials = 400_000
    dist = model_distribution_mc(params, cal, "pure-rgg", trials, substream(229, 0))
    edges = ((0, 0), (0, 1), (1, 0), (1, 1))
    weights = np.array(
        [signed_weight_of_pattern(matrix_from_index(i, 2, 2), 0.5, edges) for i in range(16)]
    )
    mean = float(dist.probs @ weights)
    second = float(dist.probs @ weights**2)
    se = math.sqrt(max(second - mean * mean, 0.0) / trials)
    assert abs(mean - _C4_WEIGHT_D3) < 4.0 * se


def test_model_distribution_validation():
    params = ModelParams(n=2, m=2, p=0.3, q=0.5, d=4)
    cal = calibrate(0.3, 4)
    with pytest.raises(ValueError):
        model_distribution_mc(params, cal, "geometric", 100, substream(0, 0))
    with pytest.raises(ValueError):
        model_distribution_mc(params, cal, "pure-rgg", 0, substream(0, 0))
    big = ModelParams(n=4, m=4, p=0.3, q=0.5, d=4)
    with pytest.raises(ValueError):
        model_distribution_mc(big, calibrate(0.3, 4), "pure-rgg", 100, substream(0, 0))


# ---------------------------------------------------------------- direct chi-square

def test_direct_chi2_is_zero_under_null_config():
    # q = 0 leaves only Bern(p): the debiased estimator must center at zero
    params = ModelParams(n=2, m=2, p=0.3, q=0.0, d=4)
    cal = calibrate(0.3, 4)
    report = chi2_direct_mc(params, cal, "unknown", 200_000, substream(233, 0))
    assert abs(report.value) < 4.0 * report.std_error + 1e-6


def test_direct_chi2_matches_closed_form_at_q1():
    # only the four-cycle pattern survives at p = 1/2, q = 1
    params = ModelParams(n=2, m=2, p=0.5, q=1.0, d=3)
    cal = calibrate(0.5, 3)
    closed = 256.0 * _C4_WEIGHT_D3**2
    report = chi2_direct_mc(params, cal, "unknown", 400_000, substream(239, 0))
    assert abs(report.value - closed) < 4.0 * report.std_error


def test_direct_chi2_validation():
    params = ModelParams(n=2, m=2, p=0.3, q=0.5, d=4)
    cal = calibrate(0.3, 4)
    with pytest.raises(ValueError):
        chi2_direct_mc(params, cal, "averaged", 1000, substream(0, 0))
    with pytest.raises(ValueError):
        chi2_direct_mc(params, cal, "unknown", 1000, substream(0, 0), batches=1)
    with pytest.raises(ValueError):
        chi2_direct_mc(params, cal, "unknown", 10, substream(0, 0), batches=20)
    wide = ModelParams(n=2, m=5, p=0.3, q=0.5, d=4)
    with pytest.raises(ValueError):
        chi2_direct_mc(wide, calibrate(0.3, 4), "unknown", 1000, substream(0, 0))


# ---------------------------------------------------------------- signed-weight route

def test_signed_weight_chi2_matches_closed_form():
    params = ModelParams(n=2, m=2, p=0.5, q=1.0, d=3)
    cal = calibrate(0.5, 3)
    closed = 256.0 * _C4_WEIGHT_D3**2
    report = chi2_via_signed_weights(params, cal, "unknown", 200_000, substream(241, 0))
    assert abs(report.value - closed) < 4.0 * report.std_error
    # the full 2x2 pattern carries essentially all of the total
    full = next(t for t in report.terms if t.bitmask == 15)
    assert full.size == 4
    assert abs(full.term) >= max(abs(t.term) for t in report.terms)
    assert full.mean_weight == pytest.approx(_C4_WEIGHT_D3, abs=4 * full.std_error)


def test_signed_weight_chi2_known_mode_scaling():
    # at p = 1/2 only the size-4 pattern contributes, so the known-mode total
    # is q^-4 times the unknown-mode total
    params = ModelParams(n=2, m=2, p=0.5, q=0.5, d=3)
    cal = calibrate(0.5, 3)
    unknown = chi2_via_signed_weights(params, cal, "unknown", 200_000, substream(251, 0))
    known = chi2_via_signed_weights(params, cal, "known", 200_000, substream(251, 0))
    closed_unknown = 0.5**8 * 256.0 * _C4_WEIGHT_D3**2
    closed_known = 0.5**4 * 256.0 * _C4_WEIGHT_D3**2
    assert abs(unknown.value - closed_unknown) < 4.0 * unknown.std_error
    assert abs(known.value - closed_known) < 4.0 * known.std_error


def test_signed_weight_chi2_single_cell_is_zero():
    # 1x1: the only pattern is the edge, whose signed weight is F(tau) - p = 0
    params = ModelParams(n=1, m=1, p=0.3, q=1.0, d=5)
    cal = calibrate(0.3, 5)
    report = chi2_via_signed_weights(params, cal, "unknown", 200_000, substream(257, 0))
    assert abs(report.value) < 4.0 * report.std_error + 1e-8
    direct = chi2_direct_mc(params, cal, "unknown", 200_000, substream(263, 0))
    assert abs(direct.value) < 4.0 * direct.std_error + 1e-6


def test_signed_weight_chi2_validation():
    params = ModelParams(n=2, m=2, p=0.5, q=1.0, d=3)
    cal = calibrate(0.5, 3)
    with pytest.raises(ValueError, match="trials"):
        chi2_via_signed_weights(params, cal, "unknown", 99_999, substream(0, 0))
    wide = ModelParams(n=2, m=5, p=0.3, q=0.5, d=4)
    with pytest.raises(ValueError):
        chi2_via_signed_weights(wide, calibrate(0.3, 4), "unknown", 200_000, substream(0, 0))


# ---------------------------------------------------------------- contrast

def test_contrast_ratios_exact_at_dyadic_q():
    params = ModelParams(n=2, m=2, p=0.5, q=0.5, d=3)
    cal = calibrate(0.5, 3)
    report = known_vs_unknown_contrast(params, cal, 100_000, substream(269, 0))
    assert report.known_total >= report.unknown_total
    for ratio, expected, size in zip(
        report.ratios, report.expected_ratios, report.pattern_sizes
    ):
        assert expected == 2.0**size
        if ratio is not None:
            assert ratio == expected  # dyadic q: exact in floating point


def test_contrast_trivial_at_full_mask():
    params = ModelParams(n=2, m=2, p=0.5, q=1.0, d=3)
    cal = calibrate(0.5, 3)
    report = known_vs_unknown_contrast(params, cal, 100_000, substream(271, 0))
    assert report.known_total == pytest.approx(report.unknown_total, rel=1e-12)
    assert all(r == 1.0 for r in report.ratios if r is not None)

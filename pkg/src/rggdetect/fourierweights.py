"""Signed pattern weights and their small-correlation expansion.

The signed weight of a pattern is the product of centered edge indicators
(1(z_e <= tau) - p) with z_e the normalized latent inner products. For a star
whose outer vertices carry fixed latents X (rows of an |alpha| x d matrix) and
whose center is integrated out, the weight's conditional mean is a smooth
function of the Gram matrix G = X X^T / d, and admits a Taylor expansion
around the matched product measure N(0, sigma_hat^2 I).

The leading term of that expansion has order ell = ceil(|alpha| / 2): it sums,
over ordered ell-tuples of ordered index pairs that jointly cover alpha, the
product of centered Gram entries (G - sigma_hat^2 I) at the pair slots times
one Gaussian density derivative factor per covered index, scaled by
1 / (2^ell ell!). Each covered index i contributes the (s_i - 1)-th derivative
of the N(0, sigma_hat^2) density at tau, where s_i counts slot incidences at
index i (a diagonal pair (i, i) counts twice).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .gaussmodel import (
    Calibration,
    _gl_nodes,
    calibrate,
    sample_latents_in_s_rho,
)

__all__ = [
    "hermite",
    "gaussian_density_derivative",
    "CoveringTupleSet",
    "enumerate_covering_tuples",
    "leading_term_lambda",
    "SignedWeightEstimate",
    "conditional_star_sw_mc",
    "conditional_star_sw_exact2",
    "RemainderScalingReport",
    "verify_remainder_scaling",
    "unconditional_star_sw_mc",
    "PatternGraph",
    "EDGE",
    "TWO_PATH",
    "FOUR_CYCLE",
    "LeafZeroReport",
    "leaf_zero_check",
]

_MAX_HERMITE = 64
_MAX_ALPHA = 8


def hermite(k: int, x):
    """Probabilists' Hermite polynomial He_k(x) by the three-term recurrence.

    Supports scalar or array x; k <= 64.
    """
    k = int(k)
    if k < 0 or k > _MAX_HERMITE:
        raise ValueError(f"Hermite order must lie in [0, {_MAX_HERMITE}], got {k}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return float(prev) if prev.ndim == 0 else prev
    cur = x.copy()
    for j in range(1, k):
        prev, cur = cur, x * cur - j * prev
    return float(cur) if cur.ndim == 0 else cur


def gaussian_density_derivative(s: int, x: float, sigma: float = 1.0):
    """s-th derivative of the N(0, sigma^2) density at x; s <= 64.

    Uses the Hermite form (-1)^s sigma^{-s} He_s(x / sigma) phi_sigma(x).
    """
    s = int(s)
    if s < 0 or s > _MAX_HERMITE:
        raise ValueError(f"derivative order must lie in [0, {_MAX_HERMITE}], got {s}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x_arr = np.asarray(x, dtype=float)
    u = x_arr / sigma
    dens = np.exp(-0.5 * u * u) / (sigma * math.sqrt(2.0 * math.pi))
    value = ((-1.0) ** s) * sigma ** (-s) * hermite(s, u) * dens
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class CoveringTupleSet:
    """Ordered pair tuples covering {0..alpha_size-1} with ell slots.

    tuples[t] is an ell-tuple of (a, b) index pairs; multiplicities[t][i] is
    the incidence count s_i of index i over the slots of tuple t.
    """

    alpha_size: int
    ell: int
    tuples: tuple[tuple[tuple[int, int], ...], ...]
    multiplicities: tuple[tuple[int, ...], ...]


@lru_cache(maxsize=None)
def enumerate_covering_tuples(alpha_size: int) -> CoveringTupleSet:
    """All ordered ell-tuples of ordered pairs with support {0..alpha_size-1}.

    ell = ceil(alpha_size / 2), the minimum slot count that can cover the set.
    alpha_size is capped at 8 (40320 tuples).
    """
    k = int(alpha_size)
    if k < 1 or k > _MAX_ALPHA:
        raise ValueError(f"alpha_size must lie in [1, {_MAX_ALPHA}], got {k}")
    ell = (k + 1) // 2
    pairs = [(a, b) for a in range(k) for b in range(k)]
    out: list[tuple[tuple[int, int], ...]] = []
    acc: list[tuple[int, int]] = []

    def rec(slot: int, covered: int, n_covered: int) -> None:
        if slot == ell:
            if n_covered == k:
                out.append(tuple(acc))
            return
        room = 2 * (ell - slot - 1)
        for a, b in pairs:
            cov = covered | (1 << a) | (1 << b)
            n_cov = n_covered + bin(cov ^ covered).count("1")
            if k - n_cov <= room:
                acc.append((a, b))
                rec(slot + 1, cov, n_cov)
                acc.pop()

    rec(0, 0, 0)
    mults = []
    for tup in out:
        s = [0] * k
        for a, b in tup:
            s[a] += 1
            s[b] += 1
        mults.append(tuple(s))
    return CoveringTupleSet(
        alpha_size=k, ell=ell, tuples=tuple(out), multiplicities=tuple(mults)
    )


@lru_cache(maxsize=None)
def _tuple_arrays(alpha_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cts = enumerate_covering_tuples(alpha_size)
    arr = np.array(cts.tuples, dtype=np.intp)  # (T, ell, 2)
    mult = np.array(cts.multiplicities, dtype=np.intp)  # (T, k)
    return arr[:, :, 0], arr[:, :, 1], mult


def leading_term_lambda(
    x_alpha: np.ndarray, cal: Calibration, sigma_scaled: bool = True
) -> float:
    """Leading expansion term for the conditional star weight given latents.

    x_alpha: |alpha| x d latent matrix of the conditioned vertices,
    |alpha| <= 8. sigma_scaled=True expands around N(0, sigma_hat^2 I) (the
    matched reference, exact mean-zero factors); False uses the unit-variance
    reference for comparison.
    """
    x = np.asarray(x_alpha, dtype=float)
    if x.ndim != 2:
        raise ValueError("x_alpha must be a 2-D latent matrix")
    k, d = x.shape
    if k < 1 or k > _MAX_ALPHA:
        raise ValueError(f"pattern size must lie in [1, {_MAX_ALPHA}], got {k}")
    if d != cal.d:
        raise ValueError(f"latent dimension {d} does not match calibration d={cal.d}")
    sigma = cal.sigma_hat if sigma_scaled else 1.0
    gram = x @ x.T / d
    centered = gram - sigma * sigma * np.eye(k)
    idx_a, idx_b, mult = _tuple_arrays(k)
    ell = idx_a.shape[1]
    # phi_der[j] = j-th derivative of the N(0, sigma^2) density at tau
    phi_der = np.array(
        [gaussian_density_derivative(j, cal.tau, sigma) for j in range(2 * ell)]
    )
    gram_products = centered[idx_a, idx_b].prod(axis=1)
    deriv_products = phi_der[mult - 1].prod(axis=1)
    total = float(gram_products @ deriv_products)
    return total / (2.0**ell * math.factorial(ell))


@dataclass(frozen=True)
class SignedWeightEstimate:
    """Estimate of a signed pattern weight with its Monte Carlo error."""

    value: float
    std_error: float
    method: str
    samples: int


def _gaussian_sqrt(gram: np.ndarray) -> np.ndarray:
    """Factor L with L L^T = gram; tolerates singular PSD input."""
    try:
        return np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(gram)
        floor = -1e-10 * max(vals.max(), 1.0)
        if vals.min() < floor:
            raise ValueError(
                f"latent Gram matrix is not positive semidefinite (min eigenvalue {vals.min():.3e})"
            ) from None
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def conditional_star_sw_mc(
    x_alpha: np.ndarray,
    cal: Calibration,
    samples: int,
    rng: np.random.Generator,
    antithetic: bool = True,
    center_space: str = "gram",
) -> SignedWeightEstimate:
    """Monte Carlo conditional star weight: center vertex integrated out.

    Given the k x d latent matrix of the outer vertices, the inner products
    with a standard Gaussian center are N(0, G), G = X X^T / d. center_space
    "gram" samples that k-dimensional law directly (cost free of d); "latent"
    draws the center in R^d as a cross-check. Antithetic pairing uses the sign
    symmetry of the center. samples >= 1000.
    """
    x = np.asarray(x_alpha, dtype=float)
    if x.ndim != 2:
        raise ValueError("x_alpha must be a 2-D latent matrix")
    if samples < 1000:
        raise ValueError(f"samples must be >= 1000, got {samples}")
    if center_space not in ("gram", "latent"):
        raise ValueError(f"center_space must be 'gram' or 'latent', got {center_space!r}")
    k, d = x.shape
    if d != cal.d:
        raise ValueError(f"latent dimension {d} does not match calibration d={cal.d}")
    tau, p = cal.tau, cal.p

    if center_space == "gram":
        factor = _gaussian_sqrt(x @ x.T / d)

    def weights(n_draw: int, rng: np.random.Generator) -> np.ndarray:
        if center_space == "gram":
            z = rng.standard_normal((n_draw, k)) @ factor.T
        else:
            z = rng.standard_normal((n_draw, d)) @ x.T / math.sqrt(d)
        if antithetic:
            w_pos = ((z <= tau) - p).prod(axis=1)
            w_neg = ((-z <= tau) - p).prod(axis=1)
            return 0.5 * (w_pos + w_neg)
        return ((z <= tau) - p).prod(axis=1)

    n_units = (samples + 1) // 2 if antithetic else samples
    actual = 2 * n_units if antithetic else samples
    chunk = max(1024, (1 << 24) // max(d if center_space == "latent" else k, 1))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_units:
        take = min(chunk, n_units - done)
        w = weights(take, rng)
        total += float(w.sum())
        total_sq += float((w * w).sum())
        done += take
    mean = total / n_units
    var = max(total_sq / n_units - mean * mean, 0.0) / max(n_units - 1, 1)
    return SignedWeightEstimate(
        value=mean,
        std_error=math.sqrt(var),
        method=f"mc-{center_space}",
        samples=actual,
    )


def _normal_rectangle(b1: float, b2: float, rho: float) -> float:
    """P(Z1 <= b1, Z2 <= b2) for standard normals with correlation rho.

    Gauss-Legendre over the first coordinate with node doubling; absolute
    accuracy 1e-9 or better. |rho| = 1 uses the degenerate closed forms.
    """
    if abs(rho) > 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    if 1.0 - abs(rho) < 1e-14:
        if rho > 0:
            return float(ndtr(min(b1, b2)))
        return float(max(0.0, ndtr(b1) + ndtr(b2) - 1.0))
    if b1 <= -38.0 or b2 <= -38.0:
        return 0.0
    if b1 >= 38.0:
        return float(ndtr(b2))
    if b2 >= 38.0:
        return float(ndtr(b1))
    lo = -38.0
    denom = math.sqrt(1.0 - rho * rho)

    def integral(nodes: int) -> float:
        t, w = _gl_nodes(nodes)
        t = 0.5 * (b1 - lo) * t + 0.5 * (b1 + lo)
        g = np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi) * ndtr((b2 - rho * t) / denom)
        return 0.5 * (b1 - lo) * float(w @ g)

    nodes = 128
    value = integral(nodes)
    while nodes < 4096:
        nodes *= 2
        refined = integral(nodes)
        if abs(refined - value) <= 1e-10:
            return refined
        value = refined
    return value


def conditional_star_sw_exact2(x_alpha: np.ndarray, cal: Calibration) -> SignedWeightEstimate:
    """Exact conditional star weight for |alpha| = 2 by bivariate quadrature.

    Value is P(z1 <= tau, z2 <= tau) - p P(z1 <= tau) - p P(z2 <= tau) + p^2
    under (z1, z2) ~ N(0, G). Degenerate correlations (|rho| = 1) use closed
    forms; a Gram matrix that is not a valid covariance raises ValueError.
    """
    x = np.asarray(x_alpha, dtype=float)
    if x.ndim != 2 or x.shape[0] != 2:
        raise ValueError("exact two-vertex weight needs a 2 x d latent matrix")
    if x.shape[1] != cal.d:
        raise ValueError(f"latent dimension {x.shape[1]} does not match calibration d={cal.d}")
    gram = x @ x.T / x.shape[1]
    v1, v2, c = gram[0, 0], gram[1, 1], gram[0, 1]
    if v1 <= 0.0 or v2 <= 0.0:
        raise ValueError(f"degenerate conditional variances ({v1:.3e}, {v2:.3e})")
    det = v1 * v2 - c * c
    if det < -1e-12 * max(v1 * v2, 1.0):
        raise ValueError(f"latent Gram matrix is not positive semidefinite (det {det:.3e})")
    rho = min(1.0, max(-1.0, c / math.sqrt(v1 * v2)))
    b1 = cal.tau / math.sqrt(v1)
    b2 = cal.tau / math.sqrt(v2)
    p = cal.p
    p11 = _normal_rectangle(b1, b2, rho)
    value = p11 - p * float(ndtr(b1)) - p * float(ndtr(b2)) + p * p
    return SignedWeightEstimate(value=value, std_error=0.0, method="exact2", samples=0)


@dataclass(frozen=True)
class RemainderScalingReport:
    """Decay of |MC estimate - leading term| across a dimension grid."""

    alpha_size: int
    ell: int
    rho: float
    p: float
    trials: int
    d_grid: tuple[int, ...]
    mean_abs_residual: tuple[float, ...]
    residual_mc_se: tuple[float, ...]
    mean_abs_lambda: tuple[float, ...]
    shrink_factors: tuple[float, ...]
    slope: float
    slope_bound: float
    passed: bool
    inconclusive: bool
    estimator: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def verify_remainder_scaling(
    alpha_size: int,
    d_grid: tuple[int, ...],
    rho: float,
    trials: int,
    rng: np.random.Generator,
    p: float = 0.3,
    base_samples: int = 1 << 16,
    max_samples: int = 1 << 22,
    sigma_scaled: bool = True,
) -> RemainderScalingReport:
    """Check that the expansion residual shrinks like d^{-(ell+1)/2}.

    For each d, draws latents conditioned on S_rho, compares the leading term
    against the conditional star weight (exact quadrature for size 2, Monte
    Carlo with escalating sample counts otherwise), and fits a log-log slope
    of the mean absolute residual. Passing needs slope <= -(ell+1)/2 + 0.5;
    the report is inconclusive when the Monte Carlo error at some d is not
    below half the mean residual there.
    """
    k = int(alpha_size)
    if k < 1 or k > _MAX_ALPHA:
        raise ValueError(f"alpha_size must lie in [1, {_MAX_ALPHA}], got {k}")
    if len(d_grid) < 2:
        raise ValueError("d_grid needs at least two dimensions to fit a slope")
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    ell = (k + 1) // 2
    use_exact = k == 2
    mean_resid: list[float] = []
    resid_se: list[float] = []
    mean_lambda: list[float] = []
    for d in d_grid:
        cal = calibrate(p, d)
        residuals = np.empty(trials)
        errors = np.empty(trials)
        lambdas = np.empty(trials)
        for t in range(trials):
            x = sample_latents_in_s_rho(k, d, rho, rng)
            lam = leading_term_lambda(x, cal, sigma_scaled=sigma_scaled)
            if use_exact:
                est = conditional_star_sw_exact2(x, cal)
            else:
                n_samples = base_samples
                while True:
                    est = conditional_star_sw_mc(x, cal, n_samples, rng)
                    resid = abs(est.value - lam)
                    if est.std_error <= resid / 6.0 or n_samples >= max_samples:
                        break
                    n_samples *= 4
            residuals[t] = abs(est.value - lam)
            errors[t] = est.std_error
            lambdas[t] = abs(lam)
        mean_resid.append(float(residuals.mean()))
        resid_se.append(float(np.sqrt((errors * errors).sum()) / trials))
        mean_lambda.append(float(lambdas.mean()))
    slope = float(np.polyfit(np.log(np.asarray(d_grid, float)), np.log(mean_resid), 1)[0])
    bound = -(ell + 1) / 2.0 + 0.5
    shrink = tuple(
        mean_resid[j] / mean_resid[j + 1] if mean_resid[j + 1] > 0 else math.inf
        for j in range(len(d_grid) - 1)
    )
    inconclusive = any(se > r / 2.0 for se, r in zip(resid_se, mean_resid))
    return RemainderScalingReport(
        alpha_size=k,
        ell=ell,
        rho=float(rho),
        p=float(p),
        trials=trials,
        d_grid=tuple(int(d) for d in d_grid),
        mean_abs_residual=tuple(mean_resid),
        residual_mc_se=tuple(resid_se),
        mean_abs_lambda=tuple(mean_lambda),
        shrink_factors=shrink,
        slope=slope,
        slope_bound=bound,
        passed=bool(slope <= bound and not inconclusive),
        inconclusive=bool(inconclusive),
        estimator="exact2" if use_exact else "mc-gram",
    )


def unconditional_star_sw_mc(
    ell: int,
    p: float,
    d: int,
    trials: int,
    rng: np.random.Generator,
    leaf_space: str = "scale",
) -> SignedWeightEstimate:
    """Unconditional signed weight of the star with ell leaves on one center.

    Conditioned on the center's norm scale s = |y| / sqrt(d), the leaf edges
    are i.i.d. Bern(Phi(tau / s)), so the weight's conditional mean collapses
    to (Phi(tau / s) - p)^ell. leaf_space picks the sampling depth: "scale"
    (collapsed, default), "bernoulli" (draws leaf indicators), "latent"
    (draws all latent vectors); all three share the same mean.
    """
    if ell < 2:
        raise ValueError(f"star needs at least 2 leaves, got ell={ell}")
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    if leaf_space not in ("scale", "bernoulli", "latent"):
        raise ValueError(f"unknown leaf_space {leaf_space!r}")
    cal = calibrate(p, d)
    tau = cal.tau
    chunk = max(1, (1 << 22) // max(ell if leaf_space != "latent" else d * (ell + 1), 1))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        take = min(chunk, trials - done)
        if leaf_space == "latent":
            center = rng.standard_normal((take, d))
            leaves = rng.standard_normal((take, ell, d))
            z = np.einsum("tld,td->tl", leaves, center) / math.sqrt(d)
            w = ((z <= tau) - p).prod(axis=1)
        else:
            s = np.sqrt(rng.chisquare(d, size=take) / d)
            pr = ndtr(tau / s)
            if leaf_space == "scale":
                w = (pr - p) ** ell
            else:
                hits = rng.random((take, ell)) < pr[:, None]
                w = (hits - p).prod(axis=1)
        total += float(w.sum())
        total_sq += float((w * w).sum())
        done += take
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) / max(trials - 1, 1)
    return SignedWeightEstimate(
        value=mean, std_error=math.sqrt(var), method=f"mc-{leaf_space}", samples=trials
    )


@dataclass(frozen=True)
class PatternGraph:
    """Bipartite edge pattern: edges are (row, column) index pairs."""

    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if len(self.edges) < 1:
            raise ValueError("pattern needs at least one edge")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("pattern edges must be distinct")
        if any(u < 0 or v < 0 for u, v in self.edges):
            raise ValueError("pattern indices must be nonnegative")

    @property
    def rows(self) -> int:
        return max(u for u, _ in self.edges) + 1

    @property
    def cols(self) -> int:
        return max(v for _, v in self.edges) + 1

    @property
    def has_leaf(self) -> bool:
        """True iff some vertex (either side) has degree exactly 1."""
        row_deg = [0] * self.rows
        col_deg = [0] * self.cols
        for u, v in self.edges:
            row_deg[u] += 1
            col_deg[v] += 1
        return 1 in row_deg or 1 in col_deg


EDGE = PatternGraph(edges=((0, 0),))
TWO_PATH = PatternGraph(edges=((0, 0), (0, 1)))
FOUR_CYCLE = PatternGraph(edges=((0, 0), (0, 1), (1, 0), (1, 1)))


@dataclass(frozen=True)
class LeafZeroReport:
    """Monte Carlo check of the signed pattern weight at density one half."""

    edges: tuple[tuple[int, int], ...]
    has_leaf: bool
    d: int
    trials: int
    conditioned: bool
    estimate: float
    std_error: float
    zscore: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def leaf_zero_check(
    pattern: PatternGraph,
    d: int,
    trials: int,
    rng: np.random.Generator,
    conditioned: bool = False,
    rho: float | None = None,
) -> LeafZeroReport:
    """Estimate the unconditional signed weight of a pattern at p = 1/2.

    At p = 1/2 any pattern with a degree-1 vertex has weight exactly zero
    (averaging over that vertex's latent kills the centered indicator), so
    the z-score should be small; leafless patterns can sit far from zero.
    conditioned=True restricts row latents to the S_rho event (rho required).
    """
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    if conditioned and rho is None:
        raise ValueError("conditioned sampling needs rho")
    tau = 0.0  # p = 1/2 threshold is exactly zero by sign symmetry
    p = 0.5
    n_rows, n_cols = pattern.rows, pattern.cols
    chunk = max(1, (1 << 22) // max((n_rows + n_cols) * d, 1))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        take = min(chunk, trials - done)
        if conditioned:
            x_r = np.empty((take, n_rows, d))
            for t in range(take):
                x_r[t] = sample_latents_in_s_rho(n_rows, d, rho, rng)
        else:
            x_r = rng.standard_normal((take, n_rows, d))
        x_l = rng.standard_normal((take, n_cols, d))
        z = np.einsum("trd,tcd->trc", x_r, x_l) / math.sqrt(d)
        w = np.ones(take)
        for u, v in pattern.edges:
            w = w * ((z[:, u, v] <= tau) - p)
        total += float(w.sum())
        total_sq += float((w * w).sum())
        done += take
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) / max(trials - 1, 1)
    se = math.sqrt(var)
    return LeafZeroReport(
        edges=pattern.edges,
        has_leaf=pattern.has_leaf,
        d=int(d),
        trials=trials,
        conditioned=conditioned,
        estimate=mean,
        std_error=se,
        zscore=mean / se if se > 0 else 0.0,
    )

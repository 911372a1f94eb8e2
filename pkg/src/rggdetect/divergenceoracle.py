"""Exact small-matrix distributions, divergences, and chi-square cross-checks.

For n x m binary matrices with nm small the full outcome distribution is
tractable: outcomes are indexed by packing entries row-major into bits
(bit i*m + j holds entry (i, j)). The chi-square divergence of the masked
model from the i.i.d. Bern(p) null then has two independent estimation
routes: direct Monte Carlo over outcome frequencies, and a sum of squared
signed pattern weights
    1 + chi2 = sum_alpha q^{2|alpha|} (E[SW(alpha)])^2 / (p(1-p))^{|alpha|}
over nonempty edge patterns alpha, with q^{2|alpha|} replaced by q^{|alpha|}
when the mask is observed (the mask-conditional chi-square averaged over the
mask). Dual routes are kept separate so they can disagree loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .gaussmodel import Calibration, ModelParams, sample_inner_products

__all__ = [
    "OutcomeDistribution",
    "outcome_index",
    "matrix_from_index",
    "null_distribution",
    "model_distribution_mc",
    "tv",
    "chi2",
    "DirectChi2Report",
    "chi2_direct_mc",
    "PatternTerm",
    "Chi2SignedSumReport",
    "chi2_via_signed_weights",
    "ContrastReport",
    "known_vs_unknown_contrast",
]

_MAX_CELLS_DIST = 14
_MAX_CELLS_PATTERNS = 9


@dataclass(frozen=True)
class OutcomeDistribution:
    """Distribution over all 2^(n*m) binary matrices, packed row-major."""

    n: int
    m: int
    probs: np.ndarray
    provenance: str
    samples: int | None = None

    def __post_init__(self) -> None:
        cells = self.n * self.m
        if cells > _MAX_CELLS_DIST:
            raise ValueError(f"outcome space limited to {_MAX_CELLS_DIST} cells, got {cells}")
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (1 << cells,):
            raise ValueError(f"probs must have length 2^{cells}, got shape {probs.shape}")
        if (probs < 0).any():
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {probs.sum()!r}")
        object.__setattr__(self, "probs", probs)


def outcome_index(matrix: np.ndarray) -> int:
    """Row-major bit packing of a binary matrix into an outcome index."""
    flat = np.asarray(matrix).reshape(-1)
    if not np.isin(flat, (0, 1)).all():
        raise ValueError("matrix entries must be 0 or 1")
    return int(flat @ (1 << np.arange(flat.size, dtype=np.int64)))


def matrix_from_index(index: int, n: int, m: int) -> np.ndarray:
    """Inverse of outcome_index."""
    cells = n * m
    if not 0 <= index < (1 << cells):
        raise ValueError(f"index {index} out of range for {n}x{m}")
    bits = (index >> np.arange(cells)) & 1
    return bits.reshape(n, m).astype(np.uint8)


def null_distribution(n: int, m: int, p: float) -> OutcomeDistribution:
    """Exact outcome distribution of an i.i.d. Bern(p) matrix."""
    cells = n * m
    if cells > _MAX_CELLS_DIST:
        raise ValueError(f"outcome space limited to {_MAX_CELLS_DIST} cells, got {cells}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"edge density p must lie in (0,1), got {p}")
    ones = np.array([bin(i).count("1") for i in range(1 << cells)])
    probs = p**ones * (1.0 - p) ** (cells - ones)
    return OutcomeDistribution(n=n, m=m, probs=probs, provenance="exact")


_MODEL_NAMES = ("unknown-mask", "known-mask-averaged", "pure-rgg")


def _sample_outcome_indices(
    params: ModelParams, cal: Calibration, model: str, batch: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray | None]:
    """Batch of packed outcome indices, plus packed mask indices when drawn."""
    n, m = params.n, params.m
    weights = 1 << np.arange(n * m, dtype=np.int64)
    z = sample_inner_products(n, m, params.d, rng, batch=batch)
    w = z <= cal.tau
    if model == "pure-rgg":
        obs = w
        mask_idx = None
    else:
        mask = rng.random((batch, n, m)) < params.q
        fill = rng.random((batch, n, m)) < params.p
        obs = np.where(mask, w, fill)
        mask_idx = mask.reshape(batch, -1) @ weights
    return obs.reshape(batch, -1) @ weights, mask_idx


def model_distribution_mc(
    params: ModelParams,
    cal: Calibration,
    model: str,
    trials: int,
    rng: np.random.Generator,
) -> OutcomeDistribution:
    """Monte Carlo outcome distribution of the chosen model.

    model is one of "unknown-mask", "known-mask-averaged" (the same marginal
    law, kept as an explicit name), or "pure-rgg" (no masking).
    """
    if model not in _MODEL_NAMES:
        raise ValueError(f"model must be one of {_MODEL_NAMES}, got {model!r}")
    cells = params.n * params.m
    if cells > _MAX_CELLS_DIST:
        raise ValueError(f"outcome space limited to {_MAX_CELLS_DIST} cells, got {cells}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    size = 1 << cells
    counts = np.zeros(size, dtype=np.int64)
    done = 0
    while done < trials:
        take = min(65536, trials - done)
        idx, _ = _sample_outcome_indices(params, cal, model, take, rng)
        counts += np.bincount(idx, minlength=size)
        done += take
    return OutcomeDistribution(
        n=params.n, m=params.m, probs=counts / trials, provenance="mc", samples=trials
    )


def _check_pair(a: OutcomeDistribution, b: OutcomeDistribution) -> None:
    if (a.n, a.m) != (b.n, b.m):
        raise ValueError(f"distributions are over different shapes: {(a.n, a.m)} vs {(b.n, b.m)}")


def tv(a: OutcomeDistribution, b: OutcomeDistribution) -> float:
    """Total variation distance."""
    _check_pair(a, b)
    return float(0.5 * np.abs(a.probs - b.probs).sum())


def chi2(a: OutcomeDistribution, b: OutcomeDistribution) -> float:
    """Chi-square divergence of a from b; b must dominate a."""
    _check_pair(a, b)
    bad = (b.probs == 0) & (a.probs > 0)
    if bad.any():
        raise ValueError("chi-square divergence needs b > 0 wherever a > 0")
    keep = b.probs > 0
    return float((np.square(a.probs[keep] - b.probs[keep]) / b.probs[keep]).sum())


def _debiased_chi2(counts: np.ndarray, null_probs: np.ndarray, n_draws: int) -> float:
    # plug-in Sum mu^2/nu - 1 minus the exact multinomial bias correction
    mu = counts / n_draws
    plug = float((mu * mu / null_probs).sum()) - 1.0
    correction = float((mu * (1.0 - mu) / null_probs).sum()) / (n_draws - 1)
    return plug - correction


@dataclass(frozen=True)
class DirectChi2Report:
    """Direct Monte Carlo chi-square estimate with a batch-means error bar."""

    mode: str
    trials: int
    batches: int
    value: float
    std_error: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def chi2_direct_mc(
    params: ModelParams,
    cal: Calibration,
    mode: str,
    trials: int,
    rng: np.random.Generator,
    batches: int = 20,
) -> DirectChi2Report:
    """Unbiased direct chi-square of the masked model from the Bern(p) null.

    mode "unknown" estimates chi2(law(M) || null) from outcome frequencies;
    mode "known" estimates the mask-conditional chi-square averaged over the
    mask, grouping draws by mask value. Each batch yields one debiased
    estimate; the report averages batches and uses their spread as the error.
    """
    if mode not in ("unknown", "known"):
        raise ValueError(f"mode must be 'unknown' or 'known', got {mode!r}")
    cells = params.n * params.m
    if cells > _MAX_CELLS_PATTERNS:
        raise ValueError(f"direct chi-square limited to {_MAX_CELLS_PATTERNS} cells, got {cells}")
    if batches < 2:
        raise ValueError(f"batches must be >= 2, got {batches}")
    per_batch = trials // batches
    if per_batch < 2:
        raise ValueError(f"trials={trials} too small for {batches} batches")
    size = 1 << cells
    null_probs = null_distribution(params.n, params.m, params.p).probs
    model = "unknown-mask"
    values = np.empty(batches)
    for b in range(batches):
        if mode == "unknown":
            counts = np.zeros(size, dtype=np.int64)
            done = 0
            while done < per_batch:
                take = min(65536, per_batch - done)
                idx, _ = _sample_outcome_indices(params, cal, model, take, rng)
                counts += np.bincount(idx, minlength=size)
                done += take
            values[b] = _debiased_chi2(counts, null_probs, per_batch)
        else:
            joint = np.zeros((size, size), dtype=np.int64)
            done = 0
            while done < per_batch:
                take = min(65536, per_batch - done)
                idx, mask_idx = _sample_outcome_indices(params, cal, model, take, rng)
                joint += np.bincount(mask_idx * size + idx, minlength=size * size).reshape(
                    size, size
                )
                done += take
            group_sizes = joint.sum(axis=1)
            total = 0.0
            for g in np.nonzero(group_sizes >= 2)[0]:
                total += group_sizes[g] / per_batch * _debiased_chi2(
                    joint[g], null_probs, int(group_sizes[g])
                )
            values[b] = total
    return DirectChi2Report(
        mode=mode,
        trials=per_batch * batches,
        batches=batches,
        value=float(values.mean()),
        std_error=float(values.std(ddof=1) / math.sqrt(batches)),
    )


@dataclass(frozen=True)
class PatternTerm:
    """One edge pattern's contribution to the signed-weight chi-square sum."""

    bitmask: int
    size: int
    mean_weight: float
    std_error: float
    term: float


def _pattern_batch_means(
    params: ModelParams,
    cal: Calibration,
    trials: int,
    rng: np.random.Generator,
    batches: int,
) -> tuple[np.ndarray, int]:
    """Per-batch mean signed weight for every nonempty pattern, shared draws.

    Returns (batches, 2^(nm) - 1) means; pattern with bitmask b uses the cells
    whose bits are set in b (row-major). All patterns are evaluated on the
    same latent draws via a subset-product recursion.
    """
    cells = params.n * params.m
    size = 1 << cells
    per_batch = trials // batches
    means = np.zeros((batches, size - 1))
    p = params.p
    for b in range(batches):
        sums = np.zeros(size - 1)
        done = 0
        while done < per_batch:
            take = min(8192, per_batch - done)
            z = sample_inner_products(params.n, params.m, params.d, rng, batch=take)
            c = ((z <= cal.tau) - p).reshape(take, cells)
            # products[mask] built from products[mask - lowest bit]
            products = np.empty((size, take))
            products[0] = 1.0
            for bm in range(1, size):
                low = bm & -bm
                products[bm] = products[bm ^ low] * c[:, low.bit_length() - 1]
            sums += products[1:].sum(axis=1)
            done += take
        means[b] = sums / per_batch
    return means, per_batch


@dataclass(frozen=True)
class Chi2SignedSumReport:
    """Chi-square reconstructed from squared signed pattern weights."""

    mode: str
    n: int
    m: int
    p: float
    q: float
    d: int
    trials: int
    batches: int
    value: float
    std_error: float
    inconclusive: bool
    terms: tuple[PatternTerm, ...]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _term_coefficients(params: ModelParams, mode: str, sizes: np.ndarray) -> np.ndarray:
    mask_power = 2 if mode == "unknown" else 1
    return params.q ** (mask_power * sizes) / (params.p * (1.0 - params.p)) ** sizes


def chi2_via_signed_weights(
    params: ModelParams,
    cal: Calibration,
    mode: str,
    trials: int,
    rng: np.random.Generator,
    batches: int = 20,
) -> Chi2SignedSumReport:
    """Chi-square from the signed-weight identity, one term per edge pattern.

    Each nonempty pattern alpha contributes
    q^(2|alpha|) (E[SW(alpha)])^2 / (p(1-p))^(|alpha|) in "unknown" mode, with
    exponent |alpha| instead of 2|alpha| in "known" mode. Squared means are
    debiased per batch (mean^2 minus its sampling variance), all patterns
    share the same latent draws, and the error bar is the spread of per-batch
    totals. The report is inconclusive when a dominant term (at least a
    quarter of the largest absolute contribution) has relative error > 30%.
    """
    if mode not in ("unknown", "known"):
        raise ValueError(f"mode must be 'unknown' or 'known', got {mode!r}")
    cells = params.n * params.m
    if cells > _MAX_CELLS_PATTERNS:
        raise ValueError(
            f"pattern enumeration limited to {_MAX_CELLS_PATTERNS} cells, got {cells}"
        )
    if trials < 100_000:
        raise ValueError(f"pattern weights need trials >= 100000, got {trials}")
    if batches < 2:
        raise ValueError(f"batches must be >= 2, got {batches}")
    means, per_batch = _pattern_batch_means(params, cal, trials, rng, batches)
    sizes = np.array([bin(bm).count("1") for bm in range(1, 1 << cells)])
    coeff = _term_coefficients(params, mode, sizes)

    # per-batch totals: debias each squared mean by its within-batch variance
    e_hat = means.mean(axis=0)
    var_of_mean = means.var(axis=0, ddof=1) / batches
    batch_vars = means.var(axis=0, ddof=1)  # variance of a single batch mean
    batch_totals = (coeff * (means * means - batch_vars)).sum(axis=1)
    value = float(batch_totals.mean())
    std_error = float(batch_totals.std(ddof=1) / math.sqrt(batches))

    terms = coeff * (e_hat * e_hat - var_of_mean)
    term_se = coeff * np.sqrt(4.0 * e_hat * e_hat * var_of_mean + 2.0 * var_of_mean**2)
    contributions = np.abs(terms)
    if contributions.max() > 0:
        dominant = contributions >= 0.25 * contributions.max()
    else:
        dominant = np.zeros(len(terms), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_err = np.where(contributions > 0, term_se / contributions, 0.0)
    inconclusive = bool((rel_err[dominant] > 0.30).any())

    table = tuple(
        PatternTerm(
            bitmask=bm + 1,
            size=int(sizes[bm]),
            mean_weight=float(e_hat[bm]),
            std_error=float(np.sqrt(var_of_mean[bm])),
            term=float(terms[bm]),
        )
        for bm in range(len(terms))
    )
    return Chi2SignedSumReport(
        mode=mode,
        n=params.n,
        m=params.m,
        p=params.p,
        q=params.q,
        d=params.d,
        trials=per_batch * batches,
        batches=batches,
        value=value,
        std_error=std_error,
        inconclusive=inconclusive,
        terms=table,
    )


@dataclass(frozen=True)
class ContrastReport:
    """Known-mask vs unknown-mask chi-square built from shared estimates.

    Terms use raw squared means (nonnegative), so the per-pattern ratio
    known/unknown is q^(-|alpha|) by construction and the known-mode total
    dominates the unknown-mode total whenever q <= 1.
    """

    n: int
    m: int
    p: float
    q: float
    d: int
    trials: int
    known_total: float
    unknown_total: float
    pattern_sizes: tuple[int, ...]
    ratios: tuple[float | None, ...]
    expected_ratios: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def known_vs_unknown_contrast(
    params: ModelParams,
    cal: Calibration,
    trials: int,
    rng: np.random.Generator,
    batches: int = 20,
) -> ContrastReport:
    """Compare both chi-square modes on one shared set of pattern estimates."""
    cells = params.n * params.m
    if cells > _MAX_CELLS_PATTERNS:
        raise ValueError(
            f"pattern enumeration limited to {_MAX_CELLS_PATTERNS} cells, got {cells}"
        )
    if trials < 100_000:
        raise ValueError(f"pattern weights need trials >= 100000, got {trials}")
    means, per_batch = _pattern_batch_means(params, cal, trials, rng, batches)
    e_hat = means.mean(axis=0)
    raw_sq = e_hat * e_hat
    sizes = np.array([bin(bm).count("1") for bm in range(1, 1 << cells)])
    known_terms = _term_coefficients(params, "known", sizes) * raw_sq
    unknown_terms = _term_coefficients(params, "unknown", sizes) * raw_sq
    ratios = tuple(
        float(k / u) if u > 0 else None for k, u in zip(known_terms, unknown_terms)
    )
    return ContrastReport(
        n=params.n,
        m=params.m,
        p=params.p,
        q=params.q,
        d=params.d,
        trials=per_batch * batches,
        known_total=float(known_terms.sum()),
        unknown_total=float(unknown_terms.sum()),
        pattern_sizes=tuple(int(s) for s in sizes),
        ratios=ratios,
        expected_ratios=tuple(float(params.q ** (-int(s))) for s in sizes),
    )

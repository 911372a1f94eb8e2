"""Signed wedge and four-cycle statistics, null calibration, and power.

All statistics are polynomials in the centered entries a[u, v] = M[u, v] - p.
The wedge statistic sums a[u, k] * a[u, l] over rows u and column pairs k < l;
the four-cycle statistic sums a[i, k] a[i, l] a[j, k] a[j, l] over row pairs
i < j and column pairs k < l. Masked variants apply the same polynomials to
the centered entries zeroed outside a known mask.

Tests are two-sided: the null interval is an empirical quantile range of the
statistic under i.i.d. Bern(p) matrices, and a value outside it rejects.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Union

import numpy as np

from .gaussmodel import Calibration, ModelParams, sample_er, sample_observation
from .rng import NULL_STREAM_BASE, substream

__all__ = [
    "signed_wedges",
    "signed_four_cycles",
    "masked_signed_wedges",
    "masked_signed_four_cycles",
    "signed_weight_of_pattern",
    "StatisticDef",
    "STATISTICS",
    "evaluate_statistic",
    "NullInterval",
    "calibrate_null",
    "PowerEstimate",
    "estimate_power",
    "TestReport",
    "run_test",
]

StreamSource = Union[np.random.Generator, Callable[[int], np.random.Generator]]


def _centered(matrix: np.ndarray, p: float) -> np.ndarray:
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if not np.isin(m, (0, 1)).all():
        raise ValueError("matrix entries must be 0 or 1")
    if not 0.0 < p < 1.0:
        raise ValueError(f"edge density p must lie in (0,1), got {p}")
    return m.astype(float) - p


def _wedges_of_centered(a: np.ndarray) -> float:
    row_sum = a.sum(axis=1)
    row_sq = (a * a).sum(axis=1)
    return float(0.5 * (row_sum * row_sum - row_sq).sum())


def _four_cycles_of_centered(a: np.ndarray) -> float:
    # Gram over the smaller side keeps the quadratic cost at min(n,m)^2.
    if a.shape[0] < a.shape[1]:
        a = a.T
    gram = a.T @ a
    sq = a * a
    gram_sq = sq.T @ sq
    off_d2 = float((gram * gram).sum() - (np.diagonal(gram) ** 2).sum())
    off_g = float(gram_sq.sum() - np.diagonal(gram_sq).sum())
    return (off_d2 - off_g) / 4.0


def signed_wedges(matrix: np.ndarray, p: float) -> float:
    """Sum of centered-entry products over same-row column pairs."""
    return _wedges_of_centered(_centered(matrix, p))


def signed_four_cycles(matrix: np.ndarray, p: float) -> float:
    """Sum of centered-entry products over row-pair x column-pair rectangles."""
    return _four_cycles_of_centered(_centered(matrix, p))


def masked_signed_wedges(matrix: np.ndarray, mask: np.ndarray, p: float) -> float:
    """Wedge statistic restricted to mask = 1 entries (centered then zeroed)."""
    a = _centered(matrix, p) * np.asarray(mask)
    return _wedges_of_centered(a)


def masked_signed_four_cycles(matrix: np.ndarray, mask: np.ndarray, p: float) -> float:
    """Four-cycle statistic restricted to mask = 1 entries."""
    a = _centered(matrix, p) * np.asarray(mask)
    return _four_cycles_of_centered(a)


def signed_weight_of_pattern(
    matrix: np.ndarray, p: float, edges: tuple[tuple[int, int], ...]
) -> float:
    """Product of centered entries over an explicit edge list."""
    a = _centered(matrix, p)
    value = 1.0
    for u, v in edges:
        value *= a[u, v]
    return float(value)


@dataclass(frozen=True)
class StatisticDef:
    """Registry entry: evaluation takes (matrix, p, mask)."""

    name: str
    needs_mask: bool
    func: Callable[[np.ndarray, float, np.ndarray | None], float]


def _eval_wedge(m: np.ndarray, p: float, mask: np.ndarray | None) -> float:
    return signed_wedges(m, p)


def _eval_c4(m: np.ndarray, p: float, mask: np.ndarray | None) -> float:
    return signed_four_cycles(m, p)


def _eval_wedge_masked(m: np.ndarray, p: float, mask: np.ndarray | None) -> float:
    if mask is None:
        raise ValueError("statistic 'wedge-masked' needs a mask")
    return masked_signed_wedges(m, mask, p)


def _eval_c4_masked(m: np.ndarray, p: float, mask: np.ndarray | None) -> float:
    if mask is None:
        raise ValueError("statistic 'c4-masked' needs a mask")
    return masked_signed_four_cycles(m, mask, p)


STATISTICS: dict[str, StatisticDef] = {
    "wedge": StatisticDef("wedge", False, _eval_wedge),
    "c4": StatisticDef("c4", False, _eval_c4),
    "wedge-masked": StatisticDef("wedge-masked", True, _eval_wedge_masked),
    "c4-masked": StatisticDef("c4-masked", True, _eval_c4_masked),
}


def evaluate_statistic(
    name: str, matrix: np.ndarray, p: float, mask: np.ndarray | None = None
) -> float:
    """Evaluate a registered statistic by name."""
    if name not in STATISTICS:
        raise ValueError(f"unknown statistic {name!r}; choose from {sorted(STATISTICS)}")
    return STATISTICS[name].func(matrix, p, mask)


def _collect(
    fn: Callable[[np.random.Generator], float],
    trials: int,
    streams: StreamSource,
    threads: int,
) -> np.ndarray:
    """Evaluate fn on one stream per trial; results ordered by trial index."""
    values = np.empty(trials)
    if isinstance(streams, np.random.Generator):
        for t in range(trials):
            values[t] = fn(streams)
        return values
    if threads <= 1:
        for t in range(trials):
            values[t] = fn(streams(t))
        return values
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for t, v in enumerate(pool.map(lambda t: fn(streams(t)), range(trials))):
            values[t] = v
    return values


@dataclass(frozen=True)
class NullInterval:
    """Two-sided empirical acceptance interval under the Bern(p) null."""

    lower: float
    upper: float
    alpha_level: float
    trials: int


def calibrate_null(
    statistic: str,
    params: ModelParams,
    trials: int,
    streams: StreamSource,
    alpha_level: float = 0.05,
    threads: int = 1,
) -> NullInterval:
    """Empirical (alpha/2, 1 - alpha/2) quantile interval under the null.

    Requires trials >= 100 / alpha_level so both tails are resolved. Masked
    statistics draw a Bern(q) mask per trial alongside the null matrix.
    Quantiles use the conservative convention (lower takes the sample at or
    below the level, upper at or above).
    """
    if not 0.0 < alpha_level < 1.0:
        raise ValueError(f"alpha_level must lie in (0,1), got {alpha_level}")
    if trials < 100.0 / alpha_level:
        raise ValueError(
            f"null calibration needs trials >= {int(np.ceil(100.0 / alpha_level))} "
            f"at alpha={alpha_level}, got {trials}"
        )
    stat = STATISTICS.get(statistic)
    if stat is None:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {sorted(STATISTICS)}")

    def one(rng: np.random.Generator) -> float:
        m = sample_er(params.n, params.m, params.p, rng)
        mask = sample_er(params.n, params.m, params.q, rng) if stat.needs_mask else None
        return stat.func(m, params.p, mask)

    values = _collect(one, trials, streams, threads)
    lower = float(np.quantile(values, alpha_level / 2.0, method="lower"))
    upper = float(np.quantile(values, 1.0 - alpha_level / 2.0, method="higher"))
    return NullInterval(lower=lower, upper=upper, alpha_level=alpha_level, trials=trials)


@dataclass(frozen=True)
class PowerEstimate:
    """Rejection frequency of the two-sided test under the masked model."""

    power: float
    std_error: float
    h1_mean: float
    trials: int


def estimate_power(
    statistic: str,
    params: ModelParams,
    cal: Calibration,
    interval: NullInterval,
    trials: int,
    streams: StreamSource,
    threads: int = 1,
) -> PowerEstimate:
    """Monte Carlo rejection rate of value outside [interval.lower, interval.upper]."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    stat = STATISTICS.get(statistic)
    if stat is None:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {sorted(STATISTICS)}")

    def one(rng: np.random.Generator) -> float:
        m, mask = sample_observation(params, cal, rng)
        return stat.func(m, params.p, mask if stat.needs_mask else None)

    values = _collect(one, trials, streams, threads)
    rejected = (values < interval.lower) | (values > interval.upper)
    power = float(rejected.mean())
    se = float(np.sqrt(power * (1.0 - power) / trials))
    return PowerEstimate(power=power, std_error=se, h1_mean=float(values.mean()), trials=trials)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one two-sided test on a given matrix."""

    statistic: str
    value: float
    lower: float
    upper: float
    reject: bool
    alpha: float
    trials: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def run_test(
    statistic: str,
    matrix: np.ndarray,
    params: ModelParams,
    trials: int,
    seed: int,
    alpha_level: float = 0.05,
    mask: np.ndarray | None = None,
    threads: int = 1,
) -> TestReport:
    """Calibrate the null from seed-derived streams and test one matrix."""
    stat = STATISTICS.get(statistic)
    if stat is None:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {sorted(STATISTICS)}")
    matrix = np.asarray(matrix)
    if matrix.shape != (params.n, params.m):
        raise ValueError(f"matrix shape {matrix.shape} does not match params ({params.n},{params.m})")
    interval = calibrate_null(
        statistic,
        params,
        trials,
        lambda t: substream(seed, NULL_STREAM_BASE, t),
        alpha_level=alpha_level,
        threads=threads,
    )
    value = stat.func(matrix, params.p, mask)
    return TestReport(
        statistic=statistic,
        value=value,
        lower=interval.lower,
        upper=interval.upper,
        reject=bool(value < interval.lower or value > interval.upper),
        alpha=alpha_level,
        trials=trials,
        seed=seed,
    )

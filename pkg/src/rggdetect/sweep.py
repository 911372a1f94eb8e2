"""Parameter sweeps: power of registered statistics over (d, q) grids.

A sweep fixes (n, m, p) and walks a grid of latent dimensions d and mask
densities q, estimating the two-sided test power of each configured statistic
per cell. Null intervals are cached across cells whose null law coincides:
the key is the statistic name alone for unmasked statistics, and (statistic,
q) for masked ones, whose null law inherits the mask density.

Reproducibility: cell (index c) trial t draws from the stream keyed
(master seed, c, t); null calibration k trial t from (master seed,
NULL_STREAM_BASE + k, t). Results are therefore byte-identical across runs
and worker counts.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass

from . import __version__
from .gaussmodel import Calibration, ModelParams, calibrate
from .rng import NULL_STREAM_BASE, substream
from .signedstats import (
    STATISTICS,
    NullInterval,
    calibrate_null,
    estimate_power,
)

__all__ = [
    "SweepConfig",
    "SweepCell",
    "SweepResult",
    "run_sweep",
    "rows_to_csv",
    "read_sweep_csv",
    "write_sweep_outputs",
]

CSV_HEADER = "d,q,stat,power,power_se,null_lo,null_hi,h1_mean,seed"


@dataclass(frozen=True)
class SweepConfig:
    """Grid sweep settings; exactly one of values/exponents per axis.

    Exponent grids follow d = round(n^a) and q = n^(-b). trials is the
    per-cell count under the model; null_trials (default max(trials,
    ceil(100 / alpha_level))) is the null calibration count and must resolve
    both tails, so it is held at or above 100 / alpha_level.
    """

    n: int
    m: int
    p: float
    statistics: tuple[str, ...]
    mask_mode: str
    trials: int
    seed: int
    alpha_level: float = 0.05
    d_values: tuple[int, ...] | None = None
    q_values: tuple[float, ...] | None = None
    d_exponents: tuple[float, ...] | None = None
    q_exponents: tuple[float, ...] | None = None
    null_trials: int | None = None
    out: str | None = None

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ValueError(f"vertex counts must be >= 1, got n={self.n}, m={self.m}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"edge density p must lie in (0,1), got {self.p}")
        if not 0.0 < self.alpha_level < 1.0:
            raise ValueError(f"alpha_level must lie in (0,1), got {self.alpha_level}")
        if (self.d_values is None) == (self.d_exponents is None):
            raise ValueError("give exactly one of d_values / d_exponents")
        if (self.q_values is None) == (self.q_exponents is None):
            raise ValueError("give exactly one of q_values / q_exponents")
        if not self.statistics:
            raise ValueError("statistics list must be nonempty")
        for name in self.statistics:
            if name not in STATISTICS:
                raise ValueError(f"unknown statistic {name!r}; choose from {sorted(STATISTICS)}")
            if STATISTICS[name].needs_mask and self.mask_mode != "known":
                raise ValueError(f"statistic {name!r} needs mask_mode 'known'")
        if self.mask_mode not in ("unknown", "known"):
            raise ValueError(f"mask_mode must be 'unknown' or 'known', got {self.mask_mode!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.resolved_d():
            raise ValueError("d grid must be nonempty")
        if not self.resolved_q():
            raise ValueError("q grid must be nonempty")
        for q in self.resolved_q():
            if not 0.0 <= q <= 1.0:
                raise ValueError(f"mask density q must lie in [0,1], got {q}")
        floor = math.ceil(100.0 / self.alpha_level)
        if self.null_trials is not None and self.null_trials < floor:
            raise ValueError(
                f"null_trials must be >= {floor} at alpha={self.alpha_level}, got {self.null_trials}"
            )

    def resolved_d(self) -> tuple[int, ...]:
        if self.d_values is not None:
            return tuple(int(d) for d in self.d_values)
        return tuple(max(1, round(self.n**a)) for a in self.d_exponents)

    def resolved_q(self) -> tuple[float, ...]:
        if self.q_values is not None:
            return tuple(float(q) for q in self.q_values)
        return tuple(float(self.n ** (-b)) for b in self.q_exponents)

    def resolved_null_trials(self) -> int:
        floor = math.ceil(100.0 / self.alpha_level)
        if self.null_trials is not None:
            return self.null_trials
        return max(self.trials, floor)

    def to_json(self) -> str:
        data = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(data, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SweepConfig":
        data = json.loads(text)
        known = {
            "n",
            "m",
            "p",
            "statistics",
            "mask_mode",
            "trials",
            "seed",
            "alpha_level",
            "d_values",
            "q_values",
            "d_exponents",
            "q_exponents",
            "null_trials",
            "out",
        }
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        for key in ("statistics", "d_values", "q_values", "d_exponents", "q_exponents"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        return SweepConfig(**data)


@dataclass(frozen=True)
class SweepCell:
    """One (d, q, statistic) cell of a sweep."""

    d: int
    q: float
    stat: str
    power: float
    power_se: float
    null_lo: float
    null_hi: float
    h1_mean: float
    seed: int


@dataclass(frozen=True)
class SweepResult:
    """All cells plus provenance (config echo, version, wall time)."""

    rows: tuple[SweepCell, ...]
    config: SweepConfig
    version: str
    wall_time_s: float

    def to_json(self) -> str:
        data = {
            "config": json.loads(self.config.to_json()),
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "rows": [asdict(r) for r in self.rows],
        }
        return json.dumps(data, sort_keys=True)


def run_sweep(config: SweepConfig, threads: int = 1) -> SweepResult:
    """Estimate per-cell power over the configured grid.

    Cells are enumerated d-major, then q, then statistic; that order fixes
    the stream indices, so the output is independent of threads.
    """
    start = time.monotonic()
    d_grid = config.resolved_d()
    q_grid = config.resolved_q()
    null_trials = config.resolved_null_trials()
    null_cache: dict[tuple, NullInterval] = {}
    cal_cache: dict[int, Calibration] = {}
    rows: list[SweepCell] = []
    cell_index = 0
    for d in d_grid:
        if d not in cal_cache:
            cal_cache[d] = calibrate(config.p, d)
        for q in q_grid:
            params = ModelParams(n=config.n, m=config.m, p=config.p, q=q, d=d)
            for stat in config.statistics:
                key = (stat, q) if STATISTICS[stat].needs_mask else (stat,)
                if key not in null_cache:
                    null_key = len(null_cache)
                    null_cache[key] = calibrate_null(
                        stat,
                        params,
                        null_trials,
                        lambda t, nk=null_key: substream(config.seed, NULL_STREAM_BASE + nk, t),
                        alpha_level=config.alpha_level,
                        threads=threads,
                    )
                interval = null_cache[key]
                est = estimate_power(
                    stat,
                    params,
                    cal_cache[d],
                    interval,
                    config.trials,
                    lambda t, c=cell_index: substream(config.seed, c, t),
                    threads=threads,
                )
                rows.append(
                    SweepCell(
                        d=d,
                        q=q,
                        stat=stat,
                        power=est.power,
                        power_se=est.std_error,
                        null_lo=interval.lower,
                        null_hi=interval.upper,
                        h1_mean=est.h1_mean,
                        seed=config.seed,
                    )
                )
                cell_index += 1
    return SweepResult(
        rows=tuple(rows),
        config=config,
        version=__version__,
        wall_time_s=time.monotonic() - start,
    )


def rows_to_csv(rows: tuple[SweepCell, ...]) -> str:
    """Render cells in the fixed CSV schema; floats use shortest round-trip."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.d},{r.q!r},{r.stat},{r.power!r},{r.power_se!r},"
            f"{r.null_lo!r},{r.null_hi!r},{r.h1_mean!r},{r.seed}"
        )
    return "\n".join(lines) + "\n"


def read_sweep_csv(path: str) -> tuple[SweepCell, ...]:
    """Parse a sweep CSV written by write_sweep_outputs."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"bad sweep CSV header in {path}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 9:
            raise ValueError(f"{path}:{i}: expected 9 fields, got {len(parts)}")
        rows.append(
            SweepCell(
                d=int(parts[0]),
                q=float(parts[1]),
                stat=parts[2],
                power=float(parts[3]),
                power_se=float(parts[4]),
                null_lo=float(parts[5]),
                null_hi=float(parts[6]),
                h1_mean=float(parts[7]),
                seed=int(parts[8]),
            )
        )
    return tuple(rows)


def write_sweep_outputs(result: SweepResult, out_path: str) -> tuple[str, str]:
    """Write the CSV (deterministic bytes) and a JSON sidecar with provenance.

    The sidecar lives at out_path + ".json" and carries the config echo (with
    n and m for downstream plotting), version, and wall time.
    """
    csv_text = rows_to_csv(result.rows)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    sidecar = out_path + ".json"
    side = {
        "config": json.loads(result.config.to_json()),
        "version": result.version,
        "wall_time_s": result.wall_time_s,
    }
    with open(sidecar, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(side, sort_keys=True, indent=2) + "\n")
    return out_path, sidecar

"""Desk-scale phase-diagram sweep: test power over a (d, q) exponent grid.

Both axes are logarithmic in n (d = n^a, q = n^-b), so the resulting CSV maps
straight onto the phase diagram with the detection boundaries d = n m q^4 and
d = m sqrt(n) q^2. Output is the sweep CSV plus a JSON sidecar carrying the
full configuration; both are byte-stable across repeat runs and worker counts.

Example:
    python3 scripts/run_phase_sweep.py --n 200 --trials 200 --threads 4 \
        --out results/phase.csv
"""

import argparse
import sys

import numpy as np

from rggdetect.sweep import SweepConfig, run_sweep, write_sweep_outputs


def _exp_grid(text):
    """Parse 'start:stop:count' into a tuple of evenly spaced exponents."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise argparse.ArgumentTypeError(f"grid count must be >= 1, got {count}")
    return tuple(round(float(v), 12) for v in np.linspace(start, stop, count))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200, help="left vertex count")
    ap.add_argument("--m", type=int, default=None, help="right vertex count (default: n)")
    ap.add_argument("--p", type=float, default=0.3, help="null edge density")
    ap.add_argument(
        "--stats", default="c4,wedge", help="comma-separated statistic names"
    )
    ap.add_argument("--mode", choices=("unknown", "known"), default="unknown")
    ap.add_argument("--trials", type=int, default=200, help="trials per cell")
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--d-exponents",
        type=_exp_grid,
        default=_exp_grid("0.5:2.5:7"),
        help="d = n^a grid as start:stop:count (default 0.5:2.5:7)",
    )
    ap.add_argument(
        "--q-exponents",
        type=_exp_grid,
        default=_exp_grid("0.0:0.5:5"),
        help="q = n^-b grid as start:stop:count (default 0.0:0.5:5)",
    )
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="phase_sweep.csv")
    ap.add_argument(
        "--dry-run", action="store_true", help="print the resolved grid and exit"
    )
    args = ap.parse_args(argv)

    config = SweepConfig(
        n=args.n,
        m=args.m if args.m is not None else args.n,
        p=args.p,
        statistics=tuple(s.strip() for s in args.stats.split(",") if s.strip()),
        mask_mode=args.mode,
        trials=args.trials,
        seed=args.seed,
        alpha_level=args.alpha,
        d_exponents=args.d_exponents,
        q_exponents=args.q_exponents,
        out=args.out,
    )
    d_grid, q_grid = config.resolved_d(), config.resolved_q()
    cells = len(d_grid) * len(q_grid) * len(config.statistics)
    print(f"n={config.n} m={config.m} p={config.p} mode={config.mask_mode}")
    print(f"d grid ({len(d_grid)}): {list(d_grid)}")
    print(f"q grid ({len(q_grid)}): {[round(q, 6) for q in q_grid]}")
    print(f"{cells} cells at {config.trials} trials each, seed {config.seed}")
    if args.dry_run:
        return 0

    result = run_sweep(config, threads=args.threads)
    for path in write_sweep_outputs(result, args.out):
        print(path)
    print(f"done in {result.wall_time_s:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())

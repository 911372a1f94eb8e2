"""Command line interface.

Subcommands: sample, stat, test, sweep, verify-lambda, verify-stars,
oracle-chi2, calibrate-tau. Exit codes: 0 success, 1 validation or usage
error (also conclusive verification failure), 2 inconclusive verification
(Monte Carlo noise too large to decide). Thread counts come from --threads,
else the RGGDETECT_THREADS environment variable, else 1.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .divergenceoracle import (
    chi2_direct_mc,
    chi2_via_signed_weights,
    known_vs_unknown_contrast,
)
from .fourierweights import unconditional_star_sw_mc, verify_remainder_scaling
from .gaussmodel import (
    ModelParams,
    calibrate,
    compute_tau,
    reference_variance,
    sample_er,
    sample_rgg,
    sample_unknown_mask_model,
)
from .matio import (
    read_bits,
    read_bits_csv,
    write_bits,
    write_bits_csv,
    write_latents,
    write_latents_csv,
)
from .rng import substream
from .signedstats import STATISTICS, evaluate_statistic, run_test
from .sweep import SweepConfig, run_sweep, write_sweep_outputs

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on bad flags; surface a catchable error
    # instead so main can return exit code 1 with usage text.
    def error(self, message: str) -> None:
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return values


def _resolve_threads(flag_value: int | None) -> int:
    if flag_value is not None:
        if flag_value < 1:
            raise ValueError(f"thread count must be >= 1, got {flag_value}")
        return flag_value
    env = os.environ.get("RGGDETECT_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(f"RGGDETECT_THREADS must be an integer, got {env!r}") from exc
        if value < 1:
            raise ValueError(f"RGGDETECT_THREADS must be >= 1, got {value}")
        return value
    return 1


def _read_matrix(path: str) -> np.ndarray:
    if path.endswith(".csv"):
        return read_bits_csv(path)
    return read_bits(path)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rggdetect", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rggdetect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_tau = sub.add_parser("calibrate-tau", help="solve the edge-density threshold")
    p_tau.add_argument("--p", type=float, required=True)
    p_tau.add_argument("--d", type=int, required=True)
    p_tau.add_argument("--json", action="store_true", help="emit tau and sigma_hat as JSON")

    p_sample = sub.add_parser("sample", help="draw a matrix and write it to files")
    p_sample.add_argument("--model", choices=("er", "rgg", "unknown-mask"), required=True)
    p_sample.add_argument("--n", type=int, required=True)
    p_sample.add_argument("--m", type=int, required=True)
    p_sample.add_argument("--p", type=float, required=True)
    p_sample.add_argument("--q", type=float, default=None)
    p_sample.add_argument("--d", type=int, default=None)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", required=True, help="output path prefix")
    p_sample.add_argument("--format", choices=("bits", "csv"), default="bits")
    p_sample.add_argument("--latents", action="store_true", help="also write latent matrices")

    p_stat = sub.add_parser("stat", help="evaluate a statistic on a stored matrix")
    p_stat.add_argument("--statistic", choices=sorted(STATISTICS), required=True)
    p_stat.add_argument("--input", required=True)
    p_stat.add_argument("--p", type=float, required=True)
    p_stat.add_argument("--mask", default=None)

    p_test = sub.add_parser("test", help="two-sided test of a stored matrix against the null")
    p_test.add_argument("--statistic", choices=sorted(STATISTICS), required=True)
    p_test.add_argument("--input", required=True)
    p_test.add_argument("--mask", default=None)
    p_test.add_argument("--p", type=float, required=True)
    p_test.add_argument("--q", type=float, default=1.0)
    p_test.add_argument("--trials", type=int, default=2000)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--threads", type=int, default=None)
    p_test.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    p_sweep = sub.add_parser("sweep", help="run a power sweep from a JSON config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sweep.add_argument("--threads", type=int, default=None)
    p_sweep.add_argument("--out", default=None, help="override the config output path")
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")

    p_vl = sub.add_parser("verify-lambda", help="check the leading-term residual decay in d")
    p_vl.add_argument("--alpha-size", type=int, required=True)
    p_vl.add_argument("--d-grid", type=_int_list, required=True)
    p_vl.add_argument("--rho", type=float, default=3.0)
    p_vl.add_argument("--trials", type=int, default=50)
    p_vl.add_argument("--p", type=float, default=0.3)
    p_vl.add_argument("--seed", type=int, default=0)

    p_vs = sub.add_parser("verify-stars", help="check the unconditional star weight decay in d")
    p_vs.add_argument("--ell", type=int, default=2)
    p_vs.add_argument("--p", type=float, default=0.3)
    p_vs.add_argument("--d-grid", type=_int_list, required=True)
    p_vs.add_argument("--trials", type=int, default=1_000_000)
    p_vs.add_argument("--leaf-space", choices=("scale", "bernoulli", "latent"), default="scale")
    p_vs.add_argument("--seed", type=int, default=0)

    p_oc = sub.add_parser("oracle-chi2", help="cross-check the chi-square identity on a small grid")
    p_oc.add_argument("--n", type=int, required=True)
    p_oc.add_argument("--m", type=int, required=True)
    p_oc.add_argument("--p", type=float, required=True)
    p_oc.add_argument("--q", type=float, required=True)
    p_oc.add_argument("--d", type=int, required=True)
    p_oc.add_argument("--mode", choices=("unknown", "known", "both"), default="both")
    p_oc.add_argument("--trials", type=int, default=1_000_000, help="latent draws for signed weights")
    p_oc.add_argument("--direct-trials", type=int, default=0, help="outcome draws for the direct route (0 skips)")
    p_oc.add_argument("--batches", type=int, default=20)
    p_oc.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_calibrate_tau(args) -> int:
    tau = compute_tau(args.p, args.d)
    if args.json:
        sigma = reference_variance(args.p, args.d, tau)
        print(json.dumps({"p": args.p, "d": args.d, "tau": tau, "sigma_hat": sigma}, sort_keys=True))
    else:
        print(repr(tau))
    return 0


def _cmd_sample(args) -> int:
    rng = substream(args.seed)
    csv = args.format == "csv"
    ext = ".csv" if csv else ".bits"
    write_matrix = write_bits_csv if csv else write_bits
    write_lat = write_latents_csv if csv else write_latents
    lat_ext = ".csv" if csv else ".bin"
    written: list[str] = []

    if args.model == "er":
        matrix = sample_er(args.n, args.m, args.p, rng)
        path = args.out + ext
        write_matrix(path, matrix)
        written.append(path)
    else:
        if args.d is None:
            raise ValueError(f"model {args.model!r} needs --d")
        q = 1.0 if args.model == "rgg" else args.q
        if q is None:
            raise ValueError("model 'unknown-mask' needs --q")
        params = ModelParams(n=args.n, m=args.m, p=args.p, q=q, d=args.d)
        cal = calibrate(args.p, args.d)
        if args.model == "rgg":
            matrix, lat_r, lat_l = sample_rgg(params, cal, rng)
            mask = None
        else:
            draw = sample_unknown_mask_model(params, cal, rng)
            matrix, mask, lat_r, lat_l = draw.matrix, draw.mask, draw.latents_r, draw.latents_l
        path = args.out + ext
        write_matrix(path, matrix)
        written.append(path)
        if mask is not None:
            mask_path = args.out + ".mask" + ext
            write_matrix(mask_path, mask)
            written.append(mask_path)
        if args.latents:
            for suffix, lat in (("latents_r", lat_r), ("latents_l", lat_l)):
                lat_path = f"{args.out}.{suffix}{lat_ext}"
                write_lat(lat_path, lat)
                written.append(lat_path)

    for path in written:
        print(path)
    return 0


def _cmd_stat(args) -> int:
    matrix = _read_matrix(args.input)
    mask = _read_matrix(args.mask) if args.mask else None
    print(repr(evaluate_statistic(args.statistic, matrix, args.p, mask)))
    return 0


def _cmd_test(args) -> int:
    matrix = _read_matrix(args.input)
    mask = _read_matrix(args.mask) if args.mask else None
    params = ModelParams(n=matrix.shape[0], m=matrix.shape[1], p=args.p, q=args.q, d=1)
    report = run_test(
        args.statistic,
        matrix,
        params,
        trials=args.trials,
        seed=args.seed,
        alpha_level=args.alpha,
        mask=mask,
        threads=_resolve_threads(args.threads),
    )
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(args.out)
    else:
        print(text)
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = SweepConfig.from_json(fh.read())
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = args.out or config.out
    if out is None:
        raise ValueError("no output path: set 'out' in the config or pass --out")
    result = run_sweep(config, threads=_resolve_threads(args.threads))
    if args.format == "csv":
        csv_path, sidecar = write_sweep_outputs(result, out)
        print(csv_path)
        print(sidecar)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(result.to_json() + "\n")
        print(out)
    return 0


def _cmd_verify_lambda(args) -> int:
    report = verify_remainder_scaling(
        args.alpha_size,
        args.d_grid,
        args.rho,
        args.trials,
        substream(args.seed),
        p=args.p,
    )
    print(report.to_json())
    if report.inconclusive:
        return 2
    return 0 if report.passed else 1


def _cmd_verify_stars(args) -> int:
    rng = substream(args.seed)
    estimates = [
        unconditional_star_sw_mc(args.ell, args.p, d, args.trials, rng, leaf_space=args.leaf_space)
        for d in args.d_grid
    ]
    checks = []
    passed = True
    inconclusive = False
    for (d1, e1), (d2, e2) in zip(
        zip(args.d_grid, estimates), zip(args.d_grid[1:], estimates[1:])
    ):
        slack = 3.0 * math.sqrt((e1.std_error / 2.5) ** 2 + e2.std_error**2)
        bound = abs(e1.value) / 2.5 + slack
        ok = abs(e2.value) <= bound
        resolvable = abs(e1.value) >= 6.0 * e1.std_error
        checks.append(
            {
                "d_from": d1,
                "d_to": d2,
                "value_from": e1.value,
                "value_to": e2.value,
                "bound": bound,
                "passed": ok,
                "resolvable": resolvable,
            }
        )
        if not ok:
            if resolvable:
                passed = False
            else:
                inconclusive = True
    report = {
        "ell": args.ell,
        "p": args.p,
        "d_grid": list(args.d_grid),
        "trials": args.trials,
        "leaf_space": args.leaf_space,
        "values": [e.value for e in estimates],
        "std_errors": [e.std_error for e in estimates],
        "checks": checks,
        "passed": passed and not inconclusive,
        "inconclusive": inconclusive,
    }
    print(json.dumps(report, sort_keys=True))
    if inconclusive:
        return 2
    return 0 if passed else 1


def _cmd_oracle_chi2(args) -> int:
    params = ModelParams(n=args.n, m=args.m, p=args.p, q=args.q, d=args.d)
    cal = calibrate(args.p, args.d)
    rng = substream(args.seed)
    modes = ("unknown", "known") if args.mode == "both" else (args.mode,)
    output: dict = {"params": dataclasses.asdict(params)}
    inconclusive = False
    for mode in modes:
        sw = chi2_via_signed_weights(params, cal, mode, args.trials, rng, batches=args.batches)
        entry: dict = {"signed_weight_sum": json.loads(sw.to_json())}
        inconclusive = inconclusive or sw.inconclusive
        if args.direct_trials > 0:
            direct = chi2_direct_mc(params, cal, mode, args.direct_trials, rng, batches=args.batches)
            gap = abs(direct.value - sw.value)
            combined = math.sqrt(direct.std_error**2 + sw.std_error**2)
            entry["direct"] = json.loads(direct.to_json())
            entry["agreement_z"] = gap / combined if combined > 0 else 0.0
        output[mode] = entry
    if args.mode == "both":
        contrast = known_vs_unknown_contrast(params, cal, args.trials, rng, batches=args.batches)
        output["contrast"] = json.loads(contrast.to_json())
    print(json.dumps(output, sort_keys=True))
    return 2 if inconclusive else 0


_COMMANDS = {
    "calibrate-tau": _cmd_calibrate_tau,
    "sample": _cmd_sample,
    "stat": _cmd_stat,
    "test": _cmd_test,
    "sweep": _cmd_sweep,
    "verify-lambda": _cmd_verify_lambda,
    "verify-stars": _cmd_verify_stars,
    "oracle-chi2": _cmd_oracle_chi2,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

"""Render a power phase diagram from sweep CSV output.

The sidecar JSON written next to the CSV supplies n, m, and the mask mode;
--mode overrides the mode (the boundary curves swap q^2 for q with a known
mask). Exits 1 with the offending file position on malformed input.

Example:
    python3 plotkit/scripts/plot_phase_diagram.py --input phase.csv \
        --stat c4 --output phase_c4.png
"""

import argparse
import sys

from plotkit.phase import render_phase_diagram


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True, help="sweep CSV path")
    ap.add_argument("--output", required=True, help="PNG path to write")
    ap.add_argument("--stat", default=None, help="statistic to plot (default: the only one)")
    ap.add_argument(
        "--mode",
        choices=("known", "unknown"),
        default=None,
        help="mask mode for the boundary curves (default: from the sidecar)",
    )
    ap.add_argument("--sidecar", default=None, help="sidecar JSON path (default: input + .json)")
    args = ap.parse_args(argv)
    try:
        render_phase_diagram(
            args.input, args.output, stat=args.stat, mode=args.mode, sidecar_path=args.sidecar
        )
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())

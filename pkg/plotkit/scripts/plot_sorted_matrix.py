"""Render an adjacency matrix sorted by the first latent coordinate.

Takes the packed bit-matrix file and the two latent files written by the
sampler, permutes rows and columns into ascending first-coordinate order,
and writes the upscaled heatmap. Exits 1 on malformed or mismatched files.

Example:
    python3 plotkit/scripts/plot_sorted_matrix.py --input g.bits \
        --row-latents g.latents_r.bin --col-latents g.latents_l.bin \
        --output g_sorted.png
"""

import argparse
import sys

from plotkit.sortplot import render_sorted_matrix


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True, help="bit matrix path")
    ap.add_argument("--row-latents", required=True, help="left/row latent matrix path")
    ap.add_argument("--col-latents", required=True, help="right/column latent matrix path")
    ap.add_argument("--output", required=True, help="PNG path to write")
    args = ap.parse_args(argv)
    try:
        render_sorted_matrix(args.input, args.row_latents, args.col_latents, args.output)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())

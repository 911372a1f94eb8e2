"""Figure rendering for masked bipartite graph detection experiments.

Consumes the experiment toolkit's documented file formats (sweep CSV with
JSON sidecar, packed bit matrices, float64 latent matrices) and renders
deterministic PNGs: phase-diagram heatmaps with detection boundary curves,
and adjacency matrices sorted by latent position.
"""

__version__ = "0.1.0"

from .formats import SweepCsvRow, read_bits, read_latents, read_sidecar, read_sweep_csv
from .phase import compose_phase_diagram, render_phase_diagram
from .pngio import encode_png, write_png
from .sortplot import (
    adjacent_row_correlation,
    compose_sorted,
    render_sorted_matrix,
    sort_permutation,
)

__all__ = [
    "SweepCsvRow",
    "read_bits",
    "read_latents",
    "read_sidecar",
    "read_sweep_csv",
    "compose_phase_diagram",
    "render_phase_diagram",
    "encode_png",
    "write_png",
    "adjacent_row_correlation",
    "compose_sorted",
    "render_sorted_matrix",
    "sort_permutation",
]

"""collarlab: a numerical laboratory for almost-harmonic maps on degenerating domains.

The package builds map families on hyperbolic collars and flat tori,
measures their tension against the decay thresholds that separate
geodesic-converging necks from the degenerate alternatives, and exports
the sweep data consumed by the plotting frontend.
"""

from .analysis import (
    DecompositionReport,
    GapDecomposition,
    connecting_curve,
    curve_tension,
    decay_terms,
    decompose_neck,
    geodesic_deviation,
    verify_lemma_suite,
)
from .experiments import (
    SweepRecord,
    SweepResult,
    fit_rate,
    measure_map,
    run_sweep,
    write_records_csv,
    write_summary_json,
)
from .families import FamilySpec, bubble_map, curve_sweep, glued_map
from .field import MapField, energy_on_window, high_energy_set, tension_l2
from .geometry import ELL_MAX, CollarGeometry, TorusGeometry, collar_half_length

__version__ = "0.1.0"

__all__ = [
    "ELL_MAX",
    "CollarGeometry",
    "DecompositionReport",
    "FamilySpec",
    "GapDecomposition",
    "MapField",
    "SweepRecord",
    "SweepResult",
    "TorusGeometry",
    "bubble_map",
    "collar_half_length",
    "connecting_curve",
    "curve_sweep",
    "curve_tension",
    "decay_terms",
    "decompose_neck",
    "energy_on_window",
    "fit_rate",
    "geodesic_deviation",
    "glued_map",
    "high_energy_set",
    "measure_map",
    "run_sweep",
    "tension_l2",
    "verify_lemma_suite",
    "write_records_csv",
    "write_summary_json",
    "__version__",
]

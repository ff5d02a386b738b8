"""Ladder sweeps, decay-rate fits, and threshold classification.

A sweep builds one family at every rung of a degeneration ladder, runs the
neck decomposition and curve extraction on each map, and records a fixed
set of scalars.  Rate fits are least squares in log-log coordinates, and
the classification reduces a sweep to one of five labels describing how
the connecting curves behave as the geodesic shrinks.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .analysis import (
    _window_indices,
    arclength_reparametrize,
    connecting_curve,
    curve_tension,
    decay_terms,
    decompose_neck,
    geodesic_deviation,
)
from .families import FamilySpec
from .field import MapField, energy_on_window, tension_l2

__all__ = [
    "HYPERBOLIC_LADDER",
    "TORUS_LADDER",
    "RateFit",
    "SweepRecord",
    "SweepResult",
    "classify",
    "fit_rate",
    "measure_map",
    "run_sweep",
    "write_curve_csv",
    "write_records_csv",
]

HYPERBOLIC_LADDER = (0.2, 0.1, 0.05, 0.025, 0.0125)
TORUS_LADDER = (50.0, 100.0, 200.0)

MARGINS = (4.0, 8.0, 16.0)

CSV_COLUMNS = (
    "ell",
    "height",
    "tension_l2",
    "tension_scaled",
    "curve_half_length",
    "curve_tension_l1",
    "curve_tension_l2",
    "geodesic_deviation",
    "case",
    "decay_tension",
    "decay_curve_energy",
    "decay_angular",
    "decay_mixed",
    "margin_energy_4",
    "margin_energy_8",
    "margin_energy_16",
    "margin_osc_4",
    "margin_osc_8",
    "margin_osc_16",
)


@dataclass(frozen=True)
class RateFit:
    """Least-squares power law y ~ x^slope with the slope's standard error."""

    slope: float
    intercept: float
    stderr: float
    n: int


def fit_rate(x, y) -> RateFit:
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("rate fit needs at least two samples")
    design = np.stack([lx, np.ones_like(lx)], axis=-1)
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = ly - design @ coef
    if lx.size > 2:
        var = float(resid @ resid) / (lx.size - 2) / float(((lx - lx.mean()) ** 2).sum())
        stderr = math.sqrt(var)
    else:
        stderr = 0.0
    return RateFit(slope=slope, intercept=intercept, stderr=stderr, n=int(lx.size))


@dataclass(frozen=True)
class SweepRecord:
    ell: float
    height: float
    tension_l2: float
    tension_scaled: float
    curve_half_length: float
    curve_tension_l1: float
    curve_tension_l2: float
    geodesic_deviation: float
    case: str
    decay_tension: float
    decay_curve_energy: float
    decay_angular: float
    decay_mixed: float
    margin_energy_4: float
    margin_energy_8: float
    margin_energy_16: float
    margin_osc_4: float
    margin_osc_8: float
    margin_osc_16: float


def _oscillation_between(field: MapField, lo: float, hi: float) -> float:
    _, idx = _window_indices(field, lo, hi)
    if idx.size == 0:
        return 0.0
    values = field.values[idx].reshape(-1, field.values.shape[-1])
    return float(np.linalg.norm(values.max(axis=0) - values.min(axis=0)))


def measure_map(field: MapField, delta_override: float | None = None) -> SweepRecord:
    """All per-map scalars: tension, extracted curve, decay terms, margins."""
    report = decompose_neck(field, delta_override=delta_override)
    best = report.best()
    tension = tension_l2(field)

    half_length = 0.0
    tau_l1 = tau_l2 = deviation = math.nan
    if best.case == "threshold" and best.curve_width > 0.0:
        _, points = connecting_curve(field, best.curve_start, best.curve_end)
        curve = arclength_reparametrize(points, field.h_s, field.target)
        comparison = geodesic_deviation(curve, field.target)
        tau = np.linalg.norm(curve_tension(curve, field.target), axis=-1)
        half_length = curve.half_length
        deviation = comparison.deviation
        tau_l1 = float(np.trapezoid(tau, curve.t))
        tau_l2 = math.sqrt(float(np.trapezoid(tau**2, curve.t)))

    terms = decay_terms(field, best.curve_start, best.curve_end, report.velocity_floor)

    margins = {}
    g0, g1 = best.gap
    for k in MARGINS:
        lo, hi = g0 + k, g1 - k
        key = str(int(k))
        if hi - lo <= 0.0:
            margins["energy_" + key] = 0.0
            margins["osc_" + key] = 0.0
        else:
            margins["energy_" + key] = energy_on_window(field, lo, hi)
            margins["osc_" + key] = _oscillation_between(field, lo, hi)

    return SweepRecord(
        ell=field.sys_length(),
        height=field.height if field.metric == "torus" else math.nan,
        tension_l2=tension,
        tension_scaled=report.scaled_tension,
        curve_half_length=half_length,
        curve_tension_l1=tau_l1,
        curve_tension_l2=tau_l2,
        geodesic_deviation=deviation,
        case=best.case,
        decay_tension=terms["decay_tension"],
        decay_curve_energy=terms["decay_curve_energy"],
        decay_angular=terms["decay_angular"],
        decay_mixed=terms["decay_mixed"],
        margin_energy_4=margins["energy_4"],
        margin_energy_8=margins["energy_8"],
        margin_energy_16=margins["energy_16"],
        margin_osc_4=margins["osc_4"],
        margin_osc_8=margins["osc_8"],
        margin_osc_16=margins["osc_16"],
    )


def classify(records) -> str:
    """Five-way label for a ladder of records, checked in fixed order.

    trivial-neck: the extracted curve has shrunk away by the last rung.
    non-geodesic: every extracted curve stays far from its geodesic.
    growing-length: curves keep lengthening down the ladder.
    finite-geodesic: curves settle on a fixed-length, near-geodesic arc.
    Anything else is inconclusive.
    """
    recs = sorted(records, key=lambda r: -r.ell)
    if not recs:
        return "inconclusive"
    lengths = [r.curve_half_length for r in recs]
    deviations = [r.geodesic_deviation for r in recs]
    c_first, c_last = lengths[0], lengths[-1]
    if c_last <= 0.05 and c_last <= c_first * 1.1 + 1e-12:
        return "trivial-neck"
    finite = [d for d in deviations if not math.isnan(d)]
    if finite and min(finite) >= 0.1:
        return "non-geodesic"
    if c_first > 0.0 and c_last / c_first >= 1.5:
        return "growing-length"
    positive = [c for c in lengths if c > 0.0]
    stable = bool(positive) and max(positive) / min(positive) <= 1.5 and len(positive) == len(lengths)
    if stable and not math.isnan(deviations[-1]) and deviations[-1] <= 0.05:
        return "finite-geodesic"
    return "inconclusive"


@dataclass
class SweepResult:
    family: FamilySpec
    ladder: tuple
    records: list
    fits: dict
    classification: str
    wall_time: float
    delta_override: float | None = None
    expected_label: str | None = None

    @property
    def matches_expectation(self) -> bool | None:
        if self.expected_label is None:
            return None
        return self.classification == self.expected_label

    def to_summary(self) -> dict:
        return {
            "family": {
                "name": self.family.name,
                "kind": self.family.kind,
                "params": dict(self.family.params),
                "length_scale": self.family.length_scale,
            },
            "ladder": list(self.ladder),
            "delta_override": self.delta_override,
            "wall_time": self.wall_time,
            "classification": self.classification,
            "expected_label": self.expected_label,
            "matches_expectation": self.matches_expectation,
            "fits": {name: asdict(f) for name, f in self.fits.items()},
            "records": [asdict(r) for r in self.records],
        }


def _worker_count() -> int:
    raw = os.environ.get("COLLAR_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(
    family: FamilySpec,
    ladder=None,
    *,
    delta_override: float | None = None,
    expected_label: str | None = None,
) -> SweepResult:
    """Measure one family at every rung of its ladder.

    Torus families take the ladder as domain heights, hyperbolic ones as
    geodesic lengths.  Rungs are independent, so they run on a small thread
    pool sized by COLLAR_LAB_THREADS (default 1); records keep ladder order
    either way.
    """
    if ladder is None:
        ladder = TORUS_LADDER if family.domain == "torus" else HYPERBOLIC_LADDER
    ladder = tuple(float(v) for v in ladder)

    def rung(value: float) -> SweepRecord:
        if family.domain == "torus":
            built = family.build(height=value)
        else:
            built = family.build(ell=value)
        return measure_map(built, delta_override=delta_override)

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        records = list(pool.map(rung, ladder))
    wall = time.perf_counter() - t0

    fits = {}
    ells = [r.ell for r in records]
    if len(records) >= 2:
        for name in ("tension_l2", "tension_scaled"):
            vals = [getattr(r, name) for r in records]
            if all(v > 0.0 and math.isfinite(v) for v in vals):
                fits[name] = fit_rate(ells, vals)
    return SweepResult(
        family=family,
        ladder=ladder,
        records=records,
        fits=fits,
        classification=classify(records),
        wall_time=wall,
        delta_override=delta_override,
        expected_label=expected_label,
    )


# --- delimited output -----------------------------------------------------


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_records_csv(records, path) -> None:
    """Fixed-column CSV of sweep records; missing values spelled nan.

    Deliberately excludes timings so repeated runs produce identical bytes.
    """
    lines = [",".join(CSV_COLUMNS)]
    for rec in records:
        row = asdict(rec)
        lines.append(",".join(_format_cell(row[col]) for col in CSV_COLUMNS))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_curve_csv(curve, comparison, target, path) -> None:
    """Per-sample table of the reparametrized curve and its geodesic."""
    dim = curve.points.shape[1]
    tau = np.linalg.norm(curve_tension(curve, target), axis=-1)
    cols = (
        ["t"]
        + [f"p{k}" for k in range(dim)]
        + ["tau_norm"]
        + [f"g{k}" for k in range(dim)]
        + ["gap"]
    )
    lines = [",".join(cols)]
    for i in range(curve.t.size):
        cells = [curve.t[i], *curve.points[i], tau[i], *comparison.geodesic_points[i], comparison.pointwise[i]]
        lines.append(",".join(_format_cell(c) for c in cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(result: SweepResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")

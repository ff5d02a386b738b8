"""Render sweep and curve exports into figures.

Three plot kinds: ``decay`` (log-log rate plot with a fitted slope),
``curve3d`` (the extracted neck curve on the unit sphere next to its
comparison geodesic), and ``deviation`` (geodesic deviation down the
ladder, labelled with the sweep's classification).  Rendering is
read-only and deterministic: fixed inputs and options give byte-identical
SVG output.
"""

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import read_summary, read_table, require_columns

KINDS = ("decay", "curve3d", "deviation")

# stable ids inside the SVG; without a salt matplotlib derives them from
# object addresses and repeated renders differ
matplotlib.rcParams["svg.hashsalt"] = "collarplots"


class PlotError(Exception):
    """A job is malformed in a way column checks cannot express."""


@dataclass(frozen=True)
class PlotJob:
    inputs: tuple
    kind: str
    out: str
    x_column: str = "ell"
    y_column: str = "tension_l2"
    reference_slope: float | None = None
    fit: bool = True
    summary: str | None = None
    title: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        if self.kind not in KINDS:
            raise PlotError(f"unknown plot kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise PlotError("a plot job needs at least one input CSV")
        suffix = str(self.out).rsplit(".", 1)[-1].lower()
        if suffix not in ("svg", "png"):
            raise PlotError(f"output must be .svg or .png, got {self.out!r}")


@dataclass(frozen=True)
class RenderInfo:
    out: str
    kind: str
    annotation: str
    slope: float | None = None
    classification: str | None = None
    max_gap: float | None = None
    notes: tuple = field(default_factory=tuple)


def _fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    # same least squares the laboratory's rate fit uses, on the same logs
    lx, ly = np.log(x), np.log(y)
    design = np.stack([lx, np.ones_like(lx)], axis=-1)
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    return float(coef[0]), float(coef[1])


def _positive_pairs(table, job):
    x = np.asarray(table[job.x_column], dtype=float)
    y = np.asarray(table[job.y_column], dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if keep.sum() < 2:
        raise PlotError(
            f"decay plot needs at least two positive finite "
            f"({job.x_column}, {job.y_column}) pairs, found {int(keep.sum())}"
        )
    order = np.argsort(x[keep])
    return x[keep][order], y[keep][order]


def _save(fig, job) -> None:
    if str(job.out).lower().endswith(".svg"):
        # drop the creation date so repeated renders byte-match
        fig.savefig(job.out, metadata={"Date": None})
    else:
        fig.savefig(job.out)
    plt.close(fig)


def _render_decay(job: PlotJob) -> RenderInfo:
    table = read_table(job.inputs[0])
    require_columns(table, (job.x_column, job.y_column), job.inputs[0])
    x, y = _positive_pairs(table, job)

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(x, y, "o", color="tab:blue", label=job.y_column)
    annotation = ""
    slope = None
    if job.fit:
        slope, intercept = _fit_slope(x, y)
        ax.loglog(
            x,
            np.exp(intercept) * x**slope,
            "-",
            color="tab:blue",
            alpha=0.7,
            label=f"fit slope = {slope:.2f}",
        )
        annotation = f"slope = {slope:.2f}"
    if job.reference_slope is not None:
        ref = job.reference_slope
        scale = y[0] / x[0] ** ref
        ax.loglog(
            x,
            scale * x**ref,
            "--",
            color="tab:gray",
            label=f"reference slope {ref:g}",
        )
    if annotation:
        ax.annotate(annotation, xy=(0.05, 0.92), xycoords="axes fraction")
    ax.set_xlabel(job.x_column)
    ax.set_ylabel(job.y_column)
    ax.set_title(job.title or f"{job.y_column} vs {job.x_column}")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    _save(fig, job)
    return RenderInfo(out=job.out, kind=job.kind, annotation=annotation, slope=slope)


def _render_curve3d(job: PlotJob) -> RenderInfo:
    table = read_table(job.inputs[0])
    needed = ("t", "p0", "p1", "p2", "g0", "g1", "g2", "gap")
    require_columns(table, needed, job.inputs[0])
    gap = float(np.nanmax(np.asarray(table["gap"], dtype=float)))

    fig = plt.figure(figsize=(5.0, 4.2))
    ax = fig.add_subplot(projection="3d")
    u = np.linspace(0.0, 2.0 * math.pi, 25)
    v = np.linspace(0.0, math.pi, 13)
    ax.plot_wireframe(
        np.outer(np.cos(u), np.sin(v)),
        np.outer(np.sin(u), np.sin(v)),
        np.outer(np.ones_like(u), np.cos(v)),
        color="0.85",
        linewidth=0.3,
    )
    ax.plot(table["p0"], table["p1"], table["p2"], color="tab:blue", label="neck curve")
    ax.plot(
        table["g0"],
        table["g1"],
        table["g2"],
        "--",
        color="tab:red",
        label="comparison geodesic",
    )
    caption = f"max gap = {gap:.1e}"
    ax.set_title(job.title or f"connecting curve ({caption})")
    ax.set_box_aspect((1, 1, 1))
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    _save(fig, job)
    return RenderInfo(out=job.out, kind=job.kind, annotation=caption, max_gap=gap)


def _render_deviation(job: PlotJob) -> RenderInfo:
    table = read_table(job.inputs[0])
    require_columns(table, (job.x_column, "geodesic_deviation", "case"), job.inputs[0])
    x = np.asarray(table[job.x_column], dtype=float)
    y = np.asarray(table["geodesic_deviation"], dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    label = None
    if job.summary is not None:
        label = str(read_summary(job.summary)["classification"])

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if keep.any():
        order = np.argsort(x[keep])
        ax.loglog(x[keep][order], y[keep][order], "o-", color="tab:green")
    dropped = int((~keep).sum())
    notes = (f"{dropped} rung(s) without a finite deviation",) if dropped else ()
    annotation = label or ""
    if label:
        ax.annotate(
            f"classification: {label}",
            xy=(0.05, 0.92),
            xycoords="axes fraction",
        )
    ax.set_xlabel(job.x_column)
    ax.set_ylabel("geodesic deviation")
    ax.set_title(job.title or "geodesic deviation down the ladder")
    fig.tight_layout()
    _save(fig, job)
    return RenderInfo(
        out=job.out,
        kind=job.kind,
        annotation=annotation,
        classification=label,
        notes=notes,
    )


def render(job: PlotJob) -> RenderInfo:
    """Render one job to its output path and report what was drawn."""
    if job.kind == "decay":
        return _render_decay(job)
    if job.kind == "curve3d":
        return _render_curve3d(job)
    return _render_deviation(job)

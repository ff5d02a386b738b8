"""Discrete maps from a cylinder into a target manifold, and their invariants.

A MapField samples u on a uniform grid: rows are s-slices, columns are the
periodic theta direction (theta_j = 2 pi j / n_theta).  Three metric tags
control how the domain is interpreted:

  * "hyperbolic": collar coordinates with conformal factor rho(s) from the
    geodesic length ell; s need not span the whole collar.
  * "torus": flat torus of the given height, s-periodic with a twist; the
    row beyond the seam is the first row shifted by the twist.
  * "euclidean": plain cylinder.  Quantities that need rho refuse this tag.

The Dirichlet energy and the euclidean tension field ignore rho entirely
(conformal invariance in two dimensions), so they are tag-independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import lfilter

from .geometry import CollarGeometry, TorusGeometry, collar_half_length
from .targets import get_target

__all__ = [
    "HighEnergySet",
    "MapField",
    "MetricTagError",
    "collar_s_grid",
    "energy",
    "energy_profile",
    "energy_on_window",
    "fiber_mean",
    "high_energy_set",
    "hopf_profile",
    "mean_speed_profile",
    "oscillation",
    "tension_euclidean",
    "tension_g",
    "tension_l2",
    "tension_kernel_profile",
    "theta_energy_profile",
    "torus_s_grid",
]

METRICS = ("hyperbolic", "torus", "euclidean")

# E(u, [s-1, s+1]) at or above this marks s as high-energy
ENERGY_THRESHOLD = 0.25


class MetricTagError(ValueError):
    """Operation needs a conformal factor the metric tag does not provide."""


def collar_s_grid(ell: float, h_s: float = 0.1, half_width: float | None = None) -> np.ndarray:
    """Uniform symmetric s-grid on the collar, step exactly h_s.

    Covers [-half_width, half_width] clipped to the collar; with no
    half_width, the largest grid multiple of h_s inside [-X, X].
    """
    limit = collar_half_length(ell)
    if half_width is not None:
        limit = min(limit, float(half_width))
    n = int(math.floor(limit / h_s + 1e-12))
    return np.arange(-n, n + 1) * h_s


def torus_s_grid(height: float, h_s: float = 0.05) -> np.ndarray:
    """Uniform s-grid on [0, height), step adjusted so the seam lands on it."""
    n = max(4, int(round(height / h_s)))
    return np.arange(n) * (height / n)


@dataclass
class MapField:
    """Gridded map into a target manifold.

    values has shape (n_s, n_theta, ambient_dim).  For the torus tag the
    twist must be a whole number of theta columns so that seam stencils are
    exact shifts.
    """

    s: np.ndarray
    values: np.ndarray
    target: object
    metric: str
    ell: float | None = None
    height: float | None = None
    twist: float = 0.0
    _twist_cols: int = dataclass_field(init=False, default=0, repr=False)

    def __post_init__(self) -> None:
        self.s = np.asarray(self.s, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.metric not in METRICS:
            raise MetricTagError(f"unknown metric tag {self.metric!r}")
        if self.values.ndim != 3 or self.values.shape[0] != self.s.size:
            raise ValueError(
                f"values shape {self.values.shape} does not match {self.s.size} s-samples"
            )
        if self.values.shape[2] != self.target.ambient_dim:
            raise ValueError(
                f"ambient dim {self.values.shape[2]} != target {self.target.ambient_dim}"
            )
        steps = np.diff(self.s)
        if self.s.size < 4 or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("s-grid must be uniform with at least 4 samples")
        if self.metric == "hyperbolic":
            if self.ell is None:
                raise ValueError("hyperbolic tag requires ell")
            CollarGeometry(self.ell)  # validates range
        if self.metric == "torus":
            if self.height is None:
                raise ValueError("torus tag requires height")
            TorusGeometry(height=self.height, twist=self.twist)
            if abs(self.s[0]) > 1e-9 or abs(self.s[-1] + self.h_s - self.height) > 1e-9 * self.height:
                raise ValueError("torus s-grid must cover [0, height) ending one step short")
            cols = self.twist / self.h_theta
            if abs(cols - round(cols)) > 1e-9:
                raise ValueError(
                    f"twist {self.twist} is not a whole number of theta columns"
                )
            self._twist_cols = int(round(cols))

    # --- grid metadata -------------------------------------------------

    @property
    def n_s(self) -> int:
        return self.s.size

    @property
    def n_theta(self) -> int:
        return self.values.shape[1]

    @property
    def h_s(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def h_theta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.h_theta

    def rho(self) -> np.ndarray:
        """Conformal factor sampled on the s-grid, shape (n_s,)."""
        if self.metric == "hyperbolic":
            return CollarGeometry(self.ell).rho(self.s)
        if self.metric == "torus":
            geo = TorusGeometry(height=self.height, twist=self.twist)
            return np.full(self.n_s, geo.rho)
        raise MetricTagError("euclidean tag carries no conformal factor")

    def sys_length(self) -> float:
        """Length of the central closed geodesic (2 pi min rho)."""
        if self.metric == "hyperbolic":
            return self.ell
        if self.metric == "torus":
            return TorusGeometry(height=self.height, twist=self.twist).sys_length
        raise MetricTagError("euclidean tag carries no geodesic length")

    # --- derivatives ----------------------------------------------------

    def _padded(self, pad: int) -> np.ndarray:
        """values with `pad` twisted ghost rows on each side (torus only)."""
        rows_lo = [
            np.roll(self.values[-i], -self._twist_cols, axis=0) for i in range(pad, 0, -1)
        ]
        rows_hi = [
            np.roll(self.values[i], self._twist_cols, axis=0) for i in range(pad)
        ]
        return np.concatenate([np.stack(rows_lo), self.values, np.stack(rows_hi)])

    def du_ds(self) -> np.ndarray:
        u, h = self.values, self.h_s
        if self.metric == "torus":
            ext = self._padded(1)
            return (ext[2:] - ext[:-2]) / (2 * h)
        out = np.empty_like(u)
        out[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        out[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
        out[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
        return out

    def d2u_ds2(self) -> np.ndarray:
        u, h = self.values, self.h_s
        if self.metric == "torus":
            ext = self._padded(1)
            return (ext[2:] - 2 * u + ext[:-2]) / h**2
        out = np.empty_like(u)
        out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        out[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
        out[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
        return out

    def du_dtheta(self) -> np.ndarray:
        u, h = self.values, self.h_theta
        return (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * h)

    def d2u_dtheta2(self) -> np.ndarray:
        u, h = self.values, self.h_theta
        return (np.roll(u, -1, axis=1) - 2 * u + np.roll(u, 1, axis=1)) / h**2

    def du_dstheta(self) -> np.ndarray:
        """Mixed derivative: periodic theta stencil, then the s stencil."""
        utheta = self.du_dtheta()
        return MapField.du_ds(self._with_values(utheta))

    def _with_values(self, values: np.ndarray) -> "MapField":
        clone = object.__new__(MapField)
        clone.__dict__.update(self.__dict__)
        clone.values = values
        return clone

    # --- serialization ---------------------------------------------------

    def save(self, path) -> None:
        header = {
            "format": "collarlab-mapfield",
            "version": 1,
            "target": self.target.name,
            "metric": self.metric,
            "ell": self.ell,
            "height": self.height,
            "twist": self.twist,
        }
        np.savez(path, header=json.dumps(header), s=self.s, values=self.values)

    @classmethod
    def load(cls, path) -> "MapField":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != "collarlab-mapfield":
                raise ValueError(f"{path}: not a collarlab map file")
            return cls(
                s=data["s"],
                values=data["values"],
                target=get_target(header["target"]),
                metric=header["metric"],
                ell=header["ell"],
                height=header["height"],
                twist=header["twist"] or 0.0,
            )


# --- integration helpers ---------------------------------------------------


def integrate_theta(values: np.ndarray, axis: int = 1) -> np.ndarray:
    """Integral over the periodic theta direction (rectangle rule, exact)."""
    return values.sum(axis=axis) * (2.0 * math.pi / values.shape[axis])


def integrate_s(field: MapField, profile: np.ndarray) -> float:
    """Integral of a per-slice profile over s; periodic sum on the torus."""
    if field.metric == "torus":
        return float(profile.sum() * field.h_s)
    return float(np.trapezoid(profile, field.s))


# --- tension and energy -----------------------------------------------------


def tension_euclidean(field: MapField) -> np.ndarray:
    """Euclidean tension u_ss + u_tt + A(u)(u_s, u_s) + A(u)(u_t, u_t)."""
    u_s = field.du_ds()
    u_t = field.du_dtheta()
    A = field.target.second_fundamental_form
    return (
        field.d2u_ds2()
        + field.d2u_dtheta2()
        + A(field.values, u_s, u_s)
        + A(field.values, u_t, u_t)
    )


def tension_g(field: MapField) -> np.ndarray:
    """Tension in the domain metric, rho^{-2} tau_euclidean."""
    rho = field.rho()
    return tension_euclidean(field) / rho[:, None, None] ** 2


def tension_l2(field: MapField) -> float:
    """L^2 norm of the metric tension: (int rho^{-2} |tau_eucl|^2 ds dtheta)^(1/2)."""
    rho = field.rho()
    tau_sq = integrate_theta(np.sum(tension_euclidean(field) ** 2, axis=-1))
    return math.sqrt(integrate_s(field, tau_sq / rho**2))


def energy_profile(field: MapField) -> np.ndarray:
    """Theta-integrated energy density e(s) = 1/2 int |u_s|^2 + |u_theta|^2."""
    dens = np.sum(field.du_ds() ** 2 + field.du_dtheta() ** 2, axis=-1)
    return 0.5 * integrate_theta(dens)


def energy(field: MapField) -> float:
    """Dirichlet energy; conformally invariant, so metric tag never enters."""
    return integrate_s(field, energy_profile(field))


def energy_on_window(field: MapField, lo: float, hi: float) -> float:
    """Energy over the strip [lo, hi] x S^1.

    Uses the cumulative trapezoid of the energy profile with linear
    interpolation at fractional endpoints.  Non-periodic windows clamp to
    the grid; torus windows wrap.
    """
    return float(_window_integrals(field, energy_profile(field), np.array([lo]), np.array([hi]))[0])


def _window_integrals(field: MapField, profile, lo_arr, hi_arr) -> np.ndarray:
    s = field.s
    if field.metric == "torus":
        period = field.height
        s_ext = np.concatenate([s - period, s, s + period, [s[0] + 2 * period]])
        p_ext = np.concatenate([profile, profile, profile, [profile[0]]])
        cum = cumulative_trapezoid(p_ext, s_ext, initial=0.0)
        span = np.minimum(hi_arr - lo_arr, period)
        lo_arr = np.mod(lo_arr, period)
        hi_arr = lo_arr + span
        return np.interp(hi_arr, s_ext, cum) - np.interp(lo_arr, s_ext, cum)
    cum = cumulative_trapezoid(profile, s, initial=0.0)
    lo_arr = np.clip(lo_arr, s[0], s[-1])
    hi_arr = np.clip(hi_arr, s[0], s[-1])
    return np.interp(hi_arr, s, cum) - np.interp(lo_arr, s, cum)


# --- slice profiles ----------------------------------------------------------


def theta_energy_profile(field: MapField) -> np.ndarray:
    """Angular energy vartheta(s) = int |u_theta|^2 dtheta."""
    return integrate_theta(np.sum(field.du_dtheta() ** 2, axis=-1))


def hopf_profile(field: MapField) -> np.ndarray:
    """Radial-angular imbalance int (|u_s|^2 - |u_theta|^2) dtheta."""
    diff = np.sum(field.du_ds() ** 2 - field.du_dtheta() ** 2, axis=-1)
    return integrate_theta(diff)


def mean_speed_profile(field: MapField) -> np.ndarray:
    """Fiberwise mean speed alpha(s), average of |u_s| over theta."""
    speed = np.linalg.norm(field.du_ds(), axis=-1)
    return speed.mean(axis=1)


def fiber_mean(field: MapField) -> np.ndarray:
    """Average of u over each theta circle, shape (n_s, ambient_dim)."""
    return field.values.mean(axis=1)


def oscillation(field: MapField, s_window: tuple[float, float] | None = None) -> float:
    """Diagonal of the ambient bounding box of u over the strip."""
    values = field.values
    if s_window is not None:
        lo, hi = s_window
        mask = (field.s >= lo - 1e-12) & (field.s <= hi + 1e-12)
        values = values[mask]
    if values.size == 0:
        return 0.0
    spans = values.max(axis=(0, 1)) - values.min(axis=(0, 1))
    return float(np.linalg.norm(spans))


# --- high-energy set ----------------------------------------------------------


@dataclass(frozen=True)
class HighEnergySet:
    """Union of closed s-intervals where the map concentrates energy.

    intervals are maximal runs of flagged grid points; on the torus an
    interval crossing the seam is reported unwrapped, with hi above the
    period.  distance() measures to the nearest flagged grid point
    (cyclically on the torus) and is +inf when the set is empty.
    """

    intervals: tuple
    mask: np.ndarray
    grid: np.ndarray
    period: float | None = None

    @property
    def empty(self) -> bool:
        return not bool(self.mask.any())

    def distance(self, s_query) -> np.ndarray:
        scalar = np.ndim(s_query) == 0
        q = np.atleast_1d(np.asarray(s_query, dtype=float))
        if self.empty:
            out = np.full(q.shape, np.inf)
            return float(out[0]) if scalar else out
        pts = self.grid[self.mask]
        if self.period is None:
            dist = np.abs(q[:, None] - pts[None, :]).min(axis=1)
        else:
            raw = np.abs(q[:, None] - pts[None, :])
            dist = np.minimum(raw, self.period - raw).min(axis=1)
        return float(dist[0]) if scalar else dist


def high_energy_set(field: MapField, threshold: float = ENERGY_THRESHOLD) -> HighEnergySet:
    """Flag boundary bands plus every s whose unit window holds >= threshold energy.

    The bands [s_min, s_min+1] and [s_max-1, s_max] are always included on
    non-periodic domains; the torus has no boundary.  Flagged points are
    merged into maximal closed intervals.
    """
    s = field.s
    profile = energy_profile(field)
    window = _window_integrals(field, profile, s - 1.0, s + 1.0)
    mask = window >= threshold
    periodic = field.metric == "torus"
    if not periodic:
        mask |= s <= s[0] + 1.0 + 1e-12
        mask |= s >= s[-1] - 1.0 - 1e-12
    intervals = _mask_to_intervals(mask, s, field.height if periodic else None)
    return HighEnergySet(
        intervals=tuple(intervals),
        mask=mask,
        grid=s,
        period=field.height if periodic else None,
    )


def _mask_to_intervals(mask: np.ndarray, s: np.ndarray, period: float | None):
    if not mask.any():
        return []
    if mask.all():
        return [(float(s[0]), float(s[-1]) if period is None else float(s[0] + period))]
    idx = np.flatnonzero(mask)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]])
    intervals = [(float(s[a]), float(s[b])) for a, b in zip(starts, ends)]
    if period is not None and mask[0] and mask[-1] and len(intervals) > 1:
        # seam-crossing run: glue last onto first, unwrapped past the period
        first = intervals.pop(0)
        lo, _ = intervals.pop()
        intervals.append((lo, first[1] + period))
    return intervals


# --- exponential kernel -------------------------------------------------------


def tension_kernel_profile(
    field: MapField,
    energy_set: HighEnergySet | None = None,
    method: str = "auto",
) -> np.ndarray:
    """Smoothed tension density R(s) = int |tau|^2 e^{-|s-q|} dq dtheta + e^{-dist(s, A)}.

    The integral uses trapezoid weights in q.  method "two-pass" evaluates
    it by the exact forward/backward exponential recursion in O(n); it
    agrees with "direct" summation to roundoff.  The torus always sums
    directly with the cyclic distance.
    """
    if energy_set is None:
        energy_set = high_energy_set(field)
    f = integrate_theta(np.sum(tension_euclidean(field) ** 2, axis=-1))
    s, h = field.s, field.h_s
    if field.metric == "torus":
        raw = np.abs(s[:, None] - s[None, :])
        dist = np.minimum(raw, field.height - raw)
        kernel = (np.exp(-dist) * f[None, :]).sum(axis=1) * h
    else:
        w = np.full(f.size, h)
        w[0] = w[-1] = h / 2.0
        if method == "direct":
            kernel = (np.exp(-np.abs(s[:, None] - s[None, :])) * (w * f)[None, :]).sum(axis=1)
        elif method in ("auto", "two-pass"):
            # one-sided sums obey first-order recursions; run them as IIR filters
            decay = math.exp(-h)
            wf = w * f
            left = lfilter([1.0], [1.0, -decay], wf)
            right = lfilter([0.0, decay], [1.0, -decay], wf[::-1])[::-1]
            kernel = left + right
        else:
            raise ValueError(f"unknown kernel method {method!r}")
    return kernel + np.exp(-energy_set.distance(s))

"""Constructed map families whose tension decay rates are known in advance.

Sweeps push a fixed closed curve along the cylinder at controlled speed, so
their tension is pure curve curvature times speed squared and scales with a
known power of the geodesic length.  Bubbles are conformal spheres.  The
glued composite plants bubbles on a moving base curve with smooth phase
ramps; it is the stress case for the neck decomposition, since its velocity
profile and high-energy set are both nontrivial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable

import numpy as np

from .field import MapField, collar_s_grid, torus_s_grid
from .geometry import collar_half_length
from .targets import FlatTorusR4, get_target

__all__ = [
    "CurveSpec",
    "FamilySpec",
    "bubble_map",
    "curve_sweep",
    "glued_map",
    "great_circle",
    "latitude_circle",
    "perturbed_geodesic_sweep",
    "torus_circle",
    "torus_line",
    "torus_sweep",
]


@dataclass(frozen=True)
class CurveSpec:
    """Closed unit-speed curve in a target manifold.

    point(t) is vectorized over t; period is the arclength of one loop;
    curvature is the constant geodesic curvature (0 for a geodesic).
    """

    name: str
    target_name: str
    period: float
    curvature: float
    point: Callable[[np.ndarray], np.ndarray]


def latitude_circle(radius: float = 0.8) -> CurveSpec:
    """Latitude circle of euclidean radius `radius` on the unit sphere.

    Unit-speed parametrization; geodesic curvature sqrt(1 - r^2) / r, so the
    equator (radius 1) is the geodesic member of the family.
    """
    if not (0.0 < radius <= 1.0):
        raise ValueError(f"latitude radius must lie in (0, 1], got {radius}")
    z = math.sqrt(max(1.0 - radius**2, 0.0))

    def point(t):
        t = np.asarray(t, dtype=float)
        return np.stack(
            [radius * np.cos(t / radius), radius * np.sin(t / radius), np.full_like(t, z)],
            axis=-1,
        )

    return CurveSpec(
        name=f"latitude-{radius:g}",
        target_name="s2",
        period=2.0 * math.pi * radius,
        curvature=z / radius,
        point=point,
    )


def great_circle() -> CurveSpec:
    return latitude_circle(1.0)


def torus_circle(curvature: float = 1.0) -> CurveSpec:
    """Constant-curvature circle on the flat torus (round in flat coordinates)."""
    if curvature <= 0.0:
        raise ValueError(f"curvature must be positive, got {curvature}")
    R = 1.0 / curvature
    r = FlatTorusR4.radius

    def point(t):
        t = np.asarray(t, dtype=float)
        x = R * np.cos(t / R)
        y = R * np.sin(t / R)
        return np.stack(
            [r * np.cos(x / r), r * np.sin(x / r), r * np.cos(y / r), r * np.sin(y / r)],
            axis=-1,
        )

    return CurveSpec(
        name=f"torus-circle-{curvature:g}",
        target_name="flat-torus-r4",
        period=2.0 * math.pi * R,
        curvature=curvature,
        point=point,
    )


def torus_line(winding: tuple[int, int] = (1, 0)) -> CurveSpec:
    """Closed geodesic on the flat torus winding (m, n) times around the factors."""
    m, n = winding
    if m == 0 and n == 0:
        raise ValueError("winding numbers cannot both vanish")
    r = FlatTorusR4.radius
    norm = math.hypot(m, n)
    period = 2.0 * math.pi * r * norm

    def point(t):
        t = np.asarray(t, dtype=float)
        a = (m / norm) * t / r
        b = (n / norm) * t / r
        return np.stack([r * np.cos(a), r * np.sin(a), r * np.cos(b), r * np.sin(b)], axis=-1)

    return CurveSpec(
        name=f"torus-line-{m}-{n}",
        target_name="flat-torus-r4",
        period=period,
        curvature=0.0,
        point=point,
    )


def _broadcast_curve(points: np.ndarray, n_theta: int) -> np.ndarray:
    return np.repeat(points[:, None, :], n_theta, axis=1)


def curve_sweep(
    spec: CurveSpec,
    ell: float,
    *,
    length: float | None = None,
    speed: float | None = None,
    offset: float = 0.0,
    half_width: float | None = None,
    h_s: float = 0.1,
    n_theta: int = 32,
) -> MapField:
    """Sweep u(s, theta) = spec(offset + phi s) across the collar.

    Exactly one of length or speed fixes the linear phase: length is the
    arclength traversed over the full collar width 2 X(ell), so the phase
    slope is length / 2X regardless of any narrower grid.
    """
    if (length is None) == (speed is None):
        raise ValueError("pass exactly one of length= or speed=")
    if speed is None:
        speed = length / (2.0 * collar_half_length(ell))
    s = collar_s_grid(ell, h_s=h_s, half_width=half_width)
    points = spec.point(offset + speed * s)
    return MapField(
        s=s,
        values=_broadcast_curve(points, n_theta),
        target=get_target(spec.target_name),
        metric="hyperbolic",
        ell=ell,
    )


def torus_sweep(
    spec: CurveSpec,
    height: float,
    *,
    twist: float = 0.0,
    laps: int = 1,
    offset: float = 0.0,
    h_s: float = 0.05,
    n_theta: int = 32,
) -> MapField:
    """Sweep the curve around the torus `laps` full loops per s-period."""
    s = torus_s_grid(height, h_s=h_s)
    phase = offset + laps * spec.period * s / height
    points = spec.point(phase)
    return MapField(
        s=s,
        values=_broadcast_curve(points, n_theta),
        target=get_target(spec.target_name),
        metric="torus",
        height=height,
        twist=twist,
    )


def bubble_map(
    *,
    scale: float = 1.0,
    center: float = 0.0,
    half_width: float = 6.0,
    ell: float | None = None,
    h_s: float = 0.1,
    n_theta: int = 32,
) -> MapField:
    """Conformal sphere bubble: stereographic image of w = scale e^{(s - center) + i theta}.

    Slice speeds |u_s| = |u_theta| = sech(s - center + log scale); the energy
    over a window [-T, T] around the (shifted) center is 4 pi tanh T, filling
    the whole sphere as T grows.  Tagged hyperbolic when ell is given, else
    euclidean.
    """
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    if ell is not None:
        s = collar_s_grid(ell, h_s=h_s, half_width=half_width)
        metric, tag_ell = "hyperbolic", ell
    else:
        n = int(round(half_width / h_s))
        s = np.arange(-n, n + 1) * h_s
        metric, tag_ell = "euclidean", None
    theta = np.arange(n_theta) * (2.0 * math.pi / n_theta)
    t = (s - center + math.log(scale))[:, None]
    sech = 1.0 / np.cosh(t)
    values = np.stack(
        [
            sech * np.cos(theta)[None, :],
            sech * np.sin(theta)[None, :],
            np.tanh(t) * np.ones_like(theta)[None, :],
        ],
        axis=-1,
    )
    return MapField(s=s, values=values, target=get_target("s2"), metric=metric, ell=tag_ell)


def bump_profile(x) -> np.ndarray:
    """Smooth bump supported on |x| < 0.8, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 0.8
    y = (x[inside] / 0.8) ** 2
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - y))
    return out


def perturbed_geodesic_sweep(
    ell: float,
    *,
    amplitude: float = 0.5,
    exponent: float = 1.0,
    length: float = 2.0 * math.pi,
    half_width: float | None = None,
    h_s: float = 0.1,
    n_theta: int = 32,
) -> MapField:
    """Great-circle sweep displaced off its plane by amplitude * ell^exponent.

    The displacement rides the polar normal, weighted by a compact bump in
    s / X, then reprojects to the sphere.  At exponent 1 the perturbation
    shrinks fast enough that the family still converges to the geodesic.
    """
    spec = great_circle()
    X = collar_half_length(ell)
    s = collar_s_grid(ell, h_s=h_s, half_width=half_width)
    phase = (length / (2.0 * X)) * s
    points = spec.point(phase)
    points[:, 2] += amplitude * ell**exponent * bump_profile(s / X)
    target = get_target("s2")
    values = target.project(_broadcast_curve(points, n_theta))
    return MapField(s=s, values=values, target=target, metric="hyperbolic", ell=ell)


# --- phase-profile machinery for the glued composite -------------------------


def _quintic(x):
    """C^2 smoothstep: 0 at 0, 1 at 1, vanishing first and second derivatives."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def _quintic_integral(x):
    """Antiderivative of the smoothstep with value 0 at 0 (and 1/2 at 1)."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x**4 * (2.5 - 3.0 * x + x**2)


def _moving_measure(s, m0: float, m1: float, ramp: float):
    """Integral from -inf to s of the ramped indicator of the moving window.

    Clipping inside the quintic antiderivative makes each piece constant
    outside its own range, so the three terms sum to the measure globally.
    """
    s = np.asarray(s, dtype=float)
    up = ramp * _quintic_integral((s - (m0 - ramp)) / ramp)
    mid = np.clip(s - m0, 0.0, m1 - m0)
    down = ramp * (0.5 - _quintic_integral((m1 + ramp - s) / ramp))
    return up + mid + down


def _phase_profile(s, centers, m0, m1, ramp, speed):
    """Phase with quintic velocity ramps and a pi jump hidden at each center."""
    measure = _moving_measure(s, m0, m1, ramp)
    anchor = _moving_measure(np.zeros(1), m0, m1, ramp)[0]
    phase = speed * (measure - anchor)
    for c in centers:
        phase = phase + math.pi * ((s > c).astype(float) - (0.0 > c))
    return phase


_EQUATOR_FRAME = {
    "gamma": lambda t: np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=-1),
    "gamma_prime": lambda t: np.stack([-np.sin(t), np.cos(t), np.zeros_like(t)], axis=-1),
    "omega": np.array([0.0, 0.0, 1.0]),
}


def _slerp(p, q, weight):
    """Spherical interpolation between unit vectors, stable for tiny angles."""
    dot = np.clip(np.sum(p * q, axis=-1, keepdims=True), -1.0, 1.0)
    ang = np.arccos(dot)
    sin_ang = np.sin(ang)
    w = np.asarray(weight, dtype=float)[..., None]
    safe = sin_ang > 1e-9
    denom = np.where(safe, sin_ang, 1.0)
    out = np.where(
        safe,
        (np.sin((1.0 - w) * ang) * p + np.sin(w * ang) * q) / denom,
        (1.0 - w) * p + w * q,
    )
    return out


def glued_map(
    ell: float,
    *,
    centers: tuple = (-30.0, 30.0),
    blend_width: float = 8.0,
    moving: tuple = (-5.0, 5.0),
    ramp_width: float = 9.0,
    speed: float = 0.16,
    half_width: float = 50.0,
    h_s: float = 0.1,
    n_theta: int = 32,
) -> MapField:
    """Bubbles planted on a moving great-circle base, blended smoothly.

    The base runs gamma(phi(s)) along the equator; phi is frozen under every
    bubble (plateau of width 4 blend_width), climbs in the moving window at
    the given speed through C^2 quintic ramps, and takes a hidden pi jump at
    each bubble center so the two bubble poles match the base on both sides.
    Each bubble is the standard conformal sphere rotated to hang off the
    base point; the blend weight is a quintic bump in s.  With no centers
    this degenerates to a plain curve sweep of the equator.
    """
    centers = tuple(sorted(float(c) for c in centers))
    m0, m1 = float(moving[0]), float(moving[1])
    if not (m0 < m1):
        raise ValueError("moving window must have positive width")
    lo_guard, hi_guard = m0 - ramp_width, m1 + ramp_width
    for c in centers:
        if lo_guard < c < hi_guard or not (abs(c) + 2 * blend_width <= half_width):
            raise ValueError(
                f"bubble at {c} collides with the moving window or the boundary"
            )
        if lo_guard < c - 2 * blend_width < hi_guard or lo_guard < c + 2 * blend_width < hi_guard:
            raise ValueError(f"blend zone of bubble at {c} overlaps the ramps")

    s = collar_s_grid(ell, h_s=h_s, half_width=half_width)
    theta = np.arange(n_theta) * (2.0 * math.pi / n_theta)
    phase = _phase_profile(s, centers, m0, m1, ramp_width, speed)
    gamma = _EQUATOR_FRAME["gamma"]
    gamma_prime = _EQUATOR_FRAME["gamma_prime"]
    omega = _EQUATOR_FRAME["omega"]

    values = np.repeat(gamma(phase)[:, None, :], n_theta, axis=1)
    for c in centers:
        t_minus = float(_phase_profile(np.array([c]), centers, m0, m1, ramp_width, speed)[0])
        frame = np.stack(
            [gamma_prime(np.array([t_minus]))[0], -omega, -gamma(np.array([t_minus]))[0]],
            axis=-1,
        )
        rows = np.abs(s - c) <= 2.0 * blend_width + 1e-12
        t_rel = (s[rows] - c)[:, None]
        sech = 1.0 / np.cosh(t_rel)
        bubble = np.stack(
            [
                sech * np.cos(theta)[None, :],
                sech * np.sin(theta)[None, :],
                np.tanh(t_rel) * np.ones_like(theta)[None, :],
            ],
            axis=-1,
        )
        bubble = bubble @ frame.T
        chi = _quintic((2.0 * blend_width - np.abs(s[rows] - c)) / blend_width)
        values[rows] = _slerp(values[rows], bubble, chi[:, None])

    target = get_target("s2")
    return MapField(
        s=s, values=target.project(values), target=target, metric="hyperbolic", ell=ell
    )


# --- family ladder specifications --------------------------------------------

LENGTH_SCALES = ("const", "log_inv_ell", "ell")

_HYPERBOLIC_KINDS = ("latitude-sweep", "perturbed-sweep", "glued", "bubble")
_TORUS_KINDS = ("torus-circle", "torus-line")


@dataclass(frozen=True)
class FamilySpec:
    """Named recipe for building one family member per ladder rung.

    length_scale makes the sweep length depend on the rung: "const" keeps
    it fixed, "log_inv_ell" grows it like |log ell| (slow necks that never
    settle), "ell" shrinks it to force a trivial neck.
    """

    name: str
    kind: str
    params: dict = dataclass_field(default_factory=dict)
    length_scale: str = "const"

    def __post_init__(self) -> None:
        if self.kind not in _HYPERBOLIC_KINDS + _TORUS_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.length_scale not in LENGTH_SCALES:
            raise ValueError(f"unknown length scale {self.length_scale!r}")

    @property
    def domain(self) -> str:
        return "torus" if self.kind in _TORUS_KINDS else "hyperbolic"

    def _scaled_length(self, base: float, ell: float) -> float:
        if self.length_scale == "log_inv_ell":
            return base * abs(math.log(ell))
        if self.length_scale == "ell":
            return base * ell
        return base

    def build(self, *, ell: float | None = None, height: float | None = None) -> MapField:
        params = dict(self.params)
        if self.domain == "torus":
            if height is None:
                raise ValueError(f"family {self.name!r} is built per torus height")
            if self.kind == "torus-circle":
                spec = torus_circle(params.pop("curvature", 1.0))
            else:
                spec = torus_line(tuple(params.pop("winding", (1, 0))))
            return torus_sweep(spec, height, **params)
        if ell is None:
            raise ValueError(f"family {self.name!r} is built per geodesic length")
        if self.kind == "latitude-sweep":
            spec = latitude_circle(params.pop("radius", 0.8))
            if "speed" in params:
                return curve_sweep(spec, ell, speed=params.pop("speed"), **params)
            length = self._scaled_length(params.pop("length", spec.period), ell)
            return curve_sweep(spec, ell, length=length, **params)
        if self.kind == "perturbed-sweep":
            length = self._scaled_length(params.pop("length", 2.0 * math.pi), ell)
            return perturbed_geodesic_sweep(ell, length=length, **params)
        if self.kind == "glued":
            return glued_map(ell, **params)
        return bubble_map(ell=ell, **params)


def family_from_config(config: dict) -> FamilySpec:
    """Build a FamilySpec from a plain dict (the JSON config shape)."""
    known = {"name", "kind", "params", "length_scale"}
    extra = set(config) - known
    if extra:
        raise ValueError(f"unknown family config keys: {sorted(extra)}")
    return FamilySpec(
        name=config["name"],
        kind=config["kind"],
        params=dict(config.get("params", {})),
        length_scale=config.get("length_scale", "const"),
    )

"""Domain geometries: hyperbolic collars around short closed geodesics and flat tori.

The collar of a closed geodesic of length ell is the cylinder
[-X(ell), X(ell)] x S^1 carrying the conformal metric rho^2 (ds^2 + dtheta^2)
with

    rho(s) = ell / (2 pi cos(ell s / 2 pi)),
    X(ell) = (2 pi / ell) (pi/2 - arctan(sinh(ell/2))).

rho attains its minimum ell/2pi on the central circle s = 0 and rises to
ell / (2 pi tanh(ell/2)) ~ 1/pi at the two ends.  As ell -> 0 the product
ell * X(ell) increases to pi^2, so the collar length blows up like 1/ell.

A unit-area flat torus is described by its fundamental domain
[0, B] x S^1 with constant conformal factor rho = (2 pi B)^(-1/2) and a
twist A identifying (s + B, theta + A) with (s, theta).  The shortest
noncontractible loop has length ell = 2 pi rho = 2 inj.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ELL_MAX",
    "CollarGeometry",
    "TorusGeometry",
    "collar_half_length",
    "conformal_factor",
    "conformal_factor_bounds_check",
]

# Collars exist for geodesics shorter than 2 arsinh(1); at that length the
# collar degenerates (X = pi^2 / (2 ell)).
ELL_MAX = 2.0 * math.asinh(1.0)

# Window for Lambda * rho(X - Lambda), fixed by sweeping ell over
# (1e-4, ELL_MAX) and Lambda over [1, X]; see tests for the sweep.
_BOUNDS_WINDOW = (0.2, 5.0)
# Ceiling for rho^2(s') e^{-|s - s'|/2} / rho^2(s); the log-derivative of
# rho stays below 1/4 except within O(1) of the ends, which contributes a
# bounded factor.
_EXP_COMPARISON_CEILING = 8.0


class GeometryDomainError(ValueError):
    """Raised when a geometric quantity is evaluated outside its domain."""


def _check_ell(ell: float) -> float:
    ell = float(ell)
    if not (0.0 < ell < ELL_MAX):
        raise GeometryDomainError(
            f"geodesic length must lie in (0, {ELL_MAX:.6f}), got {ell}"
        )
    return ell


def collar_half_length(ell: float) -> float:
    """Half-length X(ell) of the collar cylinder in conformal coordinates."""
    ell = _check_ell(ell)
    return (2.0 * math.pi / ell) * (math.pi / 2.0 - math.atan(math.sinh(ell / 2.0)))


def conformal_factor(ell: float, s):
    """Conformal factor rho(s) of the collar metric, vectorized in s.

    Accepts scalars or arrays with |s| <= X(ell); values marginally outside
    (within 1e-9 relative) are clamped so that grid endpoints built by
    linspace do not trip the domain check.
    """
    ell = _check_ell(ell)
    half = collar_half_length(ell)
    s_arr = np.asarray(s, dtype=float)
    tol = 1e-9 * max(half, 1.0)
    if np.any(np.abs(s_arr) > half + tol):
        raise GeometryDomainError(
            f"|s| exceeds collar half-length X({ell}) = {half:.6f}"
        )
    s_arr = np.clip(s_arr, -half, half)
    out = ell / (2.0 * math.pi * np.cos(ell * s_arr / (2.0 * math.pi)))
    return float(out) if np.isscalar(s) or np.ndim(s) == 0 else out


def conformal_factor_bounds_check(ell: float, lam: float) -> tuple[float, float]:
    """Return (Lambda * rho(X - Lambda), its reciprocal), validating both.

    Both numbers must fall inside a fixed window independent of ell, which
    expresses that rho(X - Lambda) is comparable to 1/Lambda.  The call also
    spot-checks the exponential comparison
    rho^2(s') e^{-|s-s'|/2} <= C rho^2(s) on a deterministic sample of pairs.
    """
    ell = _check_ell(ell)
    half = collar_half_length(ell)
    lam = float(lam)
    if not (1.0 <= lam <= half):
        raise GeometryDomainError(
            f"Lambda must lie in [1, X(ell)] = [1, {half:.6f}], got {lam}"
        )
    ratio = lam * conformal_factor(ell, half - lam)
    lo, hi = _BOUNDS_WINDOW
    if not (lo <= ratio <= hi):
        raise AssertionError(
            f"Lambda*rho(X-Lambda) = {ratio:.6f} escapes window [{lo}, {hi}]"
        )

    s = np.linspace(-half, half, 41)
    rho2 = conformal_factor(ell, s) ** 2
    comp = (rho2[None, :] * np.exp(-np.abs(s[:, None] - s[None, :]) / 2.0)) / rho2[:, None]
    worst = float(comp.max())
    if worst > _EXP_COMPARISON_CEILING:
        raise AssertionError(
            f"exponential comparison ratio {worst:.4f} exceeds "
            f"{_EXP_COMPARISON_CEILING}"
        )
    return ratio, 1.0 / ratio


@dataclass(frozen=True)
class CollarGeometry:
    """Hyperbolic collar around a closed geodesic of length ell."""

    ell: float
    half_length: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "half_length", collar_half_length(self.ell))

    def rho(self, s):
        return conformal_factor(self.ell, s)

    def rho_min(self) -> float:
        """rho on the central geodesic circle, ell / 2 pi."""
        return self.ell / (2.0 * math.pi)

    def rho_end(self) -> float:
        """rho at the collar boundary, ell / (2 pi tanh(ell/2))."""
        return self.ell / (2.0 * math.pi * math.tanh(self.ell / 2.0))


@dataclass(frozen=True)
class TorusGeometry:
    """Unit-area flat torus with fundamental domain [0, height] x S^1.

    The twist identifies (s + height, theta + twist) with (s, theta).  The
    lattice constraint |twist + i height| >= 2 pi keeps 2 pi the shortest
    lattice vector, so the systole is the theta-circle.
    """

    height: float
    twist: float = 0.0

    def __post_init__(self) -> None:
        if self.height <= 0.0:
            raise GeometryDomainError(f"torus height must be positive, got {self.height}")
        if not (-math.pi < self.twist <= math.pi):
            raise GeometryDomainError(
                f"twist must lie in (-pi, pi], got {self.twist}"
            )
        if math.hypot(self.twist, self.height) < 2.0 * math.pi - 1e-12:
            raise GeometryDomainError(
                "lattice cell too small: need |twist + i height| >= 2 pi"
            )

    @property
    def rho(self) -> float:
        """Constant conformal factor (2 pi height)^(-1/2) giving unit area."""
        return 1.0 / math.sqrt(2.0 * math.pi * self.height)

    @property
    def sys_length(self) -> float:
        """Length 2 pi rho of the shortest closed geodesic (= 2 inj)."""
        return 2.0 * math.pi * self.rho

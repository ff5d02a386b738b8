"""Embedded target manifolds: round spheres and a flat torus in R^4.

Each target knows how to project ambient points onto itself, evaluate its
second fundamental form, run unit-parametrized geodesics, and measure
intrinsic distance.  All operations are vectorized over leading axes with
the ambient coordinate on the last axis.

Conventions: project is the nearest-point map pi of the tubular
neighborhood, and the second fundamental form is normalized so that the
tension field of a map u reads

    tau = Delta u + A(u)(u_s, u_s) + A(u)(u_theta, u_theta),

which for the unit sphere gives the familiar Delta u + |du|^2 u.  With
this sign A(p)(v, w) = -Hess pi|_p (v, w) on tangent vectors; the tests
confirm the identity by finite differences.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = [
    "FlatTorusR4",
    "ProjectionDomainError",
    "TangencyError",
    "UnitSphere",
    "get_target",
]

TANGENCY_TOL = 1e-8


class ProjectionDomainError(ValueError):
    """Point lies too far from the target for the nearest-point map."""


class TangencyError(ValueError):
    """Vector is not tangent to the target within tolerance."""


def _dot(v, w):
    return np.sum(v * w, axis=-1, keepdims=True)


class UnitSphere:
    """Round unit sphere S^dim embedded in R^(dim+1)."""

    def __init__(self, dim: int = 2):
        if dim < 1:
            raise ValueError(f"sphere dimension must be >= 1, got {dim}")
        self.dim = dim
        self.ambient_dim = dim + 1
        self.name = f"s{dim}"
        self.tubular_radius = 0.9

    def project(self, p: np.ndarray) -> np.ndarray:
        """Radial nearest-point projection p / |p|.

        Refuses points with |p| outside (0.1, 1.9): those are nowhere near
        the tubular neighborhood and signal an upstream construction bug
        rather than roundoff.
        """
        p = np.asarray(p, dtype=float)
        norms = np.linalg.norm(p, axis=-1, keepdims=True)
        if np.any(norms <= 0.1) or np.any(norms >= 1.9):
            bad = float(norms.min()) if np.any(norms <= 0.1) else float(norms.max())
            raise ProjectionDomainError(
                f"point norm {bad:.6f} outside projection domain (0.1, 1.9)"
            )
        return p / norms

    def second_fundamental_form(self, p, v, w) -> np.ndarray:
        return _dot(v, w) * np.asarray(p, dtype=float)

    def tangent_project(self, p, v) -> np.ndarray:
        return v - _dot(v, p) * p

    def check_tangent(self, p, v, tol: float = TANGENCY_TOL) -> np.ndarray:
        """Validate <v, p> ~ 0 and return v cleaned of its normal component."""
        defect = np.abs(_dot(v, p))
        if np.any(defect > tol):
            raise TangencyError(
                f"normal component {float(defect.max()):.3e} exceeds {tol:.0e}"
            )
        return self.tangent_project(p, v)

    def geodesic(self, p, v) -> Callable[[np.ndarray], np.ndarray]:
        """Geodesic c(t) with c(0) = p, c'(0) = v; constant speed |v|."""
        p = self.project(np.asarray(p, dtype=float))
        v = self.check_tangent(p, v)
        speed = np.linalg.norm(v, axis=-1, keepdims=True)
        direction = np.where(speed > 0, v / np.where(speed > 0, speed, 1.0), 0.0)

        def curve(t):
            t = np.asarray(t, dtype=float)[..., None]
            return p * np.cos(speed * t) + direction * np.sin(speed * t)

        return curve

    def distance(self, p, q) -> np.ndarray:
        cos = np.clip(np.sum(np.asarray(p) * np.asarray(q), axis=-1), -1.0, 1.0)
        return np.arccos(cos)


class FlatTorusR4:
    """Flat square torus: product of two circles of radius 1/sqrt(2) in R^4.

    Ambient coordinates split into blocks (x0, x1) and (x2, x3), one per
    circle factor.  The surface is intrinsically flat and sits inside the
    unit 3-sphere.
    """

    radius = 1.0 / math.sqrt(2.0)

    def __init__(self):
        self.dim = 2
        self.ambient_dim = 4
        self.name = "flat-torus-r4"
        self.tubular_radius = 0.5

    @staticmethod
    def _blocks(p):
        p = np.asarray(p, dtype=float)
        return p[..., 0:2], p[..., 2:4]

    def project(self, p: np.ndarray) -> np.ndarray:
        """Blockwise radial projection onto the two circle factors."""
        out = np.array(p, dtype=float, copy=True)
        for k in (0, 1):
            block = out[..., 2 * k : 2 * k + 2]
            norms = np.linalg.norm(block, axis=-1, keepdims=True)
            rel = norms / self.radius
            if np.any(rel <= 0.1) or np.any(rel >= 1.9):
                raise ProjectionDomainError(
                    f"circle factor {k}: |p|/r outside (0.1, 1.9)"
                )
            block *= self.radius / norms
        return out

    def second_fundamental_form(self, p, v, w) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = np.empty(np.broadcast(p, v, w).shape)
        for k in (0, 1):
            sl = slice(2 * k, 2 * k + 2)
            # 1/r^2 = 2 for each circle factor
            out[..., sl] = 2.0 * _dot(v[..., sl], w[..., sl]) * p[..., sl]
        return out

    def tangent_project(self, p, v) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        out = np.empty(np.broadcast(p, v).shape)
        for k in (0, 1):
            sl = slice(2 * k, 2 * k + 2)
            out[..., sl] = v[..., sl] - 2.0 * _dot(v[..., sl], p[..., sl]) * p[..., sl]
        return out

    def check_tangent(self, p, v, tol: float = TANGENCY_TOL) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        for k in (0, 1):
            sl = slice(2 * k, 2 * k + 2)
            defect = np.abs(_dot(v[..., sl], p[..., sl])) / self.radius
            if np.any(defect > tol):
                raise TangencyError(
                    f"circle factor {k}: normal component "
                    f"{float(defect.max()):.3e} exceeds {tol:.0e}"
                )
        return self.tangent_project(p, v)

    def geodesic(self, p, v) -> Callable[[np.ndarray], np.ndarray]:
        """Geodesic winding each circle factor at angular rate |v_k| / r."""
        p = self.project(np.asarray(p, dtype=float))
        v = self.check_tangent(p, v)
        r = self.radius

        def curve(t):
            t = np.asarray(t, dtype=float)[..., None]
            out = np.empty(np.broadcast_shapes(t.shape[:-1] + (4,), p.shape))
            for k in (0, 1):
                sl = slice(2 * k, 2 * k + 2)
                speed = np.linalg.norm(v[..., sl], axis=-1, keepdims=True)
                unit = np.where(speed > 0, v[..., sl] / np.where(speed > 0, speed, 1.0), 0.0)
                phase = speed * t / r
                out[..., sl] = p[..., sl] * np.cos(phase) + r * unit * np.sin(phase)
            return out

        return curve

    def distance(self, p, q) -> np.ndarray:
        """Flat product distance sqrt(sum_k (r dtheta_k)^2), angles wrapped."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        total = 0.0
        for k in (0, 1):
            sl = slice(2 * k, 2 * k + 2)
            a = np.arctan2(p[..., 2 * k + 1], p[..., 2 * k])
            b = np.arctan2(q[..., 2 * k + 1], q[..., 2 * k])
            dtheta = np.angle(np.exp(1j * (a - b)))
            total = total + (self.radius * dtheta) ** 2
            del sl
        return np.sqrt(total)


_REGISTRY = {
    "s2": lambda: UnitSphere(2),
    "flat-torus-r4": FlatTorusR4,
}


def get_target(name: str):
    try:
        factory = _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown target {name!r}; known targets: {known}") from None
    return factory()

"""Target manifold checks: projection, curvature term, geodesics, distance."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collarlab.targets import (
    FlatTorusR4,
    ProjectionDomainError,
    TangencyError,
    UnitSphere,
    get_target,
)


def sphere_point(rng):
    p = rng.standard_normal(3)
    return p / np.linalg.norm(p)


def torus_point(rng):
    a, b = rng.uniform(0, 2 * np.pi, size=2)
    r = FlatTorusR4.radius
    return np.array([r * np.cos(a), r * np.sin(a), r * np.cos(b), r * np.sin(b)])


def test_registry():
    assert get_target("s2").name == "s2"
    assert get_target("flat-torus-r4").ambient_dim == 4
    with pytest.raises(KeyError):
        get_target("klein-bottle")


def test_sphere_project_and_domain():
    sphere = UnitSphere(2)
    pts = np.array([[0.5, 0.5, 0.5], [0.0, 0.0, 1.5]])
    proj = sphere.project(pts)
    assert np.allclose(np.linalg.norm(proj, axis=-1), 1.0)
    with pytest.raises(ProjectionDomainError):
        sphere.project(np.array([0.0, 0.0, 0.05]))
    with pytest.raises(ProjectionDomainError):
        sphere.project(np.array([2.0, 0.0, 0.0]))


def test_torus_project_blockwise():
    torus = FlatTorusR4()
    r = torus.radius
    p = np.array([0.9 * r, 0.0, 0.0, 1.2 * r])
    proj = torus.project(p)
    assert np.allclose(proj, [r, 0.0, 0.0, r])
    with pytest.raises(ProjectionDomainError):
        torus.project(np.array([r, 0.0, 0.0, 0.01 * r]))
    # projection is idempotent and leaves on-surface points alone
    assert np.allclose(torus.project(proj), proj)


@pytest.mark.parametrize("name", ["s2", "flat-torus-r4"])
def test_second_fundamental_form_is_projection_hessian(name):
    # -d^2 pi|_p (v, w) on tangent vectors equals A(p)(v, w); verify the
    # diagonal by a central second difference of the nearest-point map.
    target = get_target(name)
    rng = np.random.default_rng(7)
    make = sphere_point if name == "s2" else torus_point
    h = 1e-4
    for _ in range(12):
        p = make(rng)
        v = target.tangent_project(p, rng.standard_normal(target.ambient_dim))
        second = (target.project(p + h * v) - 2 * p + target.project(p - h * v)) / h**2
        assert np.allclose(-second, target.second_fundamental_form(p, v, v), atol=5e-6)


def test_sphere_curvature_term_closed_form():
    p = np.array([0.0, 0.0, 1.0])
    v = np.array([1.0, 2.0, 0.0])
    w = np.array([3.0, -1.0, 0.0])
    assert np.allclose(UnitSphere(2).second_fundamental_form(p, v, w), [0, 0, 1.0])


def test_torus_curvature_term_closed_form():
    torus = FlatTorusR4()
    r = torus.radius
    p = np.array([r, 0.0, 0.0, r])
    v = np.array([0.0, 1.0, -1.0, 0.0])
    # blockwise 2 <v_k, v_k> p_k
    expected = np.array([2 * r, 0.0, 0.0, 2 * r])
    assert np.allclose(torus.second_fundamental_form(p, v, v), expected)


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_sphere_geodesic_properties(seed):
    sphere = UnitSphere(2)
    rng = np.random.default_rng(seed)
    p = sphere_point(rng)
    v = sphere.tangent_project(p, rng.standard_normal(3))
    curve = sphere.geodesic(p, v)
    t = np.linspace(0.0, 2.0, 9)
    pts = curve(t)
    assert np.allclose(np.linalg.norm(pts, axis=-1), 1.0, atol=1e-12)
    assert np.allclose(pts[0], p, atol=1e-12)
    speed = np.linalg.norm(v)
    # distance grows linearly until the cut locus at pi; arccos conditioning
    # near cos = +-1 caps the achievable accuracy around 1e-8
    small = t[t * speed < math.pi * 0.99]
    assert np.allclose(sphere.distance(p, curve(small)), speed * small, atol=1e-6)


def test_sphere_geodesic_closed_form():
    sphere = UnitSphere(2)
    p = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, 1.0, 0.0])
    curve = sphere.geodesic(p, v)
    t = np.array([0.0, math.pi / 2, math.pi])
    assert np.allclose(curve(t), [[1, 0, 0], [0, 1, 0], [-1, 0, 0]], atol=1e-15)
    assert sphere.distance(p, np.array([-1.0, 0.0, 0.0])) == pytest.approx(math.pi)


def test_torus_geodesic_winds_both_factors():
    torus = FlatTorusR4()
    r = torus.radius
    p = np.array([r, 0.0, r, 0.0])
    v = np.array([0.0, 1.0, 0.0, 2.0]) / math.sqrt(5)  # unit speed, slope 2
    curve = torus.geodesic(p, v)
    t = np.linspace(0, 3, 50)
    pts = curve(t)
    # stays on the surface
    assert np.allclose(np.linalg.norm(pts[:, :2], axis=-1), r, atol=1e-12)
    assert np.allclose(np.linalg.norm(pts[:, 2:], axis=-1), r, atol=1e-12)
    # unit speed in the flat metric
    dt = t[1] - t[0]
    speeds = np.linalg.norm(np.gradient(pts, dt, axis=0), axis=-1)
    assert np.allclose(speeds[2:-2], 1.0, atol=1e-3)
    # a zero block freezes that factor
    frozen = torus.geodesic(p, np.array([0.0, 1.0, 0.0, 0.0]))(t)
    assert np.allclose(frozen[:, 2:], [r, 0.0], atol=1e-15)


def test_torus_distance_wraps():
    torus = FlatTorusR4()
    r = torus.radius
    p = np.array([r, 0.0, r, 0.0])
    qa = np.array([r * np.cos(0.3), r * np.sin(0.3), r, 0.0])
    assert torus.distance(p, qa) == pytest.approx(r * 0.3, rel=1e-12)
    # angle 2 pi - 0.3 wraps to 0.3
    qb = np.array([r * np.cos(0.3), -r * np.sin(0.3), r, 0.0])
    assert torus.distance(p, qb) == pytest.approx(r * 0.3, rel=1e-12)
    # both factors combine in quadrature
    qc = np.array([r * np.cos(0.3), r * np.sin(0.3), r * np.cos(0.4), r * np.sin(0.4)])
    assert torus.distance(p, qc) == pytest.approx(r * math.hypot(0.3, 0.4), rel=1e-12)


@pytest.mark.parametrize("name", ["s2", "flat-torus-r4"])
def test_tangency_enforcement(name):
    target = get_target(name)
    rng = np.random.default_rng(3)
    p = (sphere_point if name == "s2" else torus_point)(rng)
    v = target.tangent_project(p, rng.standard_normal(target.ambient_dim))
    with pytest.raises(TangencyError):
        target.geodesic(p, v + 1e-3 * p)
    # sub-tolerance drift is silently cleaned
    dirty = v + 1e-10 * p
    cleaned = target.check_tangent(p, dirty)
    assert np.allclose(cleaned, target.tangent_project(p, dirty), atol=1e-15)

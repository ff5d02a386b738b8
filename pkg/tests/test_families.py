"""Family construction checks against closed-form tension and energy values."""

import math

import numpy as np
import pytest

from collarlab.families import (
    FamilySpec,
    bubble_map,
    curve_sweep,
    family_from_config,
    glued_map,
    great_circle,
    latitude_circle,
    perturbed_geodesic_sweep,
    torus_circle,
    torus_line,
    torus_sweep,
    _phase_profile,
)
from collarlab.field import (
    energy_on_window,
    fiber_mean,
    high_energy_set,
    mean_speed_profile,
    tension_euclidean,
    tension_l2,
    theta_energy_profile,
)
from collarlab.geometry import collar_half_length

# ||tau|| of the radius-0.8 latitude sweep, one loop over the full collar:
# 2 pi kappa^2 phi'^4 integral(rho^-2) with phi' = 2 pi r / 2X, evaluated in
# closed form (the integral is (2pi/ell)^2 (X + (pi/ell) sin(ell X / pi))).
LATITUDE_TENSION = {
    0.2: 1.2269338,
    0.1: 0.81177453,
    0.05: 0.55562078,
    0.025: 0.38660767,
    0.0125: 0.27119335,
}


def test_curve_specs_are_unit_speed():
    for spec in (latitude_circle(0.8), great_circle(), torus_circle(1.0), torus_line((2, 1))):
        t = np.linspace(0.0, spec.period, 400, endpoint=False)
        dt = 1e-6
        speeds = np.linalg.norm(spec.point(t + dt) - spec.point(t - dt), axis=-1) / (2 * dt)
        assert np.allclose(speeds, 1.0, atol=1e-9), spec.name
        # closes up over one period
        assert np.allclose(spec.point(np.array([0.0])), spec.point(np.array([spec.period])), atol=1e-12)


def test_latitude_curvature():
    assert latitude_circle(0.8).curvature == pytest.approx(0.75)
    assert great_circle().curvature == 0.0
    assert torus_circle(0.5).curvature == 0.5
    assert torus_line().curvature == 0.0


@pytest.mark.parametrize("ell,expected", sorted(LATITUDE_TENSION.items()))
def test_latitude_sweep_tension_matches_closed_form(ell, expected):
    spec = latitude_circle(0.8)
    f = curve_sweep(spec, ell, length=spec.period)
    assert tension_l2(f) == pytest.approx(expected, rel=1e-3)


def test_latitude_sweep_approaches_sqrt_ell_asymptote():
    # kappa L^2 (2 pi^3)^{-1/2} ell^{1/2} is the ell -> 0 limit; by ell = 0.05
    # the closed form sits within 4 percent of it
    spec = latitude_circle(0.8)
    asym = spec.curvature * spec.period**2 / math.sqrt(2 * math.pi**3)
    f = curve_sweep(spec, 0.05, length=spec.period)
    assert tension_l2(f) / (asym * math.sqrt(0.05)) == pytest.approx(1.0326, abs=0.005)


def test_curve_sweep_argument_validation():
    spec = great_circle()
    with pytest.raises(ValueError, match="exactly one"):
        curve_sweep(spec, 0.1)
    with pytest.raises(ValueError, match="exactly one"):
        curve_sweep(spec, 0.1, length=1.0, speed=0.1)
    with pytest.raises(ValueError):
        latitude_circle(1.5)


def test_geodesic_sweep_tension_is_truncation_only():
    # the equator is a geodesic: continuum tension vanishes for any speed;
    # what remains is the phi'^4 h^2 / 4 stencil mismatch, amplified by rho^-1
    f = curve_sweep(great_circle(), 0.1, length=2 * math.pi, half_width=30.0)
    assert tension_l2(f) < 1e-5


def test_bubble_profiles():
    f = bubble_map(half_width=6.0, n_theta=64)
    s = f.s
    sinc = math.sin(f.h_theta) / f.h_theta
    # angular energy profile 2 pi sech^2, up to the discrete theta factor
    expected = 2 * math.pi / np.cosh(s) ** 2 * sinc**2
    assert np.allclose(theta_energy_profile(f), expected, rtol=1e-6)
    # conformality |u_s| = |u_theta| slice by slice
    u_s = np.linalg.norm(f.du_ds(), axis=-1)
    u_t = np.linalg.norm(f.du_dtheta(), axis=-1)
    assert np.abs(u_s - u_t).max() < 2e-3
    # fiber mean runs up the axis
    fm = fiber_mean(f)
    assert np.abs(fm[:, :2]).max() < 1e-15
    assert np.allclose(fm[:, 2], np.tanh(s), atol=1e-12)


def test_bubble_energy_window():
    f = bubble_map(half_width=6.0, n_theta=64)
    for T in (2.0, 4.0):
        exact = 4 * math.pi * math.tanh(T)
        assert abs(energy_on_window(f, -T, T) / exact - 1.0) < 0.005


def test_bubble_scale_shifts_center():
    a = bubble_map(scale=math.e, half_width=6.0)
    b = bubble_map(center=-1.0, half_width=6.0)
    assert np.allclose(a.values, b.values, atol=1e-14)
    with pytest.raises(ValueError):
        bubble_map(scale=0.0)


def test_bubble_high_energy_core():
    # unit-window energy 2 pi (tanh(x+1) - tanh(x-1)) crosses 1/4 at
    # x = 2.938986; on a 0.1 grid the flagged core is [-2.9, 2.9]
    f = bubble_map(half_width=8.0, n_theta=64)
    aset = high_energy_set(f)
    inner = [iv for iv in aset.intervals if abs(iv[0]) < 5.0]
    assert len(inner) == 1
    lo, hi = inner[0]
    assert lo == pytest.approx(-2.9, abs=1e-9)
    assert hi == pytest.approx(2.9, abs=1e-9)
    assert hi <= 2.938986343 < hi + f.h_s


def test_perturbed_sweep_displacement():
    ell, amp = 0.05, 0.5
    f = perturbed_geodesic_sweep(ell, amplitude=amp)
    z = f.values[..., 2]
    # peak displacement amp * ell, shrunk slightly by reprojection
    d = amp * ell
    assert z.max() == pytest.approx(d / math.sqrt(1 + d**2), rel=1e-12)
    # compact support: nothing beyond 0.8 X
    X = collar_half_length(ell)
    outside = np.abs(f.s) >= 0.8 * X
    assert np.abs(z[outside]).max() == 0.0
    # stays a unit-sphere map
    assert np.allclose(np.linalg.norm(f.values, axis=-1), 1.0, atol=1e-12)


def test_perturbed_sweep_tension_small_but_nonzero():
    f = perturbed_geodesic_sweep(0.05)
    t = tension_l2(f)
    assert 0.0 < t < 0.05


# --- glued composite ---------------------------------------------------------


def test_phase_profile_plateaus_and_jumps():
    s = np.array([-46.0, -31.0, -30.0 - 1e-9, -29.0, -14.0, 0.0, 14.0, 29.0, 31.0, 46.0])
    phase = _phase_profile(s, (-30.0, 30.0), -5.0, 5.0, 9.0, 0.16)
    assert phase[5] == 0.0
    # frozen on each plateau except for the hidden pi jump at the center
    assert phase[1] == pytest.approx(phase[2], abs=1e-12)
    assert phase[3] == pytest.approx(phase[1] + math.pi, abs=1e-12)
    assert phase[4] == phase[3]
    assert phase[0] == phase[1]
    assert phase[8] == pytest.approx(phase[7] + math.pi, abs=1e-12)
    assert phase[9] == phase[8]
    # symmetric layout advances symmetrically
    assert phase[4] == pytest.approx(-phase[6], abs=1e-12)


def test_glued_map_no_bubbles_is_linear_sweep():
    ell, lam = 0.05, 0.16
    g = glued_map(ell, centers=(), moving=(-100.0, 100.0), half_width=30.0, speed=lam)
    f = curve_sweep(great_circle(), ell, speed=lam, half_width=30.0)
    assert np.allclose(g.values, f.values, atol=1e-10)


def test_glued_map_bubble_meridian_follows_gudermann():
    # inside the pure-bubble core the theta = 0 meridian traces
    # gamma(t_k + pi/2 + gd(s - c)) along the base great circle
    ell = 0.02
    g = glued_map(ell)
    c = 30.0
    t_k = float(_phase_profile(np.array([c]), (-30.0, 30.0), -5.0, 5.0, 9.0, 0.16)[0])
    rows = np.abs(g.s - c) <= 8.0
    t_rel = g.s[rows] - c
    angle = t_k + math.pi / 2 + np.arctan(np.sinh(t_rel))
    expected = np.stack([np.cos(angle), np.sin(angle), np.zeros_like(angle)], axis=-1)
    assert np.allclose(g.values[rows, 0, :], expected, atol=1e-12)


def test_glued_map_frozen_tail_has_zero_tension():
    g = glued_map(0.02)
    tau = tension_euclidean(g)
    tail = g.s >= 46.2
    assert np.abs(tau[tail]).max() < 1e-10


def test_glued_map_moving_speed():
    g = glued_map(0.02)
    alpha = mean_speed_profile(g)
    inside = np.abs(g.s) <= 4.5
    assert np.allclose(alpha[inside], 0.16, atol=1e-4)


def test_glued_map_tension_comes_from_ramps():
    # two quintic ramps of width r cost |tau|^2 ~ rho^-2 * 2pi * 2 * 1.4286 lam^2 / r
    ell, lam, r = 0.02, 0.16, 9.0
    g = glued_map(ell)
    predicted = math.sqrt(
        (2 * math.pi / ell) ** 2 * 2 * math.pi * 2 * (10.0 / 7.0) * lam**2 / r
    )
    assert tension_l2(g) == pytest.approx(predicted, rel=0.1)


def test_glued_map_high_energy_components():
    g = glued_map(0.02)
    aset = high_energy_set(g)
    inner = [iv for iv in aset.intervals if abs(iv[0]) < 49.0]
    assert len(inner) == 2
    for (lo, hi), center in zip(inner, (-30.0, 30.0)):
        assert (lo + hi) / 2 == pytest.approx(center, abs=g.h_s)
        assert hi - lo == pytest.approx(5.8, abs=0.3)
    # the moving window never concentrates enough energy to be flagged
    mid = [iv for iv in aset.intervals if iv[0] <= 0.0 <= iv[1]]
    assert not mid


def test_glued_map_layout_validation():
    with pytest.raises(ValueError, match="collides"):
        glued_map(0.05, centers=(0.0,))
    with pytest.raises(ValueError, match="collides"):
        glued_map(0.05, centers=(40.0,), half_width=50.0)
    with pytest.raises(ValueError, match="overlaps"):
        glued_map(0.05, centers=(25.0,), blend_width=8.0, moving=(-5.0, 5.0), ramp_width=9.0)


# --- torus sweeps ------------------------------------------------------------


@pytest.mark.parametrize("height", [50.0, 100.0, 200.0])
def test_torus_circle_sweep_tension_exact(height):
    spec = torus_circle(1.0)
    f = torus_sweep(spec, height)
    ell_sq = 2 * math.pi / height
    expected = spec.curvature * spec.period**2 * ell_sq
    assert tension_l2(f) == pytest.approx(expected, rel=1e-4)


def test_torus_circle_sweep_slope_is_two():
    spec = torus_circle(1.0)
    norms, ells = [], []
    for height in (50.0, 200.0):
        f = torus_sweep(spec, height)
        norms.append(tension_l2(f))
        ells.append(f.sys_length())
    slope = (math.log(norms[1]) - math.log(norms[0])) / (math.log(ells[1]) - math.log(ells[0]))
    assert slope == pytest.approx(2.0, abs=1e-4)


def test_torus_line_sweep_is_almost_harmonic():
    f = torus_sweep(torus_line((1, 0)), 100.0)
    assert tension_l2(f) < 1e-5


def test_torus_sweep_twist_invisible_to_axisymmetric_maps():
    spec = torus_circle(1.0)
    twist = 4 * (2 * math.pi / 32)
    a = torus_sweep(spec, 100.0, twist=0.0)
    b = torus_sweep(spec, 100.0, twist=twist)
    assert np.array_equal(a.values, b.values)
    assert tension_l2(a) == tension_l2(b)


# --- family specs ------------------------------------------------------------


def test_family_spec_builds_and_scales():
    fam = FamilySpec(name="lat", kind="latitude-sweep", params={"radius": 0.8})
    f = fam.build(ell=0.1)
    assert f.metric == "hyperbolic"
    assert tension_l2(f) == pytest.approx(LATITUDE_TENSION[0.1], rel=1e-3)

    growing = FamilySpec(name="g", kind="latitude-sweep", params={"length": 2.0}, length_scale="log_inv_ell")
    shrinking = FamilySpec(name="s", kind="latitude-sweep", params={"length": 2.0}, length_scale="ell")
    # tension scales like length^2 through the sweep speed
    t_grow = tension_l2(growing.build(ell=0.1))
    t_shrink = tension_l2(shrinking.build(ell=0.1))
    t_const = tension_l2(FamilySpec(name="c", kind="latitude-sweep", params={"length": 2.0}).build(ell=0.1))
    assert t_grow == pytest.approx(t_const * math.log(10.0) ** 2, rel=1e-6)
    assert t_shrink == pytest.approx(t_const * 0.01, rel=1e-6)


def test_family_spec_torus_kinds():
    fam = FamilySpec(name="circle", kind="torus-circle", params={"curvature": 1.0})
    f = fam.build(height=100.0)
    assert f.metric == "torus"
    line = FamilySpec(name="line", kind="torus-line", params={"winding": (1, 1)})
    g = line.build(height=50.0)
    assert g.target.name == "flat-torus-r4"
    with pytest.raises(ValueError, match="torus height"):
        fam.build(ell=0.1)
    with pytest.raises(ValueError, match="geodesic length"):
        FamilySpec(name="lat", kind="latitude-sweep").build(height=100.0)


def test_family_spec_validation_and_config():
    with pytest.raises(ValueError, match="unknown family kind"):
        FamilySpec(name="x", kind="moebius-sweep")
    with pytest.raises(ValueError, match="length scale"):
        FamilySpec(name="x", kind="glued", length_scale="sqrt")
    fam = family_from_config({"name": "p", "kind": "perturbed-sweep", "params": {"amplitude": 0.3}})
    assert fam.params["amplitude"] == 0.3
    with pytest.raises(ValueError, match="config keys"):
        family_from_config({"name": "p", "kind": "glued", "color": "red"})


def test_family_spec_accepts_fixed_speed():
    spec = FamilySpec("slow", "latitude-sweep", {"speed": 0.001})
    field = spec.build(ell=0.2)
    speeds = np.linalg.norm(field.du_ds(), axis=-1)
    assert np.allclose(speeds, 0.001, rtol=1e-6)

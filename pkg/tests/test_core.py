import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from horoflow.core import (
    I,
    INFINITY,
    Frame,
    GeodesicLine,
    HPoint,
    Isometry,
    MoebiusMap,
    affine_act,
    axis_data,
    boundary,
    busemann,
    classify_isometry,
    diag,
    frame_geometry,
    geodesic_flow,
    horocycle_flow,
    hyp_angle,
    hyp_distance,
    moebius_apply,
    poisson_kernel,
    projective_distance,
    triangle_defect,
    unipotent,
)
from horoflow.errors import DegenerateError, NonpositiveScaleError, NotHyperbolicError

from conftest import boundary_points, moebius_maps, points

E = math.e


def close_maps(m, n, tol=1e-12):
    return projective_distance(m, n) <= tol


# --- points and maps -------------------------------------------------------------


@pytest.mark.parametrize("im", [0.0, -1.0, math.nan, math.inf])
def test_hpoint_rejects_bad_height(im):
    with pytest.raises(ValueError):
        HPoint(0.0, im)


def test_boundary_infinity_normalized():
    assert boundary(-math.inf) == INFINITY
    with pytest.raises(ValueError):
        boundary(math.nan)


def test_from_entries_rejects_nonpositive_det():
    with pytest.raises(ValueError):
        MoebiusMap.from_entries(1, 2, 2, 1)


def test_projective_equality():
    m = MoebiusMap.from_entries(2, 1, 1, 1)
    assert m == -m
    assert m != MoebiusMap.identity()


def test_apply_examples():
    assert moebius_apply(MoebiusMap.identity(), I) == I
    assert moebius_apply(MoebiusMap(1, 1, 0, 1), I) == HPoint(1.0, 1.0)
    assert moebius_apply(MoebiusMap(2, 0, 0, 0.5), INFINITY) == INFINITY
    m = MoebiusMap.from_entries(2, 1, 1, 1)
    assert moebius_apply(m, INFINITY) == pytest.approx(2.0)
    assert moebius_apply(m, -1.0) == INFINITY


@given(moebius_maps(), points)
def test_apply_keeps_upper_half_plane(m, p):
    q = moebius_apply(m, p)
    assert q.im > 0


def test_det_chain_renormalized():
    # 1e6 compositions of bounded factors: rotations and canceling flow pairs
    rng = np.random.default_rng(1)
    steps = []
    for phi, t in rng.uniform(-1, 1, size=(50, 2)):
        steps += [MoebiusMap(math.cos(phi), -math.sin(phi), math.sin(phi), math.cos(phi)), diag(t), diag(-t)]
    m = MoebiusMap.identity()
    for j in range(1_000_000):
        m = m @ steps[j % len(steps)]
    assert abs(m.det - 1) <= 1e-9


# --- distance and classification -------------------------------------------------


def test_distance_examples():
    assert hyp_distance(I, I) == 0
    assert hyp_distance(I, HPoint(0, E)) == pytest.approx(1.0, abs=1e-14)


def test_distance_to_one_plus_i_matches_metric_integral():
    # geodesic through i and 1+i: circle centred 1/2 of radius sqrt(5)/2
    r = math.sqrt(1.25)
    phi_i = math.acos(-0.5 / r)
    phi_1 = math.acos(0.5 / r)
    integrand = lambda phi: r / (r * math.sin(phi))  # |dz| / im z
    oracle, _ = quad(integrand, phi_1, phi_i, epsabs=1e-13)
    assert oracle == pytest.approx(0.96242, abs=5e-6)
    assert hyp_distance(I, HPoint(1, 1)) == pytest.approx(oracle, abs=1e-12)


@given(moebius_maps(), points, points)
def test_distance_isometry_invariance(m, p, q):
    d0 = hyp_distance(p, q)
    d1 = hyp_distance(moebius_apply(m, p), moebius_apply(m, q))
    assert d1 == pytest.approx(d0, abs=1e-10 * max(1.0, d0))


@given(points, points)
def test_distance_symmetric_nonnegative(p, q):
    assert hyp_distance(p, q) == hyp_distance(q, p) >= 0


def test_classify_examples():
    assert classify_isometry(MoebiusMap(1, 1, 0, 1)) is Isometry.PARABOLIC
    assert classify_isometry(diag(1.0)) is Isometry.HYPERBOLIC
    c = math.cos(math.pi / 4)
    assert classify_isometry(MoebiusMap(c, c, -c, c)) is Isometry.ELLIPTIC
    assert classify_isometry(-MoebiusMap.identity()) is Isometry.IDENTITY


def test_axis_data_diagonal():
    rep, att, length = axis_data(diag(1.0))
    assert (rep, att) == (0.0, INFINITY)
    assert length == pytest.approx(1.0, abs=1e-14)


def test_axis_data_length_matches_displacement_minimum():
    from scipy.optimize import minimize

    m = MoebiusMap(2.0, 1.0, 1.0, 1.0)

    def disp(v):
        z = HPoint(v[0], math.exp(v[1]))
        return hyp_distance(z, moebius_apply(m, z))

    res = minimize(disp, [0.0, 0.0], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
    assert res.fun == pytest.approx(1.92485, abs=5e-6)
    assert axis_data(m)[2] == pytest.approx(res.fun, abs=1e-9)


@given(moebius_maps(scale=3.0))
def test_axis_data_inverse_swaps(m):
    if classify_isometry(m) is not Isometry.HYPERBOLIC or abs(m.trace) < 2.01:
        return
    r1, a1, l1 = axis_data(m)
    r2, a2, l2 = axis_data(m.inverse())
    assert l1 == pytest.approx(l2)
    for x, y in ((r1, a2), (a1, r2)):
        assert (math.isinf(x) and math.isinf(y)) or x == pytest.approx(y, rel=1e-7, abs=1e-7)


@given(moebius_maps(scale=3.0), points)
def test_attracting_point_attracts(m, p):
    if classify_isometry(m) is not Isometry.HYPERBOLIC or abs(m.trace) < 2.2:
        return
    _, att, _ = axis_data(m)
    if abs(att) > 1e6:
        att = INFINITY
    z = p
    for _ in range(60):
        z = moebius_apply(m, z)
    if math.isinf(att):
        assert z.im > 1e3 or abs(z.re) > 1e3
    else:
        assert abs(z.re - att) < 1e-6 * max(1, abs(att))


def test_axis_data_rejects_nonhyperbolic():
    with pytest.raises(NotHyperbolicError):
        axis_data(MoebiusMap(1, 1, 0, 1))


def test_geodesic_line_rejects_equal_endpoints():
    with pytest.raises(DegenerateError):
        GeodesicLine(1.0, 1.0)
    with pytest.raises(DegenerateError):
        GeodesicLine(INFINITY, -math.inf)


# --- flows -----------------------------------------------------------------------


def test_flow_examples():
    u = Frame.identity()
    assert geodesic_flow(u, 1).base.im == pytest.approx(E)
    assert horocycle_flow(u, 1).base == HPoint(1.0, 1.0)
    assert close_maps(geodesic_flow(geodesic_flow(u, 0.7), 0.3).g, geodesic_flow(u, 1.0).g)
    assert close_maps(geodesic_flow(u, 0).g, u.g)
    assert close_maps(horocycle_flow(u, 0).g, u.g)


def test_commutation_example():
    u = Frame(MoebiusMap.from_entries(1.0, 0.5, -0.25, 0.875))
    t = math.log(4)
    lhs = geodesic_flow(horocycle_flow(u, 1.0), t)
    rhs = horocycle_flow(geodesic_flow(u, t), 0.25)
    assert close_maps(lhs.g, rhs.g)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-5, 5), st.floats(-5, 5))
def test_flow_laws(t, s, x, y):
    assert close_maps(diag(t) @ diag(s), diag(t + s))
    assert close_maps(unipotent(x) @ unipotent(y), unipotent(x + y))
    assert close_maps(diag(-t) @ unipotent(x) @ diag(t), unipotent(x * math.exp(-t)))


def test_affine_examples():
    u = Frame(MoebiusMap.from_entries(1.0, 2.0, 0.5, 2.0))
    assert close_maps(affine_act(u, 1.0, 0.0).g, u.g)
    assert close_maps(affine_act(u, math.exp(0.5), 0.0).g, geodesic_flow(u, 1).g)
    assert close_maps(affine_act(u, 1.0, 0.7).g, horocycle_flow(u, 0.7).g)
    with pytest.raises(NonpositiveScaleError):
        affine_act(u, 0.0, 1.0)


@given(st.floats(0.1, 5), st.floats(-5, 5))
def test_affine_is_horocycle_then_geodesic(alpha, beta):
    u = Frame.identity()
    t = 2 * math.log(alpha)
    via_flows = geodesic_flow(horocycle_flow(u, alpha * beta), t)
    assert close_maps(affine_act(u, alpha, beta).g, via_flows.g, 1e-11)
    other_order = horocycle_flow(geodesic_flow(u, t), beta / alpha)
    assert close_maps(affine_act(u, alpha, beta).g, other_order.g, 1e-11)


def test_frame_geometry_examples():
    base, direction, fwd = frame_geometry(Frame.identity())
    assert (base, fwd) == (I, INFINITY)
    assert direction == pytest.approx(math.pi / 2)
    base, direction, fwd = frame_geometry(geodesic_flow(Frame.identity(), 1))
    assert base.im == pytest.approx(E) and direction == pytest.approx(math.pi / 2) and fwd == INFINITY
    base, direction, fwd = frame_geometry(Frame(MoebiusMap(1, 1, 0, 1)))
    assert base == HPoint(1.0, 1.0) and direction == pytest.approx(math.pi / 2) and fwd == INFINITY


@given(moebius_maps())
def test_frame_direction_points_along_flow(m):
    u = Frame(m)
    base, direction, _ = frame_geometry(u)
    ahead = geodesic_flow(u, 1e-6).base
    step = complex(ahead.re - base.re, ahead.im - base.im)
    assert abs(math.remainder(math.atan2(step.imag, step.real) - direction, 2 * math.pi)) < 1e-4


# --- Busemann --------------------------------------------------------------------


def raw_busemann(xi, x, y, R=1e6):
    z = HPoint(0.0, R) if math.isinf(xi) else HPoint(xi, 1.0 / R)
    return hyp_distance(x, z) - hyp_distance(y, z)


def test_busemann_examples():
    assert busemann(INFINITY, I, I) == 0
    assert busemann(INFINITY, I, HPoint(0, 2)) == pytest.approx(math.log(2))
    assert raw_busemann(INFINITY, I, HPoint(0, 2)) == pytest.approx(math.log(2), abs=1e-5)
    assert busemann(0.0, I, HPoint(0, 0.5)) == pytest.approx(math.log(2))
    assert raw_busemann(0.0, I, HPoint(0, 0.5)) == pytest.approx(math.log(2), abs=1e-5)


@given(boundary_points, points, points)
def test_busemann_matches_raw_limit(xi, x, y):
    assert busemann(xi, x, y) == pytest.approx(raw_busemann(xi, x, y), abs=1e-5)


@given(boundary_points, points, points, points)
def test_busemann_cocycle(xi, x, y, w):
    assert busemann(xi, x, y) + busemann(xi, y, w) - busemann(xi, x, w) == pytest.approx(0, abs=1e-8)


@given(boundary_points, points, points)
def test_busemann_bounded_by_distance(xi, x, y):
    assert abs(busemann(xi, x, y)) <= hyp_distance(x, y) + 1e-10


@given(moebius_maps(), boundary_points, points, points)
def test_busemann_isometry_invariance(m, xi, x, y):
    mxi = moebius_apply(m, xi)
    b1 = busemann(mxi, moebius_apply(m, x), moebius_apply(m, y))
    assert b1 == pytest.approx(busemann(xi, x, y), abs=1e-8)


@given(boundary_points, points, points)
def test_horoball_criterion(xi, x, y):
    # closed horoball at xi through x = Poisson-kernel superlevel set
    inside = poisson_kernel(y, xi) >= poisson_kernel(x, xi)
    B = busemann(xi, x, y)
    if abs(B) > 1e-12:
        assert (B >= 0) == inside


# --- angles ----------------------------------------------------------------------


def test_angle_examples():
    assert hyp_angle(I, HPoint(0, 2), HPoint(0, 0.5)) == pytest.approx(math.pi)
    # point on the unit semicircle, on the +1 side of i
    q = HPoint(math.cos(1.0), math.sin(1.0))
    assert hyp_angle(I, HPoint(0, 2), q) == pytest.approx(math.pi / 2)
    with pytest.raises(DegenerateError):
        hyp_angle(I, I, q)


@given(moebius_maps(), points, points, points)
def test_angle_conformal_invariance(m, v, p, q):
    if min(hyp_distance(v, p), hyp_distance(v, q)) < 1e-3:
        return
    a0 = hyp_angle(v, p, q)
    a1 = hyp_angle(moebius_apply(m, v), moebius_apply(m, p), moebius_apply(m, q))
    assert a1 == pytest.approx(a0, abs=1e-6)


def test_triangle_defect_values():
    assert triangle_defect(math.pi / 2) == pytest.approx(math.log(2))
    assert triangle_defect(math.pi) == pytest.approx(0.0, abs=1e-15)


def _exp_at_i(phi, r):
    k = MoebiusMap(math.cos(phi), -math.sin(phi), math.sin(phi), math.cos(phi))
    return geodesic_flow(Frame(k), r).base


@given(st.floats(0, math.pi), st.floats(0, math.pi / 2), st.floats(1e-3, 8), st.floats(1e-3, 8))
def test_triangle_property_obtuse(phi, dphi, r1, r2):
    # rotation by phi turns the direction by 2 phi, so dphi in [pi/4, pi/2] gives angle >= pi/2
    dphi = math.pi / 4 + dphi / 2
    A, B = _exp_at_i(phi, r1), _exp_at_i(phi + dphi, r2)
    C = HPoint(0.0, 1.0)
    assert hyp_angle(C, A, B) >= math.pi / 2 - 1e-9
    assert hyp_distance(A, B) >= hyp_distance(A, C) + hyp_distance(C, B) - math.log(2) - 1e-9


@given(st.floats(0, math.pi), st.floats(1e-3, math.pi / 2), st.floats(1e-3, 8), st.floats(1e-3, 8))
def test_triangle_property_with_defect(phi, dphi, r1, r2):
    A, B = _exp_at_i(phi, r1), _exp_at_i(phi + dphi, r2)
    C = HPoint(0.0, 1.0)
    theta = hyp_angle(C, A, B)
    assert theta == pytest.approx(2 * dphi, abs=1e-7)
    assert hyp_distance(A, B) >= hyp_distance(A, C) + hyp_distance(C, B) - triangle_defect(theta) - 1e-9

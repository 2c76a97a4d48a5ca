"""Geodesic integration, Jacobi fields, Riccati evolution, distances."""

import numpy as np
import pytest

from finsler import flows, hyper, metrics, scalar

RNG = np.random.default_rng(17)


def test_minkowski_geodesics_are_straight():
    m = metrics.randers(2, (0.5, 0.0))
    traj = flows.integrate_geodesic(m, [0.2, -1.0], [0.3, 0.4], 5.0)
    x, y = traj.state(5.0)
    assert np.abs(x - np.array([1.7, 1.0])).max() < 1e-10
    assert np.abs(y - np.array([0.3, 0.4])).max() < 1e-12


def test_unit_speed_preserved():
    m = metrics.riemannian_sphere(2, 1.0)
    x0 = np.array([0.5, 0.0])
    y0 = np.array([0.0, 1.0])
    y0 = y0 / m.F(x0, y0)
    traj = flows.integrate_geodesic(m, x0, y0, 10.0)
    assert traj.speed_drift() < 1e-7


def test_sphere_geodesic_closes():
    # a great circle avoiding the chart's excluded point returns at 2 pi/sqrt(c)
    c = 1.0
    m = metrics.riemannian_sphere(2, c)
    x0 = np.array([0.5, 0.0])
    y0 = np.array([0.0, 1.0])
    y0 = y0 / m.F(x0, y0)
    traj = flows.integrate_geodesic(m, x0, y0, 2 * np.pi / np.sqrt(c) + 0.1, rtol=1e-11)
    x_ret, _ = traj.state(2 * np.pi / np.sqrt(c))
    assert np.linalg.norm(x_ret - x0) < 1e-6


def test_geodesic_domain_exit_reported():
    base = metrics.euclidean(2)
    bounded = metrics.MetricSpec(
        name="euclidean-disk",
        dim=2,
        primal=base.primal,
        domain=lambda x, y: bool(np.linalg.norm(x) < 2.0 and np.linalg.norm(y) > 0),
        x_independent=True,
    )
    with pytest.raises(metrics.DomainError, match="exits the domain"):
        flows.integrate_geodesic(bounded, [0.0, 0.0], [1.0, 0.0], 3.0)
    # staying inside is fine
    flows.integrate_geodesic(bounded, [0.0, 0.0], [1.0, 0.0], 1.5)


def test_jacobi_flat_is_affine():
    m = metrics.euclidean(2)
    traj = flows.integrate_geodesic(m, [0, 0], [1.0, 0.0], 4.0)
    J0 = np.array([0.3, 0.5])
    J0p = np.array([-0.1, 0.2])
    jf = flows.jacobi_field(m, traj, J0, J0p)
    assert jf.first_zero is None
    k = np.searchsorted(jf.ts, 3.0)
    s = jf.ts[k]
    assert np.abs(jf.J[k] - (J0 + s * J0p)).max() < 1e-9


def test_jacobi_conjugate_values_on_spheres():
    for c, expect in ((1.0, np.pi), (4.0, np.pi / 2)):
        m = metrics.riemannian_sphere(2, c)
        x0 = np.array([0.4, 0.0])
        y0 = np.array([0.0, 1.0])
        y0 = y0 / m.F(x0, y0)
        traj = flows.integrate_geodesic(m, x0, y0, expect + 0.3, rtol=1e-11)
        jf = flows.jacobi_field(m, traj, np.zeros(2), np.array([1.0, 0.0]))
        assert jf.first_zero == pytest.approx(expect, abs=1e-5)


def test_jacobi_amplitude_follows_sine_profile():
    # J(0)=0: the g-norm of J grows like |J'(0)|_g sin(sqrt(c) s)/sqrt(c)
    m = metrics.riemannian_sphere(2, 1.0)
    x0 = np.array([0.4, 0.0])
    y0 = np.array([0.0, 1.0])
    y0 = y0 / m.F(x0, y0)
    traj = flows.integrate_geodesic(m, x0, y0, 3.0, rtol=1e-11)
    J0p = np.array([1.0, 0.0])
    jf = flows.jacobi_field(m, traj, np.zeros(2), J0p)
    g0 = metrics.fundamental_tensor(m, x0, y0).g
    amp = np.sqrt(J0p @ g0 @ J0p)
    for s_target in (0.5, 1.2, 2.4):
        k = np.searchsorted(jf.ts, s_target)
        s = jf.ts[k]
        x, y = traj.state(s)
        g = metrics.fundamental_tensor(m, x, y).g
        norm = np.sqrt(jf.J[k] @ g @ jf.J[k])
        assert norm == pytest.approx(amp * abs(np.sin(s)), abs=1e-7)


def test_riccati_outward_transport_follows_family():
    # outward co-orientation on the unit sphere: kappa(s) = -1/(1+s), no pole
    m = metrics.euclidean(3)
    patch = hyper.f_sphere(m, 1.0)
    tr = flows.riccati_matrix_transport(m, patch, [1.1, 0.7], s_max=2.0,
                                        co_orientation=+1, samples=20)
    assert tr.blowup is None
    expect = -1.0 / (1.0 + tr.s)
    assert np.abs(tr.kappas - expect[:, None]).max() < 1e-8


def test_riccati_scalar_examples():
    r = flows.riccati_scalar(0.0, 1.0, [1.0])
    assert r.kappa_closed[0] == pytest.approx(0.5, abs=1e-12)
    assert r.kappa_ode[0] == pytest.approx(0.5, abs=1e-9)

    r = flows.riccati_scalar(0.0, 0.0, np.linspace(0, 5, 7))
    assert np.abs(r.kappa_closed).max() == 0.0
    assert np.abs(r.kappa_ode).max() < 1e-12

    s = np.linspace(0.0, 0.9 * (np.pi - 0.3), 25)
    r = flows.riccati_scalar(1.0, 1.0 / np.tan(0.3), s)
    assert np.abs(r.kappa_closed - 1.0 / np.tan(0.3 + s)).max() < 1e-11
    assert np.abs(r.kappa_closed - r.kappa_ode).max() < 1e-9


def test_riccati_scalar_negative_curvature_branches():
    for k0 in (2.0, 0.3, -0.9, 1.0, -1.0):
        s = np.linspace(0.0, 2.5, 12)
        r = flows.riccati_scalar(-1.0, k0, s)
        assert np.abs(r.kappa_closed - r.kappa_ode).max() < 1e-9


def test_riccati_blowup_reported():
    with pytest.raises(flows.RiccatiBlowup) as exc:
        flows.riccati_scalar(0.0, -0.5, [3.0])
    assert exc.value.location == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(flows.RiccatiBlowup):
        flows.riccati_scalar(1.0, 0.0, [np.pi])


def test_matrix_transport_flat_sphere_blowup():
    m = metrics.euclidean(3)
    patch = hyper.f_sphere(m, 1.0)
    tr = flows.riccati_matrix_transport(m, patch, [1.1, 0.7], s_max=1.2, co_orientation=-1)
    assert tr.blowup is not None
    pole, mult = tr.blowup
    assert pole == pytest.approx(1.0, abs=1e-8)
    assert mult == 2  # center is focal with full multiplicity


def test_matrix_transport_hyperplane_stays_zero():
    m = metrics.euclidean(3)
    plane = hyper.graph(lambda u: 0.0 * u[0] + 0.0 * u[1], [(-1, 1), (-1, 1)], name="plane")
    tr = flows.riccati_matrix_transport(m, plane, [0.1, 0.2], s_max=2.0)
    assert np.abs(tr.A).max() < 1e-12
    assert tr.blowup is None


def test_matrix_transport_matches_direct_parallel():
    m = metrics.euclidean(3)
    patch = hyper.f_sphere(m, 1.0)
    tr = flows.riccati_matrix_transport(m, patch, [1.1, 0.7], s_max=0.5,
                                        co_orientation=-1, samples=2)
    direct = hyper.shape_operator(m, hyper.f_sphere(m, 0.5), [1.1, 0.7], co_orientation=-1)
    assert np.abs(tr.kappas[-1] - direct.kappas).max() < 1e-5


def test_matrix_transport_sphere_circle_follows_cot():
    # geodesic circle on the round sphere: transported curvature is a cot shift
    m = metrics.riemannian_sphere(2, 1.0)
    rho0 = 0.4
    r_c = 2 * np.arctan(0.5)
    lo, hi = np.tan((r_c - rho0) / 2), np.tan((r_c + rho0) / 2)
    circle = hyper.round_sphere((hi - lo) / 2, center=[(hi + lo) / 2, 0.0], ambient_dim=2)
    sd0 = hyper.shape_operator(m, circle, [np.pi], co_orientation=+1)
    assert sd0.kappas[0] == pytest.approx(-1.0 / np.tan(rho0), abs=1e-9)
    tr = flows.riccati_matrix_transport(m, circle, [np.pi], s_max=1.5, co_orientation=+1,
                                        samples=30)
    expect = -1.0 / np.tan(rho0 + tr.s)
    assert np.abs(tr.kappas[:, 0] - expect).max() < 1e-7


def test_focal_curvature_values():
    assert flows.focal_curvature(0.0, 2.0) == pytest.approx(0.5)
    assert flows.focal_curvature(1.0, np.pi / 4) == pytest.approx(1.0, abs=1e-14)
    v = flows.focal_curvature(-1.0, 10.0)
    assert v == pytest.approx(1.0 / np.tanh(10.0), abs=1e-14)
    assert v > 1.0  # always above sqrt(-c)
    with pytest.raises(ValueError):
        flows.focal_curvature(0.0, -1.0)
    with pytest.raises(ValueError):
        flows.focal_curvature(1.0, np.pi)


def test_level_distance_closed_forms():
    assert flows.level_distance(lambda t: 2.0 * t, 0.5, 2.0) == pytest.approx(1.0, abs=1e-10)
    assert flows.level_distance(lambda t: 1.0 + 0.0 * t, 0.3, 2.3) == pytest.approx(2.0, abs=1e-12)
    # substitution t = -cos(r): integral = r2 - r1, with an endpoint zero at 1
    val = flows.level_distance(lambda t: 1.0 - t**2, -np.cos(1.0), 1.0)
    assert val == pytest.approx(np.pi - 1.0, abs=1e-9)


def test_level_distance_rejects_interior_zero():
    with pytest.raises(ValueError):
        flows.level_distance(lambda t: t * (2.0 - t), 1.0, 3.0)  # vanishes at t = 2


def test_space_form_distances():
    e = metrics.euclidean(2)
    assert flows.space_form_distance(e, [1, 1], [4, 5]) == pytest.approx(5.0)
    ra = metrics.randers(2, (0.5, 0.0))
    assert flows.space_form_distance(ra, [0, 0], [1, 0]) == pytest.approx(1.5)
    assert flows.space_form_distance(ra, [0, 0], [-1, 0]) == pytest.approx(0.5)
    # translation invariance
    assert flows.space_form_distance(ra, [3, -2], [4, -2]) == pytest.approx(1.5)


def test_sphere_distance_closed_vs_shooting():
    m = metrics.riemannian_sphere(2, 1.0)
    p = np.array([0.1, 0.2])
    q = np.array([0.5, -0.3])
    d_closed = flows.space_form_distance(m, p, q)
    d_shot = flows.shooting_distance(m, p, q)
    assert abs(d_closed - d_shot) < 1e-7


def test_sphere_distance_antipodal_approach():
    c = 1.0
    m = metrics.riemannian_sphere(2, c)
    p = np.array([0.2, 0.0])
    antipode = -p / (c * (p @ p))
    d = flows.space_form_distance(m, p, antipode * 0.999)
    assert d == pytest.approx(np.pi, abs=5e-3)
    with pytest.raises(metrics.DomainError):
        flows.space_form_distance(m, p, antipode)


def test_gradient_flow_distance():
    m = metrics.euclidean(3)
    f = scalar.half_square_distance(m, np.zeros(3))
    d = flows.gradient_flow_distance(m, f, np.array([1.0, 0.0, 0.0]), 2.0)
    assert d == pytest.approx(1.0, abs=1e-9)


def test_comparison_functions():
    comp = flows.comparison(0.0)
    assert comp.s(1.7) == 1.7
    assert comp.laplacian_distance(2.0, 3) == pytest.approx(1.0)
    comp1 = flows.comparison(1.0)
    assert comp1.s(np.pi / 2) == pytest.approx(1.0)
    assert comp1.ds(np.pi / 2) == pytest.approx(0.0, abs=1e-15)
    compm = flows.comparison(-1.0)
    assert compm.s(1.0) == pytest.approx(np.sinh(1.0))
    # continuity in c at c -> 0
    for c in (1e-8, -1e-8):
        assert abs(flows.comparison(c).s(1.3) - 1.3) < 1e-7
        assert abs(flows.comparison(c).ds(1.3) - 1.0) < 1e-7


def test_trajectory_positions_export():
    m = metrics.euclidean(2)
    traj = flows.integrate_geodesic(m, [0, 0], [1.0, 1.0], 2.0)
    P = traj.positions(np.linspace(0, 2, 5))
    assert P.shape == (5, 2)
    assert np.abs(P[-1] - np.array([2.0, 2.0])).max() < 1e-10

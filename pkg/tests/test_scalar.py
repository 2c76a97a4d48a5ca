"""Legendre transforms, gradients, Hessians, Laplacians, level-set checker."""

import numpy as np
import pytest

from finsler import duality, flows, metrics, scalar

RNG = np.random.default_rng(23)


# -- Legendre transform ---------------------------------------------------------------


def test_legendre_euclidean_is_identity():
    m = metrics.euclidean(3)
    y = np.array([0.4, -1.1, 0.3])
    assert np.abs(scalar.legendre(m, np.zeros(3), y) - y).max() < 1e-14
    assert np.abs(scalar.legendre_inverse(m, np.zeros(3), y) - y).max() < 1e-14


def test_legendre_positive_homogeneity():
    m = metrics.randers(2, (0.5, 0.0))
    y = np.array([0.8, -0.4])
    xi1 = scalar.legendre(m, [0, 0], y)
    xi2 = scalar.legendre(m, [0, 0], 2 * y)
    assert np.abs(xi2 - 2 * xi1).max() < 1e-10


def test_legendre_randers_unit_vector():
    m = metrics.randers(2, (0.5, 0.0))
    y = np.array([1.0, 0.0])
    xi = scalar.legendre(m, [0, 0], y)
    g = metrics.fundamental_tensor(m, [0, 0], y).g
    assert np.abs(xi - g @ y).max() < 1e-12
    assert m.F([0, 0], y) == pytest.approx(1.5)
    assert m.F_dual([0, 0], xi) == pytest.approx(1.5, abs=1e-12)


def test_legendre_roundtrip_thirty_samples():
    cab = metrics.conic_ab(1.0, 2.0)
    ra = metrics.randers(3, (0.3, 0.1, -0.2))
    for _ in range(10):
        y = RNG.normal(size=3)
        xi = scalar.legendre(ra, np.zeros(3), y)
        back = scalar.legendre_inverse(ra, np.zeros(3), xi)
        assert np.abs(back - y).max() < 1e-8 * max(1, np.abs(y).max())
    s = metrics.riemannian_sphere(2, 1.0)
    for _ in range(10):
        x = RNG.normal(size=2) * 0.7
        y = RNG.normal(size=2)
        xi = scalar.legendre(s, x, y)
        assert np.abs(scalar.legendre_inverse(s, x, xi) - y).max() < 1e-8
    for _ in range(10):
        xi0 = np.array([RNG.normal(), RNG.normal(), 0.0])
        xi0[2] = 0.3 * np.hypot(xi0[0], xi0[1]) * RNG.choice([-1, 1])
        y = duality.raise_index(cab.dual, [0, 0, 0], xi0)
        xi = scalar.legendre(cab, np.zeros(3), y)
        assert np.abs(xi - xi0).max() < 1e-8 * max(1, np.abs(xi0).max())


def test_legendre_inverse_newton_path():
    # strip the dual evaluator to force the damped-Newton route
    base = metrics.randers(2, (0.5, 0.0))
    m = metrics.MetricSpec(
        name="randers-no-dual", dim=2, primal=base.primal, domain=base.domain,
        x_independent=True,
    )
    for _ in range(10):
        y = RNG.normal(size=2)
        xi = scalar.legendre(m, [0, 0], y)
        back = scalar.legendre_inverse(m, [0, 0], xi)
        assert np.abs(back - y).max() < 1e-8


def test_legendre_inverse_of_zero():
    m = metrics.randers(2, (0.5, 0.0))
    assert np.abs(scalar.legendre_inverse(m, [0, 0], np.zeros(2))).max() == 0.0


def test_conic_inverse_consistency():
    m = metrics.conic_ab(1.0, 2.0)
    xi = np.array([0.7, -0.4, 0.2])
    y = scalar.legendre_inverse(m, np.zeros(3), xi)
    assert abs(m.F([0, 0, 0], y) - m.F_dual([0, 0, 0], xi)) < 1e-9


# -- gradients --------------------------------------------------------------------------


def test_gradient_euclidean_examples():
    m = metrics.euclidean(3)
    f = scalar.half_square_distance(m, np.zeros(3))
    x = np.array([1.2, -0.3, 0.5])
    assert np.abs(scalar.gradient(m, f, x) - x).max() < 1e-12
    k = np.array([0.3, -1.0, 2.0])
    lin = scalar.linear(k)
    assert np.abs(scalar.gradient(m, lin, x) - k).max() < 1e-12


def test_gradient_at_critical_point_is_zero():
    m = metrics.euclidean(2)
    f = scalar.half_square_distance(m, np.zeros(2))
    assert np.abs(scalar.gradient(m, f, np.zeros(2))).max() == 0.0


def test_eikonal_for_randers_distance():
    m = metrics.randers(2, (0.5, 0.0))
    f = scalar.distance_field(m, np.zeros(2))
    for _ in range(8):
        x = RNG.normal(size=2)
        gf = scalar.gradient(m, f, x)
        assert abs(m.F(x, gf) - 1.0) < 1e-6


def test_gradient_norm_equals_dual_norm_of_differential():
    # F(grad f) = F*(df) whenever a dual metric is stored
    for m in (metrics.randers(2, (0.5, 0.0)), metrics.riemannian_sphere(2, 1.0)):
        f = (scalar.distance_field(m, np.zeros(2)) if m.x_independent
             else scalar.sphere_first_eigenfunction(m, np.zeros(2)))
        for _ in range(5):
            x = RNG.normal(size=2) + np.array([1.5, 0.0])
            gf = scalar.gradient(m, f, x)
            assert abs(m.F(x, gf) - m.F_dual(x, f.d(x))) < 1e-10


def test_gradient_duality_identity():
    # df(X) = g_{grad f}(grad f, X) for random X
    m = metrics.randers(2, (0.4, 0.1))
    f = scalar.distance_field(m, np.zeros(2))
    for _ in range(6):
        x = RNG.normal(size=2) + np.array([2.0, 0.0])
        df = f.d(x)
        gf = scalar.gradient(m, f, x)
        g = metrics.fundamental_tensor(m, x, gf).g
        for _ in range(3):
            X = RNG.normal(size=2)
            assert abs(df @ X - gf @ g @ X) < 1e-8 * max(1, abs(df @ X))


# -- Hessians and Laplacians -------------------------------------------------------------


def test_hessian_euclidean_quadratic():
    m = metrics.euclidean(3)
    f = scalar.half_square_distance(m, np.zeros(3))
    H = scalar.hessian_matrix(m, f, np.array([0.5, 1.0, -0.7]))
    assert np.abs(H - np.eye(3)).max() < 1e-12


def test_hessian_symmetry():
    m = metrics.randers(2, (0.5, 0.0))
    f = scalar.distance_field(m, np.zeros(2))
    x = np.array([1.0, 0.4])
    X, Y = RNG.normal(size=2), RNG.normal(size=2)
    assert abs(scalar.hessian(m, f, x, X, Y) - scalar.hessian(m, f, x, Y, X)) < 1e-9


def test_hessian_trace_equals_laplacian():
    m = metrics.randers(2, (0.5, 0.0))
    f = scalar.half_square_distance(m, np.zeros(2))
    x = np.array([0.8, -0.5])
    H = scalar.hessian_matrix(m, f, x)
    gf = scalar.gradient(m, f, x)
    g_inv = metrics.fundamental_tensor(m, x, gf).g_inv
    assert abs(np.einsum("ij,ij->", g_inv, H) - scalar.laplacian_hat(m, f, x)) < 1e-12


def test_laplacian_paper_values():
    # flat quadratic: laplacian = n; flat distance at |x| = 2: (n-1)/r = 1
    m = metrics.euclidean(3)
    f = scalar.half_square_distance(m, np.zeros(3))
    assert scalar.laplacian_hat(m, f, np.array([0.3, 0.8, -0.2])) == pytest.approx(3.0, abs=1e-12)
    r = scalar.distance_field(m, np.zeros(3))
    assert scalar.laplacian_hat(m, r, np.array([2.0, 0.0, 0.0])) == pytest.approx(1.0, abs=1e-12)


def test_laplacian_critical_point_raises():
    m = metrics.euclidean(2)
    f = scalar.half_square_distance(m, np.zeros(2))
    with pytest.raises(scalar.CriticalPointError):
        scalar.laplacian_hat(m, f, np.zeros(2))


def test_minkowski_sigma_laplacian_equals_hat():
    m = metrics.randers(2, (0.5, 0.0))
    f = scalar.half_square_distance(m, np.zeros(2))
    for _ in range(5):
        x = RNG.normal(size=2)
        hat = scalar.laplacian_hat(m, f, x)
        sig = scalar.laplacian_sigma(m, f, x)
        assert abs(hat - sig) < 1e-10 * max(1, abs(hat))


def test_sigma_laplacian_cross_check_on_sphere():
    m = metrics.riemannian_sphere(2, 1.0)
    f = scalar.sphere_first_eigenfunction(m, np.zeros(2))
    for _ in range(6):
        x = RNG.normal(size=2)
        # passes only if the divergence form agrees with hat - S to 1e-7
        scalar.laplacian_sigma(m, f, x)


def test_gradient_jets_match_gradient():
    m = metrics.riemannian_sphere(2, 1.0)
    f = scalar.sphere_first_eigenfunction(m, np.zeros(2))
    x = np.array([0.4, -0.2])
    yj = scalar.gradient_jets(m, f, x, order=1)
    gf = scalar.gradient(m, f, x)
    assert np.abs(np.array([c.value for c in yj]) - gf).max() < 1e-10
    # x-derivatives against finite differences of the gradient map
    h = 1e-5
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = h
        fd = (scalar.gradient(m, f, x + dx) - scalar.gradient(m, f, x - dx)) / (2 * h)
        ana = np.array([c.partial([int(j == k) for k in range(2)]) for c in yj])
        assert np.abs(ana - fd).max() < 1e-8


# -- isoparametric checker ----------------------------------------------------------------


def test_isoparametric_flat_quadratic():
    m = metrics.euclidean(3)
    f = scalar.half_square_distance(m, np.zeros(3))
    sampler = scalar.RayLevelSampler(np.zeros(3), num_rays=16, seed=5)
    rep = scalar.isoparametric_check(m, f, [0.5, 2.0, 4.5], sampler)
    assert rep.is_transnormal and rep.is_isoparametric
    for rec in rep.records:
        assert rec.a_mean == pytest.approx(2 * rec.t, rel=1e-12)
        assert rec.b_mean == pytest.approx(3.0, abs=1e-12)
        assert rec.a_maxdev < 1e-8 and rec.b_maxdev < 1e-8


def test_isoparametric_linear_field():
    m = metrics.euclidean(2)
    f = scalar.linear([1.0, 0.0])
    sampler = scalar.RayLevelSampler([-1.0, 0.0], num_rays=8, seed=2, s_max=200.0)
    rep = scalar.isoparametric_check(m, f, [0.5, 1.5], sampler)
    for rec in rep.records:
        assert rec.a_mean == pytest.approx(1.0, abs=1e-12)
        assert abs(rec.b_mean) < 1e-12
    assert rep.is_isoparametric


def test_isoparametric_sphere_eigenfunction():
    m = metrics.riemannian_sphere(2, 1.0)
    f = scalar.sphere_first_eigenfunction(m, np.zeros(2))
    sampler = scalar.RayLevelSampler(np.zeros(2), num_rays=12, seed=9, s_max=200.0)
    rep = scalar.isoparametric_check(m, f, [-0.5, 0.0, 0.5], sampler)
    assert rep.is_isoparametric
    for rec in rep.records:
        assert rec.a_mean == pytest.approx(1 - rec.t**2, abs=1e-6)
        assert rec.b_mean == pytest.approx(-2 * rec.t, abs=1e-6)


def test_non_isoparametric_field_fails_verdict():
    m = metrics.euclidean(2)
    f = scalar.from_callable(lambda x: x[0] * x[0] * 0.5 + x[1] * x[1], name="anisotropic")
    sampler = scalar.RayLevelSampler(np.zeros(2), num_rays=16, seed=1)
    rep = scalar.isoparametric_check(m, f, [1.0], sampler)
    assert not rep.is_transnormal
    assert not rep.is_isoparametric  # verdict implication holds


def test_report_serialization_roundtrip():
    m = metrics.euclidean(2)
    f = scalar.half_square_distance(m, np.zeros(2))
    sampler = scalar.RayLevelSampler(np.zeros(2), num_rays=6, seed=3)
    rep = scalar.isoparametric_check(m, f, [0.5, 2.0], sampler)
    text = rep.to_text()
    assert "transnormal=True" in text and "t=0.5" in text
    rows = rep.csv_rows()
    assert rows[0][0] == "t" and len(rows) == 3


def test_sampler_failure_reported():
    m = metrics.euclidean(2)
    f = scalar.half_square_distance(m, np.zeros(2))
    sampler = scalar.RayLevelSampler(np.zeros(2), num_rays=4, seed=0, s_max=0.5)
    with pytest.raises(ValueError):
        sampler.sample(f, 100.0)  # unreachable level


# -- the two identities -------------------------------------------------------------------


def test_family_identities_flat_family():
    rep = scalar.isoparametric_identities(
        lambda t: 2 * t,
        lambda t: 3.0,
        lambda t: [-((2 * t) ** -0.5), -((2 * t) ** -0.5)],
        np.linspace(0.5, 4.5, 20),
        c=0.0,
    )
    assert rep.max_sum_residual < 1e-10
    assert rep.max_evolution_residual < 1e-10


def test_family_identities_sphere_family():
    c, n = 1.0, 2
    rep = scalar.isoparametric_identities(
        lambda t: c * (1 - t * t),
        lambda t: -n * c * t,
        lambda t: [np.sqrt(c) * t * (1 - t * t) ** -0.5],
        np.linspace(-0.85, 0.85, 20),
        c=c,
    )
    assert rep.max_sum_residual < 1e-10
    assert rep.max_evolution_residual < 1e-10


def test_evolution_identity_c0_closed_form():
    # sqrt(a) dkappa/dt = kappa^2 for kappa = -1/sqrt(2t), a = 2t
    rep = scalar.isoparametric_identities(
        lambda t: 2 * t,
        lambda t: 3.0,
        lambda t: [-((2 * t) ** -0.5)],
        [2.0],
        c=0.0,
    )
    assert rep.max_evolution_residual < 1e-10


def test_family_identities_reject_nonpositive_a():
    with pytest.raises(ValueError):
        scalar.isoparametric_identities(lambda t: -1.0, lambda t: 0.0, lambda t: [0.0], [1.0], 0.0)


def test_family_identities_fd_fallback():
    # non-jet-aware callables go through the local finite-difference stencil
    rep = scalar.isoparametric_identities(
        lambda t: float(2 * t),
        lambda t: 3.0,
        lambda t: np.array([-1.0 / np.sqrt(2 * t), -1.0 / np.sqrt(2 * t)]),
        np.linspace(0.5, 4.5, 10),
        c=0.0,
        fd_step=2e-3,
    )
    assert rep.max_sum_residual < 1e-9
    assert rep.max_evolution_residual < 1e-8

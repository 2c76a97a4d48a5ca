"""Jet algebra: seeding, arithmetic, elementary functions, derivative
extraction, and the finite-difference cross-checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler import jets
from finsler.jets import Augmentation, JetDomainError, JetSpace

from oracles import fd_derivative


def test_seed_polynomial_square():
    (x,) = jets.seed([3.0], 2)
    f = x * x
    assert f.value == 9.0
    assert f.partial((1,)) == 6.0
    assert f.partial((2,)) == 2.0


def test_seed_mixed_partial():
    x, y = jets.seed([1.0, 2.0], 2)
    assert (x * y).partial((1, 1)) == 1.0


def test_seed_cubic_third_derivative():
    (x,) = jets.seed([2.0], 3)
    assert (x * x * x).partial((3,)) == 6.0


def test_seed_identity_rows():
    vals = [0.3, -1.2, 2.0]
    seeded = jets.seed(vals, 2)
    for i, j in enumerate(seeded):
        assert j.value == vals[i]
        grad = j.gradient()
        expect = np.zeros(3)
        expect[i] = 1.0
        assert np.array_equal(grad, expect)


def test_seed_order_validation():
    with pytest.raises(ValueError):
        jets.seed([1.0], 0)
    with pytest.raises(ValueError):
        jets.seed([1.0], jets.MAX_ORDER + 1)
    with pytest.raises(jets.JetNonFiniteError):
        jets.seed([np.nan], 2)


def test_sin_at_half_pi():
    (x,) = jets.seed([math.pi / 2], 2)
    s = x.sin()
    assert abs(s.value - 1.0) < 1e-15
    assert abs(s.partial((1,))) < 1e-15
    assert abs(s.partial((2,)) + 1.0) < 1e-15


def test_sqrt_at_four():
    (x,) = jets.seed([4.0], 2)
    r = x.sqrt()
    assert abs(r.value - 2.0) < 1e-15
    assert abs(r.partial((1,)) - 0.25) < 1e-15


def test_arctan_at_one():
    (x,) = jets.seed([1.0], 2)
    a = x.arctan()
    assert abs(a.partial((1,)) - 0.5) < 1e-15


def test_domain_errors():
    (x,) = jets.seed([-1.0], 2)
    with pytest.raises(JetDomainError):
        x.sqrt()
    with pytest.raises(JetDomainError):
        x.log()
    (z,) = jets.seed([0.0], 2)
    with pytest.raises(JetDomainError):
        z.reciprocal()
    (w,) = jets.seed([1.5], 2)
    with pytest.raises(JetDomainError):
        w.arcsin()


@pytest.mark.filterwarnings("ignore:invalid value encountered")
def test_nonfinite_poisoning_detected():
    (x,) = jets.seed([1.0], 2)
    bad = x * np.inf
    with pytest.raises(jets.JetNonFiniteError):
        bad.require_finite("test")


# -- finite-difference suite (50 cases) -------------------------------------------

_CASES = [
    ("exp(x*sin(y))", lambda v: (v[0] * v[1].sin()).exp(),
     lambda p: math.exp(p[0] * math.sin(p[1])), [0.3, 0.7]),
    ("sqrt(1+x^2+y^2)", lambda v: (1.0 + v[0] * v[0] + v[1] * v[1]).sqrt(),
     lambda p: math.sqrt(1 + p[0] ** 2 + p[1] ** 2), [0.5, -0.4]),
    ("log(2+x)*cos(y)", lambda v: (v[0] + 2.0).log() * v[1].cos(),
     lambda p: math.log(2 + p[0]) * math.cos(p[1]), [0.2, 1.1]),
    ("arctan(x/ (1+y^2))", lambda v: (v[0] * (1.0 + v[1] * v[1]).reciprocal()).arctan(),
     lambda p: math.atan(p[0] / (1 + p[1] ** 2)), [0.8, 0.3]),
    ("sinh(x)*cosh(y)", lambda v: v[0].sinh() * v[1].cosh(),
     lambda p: math.sinh(p[0]) * math.cosh(p[1]), [0.4, -0.6]),
    ("tan(x+0.2y)", lambda v: (v[0] + 0.2 * v[1]).tan(),
     lambda p: math.tan(p[0] + 0.2 * p[1]), [0.5, 0.25]),
    ("(1+x^2)^1.7", lambda v: (1.0 + v[0] * v[0]) ** 1.7,
     lambda p: (1 + p[0] ** 2) ** 1.7, [0.6, 0.0]),
    ("x/(x^2+y^2)", lambda v: v[0] * (v[0] * v[0] + v[1] * v[1]).reciprocal(),
     lambda p: p[0] / (p[0] ** 2 + p[1] ** 2), [1.2, 0.5]),
    ("arcsin(x*y)", lambda v: (v[0] * v[1]).arcsin(),
     lambda p: math.asin(p[0] * p[1]), [0.5, 0.6]),
    ("arccos(x-y)", lambda v: (v[0] - v[1]).arccos(),
     lambda p: math.acos(p[0] - p[1]), [0.3, 0.1]),
]

_ALPHAS = [(1, 0), (0, 1), (2, 0), (1, 1), (2, 1)]


@pytest.mark.parametrize("name,jet_fn,float_fn,point", _CASES, ids=[c[0] for c in _CASES])
def test_derivatives_match_finite_differences(name, jet_fn, float_fn, point):
    seeded = jets.seed(point, 3)
    out = jet_fn(seeded)
    for alpha in _ALPHAS:
        exact = out.partial(alpha)
        approx = fd_derivative(float_fn, point, alpha, h=0.02)
        scale = max(1.0, abs(exact))
        assert abs(exact - approx) / scale < 1e-6, f"{name} d{alpha}"


def test_euler_homogeneity_probe():
    # A positively 1-homogeneous function: y . df/dy = f.
    rng = np.random.default_rng(0)
    b = np.array([0.3, -0.2, 0.1])
    for _ in range(10):
        y = rng.normal(size=3)
        seeded = jets.seed(y, 1)
        f = jets.sqrt(sum(v * v for v in seeded)) + sum(bi * v for bi, v in zip(b, seeded))
        euler = sum(y[i] * f.partial([int(i == j) for j in range(3)]) for i in range(3))
        assert abs(euler - f.value) < 1e-10


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
)
def test_ring_axioms(a_coeffs, b_coeffs, c_coeffs):
    space = JetSpace.get(1, 2)
    a = jets.Jet(space, np.array(a_coeffs))
    b = jets.Jet(space, np.array(b_coeffs))
    c = jets.Jet(space, np.array(c_coeffs))
    assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=1e-12)
    assert np.allclose((a + b).coeffs, (b + a).coeffs, atol=1e-12)
    lhs = ((a * b) * c).coeffs
    rhs = (a * (b * c)).coeffs
    assert np.allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(lhs).max()))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-1.0, 1.0))
def test_exp_log_roundtrip(v, slope):
    (x,) = jets.seed([v], 4)
    y = x * (1.0 + 0.3 * slope) + 0.1
    back = y.log().exp()
    assert np.allclose(back.coeffs, y.coeffs, atol=1e-11 * max(1, abs(v)))


def test_coefficient_table_size():
    from math import comb

    for nv, order in ((1, 3), (3, 4), (6, 5)):
        space = JetSpace.get(nv, order)
        assert space.size == comb(nv + order, nv)
        assert len({tuple(m) for m in space.monomials}) == space.size


def test_truncated_product_is_cauchy_product():
    space = JetSpace.get(2, 3)
    rng = np.random.default_rng(7)
    a = jets.Jet(space, rng.normal(size=space.size))
    b = jets.Jet(space, rng.normal(size=space.size))
    prod = a * b
    # brute-force Cauchy product
    expect = np.zeros(space.size)
    for i, ma in enumerate(space.monomials):
        for j, mb in enumerate(space.monomials):
            tot = tuple(ma + mb)
            k = space.index.get(tot)
            if k is not None:
                expect[k] += a.coeffs[i] * b.coeffs[j]
    assert np.allclose(prod.coeffs, expect, atol=1e-12)


def test_partial_jet_consistency():
    x, y = jets.seed([0.4, -0.8], 4)
    f = (x * y).exp()
    df = f.partial_jet(0)
    # values and low-order coefficients of the derivative jet match partials of f
    assert abs(df.value - f.partial((1, 0))) < 1e-14
    assert abs(df.partial((0, 1)) - f.partial((1, 1))) < 1e-14
    assert abs(df.partial((2, 0)) - f.partial((3, 0))) < 1e-14


def test_solve_linear_roundtrip():
    space = JetSpace.get(2, 3)
    rng = np.random.default_rng(3)
    A = [[jets.Jet(space, rng.normal(size=space.size)) for _ in range(3)] for _ in range(3)]
    for i in range(3):
        A[i][i] = A[i][i] + 5.0  # keep value parts well conditioned
    B = [[jets.Jet(space, rng.normal(size=space.size))] for _ in range(3)]
    X = jets.solve_linear(A, B)
    for i in range(3):
        resid = sum((A[i][j] * X[j][0] for j in range(3)), space.constant(0.0)) - B[i][0]
        assert np.abs(resid.coeffs).max() < 1e-10


def test_remap_and_augmentation():
    base = JetSpace.get(2, 2)
    x, y = jets.seed_into(base, [0.5, 1.5], 0)
    f = x * y + y * y
    aug = Augmentation.get(base, 1)
    lifted = aug.lift(f)
    assert aug.extract_base(lifted).coeffs == pytest.approx(f.coeffs)
    # derivative through the augmentation equals a direct partial
    g_w = (aug.lift(x) + aug.eps(0)) * aug.lift(y)
    d = aug.extract_eps(g_w, 0)
    assert abs(d.value - 1.5) < 1e-15
    assert abs(d.partial((0, 1)) - 1.0) < 1e-15

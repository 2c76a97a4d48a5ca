"""Catalog of Finsler metrics and the fundamental tensor.

A :class:`MetricSpec` packages jet-level evaluators for the metric F (primal
side), its dual F* when available, domain predicates, and an optional volume
density.  Evaluators are generic: they accept floats or jets for every
component and return the same kind, so a single definition serves value
computations, tensor extraction and implicit differentiation alike.

Built-in metrics
----------------
``euclidean(n)``
    F = |y|.
``randers(n, b)``
    F = |y| + <b, y> with constant b, |b| < 1; the dual is again of Randers
    type.
``riemannian_sphere(n, c)``
    Round sphere of curvature c > 0 in a single stereographic chart, metric
    tensor 4 delta_ij / (1 + c|x|^2)^2.
``conic_ab(a, b)``
    Dual-defined conic metric on R^3: F*(xi) = alpha*(xi) phi(beta*/alpha*)
    with beta* = (0, 0, b) and
    phi(s) = sqrt(b^2-(1+a^2)s^2)/b - (a s/b) arctan(sqrt(b^2-(1+a^2)s^2)/(a s)),
    supported on the cone xi_1^2 + xi_2^2 > 4 a^2 xi_3^2, xi_3 != 0.  The
    primal evaluator is reconstructed numerically through the inverse
    Legendre transform.
``product(base, m)``
    F(y) = sqrt(base(y_1)^2 + |y_2|^2) on R^{base.dim + m}.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import duality, jets
from .jets import Jet

__all__ = [
    "DomainError",
    "MetricSpec",
    "FundamentalTensor",
    "fundamental_tensor",
    "reverse_metric",
    "bh_volume_density",
    "euclidean",
    "randers",
    "riemannian_sphere",
    "conic_ab",
    "product",
    "builtin",
    "from_string",
]


class DomainError(ValueError):
    """A point/vector pair fell outside a metric's domain of definition."""


@dataclass
class MetricSpec:
    """A Finsler metric as a pair of jet-evaluable functionals."""

    name: str
    dim: int
    primal: Callable | None = None
    dual: Callable | None = None
    domain: Callable = lambda x, y: bool(np.linalg.norm(y) > 0)
    dual_domain: Callable | None = None
    volume_density: Callable | None = None
    x_independent: bool = False
    primal_is_closed: bool = True
    family: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.primal is None and self.dual is None:
            raise ValueError("a metric needs at least one of primal/dual evaluators")

    def F(self, x, y) -> float:
        """Metric value at floats (raises DomainError outside the domain)."""
        if self.primal is None:
            raise DomainError(f"metric {self.name} has no primal evaluator")
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        self.check_domain(x, y)
        return float(self.primal(list(x), list(y)))

    def F_dual(self, x, xi) -> float:
        if self.dual is None:
            raise DomainError(f"metric {self.name} has no dual evaluator")
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        if self.dual_domain is not None and not self.dual_domain(list(x), xi):
            raise DomainError(f"covector {xi} outside the dual domain of {self.name}")
        return float(self.dual(list(x), list(xi)))

    def check_domain(self, x, y) -> None:
        if not self.domain(list(np.asarray(x, float)), np.asarray(y, float)):
            raise DomainError(f"(x={x}, y={y}) outside the domain of {self.name}")

    def __repr__(self) -> str:  # pragma: no cover
        return f"MetricSpec({self.name})"


@dataclass
class FundamentalTensor:
    g: np.ndarray
    g_inv: np.ndarray
    x: np.ndarray
    y: np.ndarray


def primal_f2_jet(metric: MetricSpec, x, y_jets: Sequence) -> Jet:
    """F^2 as a jet; the workhorse behind every tensor extraction."""
    F = metric.primal(x, y_jets)
    return (F * F).require_finite(f"F^2 of {metric.name}")


def fundamental_tensor(metric: MetricSpec, x, y) -> FundamentalTensor:
    """g_ij(x, y) = (1/2) [F^2]_{y^i y^j} and its inverse."""
    if metric.primal is None:
        raise DomainError(
            f"metric {metric.name} has no primal evaluator (reconstruct one "
            "through the inverse Legendre transform)"
        )
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    metric.check_domain(x, y)
    n = metric.dim
    y_jets = jets.seed(y, 2)
    f2 = primal_f2_jet(metric, list(x), y_jets)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(alpha)
    try:
        cho = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise DomainError(
            f"fundamental tensor of {metric.name} not positive definite at "
            f"x={x}, y={y} (domain violation)"
        )
    inv_cho = np.linalg.inv(cho)
    g_inv = inv_cho.T @ inv_cho
    return FundamentalTensor(g=g, g_inv=g_inv, x=x, y=y)


def reverse_metric(metric: MetricSpec) -> MetricSpec:
    """The reverse metric, evaluating the original at -y (dual side at -xi)."""

    def rev_primal(x, y):
        return metric.primal(x, [-c for c in y])

    def rev_dual(x, xi):
        return metric.dual(x, [-c for c in xi])

    return MetricSpec(
        name=f"reverse({metric.name})",
        dim=metric.dim,
        primal=rev_primal if metric.primal else None,
        dual=rev_dual if metric.dual else None,
        domain=lambda x, y: metric.domain(x, -np.asarray(y, float)),
        dual_domain=(
            (lambda x, xi: metric.dual_domain(x, -np.asarray(xi, float)))
            if metric.dual_domain
            else None
        ),
        volume_density=metric.volume_density,
        x_independent=metric.x_independent,
        primal_is_closed=metric.primal_is_closed,
        family=metric.family,
        params=dict(metric.params),
    )


# -- Busemann-Hausdorff volume ------------------------------------------------


def _unit_ball_volume(n: int) -> float:
    import math

    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def bh_volume_density(metric: MetricSpec, nodes: int = 96) -> float:
    """Busemann-Hausdorff density: Euclidean ball volume over F-ball volume.

    Deterministic Gauss-Legendre quadrature in spherical coordinates of
    vol{F < 1} = (1/n) integral over S^{n-1} of F(u)^{-n}.  Minkowski
    (x-independent) metrics only.
    """
    if not metric.x_independent:
        raise DomainError(f"BH volume density needs a Minkowski metric, got {metric.name}")
    n = metric.dim
    x0 = [0.0] * n

    def radial(u: np.ndarray) -> float:
        return metric.F(x0, u) ** (-n)

    if n == 1:
        vol = radial(np.array([1.0])) + radial(np.array([-1.0]))
    else:
        # angles: theta in [0, 2pi), phi_k in [0, pi] with jacobian sin^k terms
        t_nodes, t_weights = np.polynomial.legendre.leggauss(nodes)
        theta = np.pi * (t_nodes + 1.0)  # [0, 2pi]
        w_theta = np.pi * t_weights
        directions = [(np.array([np.cos(t), np.sin(t)]), wt) for t, wt in zip(theta, w_theta)]
        for k in range(1, n - 1):
            phi = 0.5 * np.pi * (t_nodes + 1.0)  # [0, pi]
            w_phi = 0.5 * np.pi * t_weights
            sink = np.sin(phi) ** k
            directions = [
                (np.concatenate((np.sin(p) * d, [np.cos(p)])), wd * wp * sk)
                for d, wd in directions
                for p, wp, sk in zip(phi, w_phi, sink)
            ]
        try:
            vol = sum(w * radial(d) for d, w in directions) / n
        except (DomainError, jets.JetError, duality.ConvergenceError) as e:
            raise DomainError(
                f"BH volume of {metric.name} needs F finite on every ray "
                f"(conic metrics unsupported): {e}"
            )
    return _unit_ball_volume(n) / vol


class _LazyBHDensity:
    """Constant volume density computed by quadrature on first use."""

    def __init__(self, metric: MetricSpec):
        self._metric = metric
        self._value: float | None = None

    def __call__(self, x) -> float:
        if self._value is None:
            self._value = bh_volume_density(self._metric)
        return self._value


# -- built-in metrics ----------------------------------------------------------


def _dot(a, b):
    return sum(ai * bi for ai, bi in zip(a, b))


def euclidean(n: int) -> MetricSpec:
    def primal(x, y):
        return jets.sqrt(_dot(y, y))

    m = MetricSpec(
        name=f"euclidean({n})",
        dim=n,
        primal=primal,
        dual=primal,
        domain=lambda x, y: bool(np.linalg.norm(y) > 0),
        dual_domain=lambda x, xi: bool(np.linalg.norm(xi) > 0),
        x_independent=True,
        family="minkowski",
        params={"n": n},
    )
    m.volume_density = lambda x: 1.0
    return m


def randers(n: int, b_vec: Sequence[float]) -> MetricSpec:
    b = np.asarray(b_vec, float)
    if b.shape != (n,):
        raise ValueError(f"b must have length {n}")
    bb = float(b @ b)
    if bb >= 1.0:
        raise ValueError(f"randers needs |b| < 1, got |b|^2 = {bb}")
    lam = 1.0 - bb

    def primal(x, y):
        return jets.sqrt(_dot(y, y)) + _dot(b, y)

    def dual(x, xi):
        bxi = _dot(b, xi)
        return (jets.sqrt(lam * _dot(xi, xi) + bxi * bxi) - bxi) / lam

    m = MetricSpec(
        name=f"randers({n},{tuple(float(round(v, 12)) for v in b)})",
        dim=n,
        primal=primal,
        dual=dual,
        domain=lambda x, y: bool(np.linalg.norm(y) > 0),
        dual_domain=lambda x, xi: bool(np.linalg.norm(xi) > 0),
        x_independent=True,
        family="minkowski",
        params={"n": n, "b": b},
    )
    m.volume_density = _LazyBHDensity(m)
    return m


def riemannian_sphere(n: int, c: float) -> MetricSpec:
    """Round sphere of curvature c in a stereographic chart."""
    if c <= 0:
        raise ValueError(f"sphere curvature must be positive, got {c}")

    def primal(x, y):
        return 2.0 * jets.sqrt(_dot(y, y)) / (1.0 + c * _dot(x, x))

    def dual(x, xi):
        return 0.5 * (1.0 + c * _dot(x, x)) * jets.sqrt(_dot(xi, xi))

    def density(x):
        return (2.0 / (1.0 + c * _dot(x, x))) ** n

    return MetricSpec(
        name=f"riemannian_sphere({n},{c})",
        dim=n,
        primal=primal,
        dual=dual,
        domain=lambda x, y: bool(np.linalg.norm(y) > 0),
        dual_domain=lambda x, xi: bool(np.linalg.norm(xi) > 0),
        volume_density=density,
        x_independent=False,
        family="sphere",
        params={"n": n, "c": float(c)},
    )


def conic_ab(a: float, b: float) -> MetricSpec:
    """Conic Minkowski metric on R^3, defined through its dual norm."""
    if a <= 0 or b <= 0:
        raise ValueError(f"conic_ab needs a, b > 0, got a={a}, b={b}")
    a, b = float(a), float(b)

    def dual(x, xi):
        alpha = jets.sqrt(_dot(xi, xi))
        s = b * xi[2] / alpha
        q = jets.sqrt(b * b - (1.0 + a * a) * (s * s))
        phi = q / b - (a / b) * s * jets.arctan(q / (a * s))
        return alpha * phi

    def dual_domain(x, xi) -> bool:
        xi = np.asarray(xi, float)
        return bool(xi[0] ** 2 + xi[1] ** 2 > 4.0 * a * a * xi[2] ** 2 and xi[2] != 0.0)

    def seed_candidates(x, y):
        # The dual cone is rotationally symmetric about the xi_3 axis and the
        # inverse transform preserves the xy-angle while flipping the sign of
        # the third component.
        rho = np.hypot(y[0], y[1])
        if rho == 0.0:
            cos_t, sin_t = 1.0, 0.0
        else:
            cos_t, sin_t = y[0] / rho, y[1] / rho
        sign = -np.sign(y[2]) if y[2] != 0 else 1.0
        seeds = []
        for z in (0.25 / a, 0.1 / a, 0.45 / a):
            seeds.append(np.array([cos_t, sin_t, sign * z]))
            seeds.append(np.array([cos_t, sin_t, -sign * z]))
        return seeds

    primal = duality.primal_from_dual(dual, dual_domain, seed_candidates, name=f"conic_ab({a},{b})")

    def domain(x, y) -> bool:
        y = np.asarray(y, float)
        if np.linalg.norm(y) == 0:
            return False
        try:
            primal(list(np.asarray(x, float)), list(y))
        except (duality.ConvergenceError, jets.JetError):
            return False
        return True

    return MetricSpec(
        name=f"conic_ab({a},{b})",
        dim=3,
        primal=primal,
        dual=dual,
        domain=domain,
        dual_domain=dual_domain,
        x_independent=True,
        primal_is_closed=False,
        family="conic",
        params={"a": a, "b": b},
    )


def product(base: MetricSpec, m: int) -> MetricSpec:
    """F(y) = sqrt(base(y_1)^2 + |y_2|^2) with a Euclidean factor R^m."""
    if m < 1:
        raise ValueError("product needs at least one Euclidean direction")
    k = base.dim

    def split(v):
        return list(v[:k]), list(v[k:])

    def primal(x, y):
        x1, _ = split(x)
        y1, y2 = split(y)
        Fb = base.primal(x1, y1)
        return jets.sqrt(Fb * Fb + _dot(y2, y2))

    def dual(x, xi):
        x1, _ = split(x)
        xi1, xi2 = split(xi)
        Fb = base.dual(x1, xi1)
        return jets.sqrt(Fb * Fb + _dot(xi2, xi2))

    def domain(x, y):
        y = np.asarray(y, float)
        if np.linalg.norm(y) == 0:
            return False
        return base.domain(list(x)[:k], y[:k])

    return MetricSpec(
        name=f"product({base.name},{m})",
        dim=k + m,
        primal=primal if base.primal else None,
        dual=dual if base.dual else None,
        domain=domain,
        dual_domain=(
            (lambda x, xi: base.dual_domain(list(x)[:k], np.asarray(xi, float)[:k]))
            if base.dual_domain
            else None
        ),
        x_independent=base.x_independent,
        primal_is_closed=base.primal_is_closed,
        family="product",
        params={"base": base.name, "m": m},
    )


# -- sphere chart utilities ------------------------------------------------------


def sphere_embed(c: float, x: Sequence) -> list:
    """Inverse stereographic embedding of a chart point into R^{n+1}.

    Maps onto the sphere of radius R = 1/sqrt(c); generic over floats/jets.
    """
    R2 = 1.0 / c
    q = sum(xi * xi for xi in x)
    inv = 1.0 / (R2 + q) if not isinstance(q, Jet) else (q + R2).reciprocal()
    R = R2**0.5
    out = [2.0 * R2 * xi * inv for xi in x]
    out.append(R * (q - R2) * inv)
    return out


def sphere_cos_distance(c: float, p, x: Sequence):
    """cos(sqrt(c) d(p, x)) in the stereographic chart; jets-generic in x."""
    Pp = [float(v) for v in sphere_embed(c, list(np.asarray(p, float)))]
    Px = sphere_embed(c, x)
    return c * sum(a * b for a, b in zip(Pp, Px))


def sphere_chart_distance(c: float, p, x: Sequence):
    """Great-circle distance between chart points; jets-generic in x."""
    u = sphere_cos_distance(c, p, x)
    return jets.arccos(u) / c**0.5


# -- name-based construction ---------------------------------------------------

_BUILDERS = {
    "euclidean": (euclidean, ("n",)),
    "randers": (randers, ("n", "b_vec")),
    "riemannian_sphere": (riemannian_sphere, ("n", "c")),
    "conic_ab": (conic_ab, ("a", "b")),
    "product": (product, ("base", "m")),
}


def builtin(name: str, **params) -> MetricSpec:
    if name not in _BUILDERS:
        raise ValueError(f"unknown metric {name!r}; choices: {sorted(_BUILDERS)}")
    fn, _ = _BUILDERS[name]
    return fn(**params)


def _split_args(argstr: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in argstr:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return parts


def from_string(spec: str) -> MetricSpec:
    """Parse metric strings such as ``conic_ab(a=1,b=2)`` or
    ``randers(2,(0.5,0))`` (grammar documented in the CLI)."""
    m = re.fullmatch(r"\s*([a-zA-Z_][a-zA-Z0-9_]*)\s*\((.*)\)\s*", spec)
    if not m:
        raise ValueError(f"cannot parse metric string {spec!r}")
    name, argstr = m.group(1), m.group(2)
    if name not in _BUILDERS:
        raise ValueError(f"unknown metric {name!r}; choices: {sorted(_BUILDERS)}")
    fn, positional = _BUILDERS[name]
    args, kwargs = [], {}
    for part in _split_args(argstr):
        kw = re.fullmatch(r"\s*([a-zA-Z_]\w*)\s*=\s*(.+)", part)
        if kw and not re.fullmatch(r"\s*[a-zA-Z_]\w*\s*\(.*\)\s*", part):
            kwargs[kw.group(1)] = _parse_value(kw.group(2).strip())
        else:
            args.append(_parse_value(part))
    bound = dict(zip(positional, args))
    bound.update(kwargs)
    return fn(**bound)


def _parse_value(text: str):
    if re.fullmatch(r"[a-zA-Z_][a-zA-Z0-9_]*\(.*\)", text):
        return from_string(text)  # nested metric, e.g. product(conic_ab(...), 2)
    return ast.literal_eval(text)

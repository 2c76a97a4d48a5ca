"""Scalar fields on Finsler manifolds: gradients, Hessians, Laplacians and
the transnormal/isoparametric level-set checker.

The gradient of f is the inverse Legendre transform of df.  The Hessian is
taken with the Berwald connection at reference vector grad(f),

    Hes f(X, Y) = X(Yf) - (nabla^{grad f}_X Y) f,

and the metric Laplacian is its trace against g_{grad f}.  The volume-form
Laplacian is computed two independent ways, by the divergence formula and as
the metric Laplacian minus the S-curvature of grad(f); a disagreement beyond
tolerance raises, since it signals an assembly bug rather than noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import duality, jets, metrics, spray
from .jets import Jet, JetSpace
from .metrics import DomainError, MetricSpec

__all__ = [
    "ScalarField",
    "CriticalPointError",
    "ConsistencyError",
    "linear",
    "from_callable",
    "half_square_distance",
    "distance_field",
    "sphere_first_eigenfunction",
    "legendre",
    "legendre_inverse",
    "gradient",
    "gradient_jets",
    "hessian",
    "hessian_matrix",
    "laplacian_hat",
    "laplacian_sigma",
    "RayLevelSampler",
    "LevelRecord",
    "LevelSetReport",
    "isoparametric_check",
    "IdentityReport",
    "isoparametric_identities",
]

CRITICAL_TOL = 1e-12


class CriticalPointError(ValueError):
    """A differential-based operation hit a point where df = 0."""


class ConsistencyError(AssertionError):
    """Two independent computations of the same quantity disagree."""


class ScalarField:
    """A scalar function evaluable on jets (hence differentiable)."""

    def __init__(self, fn: Callable, name: str = "f"):
        self._fn = fn
        self.name = name

    def __call__(self, x_args):
        return self._fn(x_args)

    def value(self, x) -> float:
        out = self._fn([float(v) for v in x])
        return out.value if isinstance(out, Jet) else float(out)

    def jets(self, x, order: int) -> Jet:
        out = self._fn(jets.seed(np.asarray(x, float), order))
        if not isinstance(out, Jet):
            raise TypeError(f"scalar field {self.name} did not return a jet")
        return out.require_finite(f"field {self.name}")

    def d(self, x) -> np.ndarray:
        """The differential df at x as a covector of floats."""
        return self.jets(x, 1).gradient()

    def __repr__(self) -> str:  # pragma: no cover
        return f"ScalarField({self.name})"


def from_callable(fn: Callable, name: str = "f") -> ScalarField:
    return ScalarField(fn, name)


def linear(k: Sequence[float]) -> ScalarField:
    k = np.asarray(k, float)
    return ScalarField(lambda x: sum(ki * xi for ki, xi in zip(k, x)), name=f"linear{tuple(k)}")


def half_square_distance(metric: MetricSpec, p) -> ScalarField:
    """f = (1/2) d(p, .)^2 on a Minkowski space or the sphere chart."""
    p = np.asarray(p, float)
    if metric.x_independent:

        def fn(x):
            F = metric.primal(x, [xi - pi for xi, pi in zip(x, p)])
            return F * F * 0.5

    elif metric.family == "sphere":
        c = metric.params["c"]

        def fn(x):
            r = metrics.sphere_chart_distance(c, p, x)
            return r * r * 0.5

    else:
        raise ValueError(f"no distance function available for {metric.name}")
    return ScalarField(fn, name=f"half_sq_dist[{metric.name}]")


def distance_field(metric: MetricSpec, p) -> ScalarField:
    """f = d(p, .), smooth away from p (and inside the cut-domain)."""
    p = np.asarray(p, float)
    if metric.x_independent:
        fn = lambda x: metric.primal(x, [xi - pi for xi, pi in zip(x, p)])
    elif metric.family == "sphere":
        c = metric.params["c"]
        fn = lambda x: metrics.sphere_chart_distance(c, p, x)
    else:
        raise ValueError(f"no distance function available for {metric.name}")
    return ScalarField(fn, name=f"dist[{metric.name}]")


def sphere_first_eigenfunction(metric: MetricSpec, p) -> ScalarField:
    """f = -cos(sqrt(c) r) on the round-sphere chart: a polynomial-rational
    expression through the embedding, smooth across the antipode."""
    if metric.family != "sphere":
        raise ValueError(f"needs the sphere metric, got {metric.name}")
    c = metric.params["c"]
    p = np.asarray(p, float)
    return ScalarField(
        lambda x: -metrics.sphere_cos_distance(c, p, x), name="-cos(sqrt(c) r)"
    )


# -- Legendre transform ---------------------------------------------------------


def legendre(metric: MetricSpec, x, y) -> np.ndarray:
    """L(y) = g_y(y, .) as a covector of floats."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    metric.check_domain(x, y)
    return duality.momentum(metric.primal, list(x), y)


def legendre_inverse(metric: MetricSpec, x, xi, seed_y=None) -> np.ndarray:
    """L^{-1}(xi): closed dual formula when a dual metric is stored, damped
    Newton on the forward transform otherwise.  L^{-1}(0) = 0."""
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    if np.linalg.norm(xi) == 0.0:
        return np.zeros(metric.dim)
    if metric.dual is not None:
        if metric.dual_domain is not None and not metric.dual_domain(list(x), xi):
            raise DomainError(f"covector {xi} outside the dual domain of {metric.name}")
        return duality.raise_index(metric.dual, list(x), xi)
    return duality.newton_inverse(
        metric.primal, list(x), xi, seed_y=seed_y, domain=metric.domain
    )


def gradient(metric: MetricSpec, f: ScalarField, x, crit_tol: float = CRITICAL_TOL) -> np.ndarray:
    """grad f = L^{-1}(df); the zero vector at critical points.

    Distance-type fields are merely C^1 at their center; the jet evaluation
    fails there with a domain error, which is reported as the critical point
    it is.
    """
    try:
        df = f.d(x)
    except jets.JetDomainError:
        return np.zeros(metric.dim)
    if np.linalg.norm(df) <= crit_tol:
        return np.zeros(metric.dim)
    return legendre_inverse(metric, x, df)


def gradient_jets(metric: MetricSpec, f: ScalarField, x, order: int = 1) -> list[Jet]:
    """grad f as jets over x (one jet per component), exact through ``order``."""
    x = np.asarray(x, float)
    n = metric.dim
    S = JetSpace.get(n, order)
    f_jet = f.jets(x, order + 1)
    df = [jets.remap(f_jet.partial_jet(i), S, tuple(range(n))) for i in range(n)]
    x_S = jets.seed_into(S, x, 0)
    if metric.dual is not None:
        return duality.raise_index_jets(metric.dual, x_S, df)
    # Chord iterations through the forward transform.
    df_val = np.array([d.value for d in df])
    y0 = duality.newton_inverse(metric.primal, list(x), df_val, domain=metric.domain)
    g0 = metrics.fundamental_tensor(metric, x, y0).g
    g0_inv = np.linalg.inv(g0)
    y_jets = [S.constant(v) for v in y0]
    for _ in range(order + 2):
        mom = duality.momentum_jets(metric.primal, x_S, y_jets)
        resid = [mom[i] - df[i] for i in range(n)]
        y_jets = [
            y_jets[i] - sum(g0_inv[i, j] * resid[j] for j in range(n)) for i in range(n)
        ]
    rmax = max(float(np.abs(r.coeffs).max()) for r in resid)
    scale = max(1.0, max(float(np.abs(yj.coeffs).max()) for yj in y_jets))
    if rmax > 1e-9 * scale:
        raise duality.ConvergenceError(
            f"gradient jets of {f.name} did not converge (residual {rmax:.3e})", rmax
        )
    return y_jets


# -- Hessian and Laplacians ------------------------------------------------------


def _gradient_or_raise(metric, f, x, crit_tol):
    try:
        df = f.d(x)
    except jets.JetDomainError as e:
        raise CriticalPointError(f"{f.name} is singular/critical at x={x}: {e}")
    if np.linalg.norm(df) <= crit_tol:
        raise CriticalPointError(f"{f.name} is critical at x={x}")
    return df, legendre_inverse(metric, x, df)


def hessian_matrix(metric: MetricSpec, f: ScalarField, x, crit_tol: float = CRITICAL_TOL) -> np.ndarray:
    """Hes f(e_i, e_j) = f_{,ij} - Gamma^k_ij(grad f) f_k."""
    x = np.asarray(x, float)
    n = metric.dim
    df, gf = _gradient_or_raise(metric, f, x, crit_tol)
    f_jet = f.jets(x, 2)
    fpp = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            fpp[i, j] = fpp[j, i] = f_jet.partial(alpha)
    Gamma = spray.geodesic_coefficients(metric, x, gf).Gamma
    return fpp - np.einsum("kij,k->ij", Gamma, df)


def hessian(metric: MetricSpec, f: ScalarField, x, X, Y) -> float:
    H = hessian_matrix(metric, f, x)
    return float(np.asarray(X, float) @ H @ np.asarray(Y, float))


def laplacian_hat(metric: MetricSpec, f: ScalarField, x, crit_tol: float = CRITICAL_TOL) -> float:
    """Metric Laplacian: trace of the Hessian against g_{grad f}^{-1}."""
    x = np.asarray(x, float)
    _, gf = _gradient_or_raise(metric, f, x, crit_tol)
    H = hessian_matrix(metric, f, x, crit_tol=crit_tol)
    g_inv = metrics.fundamental_tensor(metric, x, gf).g_inv
    return float(np.einsum("ij,ij->", g_inv, H))


def laplacian_sigma(
    metric: MetricSpec,
    f: ScalarField,
    x,
    crit_tol: float = CRITICAL_TOL,
    consistency_tol: float = 1e-7,
) -> float:
    """Volume-form Laplacian div_sigma(grad f).

    Computed both as laplacian_hat - S(grad f) and by the divergence formula;
    the two must agree to ``consistency_tol`` or a ConsistencyError is raised.
    """
    if metric.volume_density is None:
        raise DomainError(f"metric {metric.name} carries no volume density")
    x = np.asarray(x, float)
    _, gf = _gradient_or_raise(metric, f, x, crit_tol)
    via_s = laplacian_hat(metric, f, x, crit_tol=crit_tol) - spray.s_curvature(metric, x, gf)

    y_jets = gradient_jets(metric, f, x, order=1)
    n = metric.dim
    div = sum(y_jets[i].partial([int(i == j) for j in range(n)]) for i in range(n))
    sig = metric.volume_density(jets.seed(x, 1))
    if isinstance(sig, Jet):
        dln = sig.gradient() / sig.value
    else:
        dln = np.zeros(n)
    via_div = float(div + gf @ dln)

    if abs(via_div - via_s) > consistency_tol * max(1.0, abs(via_s)):
        raise ConsistencyError(
            f"divergence-form and S-curvature-form Laplacians disagree at x={x}: "
            f"{via_div} vs {via_s}"
        )
    return via_s


# -- level-set sampling and the isoparametric checker -----------------------------


class RayLevelSampler:
    """Samples points on level sets by shooting rays from an interior anchor.

    Along each random unit direction w the function s -> f(anchor + s w) is
    bracketed on a geometric grid, bisected to machine bracket width, then
    polished with two Newton steps using df.
    """

    def __init__(self, anchor, num_rays: int = 32, seed: int = 0, s_max: float = 50.0):
        self.anchor = np.asarray(anchor, float)
        self.num_rays = num_rays
        self.seed = seed
        self.s_max = s_max

    def directions(self, dim: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        w = rng.normal(size=(self.num_rays, dim))
        return w / np.linalg.norm(w, axis=1, keepdims=True)

    def sample(self, f: ScalarField, t: float) -> np.ndarray:
        from scipy.optimize import brentq

        dim = self.anchor.size
        pts = []
        for w0 in self.directions(dim):
            grid = np.geomspace(1e-6, self.s_max, 200)
            w = None
            for cand in (w0, -w0):  # flip the ray when the level is behind
                vals = np.array([f.value(self.anchor + s * cand) - t for s in grid])
                idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
                if idx.size:
                    w = cand
                    break
            if w is None:
                raise ValueError(
                    f"sampler could not bracket level {t} along direction {w0} "
                    f"from anchor {self.anchor}"
                )
            phi = lambda s: f.value(self.anchor + s * w) - t
            lo, hi = grid[idx[0]], grid[idx[0] + 1]
            s = brentq(phi, lo, hi, xtol=1e-13)
            for _ in range(2):
                x = self.anchor + s * w
                dphi = float(f.d(x) @ w)
                if dphi != 0.0:
                    s -= (f.value(x) - t) / dphi
            pts.append(self.anchor + s * w)
        return np.array(pts)


@dataclass
class LevelRecord:
    t: float
    count: int
    a_mean: float
    a_maxdev: float
    b_mean: float
    b_maxdev: float
    b_sigma_mean: float | None = None
    b_sigma_maxdev: float | None = None


@dataclass
class LevelSetReport:
    field_name: str
    metric_name: str
    records: list[LevelRecord]
    transnormal_tol: float
    isoparametric_tol: float
    is_transnormal: bool = field(init=False)
    is_isoparametric: bool = field(init=False)

    def __post_init__(self):
        rel_a = max(r.a_maxdev / max(1e-300, abs(r.a_mean)) for r in self.records)
        rel_b = max(r.b_maxdev / max(1.0, abs(r.b_mean)) for r in self.records)
        self.is_transnormal = bool(rel_a < self.transnormal_tol)
        self.is_isoparametric = bool(self.is_transnormal and rel_b < self.isoparametric_tol)

    def a_table(self) -> dict[float, float]:
        return {r.t: r.a_mean for r in self.records}

    def b_table(self) -> dict[float, float]:
        return {r.t: r.b_mean for r in self.records}

    def to_text(self) -> str:
        lines = [
            f"level-set report: f={self.field_name} on {self.metric_name}",
            f"verdict: transnormal={self.is_transnormal} isoparametric={self.is_isoparametric}",
        ]
        for r in self.records:
            line = (
                f"t={r.t:.9g} n={r.count} a={r.a_mean:.12g} (maxdev {r.a_maxdev:.3e}) "
                f"b={r.b_mean:.12g} (maxdev {r.b_maxdev:.3e})"
            )
            if r.b_sigma_mean is not None:
                line += f" b_sigma={r.b_sigma_mean:.12g} (maxdev {r.b_sigma_maxdev:.3e})"
            lines.append(line)
        return "\n".join(lines)

    def csv_rows(self) -> list[list]:
        header = ["t", "count", "a_mean", "a_maxdev", "b_mean", "b_maxdev",
                  "b_sigma_mean", "b_sigma_maxdev"]
        rows = [header]
        for r in self.records:
            rows.append([
                r.t, r.count, r.a_mean, r.a_maxdev, r.b_mean, r.b_maxdev,
                "" if r.b_sigma_mean is None else r.b_sigma_mean,
                "" if r.b_sigma_maxdev is None else r.b_sigma_maxdev,
            ])
        return rows


def isoparametric_check(
    metric: MetricSpec,
    f: ScalarField,
    levels: Sequence[float],
    sampler: RayLevelSampler,
    transnormal_tol: float = 1e-5,
    isoparametric_tol: float = 1e-4,
    with_sigma: bool | None = None,
) -> LevelSetReport:
    """Statistics of F^2(grad f) and of the Laplacian over sampled level sets,
    with transnormal/isoparametric verdicts against the given tolerances."""
    if with_sigma is None:
        with_sigma = metric.volume_density is not None
    records = []
    for t in levels:
        pts = sampler.sample(f, t)
        a_vals, b_vals, bs_vals = [], [], []
        for x in pts:
            df = f.d(x)
            if np.linalg.norm(df) <= 1e-8:
                raise CriticalPointError(f"level {t} contains a critical point at x={x}")
            gf = legendre_inverse(metric, x, df)
            a_vals.append(metric.F(x, gf) ** 2)
            b_vals.append(laplacian_hat(metric, f, x))
            if with_sigma:
                bs_vals.append(laplacian_sigma(metric, f, x))
        a_vals = np.array(a_vals)
        b_vals = np.array(b_vals)
        rec = LevelRecord(
            t=float(t),
            count=len(pts),
            a_mean=float(a_vals.mean()),
            a_maxdev=float(np.abs(a_vals - a_vals.mean()).max()),
            b_mean=float(b_vals.mean()),
            b_maxdev=float(np.abs(b_vals - b_vals.mean()).max()),
        )
        if with_sigma:
            bs = np.array(bs_vals)
            rec.b_sigma_mean = float(bs.mean())
            rec.b_sigma_maxdev = float(np.abs(bs - bs.mean()).max())
        records.append(rec)
    return LevelSetReport(
        field_name=f.name,
        metric_name=metric.name,
        records=records,
        transnormal_tol=transnormal_tol,
        isoparametric_tol=isoparametric_tol,
    )


# -- the two scalar identities linking a, b and the principal curvatures ---------


def _value_and_derivative(fn: Callable, t: float, h: float):
    """fn(t) and fn'(t); through a jet when fn supports it, otherwise by a
    five-point central stencil of step h."""
    try:
        out = fn(jets.seed([t], 1)[0])
    except (TypeError, AttributeError, ValueError, jets.JetError):
        out = None
    if isinstance(out, Jet):
        return np.array([out.value]), np.array([out.partial((1,))])
    if out is not None and np.ndim(out) == 1 and isinstance(out[0], Jet):
        return (
            np.array([j.value for j in out]),
            np.array([j.partial((1,)) for j in out]),
        )
    vals = np.array([np.atleast_1d(np.asarray(fn(t + k * h), float)) for k in (-2, -1, 0, 1, 2)])
    deriv = (vals[0] - 8 * vals[1] + 8 * vals[3] - vals[4]) / (12 * h)
    return vals[2], deriv


@dataclass
class IdentityReport:
    t_grid: np.ndarray
    sum_residuals: np.ndarray          # per t
    evolution_residuals: np.ndarray    # per t, per principal curvature
    max_sum_residual: float
    max_evolution_residual: float


def isoparametric_identities(
    a_fn: Callable,
    b_fn: Callable,
    kappas_fn: Callable,
    t_grid: Sequence[float],
    c: float,
    fd_step: float = 1e-2,
) -> IdentityReport:
    """Residuals of the two identities tying a, b and the principal curvatures
    kappa_i of the level family of an isoparametric function:

        sum_i kappa_i = a'(t) / (2 sqrt(a)) - b(t) / sqrt(a)
        sqrt(a(t)) dkappa_i/dt = c + kappa_i^2

    ``a_fn``, ``b_fn``, ``kappas_fn`` may be closed forms (jet-aware) or
    measurement procedures; derivatives fall back to local five-point
    stencils of step ``fd_step``.
    """
    t_grid = np.asarray(t_grid, float)
    sum_res, evo_res = [], []
    for t in t_grid:
        a_val, a_prime = _value_and_derivative(a_fn, t, fd_step)
        a_val, a_prime = float(a_val[0]), float(a_prime[0])
        if a_val <= 0:
            raise ValueError(f"a(t) must be positive on the grid, got a({t}) = {a_val}")
        b_val = float(np.atleast_1d(np.asarray(b_fn(t), float))[0])
        kap, kap_prime = _value_and_derivative(kappas_fn, t, fd_step)
        sqrt_a = np.sqrt(a_val)
        sum_res.append(abs(kap.sum() - (a_prime / (2 * sqrt_a) - b_val / sqrt_a)))
        evo_res.append(np.abs(sqrt_a * kap_prime - (c + kap**2)))
    sum_res = np.array(sum_res)
    evo_res = np.array(evo_res)
    return IdentityReport(
        t_grid=t_grid,
        sum_residuals=sum_res,
        evolution_residuals=evo_res,
        max_sum_residual=float(sum_res.max()),
        max_evolution_residual=float(evo_res.max()),
    )

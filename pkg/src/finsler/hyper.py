"""Immersed hypersurfaces: unit normals, shape operators, umbilicity.

The unit normal of a hypersurface patch solves g_n(n, phi_a) = 0 together
with F(n) = 1.  For metrics with a closed primal evaluator this system is
solved by damped Newton seeded from the Euclidean unit normal; for
dual-defined (conic) metrics the conormal direction is computed exactly from
the tangent frame and pushed through the inverse Legendre transform.  The two
co-orientations are always solved independently, never by negating a normal,
since L^{-1}(-nu) != -L^{-1}(nu) for non-reversible metrics.

The shape operator A_n X = -nabla^n_X n is assembled from jet-level
derivatives of the normal field (implicit differentiation of the defining
system, not finite differences of the solver).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import duality, jets, metrics, spray
from .jets import Augmentation, Jet, JetSpace
from .metrics import DomainError, MetricSpec

__all__ = [
    "HypersurfacePatch",
    "ShapeData",
    "ShapeOperatorError",
    "UmbilicReport",
    "helicoid",
    "round_sphere",
    "f_sphere",
    "ellipsoid",
    "graph",
    "unit_normal",
    "normal_jets",
    "shape_operator",
    "umbilic_check",
]


class ShapeOperatorError(RuntimeError):
    """Normal-field differentiation or tangency validation failed."""


@dataclass
class HypersurfacePatch:
    """Parametric immersion u in R^{n-1} -> x in R^n, jet-evaluable."""

    immersion: Callable
    param_dim: int
    ambient_dim: int
    param_domain: list[tuple[float, float]]
    orientation: Callable | None = None  # u -> reference covector for the + branch
    name: str = "patch"

    def point(self, u) -> np.ndarray:
        out = self.immersion([float(v) for v in u])
        return np.array([c.value if isinstance(c, Jet) else float(c) for c in out])

    def jets(self, u, order: int) -> list[Jet]:
        out = self.immersion(jets.seed(np.asarray(u, float), order))
        return [c.require_finite(self.name) for c in out]

    def frame(self, u) -> tuple[np.ndarray, np.ndarray]:
        """(x, dphi) with dphi[:, a] the tangent vector along u^a."""
        imm = self.jets(u, 1)
        x = np.array([c.value for c in imm])
        dphi = np.array([c.gradient() for c in imm])
        return x, dphi

    def grid(self, counts: Sequence[int], margin: float = 0.0) -> list[np.ndarray]:
        axes = []
        for (lo, hi), m in zip(self.param_domain, counts):
            pad = margin * (hi - lo)
            axes.append(np.linspace(lo + pad, hi - pad, m))
        mesh = np.meshgrid(*axes, indexing="ij")
        return [np.array(p) for p in zip(*(ax.ravel() for ax in mesh))]

    def __repr__(self) -> str:  # pragma: no cover
        return f"HypersurfacePatch({self.name})"


# -- builders -------------------------------------------------------------------


def helicoid(pitch: float) -> HypersurfacePatch:
    """(u cos v, u sin v, pitch * v); conic-admissible normals need u < 1/2."""

    def imm(u):
        return [u[0] * jets.cos(u[1]), u[0] * jets.sin(u[1]), pitch * u[1]]

    def orient(u):
        # Euclidean conormal of the parametrization, smooth in (u, v).
        return np.array([pitch * np.sin(u[1]), -pitch * np.cos(u[1]), u[0]])

    return HypersurfacePatch(
        immersion=imm,
        param_dim=2,
        ambient_dim=3,
        param_domain=[(0.0, 0.5), (0.0, 2 * np.pi)],
        orientation=orient,
        name=f"helicoid({pitch})",
    )


def round_sphere(radius: float, center=None, ambient_dim: int = 3) -> HypersurfacePatch:
    """Euclidean round sphere (circle for ambient_dim=2), outward oriented."""
    c = np.zeros(ambient_dim) if center is None else np.asarray(center, float)
    if ambient_dim == 2:

        def imm(u):
            return [c[0] + radius * jets.cos(u[0]), c[1] + radius * jets.sin(u[0])]

        domain = [(0.0, 2 * np.pi)]
    elif ambient_dim == 3:

        def imm(u):
            s = jets.sin(u[0])
            return [
                c[0] + radius * s * jets.cos(u[1]),
                c[1] + radius * s * jets.sin(u[1]),
                c[2] + radius * jets.cos(u[0]),
            ]

        domain = [(0.0, np.pi), (0.0, 2 * np.pi)]
    else:
        raise ValueError("round_sphere supports ambient dimension 2 or 3")
    return HypersurfacePatch(
        immersion=imm,
        param_dim=ambient_dim - 1,
        ambient_dim=ambient_dim,
        param_domain=domain,
        orientation=lambda u: np.array(
            [v.value if isinstance(v, Jet) else v for v in imm(list(u))]
        )
        - c,
        name=f"round_sphere({radius})",
    )


def f_sphere(metric: MetricSpec, radius: float, center=None) -> HypersurfacePatch:
    """The metric sphere {F(x - center) = radius} of a Minkowski metric,
    parameterized over Euclidean directions; outward oriented."""
    if not metric.x_independent:
        raise ValueError("f_sphere needs a Minkowski (x-independent) metric")
    n = metric.dim
    c = np.zeros(n) if center is None else np.asarray(center, float)
    x0 = [0.0] * n

    def direction(u):
        if n == 2:
            return [jets.cos(u[0]), jets.sin(u[0])]
        if n == 3:
            s = jets.sin(u[0])
            return [s * jets.cos(u[1]), s * jets.sin(u[1]), jets.cos(u[0])]
        raise ValueError("f_sphere supports dimension 2 or 3")

    def imm(u):
        d = direction(u)
        scale = radius * metric.primal(x0, d).reciprocal() if isinstance(d[0], Jet) else radius / metric.primal(x0, d)
        return [ci + di * scale for ci, di in zip(c, d)]

    def orient(u):
        d = direction([float(v) for v in u])
        return np.array([v.value if isinstance(v, Jet) else float(v) for v in d])

    domain = [(0.0, np.pi), (0.0, 2 * np.pi)][: n - 1] if n == 3 else [(0.0, 2 * np.pi)]
    return HypersurfacePatch(
        immersion=imm,
        param_dim=n - 1,
        ambient_dim=n,
        param_domain=domain,
        orientation=orient,
        name=f"f_sphere({metric.name},{radius})",
    )


def ellipsoid(axes: Sequence[float], center=None) -> HypersurfacePatch:
    """Coordinate-aligned ellipsoid in R^3 (non-umbilic control surface)."""
    a1, a2, a3 = [float(v) for v in axes]
    c = np.zeros(3) if center is None else np.asarray(center, float)

    def imm(u):
        s = jets.sin(u[0])
        return [
            c[0] + a1 * s * jets.cos(u[1]),
            c[1] + a2 * s * jets.sin(u[1]),
            c[2] + a3 * jets.cos(u[0]),
        ]

    def orient(u):
        s = np.sin(u[0])
        return np.array(
            [s * np.cos(u[1]) / a1, s * np.sin(u[1]) / a2, np.cos(u[0]) / a3]
        )

    return HypersurfacePatch(
        immersion=imm,
        param_dim=2,
        ambient_dim=3,
        param_domain=[(0.0, np.pi), (0.0, 2 * np.pi)],
        orientation=orient,
        name=f"ellipsoid({a1},{a2},{a3})",
    )


def graph(height: Callable, param_domain: list[tuple[float, float]], name: str = "graph") -> HypersurfacePatch:
    """Graph hypersurface (u, h(u)), oriented by the upward covector."""
    p = len(param_domain)

    def imm(u):
        return list(u) + [height(u)]

    return HypersurfacePatch(
        immersion=imm,
        param_dim=p,
        ambient_dim=p + 1,
        param_domain=param_domain,
        orientation=lambda u: np.eye(p + 1)[-1],
        name=name,
    )


# -- unit normals ----------------------------------------------------------------


def _euclid_conormal(dphi: np.ndarray) -> np.ndarray:
    """Unit Euclidean null covector of the tangent frame (annihilator)."""
    U, s, _ = np.linalg.svd(dphi, full_matrices=True)
    if s.min() <= 1e-8 * s.max():
        raise ShapeOperatorError(f"immersion is rank-deficient (singular values {s})")
    return U[:, -1]


def _reference_covector(patch: HypersurfacePatch, u, dphi: np.ndarray) -> np.ndarray:
    if patch.orientation is not None:
        return np.asarray(patch.orientation(list(np.asarray(u, float))), float)
    nu = _euclid_conormal(dphi)
    k = np.nonzero(np.abs(nu) > 1e-12)[0][0]
    return nu if nu[k] > 0 else -nu


def _oriented_conormal(patch, u, dphi, co_orientation: int) -> np.ndarray:
    nu = _euclid_conormal(dphi)
    ref = _reference_covector(patch, u, dphi)
    if float(nu @ ref) * co_orientation < 0:
        nu = -nu
    return nu


def _cone_message(metric: MetricSpec, xi: np.ndarray) -> str:
    if metric.family == "conic":
        a = metric.params["a"]
        lhs = xi[0] ** 2 + xi[1] ** 2
        rhs = 4 * a * a * xi[2] ** 2
        return (
            f"conormal {xi} exits the cone of {metric.name}: "
            f"xi1^2+xi2^2 = {lhs:.6g} must exceed 4 a^2 xi3^2 = {rhs:.6g} "
            f"and xi3 must be nonzero"
        )
    return f"conormal {xi} outside the dual domain of {metric.name}"


def unit_normal(metric: MetricSpec, patch: HypersurfacePatch, u, co_orientation: int = 1,
                method: str = "auto") -> np.ndarray:
    """The unit normal n with g_n(n, phi_a) = 0 and F(n) = 1 at patch point u.

    ``co_orientation=+1`` selects the branch aligned with the patch's
    reference covector, ``-1`` the opposite branch (solved independently).
    """
    x, dphi = patch.frame(u)
    if method == "auto":
        method = "newton" if metric.primal_is_closed else "dual"
    nu = _oriented_conormal(patch, u, dphi, co_orientation)
    if method == "dual":
        if metric.dual is None:
            raise DomainError(f"metric {metric.name} has no dual evaluator")
        if metric.dual_domain is not None and not metric.dual_domain(list(x), nu):
            raise DomainError(_cone_message(metric, nu))
        nu = nu / metric.F_dual(x, nu)
        return duality.raise_index(metric.dual, list(x), nu)
    return _newton_normal(metric, x, dphi, nu)


def _normal_system(metric, x, n_vec, dphi):
    """Residual [g_n(n, phi_a); (F^2(n)-1)/2] and its Jacobian in n."""
    nn = len(n_vec)
    n_jets = jets.seed(n_vec, 2)
    f2 = metrics.primal_f2_jet(metric, list(x), n_jets)
    mom = 0.5 * f2.gradient()
    g = np.empty((nn, nn))
    for i in range(nn):
        for j in range(i, nn):
            alpha = [0] * nn
            alpha[i] += 1
            alpha[j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(alpha)
    resid = np.concatenate([dphi.T @ mom, [0.5 * (f2.value - 1.0)]])
    jac = np.vstack([dphi.T @ g, mom])
    return resid, jac


def _newton_normal(metric, x, dphi, nu_seed, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    n_vec = np.array(nu_seed, float)
    n_vec = n_vec / metric.F(x, n_vec)
    resid, jac = _normal_system(metric, x, n_vec, dphi)
    rnorm = np.linalg.norm(resid)
    for _ in range(max_iter):
        if rnorm < tol:
            return n_vec
        step = np.linalg.solve(jac, resid)
        lam = 1.0
        while True:
            trial = n_vec - lam * step
            try:
                r_t, j_t = _normal_system(metric, x, trial, dphi)
                ok = np.linalg.norm(r_t) < rnorm
            except (jets.JetError, DomainError):
                ok = False
            if ok:
                n_vec, resid, jac, rnorm = trial, r_t, j_t, np.linalg.norm(r_t)
                break
            lam *= 0.5
            if lam < 1e-12:
                raise duality.ConvergenceError(
                    f"unit-normal Newton stalled at residual {rnorm:.3e}", rnorm
                )
    raise duality.ConvergenceError(
        f"unit-normal Newton did not converge (residual {rnorm:.3e})", rnorm
    )


def normal_jets(metric: MetricSpec, patch: HypersurfacePatch, u, order: int = 1,
                co_orientation: int = 1, method: str = "auto"):
    """(x_jets, n_jets) over the parameters, exact through ``order``.

    The Newton system is differentiated implicitly: chord iterations with the
    converged float Jacobian lift the solution to jet level order by order.
    """
    u = np.asarray(u, float)
    p = patch.param_dim
    n = metric.dim
    S = JetSpace.get(p, order)
    imm = patch.jets(u, min(order + 1, jets.MAX_ORDER))
    x_jets = [jets.remap(c, S, tuple(range(p))) for c in imm]
    phi_jets = [[jets.remap(c.partial_jet(a), S, tuple(range(p))) for c in imm] for a in range(p)]
    x, dphi = patch.frame(u)
    if method == "auto":
        method = "newton" if metric.primal_is_closed else "dual"

    if method == "dual":
        nu0 = _oriented_conormal(patch, u, dphi, co_orientation)
        if metric.dual_domain is not None and not metric.dual_domain(list(x), nu0):
            raise DomainError(_cone_message(metric, nu0))
        rows = [[phi_jets[a][i] for i in range(n)] for a in range(p)]
        rows.append([S.constant(v) for v in nu0])
        rhs = [[S.constant(0.0)] for _ in range(p)] + [[S.constant(1.0)]]
        xi_jets = [row[0] for row in jets.solve_linear(rows, rhs)]
        Fs = metric.dual(x_jets, xi_jets)
        inv = Fs.reciprocal()
        nu_jets = [xj * inv for xj in xi_jets]
        n_jets = duality.raise_index_jets(metric.dual, x_jets, nu_jets)
        return x_jets, n_jets

    n0 = _newton_normal(metric, x, dphi, _oriented_conormal(patch, u, dphi, co_orientation))
    _, jac0 = _normal_system(metric, x, n0, dphi)
    jac_inv = np.linalg.inv(jac0)
    aug = Augmentation.get(S, n)
    x_w = [aug.lift(c) for c in x_jets]
    n_jets = [S.constant(v) for v in n0]
    for _ in range(order + 2):
        n_w = [aug.lift(c) + aug.eps(i) for i, c in enumerate(n_jets)]
        F = metric.primal(x_w, n_w)
        f2 = (F * F) * 0.5
        mom = [aug.extract_eps(f2, i) for i in range(n)]
        resid = [
            sum(mom[i] * phi_jets[a][i] for i in range(n)) for a in range(p)
        ]
        base = aug.extract_base(f2)
        resid.append(base - 0.5)
        n_jets = [
            n_jets[i] - sum(jac_inv[i, k] * resid[k] for k in range(p + 1))
            for i in range(n)
        ]
    rmax = max(float(np.abs(r.coeffs).max()) for r in resid)
    scale = max(1.0, max(float(np.abs(c.coeffs).max()) for c in n_jets))
    if rmax > 1e-8 * scale:
        raise duality.ConvergenceError(
            f"normal-field jets did not converge (residual {rmax:.3e})", rmax
        )
    return x_jets, n_jets


# -- shape operator ---------------------------------------------------------------


@dataclass
class ShapeData:
    u: np.ndarray
    x: np.ndarray
    normal: np.ndarray
    A: np.ndarray             # (p, p), basis {phi_a}
    induced_g: np.ndarray     # (p, p)
    kappas: np.ndarray        # ascending
    mean_curvature: float
    co_orientation: int
    self_adjoint_dev: float   # || gA - (gA)^T ||_max
    tangency_residual: float

    def multiplicities(self, gap: float = 1e-5) -> list[int]:
        out, run = [], 1
        for i in range(1, len(self.kappas)):
            if self.kappas[i] - self.kappas[i - 1] > gap:
                out.append(run)
                run = 1
            else:
                run += 1
        out.append(run)
        return out


def shape_operator(metric: MetricSpec, patch: HypersurfacePatch, u,
                   co_orientation: int = 1, method: str = "auto") -> ShapeData:
    """A_n = -nabla^n n restricted to the tangent space, with principal
    curvatures (eigenvalues, ascending) and anisotropic mean curvature."""
    u = np.asarray(u, float)
    p = patch.param_dim
    x_jets, n_jets = normal_jets(metric, patch, u, order=1,
                                 co_orientation=co_orientation, method=method)
    x = np.array([c.value for c in x_jets])
    n_vec = np.array([c.value for c in n_jets])
    dphi = np.array([c.gradient() for c in x_jets])       # (n, p)
    dn = np.array([c.gradient() for c in n_jets])          # (n, p)

    Gamma = spray.geodesic_coefficients(metric, x, n_vec).Gamma
    W = dn + np.einsum("ijk,ja,k->ia", Gamma, dphi, n_vec)  # nabla^n_{phi_a} n
    g = metrics.fundamental_tensor(metric, x, n_vec).g
    induced = dphi.T @ g @ dphi
    h = -dphi.T @ g @ W                                     # h[c, a] = -g(W_a, phi_c)
    sym_dev = float(np.abs(h - h.T).max())
    A = np.linalg.solve(induced, h)
    kappas = scipy.linalg.eigh(0.5 * (h + h.T), induced, eigvals_only=True)

    resid = W + dphi @ A                                   # g-orthogonal defect
    tangency = float(
        max(np.sqrt(abs(resid[:, a] @ g @ resid[:, a])) for a in range(p))
    )
    scale = max(1.0, float(np.abs(A).max()))
    if tangency > 1e-6 * scale:
        raise ShapeOperatorError(
            f"normal derivative is not tangent at u={u} (residual {tangency:.3e}); "
            "solver or domain problem"
        )
    return ShapeData(
        u=u,
        x=x,
        normal=n_vec,
        A=A,
        induced_g=induced,
        kappas=np.sort(kappas),
        mean_curvature=float(kappas.sum()),
        co_orientation=co_orientation,
        self_adjoint_dev=sym_dev,
        tangency_residual=tangency,
    )


@dataclass
class UmbilicReport:
    is_umbilic_pointwise: bool
    max_kappa_spread: float      # max over the grid of (kappa_max - kappa_min)
    lambda_values: np.ndarray    # mean principal curvature per grid point
    lambda_constancy: float      # max |lambda(u) - lambda(u_0)|
    tol: float


def umbilic_check(metric: MetricSpec, patch: HypersurfacePatch, u_grid,
                  tol: float = 1e-5, co_orientation: int = 1) -> UmbilicReport:
    """Pointwise umbilicity over a grid, plus constancy of the umbilic factor
    (constant on a connected patch in a space form)."""
    spreads, lambdas = [], []
    for u in u_grid:
        sd = shape_operator(metric, patch, u, co_orientation=co_orientation)
        spreads.append(float(sd.kappas[-1] - sd.kappas[0]))
        lambdas.append(float(sd.kappas.mean()))
    lambdas = np.array(lambdas)
    return UmbilicReport(
        is_umbilic_pointwise=bool(max(spreads) < tol),
        max_kappa_spread=float(max(spreads)),
        lambda_values=lambdas,
        lambda_constancy=float(np.abs(lambdas - lambdas[0]).max()),
        tol=tol,
    )

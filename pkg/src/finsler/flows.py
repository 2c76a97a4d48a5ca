"""ODE layer: geodesics, Jacobi fields, Riccati evolution, focal data,
comparison functions and distances.

Sign conventions
----------------
The scalar Riccati solver integrates kappa' = -(kappa^2 + c), the evolution
of a principal curvature taken with respect to the normal pointing at a focal
point while moving away from it; its solutions are the shifted focal families
kappa(s) = focal_curvature(c, s0 + s).  The matrix transport integrates
A' = A^2 + R along the normal geodesic with the co-orientation equal to the
direction of travel (the shape operator of the unit sphere transported inward
in flat space follows kappa(s) = 1/(1 - s) and blows up at the center).  The
two displayed forms differ by the orientation of arclength relative to the
normal; both are exercised against the closed focal-curvature forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.integrate import quad, solve_ivp

from . import hyper, jets, metrics, scalar
from .metrics import DomainError, MetricSpec
from .spray import SprayJets

__all__ = [
    "GeodesicTrajectory",
    "integrate_geodesic",
    "JacobiField",
    "jacobi_field",
    "RiccatiBlowup",
    "RiccatiScalarResult",
    "riccati_scalar",
    "riccati_closed",
    "RiccatiTransport",
    "riccati_matrix_transport",
    "focal_curvature",
    "level_distance",
    "space_form_distance",
    "shooting_distance",
    "gradient_flow_distance",
    "ComparisonFunctions",
    "comparison",
]


# -- geodesics --------------------------------------------------------------------


@dataclass
class GeodesicTrajectory:
    metric: MetricSpec
    x0: np.ndarray
    y0: np.ndarray
    s_max: float
    ts: np.ndarray
    states: np.ndarray  # (len(ts), 2n)
    _sol: object

    def state(self, s):
        """(x(s), y(s)) from the dense interpolant."""
        z = self._sol(s)
        n = self.x0.size
        return z[:n], z[n:]

    def positions(self, s_values) -> np.ndarray:
        return np.array([self.state(s)[0] for s in np.atleast_1d(s_values)])

    def speed_drift(self, samples: int = 50) -> float:
        """Max deviation of F(x(s), y(s)) from its initial value."""
        F0 = self.metric.F(self.x0, self.y0)
        ss = np.linspace(0.0, self.s_max, samples)
        return float(max(abs(self.metric.F(*self.state(s)) - F0) for s in ss))


def integrate_geodesic(
    metric: MetricSpec,
    x0,
    y0,
    s_max: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    check_domain: bool = True,
) -> GeodesicTrajectory:
    """Adaptive embedded Runge-Kutta solution of x'' + 2 G(x, x') = 0 with
    dense output.

    Step-size underflow surfaces as a RuntimeError; with ``check_domain`` the
    integrator nodes are verified against the metric's domain and a violation
    is reported with the exit parameter.
    """
    x0 = np.asarray(x0, float)
    y0 = np.asarray(y0, float)
    metric.check_domain(x0, y0)
    n = x0.size

    def rhs(s, z):
        try:
            sj = SprayJets(metric, z[:n], z[n:], depth=2)
        except DomainError as e:
            raise DomainError(
                f"geodesic exits the domain of {metric.name} near s = {s:.9g}: {e}"
            )
        return np.concatenate([z[n:], -2.0 * sj.G])

    sol = solve_ivp(
        rhs,
        (0.0, s_max),
        np.concatenate([x0, y0]),
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"geodesic integration failed: {sol.message}")
    if check_domain:
        for s, z in zip(sol.t, sol.y.T):
            if not metric.domain(list(z[:n]), z[n:]):
                raise DomainError(
                    f"geodesic exits the domain of {metric.name} by s = {s:.9g}"
                )
    return GeodesicTrajectory(
        metric=metric, x0=x0, y0=y0, s_max=s_max, ts=sol.t, states=sol.y.T, _sol=sol.sol
    )


# -- Jacobi fields -----------------------------------------------------------------


@dataclass
class JacobiField:
    trajectory: GeodesicTrajectory
    ts: np.ndarray
    J: np.ndarray          # (len(ts), n)
    J_cov: np.ndarray      # covariant derivative along the geodesic
    first_zero: float | None

    def norm(self, s) -> float:
        """g_{(x, ydot)}-norm of J at parameter s."""
        x, y = self.trajectory.state(s)
        g = metrics.fundamental_tensor(self.trajectory.metric, x, y).g
        idx = np.searchsorted(self.ts, s)
        idx = min(max(idx, 0), len(self.ts) - 1)
        J = self.J[idx]
        return float(np.sqrt(J @ g @ J))


def jacobi_field(
    metric: MetricSpec,
    trajectory: GeodesicTrajectory,
    J0,
    J0_prime,
    rtol: float = 1e-10,
    atol: float = 1e-13,
) -> JacobiField:
    """Integrate the Jacobi equation along a geodesic, with covariant
    derivatives taken at reference vector ydot; detects the first interior
    zero of J (conjugate value) by a sign change of g(J, E) for a parallel
    field E."""
    n = metric.dim
    J0 = np.asarray(J0, float)
    J0p = np.asarray(J0_prime, float)
    E0 = J0 if np.linalg.norm(J0) > 0 else J0p
    if np.linalg.norm(E0) == 0:
        raise ValueError("J0 and J0' cannot both vanish")

    def rhs(s, z):
        x, y = trajectory.state(s)
        sj = SprayJets(metric, x, y, depth=5)
        Gam, R = sj.Gamma, sj.R_mixed
        J, V, E = z[:n], z[n : 2 * n], z[2 * n :]
        GyJ = np.einsum("ijk,j,k->i", Gam, y, J)
        GyV = np.einsum("ijk,j,k->i", Gam, y, V)
        GyE = np.einsum("ijk,j,k->i", Gam, y, E)
        return np.concatenate([V - GyJ, -GyV - R @ J, -GyE])

    def zero_event(s, z):
        x, y = trajectory.state(s)
        g = metrics.fundamental_tensor(metric, x, y).g
        return float(z[:n] @ g @ z[2 * n :])

    zero_event.terminal = False
    zero_event.direction = 0

    sol = solve_ivp(
        rhs,
        (0.0, trajectory.s_max),
        np.concatenate([J0, J0p, E0]),
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=zero_event,
    )
    if not sol.success:
        raise RuntimeError(f"Jacobi integration failed: {sol.message}")
    zeros = [s for s in sol.t_events[0] if s > 1e-9]
    return JacobiField(
        trajectory=trajectory,
        ts=sol.t,
        J=sol.y[:n].T,
        J_cov=sol.y[n : 2 * n].T,
        first_zero=float(zeros[0]) if zeros else None,
    )


# -- scalar Riccati evolution --------------------------------------------------------


class RiccatiBlowup(RuntimeError):
    """Finite-time pole of a Riccati solution (a focal point)."""

    def __init__(self, location: float, multiplicity: int | None = None):
        super().__init__(f"Riccati blow-up at s = {location}")
        self.location = location
        self.multiplicity = multiplicity


def riccati_closed(c: float, kappa0: float) -> tuple[Callable, float | None]:
    """Closed-form solution of kappa' = -(kappa^2 + c), kappa(0) = kappa0.

    Returns (kappa(s), pole) with pole = None when the solution is global.
    """
    if c == 0.0:
        if kappa0 == 0.0:
            return (lambda s: np.zeros_like(np.asarray(s, float)) + 0.0), None
        pole = -1.0 / kappa0 if kappa0 < 0 else None
        return (lambda s: kappa0 / (1.0 + kappa0 * np.asarray(s, float))), pole
    if c > 0.0:
        rc = np.sqrt(c)
        theta0 = np.arctan2(rc, kappa0)  # in (0, pi)
        pole = (np.pi - theta0) / rc

        def fn(s):
            arg = theta0 + rc * np.asarray(s, float)
            return rc * np.cos(arg) / np.sin(arg)

        return fn, float(pole)
    mu = np.sqrt(-c)
    if kappa0 == mu or kappa0 == -mu:
        return (lambda s: np.full_like(np.asarray(s, float), kappa0, dtype=float)), None
    if abs(kappa0) < mu:
        psi0 = np.arctanh(kappa0 / mu)
        return (lambda s: mu * np.tanh(mu * np.asarray(s, float) + psi0)), None
    psi0 = np.arctanh(mu / kappa0)  # sign of kappa0
    pole = -psi0 / mu if kappa0 < -mu else None

    def fn(s):
        arg = mu * np.asarray(s, float) + psi0
        return mu / np.tanh(arg)

    return fn, (float(pole) if pole is not None else None)


@dataclass
class RiccatiScalarResult:
    s: np.ndarray
    kappa_closed: np.ndarray
    kappa_ode: np.ndarray
    pole: float | None


def riccati_scalar(
    c: float,
    kappa0: float,
    s,
    rtol: float = 1e-12,
    atol: float = 1e-12,
    blowup_threshold: float = 1e8,
) -> RiccatiScalarResult:
    """kappa(s) solving kappa' = -(kappa^2 + c) by both the closed form and an
    adaptive ODE integration; raises :class:`RiccatiBlowup` if a pole falls
    inside the requested range."""
    s = np.atleast_1d(np.asarray(s, float))
    closed_fn, pole = riccati_closed(c, kappa0)
    s_end = float(s.max())
    if pole is not None and pole <= s_end:
        raise RiccatiBlowup(pole)

    def event(t, k):
        return abs(k[0]) - blowup_threshold

    event.terminal = True

    sol = solve_ivp(
        lambda t, k: [-(k[0] ** 2 + c)],
        (0.0, s_end),
        [kappa0],
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=event,
    )
    if sol.t_events[0].size:
        k_end = sol.sol(sol.t_events[0][0])[0]
        raise RiccatiBlowup(float(sol.t_events[0][0] - 1.0 / k_end))
    return RiccatiScalarResult(
        s=s,
        kappa_closed=np.asarray(closed_fn(s), float),
        kappa_ode=sol.sol(s)[0],
        pole=pole,
    )


# -- matrix Riccati transport ----------------------------------------------------------


@dataclass
class RiccatiTransport:
    s: np.ndarray
    A: np.ndarray          # (len(s), m, m) in the transported frame
    kappas: np.ndarray     # (len(s), m)
    blowup: tuple[float, int] | None   # (pole location, multiplicity estimate)
    shape0: hyper.ShapeData


def riccati_matrix_transport(
    metric: MetricSpec,
    patch: hyper.HypersurfacePatch,
    u,
    s_max: float,
    co_orientation: int = 1,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    blowup_threshold: float = 1e8,
    samples: int = 60,
) -> RiccatiTransport:
    """Transport the shape operator along the unit normal geodesic by
    A' = A^2 + R in a connection-parallel tangent frame.

    A blow-up event (a focal point) terminates the integration; the pole is
    extrapolated through the reciprocal of the diverging eigenvalue, and the
    multiplicity estimated from the number of diverging eigenvalues.
    """
    sd0 = hyper.shape_operator(metric, patch, u, co_orientation=co_orientation)
    n = metric.dim
    m = n - 1
    _, dphi = patch.frame(u)

    def unpack(z):
        x = z[:n]
        y = z[n : 2 * n]
        E = z[2 * n : 2 * n + n * m].reshape(n, m)
        A = z[2 * n + n * m :].reshape(m, m)
        return x, y, E, A

    def frame_data(x, y, E):
        sj = SprayJets(metric, x, y, depth=5)
        Gf = E.T @ sj.g @ E
        Rt = np.linalg.solve(Gf, E.T @ sj.g @ (sj.R_mixed @ E))
        return sj, Gf, Rt

    def rhs(s, z):
        x, y, E, A = unpack(z)
        sj, _, Rt = frame_data(x, y, E)
        Edot = -np.einsum("ijk,j,ka->ia", sj.Gamma, y, E)
        Adot = A @ A + Rt
        return np.concatenate([y, -2.0 * sj.G, Edot.ravel(), Adot.ravel()])

    def blow_event(s, z):
        _, _, _, A = unpack(z)
        return float(np.abs(A).max()) - blowup_threshold

    blow_event.terminal = True

    z0 = np.concatenate(
        [sd0.x, sd0.normal, dphi.ravel(), sd0.A.ravel()]
    )
    sol = solve_ivp(
        rhs, (0.0, s_max), z0, method="RK45", rtol=rtol, atol=atol,
        dense_output=True, events=blow_event,
    )
    if not sol.success:
        raise RuntimeError(f"Riccati transport failed: {sol.message}")

    def frame_kappas(s):
        x, y, E, A = unpack(sol.sol(s))
        g = metrics.fundamental_tensor(metric, x, y).g
        Gf = E.T @ g @ E
        H = Gf @ A
        return np.sort(scipy.linalg.eigh(0.5 * (H + H.T), Gf, eigvals_only=True))

    s_end = float(sol.t[-1])
    ss = np.linspace(0.0, s_end, samples)
    A_out = [unpack(sol.sol(s))[3] for s in ss]
    kap_out = [frame_kappas(s) for s in ss]
    blow = None
    if sol.t_events[0].size:
        kap = frame_kappas(s_end)
        k_big = kap[np.argmax(np.abs(kap))]
        mult = int(np.sum(np.abs(kap) > 0.01 * blowup_threshold))
        # 1/kappa is affine near a simple pole, so extrapolate through it.
        blow = (float(s_end + 1.0 / k_big), mult)
    return RiccatiTransport(
        s=ss,
        A=np.array(A_out),
        kappas=np.array(kap_out),
        blowup=blow,
        shape0=sd0,
    )


# -- focal curvatures and comparison functions ----------------------------------------


def focal_curvature(c: float, s: float) -> float:
    """The shape-operator eigenvalue for which the point at normal distance s
    is focal: 1/s for c = 0, sqrt(c) cot(sqrt(c) s) for c > 0,
    sqrt(-c) coth(sqrt(-c) s) for c < 0."""
    if s <= 0:
        raise ValueError(f"normal distance must be positive, got {s}")
    if c == 0.0:
        return 1.0 / s
    if c > 0.0:
        rc = np.sqrt(c)
        if abs(np.sin(rc * s)) < 1e-14:
            raise ValueError(f"focal curvature pole at sqrt(c) s = {rc * s}")
        return float(rc / np.tan(rc * s))
    mu = np.sqrt(-c)
    return float(mu / np.tanh(mu * s))


@dataclass
class ComparisonFunctions:
    """The space-form comparison function s_c and its derivative."""

    c: float

    def s(self, r):
        if self.c == 0.0:
            return r
        if self.c > 0.0:
            rc = np.sqrt(self.c)
            return jets.sin(rc * r) / rc
        mu = np.sqrt(-self.c)
        return jets.sinh(mu * r) / mu

    def ds(self, r):
        if self.c == 0.0:
            return 1.0 + 0.0 * r
        if self.c > 0.0:
            return jets.cos(np.sqrt(self.c) * r)
        return jets.cosh(np.sqrt(-self.c) * r)

    def laplacian_distance(self, r, n: int):
        """The comparison value (n-1) s_c'(r) / s_c(r) of the distance
        Laplacian on the space form of curvature c."""
        return (n - 1) * self.ds(r) / self.s(r)


def comparison(c: float) -> ComparisonFunctions:
    return ComparisonFunctions(c=float(c))


# -- distances -------------------------------------------------------------------------


def level_distance(a_fn: Callable, alpha: float, beta: float) -> float:
    """Distance between level sets: integral of df / sqrt(a(f)) over
    [alpha, beta], with endpoint zeros of ``a`` handled by the substitution
    t = endpoint +/- w^2 (simple zeros make the integral proper)."""
    if beta <= alpha:
        raise ValueError("need alpha < beta")
    mid_samples = a_fn(np.linspace(alpha, beta, 101)[1:-1]) if _vectorized(a_fn) else np.array(
        [a_fn(t) for t in np.linspace(alpha, beta, 101)[1:-1]]
    )
    if np.any(np.asarray(mid_samples) <= 0):
        raise ValueError("a(t) vanishes in the interior; the integral diverges")
    a_lo, a_hi = float(a_fn(alpha)), float(a_fn(beta))
    scale = float(np.max(mid_samples))
    tiny = 1e-10 * max(1.0, scale)
    if a_lo < -tiny or a_hi < -tiny:
        raise ValueError("a(t) must be nonnegative at the endpoints")
    mid = 0.5 * (alpha + beta)
    total = 0.0
    if a_lo <= tiny:
        w_max = np.sqrt(mid - alpha)
        total += quad(lambda w: 2.0 * w / np.sqrt(a_fn(alpha + w * w)), 0.0, w_max, limit=200)[0]
    else:
        total += quad(lambda t: 1.0 / np.sqrt(a_fn(t)), alpha, mid, limit=200)[0]
    if a_hi <= tiny:
        w_max = np.sqrt(beta - mid)
        total += quad(lambda w: 2.0 * w / np.sqrt(a_fn(beta - w * w)), 0.0, w_max, limit=200)[0]
    else:
        total += quad(lambda t: 1.0 / np.sqrt(a_fn(t)), mid, beta, limit=200)[0]
    return total


def _vectorized(fn: Callable) -> bool:
    try:
        out = fn(np.array([1.0, 2.0]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def space_form_distance(metric: MetricSpec, p, x) -> float:
    """Distance d(p, x) on the built-in space forms: exact F(x - p) for
    Minkowski metrics, the closed great-circle formula on the sphere chart
    (restricted to the cut-domain r < pi/sqrt(c))."""
    p = np.asarray(p, float)
    x = np.asarray(x, float)
    if metric.x_independent:
        return metric.F(p, x - p)
    if metric.family == "sphere":
        c = metric.params["c"]
        cosd = float(metrics.sphere_cos_distance(c, p, list(x)))
        # guard band: arccos is ill-conditioned at the antipode, where the
        # cut-domain r < pi/sqrt(c) ends anyway
        if cosd <= -1.0 + 1e-12:
            raise DomainError(f"{x} is (numerically) antipodal to {p}: outside the cut-domain")
        r = float(np.arccos(min(1.0, cosd)) / np.sqrt(c))
        return r
    raise ValueError(f"no closed distance available for {metric.name}")


def shooting_distance(
    metric: MetricSpec,
    p,
    q,
    rtol: float = 1e-11,
    max_iter: int = 40,
    tol: float = 1e-9,
) -> float:
    """Geodesic distance by boundary-value shooting: Newton (finite-difference
    Jacobian) on the time-one endpoint map over initial velocities.  A
    cross-check oracle, not a production distance."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    n = p.size

    def endpoint(v):
        return integrate_geodesic(metric, p, v, 1.0, rtol=rtol).state(1.0)[0]

    last_err = None
    for scale in (1.0, 0.7, 1.4):
        v = (q - p) * scale
        try:
            for _ in range(max_iter):
                err = endpoint(v) - q
                if np.linalg.norm(err) < tol:
                    return metric.F(p, v)
                Jm = np.empty((n, n))
                h = 1e-6 * max(1.0, np.linalg.norm(v))
                for j in range(n):
                    dv = np.zeros(n)
                    dv[j] = h
                    Jm[:, j] = (endpoint(v + dv) - endpoint(v - dv)) / (2 * h)
                v = v - np.linalg.solve(Jm, err)
        except (RuntimeError, DomainError, np.linalg.LinAlgError) as e:
            last_err = e
            continue
        last_err = RuntimeError(f"shooting stalled with endpoint error {np.linalg.norm(err):.3e}")
    raise RuntimeError(f"geodesic shooting failed between {p} and {q}: {last_err}")


def gradient_flow_distance(
    metric: MetricSpec,
    f: scalar.ScalarField,
    x_start,
    target_level: float,
    rtol: float = 1e-10,
    s_max: float = 100.0,
) -> float:
    """Arclength along the unit-speed gradient flow of f from x_start to the
    level set {f = target_level}; equals the geodesic distance between the
    levels for transnormal f."""
    x0 = np.asarray(x_start, float)
    if f.value(x0) >= target_level:
        raise ValueError("gradient flow only increases f; need f(x_start) < target_level")

    def rhs(s, x):
        gf = scalar.gradient(metric, f, x)
        return gf / metric.F(x, gf)

    def hit(s, x):
        return f.value(x) - target_level

    hit.terminal = True
    hit.direction = 1

    sol = solve_ivp(rhs, (0.0, s_max), x0, method="RK45", rtol=rtol, atol=1e-13, events=hit)
    if not sol.t_events[0].size:
        raise RuntimeError(f"gradient flow did not reach level {target_level} within s = {s_max}")
    return float(sol.t_events[0][0])

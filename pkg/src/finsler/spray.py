"""Geodesic spray, Berwald connection and curvature tensors.

Everything is extracted from a single master jet of F^2 at (x, y), seeded
jointly in the 2n variables (x_1..x_n, y_1..y_n).  The geodesic coefficients

    G^i = (g^{il}/4) ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} )

are assembled in jet arithmetic, so their own y- and x-derivatives (nonlinear
connection N^i_j, Berwald connection Gamma^i_jk, and the derivatives entering
the curvature) are coefficient extractions of the same computation.

Order budget (master jet order = ``depth``)
-------------------------------------------
The bracketed F^2 partials and g are second-derivative extractions, so the G
jets are accurate through order ``depth - 2``.  Downstream requirements:

====================================  ======
quantity                              depth
====================================  ======
G values                                 2
N = dG/dy values                         3
Gamma = d2G/dy2, S-curvature             4
dGamma/dx, dGamma/dy (Riemann, P)        5
====================================  ======
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .jets import Jet, JetSpace
from .metrics import DomainError, MetricSpec

__all__ = [
    "SprayData",
    "CurvatureData",
    "SprayJets",
    "geodesic_coefficients",
    "riemann_curvature",
    "flag_curvature",
    "p_tensor",
    "s_curvature",
    "connection_and_curvature",
]


@dataclass
class SprayData:
    x: np.ndarray
    y: np.ndarray
    G: np.ndarray        # (n,)
    N: np.ndarray        # (n, n): N^i_j
    Gamma: np.ndarray    # (n, n, n): Gamma^i_jk


@dataclass
class CurvatureData:
    x: np.ndarray
    y: np.ndarray
    R_mixed: np.ndarray | None = None    # (n, n): R^i_k
    R_lowered: np.ndarray | None = None  # (n, n): R_jk = g_ij R^i_k
    P: np.ndarray | None = None          # (n, n, n, n): P^i_{j kl}


class SprayJets:
    """Master F^2 jet at (x, y) with lazy extraction of connection tensors."""

    def __init__(self, metric: MetricSpec, x, y, depth: int = 5):
        self.metric = metric
        self.x = np.asarray(x, float)
        self.y = np.asarray(y, float)
        self.depth = depth
        metric.check_domain(self.x, self.y)
        n = metric.dim
        self.n = n
        self.space = JetSpace.get(2 * n, depth)
        if metric.x_independent:
            # The functional never references x, so evaluate in the y-only
            # subspace (much cheaper for implicitly defined primal metrics)
            # and transplant; all x-indexed coefficients are exactly zero.
            sub = JetSpace.get(n, depth)
            y_sub = jets.seed_into(sub, self.y, 0)
            f2_sub = metric.primal(list(self.x), y_sub)
            f2_sub = f2_sub * f2_sub
            self.F2 = jets.remap(f2_sub, self.space, tuple(range(n, 2 * n)))
        else:
            x_jets = jets.seed_into(self.space, self.x, 0)
            y_jets = jets.seed_into(self.space, self.y, n)
            F = metric.primal(x_jets, y_jets)
            self.F2 = F * F
        self.F2.require_finite(f"spray master jet of {metric.name}")

    # -- index helpers ------------------------------------------------------

    def _alpha(self, xs=(), ys=()) -> list[int]:
        a = [0] * (2 * self.n)
        for i in xs:
            a[i] += 1
        for j in ys:
            a[self.n + j] += 1
        return a

    def _require(self, depth: int, what: str) -> None:
        if self.depth < depth:
            raise ValueError(f"{what} needs master depth >= {depth}, have {self.depth}")

    # -- metric data --------------------------------------------------------

    @cached_property
    def F_value(self) -> float:
        return float(np.sqrt(self.F2.value))

    @cached_property
    def g(self) -> np.ndarray:
        n = self.n
        g = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                g[i, j] = g[j, i] = 0.5 * self.F2.partial(self._alpha(ys=(i, j)))
        return g

    @cached_property
    def g_inv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    # -- geodesic coefficients as jets ---------------------------------------

    @cached_property
    def G_jets(self) -> list[Jet]:
        self._require(2, "geodesic coefficients")
        n = self.n
        f2 = self.F2
        dy = [f2.partial_jet(n + j) for j in range(n)]
        g_jets = [[dy[j].partial_jet(n + i) * 0.5 for j in range(n)] for i in range(n)]
        y_jets = [self.space.variable(n + k, self.y[k]) for k in range(n)]
        w = []
        for l in range(n):
            acc = None
            dxl = f2.partial_jet(l)
            for k in range(n):
                term = dy[l].partial_jet(k) * y_jets[k]
                acc = term if acc is None else acc + term
            w.append((acc - dxl) * 0.25)
        if all(not wl.coeffs.any() for wl in w):
            # exactly-zero right-hand side (x-independent metric): G = 0
            return [self.space.constant(0.0) for _ in range(n)]
        sol = jets.solve_linear(g_jets, [[wl] for wl in w])
        return [sol[i][0] for i in range(n)]

    @cached_property
    def G(self) -> np.ndarray:
        return np.array([gj.value for gj in self.G_jets])

    @cached_property
    def N(self) -> np.ndarray:
        self._require(3, "nonlinear connection")
        n = self.n
        return np.array(
            [[self.G_jets[i].partial(self._alpha(ys=(j,))) for j in range(n)] for i in range(n)]
        )

    @cached_property
    def Gamma(self) -> np.ndarray:
        self._require(4, "Berwald connection")
        n = self.n
        out = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(j, n):
                    v = self.G_jets[i].partial(self._alpha(ys=(j, k)))
                    out[i, j, k] = out[i, k, j] = v
        return out

    @cached_property
    def dGamma_x(self) -> np.ndarray:
        """dGamma^i_jk / dx^l at index [i, j, k, l]."""
        self._require(5, "x-derivative of the Berwald connection")
        n = self.n
        out = np.empty((n, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(j, n):
                    for l in range(n):
                        v = self.G_jets[i].partial(self._alpha(xs=(l,), ys=(j, k)))
                        out[i, j, k, l] = out[i, k, j, l] = v
        return out

    @cached_property
    def dGamma_y(self) -> np.ndarray:
        """dGamma^i_jk / dy^l at index [i, j, k, l] (symmetric in j, k, l)."""
        self._require(5, "y-derivative of the Berwald connection")
        n = self.n
        out = np.empty((n, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(j, n):
                    for l in range(n):
                        v = self.G_jets[i].partial(self._alpha(ys=(j, k, l)))
                        out[i, j, k, l] = out[i, k, j, l] = v
        return out

    @cached_property
    def dG_x(self) -> np.ndarray:
        """dG^i/dx^k at index [i, k]."""
        self._require(3, "x-derivative of G")
        n = self.n
        return np.array(
            [[self.G_jets[i].partial(self._alpha(xs=(k,))) for k in range(n)] for i in range(n)]
        )

    @cached_property
    def d2G_xy(self) -> np.ndarray:
        """d2G^i/dx^j dy^k at index [i, j, k]."""
        self._require(4, "mixed second derivative of G")
        n = self.n
        return np.array(
            [
                [
                    [self.G_jets[i].partial(self._alpha(xs=(j,), ys=(k,))) for k in range(n)]
                    for j in range(n)
                ]
                for i in range(n)
            ]
        )

    # -- curvature -----------------------------------------------------------

    @cached_property
    def R_mixed(self) -> np.ndarray:
        """R^i_k = y^j R^i_{j kl} y^l assembled from the Berwald connection,
        with delta/delta x^k = d/dx^k - N^m_k d/dy^m."""
        self._require(5, "Riemann curvature")
        N, Gam = self.N, self.Gamma
        # delta Gamma^i_{jk} / delta x^l at [i, j, k, l]
        delta = self.dGamma_x - np.einsum("ml,ijkm->ijkl", N, self.dGamma_y)
        R4 = (
            np.einsum("ijlk->ijkl", delta)
            - delta
            + np.einsum("ikm,mjl->ijkl", Gam, Gam)
            - np.einsum("ilm,mjk->ijkl", Gam, Gam)
        )
        return np.einsum("j,ijkl,l->ik", self.y, R4, self.y)

    @cached_property
    def R_lowered(self) -> np.ndarray:
        return self.g @ self.R_mixed

    @cached_property
    def P(self) -> np.ndarray:
        """P^i_{j kl} = -F dGamma^i_jk/dy^l."""
        return -self.F_value * self.dGamma_y


# -- public operations ---------------------------------------------------------


def geodesic_coefficients(metric: MetricSpec, x, y) -> SprayData:
    """Geodesic coefficients G^i with N^i_j and Gamma^i_jk at (x, y)."""
    sj = SprayJets(metric, x, y, depth=4)
    return SprayData(x=sj.x, y=sj.y, G=sj.G, N=sj.N, Gamma=sj.Gamma)


def riemann_curvature(metric: MetricSpec, x, y) -> CurvatureData:
    """R^i_k and its g-lowered form at (x, y)."""
    sj = SprayJets(metric, x, y, depth=5)
    return CurvatureData(x=sj.x, y=sj.y, R_mixed=sj.R_mixed, R_lowered=sj.R_lowered)


def flag_curvature(metric: MetricSpec, x, y, v) -> float:
    """Flag curvature K(y, v) = F^{-2} R_jk v^j v^k for the g_y-normalized
    part of v orthogonal to the pole y."""
    sj = SprayJets(metric, x, y, depth=5)
    v = np.asarray(v, float)
    g = sj.g
    F2 = sj.F2.value
    u = v - (g @ sj.y @ v / F2) * sj.y
    q = float(u @ g @ u)
    if q <= 1e-12 * float(v @ g @ v):
        raise ValueError("flag direction is parallel to the pole y")
    u /= np.sqrt(q)
    return float(u @ sj.R_lowered @ u) / F2


def p_tensor(metric: MetricSpec, x, y) -> CurvatureData:
    sj = SprayJets(metric, x, y, depth=5)
    return CurvatureData(x=sj.x, y=sj.y, P=sj.P)


def s_curvature(metric: MetricSpec, x, y) -> float:
    """S(x, y) = dG^i/dy^i - y^i d(ln sigma)/dx^i for the metric's volume form."""
    if metric.volume_density is None:
        raise DomainError(f"metric {metric.name} carries no volume density")
    sj = SprayJets(metric, x, y, depth=3)
    n = metric.dim
    trace_N = sum(sj.G_jets[i].partial(sj._alpha(ys=(i,))) for i in range(n))
    x_jets = jets.seed(sj.x, 1)
    sigma = metric.volume_density(x_jets)
    if isinstance(sigma, Jet):
        if sigma.value <= 0:
            raise DomainError(f"volume density of {metric.name} not positive at x={x}")
        dln = sigma.gradient() / sigma.value
    else:
        dln = np.zeros(n)
    return float(trace_N - sj.y @ dln)


def connection_and_curvature(metric: MetricSpec, x, y) -> tuple[np.ndarray, np.ndarray]:
    """(Gamma, R_mixed) in one master-jet evaluation; used by ODE right-hand
    sides that need both per step."""
    sj = SprayJets(metric, x, y, depth=5)
    return sj.Gamma, sj.R_mixed

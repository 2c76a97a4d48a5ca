"""Independent oracles for the test suite.

These deliberately avoid the jet code paths they are used to check: finite
differences with high-order stencils, the closed-form Christoffel symbols of
a conformally flat chart, the constant-curvature form of the Riemann tensor,
and a second assembly of R^i_k from spray data.
"""

from __future__ import annotations

import numpy as np

from finsler import metrics
from finsler.spray import SprayJets

# 7-point, 6th-order central first-derivative weights
_W7 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_OFF7 = np.arange(-3, 4)


def fd_partial(fn, x, var: int, h: float = 0.02):
    """6th-order central first derivative of fn at x along variable var."""
    x = np.asarray(x, float)
    total = 0.0
    for w, k in zip(_W7, _OFF7):
        if w == 0.0:
            continue
        xp = x.copy()
        xp[var] += k * h
        total += w * np.asarray(fn(xp), float)
    return total / h


def fd_derivative(fn, x, alpha, h: float = 0.02):
    """Mixed partial d^alpha fn by nested first-derivative stencils."""
    alpha = list(alpha)
    for var, count in enumerate(alpha):
        for _ in range(count):
            fn = (lambda f, v: (lambda p: fd_partial(f, p, v, h)))(fn, var)
    return np.asarray(fn(np.asarray(x, float)), float)


def fd_hessian(fn, x, h: float = 5e-3) -> np.ndarray:
    n = len(x)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            a = [0] * n
            a[i] += 1
            a[j] += 1
            H[i, j] = fd_derivative(fn, x, a, h)
    return 0.5 * (H + H.T)


def conformal_spray(c: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Geodesic coefficients of the metric 4 delta/(1+c|x|^2)^2 from the
    closed-form Christoffel symbols of a conformal factor."""
    psi = -2.0 * c * x / (1.0 + c * x @ x)
    return (y @ psi) * y - 0.5 * (y @ y) * psi


def constant_curvature_R(c: float, g: np.ndarray, y: np.ndarray) -> np.ndarray:
    """R^i_k of a constant-flag-curvature metric: c (F^2 delta - y y_flat)."""
    F2 = float(y @ g @ y)
    return c * (F2 * np.eye(len(y)) - np.outer(y, g @ y))


def riemann_via_spray_identity(metric, x, y) -> np.ndarray:
    """Second, independent assembly of R^i_k directly from the spray:
    2 dG/dx - y d2G/(dx dy) + 2 G Gamma - N N."""
    sj = SprayJets(metric, x, y, depth=4)
    y = np.asarray(y, float)
    return (
        2.0 * sj.dG_x
        - np.einsum("ijk,j->ik", sj.d2G_xy, y)
        + 2.0 * np.einsum("j,ijk->ik", sj.G, sj.Gamma)
        - sj.N @ sj.N
    )


def randers_sigma_bh(n: int, b_norm: float) -> float:
    """Exact Busemann-Hausdorff density of a Randers norm: the unit ball is
    an ellipsoid of volume vol(B^n)/(1-|b|^2)^{(n+1)/2}."""
    return (1.0 - b_norm**2) ** ((n + 1) / 2)


def bumpy_randers(amp: float = 0.3):
    """Synthetic x-dependent Randers metric F = |y| + amp sin(x1) y1 on R^2;
    non-Berwald, so its P-tensor is nonzero."""
    from finsler import jets

    def primal(x, y):
        return jets.sqrt(y[0] * y[0] + y[1] * y[1]) + amp * jets.sin(x[0]) * y[0]

    return metrics.MetricSpec(
        name=f"bumpy_randers({amp})",
        dim=2,
        primal=primal,
        domain=lambda x, y: bool(np.linalg.norm(y) > 0),
        x_independent=False,
        family="synthetic",
    )

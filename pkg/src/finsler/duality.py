"""Legendre duality between tangent vectors and covectors.

The Legendre transform of a Finsler metric sends ``y`` to the covector
``g_y(y, .) = (1/2) d(F^2)_y``; its inverse is the analogous map built from
the dual metric, ``xi -> (1/2) d(F*^2)_xi``.  Everything here works at jet
level so that downstream consumers (gradients of scalar fields, normals of
hypersurfaces, the dual-only conic metric) can differentiate through the
transform.

Two numerical routes are provided:

* closed-form evaluation through the dual metric when one is available;
* damped Newton on the forward transform otherwise, followed by chord
  iterations that propagate jet coefficients through the implicit solution
  (each pass fixes one more Taylor order, so ``order + 2`` passes suffice).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Augmentation, Jet, JetSpace

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-11

__all__ = [
    "ConvergenceError",
    "momentum",
    "momentum_jets",
    "raise_index",
    "raise_index_jets",
    "primal_from_dual",
]


class ConvergenceError(RuntimeError):
    """A Newton solve failed to reach its residual target."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


def _as_float_args(x) -> list:
    return [xi.value if isinstance(xi, Jet) else float(xi) for xi in x]


def _f2_gradient_hessian(evaluator: Callable, x, w: np.ndarray):
    """Value, gradient and Hessian of (1/2) evaluator(x, .)^2 at w."""
    n = len(w)
    w_jets = jets.seed(w, 2)
    F = evaluator(x, w_jets)
    h2 = (F * F) * 0.5
    grad = h2.gradient()
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            hess[i, j] = hess[j, i] = h2.partial(alpha)
    return F.value, grad, hess


def momentum(primal: Callable, x, y: np.ndarray) -> np.ndarray:
    """Covector g_y(y, .) = (1/2) d(F^2) at y, as floats."""
    y_jets = jets.seed(y, 1)
    F = primal(x, y_jets)
    return 0.5 * (F * F).gradient()


def momentum_jets(primal: Callable, x_jets: Sequence, y_jets: Sequence[Jet]) -> list[Jet]:
    """Jet version of :func:`momentum`; arguments live in a common base space."""
    base = y_jets[0].space
    aug = Augmentation.get(base, len(y_jets))
    x_w = [aug.lift(c) if isinstance(c, Jet) else c for c in x_jets]
    y_w = [aug.lift(yj) + aug.eps(i) for i, yj in enumerate(y_jets)]
    F = primal(x_w, y_w)
    h2 = (F * F) * 0.5
    return [aug.extract_eps(h2, i) for i in range(len(y_jets))]


def raise_index(dual: Callable, x, xi: np.ndarray) -> np.ndarray:
    """Inverse Legendre transform through a dual metric, at float level."""
    xi_jets = jets.seed(xi, 1)
    Fs = dual(x, xi_jets)
    return 0.5 * (Fs * Fs).gradient()


def raise_index_jets(dual: Callable, x_jets: Sequence, xi_jets: Sequence[Jet]) -> list[Jet]:
    return momentum_jets(dual, x_jets, xi_jets)


def newton_inverse(
    primal: Callable,
    x,
    xi: np.ndarray,
    seed_y: np.ndarray | None = None,
    domain: Callable | None = None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> np.ndarray:
    """Solve the forward Legendre transform ``momentum(y) = xi`` for y.

    Damped Newton: steps are halved until the residual decreases (and the
    trial point stays inside ``domain`` when one is given).
    """
    xf = _as_float_args(x)
    y = np.array(seed_y if seed_y is not None else xi, dtype=float)
    scale = max(1.0, float(np.linalg.norm(xi)))
    resid = momentum(primal, xf, y) - xi
    rnorm = np.linalg.norm(resid)
    for _ in range(max_iter):
        if rnorm < tol * scale:
            return y
        _, _, g = _f2_gradient_hessian(primal, xf, y)
        step = np.linalg.solve(g, resid)
        lam = 1.0
        while True:
            trial = y - lam * step
            ok = domain is None or domain(xf, trial)
            if ok:
                try:
                    r_trial = momentum(primal, xf, trial) - xi
                except jets.JetError:
                    ok = False
            if ok and np.linalg.norm(r_trial) < rnorm:
                y, resid, rnorm = trial, r_trial, np.linalg.norm(r_trial)
                break
            lam *= 0.5
            if lam < 1e-12:
                raise ConvergenceError(
                    f"Legendre inverse Newton stalled at residual {rnorm:.3e}", rnorm
                )
    raise ConvergenceError(
        f"Legendre inverse Newton did not converge in {max_iter} iterations "
        f"(last residual {rnorm:.3e})",
        rnorm,
    )


def _dual_newton_point(
    dual: Callable,
    dual_domain: Callable | None,
    x,
    y: np.ndarray,
    seeds: Sequence[np.ndarray],
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
):
    """Find xi with (1/2) grad(F*^2)(xi) = y.  Returns (xi, hessian_at_xi)."""
    scale = max(1.0, float(np.linalg.norm(y)))
    last_err: Exception | None = None
    for seed in seeds:
        xi = np.array(seed, dtype=float)
        try:
            _, grad, hess = _f2_gradient_hessian(dual, x, xi)
        except jets.JetError as e:
            last_err = e
            continue
        resid = grad - y
        rnorm = np.linalg.norm(resid)
        failed = False
        for _ in range(max_iter):
            if rnorm < tol * scale:
                return xi, hess
            step = np.linalg.solve(hess, resid)
            lam = 1.0
            while True:
                trial = xi - lam * step
                ok = dual_domain is None or dual_domain(x, trial)
                if ok:
                    try:
                        _, g_t, h_t = _f2_gradient_hessian(dual, x, trial)
                    except jets.JetError:
                        ok = False
                if ok and np.linalg.norm(g_t - y) < rnorm:
                    xi, hess = trial, h_t
                    resid = g_t - y
                    rnorm = np.linalg.norm(resid)
                    break
                lam *= 0.5
                if lam < 1e-12:
                    failed = True
                    break
            if failed:
                break
        if not failed and rnorm < tol * scale:
            return xi, hess
        last_err = ConvergenceError(
            f"dual Newton stalled at residual {rnorm:.3e} from seed {seed}", rnorm
        )
    raise ConvergenceError(
        f"dual Newton failed for y={y} (no admissible seed converged): {last_err}"
    )


def primal_from_dual(
    dual: Callable,
    dual_domain: Callable | None,
    seed_candidates: Callable,
    name: str = "",
) -> Callable:
    """Build a primal evaluator F(x, y) for a metric stored dual-side only.

    The returned callable accepts float or jet arguments for ``y``.  Floats
    trigger a plain Newton solve; jets additionally run chord iterations so
    that every Taylor coefficient of F through the ambient order is exact.

    ``seed_candidates(x, y) -> iterable of xi seeds`` supplies metric-specific
    starting points inside the dual domain (conic metrics have disconnected
    cones, so seeding matters).
    """

    def primal(x, y):
        y_is_jet = any(isinstance(c, Jet) for c in y)
        xf = _as_float_args(x)
        if not y_is_jet:
            y_val = np.array([float(c) for c in y])
            xi, _ = _dual_newton_point(dual, dual_domain, xf, y_val, seed_candidates(xf, y_val))
            return dual(xf, list(xi))

        base = next(c.space for c in y if isinstance(c, Jet))
        y_vals = np.array([c.value if isinstance(c, Jet) else float(c) for c in y])
        xi0, hess0 = _dual_newton_point(dual, dual_domain, xf, y_vals, seed_candidates(xf, y_vals))
        hess_inv = np.linalg.inv(hess0)

        n = len(y)
        aug = Augmentation.get(base, n)
        y_base = [c if isinstance(c, Jet) else base.constant(float(c)) for c in y]
        x_base = [jets.remap(c, aug.space, aug._lift_map) if isinstance(c, Jet) else c for c in x]
        xi_jets = [base.constant(v) for v in xi0]
        # Chord iterations: value part is already converged, each pass fixes
        # one more jet order.
        for _ in range(base.order + 2):
            xi_w = [aug.lift(xj) + aug.eps(i) for i, xj in enumerate(xi_jets)]
            Fs = dual(x_base, xi_w)
            h2 = (Fs * Fs) * 0.5
            resid = [aug.extract_eps(h2, i) - y_base[i] for i in range(n)]
            xi_jets = [
                xi_jets[i] - sum(hess_inv[i, j] * resid[j] for j in range(n))
                for i in range(n)
            ]
        rmax = max(float(np.abs(r.coeffs).max()) for r in resid)
        # Relative to the largest internal coefficient: high-order Taylor
        # coefficients of the implicit inverse can be huge, and the chord
        # residual bottoms out at roundoff on that scale.
        scale = max(1.0, max(float(np.abs(xj.coeffs).max()) for xj in xi_jets))
        if rmax > 1e-9 * scale:
            raise ConvergenceError(
                f"jet-level Legendre inversion for {name or 'dual metric'} left "
                f"residual {rmax:.3e} (scale {scale:.3e})",
                rmax,
            )
        F = dual([c if isinstance(c, Jet) else c for c in _rebase(x, base)], xi_jets)
        return F.require_finite(f"primal reconstruction of {name}")

    return primal


def _rebase(x, base: JetSpace) -> list:
    out = []
    for c in x:
        if isinstance(c, Jet):
            if c.space is base:
                out.append(c)
            else:
                out.append(jets.remap(c, base, tuple(range(c.space.num_vars))))
        else:
            out.append(float(c))
    return out

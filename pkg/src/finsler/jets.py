"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` is a truncated Taylor expansion of a smooth function at a base
point, over a fixed set of independent variables and up to a fixed total
degree.  All tensor calculus in this package (fundamental tensors, geodesic
coefficients, curvatures, Hessians) is obtained by evaluating metric
functionals on seeded jets and reading off coefficients.

Storage convention
------------------
``coeffs[k]`` holds the *Taylor-normalized* coefficient of the multi-index
``alpha = space.monomials[k]``, i.e. ``(d^alpha f)(x0) / alpha!``.  The raw
partial derivative is recovered with :meth:`Jet.partial`.

Multi-indices are ordered graded-lexicographically: degree 0 first, then all
of degree 1 in variable order, and so on.  In particular the coefficient of
variable ``i`` alone sits at position ``1 + i``.

Truncation is exact: products are Cauchy products cut at the space order, and
elementary functions are computed by composing the exact univariate Taylor
series of the function with the nilpotent part of the argument.  Derivative
extraction (:meth:`Jet.partial_jet`) loses one order; the coefficients of top
degree in the returned jet are zero placeholders and must not be consumed.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 6
MAX_VARS = 16

__all__ = [
    "Jet",
    "JetSpace",
    "JetError",
    "JetDomainError",
    "JetNonFiniteError",
    "Augmentation",
    "seed",
    "seed_into",
    "constant",
    "remap",
    "solve_linear",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "arctan",
    "arcsin",
    "arccos",
    "sinh",
    "cosh",
]


class JetError(ArithmeticError):
    """Base class for jet arithmetic failures."""


class JetDomainError(JetError):
    """An elementary operation was applied outside its domain (sqrt of a
    non-positive value, division by a zero-valued jet, ...)."""


class JetNonFiniteError(JetError):
    """A computation produced NaN/Inf coefficients; usually a metric-domain
    violation upstream."""


class JetSpace:
    """The algebra of truncated Taylor polynomials in ``num_vars`` variables
    up to total degree ``order``.

    Instances are cached; use :meth:`JetSpace.get`.
    """

    _cache: dict[tuple[int, int], "JetSpace"] = {}

    def __init__(self, num_vars: int, order: int):
        if not (1 <= num_vars <= MAX_VARS):
            raise ValueError(f"num_vars must be in [1, {MAX_VARS}], got {num_vars}")
        if not (0 <= order <= MAX_ORDER):
            raise ValueError(f"order must be in [0, {MAX_ORDER}], got {order}")
        self.num_vars = num_vars
        self.order = order

        monos: list[tuple[int, ...]] = []
        degree_start = []
        for d in range(order + 1):
            degree_start.append(len(monos))
            for combo in combinations_with_replacement(range(num_vars), d):
                alpha = [0] * num_vars
                for v in combo:
                    alpha[v] += 1
                monos.append(tuple(alpha))
        degree_start.append(len(monos))

        self.monomials = np.array(monos, dtype=np.int64).reshape(len(monos), num_vars)
        self.size = len(monos)
        self.index = {m: k for k, m in enumerate(monos)}
        self._degree = self.monomials.sum(axis=1)
        self._degree_start = degree_start
        self.alpha_factorial = np.array(
            [math.prod(math.factorial(e) for e in m) for m in monos], dtype=np.float64
        )

        # Cauchy product table: all (ia, ib) with deg(a) + deg(b) <= order.
        out_idx, a_idx, b_idx = [], [], []
        for ia, ma in enumerate(monos):
            da = self._degree[ia]
            stop = degree_start[order - da + 1]
            for ib in range(stop):
                mo = tuple(x + y for x, y in zip(ma, monos[ib]))
                out_idx.append(self.index[mo])
                a_idx.append(ia)
                b_idx.append(ib)
        self._mul_out = np.array(out_idx, dtype=np.int64)
        self._mul_a = np.array(a_idx, dtype=np.int64)
        self._mul_b = np.array(b_idx, dtype=np.int64)

        # Differentiation maps: d/dx_v shifts alpha+e_v -> alpha with weight
        # (alpha_v + 1) on Taylor-normalized storage.
        self._diff: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        for v in range(num_vars):
            dst, src, fac = [], [], []
            for k, m in enumerate(monos):
                if m[v] >= 1:
                    lowered = list(m)
                    lowered[v] -= 1
                    dst.append(self.index[tuple(lowered)])
                    src.append(k)
                    fac.append(m[v])
            self._diff.append(
                (
                    np.array(dst, dtype=np.int64),
                    np.array(src, dtype=np.int64),
                    np.array(fac, dtype=np.float64),
                )
            )

    @classmethod
    def get(cls, num_vars: int, order: int) -> "JetSpace":
        key = (num_vars, order)
        space = cls._cache.get(key)
        if space is None:
            space = cls(num_vars, order)
            cls._cache[key] = space
        return space

    def constant(self, value: float) -> "Jet":
        c = np.zeros(self.size)
        c[0] = value
        return Jet(self, c)

    def variable(self, i: int, value: float) -> "Jet":
        c = np.zeros(self.size)
        c[0] = value
        if self.order >= 1:
            c[1 + i] = 1.0
        return Jet(self, c)

    def __repr__(self) -> str:  # pragma: no cover
        return f"JetSpace(num_vars={self.num_vars}, order={self.order})"


class Jet:
    """One element of a :class:`JetSpace`: value plus partial derivatives."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- inspection ---------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def partial(self, alpha: Sequence[int]) -> float:
        """Raw partial derivative d^alpha f at the base point."""
        k = self.space.index.get(tuple(alpha))
        if k is None:
            raise KeyError(f"multi-index {tuple(alpha)} outside space {self.space}")
        return float(self.coeffs[k] * self.space.alpha_factorial[k])

    def partial_jet(self, var: int) -> "Jet":
        """Jet of the partial derivative in variable ``var``.

        One order of accuracy is lost: top-degree coefficients of the result
        are zero placeholders, not true Taylor coefficients.
        """
        dst, src, fac = self.space._diff[var]
        c = np.zeros(self.space.size)
        c[dst] = self.coeffs[src] * fac
        return Jet(self.space, c)

    def gradient(self) -> np.ndarray:
        """First-order coefficients as a vector (the spatial gradient)."""
        n = self.space.num_vars
        return np.array(self.coeffs[1 : 1 + n])

    def require_finite(self, context: str = "") -> "Jet":
        if not np.isfinite(self.coeffs).all():
            raise JetNonFiniteError(
                f"non-finite jet coefficients{' in ' + context if context else ''}; "
                "likely a metric-domain violation"
            )
        return self

    # -- ring operations ----------------------------------------------------

    def _coerce(self, other) -> np.ndarray | None:
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces")
            return other.coeffs
        if isinstance(other, (int, float, np.floating, np.integer)):
            c = np.zeros(self.space.size)
            c[0] = float(other)
            return c
        return None

    def __add__(self, other):
        oc = self._coerce(other)
        if oc is None:
            return NotImplemented
        return Jet(self.space, self.coeffs + oc)

    __radd__ = __add__

    def __sub__(self, other):
        oc = self._coerce(other)
        if oc is None:
            return NotImplemented
        return Jet(self.space, self.coeffs - oc)

    def __rsub__(self, other):
        oc = self._coerce(other)
        if oc is None:
            return NotImplemented
        return Jet(self.space, oc - self.coeffs)

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces")
            s = self.space
            prod = self.coeffs[s._mul_a] * other.coeffs[s._mul_b]
            return Jet(s, np.bincount(s._mul_out, weights=prod, minlength=s.size))
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.space, self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, (int, float, np.floating, np.integer)):
            if other == 0:
                raise ZeroDivisionError("jet divided by scalar zero")
            return Jet(self.space, self.coeffs / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        oc = self._coerce(other)
        if oc is None:
            return NotImplemented
        return Jet(self.space, oc) * self.reciprocal()

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            if p < 0:
                return (self ** (-p)).reciprocal()
            result = self.space.constant(1.0)
            base = self
            k = int(p)
            while k:
                if k & 1:
                    result = result * base
                base = base * base
                k >>= 1
            return result
        v = self.value
        if v <= 0.0:
            raise JetDomainError(f"jet**{p} requires positive value part, got {v}")
        series = [_binom(float(p), k) * v ** (float(p) - k) for k in range(self.space.order + 1)]
        return self._compose(series)

    # -- composition with univariate series ----------------------------------

    def _compose(self, series: Sequence[float]) -> "Jet":
        """Compose an exact univariate Taylor series (coefficients at the
        value part) with the nilpotent part of this jet, by Horner."""
        h = Jet(self.space, self.coeffs.copy())
        h.coeffs[0] = 0.0
        out = self.space.constant(series[-1])
        for k in range(len(series) - 2, -1, -1):
            out = out * h + series[k]
        out.require_finite("series composition")
        return out

    def reciprocal(self) -> "Jet":
        v = self.value
        if v == 0.0 or not math.isfinite(v):
            raise JetDomainError(f"reciprocal of jet with value {v}")
        series = [(-1.0) ** k / v ** (k + 1) for k in range(self.space.order + 1)]
        return self._compose(series)

    def sqrt(self) -> "Jet":
        v = self.value
        if v <= 0.0:
            raise JetDomainError(f"sqrt of jet with non-positive value {v}")
        series = [_binom(0.5, k) * v ** (0.5 - k) for k in range(self.space.order + 1)]
        return self._compose(series)

    def exp(self) -> "Jet":
        e = math.exp(self.value)
        series = [e / math.factorial(k) for k in range(self.space.order + 1)]
        return self._compose(series)

    def log(self) -> "Jet":
        v = self.value
        if v <= 0.0:
            raise JetDomainError(f"log of jet with non-positive value {v}")
        series = [math.log(v)] + [
            (-1.0) ** (k - 1) / (k * v**k) for k in range(1, self.space.order + 1)
        ]
        return self._compose(series)

    def sin(self) -> "Jet":
        v = self.value
        series = [math.sin(v + k * math.pi / 2) / math.factorial(k) for k in range(self.space.order + 1)]
        return self._compose(series)

    def cos(self) -> "Jet":
        v = self.value
        series = [math.cos(v + k * math.pi / 2) / math.factorial(k) for k in range(self.space.order + 1)]
        return self._compose(series)

    def tan(self) -> "Jet":
        return self.sin() / self.cos()

    def sinh(self) -> "Jet":
        s, c = math.sinh(self.value), math.cosh(self.value)
        series = [(s if k % 2 == 0 else c) / math.factorial(k) for k in range(self.space.order + 1)]
        return self._compose(series)

    def cosh(self) -> "Jet":
        s, c = math.sinh(self.value), math.cosh(self.value)
        series = [(c if k % 2 == 0 else s) / math.factorial(k) for k in range(self.space.order + 1)]
        return self._compose(series)

    def arctan(self) -> "Jet":
        v = self.value
        series = _antideriv_series(
            self.space.order, v, math.atan(v), lambda t: (1.0 + t * t).reciprocal()
        )
        return self._compose(series)

    def arcsin(self) -> "Jet":
        v = self.value
        if abs(v) >= 1.0:
            raise JetDomainError(f"arcsin of jet with value {v} outside (-1, 1)")
        series = _antideriv_series(
            self.space.order, v, math.asin(v), lambda t: (1.0 - t * t) ** -0.5
        )
        return self._compose(series)

    def arccos(self) -> "Jet":
        v = self.value
        if abs(v) >= 1.0:
            raise JetDomainError(f"arccos of jet with value {v} outside (-1, 1)")
        series = _antideriv_series(
            self.space.order, v, math.acos(v), lambda t: -((1.0 - t * t) ** -0.5)
        )
        return self._compose(series)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Jet(value={self.value:.6g}, space={self.space})"


def _binom(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (p - i) / (i + 1)
    return out


def _antideriv_series(order: int, v: float, f0: float, dfn: Callable) -> list[float]:
    """Taylor coefficients of f at v given f(v) and a jet-expressible f'.

    Evaluates f' on a univariate scratch jet of order ``order - 1`` and
    integrates its coefficients term by term.
    """
    if order == 0:
        return [f0]
    scratch = JetSpace.get(1, order - 1)
    u = dfn(scratch.variable(0, v))
    return [f0] + [float(u.coeffs[k]) / (k + 1) for k in range(order)]


# -- seeding and generic helpers ---------------------------------------------


def seed(values: Sequence[float], order: int) -> list[Jet]:
    """Seed each entry of ``values`` as an independent variable.

    Returns one jet per variable; degree-0 coefficients carry the values,
    first-order coefficients form an identity.
    """
    if not (1 <= order <= MAX_ORDER):
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise ValueError("values must be a non-empty 1-d sequence")
    if not np.isfinite(vals).all():
        raise JetNonFiniteError("seed values must be finite")
    space = JetSpace.get(vals.size, order)
    return [space.variable(i, vals[i]) for i in range(vals.size)]


def seed_into(space: JetSpace, values: Sequence[float], start: int = 0) -> list[Jet]:
    """Seed values as variables ``start, start+1, ...`` of an existing space."""
    vals = np.asarray(values, dtype=float)
    if not np.isfinite(vals).all():
        raise JetNonFiniteError("seed values must be finite")
    return [space.variable(start + i, vals[i]) for i in range(vals.size)]


def constant(space: JetSpace, value: float) -> Jet:
    return space.constant(float(value))


_REMAP_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def remap(jet: Jet, dst_space: JetSpace, var_map: Sequence[int]) -> Jet:
    """Transplant a jet into another space, sending source variable ``i`` to
    destination variable ``var_map[i]``.

    Coefficients of source monomials that exceed the destination order are
    dropped (projection); unreached destination monomials are zero (lift).
    """
    src = jet.space
    key = (src.num_vars, src.order, dst_space.num_vars, dst_space.order, tuple(var_map))
    maps = _REMAP_CACHE.get(key)
    if maps is None:
        src_idx, dst_idx = [], []
        for k in range(src.size):
            alpha = src.monomials[k]
            beta = [0] * dst_space.num_vars
            for i, e in enumerate(alpha):
                if e:
                    beta[var_map[i]] += e
            j = dst_space.index.get(tuple(beta))
            if j is not None:
                src_idx.append(k)
                dst_idx.append(j)
        maps = (np.array(src_idx, dtype=np.int64), np.array(dst_idx, dtype=np.int64))
        _REMAP_CACHE[key] = maps
    c = np.zeros(dst_space.size)
    c[maps[1]] = jet.coeffs[maps[0]]
    return Jet(dst_space, c)


class Augmentation:
    """Machinery for first derivatives of an evaluator at jet arguments.

    Given a base space of jets in variables ``u`` and an evaluator ``f``,
    the expansion ``f(a(u) + eps)`` in the augmented space recovers each
    ``(df/da_i)(a(u))`` as a jet over ``u`` (one extra order is carried so
    those coefficients are exact through the base order).
    """

    _cache: dict[tuple[int, int, int], "Augmentation"] = {}

    def __init__(self, base: JetSpace, n_eps: int):
        self.base = base
        self.n_eps = n_eps
        self.space = JetSpace.get(base.num_vars + n_eps, base.order + 1)
        self._lift_map = tuple(range(base.num_vars))
        # per-eps extraction: coefficients of u^alpha * eps_i with |alpha| <= base.order
        self._extract: list[tuple[np.ndarray, np.ndarray]] = []
        W = self.space
        eps_cols = W.monomials[:, base.num_vars :]
        base_cols = W.monomials[:, : base.num_vars]
        base_deg = base_cols.sum(axis=1)
        for i in range(n_eps):
            pure = (eps_cols[:, i] == 1) & (eps_cols.sum(axis=1) == 1) & (base_deg <= base.order)
            w_idx = np.nonzero(pure)[0]
            b_idx = np.array(
                [base.index[tuple(base_cols[w])] for w in w_idx], dtype=np.int64
            )
            self._extract.append((np.array(w_idx, dtype=np.int64), b_idx))

    @classmethod
    def get(cls, base: JetSpace, n_eps: int) -> "Augmentation":
        key = (base.num_vars, base.order, n_eps)
        aug = cls._cache.get(key)
        if aug is None:
            aug = cls(base, n_eps)
            cls._cache[key] = aug
        return aug

    def lift(self, jet: Jet) -> Jet:
        return remap(jet, self.space, self._lift_map)

    def eps(self, i: int) -> Jet:
        """The i-th perturbation variable, seeded at zero."""
        return self.space.variable(self.base.num_vars + i, 0.0)

    def extract_eps(self, w_jet: Jet, i: int) -> Jet:
        """Base-space jet of the derivative along perturbation ``i``."""
        w_idx, b_idx = self._extract[i]
        c = np.zeros(self.base.size)
        c[b_idx] = w_jet.coeffs[w_idx]
        return Jet(self.base, c)

    def extract_base(self, w_jet: Jet) -> Jet:
        """The perturbation-free part of an augmented jet."""
        c = np.zeros(self.base.size)
        W = self.space
        nb = self.base.num_vars
        for k in range(self.base.size):
            j = W.index.get(tuple(self.base.monomials[k]) + (0,) * self.n_eps)
            if j is not None:
                c[k] = w_jet.coeffs[j]
        return Jet(self.base, c)


def solve_linear(A: Sequence[Sequence[Jet]], b: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Solve A @ X = b over the jet ring by Gaussian elimination.

    ``A`` is an m x m nested list of jets, ``b`` an m x k right-hand side.
    Pivoting is on the magnitude of value parts; a zero-valued pivot column
    raises :class:`JetDomainError`.
    """
    m = len(A)
    k = len(b[0])
    M = [list(row) for row in A]
    B = [list(row) for row in b]
    for col in range(m):
        piv = max(range(col, m), key=lambda r: abs(M[r][col].value))
        if abs(M[piv][col].value) < 1e-300:
            raise JetDomainError("singular jet matrix in solve_linear")
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            B[col], B[piv] = B[piv], B[col]
        inv_piv = M[col][col].reciprocal()
        for r in range(m):
            if r == col:
                continue
            factor = M[r][col] * inv_piv
            for c in range(col, m):
                M[r][c] = M[r][c] - factor * M[col][c]
            for c in range(k):
                B[r][c] = B[r][c] - factor * B[col][c]
    X = []
    for r in range(m):
        inv_piv = M[r][r].reciprocal()
        X.append([B[r][c] * inv_piv for c in range(k)])
    return X


# -- generic elementary functions (accept jets or plain floats) --------------


def _generic(jet_method: str, float_fn: Callable) -> Callable:
    def op(x):
        if isinstance(x, Jet):
            return getattr(x, jet_method)()
        return float_fn(x)

    return op


sqrt = _generic("sqrt", math.sqrt)
exp = _generic("exp", math.exp)
log = _generic("log", math.log)
sin = _generic("sin", math.sin)
cos = _generic("cos", math.cos)
tan = _generic("tan", math.tan)
arctan = _generic("arctan", math.atan)
arcsin = _generic("arcsin", math.asin)
arccos = _generic("arccos", math.acos)
sinh = _generic("sinh", math.sinh)
cosh = _generic("cosh", math.cosh)

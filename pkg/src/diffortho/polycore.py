"""Monic Laguerre / Hermite machinery in the orthogonal basis.

Polynomials are stored as coefficient vectors ``d`` meaning ``sum_j d_j L_j``
where ``L_j`` is the monic classical polynomial of the case (``L_j^alpha`` or
``H_j``).  Nothing here converts to monomials above degree 8: the monomial
coefficients of these families grow factorially.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import mpmath as mp

from .errors import BasisError, RangeError

MONOMIAL_MAX_DEGREE = 8

LAGUERRE = "laguerre"
HERMITE = "hermite"


@dataclass(frozen=True)
class Case:
    """Classical family: Laguerre with parameter ``alpha > -1`` or Hermite."""

    kind: str
    alpha: mp.mpf | None = None

    def __post_init__(self):
        if self.kind == LAGUERRE:
            if self.alpha is None:
                raise ValueError("Laguerre case needs alpha")
            a = mp.mpf(self.alpha)
            if not a > -1:
                raise ValueError(f"alpha must exceed -1, got {a}")
            object.__setattr__(self, "alpha", a)
        elif self.kind == HERMITE:
            if self.alpha is not None:
                raise ValueError("Hermite case carries no parameter")
        else:
            raise ValueError(f"unknown case {self.kind!r}")

    @classmethod
    def laguerre(cls, alpha=0) -> "Case":
        return cls(LAGUERRE, mp.mpf(alpha))

    @classmethod
    def hermite(cls) -> "Case":
        return cls(HERMITE)

    @property
    def is_laguerre(self) -> bool:
        return self.kind == LAGUERRE

    def shifted(self, k: int = 1) -> "Case":
        """Laguerre parameter raised by ``k`` (Hermite is returned unchanged)."""
        if self.is_laguerre:
            return Case(LAGUERRE, self.alpha + k)
        return self

    @property
    def contracted_support(self) -> tuple[int, int]:
        """The interval carrying the limit zero distribution."""
        return (0, 1) if self.is_laguerre else (-1, 1)

    def in_support(self, x, slack=0) -> bool:
        """Whether the real number ``x`` lies in the support (R+ or R)."""
        return (x >= -slack) if self.is_laguerre else True

    def __str__(self) -> str:
        if self.is_laguerre:
            return f"laguerre(alpha={mp.nstr(self.alpha, 15)})"
        return "hermite"


def classical_recurrence(case: Case, k: int) -> tuple[mp.mpf, mp.mpf]:
    """Coefficients of ``L_{k+1} = (x - a_k) L_k - b_k L_{k-1}``."""
    if k < 0:
        raise ValueError("recurrence index must be non-negative")
    if case.is_laguerre:
        return mp.mpf(2 * k + 1) + case.alpha, k * (k + case.alpha)
    return mp.mpf(0), mp.mpf(k) / 2


def recurrence_table(case: Case, n: int) -> tuple[list, list]:
    """Lists ``a[0..n]`` and ``b[0..n]`` of recurrence coefficients."""
    a, b = [], []
    for k in range(n + 1):
        ak, bk = classical_recurrence(case, k)
        a.append(ak)
        b.append(bk)
    return a, b


@dataclass(frozen=True)
class ClassicalConstants:
    tau_n: mp.mpf
    lambda_n: int
    c_n: mp.mpf | None


def squared_norm(case: Case, n: int) -> mp.mpf:
    """``tau_n = ||L_n||_w^2``."""
    if case.is_laguerre:
        return mp.factorial(n) * mp.gamma(n + case.alpha + 1)
    return mp.factorial(n) * mp.sqrt(mp.pi) * mp.ldexp(mp.mpf(1), -n)


def tau_ratio(case: Case, n: int, k: int) -> mp.mpf:
    """``tau_n / tau_{n-k}`` as a product of recurrence factors."""
    r = mp.mpf(1)
    for j in range(n - k + 1, n + 1):
        r *= classical_recurrence(case, j)[1]
    return r


def mrs_constant(case: Case, n: int) -> mp.mpf:
    """Mhaskar-Rakhmanov-Saff number: ``4n`` or ``sqrt(2n)``."""
    if n < 1:
        raise ValueError("MRS constant is defined for n >= 1")
    return mp.mpf(4 * n) if case.is_laguerre else mp.sqrt(2 * n)


def classical_constants(case: Case, n: int) -> ClassicalConstants:
    if n < 0:
        raise ValueError("n must be non-negative")
    return ClassicalConstants(
        tau_n=squared_norm(case, n),
        lambda_n=-n,
        c_n=mrs_constant(case, n) if n >= 1 else None,
    )


def _as_number(x):
    if isinstance(x, (mp.mpf, mp.mpc)):
        return x
    if isinstance(x, complex):
        return mp.mpc(x)
    return mp.mpf(x)


@dataclass(frozen=True, eq=False)
class BasisPoly:
    """``sum_j coeffs[j] * L_j`` in the monic basis of ``case``."""

    case: Case
    coeffs: tuple

    def __post_init__(self):
        cs = tuple(_as_number(c) for c in self.coeffs)
        if not cs:
            raise ValueError("a polynomial needs at least one coefficient")
        for c in cs:
            if not mp.isfinite(c):
                raise RangeError("non-finite coefficient")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def basis(cls, case: Case, n: int, scale=1) -> "BasisPoly":
        """The (scaled) basis element ``scale * L_n``."""
        return cls(case, (0,) * n + (scale,))

    @classmethod
    def constant(cls, case: Case, value) -> "BasisPoly":
        return cls(case, (value,))

    @classmethod
    def monomial(cls, case: Case, k: int) -> "BasisPoly":
        """``x**k`` expanded in the basis (by repeated multiplication by x)."""
        p = cls.constant(case, 1)
        for _ in range(k):
            p = p.times_x()
        return p

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    @property
    def is_monic(self) -> bool:
        return self.leading == 1

    @property
    def is_real(self) -> bool:
        return all(not isinstance(c, mp.mpc) or c.imag == 0 for c in self.coeffs)

    def _check(self, other: "BasisPoly") -> None:
        if self.case != other.case:
            raise BasisError(f"basis mismatch: {self.case} vs {other.case}")

    def __add__(self, other: "BasisPoly") -> "BasisPoly":
        self._check(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return BasisPoly(self.case, tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "BasisPoly":
        return BasisPoly(self.case, tuple(-c for c in self.coeffs))

    def __sub__(self, other: "BasisPoly") -> "BasisPoly":
        return self + (-other)

    def __mul__(self, s) -> "BasisPoly":
        s = _as_number(s)
        return BasisPoly(self.case, tuple(s * c for c in self.coeffs))

    __rmul__ = __mul__

    def add_constant(self, c) -> "BasisPoly":
        cs = list(self.coeffs)
        cs[0] = cs[0] + c
        return BasisPoly(self.case, tuple(cs))

    def trimmed(self) -> "BasisPoly":
        cs = list(self.coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        return BasisPoly(self.case, tuple(cs))

    def times_x(self) -> "BasisPoly":
        """Multiply by ``x`` using ``x L_j = L_{j+1} + a_j L_j + b_j L_{j-1}``."""
        n = self.degree
        a, b = recurrence_table(self.case, n + 1)
        out = [mp.mpf(0)] * (n + 2)
        for j, d in enumerate(self.coeffs):
            out[j + 1] += d
            out[j] += a[j] * d
            if j >= 1:
                out[j - 1] += b[j] * d
        return BasisPoly(self.case, tuple(out))

    def __call__(self, z):
        return eval_clenshaw(self, z)

    def to_monomial(self) -> list:
        """Monomial coefficients (low to high); refused above degree 8."""
        if self.degree > MONOMIAL_MAX_DEGREE:
            raise ValueError("monomial conversion is limited to degree <= 8")
        a, b = recurrence_table(self.case, self.degree)
        prev, cur = [], [mp.mpf(1)]
        out = [mp.mpf(0)] * (self.degree + 1)
        for j, d in enumerate(self.coeffs):
            for i, c in enumerate(cur):
                out[i] += d * c
            nxt = [mp.mpf(0)] + cur
            for i, c in enumerate(cur):
                nxt[i] -= a[j] * c
            for i, c in enumerate(prev):
                nxt[i] -= b[j] * c
            prev, cur = cur, nxt
        return out

    def __repr__(self) -> str:
        cs = ", ".join(mp.nstr(c, 8) for c in self.coeffs)
        return f"BasisPoly({self.case}, [{cs}])"


def eval_clenshaw(p: BasisPoly, z):
    """Evaluate ``sum d_j L_j(z)`` by Clenshaw's backward recurrence."""
    z = _as_number(z)
    n = p.degree
    a, b = recurrence_table(p.case, n + 1)
    y1 = y2 = mp.mpf(0)
    for k in range(n, -1, -1):
        y1, y2 = p.coeffs[k] + (z - a[k]) * y1 - b[k + 1] * y2, y1
    if not mp.isfinite(y1):
        raise RangeError("evaluation left the representable range")
    return y1


def basis_values(case: Case, n: int, z) -> list:
    """``[L_0(z), ..., L_n(z)]`` by forward recurrence."""
    a, b = recurrence_table(case, n)
    z = _as_number(z)
    vals = [mp.mpf(1)]
    if n >= 1:
        vals.append(z - a[0])
    for k in range(1, n):
        vals.append((z - a[k]) * vals[k] - b[k] * vals[k - 1])
    return vals


def eval_with_derivative(p: BasisPoly, z):
    """``(p(z), p'(z))`` by forward recurrence on values and derivatives."""
    z = _as_number(z)
    n = p.degree
    a, b = recurrence_table(p.case, n)
    l_prev, l_cur = mp.mpf(0), mp.mpf(1)
    d_prev, d_cur = mp.mpf(0), mp.mpf(0)
    val = p.coeffs[0] * l_cur
    der = mp.mpf(0)
    for k in range(n):
        l_next = (z - a[k]) * l_cur - b[k] * l_prev
        d_next = l_cur + (z - a[k]) * d_cur - b[k] * d_prev
        l_prev, l_cur = l_cur, l_next
        d_prev, d_cur = d_cur, d_next
        c = p.coeffs[k + 1]
        if c:
            val += c * l_cur
            der += c * d_cur
    return val, der


def derivative_in_basis(p: BasisPoly) -> BasisPoly:
    """Exact derivative.

    Hermite: ``H_n' = n H_{n-1}`` in the same basis.  Laguerre:
    ``(L_n^a)' = n L_{n-1}^{a+1}``, so the result lives in the ``alpha + 1``
    basis.  The factor ``n`` stays in the coefficients.
    """
    target = p.case.shifted(1)
    if p.degree == 0:
        return BasisPoly.constant(target, 0)
    return BasisPoly(target, tuple(j * p.coeffs[j] for j in range(1, p.degree + 1)))


def lower_alpha(p: BasisPoly) -> BasisPoly:
    """Re-express a Laguerre ``alpha + 1`` expansion in the ``alpha`` basis.

    Uses ``L_j^a = L_j^{a+1} + j L_{j-1}^{a+1}`` solved by back substitution.
    """
    if not p.case.is_laguerre:
        return p
    target = Case(LAGUERRE, p.case.alpha - 1)
    e = p.coeffs
    n = p.degree
    d = [mp.mpf(0)] * (n + 1)
    d[n] = e[n]
    for k in range(n - 1, -1, -1):
        d[k] = e[k] - (k + 1) * d[k + 1]
    return BasisPoly(target, tuple(d))


def x_derivative(p: BasisPoly) -> BasisPoly:
    """``x p'`` for a Laguerre expansion, via ``x (L_j^b)' = j L_j^b + j(j+b) L_{j-1}^b``."""
    if not p.case.is_laguerre:
        raise BasisError("x_derivative is defined for Laguerre expansions")
    beta = p.case.alpha
    out = [mp.mpf(0)] * (p.degree + 1)
    for j in range(1, p.degree + 1):
        out[j] += j * p.coeffs[j]
        out[j - 1] += j * (j + beta) * p.coeffs[j]
    return BasisPoly(p.case, tuple(out))


def apply_operator(case: Case, p: BasisPoly) -> BasisPoly:
    """Apply ``x p'' + (1 + alpha - x) p'`` (Laguerre) or ``p''/2 - x p'`` (Hermite).

    The result is assembled from derivatives, multiplication by ``x`` and
    basis changes; the eigenvalue relation is not used.
    """
    if p.case != case:
        raise BasisError(f"operator for {case} applied to a {p.case} polynomial")
    n = p.degree
    if n == 0:
        return BasisPoly.constant(case, 0)
    d1 = derivative_in_basis(p)
    if case.is_laguerre:
        # x p'' taken as (x d/dx) of p' inside the alpha+1 basis
        inner = x_derivative(d1) + d1 * (1 + case.alpha) - d1.times_x()
        out = lower_alpha(inner)
    else:
        out = derivative_in_basis(d1) * mp.mpf(0.5) - d1.times_x()
    cs = out.coeffs[: n + 1] + (0,) * max(0, n + 1 - len(out.coeffs))
    return BasisPoly(case, cs)


def from_monomial(case: Case, coeffs: Sequence) -> BasisPoly:
    """Expand a low-degree monomial polynomial (low to high) in the basis."""
    if len(coeffs) - 1 > MONOMIAL_MAX_DEGREE:
        raise ValueError("monomial conversion is limited to degree <= 8")
    out = BasisPoly.constant(case, 0)
    xk = BasisPoly.constant(case, 1)
    for c in coeffs:
        out = out + xk * c
        xk = xk.times_x()
    return out.trimmed()

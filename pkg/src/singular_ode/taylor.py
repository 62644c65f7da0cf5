"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` is a polynomial in ``nvar`` variables truncated at total
degree ``order``. Arithmetic between jets (and with plain numbers) follows
the usual rules of power series, so any evaluator written with ``+ - * /``
and ``**`` can be fed jets instead of floats. That gives exact Taylor
coefficients of F and zeta for the invariant-manifold solvers, and
forward-mode derivatives for the Jacobians.

Monomials are stored in graded order: all degree-0 terms, then degree 1,
and so on; within a degree the order is reverse lexicographic in the
exponent tuple (``x0**2, x0*x1, x1**2`` for two variables).
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb

import numpy as np


class MonomialBasis:
    """Index tables for monomials of ``nvar`` variables up to ``order``."""

    def __init__(self, nvar: int, order: int):
        self.nvar = nvar
        self.order = order
        exps = []
        for deg in range(order + 1):
            exps.extend(_exponents_of_degree(nvar, deg))
        self.exponents = np.array(exps, dtype=int).reshape(len(exps), nvar)
        self.degrees = self.exponents.sum(axis=1) if nvar else np.zeros(1, dtype=int)
        self.index = {tuple(e): i for i, e in enumerate(exps)}
        self.size = len(exps)

        # product table: (i, j) -> k for deg_i + deg_j <= order
        ii, jj, kk = [], [], []
        for i, ei in enumerate(exps):
            for j, ej in enumerate(exps):
                if self.degrees[i] + self.degrees[j] > order:
                    continue
                ii.append(i)
                jj.append(j)
                kk.append(self.index[tuple(a + b for a, b in zip(ei, ej))])
        self.mul_i = np.array(ii, dtype=int)
        self.mul_j = np.array(jj, dtype=int)
        self.mul_k = np.array(kk, dtype=int)

        # derivative tables: d/dx_v maps monomial i -> (target, factor)
        self.deriv = []
        for v in range(nvar):
            src, dst, fac = [], [], []
            for i, e in enumerate(exps):
                if e[v] == 0:
                    continue
                t = list(e)
                t[v] -= 1
                src.append(i)
                dst.append(self.index[tuple(t)])
                fac.append(e[v])
            self.deriv.append((np.array(src, dtype=int), np.array(dst, dtype=int),
                               np.array(fac, dtype=float)))

    def degree_slice(self, deg: int) -> slice:
        start = sum(comb(self.nvar + k - 1, k) for k in range(deg)) if self.nvar else 0
        return slice(start, start + comb(self.nvar + deg - 1, deg))


def _exponents_of_degree(nvar, deg):
    if nvar == 0:
        return [()] if deg == 0 else []
    out = []
    for combo in itertools.combinations_with_replacement(range(nvar), deg):
        e = [0] * nvar
        for v in combo:
            e[v] += 1
        out.append(tuple(e))
    out.sort(reverse=True)
    return out


@lru_cache(maxsize=64)
def basis(nvar: int, order: int) -> MonomialBasis:
    return MonomialBasis(nvar, order)


class Jet:
    """Truncated Taylor polynomial; see the module docstring."""

    __slots__ = ("c", "basis")
    # keep numpy from broadcasting over jets in mixed expressions
    __array_ufunc__ = None

    def __init__(self, coeffs, nvar: int, order: int):
        self.basis = basis(nvar, order)
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def constant(cls, value, nvar, order):
        c = np.zeros(basis(nvar, order).size)
        c[0] = value
        return cls(c, nvar, order)

    @classmethod
    def variable(cls, v, value, nvar, order):
        b = basis(nvar, order)
        c = np.zeros(b.size)
        c[0] = value
        if order >= 1:
            e = [0] * nvar
            e[v] = 1
            c[b.index[tuple(e)]] = 1.0
        return cls(c, nvar, order)

    @property
    def nvar(self):
        return self.basis.nvar

    @property
    def order(self):
        return self.basis.order

    @property
    def value(self) -> float:
        return float(self.c[0])

    def _new(self, c):
        return Jet(c, self.basis.nvar, self.basis.order)

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.basis is not self.basis:
                raise ValueError("jets over different monomial bases")
            return other
        return None

    def degree_part(self, deg: int) -> np.ndarray:
        return self.c[self.basis.degree_slice(deg)].copy()

    def derivative(self, v: int) -> "Jet":
        src, dst, fac = self.basis.deriv[v]
        out = np.zeros_like(self.c)
        out[dst] = self.c[src] * fac
        return self._new(out)

    # arithmetic --------------------------------------------------------
    def __neg__(self):
        return self._new(-self.c)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._coerce(other)
        if o is not None:
            return self._new(self.c + o.c)
        c = self.c.copy()
        c[0] += float(other)
        return self._new(c)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is not None:
            return self._new(self.c - o.c)
        c = self.c.copy()
        c[0] -= float(other)
        return self._new(c)

    def __rsub__(self, other):
        c = -self.c
        c[0] += float(other)
        return self._new(c)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return self._new(self.c * float(other))
        b = self.basis
        out = np.zeros(b.size)
        np.add.at(out, b.mul_k, self.c[b.mul_i] * o.c[b.mul_j])
        return self._new(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        return self ** -1

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return self._new(self.c / float(other))
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(1.0, self.nvar, self.order)
            base = self
            n = int(p)
            while n:
                if n & 1:
                    out = out * base
                n >>= 1
                if n:
                    base = base * base
            return out
        # binomial series around the constant term
        c0 = self.c[0]
        if c0 == 0.0:
            raise ZeroDivisionError("non-integer or negative power of a jet with zero constant term")
        if c0 < 0 and not float(p).is_integer():
            raise ValueError("fractional power of a jet with negative constant term")
        r = self / c0 - 1.0
        term = Jet.constant(1.0, self.nvar, self.order)
        total = Jet.constant(1.0, self.nvar, self.order)
        coef = 1.0
        for n in range(1, self.order + 1):
            coef *= (p - n + 1) / n
            term = term * r
            total = total + term * coef
        return total * (c0 ** p)

    def __repr__(self):
        return f"Jet(nvar={self.nvar}, order={self.order}, c={self.c!r})"


def jets_to_array(values, nvar: int, order: int) -> np.ndarray:
    """Stack a sequence of jets/numbers into a (len, n_monomials) array."""
    b = basis(nvar, order)
    out = np.zeros((len(values), b.size))
    for i, v in enumerate(values):
        if isinstance(v, Jet):
            out[i] = v.c
        else:
            out[i, 0] = float(v)
    return out


def jacobian(func, U) -> np.ndarray:
    """Exact Jacobian of a vector map by forward-mode jets."""
    U = np.asarray(U, dtype=float)
    d = U.size
    x = np.empty(d, dtype=object)
    for i in range(d):
        x[i] = Jet.variable(i, U[i], d, 1)
    out = np.atleast_1d(func(x))
    coeffs = jets_to_array(list(out), d, 1)
    return coeffs[:, 1:1 + d]


def gradient(func, U) -> np.ndarray:
    """Exact gradient of a scalar map by forward-mode jets."""
    return jacobian(lambda x: np.array([func(x)], dtype=object), U)[0]


def hessian(func, U) -> np.ndarray:
    """Exact Hessian of a scalar map using degree-2 jets."""
    U = np.asarray(U, dtype=float)
    d = U.size
    x = np.empty(d, dtype=object)
    for i in range(d):
        x[i] = Jet.variable(i, U[i], d, 2)
    val = func(x)
    b = basis(d, 2)
    H = np.zeros((d, d))
    c = val.c if isinstance(val, Jet) else np.zeros(b.size)
    for i in range(d):
        for j in range(d):
            e = [0] * d
            e[i] += 1
            e[j] += 1
            k = b.index[tuple(e)]
            H[i, j] = c[k] * (2.0 if i == j else 1.0)
    return H


def supports_jets(func, U) -> bool:
    try:
        jacobian(func, U)
    except (TypeError, ValueError, AttributeError):
        return False
    return True

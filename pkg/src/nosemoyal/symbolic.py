"""Exact multivariate polynomial calculus used as an independent oracle.

Everything here works on rational coefficients (:class:`fractions.Fraction`)
and sparse monomial dictionaries; it shares no code with the grid evaluators
in :mod:`nosemoyal.brackets`.  The bidifferential contraction is done by
brute-force enumeration of every index tuple.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping

import numpy as np


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class Polynomial:
    """Sparse polynomial in ``nvars`` variables with rational coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], object] | None = None):
        self.nvars = nvars
        self.terms: dict[tuple[int, ...], Fraction] = {}
        for mono, c in (terms or {}).items():
            if len(mono) != nvars:
                raise ValueError("monomial arity mismatch")
            c = _frac(c)
            if c:
                self.terms[tuple(mono)] = self.terms.get(tuple(mono), Fraction(0)) + c
        self.terms = {m: c for m, c in self.terms.items() if c}

    @classmethod
    def constant(cls, nvars: int, value) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, k: int) -> "Polynomial":
        mono = [0] * nvars
        mono[k] = 1
        return cls(nvars, {tuple(mono): 1})

    @classmethod
    def univariate(cls, nvars: int, k: int, coeffs: Iterable) -> "Polynomial":
        terms = {}
        for e, c in enumerate(coeffs):
            mono = [0] * nvars
            mono[k] = e
            terms[tuple(mono)] = c
        return cls(nvars, terms)

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms: dict[tuple[int, ...], Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        return self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        parts = [f"{c}*x^{m}" for m, c in sorted(self.terms.items())]
        return "Polynomial(" + " + ".join(parts) + ")"

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def diff(self, k: int, times: int = 1) -> "Polynomial":
        terms = {}
        for m, c in self.terms.items():
            e = m[k]
            if e < times:
                continue
            coef = c
            for j in range(times):
                coef *= e - j
            mono = list(m)
            mono[k] = e - times
            terms[tuple(mono)] = coef
        return Polynomial(self.nvars, terms)

    def diff_multi(self, orders: Iterable[int]) -> "Polynomial":
        out = self
        for k, times in enumerate(orders):
            if times:
                out = out.diff(k, times)
        return out

    def coefficient_array(self) -> np.ndarray:
        """Dense coefficient tensor ``c[i0, i1, ...]`` (float)."""
        shape = [1] * self.nvars
        for m in self.terms:
            shape = [max(s, e + 1) for s, e in zip(shape, m)]
        arr = np.zeros(shape)
        for m, c in self.terms.items():
            arr[m] = float(c)
        return arr

    def evaluate(self, coords: list[np.ndarray]) -> np.ndarray:
        """Evaluate monomial by monomial on broadcastable coordinate arrays."""
        out = np.zeros(np.broadcast_shapes(*[np.shape(c) for c in coords]))
        for m, c in self.terms.items():
            term = float(c)
            for x, e in zip(coords, m):
                if e:
                    term = term * x**e
            out = out + term
        return out


def canonical_tensor_exact() -> list[list[Polynomial]]:
    """Block symplectic matrix for one degree of freedom, variables (r, p)."""
    one, zero = Polynomial.constant(2, 1), Polynomial.constant(2, 0)
    return [[zero, one], [-one, zero]]


def nose_tensor_exact() -> list[list[Polynomial]]:
    """Antisymmetric Nose tensor over variables (r, eta, p, p_eta)."""
    c = lambda v: Polynomial.constant(4, v)  # noqa: E731
    p = Polynomial.variable(4, 2)
    return [
        [c(0), c(0), c(1), c(0)],
        [c(0), c(0), c(0), c(1)],
        [c(-1), c(0), c(0), -p],
        [c(0), c(-1), p, c(0)],
    ]


def bidifferential_exact(a: Polynomial, b: Polynomial, tensor: list[list[Polynomial]],
                         n: int) -> Polynomial:
    """``a [<-d_i B_ij ->d_j]^n b`` with B evaluated pointwise (derivatives skip B)."""
    dim = len(tensor)
    total = Polynomial.constant(a.nvars, 0)
    for left in itertools.product(range(dim), repeat=n):
        da = a
        for i in left:
            da = da.diff(i)
        if da.is_zero():
            continue
        for right in itertools.product(range(dim), repeat=n):
            weight = Polynomial.constant(a.nvars, 1)
            for i, j in zip(left, right):
                weight = weight * tensor[i][j]
                if weight.is_zero():
                    break
            if weight.is_zero():
                continue
            db = b
            for j in right:
                db = db.diff(j)
            if db.is_zero():
                continue
            total = total + weight * da * db
    return total


def moyal_series_exact(a: Polynomial, b: Polynomial, tensor, n_max: int, hbar) -> Polynomial:
    """Truncated bracket divided by ``i``: sum over odd n of (-1)^((n-1)/2) hbar^n / (2^(n-1) n!)."""
    hbar = _frac(hbar)
    total = Polynomial.constant(a.nvars, 0)
    for n in range(1, n_max + 1, 2):
        coef = Fraction((-1) ** ((n - 1) // 2)) * hbar**n / (2 ** (n - 1) * factorial(n))
        total = total + coef * bidifferential_exact(a, b, tensor, n)
    return total


def standard_hamiltonian_exact(mass, potential_coeffs, nvars: int = 2,
                               r_index: int = 0, p_index: int = 1) -> Polynomial:
    p = Polynomial.variable(nvars, p_index)
    v = Polynomial.univariate(nvars, r_index, potential_coeffs)
    return v + p * p * (Fraction(1) / (2 * _frac(mass)))


def nose_hamiltonian_exact(mass, potential_coeffs, m_eta, g_kT) -> Polynomial:
    """Extended Hamiltonian over (r, eta, p, p_eta)."""
    h = standard_hamiltonian_exact(mass, potential_coeffs, nvars=4, r_index=0, p_index=2)
    eta = Polynomial.variable(4, 1)
    p_eta = Polynomial.variable(4, 3)
    return h + p_eta * p_eta * (Fraction(1) / (2 * _frac(m_eta))) + _frac(g_kT) * eta

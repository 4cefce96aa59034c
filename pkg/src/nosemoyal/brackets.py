"""Generalized Moyal brackets in matrix form.

The bracket of two phase-space symbols is built from the bidifferential
operator ``D = <-d_i B_ij(x) ->d_j`` where ``B`` is an antisymmetric structure
tensor.  ``B`` may depend (affinely) on the coordinates; in the n-fold power
``a D^n b`` the tensor entries are evaluated pointwise and the derivatives act
on ``a`` and ``b`` only.  With that reading ``b D^n a = (-1)^n a D^n b`` holds
for every tensor, so the even orders of the exponential series cancel and

    {a, b}_M = sum over odd n of 2 (i hbar / 2)^n / n! * a D^n b.

Sign convention: coordinates are ordered ``(r, eta, p, p_eta)`` and
``(i / hbar) {H, chi}_M`` is the time derivative of the observable ``chi``, so
that ``dr/dt = +p/m`` for the canonical tensor.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import GridError, TensorGridMismatch, UnsupportedMode
from .grid import AXIS_ORDER, GridField, PhaseSpaceGrid, poly_derivative, poly_eval

MAX_ORDER = 7


# ---------------------------------------------------------------------------
# structure tensors


class StructureTensor:
    """Antisymmetric matrix ``B(x)`` whose entries are affine in the coordinates.

    Only the strict upper triangle is stored; ``upper[(i, j)]`` with ``i < j``
    is ``(constant, coefficients)`` so that
    ``B_ij(x) = constant + sum_k coefficients[k] * x_k`` and ``B_ji = -B_ij``.

    Parameters
    ----------
    dim : int
        2 for the ``(r, p)`` plane, 4 for ``(r, eta, p, p_eta)``.
    kind : {"canonical", "nose", "custom-affine"}
    upper : mapping
        Upper-triangle entries; missing pairs are zero.
    """

    KINDS = ("canonical", "nose", "custom-affine")

    def __init__(self, dim: int, kind: str,
                 upper: Mapping[tuple[int, int], tuple[float, Sequence[float]]]):
        if dim not in (2, 4):
            raise ValueError("structure tensors are 2x2 or 4x4")
        if kind not in self.KINDS:
            raise ValueError(f"unknown tensor kind {kind!r}")
        const = np.zeros((dim, dim))
        lin = np.zeros((dim, dim, dim))
        for (i, j), (c, coeffs) in upper.items():
            if not 0 <= i < j < dim:
                raise ValueError(f"entry {(i, j)} is not in the strict upper triangle")
            coeffs = np.zeros(dim) if coeffs is None else np.asarray(coeffs, dtype=float)
            if coeffs.shape != (dim,):
                raise ValueError("one coefficient per coordinate expected")
            const[i, j], const[j, i] = c, -c
            lin[i, j], lin[j, i] = coeffs, -coeffs
        self.dim = dim
        self.kind = kind
        self.constant = const
        self.linear = lin
        self.constant.flags.writeable = False
        self.linear.flags.writeable = False

    @classmethod
    def canonical(cls) -> "StructureTensor":
        return cls(2, "canonical", {(0, 1): (1.0, None)})

    @classmethod
    def nose(cls) -> "StructureTensor":
        # B_{p, p_eta} = -p, everything else block symplectic
        return cls(4, "nose", {
            (0, 2): (1.0, None),
            (1, 3): (1.0, None),
            (2, 3): (0.0, [0.0, 0.0, -1.0, 0.0]),
        })

    @classmethod
    def custom_affine(cls, dim: int, upper) -> "StructureTensor":
        return cls(dim, "custom-affine", upper)

    @property
    def names(self) -> tuple[str, ...]:
        return ("r", "p") if self.dim == 2 else AXIS_ORDER

    def matrix(self, x: Sequence[float]) -> np.ndarray:
        """Numerical value of ``B`` at the point ``x``."""
        return self.constant + self.linear @ np.asarray(x, dtype=float)

    def is_zero(self, i: int, j: int) -> bool:
        return self.constant[i, j] == 0.0 and not np.any(self.linear[i, j])

    def pairs(self) -> list[tuple[int, int]]:
        """Ordered index pairs with a non-vanishing entry."""
        return [(i, j) for i in range(self.dim) for j in range(self.dim)
                if i != j and not self.is_zero(i, j)]

    def divergence(self) -> np.ndarray:
        """``d_i = sum_j d B_ij / d x_j`` (constant for affine tensors)."""
        return np.einsum("ijj->i", self.linear)

    def check_grid(self, grid: PhaseSpaceGrid) -> None:
        if grid.names != self.names:
            raise TensorGridMismatch(
                f"{self.dim}x{self.dim} {self.kind} tensor needs axes {self.names}, "
                f"grid has {grid.names}"
            )

    def entry(self, grid: PhaseSpaceGrid, i: int, j: int):
        """``B_ij`` on the grid: a float if constant, else a broadcastable array."""
        val = self.constant[i, j]
        for k, c in enumerate(self.linear[i, j]):
            if c != 0.0:
                val = val + c * grid.mesh(self.names[k])
        return val

    def __repr__(self):
        return f"StructureTensor(dim={self.dim}, kind={self.kind!r})"


def nose_tensor(p: float | None = None, n_dof: int = 1) -> StructureTensor:
    """Nose structure tensor over ``(r, eta, p, p_eta)``.

    With ``p`` given the tensor is frozen at that momentum and returned as a
    constant tensor; without it the affine, momentum-dependent tensor is
    returned.
    """
    if n_dof != 1:
        raise UnsupportedMode("the 4x4 Nose tensor covers one physical degree of freedom")
    tensor = StructureTensor.nose()
    if p is None:
        return tensor
    m = tensor.matrix([0.0, 0.0, p, 0.0])
    upper = {(i, j): (m[i, j], None) for i in range(4) for j in range(i + 1, 4) if m[i, j]}
    return StructureTensor(4, "custom-affine", upper)


@dataclass(frozen=True)
class BracketOrder:
    """Truncation of the odd-order hbar series.

    Parameters
    ----------
    n_max : int
        Highest odd order kept; one of 1, 3, 5, 7.
    mode : {"series", "spectral"}
        ``spectral`` evaluates the untruncated canonical bracket.
    """

    n_max: int = 3
    mode: str = "series"

    def __post_init__(self):
        if self.n_max not in (1, 3, 5, 7):
            raise ValueError(f"n_max must be one of 1, 3, 5, 7 (got {self.n_max})")
        if self.mode not in ("series", "spectral"):
            raise ValueError(f"unknown bracket mode {self.mode!r}")

    def odd_orders(self) -> range:
        return range(1, self.n_max + 1, 2)


# ---------------------------------------------------------------------------
# derivatives


def _spectral_values(values: np.ndarray, grid: PhaseSpaceGrid, orders: Sequence[int]) -> np.ndarray:
    out = values
    for k, m in enumerate(orders):
        if not m:
            continue
        ax = grid.axes[k]
        shape = [1] * grid.ndim
        if np.iscomplexobj(out):
            kk = ax.wavenumbers
            mult = (1j * kk) ** m
            mult[ax.count // 2] = 0.0  # Nyquist mode dropped for every order
            shape[k] = ax.count
            out = np.fft.ifft(np.fft.fft(out, axis=k) * mult.reshape(shape), axis=k)
        else:
            kk = 2.0 * np.pi * np.fft.rfftfreq(ax.count, d=ax.spacing)
            mult = (1j * kk) ** m
            mult[-1] = 0.0
            shape[k] = mult.size
            out = np.fft.irfft(np.fft.rfft(out, axis=k) * mult.reshape(shape), n=ax.count, axis=k)
    return out


def spectral_derivative(f: GridField, axis: str, order: int = 1) -> GridField:
    """Fourier derivative ``d^order f / d axis^order`` on the periodic grid.

    The Nyquist mode is discarded so odd-order derivative matrices stay
    antisymmetric and powers of the first derivative agree with higher orders.
    """
    if order < 1:
        raise ValueError("order must be positive")
    try:
        k = f.grid.index(axis)
    except GridError:
        raise GridError(f"axis {axis!r} is not a spectral axis of {f.grid.names}") from None
    orders = [0] * f.grid.ndim
    orders[k] = order
    return GridField(f.grid, _spectral_values(f.values, f.grid, orders))


def derivative(f: GridField, orders: Sequence[int]) -> GridField:
    """Mixed partial derivative; exact for polynomial fields, spectral otherwise."""
    orders = tuple(orders)
    if not any(orders):
        return f
    if f.poly is not None:
        c = poly_derivative(f.poly, orders)
        return GridField(f.grid, poly_eval(c, f.grid), c)
    return GridField(f.grid, _spectral_values(f.values, f.grid, orders))


def _vanishes(f: GridField) -> bool:
    return f.poly is not None and not np.any(f.poly)


class _DerivativeCache:
    def __init__(self, f: GridField):
        self.f = f
        self.store: dict[tuple[int, ...], GridField] = {}

    def __call__(self, orders: tuple[int, ...]) -> GridField:
        if orders not in self.store:
            self.store[orders] = derivative(self.f, orders)
        return self.store[orders]


# ---------------------------------------------------------------------------
# bidifferential contraction


def contractions(tensor: StructureTensor, n: int) -> Iterator[tuple[float, Counter, tuple, tuple]]:
    """Expand ``(sum_ij B_ij <-d_i ->d_j)^n`` over multisets of index pairs.

    Yields ``(multinomial, pair_counts, left_orders, right_orders)``.
    """
    pairs = tensor.pairs()
    nfact = math.factorial(n)
    for combo in itertools.combinations_with_replacement(range(len(pairs)), n):
        counts = Counter(combo)
        coef = nfact / math.prod(math.factorial(c) for c in counts.values())
        left = [0] * tensor.dim
        right = [0] * tensor.dim
        for idx, c in counts.items():
            i, j = pairs[idx]
            left[i] += c
            right[j] += c
        yield coef, Counter({pairs[idx]: c for idx, c in counts.items()}), tuple(left), tuple(right)


def tensor_weight(tensor: StructureTensor, grid: PhaseSpaceGrid, pair_counts: Counter):
    w = 1.0
    for (i, j), c in pair_counts.items():
        w = w * tensor.entry(grid, i, j) ** c
    return w


def _check_pair(a: GridField, b: GridField, tensor: StructureTensor) -> None:
    if a.grid != b.grid:
        raise GridError("bracket arguments live on different grids")
    tensor.check_grid(a.grid)


def bidifferential_term(a: GridField, b: GridField, tensor: StructureTensor, n: int) -> GridField:
    """``a [<-d_i B_ij ->d_j]^n b`` with ``B`` evaluated pointwise.

    For ``n = 1`` this is the generalized Poisson bracket
    ``sum_ij (d_i a) B_ij (d_j b)``.
    """
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"bidifferential order must lie in 1..{MAX_ORDER}")
    _check_pair(a, b, tensor)
    grid = a.grid
    da, db = _DerivativeCache(a), _DerivativeCache(b)
    dtype = np.result_type(a.values, b.values)
    total = np.zeros(grid.shape, dtype=dtype)
    for coef, counts, left, right in contractions(tensor, n):
        fa = da(left)
        if _vanishes(fa):
            continue
        fb = db(right)
        if _vanishes(fb):
            continue
        total = total + coef * tensor_weight(tensor, grid, counts) * fa.values * fb.values
    return GridField(grid, total)


def poisson_bracket(a: GridField, b: GridField, tensor: StructureTensor) -> GridField:
    return bidifferential_term(a, b, tensor, 1)


def series_coefficient(n: int, hbar: float) -> complex:
    """``2 (i hbar / 2)^n / n!``."""
    return 2.0 * (0.5j * hbar) ** n / math.factorial(n)


def even_order_defect(a: GridField, b: GridField, tensor: StructureTensor, n: int) -> GridField:
    """``a D^n b - b D^n a`` for even ``n``; vanishes identically."""
    if n % 2:
        raise ValueError("even orders only")
    return GridField(a.grid, bidifferential_term(a, b, tensor, n).values
                     - bidifferential_term(b, a, tensor, n).values)


def moyal_bracket(a: GridField, b: GridField, tensor: StructureTensor,
                  order: BracketOrder = BracketOrder(), hbar: float = 1.0,
                  verify_even: bool = False) -> GridField:
    """Generalized Moyal bracket ``{a, b}_M`` truncated at ``order.n_max``.

    ``(i / hbar)`` times the result is the rate of change of ``b`` under the
    Hamiltonian ``a``.  With ``verify_even`` the even orders up to ``n_max``
    are evaluated and checked to cancel.
    """
    if order.mode == "spectral":
        if tensor.kind != "canonical":
            raise UnsupportedMode("spectral mode is only defined for the canonical tensor")
        _check_pair(a, b, tensor)
        return moyal_bracket_spectral(a, b, hbar)
    _check_pair(a, b, tensor)
    if verify_even:
        for n in range(2, order.n_max + 1, 2):
            d = even_order_defect(a, b, tensor, n)
            scale = max(1.0, bidifferential_term(a, b, tensor, n).sup_norm())
            if d.sup_norm() > 1e-12 * scale:
                raise AssertionError(f"even order {n} does not cancel: {d.sup_norm():.3e}")
    total = np.zeros(a.grid.shape, dtype=complex)
    for n in order.odd_orders():
        total = total + series_coefficient(n, hbar) * bidifferential_term(a, b, tensor, n).values
    return GridField(a.grid, total)


# ---------------------------------------------------------------------------
# hbar-exact canonical bracket


def _separable_parts(a: GridField) -> tuple[np.ndarray, np.ndarray]:
    if a.poly is None:
        raise UnsupportedMode("spectral mode needs the left symbol as an exact polynomial")
    c = a.poly
    if np.any(c[1:, 1:]):
        raise UnsupportedMode("spectral mode needs a separable left symbol U(r) + T(p)")
    u = c[:, 0].copy()
    t = c[0, :].copy()
    t[0] = 0.0
    return u, t


def _taylor_coefficients(coeffs: np.ndarray, x: np.ndarray, kmax: int,
                         n_nodes: int = 32, radius: float = 1.0) -> np.ndarray:
    """``f^(k)(x) / k!`` for ``k <= kmax`` by the trapezoid rule on a circle around x."""
    nodes = radius * np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)
    samples = npoly.polyval(x[:, None] + nodes[None, :], coeffs)
    taylor = np.fft.fft(samples, axis=1) / n_nodes
    scale = radius ** -np.arange(kmax + 1)
    return (taylor[:, : kmax + 1] * scale).real


def _shift_difference(sym: np.ndarray, b: GridField, axis: int, other: np.ndarray,
                      hbar: float, sign: float) -> np.ndarray:
    """Apply ``S(other + sign*i*hbar/2 d_axis) - S(other - sign*i*hbar/2 d_axis)`` to b.

    ``other`` is the coordinate S depends on (the axis not differentiated).
    """
    grid = b.grid
    ax = grid.axes[axis]
    if b.poly is not None:
        kmax = b.poly.shape[axis] - 1
        if kmax == 0:
            return np.zeros(grid.shape, dtype=complex)
        taylor = _taylor_coefficients(sym, other, kmax)  # (len(other), kmax+1)
        out = np.zeros(grid.shape, dtype=complex)
        for k in range(1, kmax + 1):
            factor = (sign * 0.5j * hbar) ** k - (-sign * 0.5j * hbar) ** k
            if factor == 0:
                continue
            orders = [0] * grid.ndim
            orders[axis] = k
            coeff = taylor[:, k].reshape(grid.mesh(grid.names[1 - axis]).shape)
            out = out + factor * coeff * derivative(b, orders).values
        return out
    # d_axis -> i*theta, so other + sign*i*hbar/2*(i theta) = other - sign*hbar*theta/2
    theta = ax.wavenumbers
    shape = [1, 1]
    shape[axis] = ax.count
    theta = theta.reshape(shape)
    o = other.reshape(grid.mesh(grid.names[1 - axis]).shape)
    mult = (npoly.polyval(o - sign * 0.5 * hbar * theta, sym)
            - npoly.polyval(o + sign * 0.5 * hbar * theta, sym))
    nyq = [slice(None), slice(None)]
    nyq[axis] = ax.count // 2
    mult = np.array(mult, dtype=float)
    mult[tuple(nyq)] = 0.0
    return np.fft.ifft(np.fft.fft(b.values, axis=axis) * mult, axis=axis)


def moyal_bracket_spectral(a: GridField, b: GridField, hbar: float) -> GridField:
    """Untruncated canonical bracket for a separable polynomial symbol ``a = U(r) + T(p)``.

    Uses the Bopp-shift form

        {a, b}_M = [U(r + i hbar/2 d_p) - U(r - i hbar/2 d_p)] b
                 + [T(p - i hbar/2 d_r) - T(p + i hbar/2 d_r)] b.

    For a band-limited ``b`` the shifts become Fourier multipliers
    ``U(r - hbar theta/2) - U(r + hbar theta/2)`` along p (and likewise along
    r).  For a polynomial ``b`` the shifted symbol is expanded with Taylor
    coefficients obtained by FFT on a complex circle, which is exact because
    only finitely many derivatives of ``b`` survive.
    """
    grid = a.grid
    if b.grid != grid:
        raise GridError("bracket arguments live on different grids")
    if grid.names != ("r", "p"):
        raise TensorGridMismatch("spectral mode needs an (r, p) grid")
    u, t = _separable_parts(a)
    r = grid.axes[0].points
    p = grid.axes[1].points
    out = _shift_difference(u, b, axis=1, other=r, hbar=hbar, sign=1.0)
    if np.any(t):
        out = out + _shift_difference(t, b, axis=0, other=p, hbar=hbar, sign=-1.0)
    return GridField(grid, out)

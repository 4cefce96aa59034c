"""Phase-space grids, sampled fields, Wigner functions and averages.

Grids are uniform, periodic (last point excluded) tensor products over a
subset of the extended coordinates ``(r, eta, p, p_eta)``, always stored in
that order.  A :class:`GridField` holds one value per grid point; fields that
were built from a polynomial also keep its coefficient tensor so derivatives
of polynomial symbols (Hamiltonians, coordinates) are exact even though the
polynomial is not periodic on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import CubicSpline
from scipy.signal import convolve

from .errors import DegenerateFieldError, GridError, NormalizationError

AXIS_ORDER = ("r", "eta", "p", "p_eta")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Axis:
    """One periodic grid axis; ``count`` points with spacing ``(max-min)/count``."""

    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.name not in AXIS_ORDER:
            raise GridError(f"unknown axis name {self.name!r}; expected one of {AXIS_ORDER}")
        if not self.max > self.min:
            raise GridError(f"axis {self.name!r}: max must exceed min")
        if self.count < 4 or not _is_power_of_two(self.count):
            raise GridError(
                f"axis {self.name!r}: count {self.count} must be a power of two >= 4"
            )

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / self.count

    @property
    def length(self) -> float:
        return self.max - self.min

    @property
    def points(self) -> np.ndarray:
        return self.min + self.spacing * np.arange(self.count)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.count, d=self.spacing)

    def spec_string(self) -> str:
        return f"{self.name}:{self.min!r}:{self.max!r}:{self.count}"


class PhaseSpaceGrid:
    """Tensor-product grid over a canonically ordered subset of axes."""

    def __init__(self, axes: Iterable[Axis | tuple]):
        built = tuple(a if isinstance(a, Axis) else Axis(*a) for a in axes)
        if not built:
            raise GridError("a grid needs at least one axis")
        names = [a.name for a in built]
        if len(set(names)) != len(names):
            raise GridError(f"repeated axis in {names}")
        order = [AXIS_ORDER.index(n) for n in names]
        if order != sorted(order):
            raise GridError(f"axes must appear in the order {AXIS_ORDER}, got {names}")
        self.axes = built

    @classmethod
    def phase_plane(cls, r: tuple[float, float, int], p: tuple[float, float, int]):
        return cls([Axis("r", *r), Axis("p", *p)])

    @classmethod
    def extended(cls, r, eta, p, p_eta):
        return cls([Axis("r", *r), Axis("eta", *eta), Axis("p", *p), Axis("p_eta", *p_eta)])

    @classmethod
    def from_spec_string(cls, spec: str) -> "PhaseSpaceGrid":
        axes = []
        for part in spec.split(","):
            name, lo, hi, count = part.strip().split(":")
            axes.append(Axis(name, float(lo), float(hi), int(count)))
        return cls(axes)

    def spec_string(self) -> str:
        return ",".join(a.spec_string() for a in self.axes)

    def __eq__(self, other):
        return isinstance(other, PhaseSpaceGrid) and self.axes == other.axes

    def __hash__(self):
        return hash(self.axes)

    def __repr__(self):
        return f"PhaseSpaceGrid({self.spec_string()})"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.count for a in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def cell_volume(self) -> float:
        return math.prod(a.spacing for a in self.axes)

    @property
    def n_dof(self) -> int:
        return sum(1 for n in self.names if n == "r")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise GridError(f"axis {name!r} not on grid {self.names}") from None

    def axis(self, name: str) -> Axis:
        return self.axes[self.index(name)]

    def mesh(self, name: str) -> np.ndarray:
        """Coordinate values of axis ``name`` shaped to broadcast over the grid."""
        k = self.index(name)
        shape = [1] * self.ndim
        shape[k] = self.axes[k].count
        return self.axes[k].points.reshape(shape)

    def require(self, names: Sequence[str]) -> None:
        if tuple(names) != self.names:
            raise GridError(f"expected axes {tuple(names)}, grid has {self.names}")

    def subgrid(self, names: Sequence[str]) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid([self.axis(n) for n in names])


# ---------------------------------------------------------------------------
# polynomial coefficient tensors: c[i0, i1, ...] multiplies prod_k x_k**i_k


def poly_eval(coeffs: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    v = coeffs
    for ax in grid.axes:
        v = npoly.polyval(ax.points, v, tensor=True)
    return np.asarray(v) * np.ones(grid.shape)


def poly_derivative(coeffs: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    c = coeffs
    for k, m in enumerate(orders):
        if m == 0:
            continue
        if m >= c.shape[k]:
            shape = list(c.shape)
            shape[k] = 1
            return np.zeros(shape)
        c = npoly.polyder(c, m, axis=k)
    return c


def _pad_to(c: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    return np.pad(c, [(0, s - n) for s, n in zip(shape, c.shape)])


def poly_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    shape = np.maximum(a.shape, b.shape)
    return _pad_to(a, shape) + _pad_to(b, shape)


def poly_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return convolve(a, b, method="direct")


class GridField:
    """Real or complex values sampled on a :class:`PhaseSpaceGrid`.

    ``values`` has shape ``grid.shape`` (row-major in axis order) and is
    read-only.  ``poly`` optionally holds the exact polynomial the values
    were sampled from.
    """

    __slots__ = ("grid", "values", "poly")

    def __init__(self, grid: PhaseSpaceGrid, values, poly: np.ndarray | None = None):
        arr = np.array(values, dtype=np.result_type(values, float), copy=True)
        if arr.size != grid.size:
            raise GridError(f"{arr.size} values for grid of size {grid.size}")
        arr = arr.reshape(grid.shape)
        arr.flags.writeable = False
        if poly is not None:
            poly = np.asarray(poly, dtype=float)
            if poly.ndim != grid.ndim:
                raise GridError("polynomial coefficient tensor rank must equal grid rank")
        self.grid = grid
        self.values = arr
        self.poly = poly

    # constructors -------------------------------------------------------
    @classmethod
    def from_function(cls, grid: PhaseSpaceGrid, func: Callable[..., np.ndarray]) -> "GridField":
        """Sample ``func(*coordinate_meshes)`` (one argument per axis, in order)."""
        meshes = [grid.mesh(n) for n in grid.names]
        return cls(grid, np.broadcast_to(func(*meshes), grid.shape))

    @classmethod
    def from_coefficients(cls, grid: PhaseSpaceGrid, coeffs: np.ndarray) -> "GridField":
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(grid, poly_eval(coeffs, grid), poly=coeffs)

    @classmethod
    def coordinate(cls, grid: PhaseSpaceGrid, name: str) -> "GridField":
        k = grid.index(name)
        shape = [1] * grid.ndim
        shape[k] = 2
        c = np.zeros(shape)
        c[(0,) * k + (1,) + (0,) * (grid.ndim - k - 1)] = 1.0
        return cls.from_coefficients(grid, c)

    @classmethod
    def constant(cls, grid: PhaseSpaceGrid, value: float = 1.0) -> "GridField":
        return cls.from_coefficients(grid, np.full((1,) * grid.ndim, float(value)))

    # properties ---------------------------------------------------------
    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def real(self) -> "GridField":
        return GridField(self.grid, self.values.real, self.poly)

    @property
    def imag(self) -> "GridField":
        return GridField(self.grid, self.values.imag if self.is_complex else np.zeros(self.grid.shape))

    def integral(self) -> complex | float:
        return self.values.sum() * self.grid.cell_volume

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "GridField") -> None:
        if other.grid != self.grid:
            raise GridError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, GridField):
            self._check(other)
            poly = (poly_add(self.poly, other.poly)
                    if self.poly is not None and other.poly is not None else None)
            return GridField(self.grid, self.values + other.values, poly)
        if np.isrealobj(other):
            return self + GridField.constant(self.grid, other)
        return GridField(self.grid, self.values + other)

    __radd__ = __add__

    def __neg__(self):
        return GridField(self.grid, -self.values, None if self.poly is None else -self.poly)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GridField):
            self._check(other)
            poly = (poly_multiply(self.poly, other.poly)
                    if self.poly is not None and other.poly is not None else None)
            return GridField(self.grid, self.values * other.values, poly)
        poly = self.poly * other if (self.poly is not None and np.isrealobj(other)) else None
        return GridField(self.grid, self.values * other, poly)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        poly = ", polynomial" if self.poly is not None else ""
        return f"GridField({kind}{poly}, {self.grid!r})"


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WignerFunction:
    """Real Wigner function together with the hbar it was built for."""

    field: GridField
    hbar: float

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.field.is_complex:
            if np.max(np.abs(self.field.values.imag)) > 1e-12 * max(1.0, self.field.sup_norm()):
                raise ValueError("Wigner function values must be real")
            object.__setattr__(self, "field", self.field.real)

    @property
    def grid(self) -> PhaseSpaceGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def normalization(self) -> float:
        return float(self.field.integral())


@dataclass(frozen=True)
class HamiltonianSpec:
    """Standard-form Hamiltonian ``p**2 / 2m + V(r)``.

    Exactly one of ``coefficients`` (``c_0 .. c_K`` in powers of r, ``K <= 8``)
    or ``table`` (a field on a one-axis ``r`` grid) must be given.
    """

    mass: float = 1.0
    coefficients: tuple[float, ...] | None = None
    table: GridField | None = None

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if (self.coefficients is None) == (self.table is None):
            raise ValueError("give either polynomial coefficients or a tabulated potential")
        if self.coefficients is not None:
            coeffs = tuple(float(c) for c in self.coefficients)
            if len(coeffs) > 9:
                raise ValueError("polynomial potentials are limited to degree 8")
            object.__setattr__(self, "coefficients", coeffs)
        else:
            if self.table.grid.names != ("r",):
                raise GridError("tabulated potential must live on a grid with only an r axis")

    @classmethod
    def harmonic(cls, mass: float = 1.0, omega: float = 1.0) -> "HamiltonianSpec":
        return cls(mass, (0.0, 0.0, 0.5 * mass * omega**2))

    @classmethod
    def quartic(cls, mass: float = 1.0, a4: float = 0.25, a2: float = 0.0) -> "HamiltonianSpec":
        return cls(mass, (0.0, 0.0, a2, 0.0, a4))

    @classmethod
    def free(cls, mass: float = 1.0) -> "HamiltonianSpec":
        return cls(mass, (0.0,))

    @property
    def is_polynomial(self) -> bool:
        return self.coefficients is not None

    @property
    def degree(self) -> int | None:
        if self.coefficients is None:
            return None
        nz = [k for k, c in enumerate(self.coefficients) if c != 0.0]
        return nz[-1] if nz else 0

    def _spline(self) -> CubicSpline:
        ax = self.table.grid.axes[0]
        return CubicSpline(ax.points, self.table.values.real)

    def potential(self, r, derivative: int = 0):
        """V or its ``derivative``-th r-derivative, at arbitrary (possibly complex) r."""
        if self.coefficients is not None:
            c = np.asarray(self.coefficients)
            if derivative:
                c = npoly.polyder(c, derivative) if derivative < len(c) else np.zeros(1)
            return npoly.polyval(r, c)
        if derivative > 3:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self._spline()(r, derivative)

    def force_coefficients(self) -> np.ndarray:
        """Coefficients of V'(r) (low order first)."""
        c = np.asarray(self.coefficients)
        return npoly.polyder(c) if len(c) > 1 else np.zeros(1)

    def _check_table(self, grid: PhaseSpaceGrid) -> None:
        if self.table is not None and self.table.grid.axes[0] != grid.axis("r"):
            raise GridError("tabulated potential grid does not match the r axis")

    def potential_field(self, grid: PhaseSpaceGrid) -> GridField:
        k = grid.index("r")
        if self.coefficients is not None:
            shape = [1] * grid.ndim
            shape[k] = len(self.coefficients)
            return GridField.from_coefficients(grid, np.reshape(self.coefficients, shape))
        self._check_table(grid)
        column = self.table.values.real.reshape(grid.mesh("r").shape)
        return GridField(grid, np.broadcast_to(column, grid.shape))

    def field(self, grid: PhaseSpaceGrid) -> GridField:
        """H(r, p) sampled on ``grid`` (which must carry r and p axes)."""
        p = GridField.coordinate(grid, "p")
        return self.potential_field(grid) + p * p * (0.5 / self.mass)


# ---------------------------------------------------------------------------


def wigner_transform_pure_state(psi: np.ndarray, grid: PhaseSpaceGrid, hbar: float) -> WignerFunction:
    """Wigner function of the pure state ``psi`` sampled on the grid's r axis.

    Evaluates ``(1/2 pi hbar) int dy psi*(r+y/2) psi(r-y/2) exp(i p y / hbar)``
    as a discrete Fourier sum over ``y = 2 k dr``.  psi is taken to vanish
    outside the axis; wrapping it periodically would put ghost copies of the
    state at the grid edges.

    Sampling y in steps of ``2 dr`` makes the result periodic in p with
    period ``pi hbar / dr``; a p axis longer than that would hold aliased
    copies and is rejected.
    """
    grid.require(("r", "p"))
    psi = np.asarray(psi, dtype=complex)
    rax, pax = grid.axes
    if psi.shape != (rax.count,):
        raise GridError(f"psi has shape {psi.shape}, r axis has {rax.count} points")
    if pax.length > np.pi * hbar / rax.spacing * (1 + 1e-12):
        raise GridError(
            f"p axis length {pax.length:g} exceeds the resolvable range pi*hbar/dr = "
            f"{np.pi * hbar / rax.spacing:g}; refine r or shorten p"
        )
    norm = float(np.sum(np.abs(psi) ** 2) * rax.spacing)
    if abs(norm - 1.0) > 1e-9:
        raise NormalizationError(f"sum |psi|^2 dr = {norm!r}, expected 1")
    n = rax.count
    kmax = n // 2 - 1
    ks = np.arange(-kmax, kmax + 1)
    i = np.arange(n)[:, None]
    padded = np.concatenate([psi, np.zeros(1, dtype=complex)])
    plus, minus = i + ks, i - ks
    outside = (plus < 0) | (plus >= n) | (minus < 0) | (minus >= n)
    plus = np.where(outside, n, plus)
    minus = np.where(outside, n, minus)
    corr = np.conj(padded[plus]) * padded[minus]
    y = 2.0 * rax.spacing * ks
    phase = np.exp(1j * np.outer(y, pax.points) / hbar)
    values = (corr @ phase).real * (rax.spacing / (np.pi * hbar))
    return WignerFunction(GridField(grid, values), hbar)


def _values_of(f) -> GridField:
    return f.field if isinstance(f, WignerFunction) else f


def compute_average(obs: GridField, f: WignerFunction | GridField) -> float:
    """Phase-space average: Riemann sum of ``obs * f`` times the cell volume."""
    ff = _values_of(f)
    if obs.grid != ff.grid:
        raise GridError("observable and Wigner function live on different grids")
    return float(np.real(np.sum(obs.values * ff.values)) * ff.grid.cell_volume)


def marginal(f: WignerFunction | GridField, axis: str) -> np.ndarray:
    """Density along ``axis`` with every other axis integrated out."""
    ff = _values_of(f)
    k = ff.grid.index(axis)
    others = tuple(i for i in range(ff.grid.ndim) if i != k)
    weight = math.prod(ff.grid.axes[i].spacing for i in others)
    return np.real(ff.values.sum(axis=others)) * weight


def renormalize(f: WignerFunction) -> WignerFunction:
    total = f.normalization()
    scale = np.sum(np.abs(f.values)) * f.grid.cell_volume
    if scale == 0.0 or abs(total) <= 1e-14 * scale:
        raise DegenerateFieldError("field integrates to zero")
    return WignerFunction(f.field / total, f.hbar)


# ---------------------------------------------------------------------------
# CSV persistence


def write_field_csv(path: str | Path, field: GridField | WignerFunction,
                    comments: Sequence[str] = ()) -> Path:
    """One row per grid point: coordinates, then the value (or re, im)."""
    ff = _values_of(field)
    path = Path(path)
    coords = np.meshgrid(*[a.points for a in ff.grid.axes], indexing="ij")
    cols = [c.ravel() for c in coords]
    if ff.is_complex:
        cols += [ff.values.real.ravel(), ff.values.imag.ravel()]
        vnames = ["re", "im"]
    else:
        cols.append(ff.values.ravel())
        vnames = ["value"]
    header = [f"# axes: {ff.grid.spec_string()}"]
    header += [f"# {c}" for c in comments]
    header.append("# columns: " + ",".join(list(ff.grid.names) + vnames))
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        np.savetxt(fh, np.column_stack(cols), delimiter=",", fmt="%.17g")
    return path


def read_field_csv(path: str | Path) -> tuple[GridField, dict[str, str]]:
    """Inverse of :func:`write_field_csv`; returns the field and ``key=value`` comments."""
    grid = None
    meta: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("axes:"):
                grid = PhaseSpaceGrid.from_spec_string(body[len("axes:"):].strip())
            elif "=" in body:
                key, _, val = body.partition("=")
                meta[key.strip()] = val.strip()
    if grid is None:
        raise GridError(f"{path}: missing '# axes:' header")
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    nval = data.shape[1] - grid.ndim
    values = data[:, grid.ndim] if nval == 1 else data[:, grid.ndim] + 1j * data[:, grid.ndim + 1]
    return GridField(grid, values), meta


def gaussian_wigner(grid: PhaseSpaceGrid, hbar: float, r0: float = 0.0, p0: float = 0.0,
                    width: float = 1.0) -> WignerFunction:
    """Coherent-state Wigner function centred at ``(r0, p0)``.

    ``width`` is the position standard deviation of the underlying wave packet
    in units of ``sqrt(hbar / 2)``; ``width=1`` is the m=omega=1 oscillator
    ground state.
    """
    grid.require(("r", "p"))
    s = width
    vals = np.exp(-((grid.mesh("r") - r0) ** 2) / (hbar * s**2)
                  - ((grid.mesh("p") - p0) ** 2) * s**2 / hbar) / (np.pi * hbar)
    return WignerFunction(GridField(grid, np.broadcast_to(vals, grid.shape)), hbar)


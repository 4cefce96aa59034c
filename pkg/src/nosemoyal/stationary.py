"""Stationarity residuals and the even-order hbar expansion of thermal Wigner functions.

A density on the extended grid is stationary when

    (iL^N - kappa) f = sum_{n=3,5,..} (1/n!) (i hbar / 2)^(n-1) V^(n)(r) d_p^n f.

For a candidate on the ``(r, p)`` plane, the thermostat variables are taken
classical and distributed as ``exp(-p_eta**2 / 2 m_eta kT)``; averaging the
extended equation over them removes every thermostat term and leaves the
canonical Wigner stationarity condition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .brackets import derivative
from .errors import GridError
from .grid import (
    AXIS_ORDER,
    GridField,
    HamiltonianSpec,
    PhaseSpaceGrid,
    WignerFunction,
    read_field_csv,
    write_field_csv,
)
from .nose import NoseSystem

INTERIOR_MARGIN = 3


@dataclass
class ResidualResult:
    """Residual field with sup and L2 norms, over the whole grid and an interior window."""

    field: GridField
    sup: float
    l2: float
    interior_sup: float
    interior_l2: float


def _norms(values: np.ndarray, grid: PhaseSpaceGrid, margin: int) -> tuple[float, float]:
    # axes too short to carry a margin (e.g. a 4-point eta axis) are kept whole
    window = tuple(slice(margin, n - margin) if n > 2 * margin else slice(None) for n in grid.shape)
    v = np.abs(values[window])
    return float(v.max()), float(np.sqrt(np.sum(v**2) * grid.cell_volume))


def _quantum_terms(sys: NoseSystem, f: GridField, n_max: int, hbar: float) -> np.ndarray:
    grid = f.grid
    r = grid.mesh("r")
    p_orders = [0] * grid.ndim
    out = np.zeros(grid.shape)
    if hbar == 0.0:
        return out
    for n in range(3, n_max + 1, 2):
        vn = sys.ham.potential(r, n)
        if not np.any(vn):
            continue
        p_orders[grid.index("p")] = n
        coef = ((0.5j * hbar) ** (n - 1)).real / math.factorial(n)
        out = out + coef * vn * derivative(f, p_orders).values
    return out


def qc_stationarity_residual(sys: NoseSystem, candidate: GridField, n_max: int = 3,
                             hbar: float = 1.0, margin: int = INTERIOR_MARGIN) -> ResidualResult:
    """``(iL^N - kappa) f - sum_n (1/n!) (i hbar/2)^(n-1) V^(n) d_p^n f``.

    ``candidate`` lives either on the extended ``(r, eta, p, p_eta)`` grid or
    on the ``(r, p)`` plane; in the latter case it stands for the product of
    ``f(r, p)`` with the classical thermostat marginal, and the residual is
    the thermostat average.  ``hbar = 0`` gives the classical residual.
    """
    if n_max not in (1, 3, 5, 7):
        raise ValueError("n_max must be one of 1, 3, 5, 7")
    if hbar < 0:
        raise ValueError("hbar must be non-negative")
    grid = candidate.grid
    f = candidate.real
    m = sys.mass
    d = lambda name: derivative(f, [int(n == name) for n in grid.names]).values  # noqa: E731
    if grid.names == AXIS_ORDER:
        r, eta, p, p_eta = (grid.mesh(n) for n in AXIS_ORDER)
        q = sys.nose.m_eta
        liouville = ((p / m) * d("r") + (p_eta / q) * d("eta")
                     + (-sys.ham.potential(r, 1) - p * p_eta / q) * d("p")
                     + (p * p / m - sys.g_kT) * d("p_eta"))
        kappa = sys.n_dof * p_eta / q
        res = liouville - kappa * f.values
    elif grid.names == ("r", "p"):
        r, p = grid.mesh("r"), grid.mesh("p")
        res = (p / m) * d("r") - sys.ham.potential(r, 1) * d("p")
    else:
        raise GridError(f"candidate grid {grid.names} is neither (r, p) nor {AXIS_ORDER}")
    res = np.broadcast_to(res - _quantum_terms(sys, f, n_max, hbar), grid.shape)
    sup = float(np.max(np.abs(res)))
    l2 = float(np.sqrt(np.sum(res**2) * grid.cell_volume))
    isup, il2 = _norms(res, grid, margin)
    return ResidualResult(GridField(grid, res), sup, l2, isup, il2)


# ---------------------------------------------------------------------------
# hbar expansion


@dataclass
class ExpansionResult:
    """Even-order terms ``f^(n)`` of the thermal Wigner function on an ``(r, p)`` grid."""

    beta: float
    hbar: float
    orders: list[tuple[int, GridField]] = field(default_factory=list)

    def __post_init__(self):
        if any(n % 2 for n, _ in self.orders):
            raise ValueError("only even orders appear in the expansion")

    def term(self, n: int) -> GridField:
        for k, f in self.orders:
            if k == n:
                return f
        raise KeyError(n)

    def total(self) -> WignerFunction:
        vals = sum(f.values for _, f in self.orders)
        return WignerFunction(GridField(self.orders[0][1].grid, vals), self.hbar)

    def manifest_line(self) -> str:
        ords = ",".join(str(n) for n, _ in self.orders)
        return f"orders: {ords} beta={self.beta!r} hbar={self.hbar!r}"


def boltzmann_wigner(ham: HamiltonianSpec, beta: float, grid: PhaseSpaceGrid) -> GridField:
    """``exp(-beta H)`` normalized by the grid sum."""
    h = ham.field(grid).values
    w = np.exp(-beta * (h - h.min()))
    return GridField(grid, w / (w.sum() * grid.cell_volume))


def wigner_kirkwood_correction(ham: HamiltonianSpec, beta: float, grid: PhaseSpaceGrid) -> np.ndarray:
    """``f~^(2)``: the hbar^2 coefficient relative to the Boltzmann weight.

        -beta^2 V'' / 8m + beta^3 V'^2 / 24m + beta^3 p^2 V'' / 24m^2
    """
    grid.require(("r", "p"))
    m = ham.mass
    r, p = grid.mesh("r"), grid.mesh("p")
    v1, v2 = ham.potential(r, 1), ham.potential(r, 2)
    out = -beta**2 * v2 / (8 * m) + beta**3 * v1**2 / (24 * m) + beta**3 * p**2 * v2 / (24 * m**2)
    return np.broadcast_to(out, grid.shape)


def wigner_kirkwood_order2(ham: HamiltonianSpec, beta: float, hbar: float,
                           grid: PhaseSpaceGrid) -> ExpansionResult:
    """Boltzmann weight and its hbar^2 correction.

    ``f^(2) = hbar^2 f^(0) (f~^(2) - <f~^(2)>_0)`` integrates to zero, so
    ``f^(0) + f^(2)`` stays normalized.  Valid for ``beta hbar omega`` small.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    f0 = boltzmann_wigner(ham, beta, grid)
    ft = wigner_kirkwood_correction(ham, beta, grid)
    mean = float(np.sum(ft * f0.values) * grid.cell_volume)
    f2 = GridField(grid, hbar**2 * f0.values * (ft - mean))
    return ExpansionResult(beta, hbar, [(0, f0), (2, f2)])


def ho_canonical_wigner_exact(beta: float, mass: float, omega: float, hbar: float,
                              grid: PhaseSpaceGrid) -> WignerFunction:
    """Thermal Wigner function of the harmonic oscillator.

    ``W = tanh(u) / (pi hbar) exp(-2 tanh(u) H / (hbar omega))`` with
    ``u = beta hbar omega / 2``; normalized analytically.
    """
    grid.require(("r", "p"))
    u = 0.5 * beta * hbar * omega
    t = math.tanh(u)
    h = grid.mesh("p") ** 2 / (2 * mass) + 0.5 * mass * omega**2 * grid.mesh("r") ** 2
    w = t / (math.pi * hbar) * np.exp(-2.0 * t * h / (hbar * omega))
    return WignerFunction(GridField(grid, np.broadcast_to(w, grid.shape)), hbar)


def write_expansion(directory: str | Path, result: ExpansionResult, stem: str = "wk") -> list[Path]:
    """One field CSV per order; each carries the manifest line, plus a manifest file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    line = result.manifest_line()
    paths = [write_field_csv(directory / f"{stem}_order{n}.csv", f, [line, f"order={n}"])
             for n, f in result.orders]
    manifest = directory / f"{stem}_manifest.txt"
    manifest.write_text("# " + line + "\n" + "".join(f"{p.name}\n" for p in paths))
    return paths + [manifest]


def read_expansion(directory: str | Path, stem: str = "wk") -> ExpansionResult:
    directory = Path(directory)
    header = (directory / f"{stem}_manifest.txt").read_text().splitlines()
    fields = dict(tok.split("=") for tok in header[0].split()[3:])
    orders = []
    for name in header[1:]:
        f, meta = read_field_csv(directory / name)
        orders.append((int(meta["order"]), f))
    return ExpansionResult(float(fields["beta"]), float(fields["hbar"]), orders)

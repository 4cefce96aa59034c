"""Time evolution of observables and Wigner functions.

Observables obey ``d chi / dt = (i / hbar) M chi`` with the generator
``M chi = {H, chi}_M``.  Densities obey ``d f / dt = -(i / hbar) M^dag f``
where the adjoint is obtained by moving every right derivative of the
bracket off ``f`` by parts:

    M^dag f = sum_n c_n sum_{I,J} d^J [ B_{i1 j1} ... B_{in jn} (d^I H) f ],

``c_n = 2 (i hbar / 2)^n / n!``.  On the periodic grid with spectral
derivatives this gives ``sum (M a) b = -sum a (M^dag b)`` exactly and
conserves ``int f``.  For divergence-free tensors and separable ``H`` it
coincides with ``M``; for the Nose tensor it carries the compressibility.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .brackets import (
    BracketOrder,
    StructureTensor,
    _check_pair,
    _DerivativeCache,
    _spectral_values,
    _vanishes,
    bidifferential_term,
    contractions,
    derivative,
    moyal_bracket,
    moyal_bracket_spectral,
    tensor_weight,
)
from .errors import GridError, HbarMismatch, IntegratorBlowup, UnsupportedMode
from .grid import AXIS_ORDER, GridField, HamiltonianSpec, PhaseSpaceGrid, WignerFunction
from .nose import NoseSystem, nose_hamiltonian_field

BLOWUP_FACTOR = 1e6


def rate_coefficient(n: int, hbar: float) -> float:
    """``(i / hbar) * 2 (i hbar / 2)^n / n!`` for odd n (a real number)."""
    return (-1) ** ((n + 1) // 2) * hbar ** (n - 1) / (2 ** (n - 1) * math.factorial(n))


# ---------------------------------------------------------------------------
# generators


def apply_generator(h_field: GridField, target: GridField, tensor: StructureTensor,
                    order: BracketOrder = BracketOrder(), hbar: float = 1.0) -> GridField:
    """``M target = {H, target}_M``; ``(i / hbar)`` times it is ``d target / dt``."""
    return moyal_bracket(h_field, target, tensor, order, hbar)


def generator_rate(h_field: GridField, target: GridField, tensor: StructureTensor,
                   order: BracketOrder = BracketOrder(), hbar: float = 1.0) -> GridField:
    """Observable time derivative ``(i / hbar) M target`` as a real field."""
    if order.mode == "spectral":
        br = moyal_bracket(h_field, target, tensor, order, hbar)
        return GridField(br.grid, (1j / hbar * br.values).real)
    _check_pair(h_field, target, tensor)
    total = np.zeros(target.grid.shape)
    for n in order.odd_orders():
        term = bidifferential_term(h_field, target, tensor, n).values
        total = total + rate_coefficient(n, hbar) * np.real(term)
    return GridField(target.grid, total)


def _adjoint_sum(h_field: GridField, target: GridField, tensor: StructureTensor,
                 order: BracketOrder, weights: Callable[[int], complex]) -> np.ndarray:
    _check_pair(h_field, target, tensor)
    grid = target.grid
    dh = _DerivativeCache(h_field)
    total = np.zeros(grid.shape, dtype=complex)
    for n in order.odd_orders():
        w_n = weights(n)
        for coef, counts, left, right in contractions(tensor, n):
            hd = dh(left)
            if _vanishes(hd):
                continue
            inner = coef * tensor_weight(tensor, grid, counts) * hd.values * target.values
            total = total + w_n * _spectral_values(np.asarray(inner), grid, right)
    return total


def apply_adjoint_generator(h_field: GridField, target: GridField, tensor: StructureTensor,
                            order: BracketOrder = BracketOrder(), hbar: float = 1.0) -> GridField:
    """``M^dag target`` in divergence form; ``-(i / hbar)`` times it is ``d f / dt``.

    At first order with the Nose tensor this is ``i hbar (kappa - iL) target``.
    """
    if order.mode == "spectral":
        if tensor.kind != "canonical":
            raise UnsupportedMode("spectral mode is only defined for the canonical tensor")
        return moyal_bracket_spectral(h_field, target, hbar)
    total = _adjoint_sum(h_field, target, tensor, order,
                         lambda n: 2.0 * (0.5j * hbar) ** n / math.factorial(n))
    return GridField(target.grid, total)


def adjoint_rate(h_field: GridField, target: GridField, tensor: StructureTensor,
                 order: BracketOrder = BracketOrder(), hbar: float = 1.0) -> GridField:
    """Density time derivative ``-(i / hbar) M^dag f`` as a real field."""
    if order.mode == "spectral":
        adj = apply_adjoint_generator(h_field, target, tensor, order, hbar)
        return GridField(adj.grid, (-1j / hbar * adj.values).real)
    total = _adjoint_sum(h_field, target, tensor, order, lambda n: -rate_coefficient(n, hbar))
    return GridField(target.grid, total.real)


def qnh_rhs(sys: NoseSystem, target: GridField, order: BracketOrder = BracketOrder(),
            hbar: float = 1.0) -> GridField:
    """Observable rate under the extended Hamiltonian, coded term by term.

    Only ``V`` has derivatives beyond second order, and the Nose tensor pairs
    ``r`` with ``p`` alone, so every correction beyond the Liouville term is
    ``-(1/n!) (i hbar / 2)^(n-1) V^(n)(r) d_p^n chi``:

        d chi/dt = iL^N chi + sum_{n=3,5,..} (-1)^((n+1)/2) hbar^(n-1) / (2^(n-1) n!) V^(n) d_p^n chi
    """
    grid = target.grid
    if grid.names != AXIS_ORDER:
        raise GridError(f"qnh_rhs needs axes {AXIS_ORDER}, got {grid.names}")
    m, q, g_kT = sys.mass, sys.nose.m_eta, sys.g_kT
    r, eta, p, p_eta = (grid.mesh(n) for n in AXIS_ORDER)
    d = lambda *o: derivative(target, o).values  # noqa: E731
    out = ((p / m) * d(1, 0, 0, 0)
           + (p_eta / q) * d(0, 1, 0, 0)
           + (-sys.ham.potential(r, 1) - p * p_eta / q) * d(0, 0, 1, 0)
           + (p * p / m - g_kT) * d(0, 0, 0, 1))
    for n in range(3, order.n_max + 1, 2):
        vn = sys.ham.potential(r, n)
        if not np.any(vn):
            continue
        coef = -((0.5j * hbar) ** (n - 1)).real / math.factorial(n)
        out = out + coef * vn * d(0, 0, n, 0)
    return GridField(grid, np.broadcast_to(out, grid.shape))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class GeneratorSpec:
    """Hamiltonian field and structure tensor.

    ``ham`` is the standard-form Hamiltonian (needed by split-step and the
    step-size heuristic); ``system`` is set for extended Nose generators.
    """

    h_field: GridField
    tensor: StructureTensor
    ham: HamiltonianSpec | None = None
    system: NoseSystem | None = None

    @classmethod
    def canonical(cls, ham: HamiltonianSpec, grid: PhaseSpaceGrid) -> "GeneratorSpec":
        return cls(ham.field(grid), StructureTensor.canonical(), ham)

    @classmethod
    def nose(cls, sys: NoseSystem, grid: PhaseSpaceGrid) -> "GeneratorSpec":
        return cls(nose_hamiltonian_field(sys, grid), StructureTensor.nose(), sys.ham, sys)


@dataclass(frozen=True)
class EvolutionConfig:
    """Stepping parameters.

    ``direction="observable"`` integrates ``+(i/hbar) M``; ``"wigner"``
    integrates ``-(i/hbar) M^dag``.
    """

    dt: float
    n_steps: int
    order: BracketOrder = BracketOrder()
    direction: str = "wigner"
    stepper: str = "rk4"
    hbar: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if self.direction not in ("observable", "wigner"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.stepper not in ("rk4", "split-step"):
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")


@dataclass
class EvolutionResult:
    field: GridField | WignerFunction
    times: np.ndarray
    series: dict[str, np.ndarray] = field(default_factory=dict)


def default_observables(grid: PhaseSpaceGrid) -> dict[str, GridField]:
    obs = {"norm": GridField.constant(grid)}
    if "r" in grid.names and "p" in grid.names:
        r, p = GridField.coordinate(grid, "r"), GridField.coordinate(grid, "p")
        obs.update({"r": r, "p": p, "p2": p * p})
    return obs


def _cfl_check(spec: GeneratorSpec, grid: PhaseSpaceGrid, cfg: EvolutionConfig) -> None:
    """Warn when ``dt`` exceeds the rk4 stability estimate.

    The spectral radius of the generator is bounded by the sum over axes of
    the largest advection speed times the Nyquist wavenumber ``pi / spacing``,
    plus ``|r_n| max|V^(n)| (pi / dp)^n`` for every kept quantum order; rk4
    is stable on the imaginary axis up to ``2 sqrt(2)``.
    """
    if spec.ham is None or "r" not in grid.names:
        return
    rax, pax = grid.axis("r"), grid.axis("p")
    k_r, k_p = math.pi / rax.spacing, math.pi / pax.spacing
    p_max = max(abs(pax.min), abs(pax.max))
    f_max = float(np.max(np.abs(spec.ham.potential(rax.points, 1))))
    rho = k_r * p_max / spec.ham.mass
    if spec.system is not None and "p_eta" in grid.names:
        eax, nax = grid.axis("p_eta"), grid.axis("eta")
        q = spec.system.nose.m_eta
        pe_max = max(abs(eax.min), abs(eax.max))
        g_kT = spec.system.g_kT
        f_max += p_max * pe_max / q
        rho += math.pi / nax.spacing * pe_max / q
        rho += math.pi / eax.spacing * max(p_max**2 / spec.ham.mass - g_kT, g_kT)
    rho += k_p * f_max
    for n in range(3, cfg.order.n_max + 1, 2):
        vn = float(np.max(np.abs(spec.ham.potential(rax.points, n))))
        rho += abs(rate_coefficient(n, cfg.hbar)) * vn * k_p**n
    limit = 2 * math.sqrt(2) / rho
    if cfg.dt > limit:
        warnings.warn(f"dt={cfg.dt:g} exceeds the rk4 stability estimate {limit:.3g}",
                      RuntimeWarning, stacklevel=3)


def _rk4(rate: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = rate(y)
    k2 = rate(y + 0.5 * dt * k1)
    k3 = rate(y + 0.5 * dt * k2)
    k4 = rate(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def split_step_wigner(f: WignerFunction, ham: HamiltonianSpec, dt: float,
                      hbar: float | None = None) -> WignerFunction:
    """One Strang step of the hbar-exact Wigner equation for ``p**2/2m + V(r)``.

    Half kinetic shear (multiplier ``exp(-i k p dt / 2m)`` along r), full
    potential kick along p with multiplier
    ``exp(-(i dt / hbar) [V(r - hbar theta/2) - V(r + hbar theta/2)])``,
    then the second half shear.  Both multipliers have unit modulus, so
    ``int f`` and the l2 norm are preserved.  Nyquist modes are left
    untouched, consistently with the spectral derivative.
    """
    hbar = f.hbar if hbar is None else hbar
    if abs(hbar - f.hbar) > 1e-15 * max(1.0, hbar):
        raise HbarMismatch(f"Wigner function built for hbar={f.hbar}, step requested hbar={hbar}")
    grid = f.grid
    if grid.names != ("r", "p"):
        raise UnsupportedMode("split-step propagation needs an (r, p) grid and standard-form H")
    kin, kick = _split_multipliers(grid, ham, dt, hbar)
    vals = _split_apply(f.values, grid, kin, kick)
    return WignerFunction(GridField(grid, vals), f.hbar)


def _split_multipliers(grid: PhaseSpaceGrid, ham: HamiltonianSpec, dt: float, hbar: float):
    rax, pax = grid.axes
    k = 2 * np.pi * np.fft.rfftfreq(rax.count, d=rax.spacing)
    kin = np.exp(-0.5j * dt * np.outer(k, pax.points) / ham.mass)  # (nk, np)
    kin[-1, :] = 1.0
    theta = 2 * np.pi * np.fft.rfftfreq(pax.count, d=pax.spacing)
    rr = rax.points[:, None]
    dv = ham.potential(rr - 0.5 * hbar * theta) - ham.potential(rr + 0.5 * hbar * theta)
    kick = np.exp(-1j * dt / hbar * dv)  # (nr, ntheta)
    kick[:, -1] = 1.0
    return kin, kick


def _split_apply(vals: np.ndarray, grid: PhaseSpaceGrid, kin, kick) -> np.ndarray:
    nr, npts = grid.shape
    vals = np.fft.irfft(np.fft.rfft(vals, axis=0) * kin, n=nr, axis=0)
    vals = np.fft.irfft(np.fft.rfft(vals, axis=1) * kick, n=npts, axis=1)
    return np.fft.irfft(np.fft.rfft(vals, axis=0) * kin, n=nr, axis=0)


def evolve(initial: GridField | WignerFunction, spec: GeneratorSpec, cfg: EvolutionConfig,
           observables: Mapping[str, GridField] | None = None) -> EvolutionResult:
    """Propagate a field and record phase-space integrals after every step.

    ``series[name][k] = int obs * field(t_k)``.  In the observable direction
    the entries of ``observables`` play the role of fixed densities, so the
    series are the averages ``int chi(t) f``.

    rk4 is used for every tensor; ``split-step`` requires the canonical tensor
    with a standard-form Hamiltonian.  A field exceeding 1e6 times its initial
    maximum raises :class:`IntegratorBlowup`.
    """
    is_wigner = isinstance(initial, WignerFunction)
    if is_wigner and abs(initial.hbar - cfg.hbar) > 1e-15 * max(1.0, cfg.hbar):
        raise HbarMismatch(f"Wigner function built for hbar={initial.hbar}, config has hbar={cfg.hbar}")
    f0 = initial.field if is_wigner else initial
    grid = f0.grid
    if f0.is_complex:
        raise ValueError("evolve propagates real fields")
    spec.tensor.check_grid(grid)
    if spec.h_field.grid != grid:
        raise GridError("Hamiltonian and field live on different grids")
    obs = dict(default_observables(grid) if observables is None else observables)

    if cfg.stepper == "split-step":
        if spec.tensor.kind != "canonical" or spec.ham is None:
            raise UnsupportedMode("split-step needs the canonical tensor and a standard-form Hamiltonian")
        sdt = cfg.dt if cfg.direction == "wigner" else -cfg.dt
        kin, kick = _split_multipliers(grid, spec.ham, sdt, cfg.hbar)
        step = lambda y: _split_apply(y, grid, kin, kick)  # noqa: E731
    else:
        _cfl_check(spec, grid, cfg)
        rate_fn = generator_rate if cfg.direction == "observable" else adjoint_rate

        def rate(y):
            return rate_fn(spec.h_field, GridField(grid, y), spec.tensor, cfg.order, cfg.hbar).values

        step = lambda y: _rk4(rate, y, cfg.dt)  # noqa: E731

    y = np.array(f0.values)
    limit = BLOWUP_FACTOR * max(float(np.max(np.abs(y))), 1e-300)
    weights = {k: np.asarray(v.values) for k, v in obs.items()}
    dv = grid.cell_volume
    times = cfg.dt * np.arange(cfg.n_steps + 1)
    series = {k: np.empty(cfg.n_steps + 1) for k in weights}
    for k, w in weights.items():
        series[k][0] = float(np.sum(w * y).real) * dv
    for i in range(1, cfg.n_steps + 1):
        y = step(y)
        peak = float(np.max(np.abs(y)))
        if not np.isfinite(peak) or peak > limit:
            raise IntegratorBlowup(f"field maximum {peak:.3e} exceeds {limit:.3e} at step {i}")
        for k, w in weights.items():
            series[k][i] = float(np.sum(w * y).real) * dv
    out = GridField(grid, y)
    return EvolutionResult(WignerFunction(out, initial.hbar) if is_wigner else out, times, series)


def write_time_series_csv(path: str | Path, result: EvolutionResult) -> Path:
    path = Path(path)
    names = list(result.series)
    data = np.column_stack([result.times] + [result.series[k] for k in names])
    np.savetxt(path, data, delimiter=",", header=",".join(["t"] + names), comments="", fmt="%.17g")
    return path

"""Extended Nose phase space and classical-limit thermostat integrators.

Coordinates are ``x = (r, eta, p, p_eta)``.  The extended Hamiltonian is

    H^N = H(r, p) + p_eta**2 / (2 m_eta) + g kT eta

and the flow ``x_dot_i = B^N_ij(x) d_j H^N`` is the Nose-Hoover dynamics.
Its compressibility ``kappa = -div(x_dot) = N p_eta / m_eta`` makes the
invariant density ``h(H^N) exp(+N eta)``.

Thermostat chains (``M > 1`` thermostats, each thermostatting the previous
one) are supported for trajectories; their state lives in ``eta`` and
``p_eta`` arrays of length ``M``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels
from .errors import GridError, IntegratorBlowup
from .grid import AXIS_ORDER, GridField, HamiltonianSpec, PhaseSpaceGrid

N_BLOCKS = 20


@dataclass(frozen=True)
class NoseParams:
    """Thermostat parameters.

    Parameters
    ----------
    m_eta : float
        Fictitious thermostat mass.
    kT : float
        Temperature in energy units (k_B = 1).
    g : float, optional
        Number of thermostatted degrees of freedom; defaults to ``N``.
    """

    m_eta: float
    kT: float
    g: float | None = None

    def __post_init__(self):
        if self.m_eta <= 0 or self.kT <= 0:
            raise ValueError("m_eta and kT must be positive")
        if self.g is not None and self.g <= 0:
            raise ValueError("g must be positive")

    @classmethod
    def from_timescale(cls, kT: float, mass: float = 1.0, n_dof: int = 1,
                       tau: float = 1.0, g: float | None = None) -> "NoseParams":
        """Weak-coupling default ``m_eta = N m tau**2``."""
        return cls(n_dof * mass * tau**2, kT, g)

    def mu(self, mass: float) -> float:
        """Adiabaticity diagnostic ``sqrt(m / m_eta)``; not used by the dynamics."""
        return math.sqrt(mass / self.m_eta)


@dataclass(frozen=True)
class NoseSystem:
    ham: HamiltonianSpec
    nose: NoseParams
    n_dof: int = 1

    def __post_init__(self):
        if self.n_dof < 1:
            raise ValueError("n_dof must be a positive integer")

    @property
    def g(self) -> float:
        return float(self.n_dof if self.nose.g is None else self.nose.g)

    @property
    def g_kT(self) -> float:
        return self.g * self.nose.kT

    @property
    def mass(self) -> float:
        return self.ham.mass

    @property
    def mu(self) -> float:
        return self.nose.mu(self.ham.mass)


@dataclass(frozen=True)
class ChainSpec:
    """Thermostat chain of length ``M = len(masses)``; ``M = 1`` is plain Nose-Hoover."""

    masses: tuple[float, ...]

    def __post_init__(self):
        masses = tuple(float(q) for q in self.masses)
        if not masses or min(masses) <= 0:
            raise ValueError("a chain needs one or more positive thermostat masses")
        object.__setattr__(self, "masses", masses)

    @classmethod
    def uniform(cls, length: int, mass: float) -> "ChainSpec":
        return cls((mass,) * length)

    @classmethod
    def single(cls, sys: NoseSystem) -> "ChainSpec":
        return cls((sys.nose.m_eta,))

    @property
    def length(self) -> int:
        return len(self.masses)


@dataclass
class ExtendedPoint:
    """A point ``(r, eta, p, p_eta)``; ``r, p`` have length N, ``eta, p_eta`` length M."""

    r: np.ndarray
    eta: np.ndarray
    p: np.ndarray
    p_eta: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.r = np.atleast_1d(np.asarray(self.r, dtype=float)).copy()
        self.p = np.atleast_1d(np.asarray(self.p, dtype=float)).copy()
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float)).copy()
        self.p_eta = np.atleast_1d(np.asarray(self.p_eta, dtype=float)).copy()
        if self.r.shape != self.p.shape or self.eta.shape != self.p_eta.shape:
            raise ValueError("r/p and eta/p_eta must have matching lengths")

    @property
    def n_dof(self) -> int:
        return self.r.size

    @property
    def chain_length(self) -> int:
        return self.eta.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.eta, self.p, self.p_eta])

    @classmethod
    def from_vector(cls, v, n_dof: int = 1, chain_length: int = 1, time: float = 0.0):
        v = np.asarray(v, dtype=float)
        n, m = n_dof, chain_length
        return cls(v[:n], v[n:n + m], v[n + m:2 * n + m], v[2 * n + m:], time)

    def reversed(self) -> "ExtendedPoint":
        """Momentum reversal ``(r, eta, -p, -p_eta)``."""
        return ExtendedPoint(self.r, self.eta, -self.p, -self.p_eta, self.time)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_vector())))


# ---------------------------------------------------------------------------
# Hamiltonian, flow and compressibility


def _masses(sys: NoseSystem, x: ExtendedPoint, chain: ChainSpec | None) -> np.ndarray:
    q = np.array(chain.masses if chain is not None else (sys.nose.m_eta,) * x.chain_length)
    if q.size != x.chain_length:
        raise ValueError(f"chain of length {q.size} for a point with {x.chain_length} thermostats")
    return q


def physical_energy(sys: NoseSystem, x: ExtendedPoint) -> float:
    return float(np.sum(x.p**2) / (2 * sys.mass) + np.sum(sys.ham.potential(x.r)))


def nose_hamiltonian(sys: NoseSystem, x: ExtendedPoint, chain: ChainSpec | None = None) -> float:
    """Extended energy ``H + sum p_eta_k**2 / 2Q_k + g kT eta_1 + kT sum_{k>1} eta_k``.

    For a single thermostat this is ``H^N``; for a chain it is the conserved
    chain energy.
    """
    q = _masses(sys, x, chain)
    return float(
        physical_energy(sys, x)
        + np.sum(x.p_eta**2 / (2 * q))
        + sys.g_kT * x.eta[0]
        + sys.nose.kT * np.sum(x.eta[1:])
    )


def nose_gradient(sys: NoseSystem, x: ExtendedPoint, chain: ChainSpec | None = None) -> ExtendedPoint:
    """Gradient of :func:`nose_hamiltonian`, laid out like a point."""
    q = _masses(sys, x, chain)
    d_eta = np.full(x.chain_length, sys.nose.kT)
    d_eta[0] = sys.g_kT
    return ExtendedPoint(sys.ham.potential(x.r, 1), d_eta, x.p / sys.mass, x.p_eta / q)


def nose_vector_field(sys: NoseSystem, x: ExtendedPoint, chain: ChainSpec | None = None) -> ExtendedPoint:
    """Time derivative of every coordinate.

    For one thermostat: ``(p/m, p_eta/m_eta, -V'(r) - p p_eta/m_eta, sum p**2/m - g kT)``.
    """
    q = _masses(sys, x, chain)
    v = x.p_eta / q
    force = np.zeros(x.chain_length)
    force[0] = np.sum(x.p**2) / sys.mass - sys.g_kT
    force[1:] = x.p_eta[:-1] ** 2 / q[:-1] - sys.nose.kT
    force[:-1] -= x.p_eta[:-1] * v[1:]
    return ExtendedPoint(
        x.p / sys.mass,
        v,
        -sys.ham.potential(x.r, 1) - x.p * v[0],
        force,
        1.0,
    )


def compressibility(sys: NoseSystem, x: ExtendedPoint, chain: ChainSpec | None = None) -> float:
    """``kappa = -div(x_dot)``; ``N p_eta / m_eta`` for one thermostat."""
    q = _masses(sys, x, chain)
    return float(x.n_dof * x.p_eta[0] / q[0] + np.sum(x.p_eta[1:] / q[1:]))


def liouville_apply(sys: NoseSystem, x: ExtendedPoint, grad: ExtendedPoint,
                    chain: ChainSpec | None = None) -> float:
    """``iL f = x_dot . grad f`` given the gradient of ``f`` at ``x``."""
    return float(np.dot(nose_vector_field(sys, x, chain).as_vector(), grad.as_vector()))


def stationary_density_extended(sys: NoseSystem, x: ExtendedPoint, form: str = "delta-surrogate",
                                h: Callable[[float], float] | None = None,
                                eta_sign: float = 1.0) -> float:
    """Unnormalized stationary density of the single-thermostat flow.

    ``delta-surrogate`` returns ``h(H^N) exp(eta_sign * N * eta)`` with
    ``h = exp(-H^N / kT)`` by default.  With ``eta_sign = +1`` the density
    satisfies ``(iL - kappa) f = 0`` and is carried by the flow; with
    ``eta_sign = -1`` it satisfies ``(iL + kappa) f = 0`` instead.

    ``hoover-marginal`` returns the eta-reduced form
    ``exp(-(N / g kT) (H + p_eta**2 / 2 m_eta))``, obtained by integrating a
    microcanonical delta in ``H^N`` over eta.
    """
    if x.chain_length != 1:
        raise ValueError("stationary densities are defined for a single thermostat")
    n = x.n_dof
    if form == "delta-surrogate":
        if h is None:
            kT = sys.nose.kT
            h = lambda e: math.exp(-e / kT)  # noqa: E731
        return h(nose_hamiltonian(sys, x)) * math.exp(eta_sign * n * x.eta[0])
    if form == "hoover-marginal":
        e = physical_energy(sys, x) + x.p_eta[0] ** 2 / (2 * sys.nose.m_eta)
        return math.exp(-n * e / sys.g_kT)
    raise ValueError(f"unknown stationary form {form!r}")


def nose_hamiltonian_field(sys: NoseSystem, grid: PhaseSpaceGrid) -> GridField:
    """``H^N`` on an ``(r, eta, p, p_eta)`` grid, with exact polynomial coefficients."""
    if grid.names != AXIS_ORDER:
        raise GridError(f"extended fields need axes {AXIS_ORDER}, got {grid.names}")
    if sys.n_dof != 1:
        raise GridError("gridded extended fields carry one physical degree of freedom")
    eta = GridField.coordinate(grid, "eta")
    p_eta = GridField.coordinate(grid, "p_eta")
    return sys.ham.field(grid) + p_eta * p_eta * (0.5 / sys.nose.m_eta) + eta * sys.g_kT


# ---------------------------------------------------------------------------
# integrators


def _check(x: ExtendedPoint) -> ExtendedPoint:
    if not x.is_finite():
        raise IntegratorBlowup(f"non-finite extended state at t={x.time}")
    return x


def nh_step(sys: NoseSystem, x: ExtendedPoint, dt: float) -> ExtendedPoint:
    """One symmetric Trotter step of single-thermostat Nose-Hoover dynamics.

    Thermostat half step, velocity-Verlet step for ``(r, p)``, thermostat
    half step.  Each thermostat half step is itself symmetric:
    kick ``p_eta``, scale ``p`` and drift ``eta``, kick ``p_eta`` again.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if x.chain_length != 1:
        raise ValueError("nh_step needs a single thermostat; use nhc_step for chains")
    m, q = sys.mass, sys.nose.m_eta
    r, p = x.r.copy(), x.p.copy()
    eta, p_eta = float(x.eta[0]), float(x.p_eta[0])
    half = 0.5 * dt

    def thermostat(p, eta, p_eta):
        p_eta += 0.5 * half * (np.sum(p * p) / m - sys.g_kT)
        p = p * math.exp(-half * p_eta / q)
        eta += half * p_eta / q
        p_eta += 0.5 * half * (np.sum(p * p) / m - sys.g_kT)
        return p, eta, p_eta

    p, eta, p_eta = thermostat(p, eta, p_eta)
    p = p - half * sys.ham.potential(r, 1)
    r = r + dt * p / m
    p = p - half * sys.ham.potential(r, 1)
    p, eta, p_eta = thermostat(p, eta, p_eta)
    return _check(ExtendedPoint(r, eta, p, p_eta, x.time + dt))


def _force_model(ham: HamiltonianSpec):
    """Encode V'(r) for the compiled kernel: polynomial or piecewise cubic."""
    if ham.is_polynomial:
        return 0, np.asarray(ham.force_coefficients(), dtype=float), np.zeros(2), np.zeros((1, 1))
    spline = ham._spline().derivative()
    return 1, np.zeros(1), np.asarray(spline.x, dtype=float), np.ascontiguousarray(spline.c)


def _run(sys: NoseSystem, chain: ChainSpec, x: ExtendedPoint, dt: float, n_steps: int,
         record: bool):
    if dt <= 0:
        raise ValueError("dt must be positive")
    if x.chain_length != chain.length:
        raise ValueError(f"point carries {x.chain_length} thermostats, chain has {chain.length}")
    kind, fc, bx, bc = _force_model(sys.ham)
    state = [x.r.copy(), x.eta.copy(), x.p.copy(), x.p_eta.copy()]
    n_rec = n_steps + 1 if record else 1
    out = (np.empty((n_rec, x.n_dof)), np.empty((n_rec, chain.length)),
           np.empty((n_rec, x.n_dof)), np.empty((n_rec, chain.length)))
    ok = _kernels.nhc_run(*state, np.array(chain.masses), sys.mass, sys.g_kT, sys.nose.kT,
                          dt, n_steps, kind, fc, bx, bc, record, *out)
    if not ok:
        raise IntegratorBlowup("non-finite extended state during a thermostat run")
    return state, out


def nhc_step(sys: NoseSystem, chain: ChainSpec, x: ExtendedPoint, dt: float) -> ExtendedPoint:
    """One symmetric Trotter step of Nose-Hoover-chain dynamics.

    The thermostat half step sweeps the chain from the top down and back up,
    scaling each thermostat momentum by its successor around the kick; the
    physical part is a velocity-Verlet step.  With ``M = 1`` this is exactly
    :func:`nh_step`.
    """
    (r, eta, p, p_eta), _ = _run(sys, chain, x, dt, 1, record=False)
    return _check(ExtendedPoint(r, eta, p, p_eta, x.time + dt))


@dataclass
class Estimate:
    value: float
    stderr: float


@dataclass
class Trajectory:
    """Time-ordered extended states; arrays have one row per recorded step."""

    t: np.ndarray
    r: np.ndarray
    eta: np.ndarray
    p: np.ndarray
    p_eta: np.ndarray
    h_n: np.ndarray
    kappa: np.ndarray

    def __len__(self):
        return self.t.size

    def point(self, i: int) -> ExtendedPoint:
        return ExtendedPoint(self.r[i], self.eta[i], self.p[i], self.p_eta[i], float(self.t[i]))


def block_mean(samples: np.ndarray, n_blocks: int = N_BLOCKS) -> Estimate:
    """Mean with the standard error from ``n_blocks`` contiguous block means."""
    blocks = _blocks(samples, n_blocks)
    means = blocks.mean(axis=1)
    return Estimate(float(means.mean()), float(means.std(ddof=1) / math.sqrt(n_blocks)))


def _blocks(samples: np.ndarray, n_blocks: int) -> np.ndarray:
    n = samples.size // n_blocks
    if n < 1:
        raise ValueError(f"too few samples ({samples.size}) for {n_blocks} blocks")
    return samples[: n * n_blocks].reshape(n_blocks, n)


def block_ratio(num: np.ndarray, den: np.ndarray, n_blocks: int = N_BLOCKS) -> Estimate:
    """``mean(num) / mean(den)**2`` with a delete-one-block jackknife error."""
    sn = _blocks(num, n_blocks).sum(axis=1)
    sd = _blocks(den, n_blocks).sum(axis=1)
    n = _blocks(num, n_blocks).shape[1]
    value = (sn.sum() / (n * n_blocks)) / (sd.sum() / (n * n_blocks)) ** 2
    cnt = n * (n_blocks - 1)
    jack = ((sn.sum() - sn) / cnt) / ((sd.sum() - sd) / cnt) ** 2
    err = math.sqrt((n_blocks - 1) / n_blocks * np.sum((jack - jack.mean()) ** 2))
    return Estimate(float(value), float(err))


def initial_point(sys: NoseSystem, chain: ChainSpec, rng: np.random.Generator) -> ExtendedPoint:
    """Thermal momenta, unit-scale positions, thermostats at rest at eta = 0."""
    kT = sys.nose.kT
    p = rng.normal(0.0, math.sqrt(sys.mass * kT), sys.n_dof)
    r = rng.normal(0.0, math.sqrt(kT), sys.n_dof)
    return ExtendedPoint(r, np.zeros(chain.length), p, np.zeros(chain.length))


def sample_canonical(sys: NoseSystem, chain: ChainSpec, n_steps: int, dt: float, seed: int,
                     burn_in: int = 0, x0: ExtendedPoint | None = None
                     ) -> tuple[Trajectory, dict[str, Estimate]]:
    """Run a thermostat chain and estimate canonical averages.

    Returns the trajectory after burn-in and block-averaged (20 blocks)
    estimates of ``<p^2/m>``, ``<p^4>/<p^2>^2``, ``<V>``, ``<r V'>`` per
    degree of freedom, plus the drift of the conserved energy.
    """
    if n_steps <= burn_in:
        raise ValueError("n_steps must exceed burn_in")
    rng = np.random.default_rng(seed)
    x = x0 if x0 is not None else initial_point(sys, chain, rng)
    _, (r, eta, p, p_eta) = _run(sys, chain, x, dt, n_steps, record=True)
    sl = slice(burn_in, None)
    r, eta, p, p_eta = r[sl], eta[sl], p[sl], p_eta[sl]
    t = x.time + dt * np.arange(burn_in, n_steps + 1)
    q = np.array(chain.masses)
    v = sys.ham.potential(r)
    h_n = (np.sum(p**2, axis=1) / (2 * sys.mass) + np.sum(v, axis=1)
           + np.sum(p_eta**2 / (2 * q), axis=1) + sys.g_kT * eta[:, 0]
           + sys.nose.kT * np.sum(eta[:, 1:], axis=1))
    kappa = sys.n_dof * p_eta[:, 0] / q[0] + np.sum(p_eta[:, 1:] / q[1:], axis=1)
    traj = Trajectory(t, r, eta, p, p_eta, h_n, kappa)

    p2 = (p**2).mean(axis=1)
    summary = {
        "p2_over_m": block_mean(p2 / sys.mass),
        "p4_over_p2sq": block_ratio((p**4).mean(axis=1), p2),
        "V": block_mean(v.mean(axis=1)),
        "r_dV": block_mean((r * sys.ham.potential(r, 1)).mean(axis=1)),
        "H_N_drift": Estimate(float(np.max(np.abs(h_n - h_n[0]))), 0.0),
    }
    return traj, summary


def write_trajectory_csv(path: str | Path, traj: Trajectory, every: int = 1) -> Path:
    path = Path(path)
    n, m = traj.r.shape[1], traj.eta.shape[1]
    names = (["t"] + [f"r{i}" for i in range(n)] + [f"eta{k}" for k in range(m)]
             + [f"p{i}" for i in range(n)] + [f"p_eta{k}" for k in range(m)] + ["H_N", "kappa"])
    data = np.column_stack([traj.t, traj.r, traj.eta, traj.p, traj.p_eta, traj.h_n, traj.kappa])
    np.savetxt(path, data[::every], delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return path


def write_estimators_csv(path: str | Path, summary: dict[str, Estimate]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value", "stderr"])
        for name, est in summary.items():
            w.writerow([name, repr(est.value), repr(est.stderr)])
    return path

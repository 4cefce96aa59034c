"""Configuration-driven scenario runner.

Usage::

    nosemoyal run scenario.ini
    nosemoyal validate scenario.ini
    nosemoyal version

Exit status is 0 on success (or PASS), 1 for usage and configuration
errors, 2 for numerical failures and FAIL summaries.
"""
from __future__ import annotations

import argparse
import configparser
import math
import platform
import re
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .brackets import BracketOrder, StructureTensor, moyal_bracket, moyal_bracket_spectral
from .errors import ConfigError, PhaseSpaceError
from .grid import (
    Axis,
    GridField,
    HamiltonianSpec,
    PhaseSpaceGrid,
    WignerFunction,
    compute_average,
    gaussian_wigner,
    write_field_csv,
)
from .nose import (
    ChainSpec,
    NoseParams,
    NoseSystem,
    sample_canonical,
    write_estimators_csv,
    write_trajectory_csv,
)
from .propagation import (
    EvolutionConfig,
    GeneratorSpec,
    adjoint_rate,
    evolve,
    generator_rate,
    write_time_series_csv,
)
from .stationary import (
    ho_canonical_wigner_exact,
    qc_stationarity_residual,
    wigner_kirkwood_order2,
    write_expansion,
)

SCENARIOS = ("bracket-check", "propagate", "thermostat-sample", "stationarity",
             "wk-expansion", "duality-check")
STOCHASTIC = ("thermostat-sample", "duality-check")
EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ScenarioConfig:
    kind: str
    seed: int | None
    output_dir: Path
    ham: HamiltonianSpec
    hbar: float
    beta: float
    nose: NoseParams
    grid: PhaseSpaceGrid | None
    evolution: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    tolerance: float = 1e-8
    n_dof: int = 1
    source: str = ""


class _Reader:
    """configparser wrapper that reports ``section.key`` and the file line."""

    def __init__(self, path: Path):
        self.path = path
        self.text = path.read_text()
        self.cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            self.cp.read_string(self.text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        self.lines = self._index_lines()

    def _index_lines(self) -> dict[tuple[str, str], int]:
        out, section = {}, None
        for no, line in enumerate(self.text.splitlines(), 1):
            s = line.strip()
            m = re.match(r"\[([^\]]+)\]", s)
            if m:
                section = m.group(1).strip()
                out[(section, "")] = no
                continue
            m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
            if m and section is not None:
                out[(section, m.group(1).strip().lower())] = no
        return out

    def error(self, section: str, key: str, msg: str) -> ConfigError:
        line = self.lines.get((section, key.lower()), self.lines.get((section, "")))
        where = f"{self.path}:{line}" if line else str(self.path)
        return ConfigError(f"{where}: {section}.{key}: {msg}")

    def has(self, section: str, key: str) -> bool:
        return self.cp.has_option(section, key)

    def get(self, section: str, key: str, default=None, required: bool = False) -> str | None:
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        if required:
            raise self.error(section, key, "missing required value")
        return default

    def number(self, section: str, key: str, default=None, kind=float, required=False,
               positive=False, message=None):
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            val = kind(raw)
        except ValueError:
            raise self.error(section, key, f"expected a {kind.__name__}, got {raw!r}") from None
        if positive and not val > 0:
            raise self.error(section, key, message or f"must be positive (got {raw})")
        return val

    def floats(self, section: str, key: str) -> list[float] | None:
        raw = self.get(section, key)
        if raw is None:
            return None
        try:
            return [float(t) for t in raw.replace(",", " ").split()]
        except ValueError:
            raise self.error(section, key, f"expected numbers, got {raw!r}") from None


def _parse_axis(rd: _Reader, name: str) -> Axis | None:
    raw = rd.floats("grid", name)
    if raw is None:
        return None
    if len(raw) != 3:
        raise rd.error("grid", name, "expected 'min, max, count'")
    lo, hi, n = raw
    if n != int(n) or n < 1:
        raise rd.error("grid", name, f"count must be a positive integer (got {n:g})")
    n = int(n)
    if n < 4 or n & (n - 1):
        raise rd.error("grid", name,
                       f"count {n} is not a power of two >= 4 (spectral axes need 2^k points)")
    if not hi > lo:
        raise rd.error("grid", name, "max must exceed min")
    return Axis(name, lo, hi, n)


def _parse_order(rd: _Reader) -> BracketOrder:
    n_max = rd.number("evolution", "n_max", 3, int)
    if n_max < 1:
        raise rd.error("evolution", "n_max", f"n_max must be a positive odd integer (got {n_max})")
    if n_max % 2 == 0:
        raise rd.error("evolution", "n_max", f"n_max must be odd; even orders cancel (got {n_max})")
    if n_max > 7:
        raise rd.error("evolution", "n_max", f"n_max above 7 is not supported (got {n_max})")
    mode = rd.get("evolution", "mode", "series")
    if mode not in ("series", "spectral"):
        raise rd.error("evolution", "mode", f"unknown mode {mode!r}")
    return BracketOrder(n_max, mode)


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file; raises :class:`ConfigError`."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    rd = _Reader(path)
    if not rd.cp.has_section("scenario"):
        raise ConfigError(f"{path}: missing [scenario] section")
    kind = rd.get("scenario", "kind", required=True)
    if kind not in SCENARIOS:
        raise rd.error("scenario", "kind", f"unknown scenario {kind!r}; expected one of {SCENARIOS}")
    seed = rd.number("scenario", "seed", None, int)
    if seed is None and kind in STOCHASTIC:
        raise rd.error("scenario", "seed", f"a seed is mandatory for {kind}")
    if seed is not None and not 0 <= seed < 2**64:
        raise rd.error("scenario", "seed", "seed must be a 64-bit unsigned integer")
    out = Path(rd.get("scenario", "output_dir", "out"))
    if not out.is_absolute():
        out = path.parent / out

    mass = rd.number("system", "mass", 1.0, positive=True)
    coeffs = rd.floats("system", "potential")
    if coeffs is None:
        omega = rd.number("system", "omega", 1.0, positive=True)
        ham = HamiltonianSpec.harmonic(mass, omega)
    else:
        if len(coeffs) > 9:
            raise rd.error("system", "potential", "polynomial degree is limited to 8")
        ham = HamiltonianSpec(mass, tuple(coeffs))
    hbar = rd.number("system", "hbar", 1.0)
    if hbar < 0 or (hbar == 0 and kind not in ("stationarity", "thermostat-sample")):
        raise rd.error("system", "hbar", f"hbar must be positive (got {hbar})")
    beta = rd.number("system", "beta", None, positive=True)
    kT = rd.number("system", "kT", None, positive=True)
    if beta is None and kT is None:
        beta = 1.0
    elif beta is None:
        beta = 1.0 / kT
    elif kT is not None and abs(beta * kT - 1) > 1e-12:
        raise rd.error("system", "kT", "beta and kT are both given and disagree")
    n_dof = rd.number("system", "n_dof", 1, int, positive=True)
    m_eta = rd.number("system", "m_eta", None, positive=True)
    tau = rd.number("system", "tau", 1.0, positive=True)
    g = rd.number("system", "g", None, positive=True)
    if m_eta is None:
        nose = NoseParams.from_timescale(1.0 / beta, mass, n_dof, tau, g)
    else:
        nose = NoseParams(m_eta, 1.0 / beta, g)

    grid = None
    if rd.cp.has_section("grid"):
        axes = [a for a in (_parse_axis(rd, n) for n in ("r", "eta", "p", "p_eta")) if a]
        names = tuple(a.name for a in axes)
        if names not in (("r", "p"), ("r", "eta", "p", "p_eta")):
            raise rd.error("grid", "r", f"grid needs axes r, p (and optionally eta, p_eta); got {names}")
        grid = PhaseSpaceGrid(axes)
    if grid is None and kind not in ("thermostat-sample",):
        raise ConfigError(f"{path}: scenario {kind} needs a [grid] section")

    evolution = {}
    if rd.cp.has_section("evolution") or kind == "propagate":
        evolution["order"] = _parse_order(rd)
        evolution["dt"] = rd.number("evolution", "dt", 0.01,
                                    positive=True, message="dt must be > 0")
        evolution["n_steps"] = rd.number("evolution", "n_steps", 100, int, positive=True)
        direction = rd.get("evolution", "direction", "wigner")
        if direction not in ("wigner", "observable"):
            raise rd.error("evolution", "direction", f"unknown direction {direction!r}")
        stepper = rd.get("evolution", "stepper", "rk4")
        if stepper not in ("rk4", "split-step"):
            raise rd.error("evolution", "stepper", f"unknown stepper {stepper!r}")
        evolution.update(direction=direction, stepper=stepper,
                         snapshot_every=rd.number("evolution", "snapshot_every", 0, int))

    initial = {
        "kind": rd.get("initial", "kind", "gaussian"),
        "r0": rd.number("initial", "r0", 0.0),
        "p0": rd.number("initial", "p0", 0.0),
        "width": rd.number("initial", "width", 1.0, positive=True),
    }
    if initial["kind"] not in ("gaussian", "thermal"):
        raise rd.error("initial", "kind", f"unknown initial state {initial['kind']!r}")

    sampling = {}
    if kind == "thermostat-sample":
        sampling = {
            "chain_length": rd.number("sampling", "chain_length", 2, int, positive=True),
            "chain_mass": rd.number("sampling", "chain_mass", nose.m_eta, positive=True),
            "n_steps": rd.number("sampling", "n_steps", 100000, int, positive=True),
            "dt": rd.number("sampling", "dt", 0.05, positive=True, message="dt must be > 0"),
            "burn_in": rd.number("sampling", "burn_in", 1000, int),
            "record_every": rd.number("sampling", "record_every", 100, int, positive=True),
        }
        if sampling["burn_in"] < 0 or sampling["burn_in"] >= sampling["n_steps"]:
            raise rd.error("sampling", "burn_in", "burn_in must lie in [0, n_steps)")
    tolerance = rd.number("checks", "tolerance", None, positive=True)
    if tolerance is None:
        tolerance = 1e-10 if kind == "stationarity" else 1e-8
    if n_dof != 1 and kind != "thermostat-sample":
        raise rd.error("system", "n_dof", "gridded scenarios carry one degree of freedom")
    return ScenarioConfig(kind, seed, out, ham, hbar, beta, nose, grid, evolution,
                          initial, sampling, tolerance, n_dof, rd.text)


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Outcome:
    files: list[Path] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    passed: bool | None = None

    def check(self, name: str, value: float, tol: float, *, upper: bool = True) -> None:
        ok = bool(value <= tol) if upper else bool(value >= tol)
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {name} value={value:.6e} tol={tol:.1e}")
        self.passed = ok if self.passed is None else (self.passed and ok)


def _write_rows(path: Path, header: list[str], rows: list[list]) -> Path:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(r if isinstance(r, str) else repr(float(r)) for r in row) + "\n")
    return path


def _initial_state(cfg: ScenarioConfig, grid: PhaseSpaceGrid) -> WignerFunction:
    ini = cfg.initial
    if ini["kind"] == "gaussian":
        return gaussian_wigner(grid, cfg.hbar, ini["r0"], ini["p0"], ini["width"])
    wk = wigner_kirkwood_order2(cfg.ham, cfg.beta, cfg.hbar, grid)
    return WignerFunction(wk.term(0), cfg.hbar)


def _random_smooth(grid: PhaseSpaceGrid, rng: np.random.Generator, modes: int = 4) -> GridField:
    coeff = np.zeros(grid.shape, dtype=complex)
    sl = tuple(slice(0, modes) for _ in grid.shape)
    shape = [modes] * grid.ndim
    coeff[sl] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return GridField(grid, np.fft.ifftn(coeff).real * grid.size / modes**grid.ndim)


def _exact_bracket(cfg: ScenarioConfig, target_terms, grid):
    from . import symbolic
    hx = symbolic.standard_hamiltonian_exact(cfg.ham.mass, [float(c) for c in cfg.ham.coefficients])
    bx = symbolic.Polynomial(2, target_terms)
    order = cfg.evolution.get("order", BracketOrder())
    exact = symbolic.moyal_series_exact(hx, bx, symbolic.canonical_tensor_exact(),
                                        order.n_max, cfg.hbar)
    b = GridField.from_coefficients(grid, bx.coefficient_array())
    return b, 1j * exact.evaluate([grid.mesh("r"), grid.mesh("p")])


def scenario_bracket_check(cfg: ScenarioConfig, out: Outcome) -> None:
    grid = cfg.grid.subgrid(("r", "p")) if cfg.grid.ndim == 4 else cfg.grid
    tensor = StructureTensor.canonical()
    order = cfg.evolution.get("order", BracketOrder())
    h = cfg.ham.field(grid)
    targets = {"r": {(1, 0): 1}, "p": {(0, 1): 1}, "p3": {(0, 3): 1},
               "r2p": {(2, 1): 1}, "r3_p2": {(3, 0): 1, (0, 2): 1}}
    rows, worst_oracle, worst_spec, worst_anti = [], 0.0, 0.0, 0.0
    for name, terms in targets.items():
        b, exact = _exact_bracket(cfg, terms, grid)
        series = moyal_bracket(h, b, tensor, BracketOrder(order.n_max), cfg.hbar)
        spectral = moyal_bracket_spectral(h, b, cfg.hbar)
        back = moyal_bracket(b, h, tensor, BracketOrder(order.n_max), cfg.hbar)
        scale = max(float(np.max(np.abs(exact))), 1e-300)
        d_or = float(np.max(np.abs(series.values - exact))) / scale
        d_sp = float(np.max(np.abs(series.values - spectral.values))) / scale
        d_an = float(np.max(np.abs(series.values + back.values))) / scale
        rows.append([name, d_or, d_sp, d_an])
        worst_oracle = max(worst_oracle, d_or)
        worst_spec = max(worst_spec, d_sp)
        worst_anti = max(worst_anti, d_an)
    out.files.append(_write_rows(cfg.output_dir / "bracket_check.csv",
                                 ["target", "rel_dev_oracle", "rel_dev_spectral", "rel_antisymmetry"], rows))
    out.check("bracket_vs_oracle", worst_oracle, cfg.tolerance)
    out.check("bracket_vs_spectral", worst_spec, cfg.tolerance)
    out.check("bracket_antisymmetry", worst_anti, 1e-12)


def scenario_propagate(cfg: ScenarioConfig, out: Outcome) -> None:
    grid, ev = cfg.grid, cfg.evolution
    ecfg = EvolutionConfig(ev["dt"], ev["n_steps"], ev["order"], ev["direction"], ev["stepper"], cfg.hbar)
    if grid.ndim == 4:
        sys_ = NoseSystem(cfg.ham, cfg.nose)
        spec = GeneratorSpec.nose(sys_, grid)
        f0 = GridField.from_function(grid, lambda r, e, p, pe: np.exp(
            -((r - cfg.initial["r0"]) ** 2 + (p - cfg.initial["p0"]) ** 2) / cfg.hbar - e**2 - pe**2))
        f0 = WignerFunction(f0 / f0.integral(), cfg.hbar)
    else:
        spec = GeneratorSpec.canonical(cfg.ham, grid)
        f0 = _initial_state(cfg, grid)
    res = evolve(f0, spec, ecfg)
    out.files.append(write_time_series_csv(cfg.output_dir / "time_series.csv", res))
    out.files.append(write_field_csv(cfg.output_dir / "final_field.csv", res.field,
                                     [f"t={res.times[-1]!r}"]))
    drift = float(np.max(np.abs(res.series["norm"] - res.series["norm"][0])))
    out.lines.append(f"norm_drift={drift:.6e}")


def scenario_thermostat(cfg: ScenarioConfig, out: Outcome) -> None:
    s = cfg.sampling
    sys_ = NoseSystem(cfg.ham, cfg.nose, cfg.n_dof)
    chain = ChainSpec.uniform(s["chain_length"], s["chain_mass"])
    traj, summary = sample_canonical(sys_, chain, s["n_steps"], s["dt"], cfg.seed, s["burn_in"])
    out.files.append(write_trajectory_csv(cfg.output_dir / "trajectory.csv", traj, s["record_every"]))
    out.files.append(write_estimators_csv(cfg.output_dir / "estimators.csv", summary))
    for name, est in summary.items():
        out.lines.append(f"{name}={est.value:.6e} stderr={est.stderr:.3e}")


def scenario_stationarity(cfg: ScenarioConfig, out: Outcome) -> None:
    grid = cfg.grid
    sys_ = NoseSystem(cfg.ham, cfg.nose)
    n_max = cfg.evolution.get("order", BracketOrder()).n_max
    if grid.ndim == 4:
        # h(H^N) exp(N eta) with h = exp(-beta E): eta drops out for g = N
        e = (cfg.ham.field(grid).values + grid.mesh("p_eta") ** 2 / (2 * cfg.nose.m_eta)
             + sys_.g_kT * grid.mesh("eta"))
        vals = np.exp(-cfg.beta * e + sys_.n_dof * grid.mesh("eta"))
        cand = GridField(grid, np.broadcast_to(vals, grid.shape))
        label = "extended_zeroth_order"
    else:
        wk = wigner_kirkwood_order2(cfg.ham, cfg.beta, cfg.hbar, grid)
        cand = wk.term(0) if cfg.hbar == 0 else GridField(grid, wk.total().values)
        label = "wigner_kirkwood" if cfg.hbar else "boltzmann"
    res = qc_stationarity_residual(sys_, cand, n_max, cfg.hbar)
    rel = res.interior_sup / cand.sup_norm()
    out.files.append(_write_rows(cfg.output_dir / "stationarity.csv",
                                 ["candidate", "sup", "l2", "interior_sup", "interior_l2", "relative"],
                                 [[label, res.sup, res.l2, res.interior_sup, res.interior_l2, rel]]))
    out.files.append(write_field_csv(cfg.output_dir / "residual.csv", res.field, [f"candidate={label}"]))
    out.check("stationarity_residual", rel, cfg.tolerance)


def scenario_wk(cfg: ScenarioConfig, out: Outcome) -> None:
    grid = cfg.grid
    wk = wigner_kirkwood_order2(cfg.ham, cfg.beta, cfg.hbar, grid)
    out.files.extend(write_expansion(cfg.output_dir, wk))
    p = GridField.coordinate(grid, "p")
    kin = p * p * (1.0 / cfg.ham.mass)
    rows = [["p2_over_m_order0", compute_average(kin, wk.term(0))],
            ["p2_over_m_order2", compute_average(kin, wk.total())]]
    c = cfg.ham.coefficients
    if c is not None and len(c) == 3 and c[1] == 0:
        omega = math.sqrt(2 * c[2] / cfg.ham.mass)
        u = 0.5 * cfg.beta * cfg.hbar * omega
        rows.append(["p2_over_m_exact", 0.5 * cfg.hbar * omega / math.tanh(u)])
        exact = ho_canonical_wigner_exact(cfg.beta, cfg.ham.mass, omega, cfg.hbar, grid)
        rows.append(["p2_over_m_exact_grid", compute_average(kin, exact)])
    out.files.append(_write_rows(cfg.output_dir / "wk_averages.csv", ["name", "value"], rows))


def scenario_duality(cfg: ScenarioConfig, out: Outcome) -> None:
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed)
    order = cfg.evolution.get("order", BracketOrder())
    if grid.ndim == 4:
        sys_ = NoseSystem(cfg.ham, cfg.nose)
        spec = GeneratorSpec.nose(sys_, grid)
    else:
        spec = GeneratorSpec.canonical(cfg.ham, grid)
    a, b = _random_smooth(grid, rng), _random_smooth(grid, rng)
    lhs = float(np.sum(generator_rate(spec.h_field, a, spec.tensor, order, cfg.hbar).values * b.values))
    rhs = float(np.sum(a.values * adjoint_rate(spec.h_field, b, spec.tensor, order, cfg.hbar).values))
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    rows = [["sum_rate_a_times_b", lhs * grid.cell_volume], ["sum_a_times_adjoint_rate_b", rhs * grid.cell_volume],
            ["relative_difference", rel]]
    out.check("integration_by_parts", rel, cfg.tolerance)
    ev = cfg.evolution
    if ev and grid.ndim == 2:
        f0 = _initial_state(cfg, grid)
        chi = GridField.coordinate(grid, "r") * GridField.coordinate(grid, "p") + GridField.coordinate(grid, "r")
        common = dict(order=ev["order"], stepper="rk4", hbar=cfg.hbar)
        wr = evolve(f0, spec, EvolutionConfig(ev["dt"], ev["n_steps"], direction="wigner", **common),
                    {"chi": chi})
        orr = evolve(chi, spec, EvolutionConfig(ev["dt"], ev["n_steps"], direction="observable", **common),
                     {"chi": f0.field})
        dev = float(np.max(np.abs(wr.series["chi"] - orr.series["chi"])))
        rows.append(["max_average_difference", dev])
        out.check("observable_vs_wigner_averages", dev, max(cfg.tolerance, 1e-7))
    out.files.append(_write_rows(cfg.output_dir / "duality.csv", ["name", "value"], rows))


RUNNERS = {
    "bracket-check": scenario_bracket_check,
    "propagate": scenario_propagate,
    "thermostat-sample": scenario_thermostat,
    "stationarity": scenario_stationarity,
    "wk-expansion": scenario_wk,
    "duality-check": scenario_duality,
}


def _versions() -> list[str]:
    return [f"nosemoyal={__version__}", f"numpy={np.__version__}", f"scipy={scipy.__version__}",
            f"python={platform.python_version()}"]


def run(config_path: str | Path) -> tuple[int, Outcome]:
    cfg = load_config(config_path)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = Outcome()
    start = time.perf_counter()
    try:
        RUNNERS[cfg.kind](cfg, out)
    except PhaseSpaceError as exc:
        out.lines.append(f"FAIL {cfg.kind}: {type(exc).__name__}: {exc}")
        out.passed = False
        status = EXIT_FAIL
    else:
        status = EXIT_FAIL if out.passed is False else EXIT_OK
    wall = time.perf_counter() - start
    summary = cfg.output_dir / "summary.txt"
    verdict = {None: "DONE", True: "PASS", False: "FAIL"}[out.passed]
    summary.write_text("\n".join([f"{verdict} {cfg.kind}"] + out.lines) + "\n")
    manifest = cfg.output_dir / "manifest.txt"
    manifest.write_text("\n".join(
        # run-dependent values share the first line so the rest is reproducible
        [f"# timestamp: {datetime.now(timezone.utc).isoformat()} wall_time_s: {wall:.3f}",
         f"scenario: {cfg.kind}", f"seed: {cfg.seed}"]
        + [f"version: {v}" for v in _versions()]
        + ["outputs: " + ",".join(p.name for p in out.files + [summary])]
        + ["config:"] + ["  " + line for line in cfg.source.splitlines()]) + "\n")
    return status, out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nosemoyal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario and write its CSV outputs")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="parse and validate a scenario file")
    p_val.add_argument("config")
    sub.add_parser("version", help="print package and library versions")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "version":
        print(" ".join(_versions()))
        return EXIT_OK
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"OK {cfg.kind}")
            return EXIT_OK
        status, out = run(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("\n".join(out.lines))
    return status


if __name__ == "__main__":
    sys.exit(main())

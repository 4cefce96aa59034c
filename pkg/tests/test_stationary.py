import math

import numpy as np
import pytest
import sympy as sp
from scipy.special import eval_laguerre

from nosemoyal.errors import GridError
from nosemoyal.grid import GridField, HamiltonianSpec, PhaseSpaceGrid, compute_average
from nosemoyal.nose import NoseParams, NoseSystem, nose_hamiltonian_field
from nosemoyal.stationary import (
    ExpansionResult,
    boltzmann_wigner,
    ho_canonical_wigner_exact,
    qc_stationarity_residual,
    read_expansion,
    wigner_kirkwood_correction,
    wigner_kirkwood_order2,
    write_expansion,
)

QUARTIC = HamiltonianSpec.quartic(1.0, 0.25, 0.0)


@pytest.fixture(scope="module")
def wide():
    return PhaseSpaceGrid.phase_plane((-8.0, 8.0, 128), (-8.0, 8.0, 128))


@pytest.fixture(scope="module")
def quartic_plane():
    return PhaseSpaceGrid.phase_plane((-6.0, 6.0, 128), (-8.0, 8.0, 128))


def system(ham, kT=1.0, m_eta=1.0):
    return NoseSystem(ham, NoseParams(m_eta, kT))


def ho_taylor_coefficient(grid, beta, mass=1.0, omega=1.0):
    """hbar^2 coefficient of the closed-form thermal HO Wigner function, by series expansion."""
    hb, e, b, w = sp.symbols("hbar E beta omega", positive=True)
    u = b * hb * w / 2
    expr = sp.tanh(u) / (sp.pi * hb) * sp.exp(-2 * sp.tanh(u) * e / (hb * w))
    c2 = sp.series(expr, hb, 0, 3).removeO().coeff(hb, 2)
    fn = sp.lambdify((e, b, w), sp.simplify(c2), "numpy")
    h = HamiltonianSpec.harmonic(mass, omega).field(grid).values
    return fn(h, beta, omega)


def ho_eigenstate_sum(grid, beta, hbar, omega=1.0, n_terms=80):
    """Boltzmann-weighted sum of HO eigenstate Wigner functions (Laguerre form)."""
    h = HamiltonianSpec.harmonic(1.0, omega).field(grid).values
    x = 4 * h / (hbar * omega)
    total = np.zeros(grid.shape)
    z = 0.0
    for n in range(n_terms):
        weight = math.exp(-beta * hbar * omega * (n + 0.5))
        total += weight * (-1) ** n / (math.pi * hbar) * np.exp(-x / 2) * eval_laguerre(n, x)
        z += weight
    return total / z


class TestResidual:
    def test_classical_plane(self, quartic_plane):
        f0 = boltzmann_wigner(QUARTIC, 1.0, quartic_plane)
        res = qc_stationarity_residual(system(QUARTIC), f0, 3, hbar=0.0)
        assert res.sup <= 1e-10 * f0.sup_norm()

    def test_classical_extended(self):
        grid = PhaseSpaceGrid.extended((-6.0, 6.0, 128), (-1.0, 1.0, 4), (-8.0, 8.0, 64), (-12.0, 12.0, 64))
        sys_ = system(QUARTIC, kT=1.0, m_eta=1.5)
        h = nose_hamiltonian_field(sys_, grid).values
        # h(H^N) exp(+N eta) with h = exp(-H^N / kT); eta drops out for g = N
        f = GridField(grid, np.exp(-h / sys_.nose.kT + grid.mesh("eta")) * np.ones(grid.shape))
        res = qc_stationarity_residual(sys_, f, 3, hbar=0.0)
        assert res.sup <= 1e-10 * f.sup_norm()

    def test_exact_ho_state_is_stationary(self, wide):
        w = ho_canonical_wigner_exact(1.0, 1.0, 1.0, 0.7, wide)
        res = qc_stationarity_residual(system(HamiltonianSpec.harmonic()), w.field, 7, hbar=0.7)
        assert res.interior_sup <= 1e-10 * w.field.sup_norm()

    def test_hbar_squared_scaling_without_correction(self, quartic_plane):
        f0 = boltzmann_wigner(QUARTIC, 1.0, quartic_plane)
        norms = [qc_stationarity_residual(system(QUARTIC), f0, 3, hb).interior_l2 for hb in (0.4, 0.2, 0.1)]
        for a, b in zip(norms, norms[1:]):
            assert 3.6 <= a / b <= 4.4

    def test_hbar_fourth_scaling_with_correction(self, quartic_plane):
        norms = []
        for hb in (0.4, 0.2, 0.1):
            f = wigner_kirkwood_order2(QUARTIC, 1.0, hb, quartic_plane).total().field
            norms.append(qc_stationarity_residual(system(QUARTIC), f, 3, hb).interior_l2)
        for a, b in zip(norms, norms[1:]):
            assert 12.0 <= a / b <= 20.0

    @pytest.mark.parametrize("ham", [HamiltonianSpec.harmonic(), QUARTIC, HamiltonianSpec.quartic(1.0, 0.25, -1.0)])
    @pytest.mark.parametrize("hbar", [0.1, 0.2])
    def test_correction_reduces_residual(self, quartic_plane, wide, ham, hbar):
        # both residuals vanish identically for the oscillator; the wide grid keeps them at roundoff
        grid = wide if ham.degree == 2 else quartic_plane
        exp = wigner_kirkwood_order2(ham, 1.0, hbar, grid)
        sys_ = system(ham)
        r0 = qc_stationarity_residual(sys_, exp.term(0), 3, hbar)
        r2 = qc_stationarity_residual(sys_, exp.total().field, 3, hbar)
        assert r2.interior_l2 <= r0.interior_l2 + 1e-12
        assert r2.interior_sup <= r0.interior_sup + 1e-12

    def test_interior_window(self, quartic_plane):
        f0 = boltzmann_wigner(QUARTIC, 1.0, quartic_plane)
        res = qc_stationarity_residual(system(QUARTIC), f0, 3, 0.3)
        assert res.interior_sup <= res.sup and res.interior_l2 <= res.l2
        assert res.field.grid == quartic_plane

    def test_errors(self, quartic_plane):
        f0 = boltzmann_wigner(QUARTIC, 1.0, quartic_plane)
        with pytest.raises(ValueError):
            qc_stationarity_residual(system(QUARTIC), f0, 4)
        with pytest.raises(ValueError):
            qc_stationarity_residual(system(QUARTIC), f0, 3, hbar=-1.0)
        odd = PhaseSpaceGrid([("r", -1.0, 1.0, 8), ("eta", -1.0, 1.0, 8)])
        with pytest.raises(GridError):
            qc_stationarity_residual(system(QUARTIC), GridField.constant(odd))


class TestWignerKirkwood:
    def test_free_particle_has_no_correction(self, wide):
        assert np.max(np.abs(wigner_kirkwood_correction(HamiltonianSpec.free(), 1.0, wide))) == 0.0

    def test_ho_matches_taylor_coefficient(self, wide):
        beta, hbar = 1.0, 0.3
        f2 = wigner_kirkwood_order2(HamiltonianSpec.harmonic(), beta, hbar, wide).term(2).values / hbar**2
        assert np.max(np.abs(f2 - ho_taylor_coefficient(wide, beta))) < 1e-8

    def test_ho_matches_taylor_coefficient_other_beta(self, wide):
        beta = 0.6
        f2 = wigner_kirkwood_order2(HamiltonianSpec.harmonic(), beta, 1.0, wide).term(2).values
        assert np.max(np.abs(f2 - ho_taylor_coefficient(wide, beta))) < 1e-8

    def test_corrected_kinetic_average(self, wide):
        beta, hbar = 1.0, 0.3
        f = wigner_kirkwood_order2(HamiltonianSpec.harmonic(), beta, hbar, wide).total()
        p = GridField.coordinate(wide, "p")
        exact = 0.5 * hbar / math.tanh(0.5 * beta * hbar)
        assert abs(compute_average(p * p, f) - exact) < 1e-3

    def test_correction_integrates_to_zero(self, quartic_plane):
        exp = wigner_kirkwood_order2(QUARTIC, 1.0, 0.3, quartic_plane)
        assert abs(exp.term(2).integral()) < 1e-10
        assert exp.total().normalization() == pytest.approx(1.0, abs=1e-10)

    def test_only_even_orders(self, wide):
        f = GridField.constant(wide)
        with pytest.raises(ValueError):
            ExpansionResult(1.0, 0.1, [(0, f), (1, f)])

    def test_invalid_beta(self, wide):
        with pytest.raises(ValueError):
            wigner_kirkwood_order2(QUARTIC, 0.0, 0.1, wide)

    def test_round_trip(self, tmp_path, quartic_plane):
        exp = wigner_kirkwood_order2(QUARTIC, 1.5, 0.25, quartic_plane)
        paths = write_expansion(tmp_path, exp)
        assert (tmp_path / "wk_manifest.txt").read_text().startswith("# orders: 0,2 beta=1.5 hbar=0.25")
        assert len(paths) == 3
        back = read_expansion(tmp_path)
        assert back.beta == 1.5 and back.hbar == 0.25
        for (n, f), (m, g) in zip(exp.orders, back.orders):
            assert n == m and np.array_equal(f.values, g.values)


class TestHarmonicOracle:
    def test_normalized(self):
        grid = PhaseSpaceGrid.phase_plane((-12.0, 12.0, 128), (-12.0, 12.0, 128))
        for beta, hbar in ((1.0, 1.0), (0.5, 0.3), (5.0, 1.0)):
            assert ho_canonical_wigner_exact(beta, 1.0, 1.0, hbar, grid).normalization() == pytest.approx(1.0, abs=1e-10)

    def test_matches_eigenstate_sum(self, wide):
        for beta, hbar in ((1.0, 1.0), (2.0, 0.5)):
            w = ho_canonical_wigner_exact(beta, 1.0, 1.0, hbar, wide).values
            assert np.max(np.abs(w - ho_eigenstate_sum(wide, beta, hbar))) < 1e-10

    def test_classical_limit_scaling(self, wide):
        diffs = []
        for hb in (0.4, 0.2, 0.1):
            w = ho_canonical_wigner_exact(1.0, 1.0, 1.0, hb, wide).values
            diffs.append(np.max(np.abs(w - boltzmann_wigner(HamiltonianSpec.harmonic(), 1.0, wide).values)))
        for a, b in zip(diffs, diffs[1:]):
            assert 3.6 <= a / b <= 4.4

    def test_ground_state_limit(self, wide):
        w = ho_canonical_wigner_exact(50.0, 1.0, 1.0, 1.0, wide).values
        r, p = wide.mesh("r"), wide.mesh("p")
        assert np.max(np.abs(w - np.exp(-(r**2 + p**2)) / math.pi)) < 1e-8

    @pytest.mark.parametrize("beta, hbar, omega, mass", [(1.0, 1.0, 1.0, 1.0), (0.7, 0.5, 1.3, 0.8)])
    def test_mean_energy(self, wide, beta, hbar, omega, mass):
        w = ho_canonical_wigner_exact(beta, mass, omega, hbar, wide)
        h = HamiltonianSpec.harmonic(mass, omega).field(wide)
        exact = 0.5 * hbar * omega / math.tanh(0.5 * beta * hbar * omega)
        assert compute_average(h, w) == pytest.approx(exact, abs=1e-9)


def test_odd_thermostat_moments_vanish():
    grid = PhaseSpaceGrid.extended((-6.0, 6.0, 32), (-1.0, 1.0, 4), (-6.0, 6.0, 32), (-12.0, 12.0, 64))
    sys_ = system(QUARTIC, kT=1.0, m_eta=1.5)
    h = nose_hamiltonian_field(sys_, grid).values
    f = np.exp(-h + grid.mesh("eta")) * np.ones(grid.shape)
    pe, p = grid.mesh("p_eta"), grid.mesh("p")
    z = np.sum(f)
    for odd in (pe, pe**3, p * pe, np.sin(pe)):
        assert abs(np.sum(odd * f)) / z < 1e-12
    assert np.sum(pe**2 * f) / z == pytest.approx(1.5, rel=1e-9)

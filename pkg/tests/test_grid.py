import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nosemoyal.errors import DegenerateFieldError, GridError, NormalizationError
from nosemoyal.grid import (
    Axis,
    GridField,
    HamiltonianSpec,
    PhaseSpaceGrid,
    WignerFunction,
    compute_average,
    gaussian_wigner,
    marginal,
    read_field_csv,
    renormalize,
    wigner_transform_pure_state,
    write_field_csv,
)


def ho_state(r, r0=0.0, hbar=1.0):
    return (np.pi * hbar) ** -0.25 * np.exp(-((r - r0) ** 2) / (2 * hbar)).astype(complex)


def direct_wigner(psi_func, r, p, hbar, ny=4001, ymax=20.0):
    """Trapezoid quadrature of the Wigner integral at one (r, p)."""
    y = np.linspace(-ymax, ymax, ny)
    integrand = np.conj(psi_func(r + y / 2)) * psi_func(r - y / 2) * np.exp(1j * p * y / hbar)
    return float(np.trapezoid(integrand, y).real / (2 * np.pi * hbar))


class TestGrid:
    def test_axis_validation(self):
        with pytest.raises(GridError):
            Axis("r", -1, 1, 100)
        with pytest.raises(GridError):
            Axis("q", -1, 1, 64)
        with pytest.raises(GridError):
            Axis("r", 1, -1, 64)
        with pytest.raises(GridError):
            PhaseSpaceGrid([Axis("r", -1, 1, 8), Axis("r", -1, 1, 8)])

    def test_periodic_spacing(self):
        ax = Axis("p", -4.0, 4.0, 16)
        assert ax.spacing == 0.5
        assert ax.points[-1] == pytest.approx(3.5)

    def test_spec_string_round_trip(self, small_plane):
        assert PhaseSpaceGrid.from_spec_string(small_plane.spec_string()) == small_plane

    def test_unknown_axis(self, small_plane):
        with pytest.raises(GridError):
            small_plane.index("eta")


class TestWignerTransform:
    def test_ground_state_gaussian(self, plane):
        psi = ho_state(plane.axes[0].points)
        f = wigner_transform_pure_state(psi, plane, 1.0)
        r, p = plane.mesh("r"), plane.mesh("p")
        assert np.max(np.abs(f.values - np.exp(-(r**2 + p**2)) / np.pi)) < 1e-10
        assert abs(f.normalization() - 1.0) < 1e-9

    def test_shifted_state_against_quadrature(self, plane):
        psi = ho_state(plane.axes[0].points, r0=1.0)
        f = wigner_transform_pure_state(psi, plane, 1.0)
        i, j = 72, 61
        r, p = plane.axes[0].points[i], plane.axes[1].points[j]
        ref = direct_wigner(lambda x: ho_state(x, 1.0), r, p, 1.0)
        assert abs(f.values[i, j] - ref) < 1e-9
        peak = np.unravel_index(np.argmax(f.values), f.grid.shape)
        assert plane.axes[0].points[peak[0]] == pytest.approx(1.0, abs=plane.axes[0].spacing)

    def test_global_phase_invariance(self, small_plane):
        psi = ho_state(small_plane.axes[0].points, 0.5)
        a = wigner_transform_pure_state(psi, small_plane, 1.0).values
        b = wigner_transform_pure_state(psi * np.exp(0.7j), small_plane, 1.0).values
        assert np.array_equal(np.round(a, 12), np.round(b, 12))

    def test_position_marginal(self, plane):
        x = plane.axes[0].points
        psi = ho_state(x, 0.5) + 0.6 * ho_state(x, -1.2) * np.exp(1.3j * x)
        psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * plane.axes[0].spacing)
        f = wigner_transform_pure_state(psi, plane, 1.0)
        assert np.max(np.abs(marginal(f, "r") - np.abs(psi) ** 2)) < 1e-8

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.0, 1.0), st.floats(0.0, 6.28))
    def test_pure_state_properties(self, a, b, weight, phase):
        grid = PhaseSpaceGrid.phase_plane((-8.0, 8.0, 128), (-8.0, 8.0, 64))
        x = grid.axes[0].points
        psi = ho_state(x, a) + weight * np.exp(1j * phase) * ho_state(x, b) * np.exp(0.8j * x)
        psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.axes[0].spacing)
        f = wigner_transform_pure_state(psi, grid, 1.0)
        assert abs(f.normalization() - 1.0) < 1e-9
        assert marginal(f, "r").min() > -1e-10
        assert marginal(f, "p").min() > -1e-10

    def test_rejects_unnormalized(self, small_plane):
        with pytest.raises(NormalizationError):
            wigner_transform_pure_state(2 * ho_state(small_plane.axes[0].points), small_plane, 1.0)

    def test_rejects_aliased_momentum_range(self):
        grid = PhaseSpaceGrid.phase_plane((-10.0, 10.0, 64), (-10.0, 10.0, 64))
        with pytest.raises(GridError):
            wigner_transform_pure_state(ho_state(grid.axes[0].points), grid, 1.0)

    def test_rejects_wrong_length(self, small_plane):
        with pytest.raises(GridError):
            wigner_transform_pure_state(np.ones(10), small_plane, 1.0)


class TestAverages:
    def test_constant_observable(self, plane):
        f = gaussian_wigner(plane, 1.0, 0.3, -0.2)
        assert compute_average(GridField.constant(plane), f) == pytest.approx(1.0, abs=1e-9)

    def test_ground_state_p2(self, plane):
        p = GridField.coordinate(plane, "p")
        assert compute_average(p * p, gaussian_wigner(plane, 1.0)) == pytest.approx(0.5, abs=1e-12)

    def test_shifted_mean(self, plane):
        r = GridField.coordinate(plane, "r")
        assert compute_average(r, gaussian_wigner(plane, 1.0, 1.0)) == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_bilinear(self, a, b):
        grid = PhaseSpaceGrid.phase_plane((-6.0, 6.0, 32), (-6.0, 6.0, 32))
        f = gaussian_wigner(grid, 1.0, 0.4, 0.1)
        c1 = GridField.coordinate(grid, "r")
        c2 = GridField.coordinate(grid, "p") * GridField.coordinate(grid, "p")
        lhs = compute_average(c1 * a + c2 * b, f)
        rhs = a * compute_average(c1, f) + b * compute_average(c2, f)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(a) + abs(b))

    def test_grid_mismatch(self, plane, small_plane):
        with pytest.raises(GridError):
            compute_average(GridField.constant(small_plane), gaussian_wigner(plane, 1.0))


class TestMarginals:
    def test_gaussian_width(self, plane):
        m = marginal(gaussian_wigner(plane, 1.0), "r")
        x = plane.axes[0].points
        assert np.max(np.abs(m - np.exp(-(x**2)) / np.sqrt(np.pi))) < 1e-12

    def test_product_form(self, small_plane):
        r, p = small_plane.mesh("r"), small_plane.mesh("p")
        h = np.exp(-((p - 0.5) ** 2))
        f = GridField(small_plane, np.exp(-(r**2) / 3) * h)
        m = marginal(f, "p")
        assert np.allclose(m / m.max(), (h / h.max()).ravel(), atol=1e-13)

    def test_sums_to_one(self, small_plane):
        m = marginal(gaussian_wigner(small_plane, 1.0, 0.5), "p")
        assert np.sum(m) * small_plane.axes[1].spacing == pytest.approx(1.0, abs=1e-9)

    def test_unknown_axis(self, small_plane):
        with pytest.raises(GridError):
            marginal(gaussian_wigner(small_plane, 1.0), "p_eta")


class TestRenormalize:
    def test_scaling(self, small_plane):
        f = gaussian_wigner(small_plane, 1.0)
        g = renormalize(WignerFunction(f.field * 2.0, 1.0))
        assert np.max(np.abs(g.values - f.values)) < 1e-12

    def test_idempotent(self, small_plane):
        f = renormalize(gaussian_wigner(small_plane, 1.0))
        assert np.max(np.abs(renormalize(f).values - f.values)) < 1e-12

    def test_negative_integral(self, small_plane):
        f = gaussian_wigner(small_plane, 1.0)
        g = renormalize(WignerFunction(f.field * -1.0, 1.0))
        assert g.normalization() == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(g.values - f.values / f.normalization())) < 1e-12

    def test_zero_integral(self, small_plane):
        r = GridField.coordinate(small_plane, "r")
        odd = GridField(small_plane, r.values * gaussian_wigner(small_plane, 1.0).values)
        with pytest.raises(DegenerateFieldError):
            renormalize(WignerFunction(odd, 1.0))


class TestHamiltonianSpec:
    def test_polynomial_field(self, small_plane):
        h = HamiltonianSpec.quartic(2.0, 0.25, -1.0).field(small_plane)
        r, p = small_plane.mesh("r"), small_plane.mesh("p")
        assert np.allclose(h.values, p**2 / 4 + r**4 / 4 - r**2, atol=1e-12)
        assert h.poly is not None

    def test_degree_limit(self):
        with pytest.raises(ValueError):
            HamiltonianSpec(1.0, tuple(range(10)))

    def test_tabulated_potential(self, small_plane):
        rgrid = PhaseSpaceGrid([small_plane.axes[0]])
        table = GridField(rgrid, np.cos(small_plane.axes[0].points))
        ham = HamiltonianSpec(1.0, table=table)
        assert np.allclose(ham.potential_field(small_plane).values[:, 3], np.cos(small_plane.axes[0].points))
        assert ham.potential(0.1, 1) == pytest.approx(-np.sin(0.1), abs=1e-3)

    def test_tabulated_grid_mismatch(self, small_plane):
        other = PhaseSpaceGrid([Axis("r", -5.0, 5.0, 64)])
        ham = HamiltonianSpec(1.0, table=GridField(other, np.zeros(64)))
        with pytest.raises(GridError):
            ham.potential_field(small_plane)


def test_field_csv_round_trip(tmp_path, small_plane):
    f = gaussian_wigner(small_plane, 1.0, 0.2)
    path = write_field_csv(tmp_path / "f.csv", f, ["t=0.5"])
    back, meta = read_field_csv(path)
    assert back.grid == small_plane
    assert np.array_equal(back.values, f.values)
    assert meta["t"] == "0.5"
    assert path.read_text().startswith("# axes: r:-6.0:6.0:64,p:-6.0:6.0:64")


def test_complex_field_csv(tmp_path, small_plane):
    f = GridField(small_plane, np.exp(1j * small_plane.mesh("r")) * np.ones(small_plane.shape))
    back, _ = read_field_csv(write_field_csv(tmp_path / "c.csv", f))
    assert np.array_equal(back.values, f.values)

import os

import numpy as np
import pytest

from wecfarm import hydro
from wecfarm.hydro import Environment, FrequencyGrid, GeometryError, WecGeometry

ENV = Environment()
GRID = FrequencyGrid.default()


def random_geometries(rng, n):
    out = []
    while len(out) < n:
        r = rng.uniform(0.5, 10.0)
        ar = rng.uniform(0.2, 10.0)
        if 0.5 <= r / ar <= 20.0:
            out.append(WecGeometry(r, ar))
    return out


class TestGeometry:
    def test_draft_is_radius_over_slenderness(self):
        geom = WecGeometry(3.0, 6.0)
        assert geom.draft == pytest.approx(0.5)

    def test_rejects_out_of_box(self):
        with pytest.raises(GeometryError):
            WecGeometry(0.4, 1.0)
        with pytest.raises(GeometryError):
            WecGeometry(3.0, 11.0)

    def test_rejects_draft_bound(self):
        # radius 9 at slenderness 0.4 gives draft 22.5 m
        with pytest.raises(GeometryError):
            WecGeometry(9.0, 0.4)


class TestFrequencyGrid:
    def test_default_span_and_count(self):
        assert GRID.n == 200
        assert GRID.values[0] == 0.3
        assert GRID.values[-1] == 2.0

    def test_trapezoid_weights_sum_to_span(self):
        assert GRID.spacing.sum() == pytest.approx(1.7, rel=1e-12)
        assert GRID.spacing[0] == pytest.approx(0.5 * (GRID.values[1] - GRID.values[0]))

    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            FrequencyGrid([1.0, 0.5])


class TestDispersion:
    def test_pinned_values(self):
        # bisection oracle at 40 decimal digits
        assert hydro.solve_dispersion(0.3, ENV) == pytest.approx(
            0.014672424731899716, rel=1e-12
        )
        assert hydro.solve_dispersion(2.0, ENV) == pytest.approx(
            0.40774719673802243, rel=1e-12
        )

    def test_deep_water_asymptote(self):
        k = hydro.solve_dispersion(2.0, ENV)
        assert k == pytest.approx(4.0 / ENV.gravity, rel=1e-6)

    def test_shallow_water_asymptote(self):
        omega = 1e-3
        k = hydro.solve_dispersion(omega, ENV)
        assert k * np.sqrt(ENV.gravity * ENV.water_depth) / omega == pytest.approx(
            1.0, abs=1e-6
        )

    @pytest.mark.parametrize("depth", [10.0, 50.0, 200.0])
    def test_residual_bound_across_grid(self, depth):
        env = Environment(water_depth=depth)
        om = GRID.values
        k = hydro.solve_dispersion(om, env)
        resid = np.abs(om**2 - env.gravity * k * np.tanh(k * depth))
        assert np.all(resid < 1e-10 * om**2)

    def test_rejects_nonpositive_omega(self):
        with pytest.raises(ValueError):
            hydro.solve_dispersion(0.0, ENV)

    def test_group_velocity_limits(self):
        # deep water: vg -> g/(2 omega); shallow: vg -> sqrt(g h)
        assert hydro.group_velocity(2.0, ENV) == pytest.approx(
            ENV.gravity / 4.0, rel=1e-6
        )
        assert hydro.group_velocity(1e-3, ENV) == pytest.approx(
            np.sqrt(ENV.gravity * ENV.water_depth), rel=1e-4
        )


class TestSingleCoefficients:
    def test_pinned_point(self):
        # independent closed-form evaluation with bisection k, 40 digits
        geom = WecGeometry(3.0, 6.0)
        grid = FrequencyGrid([0.5, 1.0, 1.5])
        c = hydro.single_coefficients(geom, grid, ENV)
        assert c.excitation[1].real == pytest.approx(253761.36588629674, rel=1e-12)
        assert c.excitation[1].imag == 0.0
        assert c.damping[1] == pytest.approx(33252.493045349997, rel=1e-12)
        assert c.added_mass[1] == pytest.approx(10447.036199072222, rel=1e-12)

    def test_haskind_identity_across_design_box(self):
        rng = np.random.default_rng(42)
        om = GRID.values
        k = hydro.solve_dispersion(om, ENV)
        vg = hydro.group_velocity(om, ENV, k=k)
        for geom in random_geometries(rng, 1000):
            c = hydro.single_coefficients(geom, GRID, ENV)
            ratio = (
                c.damping
                * 4.0
                * ENV.water_density
                * ENV.gravity
                * vg
                / (k * np.abs(c.excitation) ** 2)
            )
            np.testing.assert_allclose(ratio, 1.0, rtol=1e-12)

    def test_long_wave_limit_recovers_hydrostatic_force(self):
        geom = WecGeometry(2.0, 4.0)
        grid = FrequencyGrid([1e-3, 2e-3])
        c = hydro.single_coefficients(geom, grid, ENV)
        f0 = ENV.water_density * ENV.gravity * np.pi * geom.radius**2
        assert c.excitation[0].real == pytest.approx(f0, rel=1e-3)

    def test_damping_nonnegative(self):
        rng = np.random.default_rng(1)
        for geom in random_geometries(rng, 50):
            c = hydro.single_coefficients(geom, GRID, ENV)
            assert np.all(c.damping >= 0)


class TestPairCoefficients:
    GEOM = WecGeometry(3.0, 6.0)

    def test_pinned_point(self):
        # independent mpmath evaluation of the pair kernels, 40 digits
        grid = FrequencyGrid([0.5, 1.0, 1.5])
        p = hydro.pair_coefficients(self.GEOM, 20.0, np.pi / 4, grid, ENV)
        assert p.added_mass[1, 0, 0] == pytest.approx(10730.042597312971, rel=1e-12)
        assert p.added_mass[1, 0, 1] == pytest.approx(-12249.503109115163, rel=1e-12)
        assert p.damping[1, 0, 0] == pytest.approx(30924.203984259265, rel=1e-12)
        assert p.damping[1, 0, 1] == pytest.approx(4801.400487016355, rel=1e-12)
        assert p.excitation[1, 0].real == pytest.approx(229628.77702842637, rel=1e-12)
        assert p.excitation[1, 0].imag == pytest.approx(7925.198121325491, rel=1e-12)
        assert p.excitation[1, 1].real == pytest.approx(37418.531426791773, rel=1e-12)
        assert p.excitation[1, 1].imag == pytest.approx(-226698.11977759148, rel=1e-12)

    def test_matrices_symmetric(self):
        p = hydro.pair_coefficients(self.GEOM, 25.0, 0.3, GRID, ENV)
        np.testing.assert_allclose(
            p.added_mass, np.swapaxes(p.added_mass, 1, 2), rtol=0, atol=1e-12
        )
        np.testing.assert_allclose(
            p.damping, np.swapaxes(p.damping, 1, 2), rtol=0, atol=1e-12
        )

    def test_damping_positive_semidefinite(self):
        rng = np.random.default_rng(9)
        for geom in random_geometries(rng, 100):
            sep = rng.uniform(2 * geom.radius + 0.1, 300.0)
            theta = rng.uniform(-np.pi, np.pi)
            p = hydro.pair_coefficients(geom, sep, theta, GRID, ENV)
            eig = np.linalg.eigvalsh(p.damping)
            trace = p.damping[:, 0, 0] + p.damping[:, 1, 1]
            assert np.all(eig[:, 0] >= -1e-9 * trace)

    def test_decoupling_at_large_phase_separation(self):
        # k l >= 500 across the whole grid
        k_min = hydro.solve_dispersion(GRID.values[0], ENV)
        sep = 500.0 / k_min
        single = hydro.single_coefficients(self.GEOM, GRID, ENV)
        p = hydro.pair_coefficients(self.GEOM, sep, 0.0, GRID, ENV)
        assert np.all(np.abs(p.damping[:, 0, 1]) < 1e-6 * single.damping)
        assert np.all(np.abs(p.added_mass[:, 0, 1]) < 1e-6 * single.added_mass)
        np.testing.assert_allclose(
            p.damping[:, 0, 0], single.damping, rtol=1e-6, atol=0
        )
        np.testing.assert_allclose(
            np.abs(p.excitation[:, 0]), np.abs(single.excitation), rtol=1e-6
        )

    def test_relabeling_symmetry(self):
        # swapping bodies is flipping the heading plus a frame translation
        rng = np.random.default_rng(21)
        k = hydro.solve_dispersion(GRID.values, ENV)
        for _ in range(20):
            sep = rng.uniform(7.0, 120.0)
            theta = rng.uniform(-np.pi, np.pi)
            a = hydro.pair_coefficients(self.GEOM, sep, theta, GRID, ENV)
            b = hydro.pair_coefficients(self.GEOM, sep, theta + np.pi, GRID, ENV)
            np.testing.assert_allclose(a.added_mass, b.added_mass, rtol=1e-12)
            np.testing.assert_allclose(a.damping, b.damping, rtol=1e-12)
            shift = np.exp(-1j * k * sep * np.cos(theta))
            np.testing.assert_allclose(
                a.excitation[:, [1, 0]],
                b.excitation * shift[:, None],
                rtol=1e-12,
            )

    def test_continuity_in_separation(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            sep = rng.uniform(10.0, 200.0)
            delta = 1e-7 * sep
            p0 = hydro.pair_coefficients(self.GEOM, sep, 0.1, GRID, ENV)
            p1 = hydro.pair_coefficients(self.GEOM, sep + delta, 0.1, GRID, ENV)
            scale = np.abs(p0.damping).max()
            assert np.abs(p1.damping - p0.damping).max() < 1e-5 * scale

    def test_overlap_rejected(self):
        with pytest.raises(GeometryError):
            hydro.pair_coefficients(self.GEOM, 5.9, 0.0, GRID, ENV)


def test_reference_provider_name_and_delegation():
    provider = hydro.ReferenceProvider()
    assert provider.name == "reference"
    c = provider.single(WecGeometry(1.0, 1.0), GRID, ENV)
    assert c.damping.shape == (GRID.n,)


def test_model_ledger_lists_every_constant():
    text = hydro.model_ledger_text()
    for token in ["0.5", "0.3", "0.25", "20 R", "J0(kl)", "Y0(kl)", "Haskind"]:
        assert token in text


def test_model_ledger_file_matches_package():
    root = os.path.join(os.path.dirname(__file__), "..")
    with open(os.path.join(root, "MODEL_LEDGER.txt")) as fh:
        assert fh.read() == hydro.model_ledger_text() + "\n"

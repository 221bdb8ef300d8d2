import numpy as np
import pytest

from wecfarm import hydro, mbe
from wecfarm.hydro import Environment, FrequencyGrid, ReferenceProvider, WecGeometry

ENV = Environment()
GRID = FrequencyGrid.default(count=60)
GEOM = WecGeometry(3.0, 6.0)
PROVIDER = ReferenceProvider()


class TestLayout:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            mbe.Layout(np.zeros((3, 3)))

    def test_rejects_coincident_devices(self):
        with pytest.raises(ValueError):
            mbe.Layout(np.array([[0.0, 0.0], [0.0, 0.0]]))

    def test_helpers(self):
        lay = mbe.Layout(np.array([[0.0, 0.0], [10.0, 5.0]]))
        assert lay.translated(1.0, -2.0).positions[1, 1] == 3.0
        assert lay.mirrored().positions[1, 1] == -5.0


class TestPairGeometry:
    def test_axis_aligned(self):
        lay = mbe.Layout(np.array([[0.0, 0.0], [10.0, 0.0]]))
        assert mbe.pair_geometry(lay, 0, 1) == (10.0, 0.0)

    def test_vertical(self):
        lay = mbe.Layout(np.array([[0.0, 0.0], [0.0, 10.0]]))
        sep, theta = mbe.pair_geometry(lay, 0, 1)
        assert sep == 10.0
        assert theta == pytest.approx(np.pi / 2)

    def test_three_four_five(self):
        lay = mbe.Layout(np.array([[3.0, 4.0], [0.0, 0.0]]))
        sep, theta = mbe.pair_geometry(lay, 0, 1)
        assert sep == pytest.approx(5.0)
        assert theta == pytest.approx(np.arctan2(-4.0, -3.0))

    def test_swap_rule(self):
        lay = mbe.Layout(np.array([[1.0, 2.0], [-4.0, 7.0]]))
        s_pq, t_pq = mbe.pair_geometry(lay, 0, 1)
        s_qp, t_qp = mbe.pair_geometry(lay, 1, 0)
        assert s_pq == s_qp
        assert (t_qp - t_pq) % (2 * np.pi) == pytest.approx(np.pi)

    def test_same_index_rejected(self):
        lay = mbe.Layout(np.array([[0.0, 0.0], [1.0, 1.0]]))
        with pytest.raises(IndexError):
            mbe.pair_geometry(lay, 1, 1)


class TestComposeFarm:
    def test_single_device_reduces_to_isolated(self):
        lay = mbe.Layout(np.array([[0.0, 0.0]]))
        farm = mbe.compose_farm(PROVIDER, GEOM, lay, GRID, ENV)
        single = PROVIDER.single(GEOM, GRID, ENV)
        assert np.array_equal(farm.added_mass[:, 0, 0], single.added_mass)
        assert np.array_equal(farm.damping[:, 0, 0], single.damping)
        assert np.array_equal(farm.excitation[:, 0], single.excitation)

    def test_two_devices_equal_pair_query_bitwise(self):
        lay = mbe.Layout(np.array([[0.0, 0.0], [24.0, 18.0]]))
        sep, theta = mbe.pair_geometry(lay, 0, 1)
        farm = mbe.compose_farm(PROVIDER, GEOM, lay, GRID, ENV)
        pair = PROVIDER.pair(GEOM, sep, theta, GRID, ENV)
        assert np.array_equal(farm.added_mass, pair.added_mass)
        assert np.array_equal(farm.damping, pair.damping)
        assert np.array_equal(farm.excitation, pair.excitation)

    def test_three_devices_match_term_summation(self):
        # equilateral triangle, side 30; brute-force sum of the
        # second-order terms assembled outside compose_farm
        side = 30.0
        pos = np.array(
            [[0.0, 0.0], [side, 0.0], [side / 2, side * np.sqrt(3) / 2]]
        )
        lay = mbe.Layout(pos)
        farm = mbe.compose_farm(PROVIDER, GEOM, lay, GRID, ENV)

        single = PROVIDER.single(GEOM, GRID, ENV)
        k = hydro.solve_dispersion(GRID.values, ENV)
        n = GRID.n
        added = np.zeros((n, 3, 3))
        damping = np.zeros((n, 3, 3))
        excitation = np.zeros((n, 3), dtype=np.complex128)
        for p in range(3):
            phase = np.exp(-1j * k * pos[p, 0])
            added[:, p, p] = single.added_mass
            damping[:, p, p] = single.damping
            excitation[:, p] = single.excitation * phase
            for q in range(3):
                if q == p:
                    continue
                dx, dy = pos[q] - pos[p]
                pc = PROVIDER.pair(
                    GEOM, np.hypot(dx, dy), np.arctan2(dy, dx), GRID, ENV
                )
                added[:, p, p] += pc.added_mass[:, 0, 0] - single.added_mass
                damping[:, p, p] += pc.damping[:, 0, 0] - single.damping
                excitation[:, p] += (pc.excitation[:, 0] - single.excitation) * phase
                if q > p:
                    added[:, p, q] = added[:, q, p] = pc.added_mass[:, 0, 1]
                    damping[:, p, q] = damping[:, q, p] = pc.damping[:, 0, 1]

        scale_a = np.abs(added).max()
        scale_f = np.abs(excitation).max()
        np.testing.assert_allclose(farm.added_mass, added, rtol=0, atol=1e-12 * scale_a)
        np.testing.assert_allclose(
            farm.damping, damping, rtol=0, atol=1e-12 * np.abs(damping).max()
        )
        np.testing.assert_allclose(
            farm.excitation, excitation, rtol=0, atol=1e-12 * scale_f
        )

    def test_matrices_symmetric(self):
        rng = np.random.default_rng(0)
        pos = np.vstack([[0.0, 0.0], rng.uniform(20, 150, size=(4, 2))])
        farm = mbe.compose_farm(PROVIDER, GEOM, mbe.Layout(pos), GRID, ENV)
        np.testing.assert_allclose(
            farm.added_mass, np.swapaxes(farm.added_mass, 1, 2), atol=1e-12
        )
        np.testing.assert_allclose(
            farm.damping, np.swapaxes(farm.damping, 1, 2), atol=1e-12
        )

    def test_translation_multiplies_excitation_by_common_phase(self):
        rng = np.random.default_rng(4)
        pos = np.vstack([[0.0, 0.0], rng.uniform(15, 120, size=(3, 2))])
        lay = mbe.Layout(pos)
        dx, dy = 37.5, -12.0
        farm0 = mbe.compose_farm(PROVIDER, GEOM, lay, GRID, ENV)
        farm1 = mbe.compose_farm(PROVIDER, GEOM, lay.translated(dx, dy), GRID, ENV)
        # translated coordinates reconstruct (l, theta) with ~1e-12 m of
        # rounding, so coefficient entries can move by ~1e-11 of the
        # matrix scale; the power pipeline stays at 1e-12
        np.testing.assert_allclose(
            farm1.added_mass,
            farm0.added_mass,
            rtol=0,
            atol=1e-11 * np.abs(farm0.added_mass).max(),
        )
        np.testing.assert_allclose(
            farm1.damping,
            farm0.damping,
            rtol=0,
            atol=1e-11 * np.abs(farm0.damping).max(),
        )
        k = hydro.solve_dispersion(GRID.values, ENV)
        shift = np.exp(-1j * k * dx)
        np.testing.assert_allclose(
            farm1.excitation,
            farm0.excitation * shift[:, None],
            rtol=1e-12,
        )
        np.testing.assert_allclose(
            np.abs(farm1.excitation), np.abs(farm0.excitation), rtol=1e-12
        )

    def test_mirror_invariance(self):
        rng = np.random.default_rng(8)
        pos = np.vstack([[0.0, 0.0], rng.uniform(-100, 100, size=(4, 2))])
        lay = mbe.Layout(pos)
        farm0 = mbe.compose_farm(PROVIDER, GEOM, lay, GRID, ENV)
        farm1 = mbe.compose_farm(PROVIDER, GEOM, lay.mirrored(), GRID, ENV)
        np.testing.assert_allclose(farm1.added_mass, farm0.added_mass, rtol=1e-12)
        np.testing.assert_allclose(farm1.damping, farm0.damping, rtol=1e-12)
        np.testing.assert_allclose(farm1.excitation, farm0.excitation, rtol=1e-12)

    def test_permutation_consistency(self):
        rng = np.random.default_rng(13)
        pos = np.vstack([[0.0, 0.0], rng.uniform(18, 90, size=(3, 2))])
        perm = np.array([2, 0, 3, 1])
        farm0 = mbe.compose_farm(PROVIDER, GEOM, mbe.Layout(pos), GRID, ENV)
        farm1 = mbe.compose_farm(PROVIDER, GEOM, mbe.Layout(pos[perm]), GRID, ENV)
        np.testing.assert_allclose(
            farm1.added_mass, farm0.added_mass[:, perm][:, :, perm], rtol=1e-12
        )
        np.testing.assert_allclose(
            farm1.damping, farm0.damping[:, perm][:, :, perm], rtol=1e-12
        )
        np.testing.assert_allclose(farm1.excitation, farm0.excitation[:, perm], rtol=1e-12)

    def test_far_separation_decouples(self):
        k_min = hydro.solve_dispersion(GRID.values[0], ENV)
        sep = 520.0 / k_min
        pos = np.array([[0.0, 0.0], [sep, 0.0], [0.0, 2 * sep]])
        farm = mbe.compose_farm(PROVIDER, GEOM, mbe.Layout(pos), GRID, ENV)
        single = PROVIDER.single(GEOM, GRID, ENV)
        assert np.abs(farm.damping[:, 0, 1]).max() < 1e-6 * single.damping.min()
        np.testing.assert_allclose(
            farm.added_mass[:, 0, 0], single.added_mass, rtol=1e-6
        )
        np.testing.assert_allclose(farm.damping[:, 1, 1], single.damping, rtol=1e-6)

    def test_pair_cache_dedupes_symmetric_queries(self):
        calls = []

        class CountingProvider(ReferenceProvider):
            def pair(self, geom, separation, heading_angle, grid, env):
                calls.append((separation, heading_angle))
                return super().pair(geom, separation, heading_angle, grid, env)

        # both off-origin devices sit at the same (l, theta) from device 0
        pos = np.array([[0.0, 0.0], [40.0, 0.0], [80.0, 0.0]])
        mbe.compose_farm(CountingProvider(), GEOM, mbe.Layout(pos), GRID, ENV)
        assert len(calls) == 2  # (l=40, 0) shared by two pairs, plus (l=80, 0)

import json

import numpy as np
import pytest

from salsa.channel import (ArrayGeometry, ChannelProfile, ClusterParams, assemble_total,
                           default_profile, generate_channel, load_profile, steering_vector,
                           to_frequency)

from conftest import crandn


class TestSteering:
    def test_boresight(self):
        np.testing.assert_allclose(steering_vector(ArrayGeometry(8, 8), 0.0, 0.0), np.ones(64))

    def test_two_element(self):
        v = steering_vector(ArrayGeometry(1, 2), 0.0, np.pi / 2)
        np.testing.assert_allclose(v, [1, -1], atol=1e-15)

    def test_unit_modulus(self, rng):
        for _ in range(10):
            v = steering_vector(ArrayGeometry(8, 8), rng.uniform(-np.pi, np.pi),
                                rng.uniform(0, np.pi))
            assert np.linalg.norm(v) ** 2 == pytest.approx(64)

    def test_upa_is_kronecker_of_column_and_row_responses(self):
        az, el = 0.3, 0.7
        v = steering_vector(ArrayGeometry(4, 3), az, el)
        col = steering_vector(ArrayGeometry(1, 3), az, el)
        row = steering_vector(ArrayGeometry(4, 1), az, el)
        np.testing.assert_allclose(v, np.kron(col, row), rtol=1e-14)


def _single_ray(delay=0.0):
    return [ClusterParams(delay=delay, power=1.0, aoa=0.4, zoa=0.9, aod=-1.0, zod=0.5,
                          angular_spread=0.0, rays=1)]


class TestGenerate:
    def test_flat_single_tap(self):
        ch = generate_channel(_single_ray(0.0), 16, rng_seed=3)
        assert ch.slices.shape == (16, 64, 4)
        for k in range(1, 16):
            np.testing.assert_allclose(ch.slices[k], ch.slices[0], rtol=1e-12, atol=1e-13)
        s = np.linalg.svd(ch.slices[0], compute_uv=False)
        assert s[1] <= 1e-12 * s[0]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            generate_channel([], 16, 0)
        with pytest.raises(ValueError):
            generate_channel(default_profile(), 0, 0)

    def test_deterministic(self):
        a = generate_channel(default_profile(), 16, 42)
        b = generate_channel(default_profile(), 16, 42)
        assert np.array_equal(a.taps, b.taps) and np.array_equal(a.slices, b.slices)
        c = generate_channel(default_profile(), 16, 43)
        assert not np.array_equal(a.slices, c.slices)

    def test_slices_are_dft_of_taps(self):
        ch = generate_channel(default_profile(), 16, 7)
        np.testing.assert_allclose(to_frequency(ch.taps, 16, ch.tap_offset), ch.slices)
        assert ch.total.shape == (64, 64)

    def test_normalization(self):
        prof = default_profile()
        energy = [np.linalg.norm(generate_channel(prof, 16, 42 + t).slices) ** 2
                  for t in range(1000)]
        assert np.mean(energy) == pytest.approx(64 * 4 * 16, rel=0.05)

    def test_high_rank(self):
        prof = default_profile()
        ranks = []
        for t in range(20):
            ch = generate_channel(prof, 16, 100 + t)
            for h in ch.slices:
                s = np.linalg.svd(h, compute_uv=False)
                ranks.append(int(np.sum(s > 1e-6 * s[0])))
        assert np.median(ranks) == 4


class TestFrequency:
    def test_single_tap(self, rng):
        taps = np.zeros((3, 2, 5), dtype=complex)
        taps[..., 0] = crandn(rng, 3, 2)
        out = to_frequency(taps, 8)
        for k in range(8):
            np.testing.assert_allclose(out[k], taps[..., 0])

    def test_shifted_impulse(self):
        taps = np.zeros((1, 1, 4))
        taps[0, 0, 1] = 1.0
        np.testing.assert_allclose(to_frequency(taps, 4)[:, 0, 0], [1, -1j, -1, 1j], atol=1e-15)

    def test_parseval(self, rng):
        taps = crandn(rng, 4, 3, 10)
        out = to_frequency(taps, 16)
        assert np.sum(np.abs(out) ** 2) == pytest.approx(16 * np.sum(np.abs(taps) ** 2), rel=1e-10)

    def test_matches_fft_when_short(self, rng):
        taps = crandn(rng, 2, 2, 6)
        np.testing.assert_allclose(to_frequency(taps, 8),
                                   np.moveaxis(np.fft.fft(taps, n=8, axis=-1), -1, 0), atol=1e-12)


class TestAssemble:
    def test_single(self, rng):
        h = crandn(rng, 4, 2)
        np.testing.assert_array_equal(assemble_total([h]), h)

    def test_layout_and_energy(self, rng):
        slices = crandn(rng, 5, 6, 3)
        tot = assemble_total(slices)
        assert tot.shape == (6, 15)
        for k in range(5):
            for u in range(3):
                np.testing.assert_array_equal(tot[:, u + k * 3], slices[k][:, u])
        assert np.linalg.norm(tot) ** 2 == pytest.approx(np.sum(np.abs(slices) ** 2))

    def test_ragged(self, rng):
        with pytest.raises(ValueError):
            assemble_total([crandn(rng, 2, 2), crandn(rng, 3, 2)])


class TestProfile:
    def test_default(self):
        prof = default_profile()
        assert len(prof.clusters) == 8
        assert all(c.rays == 20 for c in prof.clusters)
        assert prof.rms_delay_spread() == pytest.approx(100e-9, rel=1e-3)
        assert prof.bs_array.size == 64 and prof.ue_array.size == 4
        assert prof.sampling_rate == 30.72e6

    def test_json_roundtrip(self, tmp_path):
        doc = {"name": "two", "sampling_rate": 30.72e6,
               "bs_array": {"rows": 2, "cols": 2}, "ue_array": {"rows": 1, "cols": 2},
               "clusters": [{"delay": 0.0, "power": 1.0, "aoa": 0.1, "zoa": 0.5,
                             "aod": 0.2, "zod": 0.3},
                            {"delay": 5e-8, "power": 0.5, "aoa": -0.1, "zoa": 0.8,
                             "aod": 1.2, "zod": 0.6, "rays": 3}]}
        path = tmp_path / "p.json"
        path.write_text(json.dumps(doc))
        prof = load_profile(path)
        assert isinstance(prof, ChannelProfile) and prof.name == "two"
        ch = generate_channel(prof, 8, 0)
        assert ch.slices.shape == (8, 4, 2)

    def test_cluster_validation(self):
        with pytest.raises(ValueError):
            ClusterParams(delay=-1.0, power=1.0, aoa=0, zoa=0, aod=0, zod=0)
        with pytest.raises(ValueError):
            ClusterParams(delay=0.0, power=-1.0, aoa=0, zoa=0, aod=0, zod=0)

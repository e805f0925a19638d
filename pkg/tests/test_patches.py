import numpy as np
import pytest

from ipsim.analog import HardwareProfile, SumMode, charge_share_sum, pwm_multiply
from ipsim.frontend import AnalogPixelArray
from ipsim.geometry import SelectionMask, build_tiling
from ipsim.patches import (
    Fidelity,
    Neighborhood,
    WeightBank,
    attention_layer,
    project_patch,
    run_frame,
    strike_columns,
)

PROFILE = HardwareProfile()


class TestBuildTiling:
    def test_exact_tiling(self):
        t = build_tiling(64, 64, 32, 32)
        assert t.n_patches == 4
        assert t.patches == ((0, 0), (32, 0), (0, 32), (32, 32))

    def test_1080p_with_dropped_band(self):
        t = build_tiling(1920, 1080, 32, 32)
        assert t.n_patches == 60 * 33 == 1980

    def test_offset_origin_truncates_edges(self):
        t = build_tiling(16, 16, 8, 8, origin_x=4, origin_y=4)
        assert t.n_patches == 1
        assert t.patches == ((4, 4),)

    def test_enumeration_oracle(self):
        t = build_tiling(40, 24, 8, 8, origin_x=4, origin_y=0)
        expected = [
            (4 + ix * 8, iy * 8)
            for iy in range(3)
            for ix in range(4)  # 40 - 4 = 36 -> 4 full patches
        ]
        assert list(t.patches) == expected
        # non-overlap and containment
        seen = set()
        for x0, y0 in t.patches:
            assert 0 <= x0 and x0 + 8 <= 40 and 0 <= y0 and y0 + 8 <= 24
            for r in range(y0, y0 + 8):
                for c in range(x0, x0 + 8):
                    assert (r, c) not in seen
                    seen.add((r, c))

    def test_rectangular_patches_allowed(self):
        t = build_tiling(64, 64, 8, 32)
        assert t.n_patches == 8 * 2

    @pytest.mark.parametrize("pw,ph", [(7, 8), (8, 12), (40, 8)])
    def test_invalid_patch_size(self, pw, ph):
        with pytest.raises(ValueError):
            build_tiling(64, 64, pw, ph)

    def test_invalid_origin(self):
        with pytest.raises(ValueError):
            build_tiling(64, 64, 8, 8, origin_x=2)
        with pytest.raises(ValueError):
            build_tiling(64, 64, 8, 8, origin_y=-4)

    def test_sensor_smaller_than_patch(self):
        with pytest.raises(ValueError):
            build_tiling(16, 16, 32, 32)


def zero_masked(x_rgb, pattern, patch_w, patch_h):
    """Zero the two unsampled channels at every pixel, then flatten channel-minor."""
    from ipsim.patches import bayer_channel_of_pixel

    ch = bayer_channel_of_pixel(patch_w, patch_h, pattern)
    flat = x_rgb.reshape(patch_w * patch_h, 3).copy()
    for p in range(flat.shape[0]):
        for c in range(3):
            if c != ch[p]:
                flat[p, c] = 0.0
    return flat.ravel()


def mosaic_flat(x_rgb, pattern, patch_w, patch_h):
    from ipsim.patches import bayer_channel_of_pixel

    ch = bayer_channel_of_pixel(patch_w, patch_h, pattern)
    flat = x_rgb.reshape(patch_w * patch_h, 3)
    return flat[np.arange(flat.shape[0]), ch]


class TestStrikeColumns:
    def test_identity_selector_2x2_rggb(self):
        a = np.eye(12)
        reduced = strike_columns(a, 2, 2, "RGGB")
        # pixel order (0,0),(0,1),(1,0),(1,1) -> channels R,G,G,B -> columns 0,4,7,11
        expected_cols = [0, 4, 7, 11]
        np.testing.assert_array_equal(reduced, a[:, expected_cols])

    def test_gray_input_identity(self):
        rng = np.random.default_rng(31)
        a = rng.normal(size=(3, 2 * 2 * 3))
        reduced = strike_columns(a, 2, 2, "RGGB")
        v = 0.42
        x = np.full((2, 2, 3), v)
        lhs = reduced @ mosaic_flat(x, "RGGB", 2, 2)
        rhs = a @ zero_masked(x, "RGGB", 2, 2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    @pytest.mark.parametrize("pattern", ["RGGB", "BGGR", "GRBG", "GBRG", "MONO"])
    def test_equivalence_with_zero_mask_oracle(self, pattern):
        rng = np.random.default_rng(32)
        a = rng.normal(size=(5, 4 * 4 * 3))
        reduced = strike_columns(a, 4, 4, pattern)
        for _ in range(10):
            x = rng.uniform(size=(4, 4, 3))
            lhs = reduced @ mosaic_flat(x, pattern, 4, 4)
            rhs = a @ zero_masked(x, pattern, 4, 4)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_column_count_mismatch(self):
        with pytest.raises(ValueError):
            strike_columns(np.zeros((2, 10)), 2, 2, "RGGB")

    def test_from_rgb_bank_records_source(self):
        rng = np.random.default_rng(33)
        a = rng.normal(size=(4, 8 * 8 * 3))
        bank = WeightBank.from_rgb(a, 8, 8, "RGGB", np.zeros(4))
        assert bank.source_rgb is not None
        assert bank.columns == 64
        np.testing.assert_allclose(bank.raw_weights, strike_columns(a, 8, 8, "RGGB"), atol=1e-12)


class TestWeightBank:
    def test_normalization(self):
        raw = np.array([[0.5, -2.0], [1.0, 0.25]])
        bank = WeightBank.from_raw(raw, np.zeros(2))
        assert bank.scale == 2.0
        assert np.abs(bank.weights).max() == 1.0
        np.testing.assert_allclose(bank.raw_weights, raw)

    def test_all_zero_weights(self):
        bank = WeightBank.from_raw(np.zeros((3, 4)), np.ones(3))
        assert bank.scale == 1.0
        np.testing.assert_array_equal(bank.weights, np.zeros((3, 4)))

    def test_undersized_weights_scaled_up(self):
        bank = WeightBank.from_raw(np.full((1, 4), 0.25), np.zeros(1))
        assert bank.scale == 0.25
        np.testing.assert_array_equal(bank.weights, np.ones((1, 4)))

    def test_invalid_shapes(self):
        with pytest.raises(ValueError):
            WeightBank(np.zeros(4), np.zeros(1))
        with pytest.raises(ValueError):
            WeightBank(np.zeros((2, 4)), np.zeros(3))
        with pytest.raises(ValueError):
            WeightBank(np.full((1, 2), 1.5), np.zeros(1))


class TestProjectPatch:
    def test_zero_weights_give_reference(self):
        bank = WeightBank(np.zeros((5, 16)), np.zeros(5))
        out = project_patch(np.random.default_rng(34).uniform(size=(4, 4)), bank, PROFILE)
        np.testing.assert_array_equal(out, np.full(5, PROFILE.v_r))

    def test_hand_dot_product(self):
        bank = WeightBank(np.ones((1, 4)), np.zeros(1))
        out = project_patch(np.full((2, 2), 0.5), bank, HardwareProfile(v_r=1.0))
        assert out[0] == pytest.approx(1.5, abs=1e-15)

    def test_ideal_matches_matmul_oracle(self):
        rng = np.random.default_rng(35)
        pixels = rng.uniform(size=(8, 8))
        bank = WeightBank.from_raw(rng.uniform(-1, 1, size=(16, 64)), rng.normal(size=16))
        out = project_patch(pixels, bank, PROFILE, Fidelity.IDEAL)
        oracle = PROFILE.v_r + (bank.weights * pixels.ravel()).sum(axis=1) / 64
        np.testing.assert_allclose(out, oracle, rtol=1e-12)

    def test_analog_high_precision_matches_ideal(self):
        rng = np.random.default_rng(36)
        pixels = rng.uniform(size=(8, 8))
        bank = WeightBank.from_raw(rng.uniform(-1, 1, size=(8, 64)), np.zeros(8))
        profile = HardwareProfile.ideal()
        analog = project_patch(pixels, bank, profile, Fidelity.ANALOG)
        ideal = project_patch(pixels, bank, profile, Fidelity.IDEAL)
        np.testing.assert_allclose(analog, ideal, atol=1e-6)

    def test_analog_default_rms_error_bound(self):
        # Per-feature RMS error under 6-bit ENOB noise plus 8-bit quantizers
        # stays below twice the raw noise sigma (charge sharing averages it).
        rng = np.random.default_rng(37)
        bank = WeightBank.from_raw(rng.uniform(-1, 1, size=(4, 64)), np.zeros(4))
        errs = []
        for k in range(1000):
            pixels = rng.uniform(size=(8, 8))
            a = project_patch(pixels, bank, PROFILE, Fidelity.ANALOG, patch_index=k)
            i = project_patch(pixels, bank, PROFILE, Fidelity.IDEAL)
            errs.append(a - i)
        rms = float(np.sqrt(np.mean(np.square(errs))))
        assert rms <= 2 * PROFILE.v_sat / 2 ** 6 / np.sqrt(12)

    def test_analog_composes_primitives(self):
        # The vectorized path must equal composing the scalar primitives.
        rng = np.random.default_rng(38)
        pixels = rng.uniform(size=(2, 2))
        bank = WeightBank.from_raw(rng.uniform(-1, 1, size=(3, 4)), np.zeros(3))
        profile = HardwareProfile(noise_seed=99)
        mode = SumMode.passive(5e-6)
        got = project_patch(pixels, bank, profile, Fidelity.ANALOG, sum_mode=mode,
                            frame=1, patch_index=7)
        flat = pixels.ravel()
        for v in range(bank.m):
            charges = [
                pwm_multiply(flat[i], bank.weights[v, i], profile,
                             frame=1, patch=7, vector=v, pixel=i)
                for i in range(4)
            ]
            expected = profile.v_r + charge_share_sum(charges, mode, profile)
            assert got[v] == expected

    def test_combining_four_8x8_equals_16x16(self):
        rng = np.random.default_rng(39)
        pixels = rng.uniform(size=(16, 16))
        w16 = rng.uniform(-1, 1, size=(6, 256))
        bank16 = WeightBank(w16, np.zeros(6))
        direct = project_patch(pixels, bank16, PROFILE, Fidelity.IDEAL)
        # Split into quadrants; assemble each sub-bank from the same weights.
        combined = np.zeros(6)
        w_grid = w16.reshape(6, 16, 16)
        quads = [(0, 0), (0, 8), (8, 0), (8, 8)]
        sub_outs = []
        for r0, c0 in quads:
            sub_bank = WeightBank(w_grid[:, r0:r0 + 8, c0:c0 + 8].reshape(6, 64), np.zeros(6))
            sub_outs.append(
                project_patch(pixels[r0:r0 + 8, c0:c0 + 8], sub_bank, PROFILE, Fidelity.IDEAL)
            )
        # Connecting the four patches shares charge over all 256 caps: the
        # combined output is v_r plus the mean of the per-patch sums.
        combined = PROFILE.v_r + np.mean([s - PROFILE.v_r for s in sub_outs], axis=0)
        np.testing.assert_allclose(combined, direct, rtol=1e-12, atol=1e-14)

    def test_dimension_mismatch(self):
        bank = WeightBank(np.zeros((2, 16)), np.zeros(2))
        with pytest.raises(ValueError):
            project_patch(np.zeros((3, 3)), bank, PROFILE)

    def test_invalid_pixels_rejected(self):
        bank = WeightBank(np.zeros((2, 4)), np.zeros(2))
        with pytest.raises(ValueError):
            project_patch(np.zeros((2, 2)), bank, PROFILE, valid=np.array([[True, False], [True, True]]))


def _frame(rng, h=32, w=32):
    return AnalogPixelArray(rng.uniform(size=(h, w)), np.ones((h, w), dtype=bool))


class TestRunFrame:
    def setup_method(self):
        self.rng = np.random.default_rng(40)
        self.tiling = build_tiling(32, 32, 16, 16)
        self.bank = WeightBank.from_raw(self.rng.uniform(-1, 1, size=(8, 256)),
                                        self.rng.normal(size=8))
        self.arr = _frame(self.rng)

    def test_full_mask_feature_count(self):
        out = run_frame(self.arr, self.tiling, self.bank, SelectionMask.full(self.tiling), PROFILE)
        assert out.features.shape == (4, 8)
        np.testing.assert_array_equal(out.patch_indices, [0, 1, 2, 3])

    def test_empty_mask(self):
        out = run_frame(self.arr, self.tiling, self.bank, SelectionMask.none(self.tiling), PROFILE)
        assert out.features.shape == (0, 8)
        assert out.n_selected == 0

    def test_single_selection_matches_project_patch(self):
        mask = SelectionMask(np.array([False, False, True, False]), self.tiling)
        out = run_frame(self.arr, self.tiling, self.bank, mask, PROFILE)
        direct = project_patch(self.arr.voltages[self.tiling.slices(2)], self.bank, PROFILE)
        np.testing.assert_array_equal(out.features[0], direct)
        assert out.patch_indices[0] == 2

    def test_serial_equals_parallel_with_noise(self):
        mask = SelectionMask.full(self.tiling)
        serial = run_frame(self.arr, self.tiling, self.bank, mask, PROFILE,
                           Fidelity.ANALOG, workers=1)
        threaded = run_frame(self.arr, self.tiling, self.bank, mask, PROFILE,
                             Fidelity.ANALOG, workers=4)
        np.testing.assert_array_equal(serial.features, threaded.features)

    def test_env_var_controls_workers(self, monkeypatch):
        monkeypatch.setenv("IPSIM_THREADS", "3")
        mask = SelectionMask.full(self.tiling)
        out = run_frame(self.arr, self.tiling, self.bank, mask, PROFILE, Fidelity.ANALOG)
        ref = run_frame(self.arr, self.tiling, self.bank, mask, PROFILE, Fidelity.ANALOG, workers=1)
        np.testing.assert_array_equal(out.features, ref.features)

    def test_mask_from_other_tiling_rejected(self):
        other = build_tiling(32, 32, 8, 8)
        with pytest.raises(ValueError):
            run_frame(self.arr, self.tiling, self.bank, SelectionMask.full(other), PROFILE)

    def test_wrong_bank_width_rejected(self):
        bank = WeightBank(np.zeros((2, 64)), np.zeros(2))
        with pytest.raises(ValueError):
            run_frame(self.arr, self.tiling, bank, SelectionMask.full(self.tiling), PROFILE)

    def test_dumped_selected_patch_rejected(self):
        bad = AnalogPixelArray(self.arr.voltages, np.zeros((32, 32), dtype=bool))
        with pytest.raises(ValueError):
            run_frame(bad, self.tiling, self.bank, SelectionMask.full(self.tiling), PROFILE)


class TestAttentionLayer:
    def setup_method(self):
        rng = np.random.default_rng(41)
        self.tiling = build_tiling(32, 32, 16, 16)
        self.bank = WeightBank.from_raw(rng.uniform(-1, 1, size=(4, 256)), np.zeros(4))
        arr = _frame(rng)
        self.features = run_frame(arr, self.tiling, self.bank,
                                  SelectionMask.full(self.tiling), PROFILE)

    def test_identity_attention(self):
        nbs = [Neighborhood(int(p), (int(p),), (1.0,)) for p in self.features.patch_indices]
        out = attention_layer(self.features, nbs, PROFILE)
        np.testing.assert_allclose(out.features, self.features.features, atol=1e-15)

    def test_zero_coefficients(self):
        nbs = [Neighborhood(int(p), (int(p),), (0.0,)) for p in self.features.patch_indices]
        out = attention_layer(self.features, nbs, PROFILE)
        np.testing.assert_array_equal(out.features, np.zeros_like(self.features.features))

    def test_three_member_neighborhood(self):
        nb = Neighborhood(0, (0, 1, 2), (0.3, 1.0, -6.0))
        out = attention_layer(self.features, [nb], PROFILE)
        f = self.features.features
        expected = (0.25 * f[0] + 1.0 * f[1] + (-8.0) * f[2]) / 3.0
        np.testing.assert_allclose(out.features[0], expected, rtol=1e-12)

    def test_analog_applies_droop(self):
        nb = Neighborhood(0, (0,), (1.0,))
        mode = SumMode.passive(10e-6)
        out = attention_layer(self.features, [nb], PROFILE, Fidelity.ANALOG, mode)
        np.testing.assert_allclose(
            out.features[0], self.features.features[0] * mode.droop_factor(PROFILE), rtol=1e-12
        )

    def test_dangling_reference_rejected(self):
        with pytest.raises(ValueError):
            attention_layer(self.features, [Neighborhood(0, (99,), (1.0,))], PROFILE)

    def test_empty_neighborhood_rejected(self):
        with pytest.raises(ValueError):
            Neighborhood(0, (), ())

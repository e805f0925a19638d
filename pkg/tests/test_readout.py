import numpy as np
import pytest

from ipsim.analog import HardwareProfile
from ipsim.config import RunConfig
from ipsim.frontend import AnalogPixelArray
from ipsim.geometry import SelectionMask, build_tiling
from ipsim.patches import AnalogFeatureFrame, Fidelity, WeightBank, run_frame
from ipsim.readout import AdcConfig, adc_convert, assemble_features, dequantize, digital_out


class TestAdcConvert:
    def test_range_bottom(self):
        assert adc_convert(0.0, AdcConfig(8, 0.0, 2.0)) == 0

    def test_range_top(self):
        assert adc_convert(2.0, AdcConfig(8, 0.0, 2.0)) == 255

    def test_midpoint_rounds_half_up(self):
        # 1.0/2.0 * 255 = 127.5 -> 128 under round-half-up
        assert adc_convert(1.0, AdcConfig(8, 0.0, 2.0)) == 128

    def test_out_of_range_clamps(self):
        cfg = AdcConfig(8, 0.0, 2.0)
        assert adc_convert(-5.0, cfg) == 0
        assert adc_convert(9.0, cfg) == 255

    def test_monotone(self):
        cfg = AdcConfig(6, -1.0, 1.0)
        vs = np.sort(np.random.default_rng(50).uniform(-1.2, 1.2, size=300))
        codes = adc_convert(vs, cfg)
        assert (np.diff(codes) >= 0).all()

    def test_roundtrip_within_half_lsb(self):
        cfg = AdcConfig(10, 0.0, 2.0)
        vs = np.random.default_rng(51).uniform(0.0, 2.0, size=500)
        back = dequantize(adc_convert(vs, cfg), cfg)
        assert np.abs(back - vs).max() <= cfg.lsb / 2 + 1e-15

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            AdcConfig(0, 0.0, 1.0)
        with pytest.raises(ValueError):
            AdcConfig(8, 1.0, 1.0)


class TestDigitalOut:
    def test_zero_weighted_sum_gives_bias(self):
        cfg = AdcConfig(24, 0.0, 2.0)
        code = adc_convert(1.0, cfg)  # output sitting exactly at v_r
        out = digital_out(code, cfg, v_r=1.0, bias=0.1, scale=1.0)
        assert out == pytest.approx(0.1, abs=2 * cfg.lsb)

    def test_reference_subtraction(self):
        cfg = AdcConfig(24, 0.0, 2.0)
        out = digital_out(adc_convert(1.5, cfg), cfg, v_r=1.0, bias=0.0, scale=1.0)
        assert out == pytest.approx(0.5, abs=cfg.lsb)

    def test_scale_reapplied(self):
        cfg = AdcConfig(24, 0.0, 2.0)
        out = digital_out(adc_convert(1.5, cfg), cfg, v_r=1.0, bias=0.0, scale=3.0)
        assert out == pytest.approx(1.5, abs=3 * cfg.lsb)

    def test_code_out_of_range_rejected(self):
        cfg = AdcConfig(8, 0.0, 2.0)
        with pytest.raises(ValueError):
            digital_out(256, cfg, 1.0, 0.0)
        with pytest.raises(ValueError):
            digital_out(-1, cfg, 1.0, 0.0)

    def test_end_to_end_within_one_lsb(self):
        rng = np.random.default_rng(52)
        cfg = AdcConfig(24, 0.0, 2.0)
        profile = HardwareProfile()
        bank = WeightBank.from_raw(rng.uniform(-1, 1, size=(16, 64)), rng.normal(size=16))
        pixels = rng.uniform(size=(8, 8))
        analog = profile.v_r + bank.weights @ pixels.ravel() / 64
        got = np.array([
            digital_out(adc_convert(a, cfg), cfg, profile.v_r, bank.bias[v], bank.scale)
            for v, a in enumerate(analog)
        ])
        oracle = bank.bias + bank.scale * (bank.weights * pixels.ravel()).sum(axis=1) / 64
        assert np.abs(got - oracle).max() <= bank.scale * cfg.lsb


class TestAssembleFeatures:
    def test_empty_frame(self):
        bank = WeightBank(np.zeros((3, 4)), np.zeros(3))
        frame = AnalogFeatureFrame(np.empty(0, dtype=np.intp), np.empty((0, 3)), tiling=None)
        out = assemble_features(frame, AdcConfig(), bank, HardwareProfile())
        assert out.features.shape == (0, 3)
        assert out.n_selected == 0

    def test_single_patch_ordering(self):
        bank = WeightBank(np.zeros((2, 4)), np.array([0.5, -0.5]))
        frame = AnalogFeatureFrame(np.array([7]), np.array([[1.0, 1.0]]), tiling=None)
        out = assemble_features(frame, AdcConfig(24, 0.0, 2.0), bank, HardwareProfile())
        assert out.features.shape == (1, 2)
        assert out.patch_indices[0] == 7
        np.testing.assert_allclose(out.features[0], [0.5, -0.5], atol=1e-6)

    def test_keep_codes(self):
        bank = WeightBank(np.zeros((1, 4)), np.zeros(1))
        frame = AnalogFeatureFrame(np.array([0]), np.array([[1.0]]), tiling=None)
        out = assemble_features(frame, AdcConfig(8, 0.0, 2.0), bank, HardwareProfile(),
                                keep_codes=True)
        assert out.codes[0, 0] == 128

    def test_width_mismatch_rejected(self):
        bank = WeightBank(np.zeros((3, 4)), np.zeros(3))
        frame = AnalogFeatureFrame(np.array([0]), np.array([[1.0, 1.0]]), tiling=None)
        with pytest.raises(ValueError):
            assemble_features(frame, AdcConfig(), bank, HardwareProfile())


class TestFullPipelinePrecision:
    def test_high_resolution_pipeline_matches_pure_oracle(self):
        # Noise off, >= 20-bit quantizers everywhere: the simulated chain
        # must track the pure-arithmetic result to 1e-5 relative error.
        rng = np.random.default_rng(53)
        profile = HardwareProfile(pwm_bits=22, weight_dac_bits=22, enob_analog=None)
        cfg = AdcConfig(22, 0.0, 2.0)
        tiling = build_tiling(32, 32, 16, 16)
        bank = WeightBank.from_raw(rng.uniform(-1, 1, size=(8, 256)),
                                   rng.uniform(0.5, 1.5, size=8))
        arr = AnalogPixelArray(rng.uniform(size=(32, 32)), np.ones((32, 32), dtype=bool))
        analog = run_frame(arr, tiling, bank, SelectionMask.full(tiling), profile,
                           Fidelity.ANALOG)
        digital = assemble_features(analog, cfg, bank, profile)
        oracle = np.vstack([
            bank.bias + bank.scale * (bank.weights * arr.voltages[tiling.slices(i)].ravel()).sum(axis=1) / 256
            for i in range(4)
        ])
        rel = np.abs(digital.features - oracle) / np.abs(oracle)
        assert rel.max() <= 1e-5

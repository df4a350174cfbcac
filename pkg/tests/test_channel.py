import math

import numpy as np
import pytest

from flare_leo.channel import (
    ChannelParams,
    InterferenceModel,
    RateParams,
    array_response,
    channel_vector,
    effective_rate,
    large_scale,
    rician_gain,
    sinr,
    sinr_imperfect,
    temporal_evolve,
)


class TestArrayResponse:
    def test_zero_aod_is_all_ones(self):
        assert np.allclose(array_response(0.0, 6), np.ones(6))

    def test_hand_evaluated_phase(self):
        v = array_response(0.5, 2, element_spacing=0.5)
        assert v[0] == pytest.approx(1.0)
        assert v[1] == pytest.approx(np.exp(1j * math.pi / 2))

    def test_unit_modulus(self):
        rng = np.random.default_rng(3)
        for aod in rng.uniform(-0.5, 0.5, size=50):
            assert np.allclose(np.abs(array_response(aod, 8)), 1.0)

    def test_needs_element(self):
        with pytest.raises(ValueError):
            array_response(0.1, 0)


class TestRicianGain:
    def test_large_factor_collapses_to_los(self):
        params = ChannelParams(rician_factor=1e12)
        rng = np.random.default_rng(0)
        draws = rician_gain(params, rng, size=1000)
        los = params.los_mean * (1 + 1j)
        assert np.allclose(draws, los, atol=1e-4)

    def test_mean_power_matches_normalization(self):
        params = ChannelParams(rician_factor=10.0, power_norm=1.0)
        rng = np.random.default_rng(42)
        draws = rician_gain(params, rng, size=100_000)
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_mean_power_any_factor(self):
        rng = np.random.default_rng(9)
        for kappa in (0.0, 1.0, 10.0, 100.0):
            params = ChannelParams(rician_factor=kappa, power_norm=2.5)
            draws = rician_gain(params, np.random.default_rng(77), size=100_000)
            assert np.mean(np.abs(draws) ** 2) == pytest.approx(2.5, rel=0.02)

    def test_seed_determinism(self):
        params = ChannelParams()
        a = rician_gain(params, np.random.default_rng(123), size=32)
        b = rician_gain(params, np.random.default_rng(123), size=32)
        assert np.array_equal(a, b)


class TestLargeScale:
    def test_inverse_square(self):
        params = ChannelParams()
        near = large_scale(30.25, params, 8, 550.0)
        far = large_scale(30.25, params, 8, 1100.0)
        assert near == pytest.approx(4.0 * far, rel=1e-12)

    def test_hand_evaluated(self):
        params = ChannelParams(wavelength_m=0.15, ue_gain=1.0)
        beta = large_scale(30.25, params, 8, 550.0)
        expected = 30.25 * 8 * 0.15**2 / (4 * math.pi * 550e3) ** 2
        assert beta == pytest.approx(expected, rel=1e-12)
        assert beta / 1.1398633159762998e-13 == pytest.approx(1.0, rel=1e-9)

    def test_normalization_point(self):
        # slant chosen so 4*pi*D equals the wavelength
        lam = 0.15
        d_km = lam / (4 * math.pi) / 1000.0
        params = ChannelParams(wavelength_m=lam)
        assert large_scale(1.0, params, 1, d_km) == pytest.approx(1.0, rel=1e-12)

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValueError):
            large_scale(30.0, ChannelParams(), 8, 0.0)


class TestTemporalEvolve:
    def test_full_correlation_is_identity(self):
        params = ChannelParams()
        prev = rician_gain(params, np.random.default_rng(1), size=45)
        after = temporal_evolve(prev, 1.0, params, np.random.default_rng(2))
        assert np.array_equal(after, prev)

    def test_zero_correlation_is_fresh_draw(self):
        params = ChannelParams()
        prev = rician_gain(params, np.random.default_rng(1), size=45)
        after = temporal_evolve(prev, 0.0, params, np.random.default_rng(2))
        expected = rician_gain(params, np.random.default_rng(2), size=45)
        assert np.array_equal(after, expected)

    def test_monte_carlo_correlation(self):
        # With step coefficient sqrt(rho) = 0.9, successive-frame correlation is 0.9.
        params = ChannelParams(rician_factor=0.0)
        rng = np.random.default_rng(31)
        prev = rician_gain(params, rng, size=100_000)
        after = temporal_evolve(prev, 0.81, params, rng)
        x, y = prev.real - prev.real.mean(), after.real - after.real.mean()
        corr = float(np.sum(x * y) / math.sqrt(np.sum(x * x) * np.sum(y * y)))
        assert corr == pytest.approx(0.9, abs=0.02)

    def test_rho_out_of_range(self):
        with pytest.raises(ValueError):
            temporal_evolve(np.zeros(3, dtype=complex), 1.5, ChannelParams(), np.random.default_rng(0))


class TestSinr:
    def test_unit_ratio(self):
        h = np.array([1.0 + 0j, 0.0])
        w = np.array([1.0 + 0j, 0.0])
        assert sinr(h, w, [], 1.0, 1.0) == pytest.approx(1.0)

    def test_zero_forcing_orthogonality(self):
        h = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
        w_others = [np.array([0.0, 1.0, 0.0, 0.0], dtype=complex),
                    np.array([0.0, 0.0, 1.0, 0.0], dtype=complex)]
        got = sinr(h, h, [(h, w) for w in w_others], 2.0, 0.5)
        assert got == pytest.approx(1.0)

    def test_against_direct_summation_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = 4
            h = rng.normal(size=n) + 1j * rng.normal(size=n)
            ws = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(4)]
            density, b = rng.uniform(0.1, 2.0), rng.uniform(0.5, 3.0)
            got = sinr(h, ws[0], [(h, w) for w in ws[1:]], density, b)
            num = abs(np.conj(h) @ ws[0]) ** 2
            den = sum(abs(np.conj(h) @ w) ** 2 for w in ws[1:]) + density * b
            assert got == pytest.approx(num / den, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sinr(np.ones(3, dtype=complex), np.ones(4, dtype=complex), [], 1.0, 1.0)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(23)
        n = 4
        h = rng.normal(size=n) + 1j * rng.normal(size=n)
        ws = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(3)]
        q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        base = sinr(h, ws[0], [(h, w) for w in ws[1:]], 0.7, 1.3)
        rot = sinr(q @ h, q @ ws[0], [(q @ h, q @ w) for w in ws[1:]], 0.7, 1.3)
        assert rot == pytest.approx(base, rel=1e-10)


class TestSinrImperfect:
    def test_zero_error_reduces_exactly(self):
        rng = np.random.default_rng(5)
        h = rng.normal(size=4) + 1j * rng.normal(size=4)
        ws = [rng.normal(size=4) + 1j * rng.normal(size=4) for _ in range(3)]
        perfect = sinr(h, ws[0], [(h, w) for w in ws[1:]], 0.4, 2.0)
        noisy = sinr_imperfect(h, ws[0], [(h, w) for w in ws[1:]], 0.0, ws, 0.4, 2.0)
        assert noisy == perfect

    def test_large_error_kills_sinr(self):
        h = np.ones(2, dtype=complex)
        w = np.ones(2, dtype=complex)
        assert sinr_imperfect(h, w, [], 1e12, [w], 1.0, 1.0) < 1e-10

    def test_penalty_covers_all_groups(self):
        h = np.array([1.0, 0.0], dtype=complex)
        w = np.array([1.0, 0.0], dtype=complex)
        w2 = np.array([0.0, 2.0], dtype=complex)
        got = sinr_imperfect(h, w, [(h, w2)], 0.5, [w, w2], 1.0, 1.0)
        assert got == pytest.approx(1.0 / (0.0 + 0.5 * (1.0 + 4.0) + 1.0))


class TestEffectiveRate:
    def test_unit_case(self):
        assert effective_rate(1.0, 1.0, 1.0) == pytest.approx(1.0)

    def test_zero_sinr(self):
        assert effective_rate(5e7, 0.9, 0.0) == 0.0

    def test_hand_evaluated(self):
        assert effective_rate(10e6, 0.9, 15.0) == pytest.approx(36e6, rel=1e-12)

    def test_monotonicity(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            b, phi, g = rng.uniform(0.1, 1e8), rng.uniform(0.1, 1.0), rng.uniform(0.0, 100.0)
            db, dphi, dg = rng.uniform(0.0, 1e6), rng.uniform(0.0, 1.0 - phi), rng.uniform(0.0, 10.0)
            base = effective_rate(b, phi, g)
            assert effective_rate(b + db, phi, g) >= base
            assert effective_rate(b, phi + dphi, g) >= base
            assert effective_rate(b, phi, g + dg) >= base


class TestParams:
    def test_rate_params_validation(self):
        with pytest.raises(ValueError):
            RateParams(slot_s=1e-3, csi_s=0.6e-3, processing_s=0.5e-3, total_bandwidth_hz=1e8)

    def test_lte_framing(self):
        rp = RateParams.lte(8, 1e8)
        assert rp.slot_s == pytest.approx(300 * 66.7e-6)
        assert rp.time_fraction == pytest.approx(1.0 - 9 * 66.7e-6 / (300 * 66.7e-6))
        rp2 = RateParams.lte(8, 1e8, estimated_satellites=2)
        assert rp2.time_fraction < rp.time_fraction

    def test_interference_model(self):
        m = InterferenceModel(leakage=1e-16, adjacent_density_w_hz=3e-6, noise_density_w_hz=4e-21)
        assert m.aggregate_density == pytest.approx(1e-16 * 3e-6 + 4e-21)
        pair = InterferenceModel.handover([m, m])
        assert pair == pytest.approx(2 * 1e-16 * 3e-6 + 4e-21)

    def test_channel_params_validation(self):
        with pytest.raises(ValueError):
            ChannelParams(rician_factor=-1.0)
        with pytest.raises(ValueError):
            ChannelParams(element_spacing=0.0)


class TestChannelVector:
    def test_composition(self):
        params = ChannelParams()
        h = channel_vector(30.25, params, 8, 550.0, 0.3, 4, np.random.default_rng(8))
        g = rician_gain(params, np.random.default_rng(8))
        beta = large_scale(30.25, params, 8, 550.0)
        expected = math.sqrt(beta) * g * array_response(0.3, 4, params.element_spacing)
        assert np.allclose(h, expected)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from stnc import (
    McConfig,
    Modulation,
    SnrSet,
    TruncationFailure,
    ValidationError,
    awgn_conditional_ser,
    conditional_pdf,
    gain_scenario,
    mc_total_ser,
    pdf_by_cf_inversion,
    residue_table,
    sample_power_gain,
    total_ser,
    uniform_scenario,
)
from stnc.montecarlo import stream, truncation_radius

BPSK = Modulation("PSK", 2)
PSK8 = Modulation("PSK", 8)
QAM4 = Modulation("QAM", 4)
QAM16 = Modulation("QAM", 16)


def qfunc(x):
    return 0.5 * special.erfc(x / math.sqrt(2.0))


def awgn_reference(g, mod):
    """Gaussian-tail forms: BPSK Q(sqrt(2g)); square QAM 4(1-1/sqrt M)q - 4(1-1/sqrt M)^2 q^2."""
    if mod.kind == "PSK" and mod.order == 2:
        return qfunc(math.sqrt(2 * g))
    assert mod.is_qam
    k = 1 - 1 / math.sqrt(mod.order)
    q = qfunc(math.sqrt(3 * g / (mod.order - 1)))
    return 4 * k * q - 4 * k * k * q * q


class TestSampler:
    def test_exponential_mean(self):
        n = 200_000
        x = sample_power_gain(1, stream(7, 0), n)
        assert abs(x.mean() - 1.0) < 3 / math.sqrt(n)

    def test_gamma_variance(self):
        n = 400_000
        x = sample_power_gain(4, stream(7, 1), n)
        se = math.sqrt(stats.gamma(4, scale=0.25).moment(4) / n)  # crude bound on var's standard error
        assert abs(x.var() - 0.25) < 4 * se

    @pytest.mark.parametrize("m", [1, 2, 5])
    def test_ks(self, m):
        n = 50_000
        x = sample_power_gain(m, stream(11, m), n)
        ks = stats.kstest(x, stats.gamma(m, scale=1 / m).cdf).statistic
        assert ks < 1.63 / math.sqrt(n)

    def test_rejects_zero_shape(self):
        with pytest.raises(ValidationError):
            sample_power_gain(0, stream(0, 0), 1)

    def test_streams_are_distinct(self):
        a = stream(5, 0).random(8)
        b = stream(5, 1).random(8)
        c = stream(6, 0).random(8)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
        np.testing.assert_array_equal(a, stream(5, 0).random(8))


class TestAwgn:
    def test_zero_snr(self):
        assert awgn_conditional_ser(0.0, BPSK) == pytest.approx(0.5, rel=1e-15)
        assert awgn_conditional_ser(0.0, PSK8) == pytest.approx(7 / 8, rel=1e-15)

    def test_bpsk_at_four(self):
        assert awgn_conditional_ser(4.0, BPSK) == pytest.approx(qfunc(math.sqrt(8.0)), rel=1e-12)
        assert awgn_conditional_ser(4.0, BPSK) == pytest.approx(2.339e-3, rel=1e-3)

    @pytest.mark.parametrize("mod", [BPSK, QAM4, QAM16], ids=str)
    @pytest.mark.parametrize("g", [0.1, 0.5, 1.0, 3.0, 10.0, 30.0, 100.0])
    def test_against_erfc(self, mod, g):
        g = g / mod.b
        assert awgn_conditional_ser(g, mod) == pytest.approx(awgn_reference(g, mod), rel=1e-13)

    @pytest.mark.parametrize("bg,tol", [(1e-2, 1e-13), (1e-6, 1e-13), (1e-8, 1e-9)])
    def test_small_arguments(self, bg, tol):
        assert awgn_conditional_ser(bg, BPSK) == pytest.approx(qfunc(math.sqrt(2 * bg)), rel=tol)

    def test_vectorised(self):
        g = np.array([[0.0, 1.0], [4.0, 9.0]])
        out = awgn_conditional_ser(g, BPSK)
        assert out.shape == (2, 2)
        assert out[1, 0] == awgn_conditional_ser(4.0, BPSK)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            awgn_conditional_ser(-1.0, BPSK)


class TestMcTotalSer:
    def test_no_relays_matches_exact(self):
        scn = uniform_scenario(0, m=2, power=5.0)
        est = mc_total_ser(scn, 1, QAM16, McConfig(trials=200_000, seed=3))
        assert est.contains(total_ser(scn, 1, QAM16))
        assert est.ci_low <= est.mean <= est.ci_high
        assert est.provenance == "monte-carlo"

    def test_relay_scenario_matches_exact(self):
        scn = gain_scenario(0.6, [0.7, 0.8], [0.7, 0.8], m_direct=2, m_relay_dest=2, m_source_relay=2, snr=10 ** 0.8)
        est = mc_total_ser(scn, 1, QAM4, McConfig(trials=1_000_000, seed=42))
        assert est.contains(total_ser(scn, 1, QAM4))

    def test_deterministic(self):
        scn = gain_scenario(0.6, [0.7], [0.7], snr=5.0)
        cfg = McConfig(trials=100_000, seed=99, chunk_size=8192)
        assert mc_total_ser(scn, 1, PSK8, cfg) == mc_total_ser(scn, 1, PSK8, cfg)

    def test_worker_count_does_not_change_result(self):
        scn = gain_scenario(0.6, [0.7, 0.8], [0.7, 0.8], snr=5.0)
        one = mc_total_ser(scn, 1, PSK8, McConfig(trials=100_000, seed=1, chunk_size=8192, workers=1))
        many = mc_total_ser(scn, 1, PSK8, McConfig(trials=100_000, seed=1, chunk_size=8192, workers=3))
        assert one == many

    def test_interval_shrinks_with_trials(self):
        scn = gain_scenario(0.6, [0.7], [0.7], snr=5.0)
        small = mc_total_ser(scn, 1, BPSK, McConfig(trials=40_000, seed=2))
        large = mc_total_ser(scn, 1, BPSK, McConfig(trials=640_000, seed=2))
        ratio = (small.ci_high - small.ci_low) / (large.ci_high - large.ci_low)
        assert ratio == pytest.approx(4.0, rel=0.15)

    def test_variance_below_symbol_level(self):
        # a symbol-level simulation scores each trial as 0/1, variance p(1-p)
        scn = gain_scenario(0.6, [0.7, 0.8], [0.7, 0.8], snr=10.0)
        est = mc_total_ser(scn, 1, QAM4, McConfig(trials=200_000, seed=5))
        bernoulli = est.mean * (1 - est.mean)
        assert est.std**2 / bernoulli < 1.0

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            McConfig(trials=0)
        with pytest.raises(ValidationError):
            McConfig(seed=-1)
        with pytest.raises(ValidationError):
            McConfig(confidence=1.0)
        with pytest.warns(UserWarning):
            McConfig(trials=100)


class TestCfInversion:
    def test_gamma_density(self):
        grid = [0.0, 1.0, 2.0]
        out = pdf_by_cf_inversion(SnrSet.of((1.0, 2)), grid)
        np.testing.assert_allclose(out, stats.gamma.pdf(grid, 2, scale=0.5), atol=1e-9)

    def test_origin_is_zero(self):
        out = pdf_by_cf_inversion(SnrSet.of((1.0, 2), (3.0, 3)), [0.0])
        assert out[0] == pytest.approx(0.0, abs=1e-12)

    def test_two_exponentials(self):
        grid = np.array([0.5, 1.0, 2.0, 5.0])
        out = pdf_by_cf_inversion(SnrSet.of((1.0, 1), (2.0, 1)), grid)
        np.testing.assert_allclose(out, np.exp(-grid / 2) - np.exp(-grid), atol=1e-7)

    def test_single_exponential_cannot_truncate(self):
        with pytest.raises(TruncationFailure) as info:
            pdf_by_cf_inversion(SnrSet.of((1.0, 1)), [1.0])
        assert info.value.achievable == pytest.approx(1e-7, rel=1e-3)

    def test_truncation_radius(self):
        U = truncation_radius(SnrSet.of((1.0, 3)))
        assert (1 + U**2 / 9) ** -1.5 == pytest.approx(1e-12, rel=1e-6)

    @settings(max_examples=15, deadline=None)
    @given(
        pairs=st.lists(st.tuples(st.floats(0.1, 100.0), st.integers(1, 4)), min_size=3, max_size=3).filter(
            lambda ps: all(abs(p[1] / p[0] - q[1] / q[0]) > 1e-3 * max(p[1] / p[0], q[1] / q[0]) for i, p in enumerate(ps) for q in ps[i + 1 :])
        )
    )
    def test_matches_residue_density(self, pairs):
        snrs = SnrSet(tuple(pairs))
        table = residue_table(snrs)
        grid = np.linspace(0, table.mean() + 6 * table.std(), 20)
        err = np.max(np.abs(pdf_by_cf_inversion(snrs, grid) - conditional_pdf(table, grid)))
        assert err < 1e-6 * table.peak()

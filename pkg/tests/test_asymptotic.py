import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stnc import (
    Modulation,
    SnrSet,
    angle_coefficient,
    asymptotic_conditional_ser,
    asymptotic_relay_ser,
    asymptotic_total_ser,
    conditional_ser,
    diversity_order,
    gain_scenario,
    relay_ser,
    total_ser,
    uniform_scenario,
)

BPSK = Modulation("PSK", 2)
QPSK = Modulation("PSK", 4)
PSK8 = Modulation("PSK", 8)
QAM4 = Modulation("QAM", 4)
QAM16 = Modulation("QAM", 16)
MODS = [BPSK, QPSK, PSK8, QAM4, QAM16]


def sine_power_integral(m_eff, s):
    with mpmath.workdps(40):
        m_eff = Fraction(m_eff)
        top = mpmath.pi * (m_eff.numerator - m_eff.denominator) / m_eff.numerator
        pts = [0, top] if top <= mpmath.pi / 2 else [0, mpmath.pi / 2, top]
        return float(mpmath.quad(lambda t: mpmath.sin(t) ** (2 * s), pts))


class TestAngleCoefficient:
    def test_examples(self):
        assert angle_coefficient(2, 1) == pytest.approx(math.pi / 4, rel=1e-15)
        assert angle_coefficient(4, 1) == pytest.approx(3 * math.pi / 8 + 0.25, rel=1e-15)
        # mpmath quadrature of sin^6 over [0, pi/4]
        assert angle_coefficient(Fraction(4, 3), 3) == pytest.approx(0.01627025939503593, rel=1e-12)

    @pytest.mark.parametrize("m_eff", [2, 4, 8, 16, Fraction(4, 3)])
    @pytest.mark.parametrize("s", [1, 2, 5, 11, 20])
    def test_quadrature_identity(self, m_eff, s):
        assert angle_coefficient(m_eff, s) == pytest.approx(sine_power_integral(m_eff, s), rel=1e-10)

    def test_rejects_zero_shape(self):
        with pytest.raises(ValueError):
            angle_coefficient(2, 0)


class TestConditional:
    @pytest.mark.parametrize("a", [1.0, 10.0, 1e4])
    def test_bpsk_rayleigh(self, a):
        assert asymptotic_conditional_ser(SnrSet.of((a, 1)), BPSK) == pytest.approx(1 / (4 * a), rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(
        pairs=st.lists(st.tuples(st.floats(0.1, 100.0), st.integers(1, 4)), min_size=1, max_size=4),
        mod=st.sampled_from(MODS),
        k=st.sampled_from([10.0, 0.1, 3.7]),
    )
    def test_homogeneity(self, pairs, mod, k):
        snrs = SnrSet(tuple(pairs))
        ratio = asymptotic_conditional_ser(snrs.scaled(k), mod) / asymptotic_conditional_ser(snrs, mod)
        assert ratio == pytest.approx(k ** (-snrs.total_shape), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        pairs=st.lists(st.tuples(st.floats(1.0, 50.0), st.integers(1, 3)), min_size=1, max_size=3),
        mod=st.sampled_from(MODS),
    )
    def test_upper_bound_at_high_snr(self, pairs, mod):
        # scale so that every a b / m >= 10
        scale = max(10 * m / (a * mod.b) for a, m in pairs)
        pairs = [(a * scale * (1 + 0.01 * n), m) for n, (a, m) in enumerate(pairs)]
        snrs = SnrSet(tuple(pairs))
        assert asymptotic_conditional_ser(snrs, mod) >= conditional_ser(snrs, mod)

    @pytest.mark.parametrize("mod", MODS, ids=str)
    def test_ratio_tends_to_one(self, mod):
        snrs = SnrSet.of((1.0, 2), (1.7, 1), (2.3, 3))
        ratios = [conditional_ser(snrs.scaled(10**k), mod) / asymptotic_conditional_ser(snrs.scaled(10**k), mod) for k in (2, 3, 4, 5)]
        assert all(0 < r <= 1 for r in ratios)
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] == pytest.approx(1.0, abs=1e-3)


class TestRelay:
    def test_bpsk(self):
        assert asymptotic_relay_ser(1e3, 1, BPSK) == pytest.approx(2.5e-4, rel=1e-14)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_homogeneity(self, m):
        assert asymptotic_relay_ser(50.0, m, QPSK) / asymptotic_relay_ser(500.0, m, QPSK) == pytest.approx(10.0**m, rel=1e-13)

    def test_qpsk_tail(self):
        c = 1e4
        assert relay_ser(c, 2, QPSK) / asymptotic_relay_ser(c, 2, QPSK) == pytest.approx(1.0, rel=2e-3)


class TestTotal:
    def test_no_relays(self):
        scn = uniform_scenario(0, m=2, power=100.0)
        res = asymptotic_total_ser(scn, 1, PSK8)
        assert res.value == pytest.approx(asymptotic_relay_ser(100.0, 2, PSK8), rel=1e-14)
        assert res.diversity == 2

    def test_per_state_terms(self):
        scn = gain_scenario(0.6, [0.7, 0.8], [0.7, 0.8], m_direct=2, m_relay_dest=2, m_source_relay=2, snr=100.0)
        res = asymptotic_total_ser(scn, 1, QAM4)
        assert [s.value for s, _ in res.per_state_terms] == [0, 1, 2, 3]
        assert res.value == pytest.approx(math.fsum(t for _, t in res.per_state_terms), rel=1e-14)
        assert res.total_shape == 6
        assert res.diversity == 6

    @pytest.mark.parametrize(
        "m_ld,m_lq,m_qd",
        [(1, (1, 2), (2, 1)), (2, (1, 3), (3, 1)), (1, (2, 2), (1, 1)), (2, (3,), (1,))],
    )
    def test_homogeneity_at_diversity(self, m_ld, m_lq, m_qd):
        scn = gain_scenario(0.6, [0.7, 0.8][: len(m_lq)], [0.9, 1.1][: len(m_lq)], m_direct=m_ld, m_relay_dest=m_qd, m_source_relay=m_lq)
        div = diversity_order(m_ld, m_lq, m_qd)
        # only the dominant terms survive the limit, so compare far apart scales
        lo = asymptotic_total_ser(scn.replace(noise=1e-8), 1, QPSK).value
        hi = asymptotic_total_ser(scn.replace(noise=1e-9), 1, QPSK).value
        assert math.log10(lo / hi) == pytest.approx(div, rel=1e-3)

    def test_slope_from_exact(self):
        scn = gain_scenario(0.6, [0.7, 0.8], [0.7, 0.8])
        a = total_ser(scn.replace(noise=1e-6), 1, QAM4)
        b = total_ser(scn.replace(noise=1e-7), 1, QAM4)
        assert math.log10(a / b) == pytest.approx(3.0, rel=1e-3)


class TestDiversityOrder:
    @pytest.mark.parametrize(
        "m_ld,m_lq,m_qd,expected",
        [
            (1, (1, 1), (1, 1), 3),
            (1, (1, 1), (2, 2), 3),
            (1, (2, 2), (1, 1), 3),
            (1, (1, 2), (1, 2), 4),
            (2, (2, 2), (2, 2), 6),
        ],
    )
    def test_cases(self, m_ld, m_lq, m_qd, expected):
        assert diversity_order(m_ld, m_lq, m_qd) == expected

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            diversity_order(1, (1,), (1, 2))

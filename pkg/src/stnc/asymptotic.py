"""High-SNR SER approximations and the diversity order."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact import QAM_HALF, QAM_QUARTER
from .modulation import Modulation
from .network import DecodingState, Scenario, SnrSet, equivalent_snr_set, relay_input_snr
from .residue import make_context

_DPS = 60


def _limit(ctx, m_eff):
    m_eff = Fraction(m_eff)
    return ctx.pi * (m_eff.numerator - m_eff.denominator) / m_eff.numerator


def _angle_coefficient(ctx, m_eff, total_shape: int):
    s = total_shape
    x = _limit(ctx, m_eff)
    head = ctx.binomial(2 * s, s) * x / ctx.mpf(2) ** (2 * s)
    tail = ctx.fsum(
        (-1) ** k * ctx.binomial(2 * s, k) * ctx.sin((2 * s - 2 * k) * x) / (2 * s - 2 * k) for k in range(s)
    )
    return head + (-1) ** s * tail / ctx.mpf(2) ** (2 * s - 1)


def angle_coefficient(m_eff, total_shape: int) -> float:
    """``int_0^{(M-1)pi/M} sin^(2 s) t dt`` in closed form, with ``s = total_shape``.

    ``m_eff`` is the angle parameter: the PSK order, or 2 and 4/3 for the
    two QAM terms. Accepts ints, floats and :class:`fractions.Fraction`.
    """
    if total_shape < 1:
        raise ValueError("total_shape must be >= 1")
    ctx = make_context(_DPS + total_shape)
    return float(_angle_coefficient(ctx, m_eff, total_shape))


def _asymptotic_mp(ctx, snrs: SnrSet, mod: Modulation):
    s = snrs.total_shape
    b = ctx.mpf(mod.b)
    alpha = ctx.mpf(mod.alpha)
    prod = ctx.fprod((ctx.mpf(m) / (ctx.mpf(a) * b)) ** m for a, m in snrs.entries)
    if mod.is_qam:
        return prod / ctx.pi * (
            alpha * _angle_coefficient(ctx, QAM_HALF, s) - alpha**2 / 4 * _angle_coefficient(ctx, QAM_QUARTER, s)
        )
    return alpha / ctx.pi * prod * _angle_coefficient(ctx, Fraction(mod.order), s)


def asymptotic_conditional_ser(snrs: SnrSet, mod: Modulation) -> float:
    """Leading high-SNR term of the conditional SER; an upper bound on it."""
    ctx = make_context(_DPS + snrs.total_shape)
    return float(_asymptotic_mp(ctx, snrs, mod))


def asymptotic_relay_ser(c: float, m: int, mod: Modulation) -> float:
    return asymptotic_conditional_ser(SnrSet.of((c, m)), mod)


@dataclass(frozen=True)
class AsymptoticResult:
    """Asymptotic SER with its per-state breakdown.

    ``total_shape`` is the summed shape of the all-relays-decoded state and
    ``diversity`` the analytic diversity order of the scenario.
    """

    value: float
    total_shape: int
    diversity: int
    per_state_terms: tuple[tuple[DecodingState, float], ...]


def asymptotic_total_ser(scn: Scenario, l: int, mod: Modulation) -> AsymptoticResult:
    """Sum over decoding states with successful relays weighted by 1.

    A relay that fails contributes its asymptotic detection SER instead.
    """
    relay = [
        asymptotic_relay_ser(relay_input_snr(scn, l, q), scn.m_source_relay[l - 1][q - 1], mod)
        for q in range(1, scn.num_relays + 1)
    ]
    terms = []
    total = 0.0
    for state in DecodingState.all_states(scn.num_relays):
        weight = 1.0
        for ok, ser in zip(state.bits, relay):
            if not ok:
                weight *= ser
        term = weight * asymptotic_conditional_ser(equivalent_snr_set(scn, l, state), mod)
        terms.append((state, term))
        total += term
    full = scn.m_source_dest[l - 1] + sum(scn.m_relay_dest)
    div = diversity_order(scn.m_source_dest[l - 1], scn.m_source_relay[l - 1], scn.m_relay_dest)
    return AsymptoticResult(value=total, total_shape=full, diversity=div, per_state_terms=tuple(terms))


def diversity_order(m_ld: int, m_lq: Sequence[int], m_qd: Sequence[int]) -> int:
    """``m_ld + sum_q min(m_qd, m_lq)``."""
    if len(m_lq) != len(m_qd):
        raise ValueError("m_lq and m_qd must have the same length")
    return int(m_ld) + sum(min(int(a), int(b)) for a, b in zip(m_lq, m_qd))

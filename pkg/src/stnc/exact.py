"""Exact closed-form SER for M-PSK and square M-QAM.

Everything reduces to the finite-angle Craig integral

    I_n(g, M) = (1/pi) int_0^{(M-1)pi/M} (sin^2 t / (sin^2 t + g)) ** n dt

which has a closed form in ``mu = sqrt(g / (1 + g))``. PSK uses ``M`` itself
as the angle parameter; QAM combines ``M = 2`` (limit pi/2) and ``M = 4/3``
(limit pi/4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import CoincidentPoles, InternalConsistency, ValidationError
from .modulation import Modulation
from .network import DecodingState, Scenario, SnrSet, equivalent_snr_set, relay_input_snr
from .residue import ResidueTable, make_context, required_dps, residue_table

CLAMP_TOL = 1e-9

QAM_HALF = Fraction(2)
QAM_QUARTER = Fraction(4, 3)


def clamp_probability(p: float, what: str = "probability") -> float:
    if 0.0 <= p <= 1.0:
        return p
    if -CLAMP_TOL < p < 0.0:
        return 0.0
    if 1.0 < p < 1.0 + CLAMP_TOL:
        return 1.0
    raise InternalConsistency(f"{what} evaluated to {p!r}, outside [0, 1]")


def _t_coeff(ctx, p: int, t: int):
    return ctx.binomial(2 * p, p) / (ctx.binomial(2 * (p - t), p - t) * ctx.mpf(4) ** t * (2 * (p - t) + 1))


def craig_integral(ctx, n: int, g, m_eff):
    """Closed form of ``I_n(g, M_eff)``, evaluated in the mpmath context ``ctx``."""
    M = ctx.mpf(m_eff.numerator) / m_eff.denominator if isinstance(m_eff, Fraction) else ctx.mpf(m_eff)
    g = ctx.mpf(g)
    head = (M - 1) / M
    if g == 0:
        return head
    mu = ctx.sqrt(g / (1 + g))
    if M == 2:
        omega = ctx.mpf(0)
    else:
        omega = mu * ctx.cot(ctx.pi / M)
    phi = ctx.atan(omega)
    one_g = 1 + g
    first = ctx.fsum(ctx.binomial(2 * p, p) / (4 * one_g) ** p for p in range(n))
    second = ctx.mpf(0)
    if n > 1:
        c = ctx.cos(phi)
        second = ctx.fsum(
            _t_coeff(ctx, p, t) / one_g**p * c ** (2 * (p - t) + 1) for p in range(1, n) for t in range(1, p + 1)
        )
    return head - mu / ctx.pi * ((ctx.pi / 2 + phi) * first + ctx.sin(phi) * second)


def _angle_param(mod: Modulation):
    return Fraction(mod.order)


def _ser_from_craig(ctx, mod: Modulation, integral):
    """Combine ``integral(M_eff)`` values into the modulation's SER."""
    alpha = ctx.mpf(mod.alpha)
    if mod.is_qam:
        return alpha * integral(QAM_HALF) - alpha**2 / 4 * integral(QAM_QUARTER)
    return alpha * integral(_angle_param(mod))


def _conditional_ser_mp(snrs: SnrSet, mod: Modulation, *, perturb: bool = False):
    ctx_dps = required_dps(snrs, mod.b) + 10
    table = residue_table(snrs, perturb=perturb, dps=ctx_dps)
    ctx = make_context(table.dps)
    b = ctx.mpf(mod.b)

    def integral(m_eff):
        acc = []
        for (a, m), row in zip(table.poles, table.coeffs):
            lam = ctx.mpf(m) / ctx.mpf(a)
            g = b / lam
            for i, B in enumerate(row):
                n = m - i
                acc.append(B * ctx.factorial(n - 1) / lam**n * craig_integral(ctx, n, g, m_eff))
        return ctx.fsum(acc)

    return _ser_from_craig(ctx, mod, integral), table


def conditional_ser(snrs: SnrSet, mod: Modulation, *, perturb: bool = False) -> float:
    """SER at the destination given the set of MRC branches."""
    value, _ = _conditional_ser_mp(snrs, mod, perturb=perturb)
    return clamp_probability(float(value), "conditional SER")


def conditional_ser_psk(snrs: SnrSet, mod: Modulation, *, perturb: bool = False) -> float:
    if mod.is_qam:
        raise ValidationError("conditional_ser_psk needs a PSK modulation")
    return conditional_ser(snrs, mod, perturb=perturb)


def conditional_ser_qam(snrs: SnrSet, mod: Modulation, *, perturb: bool = False) -> float:
    if not mod.is_qam:
        raise ValidationError("conditional_ser_qam needs a QAM modulation")
    return conditional_ser(snrs, mod, perturb=perturb)


def relay_ser(c: float, m: int, mod: Modulation) -> float:
    """Single-branch Nakagami-m SER with average SNR ``c`` (detection at a relay)."""
    if not c > 0:
        raise ValidationError(f"relay SNR must be positive, got {c!r}")
    if math.isinf(c):
        return 0.0
    g = c * mod.b / m
    ctx = make_context(30 + int(m * math.log10(1.0 + g)) + 5)
    value = _ser_from_craig(ctx, mod, lambda m_eff: craig_integral(ctx, m, ctx.mpf(c) * ctx.mpf(mod.b) / m, m_eff))
    return clamp_probability(float(value), "relay SER")


def relay_ser_psk(c: float, m: int, mod: Modulation) -> float:
    if mod.is_qam:
        raise ValidationError("relay_ser_psk needs a PSK modulation")
    return relay_ser(c, m, mod)


def relay_ser_qam(c: float, m: int, mod: Modulation) -> float:
    if not mod.is_qam:
        raise ValidationError("relay_ser_qam needs a QAM modulation")
    return relay_ser(c, m, mod)


def decode_state_probability(relay_sers: Sequence[float], state: DecodingState | Sequence[bool]) -> float:
    """Probability of ``state``: relays decode independently with ``1 - SER_q``."""
    bits = state.bits if isinstance(state, DecodingState) else tuple(bool(b) for b in state)
    if len(bits) != len(relay_sers):
        raise ValidationError("state length must match the number of relay SERs")
    p = 1.0
    for ok, ser in zip(bits, relay_sers):
        if not 0.0 <= ser <= 1.0:
            raise ValidationError(f"relay SER must lie in [0, 1], got {ser!r}")
        p *= (1.0 - ser) if ok else ser
    return p


@dataclass(frozen=True)
class StateTerm:
    state: DecodingState
    probability: float
    conditional_ser: float
    perturbation: tuple[tuple[int, float], ...] = ()

    @property
    def contribution(self) -> float:
        return self.probability * self.conditional_ser


def state_terms(
    scn: Scenario,
    l: int,
    mod: Modulation,
    *,
    perturb: bool = False,
    relay_sers: Sequence[float] | None = None,
) -> list[StateTerm]:
    """Per-state probability and conditional SER, in ascending state order.

    ``relay_sers`` overrides the relays' detection SERs (e.g. to model a
    perfect relay); by default they come from :func:`relay_ser`.
    """
    if relay_sers is None:
        relay_sers = [
            relay_ser(relay_input_snr(scn, l, q), scn.m_source_relay[l - 1][q - 1], mod)
            for q in range(1, scn.num_relays + 1)
        ]
    terms = []
    for state in DecodingState.all_states(scn.num_relays):
        p = decode_state_probability(relay_sers, state)
        snrs = equivalent_snr_set(scn, l, state)
        try:
            value, table = _conditional_ser_mp(snrs, mod, perturb=perturb)
        except CoincidentPoles as exc:
            raise CoincidentPoles(f"decoding state {state} (S={state.value}): {exc}", pair=exc.pair, state=state.value) from exc
        ser = clamp_probability(float(value), f"conditional SER of state {state}")
        terms.append(StateTerm(state, p, ser, table.perturbation))
    return terms


def total_ser(
    scn: Scenario,
    l: int,
    mod: Modulation,
    *,
    perturb: bool = False,
    relay_sers: Sequence[float] | None = None,
) -> float:
    """End-to-end SER of source ``l`` averaged over all ``2**Q`` decoding states."""
    terms = state_terms(scn, l, mod, perturb=perturb, relay_sers=relay_sers)
    total = 0.0
    for t in terms:
        total += t.contribution
    return clamp_probability(total, "total SER")

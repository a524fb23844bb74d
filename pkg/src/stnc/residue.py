"""Density of the MRC output SNR as a sum of independent Gamma variables.

The characteristic function of the combined SNR is the rational function
``prod_n (1 - j u a_n / m_n) ** -m_n``. Its poles sit at ``-j m_n / a_n``
and summing their residues gives the mixture

    f(v) = sum_k sum_i B[k][i] * v ** (m_k - 1 - i) * exp(-m_k v / a_k).

The coefficients are built by expanding every factor other than the
``k``-th as a Taylor series around the ``k``-th pole and reading off the
coefficients of the truncated product. All arithmetic runs in a private
mpmath context whose precision grows with the conditioning of the pole set.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .errors import CoincidentPoles, InternalConsistency
from .network import SnrSet

POLE_REL_TOL = 1e-9
PERTURB_STEP = 1e-7
NEG_CLAMP = 1e-12


class ConditioningWarning(RuntimeWarning):
    """Large total shape or pole spread; results are cross-validated before use."""


def make_context(dps: int) -> mpmath.ctx_mp.MPContext:
    ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


def _pole_rates(snrs: SnrSet) -> list[float]:
    return [m / a for a, m in snrs.entries]


def _find_collision(rates: Sequence[float]) -> tuple[int, int] | None:
    for i in range(len(rates)):
        for j in range(i + 1, len(rates)):
            if abs(rates[i] - rates[j]) <= POLE_REL_TOL * max(rates[i], rates[j]):
                return i, j
    return None


def _perturb(snrs: SnrSet) -> tuple[SnrSet, tuple[tuple[int, float], ...]]:
    """Nudge colliding branches apart by ``+k * 1e-7`` relative SNR steps."""
    entries = list(snrs.entries)
    applied: dict[int, float] = {}
    for _ in range(len(entries) ** 2 + 1):
        rates = [m / a for a, m in entries]
        if _find_collision(rates) is None:
            break
        # group by collision; the k-th member of a group (k >= 1) moves by k steps
        seen: list[list[int]] = []
        for n, r in enumerate(rates):
            for g in seen:
                r0 = rates[g[0]]
                if abs(r - r0) <= POLE_REL_TOL * max(r, r0):
                    g.append(n)
                    break
            else:
                seen.append([n])
        for g in seen:
            for k, n in enumerate(g[1:], start=1):
                factor = 1.0 + k * PERTURB_STEP
                a, m = entries[n]
                entries[n] = (a * factor, m)
                applied[n] = applied.get(n, 1.0) * factor
    else:  # pragma: no cover - the loop always separates a finite set
        raise InternalConsistency("pole perturbation did not converge")
    return SnrSet(tuple(entries)), tuple(sorted((n, f - 1.0) for n, f in applied.items()))


def required_dps(snrs: SnrSet, b: float = 0.0) -> int:
    """Decimal digits needed so the residue sum survives its cancellations.

    Partial fractions lose about ``sum(m) * log10(rate / gap)`` digits and the
    closed-form SER terms lose about ``sum(m) * log10(1 + a b / m)`` more.
    """
    rates = _pole_rates(snrs)
    total = snrs.total_shape
    digits = 30.0
    if len(rates) > 1:
        worst = 1.0
        for i in range(len(rates)):
            for j in range(i + 1, len(rates)):
                gap = abs(rates[i] - rates[j])
                scale = max(rates[i], rates[j])
                worst = max(worst, scale / gap if gap > 0 else 1e30)
        digits += total * math.log10(worst)
    if b > 0:
        digits += total * max(math.log10(1.0 + a * b / m) for a, m in snrs.entries)
    return int(min(digits, 2000))


@dataclass(frozen=True)
class ResidueTable:
    """Mixture coefficients ``coeffs[k][i]`` for the poles ``poles[k] = (a_k, m_k)``.

    ``coeffs`` hold mpmath numbers at ``dps`` digits; ``perturbation`` lists
    ``(branch, relative shift)`` pairs when coincident poles were separated.
    """

    poles: tuple[tuple[float, int], ...]
    coeffs: tuple[tuple, ...]
    dps: int
    perturbation: tuple[tuple[int, float], ...] = ()
    _peak: list = field(default_factory=list, repr=False, compare=False, hash=False)

    @property
    def context(self):
        return make_context(self.dps)

    def float_coeffs(self) -> list[list[float]]:
        return [[float(c) for c in row] for row in self.coeffs]

    def mass(self):
        """Closed-form integral of the density over ``[0, inf)`` (exactly 1 in theory)."""
        ctx = self.context
        total = ctx.mpf(0)
        for (a, m), row in zip(self.poles, self.coeffs):
            lam = ctx.mpf(m) / ctx.mpf(a)
            for i, B in enumerate(row):
                n = m - i
                total += B * ctx.factorial(n - 1) / lam**n
        return total

    def mean(self) -> float:
        return float(sum(a for a, _ in self.poles))

    def std(self) -> float:
        return math.sqrt(sum(a * a / m for a, m in self.poles))

    def peak(self) -> float:
        """Approximate maximum of the density, located on a dense grid."""
        if not self._peak:
            top = self.mean() + 12.0 * self.std()
            grid = np.linspace(0.0, top, 801)
            vals = _evaluate(self, grid)
            self._peak.append(float(np.max(vals)))
        return self._peak[0]


def residue_table(snrs: SnrSet, *, perturb: bool = False, dps: int | None = None) -> ResidueTable:
    """Residue coefficients of the density of the combined SNR.

    Raises :class:`CoincidentPoles` when two rates ``m_n / a_n`` agree to a
    relative ``1e-9`` unless ``perturb`` is set, in which case the later
    colliding branches are shifted by ``k * 1e-7`` and the shifts recorded.
    """
    perturbation: tuple[tuple[int, float], ...] = ()
    pair = _find_collision(_pole_rates(snrs))
    if pair is not None:
        if not perturb:
            i, j = pair
            raise CoincidentPoles(
                f"branches {i} and {j} share the pole rate m/a = {snrs.shapes[i] / snrs.snrs[i]:.6g}",
                pair=pair,
            )
        snrs, perturbation = _perturb(snrs)

    rates = _pole_rates(snrs)
    total = snrs.total_shape
    spread = max(rates) / min(rates)
    ill = total > 40 or spread > 1e6
    if ill:
        warnings.warn(
            f"ill-conditioned pole set (total shape {total}, rate spread {spread:.3g})",
            ConditioningWarning,
            stacklevel=2,
        )
    if dps is None:
        dps = required_dps(snrs)
    ctx = make_context(dps)

    lam = [ctx.mpf(m) / ctx.mpf(a) for a, m in snrs.entries]
    shapes = snrs.shapes
    prefactor = ctx.fprod(l**m for l, m in zip(lam, shapes))

    coeffs = []
    for k, mk in enumerate(shapes):
        series = [ctx.mpf(0)] * mk
        series[0] = ctx.mpf(1)
        for n, mn in enumerate(shapes):
            if n == k:
                continue
            delta = lam[n] - lam[k]
            # (t + delta)^-mn = sum_j binom(-mn, j) delta^(-mn-j) t^j
            factor = [ctx.binomial(-mn, j) * delta ** (-mn - j) for j in range(mk)]
            series = [ctx.fsum(series[s] * factor[j - s] for s in range(j + 1)) for j in range(mk)]
        row = tuple(prefactor * series[i] / ctx.factorial(mk - 1 - i) for i in range(mk))
        coeffs.append(row)

    table = ResidueTable(poles=snrs.entries, coeffs=tuple(coeffs), dps=dps, perturbation=perturbation)
    if ill:
        err = abs(table.mass() - 1)
        if err > 1e-9:
            raise InternalConsistency(f"residue mixture mass deviates from 1 by {float(err):.3g}")
    return table


def _evaluate(table: ResidueTable, v: np.ndarray) -> np.ndarray:
    ctx = table.context
    out = np.empty(v.shape, dtype=float)
    lam = [ctx.mpf(m) / ctx.mpf(a) for a, m in table.poles]
    total_shape = sum(m for _, m in table.poles)
    for idx, x in np.ndenumerate(v):
        if x == 0 and total_shape > 1:
            # the residue terms cancel there; use the exact limit
            out[idx] = 0.0
            continue
        x = ctx.mpf(float(x))
        acc = ctx.mpf(0)
        for (a, m), lk, row in zip(table.poles, lam, table.coeffs):
            e = ctx.exp(-lk * x)
            acc += e * ctx.fsum(B * x ** (m - 1 - i) for i, B in enumerate(row))
        out[idx] = float(acc)
    return out


def conditional_pdf(table: ResidueTable, v):
    """Evaluate the residue mixture at ``v >= 0`` (scalar or array).

    Negative round-off smaller than ``1e-12`` of the peak is clamped to 0;
    anything more negative signals a broken table.
    """
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0):
        raise ValueError("density argument must be nonnegative")
    vals = _evaluate(table, arr)
    neg = vals < 0
    if np.any(neg):
        tol = NEG_CLAMP * table.peak()
        if np.any(vals[neg] < -tol):
            raise InternalConsistency(f"residue density is negative ({vals.min():.3g}) beyond round-off")
        vals = np.where(neg, 0.0, vals)
    if np.ndim(v) == 0:
        return float(vals)
    return vals


def gamma_sum_cf(snrs: SnrSet, u):
    """Characteristic function ``prod_n (1 - j u a_n/m_n) ** -m_n`` on a numpy grid."""
    u = np.asarray(u, dtype=float)
    out = np.ones(u.shape, dtype=complex)
    for a, m in snrs.entries:
        out *= (1.0 - 1j * u * (a / m)) ** (-m)
    return out

"""Reference implementations used only by the tests.

Each one follows a route that shares no code with the package:

* ``mgf_ser``: averages the Craig form through the Gamma moment generating
  function, ``(alpha/pi) int prod_n (1 + a_n b / (m_n sin^2 t))^-m_n dt``,
  integrated by tanh-sinh quadrature.
* ``qpsk_two_branch_quad``: the defining double integral over the two branch
  SNRs with the exact QPSK AWGN SER ``2Q(x) - Q(x)^2``.
* ``rayleigh_*``: textbook partial-fraction weights with the closed-form
  Rayleigh PSK/QAM SER.
* ``transcribed_b``: the nested binomial-chain residue coefficients, written
  out loop by loop.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
from scipy import integrate, special, stats


def _craig_limits(kind: str, M: int):
    """(coefficient, upper limit) pairs of the Craig representation."""
    if kind == "PSK":
        return [(1.0, (M - 1) * mpmath.pi / M)]
    alpha = 4 * (1 - 1 / mpmath.sqrt(M))
    return [(alpha, mpmath.pi / 2), (-(alpha**2) / 4, mpmath.pi / 4)]


def _b(kind: str, M: int):
    if kind == "PSK":
        return mpmath.sin(mpmath.pi / M) ** 2
    return mpmath.mpf(3) / (2 * (M - 1))


def mgf_ser(pairs, kind: str, M: int, dps: int = 30) -> float:
    """SER averaged over independent Gamma branch SNRs, via the MGF product."""
    with mpmath.workdps(dps):
        b = _b(kind, M)
        pairs = [(mpmath.mpf(a), int(m)) for a, m in pairs]

        def integrand(t):
            s2 = mpmath.sin(t) ** 2
            p = mpmath.mpf(1)
            for a, m in pairs:
                p *= (s2 / (s2 + a * b / m)) ** m
            return p

        total = mpmath.mpf(0)
        for coef, top in _craig_limits(kind, M):
            pts = [0, top] if top <= mpmath.pi / 2 else [0, mpmath.pi / 2, top]
            total += coef * mpmath.quad(integrand, pts) / mpmath.pi
        return float(total)


def qpsk_awgn(g):
    q = 0.5 * special.erfc(np.sqrt(g) / math.sqrt(2.0))  # Q(sqrt(2 b g)) with b = 1/2
    return 2 * q - q * q


def qpsk_two_branch_quad(a0, m0, a1, m1) -> float:
    """``E[SER_QPSK(X0 + X1)]`` for independent Gamma branches, by nested quadrature."""
    f0 = stats.gamma(m0, scale=a0 / m0).pdf
    f1 = stats.gamma(m1, scale=a1 / m1).pdf

    def inner(x0):
        return integrate.quad(lambda x1: f1(x1) * qpsk_awgn(x0 + x1), 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0]

    return integrate.quad(lambda x0: f0(x0) * inner(x0), 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]


# --- Rayleigh (all m = 1) -------------------------------------------------

def rayleigh_awgn_average(a, kind: str, M: int):
    """Closed-form SER over one Rayleigh branch of average SNR ``a``."""
    a = mpmath.mpf(a)
    b = _b(kind, M)
    g = a * b
    mu = mpmath.sqrt(g / (1 + g))
    if kind == "PSK":
        return (M - 1) / mpmath.mpf(M) - mu / mpmath.pi * (mpmath.pi / 2 + mpmath.atan(mu * mpmath.cot(mpmath.pi / M)))
    # (1/pi) int_0^x sin^2/(sin^2 + g): pi/2 -> (1 - mu)/2, pi/4 -> 1/4 - (mu/pi) atan(1/mu)
    alpha = 4 * (1 - 1 / mpmath.sqrt(M))
    half = (1 - mu) / 2
    quarter = mpmath.mpf(1) / 4 - mu / mpmath.pi * mpmath.atan(1 / mu)
    return alpha * half - alpha**2 / 4 * quarter


def rayleigh_conditional_ser(snrs, kind: str, M: int):
    """Partial fractions: ``f = sum_k w_k exp(-v/a_k)/a_k`` with ``w_k = prod_{j!=k} a_k/(a_k - a_j)``."""
    with mpmath.workdps(60):
        a = [mpmath.mpf(x) for x in snrs]
        total = mpmath.mpf(0)
        for k, ak in enumerate(a):
            w = mpmath.mpf(1)
            for j, aj in enumerate(a):
                if j != k:
                    w *= ak / (ak - aj)
            total += w * rayleigh_awgn_average(ak, kind, M)
        return total


def rayleigh_total_ser(c0, c_relay, c_input, kind: str, M: int) -> float:
    """All-Rayleigh total SER: relays decode with ``1 - SER(c_input[q])``."""
    with mpmath.workdps(60):
        Q = len(c_relay)
        relay = [rayleigh_awgn_average(c, kind, M) for c in c_input]
        total = mpmath.mpf(0)
        for bits in product((0, 1), repeat=Q):
            p = mpmath.mpf(1)
            branches = [c0]
            for q, ok in enumerate(bits):
                p *= (1 - relay[q]) if ok else relay[q]
                if ok:
                    branches.append(c_relay[q])
            total += p * rayleigh_conditional_ser(branches, kind, M)
        return float(total)


# --- nested-sum residue coefficients --------------------------------------

def _poch(m: int, i: int) -> Fraction:
    out = Fraction(1)
    for t in range(i):
        out *= m + t
    return out


def transcribed_b(pairs, k: int, i: int) -> Fraction:
    """Coefficient of ``v^(m_k-1-i) exp(-m_k v/a_k)``, written as a chain of nested sums.

    The branches other than ``k`` take derivative orders ``i - i_0``,
    ``i_0 - i_1``, ..., ``i_last`` in branch order. Inputs must be exact
    (ints or Fractions) so the result is exact.
    """
    a = [Fraction(x) for x, _ in pairs]
    m = [int(y) for _, y in pairs]
    others = [n for n in range(len(pairs)) if n != k]
    mk, ak = m[k], a[k]
    pre = Fraction(mk) ** mk * (-1) ** i / (ak**mk * math.factorial(mk - 1)) * math.comb(mk - 1, i)

    def chain(pos: int, upper: int) -> Fraction:
        # distribute `upper` derivatives over others[pos:], the last one takes the remainder
        n = others[pos]
        if pos == len(others) - 1:
            orders = [(upper, upper)]
        else:
            orders = [(j, upper - j) for j in range(upper + 1)]
        total = Fraction(0)
        for nxt, d in orders:
            # d derivatives on branch n, nxt passed down the chain
            ratio = 1 - Fraction(mk) * a[n] / (m[n] * ak)
            term = math.comb(upper, nxt) if pos < len(others) - 1 else 1
            term *= (a[n] / m[n]) ** d * _poch(m[n], d) * ratio ** (-m[n] - d)
            if pos < len(others) - 1:
                term *= chain(pos + 1, nxt)
            total += term
        return total

    if not others:
        return pre if i == 0 else Fraction(0)
    return pre * chain(0, i)

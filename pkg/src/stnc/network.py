"""Network geometry, decoding states and per-branch equivalent SNRs.

Sources and relays are indexed from 1, as in the configuration files:
``l`` in ``1..L`` and ``q`` in ``1..Q``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import NonIntegerFadingParameter, SingularCorrelation, ValidationError

PIVOT_TOL = 1e-12


def _as_int_m(value, what: str) -> int:
    if isinstance(value, (bool, np.bool_)):
        raise NonIntegerFadingParameter(f"{what} must be an integer >= 1, got {value!r}")
    f = float(value)
    if not f.is_integer() or f < 1:
        raise NonIntegerFadingParameter(f"{what} must be an integer >= 1, got {value!r}")
    return int(f)


def _positive(value, what: str) -> float:
    f = float(value)
    if not np.isfinite(f) or f <= 0:
        raise ValidationError(f"{what} must be positive, got {value!r}")
    return f


def _nonneg(value, what: str) -> float:
    f = float(value)
    if not np.isfinite(f) or f < 0:
        raise ValidationError(f"{what} must be nonnegative, got {value!r}")
    return f


def epsilon_for_symbol(corr, l: int) -> float:
    """Despreading penalty: the ``l``-th diagonal entry of ``inv(corr)``.

    The inverse is taken with a partial-pivot LU factorisation; a pivot
    below ``1e-12`` of its row's scale is treated as singular.
    """
    R = np.asarray(corr, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] == 0:
        raise ValidationError(f"correlation matrix must be square and non-empty, got shape {R.shape}")
    n = R.shape[0]
    if not 1 <= l <= n:
        raise ValidationError(f"code index {l} out of range 1..{n}")
    row_scale = np.max(np.abs(R), axis=1)
    if np.any(row_scale == 0):
        raise SingularCorrelation("correlation matrix has an all-zero row")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(R / row_scale[:, None], check_finite=True)
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL:
        raise SingularCorrelation("correlation matrix is singular to working precision")
    e = np.zeros(n)
    e[l - 1] = 1.0
    # inv(R) = inv(D R) D with D = diag(1/row_scale); column l of inv(R):
    col = lu_solve((lu, piv), e / row_scale)
    return float(col[l - 1])


@dataclass(frozen=True)
class DecodingState:
    """Which relays decoded the desired symbol.

    ``bits[q-1]`` is the success flag of relay ``q``; ``value`` reads the
    bits as a binary number with relay 1 as the most significant bit.
    """

    bits: tuple[bool, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @property
    def value(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | int(b)
        return v

    @property
    def num_relays(self) -> int:
        return len(self.bits)

    @property
    def popcount(self) -> int:
        return sum(self.bits)

    @classmethod
    def from_value(cls, value: int, num_relays: int) -> "DecodingState":
        if not 0 <= value < (1 << num_relays) and not (num_relays == 0 and value == 0):
            raise ValidationError(f"state {value} out of range for {num_relays} relays")
        return cls(tuple(bool((value >> (num_relays - 1 - q)) & 1) for q in range(num_relays)))

    @classmethod
    def all_states(cls, num_relays: int) -> Iterator["DecodingState"]:
        for v in range(1 << num_relays):
            yield cls.from_value(v, num_relays)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits) or "-"


@dataclass(frozen=True)
class SnrSet:
    """Equivalent branch SNRs at the destination for one decoding state.

    ``entries[0]`` is the direct source-destination branch; the remaining
    entries are the relays that decoded, in relay order. Each entry is a
    pair ``(a, m)`` of linear average SNR and Nakagami shape.
    """

    entries: tuple[tuple[float, int], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValidationError("SnrSet needs at least the direct branch")
        clean = []
        for n, (a, m) in enumerate(self.entries):
            a = float(a)
            if not a > 0:
                raise ValidationError(f"branch {n} SNR must be positive, got {a!r}")
            clean.append((a, _as_int_m(m, f"branch {n} fading parameter")))
        object.__setattr__(self, "entries", tuple(clean))

    @classmethod
    def of(cls, *pairs: tuple[float, int]) -> "SnrSet":
        return cls(tuple(pairs))

    @property
    def snrs(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.entries)

    @property
    def shapes(self) -> tuple[int, ...]:
        return tuple(m for _, m in self.entries)

    @property
    def total_shape(self) -> int:
        return sum(self.shapes)

    def scaled(self, factor: float) -> "SnrSet":
        return SnrSet(tuple((a * factor, m) for a, m in self.entries))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Scenario:
    """L sources, Q decode-and-forward relays and one destination.

    Tables are nested tuples: ``d_source_relay[l-1][q-1]``,
    ``p_relay[q-1][l-1]``. Powers and noise are linear (watts); the
    correlation matrix is the Gram matrix of the spreading codes and may be
    sized by relay count (Q x Q) or by source count (L x L).
    """

    num_sources: int
    num_relays: int
    d_source_relay: tuple[tuple[float, ...], ...]
    d_relay_dest: tuple[float, ...]
    d_source_dest: tuple[float, ...]
    m_source_relay: tuple[tuple[int, ...], ...]
    m_relay_dest: tuple[int, ...]
    m_source_dest: tuple[int, ...]
    p_source: tuple[float, ...]
    p_relay: tuple[tuple[float, ...], ...]
    noise: float = 1.0
    path_loss_exponent: float = 3.5
    correlation: tuple[tuple[float, ...], ...] | None = None
    _eps_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        L, Q = self.num_sources, self.num_relays
        if not isinstance(L, int) or L < 1:
            raise ValidationError(f"num_sources must be a positive integer, got {L!r}")
        if not isinstance(Q, int) or Q < 0:
            raise ValidationError(f"num_relays must be a nonnegative integer, got {Q!r}")

        def table(rows, nr, nc, conv, what):
            rows = tuple(tuple(r) for r in rows)
            if len(rows) != nr or any(len(r) != nc for r in rows):
                raise ValidationError(f"{what} must be a {nr}x{nc} table")
            return tuple(tuple(conv(v, f"{what}[{i + 1}][{j + 1}]") for j, v in enumerate(r)) for i, r in enumerate(rows))

        def seq(vals, n, conv, what):
            vals = tuple(vals)
            if len(vals) != n:
                raise ValidationError(f"{what} must have length {n}, got {len(vals)}")
            return tuple(conv(v, f"{what}[{i + 1}]") for i, v in enumerate(vals))

        s = object.__setattr__
        s(self, "d_source_relay", table(self.d_source_relay, L, Q, _positive, "d_source_relay"))
        s(self, "d_relay_dest", seq(self.d_relay_dest, Q, _positive, "d_relay_dest"))
        s(self, "d_source_dest", seq(self.d_source_dest, L, _positive, "d_source_dest"))
        s(self, "m_source_relay", table(self.m_source_relay, L, Q, _as_int_m, "m_source_relay"))
        s(self, "m_relay_dest", seq(self.m_relay_dest, Q, _as_int_m, "m_relay_dest"))
        s(self, "m_source_dest", seq(self.m_source_dest, L, _as_int_m, "m_source_dest"))
        s(self, "p_source", seq(self.p_source, L, _nonneg, "p_source"))
        s(self, "p_relay", table(self.p_relay, Q, L, _nonneg, "p_relay"))
        s(self, "noise", _positive(self.noise, "noise"))
        s(self, "path_loss_exponent", _positive(self.path_loss_exponent, "path_loss_exponent"))

        if self.correlation is None:
            s(self, "correlation", tuple(tuple(float(i == j) for j in range(max(Q, 1))) for i in range(max(Q, 1))))
        R = np.asarray(self.correlation, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] not in {Q, L, max(Q, 1)}:
            raise ValidationError(f"correlation must be QxQ or LxL, got shape {R.shape}")
        if not np.allclose(np.diag(R), 1.0, rtol=0, atol=1e-12):
            raise ValidationError("correlation matrix must have unit diagonal")
        off = R[~np.eye(R.shape[0], dtype=bool)]
        if np.any(np.abs(off) >= 1):
            raise ValidationError("cross-correlations must satisfy |rho| < 1")
        if not np.allclose(np.abs(R), np.abs(R.T), rtol=0, atol=1e-12):
            raise ValidationError("correlation matrix must be symmetric in magnitude")
        s(self, "correlation", tuple(tuple(float(v) for v in row) for row in R))
        if Q > 0:
            # fail early on singular matrices
            epsilon_for_symbol(R, 1)

    @property
    def L(self) -> int:
        return self.num_sources

    @property
    def Q(self) -> int:
        return self.num_relays

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def _check_l(self, l: int) -> None:
        if not 1 <= l <= self.num_sources:
            raise ValidationError(f"source index {l} out of range 1..{self.num_sources}")

    def _check_q(self, q: int) -> None:
        if not 1 <= q <= self.num_relays:
            raise ValidationError(f"relay index {q} out of range 1..{self.num_relays}")

    def epsilon(self, l: int) -> float:
        """Despreading penalty for source ``l`` (1.0 when no relays are present)."""
        if self.num_relays == 0:
            return 1.0
        if l not in self._eps_cache:
            R = self.correlation
            if l > len(R):
                raise ValidationError(f"correlation matrix of size {len(R)} has no code for source {l}")
            self._eps_cache[l] = epsilon_for_symbol(R, l)
        return self._eps_cache[l]

    def direct_snr(self, l: int) -> float:
        """``c_0 = P_l d_ld^-alpha / N_0``."""
        self._check_l(l)
        return self.p_source[l - 1] * self.d_source_dest[l - 1] ** (-self.path_loss_exponent) / self.noise

    def relay_branch_snr(self, l: int, q: int) -> float:
        """``c_q = P_ql d_qd^-alpha / (N_0 eps_l)``."""
        self._check_l(l)
        self._check_q(q)
        return (
            self.p_relay[q - 1][l - 1]
            * self.d_relay_dest[q - 1] ** (-self.path_loss_exponent)
            / (self.noise * self.epsilon(l))
        )

    def relay_input_snrs(self, l: int) -> tuple[float, ...]:
        return tuple(relay_input_snr(self, l, q) for q in range(1, self.num_relays + 1))


def relay_input_snr(scn: Scenario, l: int, q: int) -> float:
    """Average SNR of source ``l`` at relay ``q``: ``P_l d_lq^-alpha / N_0``."""
    scn._check_l(l)
    scn._check_q(q)
    return scn.p_source[l - 1] * scn.d_source_relay[l - 1][q - 1] ** (-scn.path_loss_exponent) / scn.noise


def equivalent_snr_set(scn: Scenario, l: int, state: DecodingState | Sequence[bool]) -> SnrSet:
    """Branches seen by the destination's MRC for ``x_l`` under ``state``."""
    if not isinstance(state, DecodingState):
        state = DecodingState(tuple(state))
    if state.num_relays != scn.num_relays:
        raise ValidationError(f"state has {state.num_relays} relays, scenario has {scn.num_relays}")
    entries = [(scn.direct_snr(l), scn.m_source_dest[l - 1])]
    for q, ok in enumerate(state.bits, start=1):
        if ok:
            entries.append((scn.relay_branch_snr(l, q), scn.m_relay_dest[q - 1]))
    return SnrSet(tuple(entries))


def uniform_scenario(
    num_relays: int,
    *,
    num_sources: int = 1,
    m: int = 1,
    distance: float = 1.0,
    power: float = 1.0,
    noise: float = 1.0,
    path_loss_exponent: float = 3.5,
    rho: float = 0.0,
) -> Scenario:
    """Scenario with every link identical; handy for tests and quick studies."""
    L, Q = num_sources, num_relays
    n = max(Q, 1)
    corr = tuple(tuple(1.0 if i == j else rho for j in range(n)) for i in range(n))
    return Scenario(
        num_sources=L,
        num_relays=Q,
        d_source_relay=((distance,) * Q,) * L,
        d_relay_dest=(distance,) * Q,
        d_source_dest=(distance,) * L,
        m_source_relay=((m,) * Q,) * L,
        m_relay_dest=(m,) * Q,
        m_source_dest=(m,) * L,
        p_source=(power,) * L,
        p_relay=((power,) * L,) * Q,
        noise=noise,
        path_loss_exponent=path_loss_exponent,
        correlation=corr,
    )


def gain_scenario(
    direct: float,
    relay_dest: Sequence[float],
    source_relay: Sequence[float],
    *,
    m_direct: int = 1,
    m_relay_dest: Sequence[int] | int = 1,
    m_source_relay: Sequence[int] | int = 1,
    snr: float = 1.0,
    path_loss_exponent: float = 3.5,
) -> Scenario:
    """Single-source scenario built from linear link gains instead of distances.

    Each gain ``g`` becomes an equivalent distance ``g ** (-1/alpha)`` with
    unit transmit powers, so the average SNR of that link is ``g * snr``.
    """
    Q = len(relay_dest)
    if len(source_relay) != Q:
        raise ValidationError("relay_dest and source_relay gains must have equal length")
    if isinstance(m_relay_dest, int):
        m_relay_dest = (m_relay_dest,) * Q
    if isinstance(m_source_relay, int):
        m_source_relay = (m_source_relay,) * Q
    inv = -1.0 / path_loss_exponent
    return Scenario(
        num_sources=1,
        num_relays=Q,
        d_source_relay=(tuple(_positive(g, "gain") ** inv for g in source_relay),),
        d_relay_dest=tuple(_positive(g, "gain") ** inv for g in relay_dest),
        d_source_dest=(_positive(direct, "gain") ** inv,),
        m_source_relay=(tuple(m_source_relay),),
        m_relay_dest=tuple(m_relay_dest),
        m_source_dest=(m_direct,),
        p_source=(1.0,),
        p_relay=tuple((1.0,) for _ in range(Q)),
        noise=1.0 / snr,
        path_loss_exponent=path_loss_exponent,
    )

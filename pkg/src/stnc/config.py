"""Flat ``key = value`` scenario files.

Grammar
-------
One assignment per line; ``#`` starts a comment; blank lines are ignored.
Keys are dotted paths and indices are 1-based::

    sources = 1                      # L (default 1)
    relays = 2                       # Q (required)
    modulation = 4qam                # bpsk, qpsk, 8psk, 16qam, ...
    source_index = 1                 # which source's SER to report
    path_loss_exponent = 3.5         # default 3.5
    snr_db = 10                      # sets noise = 10^(-snr_db/10); or
    noise = 0.1                      # linear noise power (default 1)
    m = 2                            # default fading parameter of every link
    power = 1                        # default transmit power of every node

    source.1.power = 1               # P_l
    source.1.d_to_dest = 1.0         # d_ld  (or source.1.gain_to_dest)
    source.1.m_to_dest = 2           # m_ld
    source.1.relay.2.d = 0.8         # d_lq  (or source.1.relay.2.gain)
    source.1.relay.2.m = 2           # m_lq
    relay.1.d_to_dest = 0.9          # d_qd  (or relay.1.gain_to_dest)
    relay.1.m_to_dest = 2            # m_qd
    relay.1.power = 1                # P_ql for every source l
    relay.1.power.2 = 0.5            # P_ql for source l = 2 only
    codes = 2                        # size of the code correlation matrix: Q (default) or L
    correlation = 0.3                # every off-diagonal rho of the matrix
    correlation.1.2 = 0.3            # one entry; its mirror gets the same value

A ``gain`` key gives a link's linear gain ``g`` instead of its distance and is
stored as the distance ``g ** (-1/alpha)``, so that link's average SNR is
``g * P / N_0``. Unspecified distances default to 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, ValidationError
from .modulation import Modulation
from .network import Scenario

_NUM = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

_GLOBAL_KEYS = {"sources", "relays", "modulation", "source_index", "path_loss_exponent", "snr_db", "noise", "m", "power", "codes"}


@dataclass(frozen=True)
class RunConfig:
    """A parsed config: the scenario plus run-level settings."""

    scenario: Scenario
    modulation: Modulation | None = None
    source_index: int = 1


@dataclass
class _Entry:
    value: str
    line: int
    key: str

    def number(self) -> float:
        if not _NUM.match(self.value):
            raise ParseError(f"expected a number, got {self.value!r}", self.line, self.key)
        return float(self.value)

    def integer(self) -> int:
        if not re.fullmatch(r"[+-]?\d+", self.value):
            raise ParseError(f"expected an integer, got {self.value!r}", self.line, self.key)
        return int(self.value)


def _tokenize(text: str) -> dict[str, _Entry]:
    entries: dict[str, _Entry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z0-9_]+)*", key):
            raise ParseError("malformed key", lineno, key)
        if not value:
            raise ParseError("missing value", lineno, key)
        if key in entries:
            raise ParseError(f"duplicate key (first set on line {entries[key].line})", lineno, key)
        entries[key] = _Entry(value, lineno, key)
    return entries


def _index(e: _Entry, token: str, upper: int, what: str) -> int:
    if not token.isdigit():
        raise ParseError(f"{what} index must be a positive integer", e.line, e.key)
    i = int(token)
    if not 1 <= i <= upper:
        raise ParseError(f"{what} index {i} out of range 1..{upper}", e.line, e.key)
    return i


def parse_config_text(text: str) -> RunConfig:
    """Parse config text into a validated :class:`RunConfig`."""
    entries = _tokenize(text)

    def get(key, conv, default):
        e = entries.get(key)
        return default if e is None else conv(e)

    if "relays" not in entries:
        raise ParseError("required key is missing", key="relays")
    L = get("sources", _Entry.integer, 1)
    Q = get("relays", _Entry.integer, None)
    if L < 1:
        raise ValidationError(f"sources must be >= 1, got {L}")
    if not 0 <= Q <= 16:
        raise ValidationError(f"relays must lie in 0..16, got {Q}")
    alpha = get("path_loss_exponent", _Entry.number, 3.5)
    if not alpha > 0:
        raise ValidationError(f"path_loss_exponent must be positive, got {alpha}")
    if "snr_db" in entries and "noise" in entries:
        raise ParseError("give either snr_db or noise, not both", entries["noise"].line, "noise")
    if "snr_db" in entries:
        noise = 10.0 ** (-entries["snr_db"].number() / 10.0)
    else:
        noise = get("noise", _Entry.number, 1.0)
    m0 = get("m", _Entry.number, 1)
    p0 = get("power", _Entry.number, 1.0)

    modulation = None
    if "modulation" in entries:
        e = entries["modulation"]
        try:
            modulation = Modulation.parse(e.value)
        except ValidationError as exc:
            raise ParseError(str(exc), e.line, e.key) from None
    source_index = get("source_index", _Entry.integer, 1)
    if not 1 <= source_index <= L:
        raise ValidationError(f"source_index {source_index} out of range 1..{L}")

    d_lq = [[1.0] * Q for _ in range(L)]
    m_lq = [[m0] * Q for _ in range(L)]
    d_ld = [1.0] * L
    m_ld = [m0] * L
    d_qd = [1.0] * Q
    m_qd = [m0] * Q
    p_l = [p0] * L
    p_ql = [[p0] * L for _ in range(Q)]
    K = get("codes", _Entry.integer, Q)
    if Q and K not in (Q, L):
        raise ValidationError(f"codes must equal the relay count {Q} or the source count {L}, got {K}")
    corr = [[1.0 if i == j else 0.0 for j in range(K)] for i in range(K)]
    explicit_corr: set[tuple[int, int]] = set()
    link_source: dict[tuple, str] = {}

    def to_distance(e: _Entry) -> float:
        g = e.number()
        if not g > 0:
            raise ValidationError(f"{e.key}: gain must be positive, got {g}")
        return g ** (-1.0 / alpha)

    def set_link(e: _Entry, link: tuple, is_gain: bool) -> float:
        if link in link_source:
            raise ParseError(f"link already set by {link_source[link]!r}", e.line, e.key)
        link_source[link] = e.key
        return to_distance(e) if is_gain else e.number()

    # the global correlation first so per-entry keys override it
    if "correlation" in entries and Q:
        rho = entries["correlation"].number()
        for i in range(K):
            for j in range(K):
                if i != j:
                    corr[i][j] = rho

    for key, e in entries.items():
        if key in _GLOBAL_KEYS or key == "correlation":
            continue
        parts = key.split(".")
        head = parts[0]
        if head == "source" and len(parts) >= 3:
            l = _index(e, parts[1], L, "source") - 1
            rest = parts[2:]
            if rest == ["power"]:
                p_l[l] = e.number()
            elif rest in (["d_to_dest"], ["gain_to_dest"]):
                d_ld[l] = set_link(e, ("ld", l), rest[0] == "gain_to_dest")
            elif rest == ["m_to_dest"]:
                m_ld[l] = e.number()
            elif len(rest) == 3 and rest[0] == "relay":
                q = _index(e, rest[1], Q, "relay") - 1
                if rest[2] in ("d", "gain"):
                    d_lq[l][q] = set_link(e, ("lq", l, q), rest[2] == "gain")
                elif rest[2] == "m":
                    m_lq[l][q] = e.number()
                else:
                    raise ParseError("unknown key", e.line, key)
            else:
                raise ParseError("unknown key", e.line, key)
        elif head == "relay" and len(parts) >= 3:
            q = _index(e, parts[1], Q, "relay") - 1
            rest = parts[2:]
            if rest in (["d_to_dest"], ["gain_to_dest"]):
                d_qd[q] = set_link(e, ("qd", q), rest[0] == "gain_to_dest")
            elif rest == ["m_to_dest"]:
                m_qd[q] = e.number()
            elif rest == ["power"]:
                p_ql[q] = [e.number()] * L
            elif len(rest) == 2 and rest[0] == "power":
                continue  # applied below so it overrides relay.Q.power
            else:
                raise ParseError("unknown key", e.line, key)
        elif head == "correlation" and len(parts) == 3:
            if Q == 0:
                raise ParseError("no relays, so no correlation entries", e.line, key)
            i = _index(e, parts[1], K, "code") - 1
            j = _index(e, parts[2], K, "code") - 1
            if i == j:
                raise ParseError("diagonal entries are fixed at 1", e.line, key)
            rho = e.number()
            corr[i][j] = rho
            explicit_corr.add((i, j))
            if (j, i) not in explicit_corr:
                corr[j][i] = rho
        else:
            raise ParseError("unknown key", e.line, key)

    for key, e in entries.items():
        parts = key.split(".")
        if parts[0] == "relay" and len(parts) == 4 and parts[2] == "power":
            q = _index(e, parts[1], Q, "relay") - 1
            l = _index(e, parts[3], L, "source") - 1
            p_ql[q][l] = e.number()

    scn = Scenario(
        num_sources=L,
        num_relays=Q,
        d_source_relay=d_lq,
        d_relay_dest=d_qd,
        d_source_dest=d_ld,
        m_source_relay=m_lq,
        m_relay_dest=m_qd,
        m_source_dest=m_ld,
        p_source=p_l,
        p_relay=p_ql,
        noise=noise,
        path_loss_exponent=alpha,
        correlation=corr if Q else None,
    )
    return RunConfig(scenario=scn, modulation=modulation, source_index=source_index)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config_text(text)


def parse_scenario(path: str | Path) -> Scenario:
    """Read a config file and return its validated :class:`Scenario`."""
    return load_config(path).scenario


def _fmt(x: float) -> str:
    return repr(float(x))


def format_scenario(scn: Scenario, modulation: Modulation | None = None, source_index: int | None = None) -> str:
    """Render ``scn`` in the config grammar (distances, not gains)."""
    out = [f"sources = {scn.num_sources}", f"relays = {scn.num_relays}"]
    if modulation is not None:
        out.append(f"modulation = {modulation}")
    if source_index is not None:
        out.append(f"source_index = {source_index}")
    out += [f"path_loss_exponent = {_fmt(scn.path_loss_exponent)}", f"noise = {_fmt(scn.noise)}"]
    for l in range(scn.num_sources):
        p = f"source.{l + 1}"
        out += [
            f"{p}.power = {_fmt(scn.p_source[l])}",
            f"{p}.d_to_dest = {_fmt(scn.d_source_dest[l])}",
            f"{p}.m_to_dest = {scn.m_source_dest[l]}",
        ]
        for q in range(scn.num_relays):
            out += [
                f"{p}.relay.{q + 1}.d = {_fmt(scn.d_source_relay[l][q])}",
                f"{p}.relay.{q + 1}.m = {scn.m_source_relay[l][q]}",
            ]
    for q in range(scn.num_relays):
        p = f"relay.{q + 1}"
        out += [f"{p}.d_to_dest = {_fmt(scn.d_relay_dest[q])}", f"{p}.m_to_dest = {scn.m_relay_dest[q]}"]
        out += [f"{p}.power.{l + 1} = {_fmt(scn.p_relay[q][l])}" for l in range(scn.num_sources)]
    if scn.num_relays:
        R = scn.correlation
        out.append(f"codes = {len(R)}")
        for i in range(len(R)):
            for j in range(len(R)):
                if i != j and R[i][j] != 0.0:
                    out.append(f"correlation.{i + 1}.{j + 1} = {_fmt(R[i][j])}")
    return "\n".join(out) + "\n"


__all__ = ["RunConfig", "format_scenario", "load_config", "parse_config_text", "parse_scenario"]

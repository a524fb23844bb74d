"""Parameter sweeps over a scenario, emitted as CSV."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .asymptotic import asymptotic_total_ser
from .errors import StncError, ValidationError
from .exact import total_ser
from .modulation import Modulation
from .montecarlo import McConfig, mc_total_ser
from .network import Scenario

AXES = ("snr_db", "power_split_xi", "correlation_rho", "relay_distance")
ENGINES = ("exact", "asymptotic", "mc")
COLUMNS = ("axis_value", "ser_exact", "ser_asymptotic", "ser_mc", "mc_ci_low", "mc_ci_high", "trials", "seed")
MAX_RELAYS = 16


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: ``steps`` evenly spaced values of ``axis`` on ``[start, stop]``.

    ``relay_index`` picks the relay moved by the ``relay_distance`` axis.
    Every MC point reuses ``mc.seed``, so neighbouring points share their
    random numbers and the curve stays smooth.
    """

    axis: str
    start: float
    stop: float
    steps: int
    engines: tuple[str, ...] = ("exact",)
    mc: McConfig | None = None
    source_index: int = 1
    relay_index: int = 1
    perturb_poles: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ValidationError(f"unknown axis {self.axis!r}; choose from {', '.join(AXES)}")
        if not self.start < self.stop:
            raise ValidationError(f"start ({self.start}) must be below stop ({self.stop})")
        if self.steps < 2:
            raise ValidationError(f"steps must be >= 2, got {self.steps}")
        engines = tuple(dict.fromkeys(self.engines))
        if not engines:
            raise ValidationError("at least one engine is required")
        bad = [e for e in engines if e not in ENGINES]
        if bad:
            raise ValidationError(f"unknown engine(s) {', '.join(bad)}; choose from {', '.join(ENGINES)}")
        object.__setattr__(self, "engines", engines)
        if "mc" in engines and self.mc is None:
            object.__setattr__(self, "mc", McConfig())
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


def apply_axis(scn: Scenario, axis: str, x: float, *, source_index: int = 1, relay_index: int = 1) -> Scenario:
    """Scenario at sweep coordinate ``x``.

    * ``snr_db``: noise ``N_0 = 10^(-x/10)``, so every SNR scales with ``10^(x/10)``.
    * ``power_split_xi``: two relays keep their total power ``T`` per source and
      split it as ``P_1 = x T``, ``P_2 = (1 - x) T``.
    * ``correlation_rho``: every off-diagonal code correlation set to ``x``.
    * ``relay_distance``: the chosen relay sits on the source-destination line,
      ``d_lq = x`` and ``d_qd = d_ld - x``.
    """
    x = float(x)
    if axis == "snr_db":
        return scn.replace(noise=10.0 ** (-x / 10.0))
    if axis == "power_split_xi":
        if scn.num_relays != 2:
            raise ValidationError(f"power_split_xi needs exactly 2 relays, scenario has {scn.num_relays}")
        if not 0 < x < 1:
            raise ValidationError(f"xi must lie strictly inside (0, 1), got {x}")
        totals = [scn.p_relay[0][l] + scn.p_relay[1][l] for l in range(scn.num_sources)]
        p = (tuple(x * t for t in totals), tuple((1 - x) * t for t in totals))
        return scn.replace(p_relay=p)
    if axis == "correlation_rho":
        n = len(scn.correlation)
        R = tuple(tuple(1.0 if i == j else x for j in range(n)) for i in range(n))
        return scn.replace(correlation=R)
    if axis == "relay_distance":
        l, q = source_index - 1, relay_index - 1
        if not 0 <= q < scn.num_relays:
            raise ValidationError(f"relay index {relay_index} out of range 1..{scn.num_relays}")
        d_ld = scn.d_source_dest[l]
        if not 0 < x < d_ld:
            raise ValidationError(f"relay distance must lie in (0, {d_ld}), got {x}")
        d_lq = [list(r) for r in scn.d_source_relay]
        d_lq[l][q] = x
        d_qd = list(scn.d_relay_dest)
        d_qd[q] = d_ld - x
        return scn.replace(d_source_relay=d_lq, d_relay_dest=d_qd)
    raise ValidationError(f"unknown axis {axis!r}")


@dataclass
class SweepRow:
    axis_value: float
    ser_exact: float | None = None
    ser_asymptotic: float | None = None
    ser_mc: float | None = None
    mc_ci_low: float | None = None
    mc_ci_high: float | None = None
    trials: int | None = None
    seed: int | None = None

    def cells(self) -> list[str]:
        out = []
        for name in COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, int):
                out.append(str(v))
            else:
                out.append(repr(float(v)))
        return out


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows], dtype=float)


def _point(scn: Scenario, mod: Modulation, spec: SweepSpec, x: float) -> SweepRow:
    row = SweepRow(axis_value=float(x))
    try:
        s = apply_axis(scn, spec.axis, x, source_index=spec.source_index, relay_index=spec.relay_index)
        l = spec.source_index
        if "exact" in spec.engines:
            row.ser_exact = total_ser(s, l, mod, perturb=spec.perturb_poles)
        if "asymptotic" in spec.engines:
            row.ser_asymptotic = asymptotic_total_ser(s, l, mod).value
        if "mc" in spec.engines:
            est = mc_total_ser(s, l, mod, spec.mc)
            row.ser_mc, row.mc_ci_low, row.mc_ci_high = est.mean, est.ci_low, est.ci_high
            row.trials, row.seed = est.trials, est.seed
    except StncError as exc:
        exc.args = (f"{spec.axis}={float(x)!r}: {exc}",)
        raise
    return row


def run_sweep(scn: Scenario, mod: Modulation, spec: SweepSpec) -> SweepResult:
    """Evaluate every requested engine at each sweep point; rows come back in axis order."""
    if scn.num_relays > MAX_RELAYS:
        raise ValidationError(f"at most {MAX_RELAYS} relays are supported, got {scn.num_relays}")
    if not 1 <= spec.source_index <= scn.num_sources:
        raise ValidationError(f"source index {spec.source_index} out of range 1..{scn.num_sources}")
    xs = spec.values
    if spec.workers > 1:
        with ThreadPoolExecutor(spec.workers) as pool:
            rows = list(pool.map(lambda x: _point(scn, mod, spec, x), xs))
    else:
        rows = [_point(scn, mod, spec, x) for x in xs]
    return SweepResult(spec, rows)


def snr_db_at(f: Callable[[float], float], target: float, lo: float = -20.0, hi: float = 120.0) -> float:
    """SNR (dB) at which the decreasing curve ``f`` reaches ``target``."""
    g = lambda x: math.log10(f(x)) - math.log10(target)  # noqa: E731
    if g(lo) < 0 or g(hi) > 0:
        raise ValidationError(f"target SER {target:g} is not bracketed on [{lo}, {hi}] dB")
    return brentq(g, lo, hi, xtol=1e-9)


def fitted_slope(scn: Scenario, l: int, mod: Modulation, *, floor: float = 1e-6, decades: float = 1.0) -> float:
    """Log-log slope magnitude of the exact SER over the last ``decades`` before ``floor``."""

    def ser(x):
        return total_ser(apply_axis(scn, "snr_db", x), l, mod)

    hi_ser = floor * 10.0**decades
    x1 = snr_db_at(ser, hi_ser)
    x2 = snr_db_at(ser, floor)
    return (math.log10(hi_ser) - math.log10(floor)) / ((x2 - x1) / 10.0)

"""``stnc`` command line.

Subcommands::

    stnc ser --config net.cfg --axis snr_db --start 0 --stop 30 --steps 31 \\
             --engines exact,asymptotic,mc --trials 1000000 --seed 42 --out ser.csv
    stnc diversity --config net.cfg [--fit]
    stnc pdfcheck --config net.cfg --state 0b11

Exit status: 0 success, 2 parse or validation error, 3 coincident poles,
4 internal consistency failure. Errors go to stderr as one line that starts
with a machine-readable code, e.g. ``ERR_PARSE line 3, key 'relays': ...``.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotic import diversity_order
from .config import RunConfig, load_config
from .errors import InternalConsistency, StncError, ValidationError
from .modulation import Modulation
from .montecarlo import McConfig, pdf_by_cf_inversion
from .network import DecodingState, SnrSet, equivalent_snr_set
from .residue import conditional_pdf, residue_table
from .sweep import AXES, SweepSpec, fitted_slope, run_sweep

PDF_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep the one-line error contract for usage errors too
        self.exit(2, f"ERR_USAGE {self.prog}: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stnc", description="SER of space-time network coded relay uplinks over Nakagami-m fading.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ser", help="sweep the symbol error rate and write CSV")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--axis", required=True, choices=AXES)
    s.add_argument("--start", required=True, type=float)
    s.add_argument("--stop", required=True, type=float)
    s.add_argument("--steps", required=True, type=int)
    s.add_argument("--engines", default="exact", help="comma list of exact, asymptotic, mc (default: exact)")
    s.add_argument("--trials", type=int, default=1_000_000, help="MC trials per point")
    s.add_argument("--seed", type=int, default=0, help="MC seed, reused at every point")
    s.add_argument("--confidence", type=float, default=0.99)
    s.add_argument("--modulation", help="override the config's modulation, e.g. 4qam or 8psk")
    s.add_argument("--source", type=int, help="source index l (default: config source_index)")
    s.add_argument("--relay", type=int, default=1, help="relay moved by the relay_distance axis")
    s.add_argument("--perturb-poles", action="store_true", help="separate coincident poles instead of failing")
    s.add_argument("--workers", type=int, default=1, help="threads for sweep points and MC chunks")
    s.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    d = sub.add_parser("diversity", help="report the diversity order")
    d.add_argument("--config", required=True, type=Path)
    d.add_argument("--source", type=int)
    d.add_argument("--modulation")
    d.add_argument("--fit", action="store_true", help="also fit the exact SER slope over the decade above 1e-6")

    c = sub.add_parser("pdfcheck", help="compare the residue PDF with CF inversion for one decoding state")
    c.add_argument("--config", required=True, type=Path)
    c.add_argument("--state", required=True, help="decoding state as an integer, e.g. 3 or 0b011")
    c.add_argument("--source", type=int)
    c.add_argument("--points", type=int, default=25, help="grid points (default: 25)")
    c.add_argument("--perturb-poles", action="store_true")
    return p


def _modulation(cfg: RunConfig, override: str | None) -> Modulation:
    if override:
        return Modulation.parse(override)
    if cfg.modulation is None:
        raise ValidationError("no modulation: set 'modulation' in the config or pass --modulation")
    return cfg.modulation


def _source(cfg: RunConfig, override: int | None) -> int:
    l = cfg.source_index if override is None else override
    if not 1 <= l <= cfg.scenario.num_sources:
        raise ValidationError(f"source index {l} out of range 1..{cfg.scenario.num_sources}")
    return l


def cmd_ser(args) -> int:
    cfg = load_config(args.config)
    mod = _modulation(cfg, args.modulation)
    engines = tuple(e.strip() for e in args.engines.split(",") if e.strip())
    mc = None
    if "mc" in engines:
        mc = McConfig(trials=args.trials, seed=args.seed, confidence=args.confidence, workers=args.workers)
    spec = SweepSpec(
        axis=args.axis,
        start=args.start,
        stop=args.stop,
        steps=args.steps,
        engines=engines,
        mc=mc,
        source_index=_source(cfg, args.source),
        relay_index=args.relay,
        perturb_poles=args.perturb_poles,
        workers=1 if mc is not None else args.workers,
    )
    text = run_sweep(cfg.scenario, mod, spec).to_csv()
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return 0


def cmd_diversity(args) -> int:
    cfg = load_config(args.config)
    scn = cfg.scenario
    l = _source(cfg, args.source)
    m_ld = scn.m_source_dest[l - 1]
    m_lq = scn.m_source_relay[l - 1]
    m_qd = scn.m_relay_dest
    div = diversity_order(m_ld, m_lq, m_qd)
    terms = " + ".join([str(m_ld)] + [f"min({a},{b})" for a, b in zip(m_qd, m_lq)])
    print(f"diversity {div}")
    print(f"source {l}: m_ld + sum_q min(m_qd, m_lq) = {terms} = {div}")
    if args.fit:
        mod = _modulation(cfg, args.modulation)
        slope = fitted_slope(scn, l, mod)
        print(f"fitted {slope:.4f}")
        print(f"exact {mod} SER slope over SER 1e-5..1e-6: {slope:.4f} ({100 * (slope / div - 1):+.2f}% vs analytic)")
    return 0


def _parse_state(text: str, num_relays: int) -> DecodingState:
    try:
        value = int(text, 0)
    except ValueError:
        raise ValidationError(f"cannot parse state {text!r}; use an integer such as 3 or 0b011") from None
    return DecodingState.from_value(value, num_relays)


def cmd_pdfcheck(args) -> int:
    cfg = load_config(args.config)
    scn = cfg.scenario
    l = _source(cfg, args.source)
    state = _parse_state(args.state, scn.num_relays)
    snrs = equivalent_snr_set(scn, l, state)
    table = residue_table(snrs, perturb=args.perturb_poles)
    if table.perturbation:
        print(f"perturbed branches: {table.perturbation}")
    if args.points < 2:
        raise ValidationError("--points must be >= 2")
    grid = np.linspace(0.0, table.mean() + 6.0 * table.std(), args.points)
    res = conditional_pdf(table, grid)
    cf = pdf_by_cf_inversion(SnrSet(table.poles), grid)
    peak = table.peak()
    err = float(np.max(np.abs(res - cf))) / peak
    mass = float(table.mass())
    print(f"state {state} (S={state.value}), branches {list(snrs.entries)}")
    print("v,residue_pdf,cf_pdf")
    for v, a, b in zip(grid, res, cf):
        print(f"{float(v)!r},{float(a)!r},{float(b)!r}")
    print(f"max |residue - cf| / peak = {err:.3e} (tolerance {PDF_TOL:g})")
    print(f"mass - 1 = {mass - 1:.3e}")
    if err > PDF_TOL or abs(mass - 1) > PDF_TOL:
        raise InternalConsistency(f"PDF check failed: deviation {err:.3e} of peak, mass error {mass - 1:.3e}")
    return 0


COMMANDS = {"ser": cmd_ser, "diversity": cmd_diversity, "pdfcheck": cmd_pdfcheck}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except StncError as exc:
        msg = " ".join(str(exc).split())
        print(f"{exc.code} {msg}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ERR_IO {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

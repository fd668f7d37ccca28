"""``hessclip`` command-line entry point."""

from __future__ import annotations

import argparse
import os
import sys

from ..exceptions import HessClipError
from ..schedules import (
    ProblemConstants,
    Provenance,
    schedule_clip_nsgdm_baseline,
    schedule_thm2,
    schedule_thm3,
    schedule_thm3_shape,
)
from .config import ExperimentConfig
from .experiments import DRIVERS, single_run
from .io import Table, emit_csv, trace_table

SWEEPS = ("clip_sensitivity", "fig5", "fig4")
COMPARISONS = ("fig2", "fig4")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML experiment file; flags override its values")
    p.add_argument("--seed", type=int, help="seed (run) or first seed of the list (other commands)")
    p.add_argument("--seeds", type=int, help="number of consecutive seeds")
    p.add_argument("--T", type=int, help="iteration budget")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--format", choices=["csv"], default="csv")


def _load(args, experiment: str) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        base = dict(cfg.raw)
        if getattr(args, "experiment", None) and args.experiment != cfg.experiment:
            base["experiment"] = args.experiment
    else:
        base = {"experiment": experiment}
    if args.T is not None:
        base["T"] = args.T
    if args.seeds is not None or args.seed is not None:
        current = base.get("seeds", 21)
        n = args.seeds if args.seeds is not None else (current if isinstance(current, int) else len(current))
        start = args.seed if args.seed is not None else 0
        base["seeds"] = list(range(start, start + n))
    if args.out is not None:
        base["out"] = args.out
    return ExperimentConfig.from_dict(base)


def _write(table: Table, out: str | None, runs: Table | None = None) -> None:
    text = emit_csv(table, out)
    if out in (None, "-"):
        sys.stdout.write(text)
    elif runs is not None:
        stem, ext = os.path.splitext(out)
        emit_csv(runs, f"{stem}.runs{ext or '.csv'}")


def cmd_run(args) -> None:
    cfg = _load(args, "run")
    idx = 0
    if args.method:
        names = [o.method for o in cfg.optimizers]
        if args.method not in names:
            raise HessClipError(f"method {args.method!r} is not configured; have {names}")
        idx = names.index(args.method)
    tr = single_run(cfg, idx, cfg.seeds[0])
    _write(trace_table(tr), cfg.out)


def cmd_experiment(args, default: str) -> None:
    cfg = _load(args, args.experiment or default)
    res = DRIVERS[cfg.experiment](cfg)
    _write(res.table, cfg.out, res.runs)


def cmd_hard_instance(args) -> None:
    cfg = _load(args, "hard_instance")
    over = {k: v for k, v in (("Delta", args.Delta), ("epsilon", args.epsilon), ("p", args.p),
                              ("sigma", args.sigma)) if v is not None}
    if over:
        raw = dict(cfg.raw)
        raw["sweep"] = {**raw.get("sweep", {}), **over}
        cfg = ExperimentConfig.from_dict(raw)
    res = DRIVERS["hard_instance"](cfg)
    if args.params_only:
        _write(res.runs, cfg.out)
    else:
        _write(res.table, cfg.out, res.runs)


def cmd_schedule(args) -> None:
    kind = Provenance(args.kind)
    if kind is Provenance.THM3_SHAPE:
        sch = schedule_thm3_shape(args.T, args.p)
    elif kind is Provenance.CLIP_NSGDM_BASELINE:
        sch = schedule_clip_nsgdm_baseline(T=args.T, p=args.p)
    else:
        c = ProblemConstants(delta=args.delta, L=args.L, sigma=args.sigma, sigma_h=args.sigma_h, p=args.p,
                             epsilon=args.epsilon, T=args.T, delta_prob=args.delta_prob)
        sch = schedule_thm2(c) if kind is Provenance.THM2 else schedule_thm3(c, args.constants)
    echo = sch.echo()
    cols = list(echo)
    _write(Table(cols, [[echo[c] for c in cols]], {"kind": kind.value}), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hessclip", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one trace")
    _common(p)
    p.add_argument("--method", help="which configured optimizer to run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid over lam, lam_h_bar or the tail index")
    _common(p)
    p.add_argument("--experiment", choices=SWEEPS, default=None)
    p.set_defaults(func=lambda a: cmd_experiment(a, "clip_sensitivity"))

    p = sub.add_parser("compare", help="method comparison drivers")
    _common(p)
    p.add_argument("--experiment", choices=COMPARISONS, default=None)
    p.set_defaults(func=lambda a: cmd_experiment(a, "fig2"))

    p = sub.add_parser("hard-instance", help="scaled zero-chain instances and optimizer runs on them")
    _common(p)
    for name in ("Delta", "epsilon", "p", "sigma"):
        p.add_argument(f"--{name}", type=float, nargs="+")
    p.add_argument("--params-only", action="store_true", help="emit only the (T_dim, nu, beta, rho) table")
    p.set_defaults(func=cmd_hard_instance, experiment=None)

    p = sub.add_parser("schedule", help="print resolved stepsize, momentum and clip levels")
    p.add_argument("--kind", choices=[v.value for v in Provenance if v is not Provenance.MANUAL], default="thm3")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--sigma-h", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--delta-prob", type=float, default=0.1)
    p.add_argument("--constants", choices=["explicit", "unit"], default="explicit")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_schedule)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (HessClipError, ValueError) as e:
        print(f"hessclip: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"hessclip: error: cannot write output: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Experiment drivers. Each is a pure function of its config and seed list."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import hardinstance as hi
from ..exceptions import ConfigurationError
from ..numerics import euclidean_norm
from ..optimizers import run
from ..trace import RunTrace, iterations_to_target
from .config import ExperimentConfig, OptimizerSpec, resolve_schedule
from .io import Table

RUN_COLUMNS = ["cell", "method", "tail_index", "lam", "lam_h_bar", "gamma", "alpha", "seed",
               "iterations", "terminal_grad_norm", "max_momentum_norm", "momentum_bound"]


@dataclass
class ExperimentResult:
    """``table`` is the aggregated output; ``runs`` has one row per (cell, seed)."""

    table: Table
    runs: Table


def momentum_bound(method: str, sch) -> float:
    """Deterministic cap on ``||g_t||`` implied by clipping; ``inf`` for unclipped methods.

    Every update is a convex combination of the previous momentum plus a
    clipped increment and a clipped gradient, so by induction
    ``||g_t|| <= lam + (1 - alpha) * gamma * lam_h_bar / alpha``.
    """
    if method == "clip_nsgdhess":
        return sch.lam + (1.0 - sch.alpha) * sch.gamma * sch.lam_h_bar / sch.alpha
    if method == "clip_nsgdm":
        return sch.lam
    return math.inf


def median_iterations(values) -> float:
    """Median of first-crossing times; runs that never cross count as ``inf``."""
    return float(np.median(np.asarray(values, dtype=np.float64)))


def _run_cell(cfg: ExperimentConfig, spec: OptimizerSpec, cell: str, tail_index=None,
              overrides: dict | None = None, stop: bool = True, oracle=None, x0=None):
    oracle = oracle if oracle is not None else cfg.make_problem(tail_index)
    x0 = cfg.x0(oracle.d) if x0 is None else x0
    spec = OptimizerSpec(spec.method, spec.schedule, {**spec.params, **(overrides or {})})
    sch, extra = resolve_schedule(spec, oracle, x0, cfg.T, tail_index)
    traces, rows = [], []
    bound = momentum_bound(spec.method, sch)
    ti = oracle.noise.tail_index if tail_index is None else tail_index
    for seed in cfg.seeds:
        tr = run(spec.method, oracle, sch, cfg.T, seed, x0=x0,
                 stop_below=cfg.target if stop else None, **extra)
        tr.header["cell"] = cell
        it = iterations_to_target(tr, cfg.target) if cfg.target is not None else None
        rows.append([cell, spec.method, ti, sch.lam, sch.lam_h_bar, sch.gamma, sch.alpha, seed,
                     math.inf if it is None else it, tr.terminal_grad_norm,
                     float(np.max(tr.momentum_norm)), bound])
        traces.append(tr)
    return sch, traces, rows


def _meta(cfg: ExperimentConfig, **kw) -> dict:
    m = {"experiment": cfg.experiment, "config_hash": cfg.config_hash(), "T": cfg.T,
         "target": cfg.target, "seeds": cfg.seeds, "x0_seed": cfg.x0_seed,
         "problem": cfg.problem}
    m.update(kw)
    return m


def _schedule_meta(method: str, sch) -> dict:
    return {f"{method}.{k}": v for k, v in sch.echo().items()}


def _iteration_sweep(cfg: ExperimentConfig, cells) -> ExperimentResult:
    """Shared body of the iteration-count sweeps.

    ``cells`` yields ``(key_dict, spec, tail_index, overrides)``.
    """
    keys = None
    agg, runs, meta = [], [], {}
    for key, spec, ti, over in cells:
        keys = list(key)
        cell = ";".join(f"{k}={v!r}" for k, v in key.items())
        sch, _, rows = _run_cell(cfg, spec, cell, ti, over)
        its = [r[8] for r in rows]
        reached = float(np.mean(np.isfinite(its)))
        agg.append([*key.values(), spec.method, sch.gamma, sch.alpha, sch.lam, sch.lam_h_bar,
                    median_iterations(its), reached])
        runs.extend(rows)
        echo = {"cell": cell, "method": spec.method, **sch.echo()}
        meta.setdefault("schedules", []).append(echo)
    if keys is None:
        raise ConfigurationError("sweep grid is empty")
    cols = keys + ["method", "gamma", "alpha", "lam", "lam_h_bar", "median_iterations", "reached_fraction"]
    return ExperimentResult(Table(cols, agg, _meta(cfg, **meta)), Table(RUN_COLUMNS, runs, _meta(cfg)))


def experiment_fig2(cfg: ExperimentConfig) -> ExperimentResult:
    """Median exact-gradient-norm trace per method over the seed list (no early stopping)."""
    ti = cfg.problem.get("noise", {}).get("tail_index")
    rows, runs, meta = [], [], {}
    for spec in cfg.optimizers:
        sch, traces, rr = _run_cell(cfg, spec, spec.method, ti, stop=False)
        g = np.vstack([tr.grad_norm for tr in traces])
        med = np.median(g, axis=0)
        lo, hi_ = np.quantile(g, 0.25, axis=0), np.quantile(g, 0.75, axis=0)
        for t in range(g.shape[1]):
            rows.append([spec.method, t, float(med[t]), float(lo[t]), float(hi_[t])])
        runs.extend(rr)
        meta.update(_schedule_meta(spec.method, sch))
    cols = ["method", "t", "median_grad_norm", "q25_grad_norm", "q75_grad_norm"]
    return ExperimentResult(Table(cols, rows, _meta(cfg, **meta)), Table(RUN_COLUMNS, runs, _meta(cfg)))


def fig2_summary(res: ExperimentResult) -> dict:
    """Per method: median terminal gradient norm and fraction of seeds reaching the target."""
    out = {}
    for m in dict.fromkeys(res.runs.column("method")):
        sub = res.runs.where(method=m)
        its = np.asarray(sub.column("iterations"), dtype=float)
        out[m] = {"median_terminal": float(np.median(sub.column("terminal_grad_norm"))),
                  "reached_fraction": float(np.mean(np.isfinite(its))),
                  "median_iterations": median_iterations(its)}
    return out


def experiment_clip_sensitivity(cfg: ExperimentConfig) -> ExperimentResult:
    """Median iterations-to-target per clip level, with ``lam_h_bar = lam`` when tied."""
    grid = cfg.sweep.get("lam", [])
    if not grid:
        raise ConfigurationError("clip_sensitivity needs a non-empty sweep.lam grid")
    tie = cfg.sweep.get("tie_levels", True)
    ti = cfg.problem.get("noise", {}).get("tail_index")

    def cells():
        for spec in cfg.optimizers:
            for lam in grid:
                over = {"lam": float(lam)}
                if tie:
                    over["lam_h_bar"] = float(lam)
                yield {"lam_grid": float(lam)}, spec, ti, over
    return _iteration_sweep(cfg, cells())


def experiment_fig4(cfg: ExperimentConfig) -> ExperimentResult:
    """Median iterations-to-target per tail index for each configured method."""
    grid = cfg.sweep.get("tail_indices", [])
    if not grid:
        raise ConfigurationError("fig4 needs a non-empty sweep.tail_indices grid")

    def cells():
        for ti in grid:
            for spec in cfg.optimizers:
                yield {"tail_index": float(ti)}, spec, float(ti), {}
    return _iteration_sweep(cfg, cells())


def experiment_fig5(cfg: ExperimentConfig) -> ExperimentResult:
    """Median iterations-to-target over a gradient clip grid for each Hessian clip level."""
    regimes = cfg.sweep.get("regime", [])
    if not regimes or any(not r.get("lam") for r in regimes):
        raise ConfigurationError("fig5 needs sweep.regime entries, each with a non-empty lam grid")
    ti = cfg.problem.get("noise", {}).get("tail_index")

    def cells():
        for spec in cfg.optimizers:
            for reg in regimes:
                for lam in reg["lam"]:
                    yield ({"regime_lam_h_bar": float(reg["lam_h_bar"]), "lam_grid": float(lam)},
                           spec, ti, {"lam": float(lam), "lam_h_bar": float(reg["lam_h_bar"])})
    return _iteration_sweep(cfg, cells())


def argmin_interior(values) -> tuple[int, bool]:
    """Index of the smallest value and whether it lies strictly inside the grid."""
    v = np.asarray(values, dtype=float)
    i = int(np.argmin(v))
    return i, 0 < i < v.size - 1


HARD_COLUMNS = ["Delta", "epsilon", "p", "sigma", "sigma_h", "L", "L_h", "T_dim", "nu", "beta", "rho",
                "binding", "method", "seed", "queries", "final_prog", "max_prog_step",
                "min_grad_norm", "reached_epsilon"]


def hard_instance_table(Delta: float, epsilon: float, p: float, sigma: float, sigma_h: float,
                        L: float, L_h: float) -> hi.ScaledInstance:
    return hi.rescale_for_target(Delta, [L, L_h], [sigma, sigma_h], epsilon, p)


def experiment_hard_instance(cfg: ExperimentConfig) -> ExperimentResult:
    """Scale the zero-chain instance for each constant tuple and run the optimizers on it from 0."""
    sw = cfg.sweep
    names = ("Delta", "epsilon", "p", "sigma", "sigma_h", "L", "L_h")
    grids = [sw.get(n, []) for n in names]
    if any(not g for g in grids):
        raise ConfigurationError(f"hard_instance needs non-empty sweep lists for {list(names)}")
    rows, params_rows = [], []
    for combo in np.array(np.meshgrid(*grids, indexing="ij")).reshape(len(names), -1).T:
        c = dict(zip(names, (float(v) for v in combo)))
        inst = hard_instance_table(**c)
        ch = inst.chain
        params_rows.append([*c.values(), ch.T_dim, ch.nu, ch.beta, inst.rho, inst.binding])
        for spec in cfg.optimizers:
            for seed in cfg.seeds:
                oracle = hi.ChainOracle(inst.oracle, record=True)
                x0 = np.zeros(ch.T_dim)
                sch, extra = resolve_schedule(spec, oracle, x0, cfg.T, c["p"])
                tr = run(spec.method, oracle, sch, cfg.T, seed, x0=x0, keep_iterates=True, **extra)
                progs = [hi.prog(ch.beta * x, 0.25) for x in tr.iterates]
                steps = np.diff(progs) if len(progs) > 1 else np.zeros(1)
                rows.append([*c.values(), ch.T_dim, ch.nu, ch.beta, inst.rho, inst.binding,
                             spec.method, seed, len(oracle.replies), progs[-1],
                             int(np.max(steps)) if steps.size else 0,
                             tr.min_grad_norm, bool(tr.min_grad_norm <= c["epsilon"])])
    meta = _meta(cfg)
    params = Table(list(names) + ["T_dim", "nu", "beta", "rho", "binding"], params_rows, meta)
    return ExperimentResult(Table(HARD_COLUMNS, rows, meta), params)


def single_run(cfg: ExperimentConfig, method_index: int = 0, seed: int | None = None) -> RunTrace:
    """One trace for the first (or chosen) optimizer, honoring ``cfg.T`` and the stop target."""
    spec = cfg.optimizers[method_index]
    oracle = cfg.make_problem()
    x0 = cfg.x0(oracle.d)
    sch, extra = resolve_schedule(spec, oracle, x0, cfg.T)
    seed = cfg.seeds[0] if seed is None else seed
    tr = run(spec.method, oracle, sch, cfg.T, seed, x0=x0, **extra)
    tr.header.update(_meta(cfg, seed=seed, **sch.echo()))
    tr.header["final_grad_norm"] = euclidean_norm(oracle.exact_gradient(tr.final_x)) if tr.final_x is not None else None
    return tr


DRIVERS = {
    "fig2": experiment_fig2,
    "clip_sensitivity": experiment_clip_sensitivity,
    "fig4": experiment_fig4,
    "fig5": experiment_fig5,
    "hard_instance": experiment_hard_instance,
}

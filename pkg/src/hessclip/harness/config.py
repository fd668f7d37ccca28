"""Experiment configuration: TOML files, built-in defaults and schedule resolution."""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..exceptions import ConfigurationError
from ..noise import NoiseKind, TailSpec
from ..problems import PROBLEMS, StochasticOracle
from ..schedules import (
    ProblemConstants,
    Provenance,
    Schedule,
    schedule_clip_nsgdm_baseline,
    schedule_thm2,
    schedule_thm3,
    schedule_thm3_shape,
)

EXPERIMENTS = ("run", "fig2", "clip_sensitivity", "fig4", "fig5", "hard_instance")

# Shared by every built-in experiment.
DEFAULT_NOISE_SCALE = 1.0
DEFAULT_HESSIAN_NOISE_SCALE = 0.1
DEFAULT_X0_SEED = 12345
DEFAULT_SEEDS = 21


def _decades(lo: int, hi: int) -> list[float]:
    return [10.0**k for k in range(lo, hi + 1)]


def _base(experiment: str, **kw) -> dict:
    d = {
        "experiment": experiment,
        "T": 4000,
        "target": 1.5,
        "seeds": DEFAULT_SEEDS,
        "x0_seed": DEFAULT_X0_SEED,
        "problem": {
            "name": "quadratic",
            "d": 10,
            "noise": {"kind": "two-sided-pareto", "tail_index": 1.1, "scale": DEFAULT_NOISE_SCALE},
            "hessian_noise": {"kind": "two-sided-pareto", "tail_index": 1.1,
                              "scale": DEFAULT_HESSIAN_NOISE_SCALE},
        },
        "optimizer": [],
        "sweep": {},
    }
    d.update(kw)
    return d


BUILTIN = {
    "run": _base(
        "run",
        optimizer=[{"method": "clip_nsgdhess", "schedule": "thm3-shape", "lam": 0.5, "lam_h_bar": 0.05}],
    ),
    "fig2": _base(
        "fig2",
        optimizer=[
            {"method": "nsgdm", "schedule": "manual", "gamma": 0.01, "alpha": 0.2},
            {"method": "nsgdhess", "schedule": "manual", "gamma": 0.01, "alpha": 0.2, "g0": "zero"},
            {"method": "clip_nsgdm", "schedule": "manual", "gamma": 0.01, "alpha": 0.2, "lam": 1.0},
            {"method": "clip_nsgdhess", "schedule": "manual", "gamma": 0.01, "alpha": 0.2,
             "lam": 1.0, "lam_h_bar": 1.0},
        ],
    ),
    "clip_sensitivity": _base(
        "clip_sensitivity",
        optimizer=[{"method": "clip_nsgdhess", "schedule": "manual", "gamma": 0.01, "alpha": 0.2}],
        sweep={"lam": [1e-16, 1e-8, 1.0, 1e2, 1e3], "tie_levels": True},
    ),
    "fig4": _base(
        "fig4",
        optimizer=[
            {"method": "clip_nsgdhess", "schedule": "thm3-shape", "lam": 0.5, "lam_h_bar": 0.05},
            {"method": "clip_nsgdm", "schedule": "clip-nsgdm-baseline", "lam": 0.5},
        ],
        sweep={"tail_indices": [round(1.1 + 0.1 * k, 1) for k in range(10)]},
    ),
    "fig5": _base(
        "fig5",
        target=0.5,
        optimizer=[{"method": "clip_nsgdhess", "schedule": "manual", "gamma": 0.01, "alpha": 0.2}],
        sweep={"regime": [
            {"lam_h_bar": 0.01, "lam": _decades(-4, 2)},
            {"lam_h_bar": 1.0, "lam": _decades(-2, 4)},
            {"lam_h_bar": 100.0, "lam": _decades(0, 6)},
        ]},
    ),
    "hard_instance": _base(
        "hard_instance",
        T=2000,
        target=None,
        seeds=5,
        problem={"name": "zero-chain"},
        optimizer=[{"method": "clip_nsgdhess", "schedule": "manual", "gamma": 0.05, "alpha": 0.1,
                    "lam": 10.0, "lam_h_bar": 10.0}],
        sweep={"Delta": [30.0], "epsilon": [0.01], "p": [1.5, 2.0], "sigma": [10.0],
               "sigma_h": [10.0], "L": [1.0], "L_h": [1.0]},
    ),
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def tail_spec_from(d: dict | None) -> TailSpec:
    if not d:
        return TailSpec.none()
    try:
        kind = NoiseKind(d.get("kind", "none"))
    except ValueError:
        raise ConfigurationError(f"unknown noise kind {d.get('kind')!r}") from None
    return TailSpec(kind, float(d.get("tail_index", 2.0)), float(d.get("scale", 1.0)),
                    bool(d.get("per_coordinate", True)))


@dataclass
class OptimizerSpec:
    method: str
    schedule: str = "manual"
    params: dict = field(default_factory=dict)

    def label(self) -> str:
        return self.method


@dataclass
class ExperimentConfig:
    """Validated experiment description; see the README for the file grammar."""

    experiment: str
    T: int
    target: float | None
    seeds: list[int]
    x0_seed: int
    problem: dict
    optimizers: list[OptimizerSpec]
    sweep: dict
    out: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not self.optimizers:
            raise ConfigurationError("optimizer list is empty")
        if not self.seeds:
            raise ConfigurationError("seed list is empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")
        if int(self.T) < 1:
            raise ConfigurationError("T must be >= 1")
        if self.target is not None and not self.target > 0:
            raise ConfigurationError("target must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        name = d.get("experiment", "run")
        if name not in BUILTIN:
            raise ConfigurationError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
        merged = _merge(BUILTIN[name], {k: v for k, v in d.items() if k != "optimizer"})
        if "optimizer" in d:
            merged["optimizer"] = copy.deepcopy(d["optimizer"])
        seeds = merged["seeds"]
        if isinstance(seeds, int):
            if seeds < 1:
                raise ConfigurationError("seeds must be >= 1")
            seeds = list(range(seeds))
        opts = []
        for o in merged["optimizer"]:
            o = dict(o)
            if "method" not in o:
                raise ConfigurationError("every [[optimizer]] table needs a method")
            opts.append(OptimizerSpec(o.pop("method"), o.pop("schedule", "manual"), o))
        return cls(
            experiment=name,
            T=int(merged["T"]),
            target=None if merged.get("target") is None else float(merged["target"]),
            seeds=[int(s) for s in seeds],
            x0_seed=int(merged["x0_seed"]),
            problem=merged["problem"],
            optimizers=opts,
            sweep=merged.get("sweep", {}),
            out=merged.get("out"),
            raw=merged,
        )

    @classmethod
    def builtin(cls, name: str, **overrides) -> "ExperimentConfig":
        return cls.from_dict({"experiment": name, **overrides})

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                d = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"cannot parse {path}: {e}") from None
        return cls.from_dict(d)

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def x0(self, d: int) -> np.ndarray:
        """The shared standard-normal starting point."""
        return np.random.default_rng(self.x0_seed).standard_normal(d)

    def make_problem(self, tail_index: float | None = None) -> StochasticOracle:
        pr = self.problem
        name = pr.get("name", "quadratic")
        if name not in PROBLEMS:
            raise ConfigurationError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
        noise = dict(pr.get("noise") or {})
        hnoise = dict(pr.get("hessian_noise") or {})
        if tail_index is not None:
            for n in (noise, hnoise):
                if n.get("kind") == NoiseKind.PARETO.value:
                    n["tail_index"] = tail_index
        kw = {k: v for k, v in pr.items() if k not in ("name", "noise", "hessian_noise")}
        return PROBLEMS[name](noise=tail_spec_from(noise), hessian_noise=tail_spec_from(hnoise), **kw)


SCHEDULE_PARAMS = ("gamma", "alpha", "lam", "lam_h_bar", "B_init")


def resolve_schedule(spec: OptimizerSpec, oracle: StochasticOracle, x0, T: int,
                     tail_index: float | None = None) -> tuple[Schedule, dict]:
    """Turn a schedule name plus table entries into a concrete :class:`Schedule`.

    Returns the schedule and the remaining optimizer keyword arguments.
    Explicit ``gamma``/``alpha``/``lam``/``lam_h_bar`` entries override the
    derived values. The exponent ``p`` defaults to the tail index, capped at 2.
    """
    params = dict(spec.params)
    extra = {k: params.pop(k) for k in list(params) if k not in SCHEDULE_PARAMS + (
        "p", "epsilon", "delta_prob", "constants", "sigma", "sigma_h")}
    p = params.pop("p", None)
    if p is None:
        ti = tail_index if tail_index is not None else oracle.noise.tail_index
        p = min(float(ti), 2.0)
    p = float(p)
    try:
        prov = Provenance(spec.schedule)
    except ValueError:
        raise ConfigurationError(
            f"unknown schedule {spec.schedule!r}; choose from {[v.value for v in Provenance]}") from None
    if prov in (Provenance.THM2, Provenance.THM3):
        sigma = params.pop("sigma", None)
        if sigma is None:
            sigma = 0.0 if oracle.noise.is_none else oracle.noise.sigma_bound(oracle.d, p)
        sigma_h = params.pop("sigma_h", None)
        if sigma_h is None:
            sigma_h = 0.0 if oracle.hessian_noise.is_none else oracle.hessian_noise.sigma_bound(oracle.d, p)
        if not np.isfinite(sigma) or not np.isfinite(sigma_h):
            raise ConfigurationError(f"noise has no finite moment of order p = {p}; set p below the tail index")
        c = ProblemConstants.from_problem(
            oracle, x0, sigma=float(sigma), sigma_h=float(sigma_h), p=p, T=int(T),
            epsilon=float(params.pop("epsilon", 0.1)), delta_prob=float(params.pop("delta_prob", 0.1)))
        if prov is Provenance.THM2:
            sch = schedule_thm2(c)
        else:
            sch = schedule_thm3(c, params.pop("constants", "explicit"))
    elif prov is Provenance.THM3_SHAPE:
        sch = schedule_thm3_shape(T, p)
    elif prov is Provenance.CLIP_NSGDM_BASELINE:
        sch = schedule_clip_nsgdm_baseline(T=T, p=p)
    else:
        if "gamma" not in params or "alpha" not in params:
            raise ConfigurationError(f"{spec.method}: a manual schedule needs gamma and alpha")
        sch = Schedule(float(params.pop("gamma")), float(params.pop("alpha")), provenance=Provenance.MANUAL)
    over = {k: params.pop(k) for k in SCHEDULE_PARAMS if k in params}
    if params:
        raise ConfigurationError(f"{spec.method}: unused schedule keys {sorted(params)}")
    if over:
        d = sch.as_params()
        d.update(over)
        sch = Schedule(**d, provenance=sch.provenance)
    return sch, extra

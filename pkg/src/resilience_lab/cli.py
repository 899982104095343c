"""Seeded verification experiments, CSV output and the ``resilience-lab`` command.

Every randomized trial draws from ``default_rng(seed ^ trial)`` only, so the
rows (and the CSV bytes) depend on the configuration alone, not on the
thread count or scheduling.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import jsonschema
import numpy as np

from .channels import (
    compose,
    dephasing_channel,
    evolution_channel,
    check_t_independence,
    random_kraus,
    random_unital,
    verify_corollary2,
    verify_theorem1,
)
from .constructions import (
    impossibility_sweep,
    superadditivity_gap,
    theorem2_report,
    twin_peak_entropies,
)
from .equilibration import equilibration_bounds, subsystem_equilibration
from .qcore import gue, hs_state
from .spectral import dephase, eigendecompose

EXPERIMENTS = (
    "bounds",
    "subsystem",
    "theorem1",
    "corollary2",
    "theorem2",
    "lemma1",
    "impossibility",
    "t_independence",
)
THREADS_ENV = "RESILIENCE_LAB_THREADS"
SCHEMA_VERSION = 1

_POS_INT = {"type": "integer", "minimum": 1}
_N_LIST = {"type": "array", "items": _POS_INT, "minItems": 1}

CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": f"resilience-lab experiment config (v{SCHEMA_VERSION})",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "trials": _POS_INT,
        "dims": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d": {"type": "integer", "minimum": 2},
                "d_s": _POS_INT,
                "d_b": _POS_INT,
                "d_q": _POS_INT,
                "d_r": _POS_INT,
                "components": _POS_INT,
                "local": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
            },
        },
        "alpha": {"type": "number", "minimum": 0, "maximum": 2},
        "a": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "local_dim": {"type": "integer", "minimum": 2},
        "n_list": _N_LIST,
        "samples": {"type": "integer", "minimum": 2},
        "explicit": {"type": "boolean"},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "output_path": {"type": "string"},
    },
    "allOf": [
        {
            "if": {"properties": {"experiment": {"const": "bounds"}}},
            "then": {"required": ["dims"], "properties": {"dims": {"required": ["d"]}}},
        },
        {
            "if": {"properties": {"experiment": {"const": "subsystem"}}},
            "then": {"required": ["dims"], "properties": {"dims": {"required": ["d_s", "d_b"]}}},
        },
        {
            "if": {"properties": {"experiment": {"const": "theorem2"}}},
            "then": {"required": ["a", "gamma", "local_dim", "n_list"]},
        },
        {
            "if": {"properties": {"experiment": {"const": "impossibility"}}},
            "then": {"required": ["a", "n_list"]},
        },
    ],
}

_DEFAULT_DIMS = {
    "theorem1": {"d_q": 4, "d_r": 4, "components": 4},
    "corollary2": {"local": [2, 2, 2]},
    "lemma1": {"d_q": 2, "d_r": 2},
    "t_independence": {"d": 4},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class ExperimentError(RuntimeError):
    """A module error raised inside a trial, with the trial index attached."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    trials: int = 100
    dims: dict = field(default_factory=dict)
    alpha: float | None = None
    a: float | None = None
    gamma: float | None = None
    local_dim: int = 2
    n_list: tuple[int, ...] = ()
    samples: int = 2000
    explicit: bool = False
    tolerance: float = 1e-9
    output_path: str | None = None


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    trial: int
    values: dict
    passed: bool
    #: signed distance to the tested inequality; negative means violated
    margin: float


def _field_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def parse_config(text: str) -> ExperimentConfig:
    """Validate a JSON config document and fill in defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        if isinstance(raw, dict) and raw.get("experiment") not in EXPERIMENTS and "experiment" in raw:
            raise ConfigError(f"experiment: unknown experiment {raw['experiment']!r}")
        if err.validator == "required":
            raise ConfigError(f"{_field_path(err)}: missing required field ({err.message})")
        raise ConfigError(f"{_field_path(err)}: {err.message}")
    dims = {**_DEFAULT_DIMS.get(raw["experiment"], {}), **raw.get("dims", {})}
    if "local" in dims:
        dims["local"] = tuple(dims["local"])
    kwargs = {k: v for k, v in raw.items() if k != "dims"}
    if "n_list" in kwargs:
        kwargs["n_list"] = tuple(kwargs["n_list"])
    return ExperimentConfig(**{**kwargs, "dims": dims})


# ---------------------------------------------------------------------------
# per-trial runners; each returns (values, margin)


def _stationary(dim: int, rng: np.random.Generator):
    h = eigendecompose(gue(dim, rng))
    return h, dephase(hs_state(dim, rng), h)


def _bounds(cfg: ExperimentConfig, trial: int, seed: int):
    d = cfg.dims["d"]
    rng = np.random.default_rng(seed)
    h, rho, a = gue(d, rng), hs_state(d, rng), gue(d, rng)
    r = equilibration_bounds(a, rho, h, n=cfg.samples, seed=seed)
    values = {
        "variance_exact": r.variance_exact,
        "variance_sampled": r.variance_sampled,
        "bound_eq2": r.bound_eq2,
        "bound_p2nd": r.bound_p2nd,
        "effective_dimension": r.effective_dimension,
    }
    return values, r.bound_eq2 - r.variance


def _subsystem(cfg: ExperimentConfig, trial: int, seed: int):
    d_s, d_b = cfg.dims["d_s"], cfg.dims["d_b"]
    rng = np.random.default_rng(seed)
    h, rho = gue(d_s * d_b, rng), hs_state(d_s * d_b, rng)
    r = subsystem_equilibration(rho, h, (d_s, d_b), n=cfg.samples, seed=seed)
    values = {
        "avg_trace_distance": r.avg_trace_distance,
        "bound_eq3": r.bound_eq3,
        "effective_dimension": r.effective_dimension,
    }
    return values, r.bound_eq3 + r.sampling_tolerance - r.avg_trace_distance


def _theorem1(cfg: ExperimentConfig, trial: int, seed: int):
    d_q, d_r, k = cfg.dims["d_q"], cfg.dims["d_r"], cfg.dims["components"]
    rng = np.random.default_rng(seed)
    h_iq, sigma_q = _stationary(d_q, rng)
    h_ir, sigma_r = _stationary(d_r, rng)
    ch = random_unital(d_q * d_r, k, rng)
    h_fq = gue(d_q, rng)
    c = verify_theorem1(sigma_q, sigma_r, h_iq, h_ir, ch, h_fq)
    values = {"delta_r_q": c.delta_r_q, "resource_resilience": c.resource_resilience, "slack": c.slack}
    return values, c.slack


def _corollary2(cfg: ExperimentConfig, trial: int, seed: int):
    local = cfg.dims["local"]
    d = int(np.prod(local))
    rng = np.random.default_rng(seed)
    position = trial % len(local)
    h_iq, sigma_q = _stationary(d, rng)
    kraus = random_kraus(local[position], int(rng.integers(1, 5)), rng)
    h_fq = gue(d, rng)
    c = verify_corollary2(sigma_q, h_iq, kraus, position, local, h_fq)
    return {"position": position, "delta_r": c.delta_r, "bound": c.bound}, c.bound - c.delta_r


def _theorem2(cfg: ExperimentConfig, trial: int, seed: int):
    n = cfg.n_list[trial]
    explicit = cfg.explicit and cfg.local_dim**n <= 4096
    r = theorem2_report(cfg.local_dim, n, cfg.a, cfg.gamma, explicit_matrices=explicit, seed=seed)
    values = {
        "n": n,
        "s1_sigma": r.s1_sigma,
        "s2_sigma": r.s2_sigma,
        "s1_rho": r.s1_rho,
        "deff_rho": r.deff_rho,
        "delta_r": r.delta_r,
        "delta_r_lower": r.delta_r_lower,
        "variance_lower": r.variance_lower,
        "explicit_max_error": r.explicit_max_error if explicit else math.nan,
    }
    margin = r.s1_rho - r.s1_sigma
    if explicit:
        margin = min(margin, cfg.tolerance - r.explicit_max_error)
    return values, margin


def _lemma1(cfg: ExperimentConfig, trial: int, seed: int):
    d_q, d_r = cfg.dims["d_q"], cfg.dims["d_r"]
    rng = np.random.default_rng(seed)
    rho_q, rho_r = hs_state(d_q, rng), hs_state(d_r, rng)
    h_q, h_r = gue(d_q, rng), gue(d_r, rng)
    gap = superadditivity_gap(rho_q, rho_r, h_q, h_r)
    return {"gap": gap}, gap


def _impossibility(cfg: ExperimentConfig, trial: int, seed: int):
    n = cfg.n_list[trial]
    (row,) = impossibility_sweep(cfg.a, [n], cfg.local_dim, explicit=cfg.explicit, seed=seed)
    margin = row.s_half_omega - row.s1_omega
    if trial > 0:
        prev, _ = twin_peak_entropies(cfg.a, cfg.local_dim, cfg.n_list[trial - 1])
        margin = min(margin, row.s1_omega - prev)
    values = {
        "n": n,
        "s1_omega": row.s1_omega,
        "s_half_omega": row.s_half_omega,
        "variance_lower": row.variance_lower,
    }
    return values, margin


_T_VARIANTS = ("stationary", "dephase_first", "covariant")
_T_GRID = (0.5, 1.3, 2.7)


def _t_independence(cfg: ExperimentConfig, trial: int, seed: int):
    d = cfg.dims["d"]
    rng = np.random.default_rng(seed)
    variant = _T_VARIANTS[trial % 3]
    h_i = eigendecompose(gue(d, rng))
    if variant == "stationary":
        sigma = dephase(hs_state(d, rng), h_i)
        ch, h_f = random_unital(d, 3, rng), eigendecompose(gue(d, rng))
    elif variant == "dephase_first":
        sigma = hs_state(d, rng)
        ch = compose(random_unital(d, 3, rng), dephasing_channel(h_i))
        h_f = eigendecompose(gue(d, rng))
    else:
        sigma = hs_state(d, rng)
        ch, h_f = evolution_channel(h_i, float(rng.uniform(0, 1))), h_i
    rep = check_t_independence(ch, sigma, h_i, h_f, _T_GRID, tol=cfg.tolerance)
    values = {"variant": variant, "max_residual": rep.max_residual, "window": rep.window}
    return values, cfg.tolerance - rep.max_residual


_RUNNERS: dict[str, Callable] = {
    "bounds": _bounds,
    "subsystem": _subsystem,
    "theorem1": _theorem1,
    "corollary2": _corollary2,
    "theorem2": _theorem2,
    "lemma1": _lemma1,
    "impossibility": _impossibility,
    "t_independence": _t_independence,
}


def n_trials(cfg: ExperimentConfig) -> int:
    """Sweep experiments run one trial per entry of ``n_list``."""
    return len(cfg.n_list) if cfg.experiment in ("theorem2", "impossibility") else cfg.trials


def _thread_count(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return threads


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """Run all trials; rows come back in trial order whatever the thread count."""
    runner = _RUNNERS[cfg.experiment]
    tol = cfg.tolerance

    def one(trial: int) -> ResultRow:
        seed = cfg.seed ^ trial
        try:
            values, margin = runner(cfg, trial, seed)
        except Exception as exc:
            raise ExperimentError(f"{cfg.experiment} trial {trial} (seed {seed}): {exc}") from exc
        # a NaN margin counts as a failure
        passed = bool(margin >= -tol)
        return ResultRow(cfg.experiment, trial, values, passed, float(margin))

    trials = range(n_trials(cfg))
    workers = _thread_count(threads)
    if workers == 1:
        return [one(t) for t in trials]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, trials))


# ---------------------------------------------------------------------------
# output


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(rows: list[ResultRow], path: str, columns: list[str] | None = None) -> None:
    """Write rows as UTF-8 CSV with LF endings; floats keep all 17 significant digits."""
    if columns is None:
        columns = list(rows[0].values) if rows else []
    header = ["experiment", "trial", *columns, "margin", "pass"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r.experiment, r.trial, *(_cell(r.values[c]) for c in columns), _cell(r.margin), _cell(r.passed)])


def summary_line(cfg: ExperimentConfig, rows: list[ResultRow]) -> str:
    failures = sum(not r.passed for r in rows)
    worst = min((r.margin for r in rows), default=math.nan)
    return f"{cfg.experiment}: trials={len(rows)} failures={failures} min_margin={worst:.6g}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resilience-lab", description=__doc__.splitlines()[0])
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--out", help="CSV output path (overrides output_path)")
    p.add_argument("--schema", action="store_true", help="print the config JSON schema and exit")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.schema:
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return 0
    try:
        if args.experiment is None:
            raise ConfigError("experiment: required")
        raw = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError("<root>: config must be a JSON object")
        if raw.get("experiment", args.experiment) != args.experiment:
            raise ConfigError(
                f"experiment: config says {raw['experiment']!r}, command line says {args.experiment!r}"
            )
        raw["experiment"] = args.experiment
        for key in ("seed", "trials"):
            if getattr(args, key) is not None:
                raw[key] = getattr(args, key)
        if args.out is not None:
            raw["output_path"] = args.out
        cfg = parse_config(json.dumps(raw))
        rows = run_experiment(cfg, args.threads)
    except (ConfigError, ExperimentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.output_path:
        try:
            emit_csv(rows, cfg.output_path)
        except OSError as exc:
            print(f"error: cannot write {cfg.output_path}: {exc}", file=sys.stderr)
            return 2
    print(summary_line(cfg, rows))
    return 0 if all(r.passed for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())

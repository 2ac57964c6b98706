"""Command-line front end: config parsing and every file the tool writes.

Config files are flat UTF-8 ``key = value`` text with ``#`` comments. Exit
codes: 0 success, 2 configuration or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import bench, refine, studies
from .dataset import ModelFitError
from .psi_ai import OptimizationError, OptimizeResult, PsiConfig, optimize
from .regularizer import TuneConfig, TuningError
from .space import GENERATORS, UnsupportedDimensionError, generate, scale

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    vals = tuple(float(v) for v in text.split(",") if v.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


# key -> (parser, default); None defaults are resolved per command / dimension
KEYS: dict[str, tuple[Callable[[str], object], object]] = {
    "objective": (str, None),
    "d": (int, None),
    "output_dir": (str, "out"),
    "seed": (int, 0),
    # PsiConfig fields
    "alpha": (float, 0.9),
    "n_doe": (int, None),
    "n_ml": (int, 8),
    "n_best": (int, 8),
    "n_iter": (int, 10),
    "budget": (int, None),
    "scan_size": (int, None),
    "min_sep": (float, refine.DEFAULT_MIN_SEP),
    "regularize": (_bool, False),
    "refit_widths": (_bool, True),
    "tune_sweeps": (int, 3),
    # sweep-alpha
    "alphas": (_floats, (0.5, 0.8, 0.9, 0.95)),
    "replicates": (int, 5),
    # surface
    "grid": (int, 101),
    "n_samples": (int, 16),
    # mltrace
    "insertions": (int, 20),
    # doe
    "generator": (str, "sobol"),
}

PSI_FIELDS = (
    "alpha", "n_doe", "n_ml", "n_best", "n_iter", "budget", "scan_size",
    "min_sep", "regularize", "refit_widths", "tune_sweeps",
)


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; only keys that appear are returned."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            out[key] = KEYS[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
    return out


def load_config(path: str | None, seed: int | None, out: str | None) -> dict:
    if path is None:
        cfg = {}
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text)
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["output_dir"] = out
    for key, (_, default) in KEYS.items():
        cfg.setdefault(key, default)
    if cfg["seed"] < 0:
        raise ConfigError("seed must be >= 0")
    return cfg


def _objective(cfg: dict) -> bench.Objective:
    if cfg["objective"] is None:
        raise ConfigError("missing required key 'objective'")
    try:
        return bench.make_objective(cfg["objective"], cfg["d"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def psi_config(cfg: dict, d: int, alpha: float | None = None, seed: int | None = None) -> PsiConfig:
    overrides = {k: cfg[k] for k in PSI_FIELDS if cfg[k] is not None}
    if alpha is not None:
        overrides["alpha"] = alpha
    overrides["seed"] = cfg["seed"] if seed is None else seed
    try:
        return PsiConfig.for_dimension(d, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- output

def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def write_json(path: Path, obj: dict) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def write_history(path: Path, result: OptimizeResult, d: int) -> None:
    header = ["eval_index", "iteration", "phase"] + [f"x_{i + 1}" for i in range(d)]
    header += ["f", "best_so_far"]
    rows = (
        [r.eval_index, r.iteration, r.phase, *r.x, r.f, r.best_so_far]
        for r in result.history.records
    )
    write_csv(path, header, rows)


def run_summary(result: OptimizeResult) -> dict:
    h = result.history
    return {
        "best_x": result.x,
        "best_f": result.f,
        "evaluations": len(h),
        "invalid": sum(not r.valid for r in h.records),
        "phase_counts": h.phase_counts(),
        "shortfall": result.shortfall,
        "seed": result.config.seed,
    }


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def cmd_optimize(cfg: dict) -> int:
    obj = _objective(cfg)
    pc = psi_config(cfg, obj.d)
    out = _outdir(cfg)
    result = optimize(obj, obj.space, pc)
    write_history(out / "history.csv", result, obj.d)
    summary = run_summary(result)
    summary.update(config=cfg, psi_config=pc.to_dict(), objective_evaluations=obj.eval_count)
    write_json(out / "summary.json", summary)
    return EXIT_OK


def _alpha_tag(alpha: float) -> str:
    return repr(float(alpha)).replace(".", "p")


def cmd_sweep_alpha(cfg: dict) -> int:
    obj = _objective(cfg)
    if cfg["replicates"] < 1:
        raise ConfigError("replicates must be >= 1")
    out = _outdir(cfg)
    configs = [
        psi_config(cfg, obj.d, alpha=a, seed=cfg["seed"] + r)
        for a in cfg["alphas"]
        for r in range(cfg["replicates"])
    ]
    rows, runs = [], []
    for pc in configs:
        obj.reset()
        result = optimize(obj, obj.space, pc)
        name = f"history_alpha{_alpha_tag(pc.alpha)}_seed{pc.seed}.csv"
        write_history(out / name, result, obj.d)
        rows.append([pc.alpha, pc.seed, result.f, len(result.history)])
        runs.append({"file": name, **run_summary(result)})
    write_csv(out / "sweep.csv", ["alpha", "seed", "final_best", "evals"], rows)
    medians = {
        repr(a): float(np.median([r[2] for r in rows if r[0] == a])) for a in cfg["alphas"]
    }
    write_json(out / "summary.json", {"config": cfg, "runs": runs, "median_final_best": medians})
    return EXIT_OK


def cmd_surface(cfg: dict) -> int:
    obj = _objective(cfg)
    if obj.d != 2:
        raise ConfigError(f"surface needs a two-dimensional objective, got d={obj.d}")
    if cfg["grid"] < 2 or cfg["n_samples"] < 3:
        raise ConfigError("grid must be >= 2 and n_samples >= 3")
    out = _outdir(cfg)
    tune = TuneConfig(sweeps=cfg["tune_sweeps"])
    st = studies.surface_study(obj, cfg["n_samples"], cfg["grid"], cfg["seed"], tune)
    c = st.columns
    write_csv(
        out / "surface.csv",
        ["x1", "x2", "f_true", "f_kriging_initial", "f_kriging_tuned", "f_mds_initial", "f_mds_tuned"],
        zip(st.grid[:, 0], st.grid[:, 1], c["true"], c["kriging_initial"],
            c["kriging_tuned"], c["mds_initial"], c["mds_tuned"]),
    )
    write_csv(
        out / "surface_min_kappa.csv",
        ["x1", "x2", "f_kriging_min_kappa"],
        zip(st.grid[:, 0], st.grid[:, 1], c["kriging_min_kappa"]),
    )
    write_csv(
        out / "samples.csv",
        ["x1", "x2", "f"],
        zip(st.dataset.points[:, 0], st.dataset.points[:, 1], st.dataset.values),
    )
    write_json(out / "summary.json", {
        "config": cfg,
        "a0": st.a0,
        "b0": st.b0,
        "kappa": st.kappa,
        "off_sample_mad": st.mad,
        "sample_mean": float(st.dataset.values.mean()),
    })
    return EXIT_OK


def cmd_mltrace(cfg: dict) -> int:
    obj = _objective(cfg)
    n_doe = cfg["n_doe"] if cfg["n_doe"] is not None else 16 * obj.d
    settings = refine.ModelSettings(
        regularize=cfg["regularize"],
        refit_widths=cfg["refit_widths"],
        tune=TuneConfig(sweeps=cfg["tune_sweeps"]),
    )
    if cfg["insertions"] < 0 or n_doe < obj.d + 2:
        raise ConfigError("insertions must be >= 0 and n_doe >= d + 2")
    out = _outdir(cfg)
    final, trace, snaps = studies.mltrace_study(
        obj, n_doe, cfg["insertions"], cfg["scan_size"], cfg["seed"], settings, cfg["min_sep"]
    )
    write_csv(
        out / "mltrace.csv",
        ["insertion_index", "n_evals", "max_disagreement_pct"],
        ([k, s.n_evals, t] for k, (s, t) in enumerate(zip(snaps, trace))),
    )
    xcols = [f"x_{i + 1}" for i in range(obj.d)]
    for k, s in enumerate(snaps):
        r = s.report
        write_csv(
            out / f"corr_{k}.csv", xcols + ["f_kriging", "f_mds"],
            ([*x, fk, fs] for x, fk, fs in zip(r.scan_points, r.f_kriging, r.f_spline)),
        )
    write_json(out / "summary.json", {
        "config": cfg,
        "trace": trace,
        "ratio": trace[-1] / trace[0] if trace[0] > 0 else None,
        "smoothed_nonincreasing": refine.smoothed_nonincreasing(trace),
        "final_evaluations": final.n,
    })
    return EXIT_OK


def cmd_doe(cfg: dict) -> int:
    obj = _objective(cfg)
    n = cfg["n_doe"] if cfg["n_doe"] is not None else 16 * obj.d
    if cfg["generator"] not in GENERATORS:
        raise ConfigError(f"generator must be one of {GENERATORS}")
    try:
        plan = generate(cfg["generator"], n, obj.d, cfg["seed"])
    except (ValueError, UnsupportedDimensionError) as exc:
        raise ConfigError(str(exc)) from None
    out = _outdir(cfg)
    X = scale(plan, obj.space)
    write_csv(out / "doe.csv", [f"x_{i + 1}" for i in range(obj.d)], X)
    write_json(out / "summary.json", {"config": cfg, "n": n, "generator": cfg["generator"]})
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "sweep-alpha": cmd_sweep_alpha,
    "surface": cmd_surface,
    "mltrace": cmd_mltrace,
    "doe": cmd_doe,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surropt", description="Meta-model based box-constrained optimisation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        if name == "sweep-alpha":
            sp.add_argument("--alphas", help="comma-separated list (overrides alphas)")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING)
    try:
        cfg = load_config(ns.config, ns.seed, ns.out)
        if getattr(ns, "alphas", None):
            try:
                cfg["alphas"] = _floats(ns.alphas)
            except ValueError as exc:
                raise ConfigError(f"--alphas: {exc}") from None
        return COMMANDS[ns.command](cfg)
    except ConfigError as exc:
        print(f"surropt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OptimizationError, ModelFitError, TuningError, np.linalg.LinAlgError) as exc:
        print(f"surropt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

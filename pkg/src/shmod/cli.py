"""Command-line front end.

Every command reads an optional flat JSON config (``--config``), applies
explicit flags on top, validates the result and writes deterministic
CSV/JSON artifacts. Exit codes: 0 success, 1 usage error, 2 numerical
failure.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .dynamics import ORDERS, ModelSpec, ReducedState, StepControl, integrate
from .errors import NumericalFailure, ShmodError, StepUnderflow
from .figures import FIGURES, figure_recipe
from .functionals import ModulationConstants, compute_all
from .helmholtz import f1_table, write_f1_table
from .regime import classify, o2_roots, outcome_label, threshold_bisect
from .soliton import SolitonConfig, solve_townes

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

DEFAULT_F1_EPS = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1, 2e-1]

COMMON_DEFAULTS = {"r_max": 25.0, "grid_step": 1e-3, "snapshot": None, "recompute_constants": False}
MODEL_DEFAULTS = {
    "order": "o1", "alpha": 0.01, "beta0": 0.01, "L0": None, "eps0": None, "dLt0": 0.0,
    "t_max": None, "rel_tol": 1e-10, "abs_tol": 1e-12,
}
DEFAULTS = {
    "townes": {"out": "shmod_out"},
    "constants": {"out": "constants.json"},
    "simulate": {**MODEL_DEFAULTS, "figure": None, "out": "shmod_out"},
    "classify": {**MODEL_DEFAULTS, "figure": None, "out": None},
    "threshold": {**MODEL_DEFAULTS, "order": "o2", "at": None, "bracket": [-200.0, 0.0],
                  "width": 1e-4, "out": None},
    "f1-table": {"eps": DEFAULT_F1_EPS, "L": 1.0, "out": "f1_table.csv"},
    "sweep": {"order": ["o1"], "alpha": [0.01], "beta0": [0.01], "L0": None, "eps0": None,
              "dLt0": [0.0], "t_max": None, "rel_tol": 1e-10, "abs_tol": 1e-12,
              "jobs": None, "out": "shmod_sweep"},
}


class UsageError(ShmodError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------- parsing


def _add_common(p):
    p.add_argument("--config", help="flat JSON file of parameters; flags override it")
    p.add_argument("--r-max", dest="r_max", type=float, default=argparse.SUPPRESS)
    p.add_argument("--grid-step", dest="grid_step", type=float, default=argparse.SUPPRESS)
    p.add_argument("--snapshot", default=argparse.SUPPRESS, help="constants snapshot file")
    p.add_argument("--recompute-constants", dest="recompute_constants", action="store_true",
                   default=argparse.SUPPRESS)


def _add_model(p, multi=False):
    nargs = "+" if multi else None
    p.add_argument("--order", nargs=nargs, default=argparse.SUPPRESS)
    p.add_argument("--alpha", type=float, nargs=nargs, default=argparse.SUPPRESS)
    p.add_argument("--beta0", type=float, nargs=nargs, default=argparse.SUPPRESS)
    p.add_argument("--L0", type=float, nargs=nargs, default=argparse.SUPPRESS)
    p.add_argument("--eps0", type=float, nargs=nargs, default=argparse.SUPPRESS,
                   help="alpha/L(0); alternative to --L0")
    p.add_argument("--dLt0", type=float, nargs=nargs, default=argparse.SUPPRESS)
    p.add_argument("--t-max", dest="t_max", type=float, default=argparse.SUPPRESS)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=argparse.SUPPRESS)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shmod", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("townes", help="solve for the Townes profile")
    _add_common(p)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    p = sub.add_parser("constants", help="compute Nc, M, P4, C1-C3 with dual-form checks")
    _add_common(p)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output JSON file")

    p = sub.add_parser("simulate", help="integrate a reduced law")
    _add_common(p)
    _add_model(p)
    p.add_argument("--figure", default=argparse.SUPPRESS, help=f"one of {', '.join(FIGURES)} or 'all'")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    p = sub.add_parser("classify", help="analytic regime classification")
    _add_common(p)
    _add_model(p)
    p.add_argument("--figure", default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output JSON file (stdout if absent)")

    p = sub.add_parser("threshold", help="bisect the o2 collapse threshold in L_t(0)")
    _add_common(p)
    _add_model(p)
    p.add_argument("--at", choices=("mid", "low-half"), default=argparse.SUPPRESS,
                   help="alpha/L(0) at (r_low+r_high)/2 or r_low/2")
    p.add_argument("--bracket", type=float, nargs=2, default=argparse.SUPPRESS)
    p.add_argument("--width", type=float, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS)

    p = sub.add_parser("f1-table", help="exact f1 against its truncated series")
    _add_common(p)
    p.add_argument("--eps", type=float, nargs="+", default=argparse.SUPPRESS)
    p.add_argument("--L", type=float, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output CSV file")

    p = sub.add_parser("sweep", help="Cartesian-product parameter sweep")
    _add_common(p)
    _add_model(p, multi=True)
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    return parser


def effective_config(command: str, args: argparse.Namespace) -> dict:
    cfg = {**COMMON_DEFAULTS, **DEFAULTS[command]}
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a flat JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update(given)
    _validate(command, cfg)
    return cfg


def _finite(name, v, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise UsageError(f"{name} must be a finite number, got {v!r}")
    if positive and v <= 0:
        raise UsageError(f"{name} must be positive, got {v!r}")


def _validate(command, cfg):
    _finite("r_max", cfg["r_max"], positive=True)
    _finite("grid_step", cfg["grid_step"], positive=True)
    multi = command == "sweep"
    for key in ("alpha", "beta0", "L0", "eps0", "dLt0"):
        if key not in cfg or cfg[key] is None:
            continue
        values = cfg[key] if multi else [cfg[key]]
        if multi and not isinstance(values, list):
            raise UsageError(f"{key} must be a list in a sweep")
        for v in values:
            _finite(key, v, positive=key in ("L0", "eps0"))
    for key in ("t_max", "rel_tol", "abs_tol", "width", "L"):
        if cfg.get(key) is not None:
            _finite(key, cfg[key], positive=True)
    if "order" in cfg:
        orders = cfg["order"] if multi else [cfg["order"]]
        for o in orders:
            if o not in ORDERS:
                raise UsageError(f"unknown order {o!r}; expected one of {ORDERS}")
    fig = cfg.get("figure")
    if fig is not None and fig != "all" and fig not in FIGURES:
        raise UsageError(f"unknown figure {fig!r}")
    if "eps" in cfg:
        for v in cfg["eps"]:
            _finite("eps", v, positive=True)


# ---------------------------------------------------------------- constants snapshot


def _soliton_config(cfg) -> SolitonConfig:
    return SolitonConfig(r_max=float(cfg["r_max"]), grid_step=float(cfg["grid_step"]))


def _snapshot_path(cfg) -> Path:
    if cfg.get("snapshot"):
        return Path(cfg["snapshot"])
    root = Path(os.environ.get("SHMOD_CACHE_DIR", Path.home() / ".cache" / "shmod"))
    return root / f"constants_r{cfg['r_max']:g}_h{cfg['grid_step']:g}.json"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_constants(cfg) -> tuple[ModulationConstants, str]:
    """Constants from the snapshot file, computing and caching them if needed."""
    path = _snapshot_path(cfg)
    scfg = _soliton_config(cfg)
    if path.exists() and not cfg.get("recompute_constants"):
        try:
            snap = json.loads(path.read_text())
            if snap["config"] == {"r_max": scfg.r_max, "grid_step": scfg.grid_step}:
                consts = ModulationConstants.from_dict(snap["constants"])
                return consts, _digest(snap["constants"])
        except (KeyError, ValueError, TypeError):
            pass
    profile = solve_townes(scfg)
    consts = compute_all(profile)
    snap = {
        "config": {"r_max": scfg.r_max, "grid_step": scfg.grid_step},
        "soliton": profile.metadata(),
        "constants": consts.to_dict(),
    }
    _atomic_write(path, _dumps(snap))
    return consts, _digest(snap["constants"])


def _digest(d) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------- model helpers


def _resolve_L0(cfg, alpha, L0, eps0):
    if L0 is not None and eps0 is not None:
        raise UsageError("give either L0 or eps0, not both")
    if L0 is None and eps0 is None:
        raise UsageError("one of L0 or eps0 is required")
    if L0 is None:
        if alpha <= 0:
            raise UsageError("eps0 needs alpha > 0")
        return alpha / eps0
    return L0


def _model_from_cfg(cfg, constants, profile=None):
    L0 = _resolve_L0(cfg, cfg["alpha"], cfg["L0"], cfg["eps0"])
    spec = ModelSpec(cfg["order"], cfg["alpha"], cfg["beta0"], constants, profile=profile)
    init = ReducedState(0.0, L0, cfg["dLt0"])
    t_max = cfg["t_max"] if cfg["t_max"] is not None else 1e4 * L0 * L0
    ctrl = StepControl(t_max=t_max, rel_tol=cfg["rel_tol"], abs_tol=cfg["abs_tol"])
    return spec, init, ctrl


def _profile_if_exact(cfg, order):
    return solve_townes(_soliton_config(cfg)) if order == "exact" else None


# ---------------------------------------------------------------- commands


def cmd_townes(cfg):
    p = solve_townes(_soliton_config(cfg))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    p.write_csv(out / "townes_profile.csv")
    p.write_metadata(out / "townes_metadata.json")
    print(f"R0 = {p.R0!r}  residual_max = {p.residual_max:.3e}  -> {out}")
    return EXIT_OK


def cmd_constants(cfg):
    consts, _ = load_constants({**cfg, "recompute_constants": True})
    _atomic_write(Path(cfg["out"]), _dumps(consts.to_dict()))
    print(f"M = {float(consts.M)!r}  C1 = {consts.C1.value!r}  C2 = {consts.C2.value!r}  C3 = {consts.C3.value!r}")
    return EXIT_OK


def _run_one(name, recipe_dict, spec, init, ctrl, out: Path, digest):
    try:
        outcome = integrate(init, spec, ctrl)
    except StepUnderflow as exc:
        if exc.series is not None and len(exc.series):
            from .dynamics import SimulationOutcome, HorizonReached

            partial = SimulationOutcome(exc.series, HorizonReached(float(exc.series[-1, 0])), None, 0, 0)
            partial.write_csv(out / f"{name}.partial.csv")
        raise
    outcome.write_csv(out / f"{name}.csv")
    record = {
        "outcome": outcome.to_dict(),
        "label": outcome_label(outcome),
        "parameters": recipe_dict,
        "constants_sha256": digest,
    }
    (out / f"{name}.json").write_text(_dumps(record))
    return record


def cmd_simulate(cfg):
    fig = cfg.get("figure")
    order = cfg["order"]
    consts, digest = load_constants(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if fig is not None:
        names = FIGURES if fig == "all" else (fig,)
        for name in names:
            recipe = figure_recipe(name, consts)
            rec = _run_one(name, recipe.to_dict(), recipe.spec(consts), recipe.init(), recipe.control(), out, digest)
            status = "ok" if rec["label"] == recipe.expected else "MISMATCH"
            print(f"{name}: {rec['outcome']['event']} ({rec['label']}; expected {recipe.expected}) {status}")
        return EXIT_OK
    spec, init, ctrl = _model_from_cfg(cfg, consts, _profile_if_exact(cfg, order))
    params = {k: cfg[k] for k in MODEL_DEFAULTS}
    params["L0"], params["t_max"] = init.L, ctrl.t_max
    rec = _run_one("trajectory", params, spec, init, ctrl, out, digest)
    (out / "effective_config.json").write_text(_dumps(cfg))
    print(f"{rec['outcome']['event']} ({rec['label']}) -> {out}")
    return EXIT_OK


def _emit(cfg, payload):
    text = _dumps(payload)
    if cfg.get("out"):
        _atomic_write(Path(cfg["out"]), text)
    else:
        sys.stdout.write(text)


def cmd_classify(cfg):
    consts, _ = load_constants(cfg)
    if cfg.get("figure") not in (None, "all"):
        recipe = figure_recipe(cfg["figure"], consts)
        spec, init = recipe.spec(consts), recipe.init()
    else:
        spec, init, _ = _model_from_cfg(cfg, consts)
    _emit(cfg, classify(init, spec).to_dict())
    return EXIT_OK


def cmd_threshold(cfg):
    consts, _ = load_constants(cfg)
    alpha, beta0 = cfg["alpha"], cfg["beta0"]
    if cfg["order"] != "o2":
        raise UsageError("threshold is defined for order o2")
    K, r_low, r_high = o2_roots(beta0, consts.C1.value, consts.C2.value, consts.M)
    if cfg.get("at"):
        if not K > 0:
            raise UsageError("--at needs beta0 below C1^2/(8 M C2)")
        eps0 = (r_low + r_high) / 2 if cfg["at"] == "mid" else r_low / 2
        cfg = {**cfg, "eps0": eps0, "L0": None}
    spec, init, _ = _model_from_cfg(cfg, consts)
    res = threshold_bisect(init, spec, tuple(cfg["bracket"]), width=cfg["width"], t_max=cfg["t_max"])
    report = classify(init, spec)
    payload = {**res.to_dict(), "analytic_estimate": report.threshold_estimate,
               "eps0": alpha / init.L, "r_low": r_low, "r_high": r_high, "K": K}
    _emit(cfg, payload)
    return EXIT_OK


def cmd_f1table(cfg):
    p = solve_townes(_soliton_config(cfg))
    consts = compute_all(p)
    rows = f1_table(p, consts, cfg["eps"], L=cfg["L"])
    path = Path(cfg["out"])
    path.parent.mkdir(parents=True, exist_ok=True)
    write_f1_table(rows, path)
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


SWEEP_KEYS = ("alpha", "beta0", "dLt0", "eps0", "L0", "order")


def sweep_points(cfg) -> list[dict]:
    """Cartesian product, lexicographic in (parameter name, sorted value)."""
    if (cfg.get("L0") is None) == (cfg.get("eps0") is None):
        raise UsageError("a sweep needs exactly one of L0 or eps0 as a list")
    axes = {k: sorted(cfg[k]) for k in SWEEP_KEYS if cfg.get(k) is not None}
    keys = sorted(axes)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(axes[k] for k in keys))]


def _sweep_worker(args):
    index, point, base, consts, profile, tmpdir = args
    line = {"index": index, "params": point}
    try:
        cfg = {**base, "L0": None, "eps0": None, **point}
        spec, init, ctrl = _model_from_cfg(cfg, consts, profile)
        ctrl = StepControl(t_max=ctrl.t_max, rel_tol=ctrl.rel_tol, abs_tol=ctrl.abs_tol, record=False)
        outcome = integrate(init, spec, ctrl)
        line.update(outcome.to_dict())
        line["label"] = outcome_label(outcome)
    except (ShmodError, ValueError) as exc:
        line["error"] = f"{type(exc).__name__}: {exc}"
    path = Path(tmpdir) / f"point_{index:06d}.json"
    _atomic_write(path, json.dumps(line, sort_keys=True))
    return index


def cmd_sweep(cfg):
    points = sweep_points(cfg)
    consts, _ = load_constants(cfg)
    profile = solve_townes(_soliton_config(cfg)) if "exact" in cfg["order"] else None
    out = Path(cfg["out"])
    parts = out / "points"
    parts.mkdir(parents=True, exist_ok=True)
    base = {k: cfg[k] for k in ("t_max", "rel_tol", "abs_tol")}
    tasks = [(i, pt, base, consts, profile if pt["order"] == "exact" else None, str(parts))
             for i, pt in enumerate(points)]
    jobs = cfg["jobs"] or os.cpu_count() or 1
    if jobs == 1:
        for t in tasks:
            _sweep_worker(t)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_sweep_worker, tasks))
    lines = [(parts / f"point_{i:06d}.json").read_text() for i in range(len(points))]
    _atomic_write(out / "sweep.jsonl", "".join(line + "\n" for line in lines))
    print(f"{len(lines)} points -> {out / 'sweep.jsonl'}")
    return EXIT_OK


COMMANDS = {
    "townes": cmd_townes,
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "threshold": cmd_threshold,
    "f1-table": cmd_f1table,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = effective_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"shmod: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"shmod: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ShmodError, ValueError) as exc:
        print(f"shmod: invalid input ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

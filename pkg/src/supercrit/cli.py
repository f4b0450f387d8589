"""Command-line front end.

    supercrit <command> [--config FILE] [--model FILE|TEXT] [flags] [--out CSV] [--summary JSON]

Commands: classify, sequences, profile, shoot, sweep, singular, verify.
Exit status 0 on success, 1 on bad input, 2 on numerical failure (the
diagnostics go to stderr as JSON).

Curves go to ``--out`` (stdout by default).  Summaries go to ``--summary``;
without it they land next to ``--out`` with a ``.json`` suffix, or on
stderr when neither path is given.  JSON-only commands write to ``--out``
or stdout.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from . import io
from .errors import DomainError, NumericalError, SupercritError

__all__ = ["main", "run", "build_parser"]

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2

# flag name -> (config block, key)
_FLAG_KEYS = {
    "mu": ("task", "mu"), "mu_min": ("task", "mu_min"), "mu_max": ("task", "mu_max"),
    "points": ("task", "points"), "spacing": ("task", "spacing"), "q": ("task", "q"),
    "k": ("task", "k"), "tol": ("task", "tol"), "rmin": ("task", "rmin"),
    "rmax": ("task", "rmax"), "samples": ("task", "samples"), "rbar": ("task", "rbar"),
    "log_rbar": ("task", "log_rbar"), "reference": ("task", "reference"),
    "threads": ("task", "threads"), "beta": ("task", "beta"), "alphas": ("task", "alphas"),
    "precision": ("solver", "precision"), "rtol": ("solver", "rtol"),
    "atol": ("solver", "atol"), "max_steps": ("solver", "max_steps"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DomainError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="supercrit", description="Radial supercritical elliptic lab.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True, solver=False):
        sp.add_argument("--config", help="YAML/JSON run configuration")
        if model:
            sp.add_argument("--model", help="model block: file path or inline YAML/JSON")
        if solver:
            sp.add_argument("--precision", choices=["double", "paired-double"])
            sp.add_argument("--rtol", type=float)
            sp.add_argument("--atol", type=float)
            sp.add_argument("--max-steps", dest="max_steps", type=int)
        sp.add_argument("--out", help="CSV (or JSON) output path, '-' for stdout")
        sp.add_argument("--summary", help="JSON summary path")

    sp = sub.add_parser("classify", help="growth class (q, p) and (H2) check")
    common(sp)
    sp.add_argument("--numeric", action="store_true", help="force tail extrapolation")

    sp = sub.add_parser("sequences", help="recurrence table as CSV")
    common(sp, model=False)
    sp.add_argument("--q", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--tol", type=float)

    sp = sub.add_parser("profile", help="limit profile z_k samples as CSV")
    common(sp, model=False)
    sp.add_argument("--q", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--rmin", type=float)
    sp.add_argument("--rmax", type=float)
    sp.add_argument("--samples", type=int)

    sp = sub.add_parser("shoot", help="one shot from v(0) = mu")
    common(sp, solver=True)
    sp.add_argument("--mu", type=float)

    sp = sub.add_parser("sweep", help="bifurcation diagram over a mu grid")
    common(sp, solver=True)
    sp.add_argument("--mu-min", dest="mu_min", type=float)
    sp.add_argument("--mu-max", dest="mu_max", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--spacing", choices=["log-g", "linear"])
    sp.add_argument("--reference", help="JSON summary written by the singular command")
    sp.add_argument("--threads", type=int)

    sp = sub.add_parser("singular", help="singular solution V* and condition (C)")
    common(sp, solver=True)
    sp.add_argument("--rbar", type=float)
    sp.add_argument("--log-rbar", dest="log_rbar", type=float)
    sp.add_argument("--beta", type=float)

    sp = sub.add_parser("verify", help="bump statistics against the recurrence")
    common(sp, solver=True)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--reference", help="JSON summary written by the singular command")
    return p


def _gather(args) -> dict:
    cfg = cfgmod.load(args.config) if args.config else {}
    if getattr(args, "model", None):
        cfg["model"] = cfgmod.load(args.model).get("model")
    for name, (block, key) in _FLAG_KEYS.items():
        val = getattr(args, name, None)
        if val is not None:
            cfg.setdefault(block, {})[key] = val
    out = cfg.setdefault("output", {})
    if args.out:
        out["csv"] = args.out
    if args.summary:
        out["json"] = args.summary
    if not out:
        cfg.pop("output")
    return cfgmod.validate(cfg)


def _need(task: dict, *keys):
    missing = [k for k in keys if task.get(k) is None]
    if missing:
        raise DomainError("missing task parameter(s): " + ", ".join(missing))
    return [task[k] for k in keys]


def _summary_path(cfg: dict) -> Optional[str]:
    out = cfg.get("output", {})
    if out.get("json"):
        return out["json"]
    if out.get("csv") and out["csv"] != "-":
        return os.path.splitext(out["csv"])[0] + ".json"
    return None


def _emit(cfg, command, header=None, rows=None, summary=None):
    prov = io.provenance(command, cfgmod.resolve(cfg))
    csv_path = cfg.get("output", {}).get("csv")
    if header is not None:
        with io.open_out(csv_path) as fh:
            io.write_csv(fh, header, rows, prov)
        if summary is not None:
            path = _summary_path(cfg)
            if path is None:
                io.write_json(sys.stderr, summary, prov)
            else:
                with io.open_out(path) as fh:
                    io.write_json(fh, summary, prov)
    else:
        path = cfg.get("output", {}).get("json") or csv_path
        with io.open_out(path) as fh:
            io.write_json(fh, summary, prov)


# ---------------------------------------------------------------------------
# commands

def _cmd_classify(cfg, args):
    from .growth import check_H2, classify
    model = cfgmod.build_model(cfg.get("model"))
    probe = cfg.get("task", {}).get("probe")
    cls = classify(model, probe, method="numeric" if args.numeric else "auto")
    h2 = check_H2(model)
    _emit(cfg, "classify", summary={"class": cls.as_dict(),
                                    "H2": {"passed": h2.passed, "infimum": h2.infimum,
                                           "argmin": h2.argmin}})


def _cmd_sequences(cfg, args):
    from .recurrence import build_table
    task = cfg.get("task", {})
    q, k = _need(task, "q", "k")
    tab = build_table(q, k, task.get("tol", 1e-12))
    cols = ["k", "a", "delta", "eta", "eta_tilde", "delta_star", "eta_star", "alpha_star",
            "residual"]
    _emit(cfg, "sequences", cols, [[getattr(r, c) for c in cols] for r in tab.rows])


def _cmd_profile(cfg, args):
    from .profiles import profile_from_table, sample_profile
    from .recurrence import build_table
    task = cfg.get("task", {})
    q, k = _need(task, "q", "k")
    rmin, rmax, n = task.get("rmin", 1e-4), task.get("rmax", 1e4), task.get("samples", 201)
    prof = profile_from_table(build_table(q, k), k)
    d = sample_profile(prof, rmin, rmax, n)
    cols = ["r", "z", "z_prime", "r2_exp_z", "mass"]
    _emit(cfg, "profile", cols, zip(*[d[c] for c in cols]))


def _cmd_shoot(cfg, args):
    from .shooting import integrate
    model = cfgmod.build_model(cfg.get("model"))
    (mu,) = _need(cfg.get("task", {}), "mu")
    shot = integrate(model, mu, cfgmod.build_solver(cfg.get("solver")))
    d = shot.samples()
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        rows = zip(d["r"], d["v"], d["v_prime"], d["log_source"], shot.s)
        rows = list(rows)
    _emit(cfg, "shoot", ["r", "v", "v_prime", "log_source", "log_r"], rows, shot.summary())


def _load_reference(path: str, model, solver):
    from .singular import build_approx, extend
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        ref_model = doc["provenance"]["config"]["model"]
        log_rbar = float(doc["log_r_bar"])
        B = float(doc["B"])
    except (KeyError, TypeError, ValueError):
        raise DomainError(f"{path} is not a singular summary") from None
    built = cfgmod.build_model(ref_model)
    if built.describe() != model.describe():
        raise DomainError("reference was built for a different model")
    return extend(build_approx(model, B), config=solver, log_r_bar=log_rbar)


def _cmd_sweep(cfg, args):
    from . import diagram as dg
    model = cfgmod.build_model(cfg.get("model"))
    solver = cfgmod.build_solver(cfg.get("solver"))
    task = cfg.get("task", {})
    lo, hi, n = _need(task, "mu_min", "mu_max", "points")
    grid = dg.mu_grid(model, lo, hi, n, spacing=task.get("spacing", "log-g"))
    ref = _load_reference(task["reference"], model, solver) if task.get("reference") else None
    diag = dg.trace(model, grid, solver, ref, threads=task.get("threads"))
    try:
        summary = dg.oscillation_summary(diag)
    except DomainError as exc:
        summary = {"lambda_star": None, "note": str(exc),
                   "turning_points": [t.as_dict() for t in (diag.turning or [])]}
    summary["points"] = len(diag.points)
    summary["failed"] = [{"mu": p.mu, "error": p.error} for p in diag.points if not p.ok]
    _emit(cfg, "sweep", ["mu", "lambda", "r0", "slope", "crossings"], diag.rows(), summary)


def _cmd_singular(cfg, args):
    from .singular import build_approx, check_condition_C, extend
    model = cfgmod.build_model(cfg.get("model"))
    solver = cfgmod.build_solver(cfg.get("solver"))
    task = cfg.get("task", {})
    approx = build_approx(model)
    log_rbar = task.get("log_rbar")
    if log_rbar is None and task.get("rbar") is not None:
        log_rbar = math.log(task["rbar"])
    sol = extend(approx, config=solver, log_r_bar=log_rbar)
    alphas = task.get("alphas", [0.5, 1.0, 1.5, 1.9])
    beta = task.get("beta", 0.0)
    # window from deep inside the matched region out to r = 1e-2 (or R*/2)
    hi = min(math.log(1e-2), sol.log_R_star - math.log(2.0))
    lo = min(2.0 * sol.log_r_bar, hi - 10.0)
    rep = check_condition_C(sol.value_log, alphas, beta, (lo, hi), model=model, log=True)
    summary = sol.summary()
    summary["condition_C"] = rep.as_dict()
    summary["condition_C"]["log_window"] = True
    s = sol.samples()
    rows = list(zip(s["log_r"], s["r"], s["V"], s["V_prime"]))
    _emit(cfg, "singular", ["log_r", "r", "V", "V_prime"], rows, summary)


def _cmd_verify(cfg, args):
    from .analysis import verify_shot
    from .growth import classify
    from .recurrence import build_table
    from .shooting import integrate
    model = cfgmod.build_model(cfg.get("model"))
    solver = cfgmod.build_solver(cfg.get("solver"))
    task = cfg.get("task", {})
    (mu,) = _need(task, "mu")
    q = task.get("q")
    if q is None:
        cls = classify(model)
        if not cls.in_class:
            raise DomainError("model is outside the supported growth class")
        q = cls.q
    shot = integrate(model, mu, solver)
    ref = _load_reference(task["reference"], model, solver) if task.get("reference") else None
    out = verify_shot(shot, build_table(q, 12), reference=ref)
    out["shot"] = shot.summary()
    _emit(cfg, "verify", summary=out)


_COMMANDS = {"classify": _cmd_classify, "sequences": _cmd_sequences, "profile": _cmd_profile,
             "shoot": _cmd_shoot, "sweep": _cmd_sweep, "singular": _cmd_singular,
             "verify": _cmd_verify}


def _fail(code: int, exc: BaseException) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        doc["diagnostics"] = io.to_jsonable(diag)
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return code


def run(command: str, config: dict) -> int:
    """Run ``command`` on an already assembled config mapping; returns the exit code."""
    ns = argparse.Namespace(numeric=False)
    if command not in _COMMANDS:
        return _fail(EXIT_DOMAIN, DomainError(f"unknown command {command!r}"))
    try:
        cfgmod.validate(config)
        _COMMANDS[command](config, ns)
    except DomainError as exc:
        return _fail(EXIT_DOMAIN, exc)
    except NumericalError as exc:
        return _fail(EXIT_NUMERIC, exc)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _gather(args)
        _COMMANDS[args.command](cfg, args)
    except DomainError as exc:
        return _fail(EXIT_DOMAIN, exc)
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except SupercritError as exc:  # pragma: no cover - every subclass is mapped above
        return _fail(EXIT_NUMERIC, exc)
    except OSError as exc:
        return _fail(EXIT_DOMAIN, exc)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

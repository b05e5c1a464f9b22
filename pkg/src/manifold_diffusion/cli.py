"""Command-line front end.

Subcommands mirror the theory and experiment entry points; every run echoes
a manifest JSON with the fully resolved configuration and content hashes of
the files it wrote.  Exit codes: 0 success, 2 config error, 3 solver
failure, 4 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import collapse as C
from . import experiments as E
from . import speciation as S
from .activations import make_activation
from .model import make_model, model_from_config, model_to_config, sample_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4

_MODEL_KEYS = ("d", "p", "alpha", "rho", "m", "activation", "ensemble", "seed")


def _out_dir(args) -> Path:
    base = args.output_dir or os.environ.get("MANIFOLD_DIFFUSION_OUTDIR", ".")
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolve_config(args) -> dict:
    cfg = {}
    if args.config:
        cfg.update(json.loads(Path(args.config).read_text()))
    for key in _MODEL_KEYS:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("seed", 0)
    return cfg


def _validate_config(cfg: dict) -> None:
    d, p = int(cfg.get("d", 0)), int(cfg.get("p", 0))
    if d < 1 or p < 1 or p > d:
        raise ValueError(f"config field d/p invalid: need d >= p >= 1, got d={d}, p={p}")
    beta = p / d
    if not 0 < beta <= 1:
        raise ValueError(f"config field beta = p/d = {beta} outside (0, 1]")
    if float(cfg.get("rho", 1.0)) <= 0:
        raise ValueError("config field rho must be positive")
    act = cfg.get("activation", "linear")
    if act not in ("linear", "tanh", "relu", "sigmoid"):
        raise ValueError(f"config field activation unknown: {act!r}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_manifest(out_dir: Path, name: str, cfg: dict, outputs: list[Path]) -> None:
    manifest = {
        "command": name,
        "resolved_config": cfg,
        "outputs": {
            str(p): hashlib.sha256(p.read_bytes()).hexdigest() for p in outputs
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    _write_json(out_dir / f"{name}.manifest.json", manifest)


def _model_from(cfg: dict):
    _validate_config(cfg)
    return model_from_config(cfg)


# ---------------------------------------------------------------------------
# subcommands

def cmd_speciation(args) -> int:
    cfg = _resolve_config(args)
    model = _model_from(cfg)
    gf = S.GammaFunctions(model.activation, model.rho)
    gep = S.gep_constants(gf)
    s = S.gamma0_sq_sum(model, gf)
    result = {
        "t_S_finite": S.speciation_time_finite(model, gf),
        "t_S_asymptotic": S.speciation_time_asymptotic(
            model.beta, model.d, model.mu_tilde_norm_sq, gep),
        "rho1": gep.rho1,
        "rho_star_sq": gep.rho_star_sq,
        "gamma0_sq_sum": s,
    }
    out = _out_dir(args)
    outputs = [out / "speciation.json"]
    _write_json(outputs[0], result)
    if args.potential_csv:
        t_s = result["t_S_finite"]
        path = out / "potential.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["q", "t", "V(q,t) [reduced units]"])
            for t in (0.5 * t_s, t_s, 1.5 * t_s):
                qmax = 4.0 * np.sqrt(max(s, 1.0))
                for q in np.linspace(-qmax, qmax, 201):
                    writer.writerow([q, t, S.potential(q, t, s)])
        outputs.append(path)
    _write_manifest(out, "speciation", cfg, outputs)
    print(json.dumps(result, indent=2))
    return EXIT_OK


def _collapse_method(cfg: dict) -> str:
    if cfg.get("activation", "linear") == "linear":
        if cfg.get("ensemble", "deterministic_isometry") == "deterministic_isometry":
            return "linear_isometry_closed_form"
        return "linear_rmt"
    return "glm_general"


def cmd_collapse(args) -> int:
    cfg = _resolve_config(args)
    _validate_config(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    beta = int(cfg["p"]) / int(cfg["d"])
    method = args.method or _collapse_method(cfg)
    if method == "linear_isometry_closed_form":
        t_c = C.collapse_time_linear_isometry(alpha, beta)
        result = C.CollapseResult(t_c=t_c, method=method, residual=0.0)
    elif method == "linear_rmt":
        result = C.collapse_time_linear_rmt(alpha, beta)
    else:
        act = make_activation(cfg.get("activation", "tanh"))
        params = (float(cfg.get("m", 1.0)), float(cfg.get("rho", 1.0)), beta, act)
        result = C.collapse_time_glm(params, alpha, n_outer=args.nodes,
                                     grid_points=args.grid_points)
    payload = {"t_C": result.t_c, "method": result.method,
               "residual": result.residual}
    out = _out_dir(args)
    _write_json(out / "collapse.json", payload)
    _write_manifest(out, "collapse", cfg, [out / "collapse.json"])
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_collapse_sweep(args) -> int:
    cfg = _resolve_config(args) if (args.config or args.d) else {"seed": 0}
    alpha = float(args.alpha if args.alpha is not None else cfg.get("alpha", 0.5))
    rho = float(cfg.get("rho", 1.0))
    m = float(cfg.get("m", 1.0))
    betas = np.linspace(args.beta_min, args.beta_max, args.beta_points)
    out = _out_dir(args)
    path = out / "collapse_sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "t_C [backward time]", "method_or_activation"])
        for beta in betas:
            writer.writerow([beta, C.collapse_time_linear_isometry(alpha, beta),
                             "linear_isometry_closed_form"])
            writer.writerow([beta, C.collapse_time_linear_rmt(alpha, beta).t_c,
                             "linear_rmt"])
            for act_name in args.activations.split(","):
                act_name = act_name.strip()
                if not act_name or act_name == "linear":
                    continue
                act = make_activation(act_name)
                res = C.collapse_time_glm((m, rho, float(beta), act), alpha,
                                          n_outer=args.nodes, n_inner=48,
                                          grid_points=args.grid_points,
                                          t_tol=1e-4)
                writer.writerow([beta, res.t_c, act_name])
    _write_manifest(out, "collapse_sweep",
                    {"alpha": alpha, "rho": rho, "m": m,
                     "betas": betas.tolist(), "activations": args.activations},
                    [path])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_free_energy(args) -> int:
    cfg = _resolve_config(args)
    _validate_config(cfg)
    beta = int(cfg["p"]) / int(cfg["d"])
    act = make_activation(cfg.get("activation", "linear"))
    params = (float(cfg.get("m", 1.0)), float(cfg.get("rho", 1.0)), beta, act)
    ts = np.linspace(args.t_min, args.t_max, args.t_points)
    out = _out_dir(args)
    path = out / "free_energy.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t [backward time]", "q_star", "r_star",
                         "f_star [per latent dim]"])
        for t in ts:
            res = C.f_star(float(t), params, n_outer=args.nodes)
            writer.writerow([t, res.q_star, res.r_star, res.f_star])
    _write_manifest(out, "free_energy", cfg, [path])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_exp_speciation(args) -> int:
    cfg = _resolve_config(args)
    model = _model_from(cfg)
    t_grid = np.linspace(args.t_max, args.t_min, args.t_points)
    records = E.speciation_experiment(model, args.n_data, t_grid,
                                      args.n_traj, args.n_clones,
                                      int(cfg["seed"]), dt=args.dt)
    out = _out_dir(args)
    csv_path = out / "exp_speciation.csv"
    E.records_to_csv(records, csv_path)
    gf = S.GammaFunctions(model.activation, model.rho)
    summary = {
        "t_S_empirical": _try(lambda: E.threshold_crossing(records)),
        "t_S_theory": S.speciation_time_finite(model, gf),
    }
    _write_json(out / "exp_speciation.json", summary)
    _write_manifest(out, "exp_speciation", cfg,
                    [csv_path, out / "exp_speciation.json"])
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_exp_collapse(args) -> int:
    cfg = _resolve_config(args)
    model = _model_from(cfg)
    dataset = sample_dataset(model, args.n_data, int(cfg["seed"]))
    t_grid = np.linspace(args.t_max, args.t_min, args.t_points)
    records = E.collapse_crossing_experiment(model, dataset, t_grid,
                                             args.n_noise, int(cfg["seed"]) + 1)
    out = _out_dir(args)
    csv_path = out / "exp_collapse.csv"
    E.records_to_csv(records, csv_path)
    method = _collapse_method(cfg)
    alpha = float(cfg.get("alpha", np.log(args.n_data) / model.d))
    if method == "linear_isometry_closed_form":
        theory = C.collapse_time_linear_isometry(alpha, model.beta)
    elif method == "linear_rmt":
        theory = C.collapse_time_linear_rmt(alpha, model.beta).t_c
    else:
        theory = C.collapse_time_glm(model, alpha, n_outer=12, n_inner=48,
                                     t_tol=1e-4).t_c
    summary = {"t_C_empirical": _try(lambda: E.sign_change_time(records)),
               "t_C_theory": theory, "method": method}
    _write_json(out / "exp_collapse.json", summary)
    _write_manifest(out, "exp_collapse", cfg, [csv_path, out / "exp_collapse.json"])
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_exp_free_energy(args) -> int:
    cfg = _resolve_config(args)
    model = _model_from(cfg)
    rec = E.free_energy_mc(model, args.t, args.n_x, args.n_latent,
                           int(cfg["seed"]))
    out = _out_dir(args)
    csv_path = out / "exp_free_energy.csv"
    E.records_to_csv([rec], csv_path)
    summary = {"value": rec.value, "stderr": rec.stderr,
               "flags": list(rec.flags)}
    _write_json(out / "exp_free_energy.json", summary)
    _write_manifest(out, "exp_free_energy", cfg,
                    [csv_path, out / "exp_free_energy.json"])
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_exp_rem(args) -> int:
    cfg = _resolve_config(args)
    model = _model_from(cfg)
    rec = E.rem_derivative_check(model, args.t, args.n_rep, int(cfg["seed"]))
    out = _out_dir(args)
    csv_path = out / "exp_rem.csv"
    E.records_to_csv([rec], csv_path)
    summary = {"minus_g_prime_at_1": rec.value, "stderr": rec.stderr,
               "expected": 0.5}
    _write_json(out / "exp_rem.json", summary)
    _write_manifest(out, "exp_rem", cfg, [csv_path, out / "exp_rem.json"])
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _try(fn):
    try:
        return fn()
    except ValueError as exc:
        return f"unavailable: {exc}"


def cmd_validate(args) -> int:
    checks = []

    lin = make_activation("linear")
    glm = C.collapse_time_glm((1.0, 1.0, 0.5, lin), 0.5).t_c
    rmt = C.collapse_time_linear_rmt(0.5, 0.5).t_c
    checks.append(("glm_vs_rmt_linear", abs(glm - rmt) < 1e-3))

    rng = np.random.default_rng(0)
    d, beta, eta = 600, 0.5, 1.0
    F = rng.standard_normal((d, int(beta * d)))
    _, ld = np.linalg.slogdet(eta * F @ F.T / int(beta * d) + np.eye(d))
    checks.append(("rmt_vs_eigen", abs(ld / d - C.mp_logdet(eta, beta)) < 2e-2))

    ok_psi = all(abs(C.psi_quadrature_check(r, m, rho) - C.psi(r, m, rho)) < 1e-8
                 for r, m, rho in [(1.0, 0.0, 1.0), (2.0, 1.0, 0.5)])
    checks.append(("psi_integral_vs_closed_form", ok_psi))

    ok_big = all(abs(C.psi_big(q, t, 1.0, 1.0, lin) - C.psi_big_linear(q, t, 1.0, 1.0)) < 1e-6
                 for q, t in [(0.5, 0.5), (1.5, 1.0)])
    checks.append(("psi_big_linear_closed_form", ok_big))

    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_VALIDATION


# ---------------------------------------------------------------------------

def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON model config file")
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--m", type=float)
    p.add_argument("--activation")
    p.add_argument("--ensemble")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-diffusion",
        description="speciation/collapse times of empirical-score diffusion "
                    "on manifold mixture data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("speciation", help="theory speciation time")
    _add_model_flags(p)
    p.add_argument("--potential-csv", action="store_true")
    p.set_defaults(fn=cmd_speciation)

    p = sub.add_parser("collapse", help="theory collapse time")
    _add_model_flags(p)
    p.add_argument("--method", choices=["glm_general",
                                        "linear_isometry_closed_form",
                                        "linear_rmt"])
    p.add_argument("--nodes", type=int, default=16)
    p.add_argument("--grid-points", type=int, default=64)
    p.set_defaults(fn=cmd_collapse)

    p = sub.add_parser("collapse-sweep", help="t_C(beta) tables")
    _add_model_flags(p)
    p.add_argument("--beta-min", type=float, default=0.1)
    p.add_argument("--beta-max", type=float, default=1.0)
    p.add_argument("--beta-points", type=int, default=10)
    p.add_argument("--activations", default="relu,tanh,sigmoid")
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--grid-points", type=int, default=48)
    p.set_defaults(fn=cmd_collapse_sweep)

    p = sub.add_parser("free-energy", help="f_star(t) table")
    _add_model_flags(p)
    p.add_argument("--t-min", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--t-points", type=int, default=20)
    p.add_argument("--nodes", type=int, default=16)
    p.set_defaults(fn=cmd_free_energy)

    p = sub.add_parser("exp-speciation", help="clone-agreement experiment")
    _add_model_flags(p)
    p.add_argument("--n-data", type=int, default=4096)
    p.add_argument("--n-traj", type=int, default=40)
    p.add_argument("--n-clones", type=int, default=25)
    p.add_argument("--t-min", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=3.2)
    p.add_argument("--t-points", type=int, default=6)
    p.add_argument("--dt", type=float, default=0.02)
    p.set_defaults(fn=cmd_exp_speciation)

    p = sub.add_parser("exp-collapse", help="log Z1/Z2 crossing experiment")
    _add_model_flags(p)
    p.add_argument("--n-data", type=int, default=22026)
    p.add_argument("--n-noise", type=int, default=200)
    p.add_argument("--t-min", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=0.6)
    p.add_argument("--t-points", type=int, default=12)
    p.set_defaults(fn=cmd_exp_collapse)

    p = sub.add_parser("exp-free-energy", help="Monte-Carlo free energy")
    _add_model_flags(p)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--n-x", type=int, default=50)
    p.add_argument("--n-latent", type=int, default=100_000)
    p.set_defaults(fn=cmd_exp_free_energy)

    p = sub.add_parser("exp-rem", help="tilted-partition derivative identity")
    _add_model_flags(p)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--n-rep", type=int, default=100_000)
    p.set_defaults(fn=cmd_exp_rem)

    p = sub.add_parser("validate", help="run the oracle cross-check suite")
    p.add_argument("--output-dir")
    p.set_defaults(fn=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, FloatingPointError) as exc:
        print(json.dumps({"error": "solver", "message": str(exc)}), file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

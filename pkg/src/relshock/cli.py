"""relshock command line: experiment orchestration and reporting.

Subcommands: profile, hypotheses, contract, poincare, sweep, identity.
Exit codes: 0 all enabled assertions pass, 1 run failure, 2 config error.
Every CSV artifact starts with a config-hash comment line; floats print with
17 significant digits so goldens are bit-stable.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics
from .calculus import check_hypotheses, make_pair
from .config import ExperimentConfig, load_config_file
from .errors import ConfigError, RelshockError
from .functionals import poincare_search
from .profile import solve_profile, tail_diagnostics, y_map_check

EXIT_OK, EXIT_RUNFAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows, cfg_hash: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# config-hash: {cfg_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable, sort_keys=True)
        fh.write("\n")


def dump_profile_csv(prof, path, cfg_hash: str) -> None:
    rows = zip(prof.xi, prof.S, prof.S_prime, prof.S_double_prime, prof.a,
               prof.y)
    write_csv(path, ["xi", "S", "S_prime", "S_double_prime", "a", "y"], rows,
              cfg_hash)


def dump_snapshots_csv(snapshots, path, cfg_hash: str) -> None:
    header = (["t", "X", "Xdot", "Y"] + [f"B{i}" for i in range(1, 9)]
              + ["B_total", "G0", "D", "R_main", "weighted_entropy"])
    rows = [[s.t, s.X, s.Xdot, s.Y, *s.B, s.B_total, s.G0, s.D, s.R_main,
             s.weighted_entropy] for s in snapshots]
    write_csv(path, header, rows, cfg_hash)


def dump_fields_csv(states, path, cfg_hash: str) -> None:
    if not states:
        return
    xi = states[0].field.grid.xi
    header = ["xi"] + [f"u_t{_fmt(s.t)}" for s in states]
    cols = [xi] + [s.field.values for s in states]
    rows = zip(*cols)
    write_csv(path, header, rows, cfg_hash)


# ---------------------------------------------------------------------------
# subcommands


def cmd_profile(cfg: ExperimentConfig, out: Path) -> int:
    cfg.validate(require=("flux", "u_minus", "epsilon"), run=False)
    pair = make_pair(cfg.flux, cfg.entropy if cfg.entropy else "quadratic")
    prof = solve_profile(pair, cfg.u_minus, cfg.epsilon,
                         half_width=cfg.half_width_resolved, lam=cfg.lam)
    h = cfg.config_hash()
    dump_profile_csv(prof, out / "profile.csv", h)

    residual = float(np.max(np.abs(
        -prof.sigma * prof.S_prime + prof.pair.f(prof.S, 1) * prof.S_prime
        - prof.S_double_prime)))
    report = {
        "sigma": prof.sigma, "u_minus": prof.u_minus, "u_plus": prof.u_plus,
        "half_width": prof.half_width, "ode_residual_sup": residual,
        "S_mid": float(prof.S[np.argmin(np.abs(prof.xi))]),
        "y_map_sup_error": y_map_check(prof),
    }
    ok = residual <= 1e-9
    if prof.half_width >= 5.0 / cfg.epsilon:
        tails = tail_diagnostics(prof)
        report["tails"] = {
            "decay_left": tails.decay_left, "decay_right": tails.decay_right,
            "inf_ratio": tails.inf_ratio,
            "curvature_ratio": tails.curvature_ratio}
        ok = ok and all(np.isfinite(v) for v in report["tails"].values()) \
            and tails.decay_left > 0 and tails.decay_right > 0
    if cfg.flux == "burgers":
        sig = cfg.u_minus - 0.5 * cfg.epsilon
        exact = sig - 0.5 * cfg.epsilon * np.tanh(0.25 * cfg.epsilon * prof.xi)
        report["tanh_sup_error"] = float(np.max(np.abs(prof.S - exact)))
        ok = ok and report["tanh_sup_error"] <= 1e-8
    report["passed"] = bool(ok)
    write_json(out / "profile_report.json", report)
    print(f"profile: {'PASS' if ok else 'FAIL'} "
          f"(ode residual {residual:.3e})")
    return EXIT_OK if ok else EXIT_RUNFAIL


def cmd_hypotheses(cfg: ExperimentConfig, out: Path) -> int:
    cfg.validate(require=("flux", "entropy"), run=False)
    if cfg.u_minus is None and not cfg.theta:
        raise ConfigError("missing required key 'theta' (or 'u_minus' to "
                          "derive it)")
    pair = make_pair(cfg.flux, cfg.entropy)
    rep = check_hypotheses(pair, cfg.theta_resolved)
    write_json(out / "hypotheses_report.json", {
        "alpha_est": rep.alpha_est, "min_eta_dd": rep.min_eta_dd,
        "min_eta_dddd": rep.min_eta_dddd, "constants": rep.constants,
        "worst_points": rep.worst_points, "h1_passed": rep.h1_passed,
        "h2_passed": rep.h2_passed, "passed": rep.passed,
        "failures": rep.failures, "theta": rep.theta})
    print(f"hypotheses: {'PASS' if rep.passed else 'FAIL'} "
          f"(alpha_est = {rep.alpha_est:g})")
    for msg in rep.failures:
        print(f"  {msg}")
    return EXIT_OK if rep.passed else EXIT_RUNFAIL


def cmd_contract(cfg: ExperimentConfig, out: Path) -> int:
    cfg.validate()
    report = dynamics.run_contraction(cfg, collect_fields=True)
    h = cfg.config_hash()
    dump_snapshots_csv(report.snapshots, out / "snapshots.csv", h)
    dump_fields_csv(report.fields, out / "fields.csv", h)
    summary = report.summary_dict()
    summary["snapshots_csv"] = str(out / "snapshots.csv")
    summary["fields_csv"] = str(out / "fields.csv")
    write_json(out / "contract_report.json", summary)
    print(f"contract: {'PASS' if report.passed else 'FAIL'} "
          f"(E0 = {report.initial_entropy:.6e}, "
          f"max increment = {report.max_entropy_increment:.3e})")
    for msg in report.failures:
        print(f"  {msg}")
    return EXIT_OK if report.passed else EXIT_RUNFAIL


def cmd_poincare(cfg: ExperimentConfig, out: Path, M: float, delta: float,
                 trials: int, seed: int, expect: str) -> int:
    rep = poincare_search(M, delta, trials, seed)
    write_json(out / "poincare_report.json", {
        "delta": rep.delta, "M": rep.M, "n_trials": rep.n_trials,
        "max_R": rep.max_R, "n_positive": rep.n_positive,
        "ascent_improved": rep.ascent_improved})
    if expect == "nonpositive":
        ok = rep.max_R <= 0.0
    elif expect == "positive":
        ok = rep.max_R > 0.0
    else:
        ok = True
    print(f"poincare: {'PASS' if ok else 'FAIL'} (max R_delta = {rep.max_R:.6e} "
          f"over {rep.n_trials} trials, expected {expect})")
    return EXIT_OK if ok else EXIT_RUNFAIL


def _sweep_one(args) -> dict:
    flux, entropy, u_minus, eps, lam = args
    pair = make_pair(flux, entropy if entropy else "quadratic")
    prof = solve_profile(pair, u_minus, eps, lam=lam)
    tails = tail_diagnostics(prof)
    return {"eps": eps, "decay_left": tails.decay_left,
            "decay_right": tails.decay_right, "inf_ratio": tails.inf_ratio,
            "curvature_ratio": tails.curvature_ratio,
            "y_map_sup": y_map_check(prof)}


def cmd_sweep(cfg: ExperimentConfig, out: Path, eps_list, jobs: int) -> int:
    cfg.validate(require=("flux", "u_minus"), run=False)
    tasks = [(cfg.flux, cfg.entropy, cfg.u_minus, e, cfg.lam)
             for e in eps_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]

    h = cfg.config_hash()
    header = ["eps", "decay_left", "decay_right", "inf_ratio",
              "curvature_ratio", "y_map_sup"]
    write_csv(out / "sweep.csv", header,
              [[r[k] for k in header] for r in results], h)

    checks = {}
    ok = True
    for k in range(len(results) - 1):
        r0, r1 = results[k], results[k + 1]  # eps halves: r1 = r0 / 2
        ratio_e = r0["eps"] / r1["eps"]
        for key, target in (("decay_left", ratio_e), ("decay_right", ratio_e),
                            ("inf_ratio", 1.0), ("curvature_ratio", 1.0),
                            ("y_map_sup", ratio_e**2)):
            got = r0[key] / r1[key]
            name = f"{key}[{r0['eps']:g}/{r1['eps']:g}]"
            within = abs(got - target) <= 0.25 * target
            checks[name] = {"ratio": got, "target": target, "ok": within}
            ok = ok and within
    write_json(out / "sweep_report.json",
               {"rows": results, "checks": checks, "passed": ok})
    print(f"sweep: {'PASS' if ok else 'FAIL'} over eps = "
          f"{[r['eps'] for r in results]}")
    return EXIT_OK if ok else EXIT_RUNFAIL


def cmd_identity(cfg: ExperimentConfig, out: Path, refine: int,
                 tol: float, min_ratio: float) -> int:
    cfg.validate()
    study = dynamics.identity_study(cfg, refine=refine)
    residuals = study["residuals"]
    ratios = study.get("ratios", [])
    ok = residuals[0] <= tol and all(r >= min_ratio for r in ratios)
    write_json(out / "identity_report.json", {
        "residuals": residuals, "ratios": ratios,
        "levels": [{"points": lv["points"], "dt": lv["dt"],
                    "residual": lv["residual"]} for lv in study["levels"]],
        "passed": ok})
    print(f"identity: {'PASS' if ok else 'FAIL'} residuals = "
          f"{['%.3e' % r for r in residuals]}, ratios = "
          f"{['%.2f' % r for r in ratios]}")
    return EXIT_OK if ok else EXIT_RUNFAIL


# ---------------------------------------------------------------------------
# argument parsing


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--flux", help="flux name or poly:c0,c1,...")
    p.add_argument("--entropy", help="entropy name or poly:c0,c1,...")
    p.add_argument("--u-minus", type=float, dest="u_minus")
    p.add_argument("--eps", type=float, dest="epsilon")
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--delta0", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--half-width", type=float, dest="half_width")
    p.add_argument("--points", type=int)
    p.add_argument("--dt-safety", type=float, dest="dt_safety")
    p.add_argument("--T", type=float, dest="T")
    p.add_argument("--cadence", type=float, dest="snapshot_cadence")
    p.add_argument("--no-assert-theorem", action="store_true")
    p.add_argument("--shift-integrator", dest="shift_integrator",
                   choices=("implicit", "euler", "heun"))
    p.add_argument("--kind", choices=("bump", "shift", "rough"))
    p.add_argument("--amplitude", type=float)
    p.add_argument("--center", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--shift", type=float)
    p.add_argument("--n-bumps", type=int, dest="n_bumps")
    p.add_argument("--span", type=float)
    p.add_argument("--seed", type=int)


def _parse_funcspec(text: str):
    if text.startswith("poly:"):
        return {"poly": [float(v) for v in text[5:].split(",")]}
    return text


def build_config(args) -> ExperimentConfig:
    data = load_config_file(args.config) if args.config else {}
    for key in ("flux", "entropy", "u_minus", "epsilon", "lam", "delta0",
                "theta", "half_width", "points", "dt_safety", "T",
                "snapshot_cadence", "outdir"):
        val = getattr(args, key, None) if key != "outdir" else args.out
        if val is not None:
            data[key] = val
    for key in ("flux", "entropy"):
        if isinstance(data.get(key), str):
            data[key] = _parse_funcspec(data[key])
    if args.no_assert_theorem:
        data["assert_theorem"] = False
    if args.shift_integrator is not None:
        data["shift_integrator"] = args.shift_integrator
    pert = dict(data.get("perturbation", {}))
    for key in ("kind", "amplitude", "center", "width", "shift", "n_bumps",
                "span", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            pert[key] = val
    if pert:
        data["perturbation"] = pert
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="relshock",
        description="Viscous shock profiles and weighted relative-entropy "
                    "contraction experiments for 1D scalar conservation laws")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, hlp in (("profile", "solve the shock profile and dump it"),
                      ("hypotheses", "sampled hypothesis certificate"),
                      ("contract", "coupled contraction run"),
                      ("poincare", "randomized Poincare inequality search"),
                      ("sweep", "epsilon-halving profile scaling sweep"),
                      ("identity", "entropy identity refinement study")):
        p = sub.add_parser(name, help=hlp)
        _add_config_flags(p)
        if name == "poincare":
            p.add_argument("--delta", type=float, default=1e-3)
            p.add_argument("--M", type=float, default=1.0)
            p.add_argument("--trials", type=int, default=10000)
            p.add_argument("--search-seed", type=int, default=12345,
                           dest="search_seed")
            p.add_argument("--expect", default="nonpositive",
                           choices=("nonpositive", "positive", "none"))
        if name == "sweep":
            p.add_argument("--eps-list", default="0.1,0.05,0.025",
                           dest="eps_list")
            p.add_argument("--jobs", type=int, default=1)
        if name == "identity":
            p.add_argument("--refine", type=int, default=1)
            p.add_argument("--tol", type=float, default=5e-3)
            p.add_argument("--min-ratio", type=float, default=1.8,
                           dest="min_ratio")

    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        out = Path(args.out or cfg.outdir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "profile":
            return cmd_profile(cfg, out)
        if args.command == "hypotheses":
            return cmd_hypotheses(cfg, out)
        if args.command == "contract":
            return cmd_contract(cfg, out)
        if args.command == "poincare":
            return cmd_poincare(cfg, out, args.M, args.delta, args.trials,
                                args.search_seed, args.expect)
        if args.command == "sweep":
            eps_list = [float(v) for v in args.eps_list.split(",")]
            return cmd_sweep(cfg, out, eps_list, args.jobs)
        if args.command == "identity":
            return cmd_identity(cfg, out, args.refine, args.tol,
                                args.min_ratio)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RelshockError as exc:
        print(f"run failure: {exc}", file=sys.stderr)
        return EXIT_RUNFAIL


if __name__ == "__main__":
    sys.exit(main())

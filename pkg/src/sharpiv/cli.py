"""Command-line interface: ``sharpiv <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .analysis import AnalysisConfig, run_analysis
from .data import load_csv, save_csv
from .errors import NumericalError, ValidationError

SEED_ENV = "SHARPIV_SEED"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("sharpiv")


def _default_seed(fallback: int) -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def cmd_analyze(args) -> int:
    bounds = tuple(_names(args.bounds))
    cfg = AnalysisConfig(
        learner=args.learner, pi_learner=args.pi_learner, folds=args.folds, clip_eps=args.clip_eps,
        seed=args.seed if args.seed is not None else _default_seed(0),
        classifier=args.classifier, bounds=bounds, level=args.level,
        sharpness=not args.no_sharpness, ci=args.ci, late=args.late,
        kappa1=args.kappa1, kappa2=args.kappa2,
    )
    reserved = [args.y_col, args.a_col, args.z_col] + [c for c in (args.c_col, args.subgroup_col) if c]
    x_cols = _names(args.x_cols) if args.x_cols else None
    if x_cols is None:
        if not Path(args.input).exists():
            raise FileNotFoundError(f"no such file: {args.input}")
        header = pd.read_csv(args.input, nrows=0).columns
        x_cols = [c for c in header if c not in reserved]
    ds = load_csv(args.input, args.y_col, args.a_col, args.z_col, x_cols, args.c_col)
    subgroup = None
    if "custom" in bounds:
        if not args.subgroup_col:
            raise ValidationError("--bounds custom needs --subgroup-col")
        frame = pd.read_csv(args.input, usecols=[args.subgroup_col])
        subgroup = frame[args.subgroup_col].to_numpy(dtype=float)
        if not np.all(np.isin(subgroup, (0.0, 1.0))):
            raise ValidationError("subgroup column must be 0/1")

    result = run_analysis(ds, cfg, subgroup)
    result.summary["input"] = str(args.input)
    for msg in result.warnings:
        log.warning(msg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.units.to_csv(out / "units.csv", index=False, float_format="%.17g")
    _write_json(result.summary, out / "summary.json")
    print(json.dumps(_headline(result.summary), default=_json_default))
    return EXIT_OK


def _headline(summary: dict) -> dict:
    head = {"n": summary["n"], "mu_hat": summary["strength"]["mu_hat"]}
    if "sharpness" in summary:
        head["psi_hat"] = summary["sharpness"]["psi_hat"]
    for kind, rep in summary.get("bounds", {}).items():
        head[f"{kind}_bounds"] = [rep["beta_l"], rep["beta_u"]]
    return head


def cmd_simulate(args) -> int:
    from .nuisance import LearnerSpec
    from .simlab.montecarlo import run_monte_carlo

    outcome = None if args.outcome_learner == "same" else LearnerSpec.parse(args.outcome_learner)
    res = run_monte_carlo(
        mu=args.mu, psi_list=_floats(args.psi), beta=args.beta, n_list=_ints(args.n),
        nsim=args.nsim, seed=args.seed if args.seed is not None else _default_seed(2000),
        learner=LearnerSpec.parse(args.learner), outcome_learner=outcome, folds=args.folds,
        jobs=args.jobs, include_score=not args.no_score_covariate,
    )
    table = res.summary
    if args.out:
        table.to_csv(args.out, index=False, float_format="%.4f")
    if args.replications_out:
        res.replications.to_csv(args.replications_out, index=False, float_format="%.17g")
    print(table.to_string(index=False, float_format=lambda v: f"{v:.1f}"))
    return EXIT_OK


def cmd_dgp_solve(args) -> int:
    from .simlab.oracle import oracle_moments, sharpness_scan, solve_dgp_params

    b0, b1 = solve_dgp_params(args.mu, args.psi)
    mom = oracle_moments(b0, b1)
    print(json.dumps({"b0": b0, "b1": b1, "mu": mom.mu, "psi": mom.psi, "q": mom.q,
                      "e_q": mom.e_q, "e_s": mom.e_s, "e_h0": mom.e_h0, "length_hq": mom.length_hq}))
    if args.scan_out:
        grid = np.exp(np.linspace(-2.8, 5.5, args.scan_points))
        pd.DataFrame({"b1": grid, "psi": sharpness_scan(args.mu, grid)}).to_csv(
            args.scan_out, index=False, float_format="%.10g")
    return EXIT_OK


def cmd_fstat(args) -> int:
    from .simlab.fstat import first_stage_fstat_demo

    seed = args.seed if args.seed is not None else _default_seed(1000)
    means = first_stage_fstat_demo(args.n, args.nsim, seed)
    row = means._asdict()
    print(json.dumps(row))
    if args.out:
        pd.DataFrame([row]).to_csv(args.out, index=False, float_format="%.4f")
    return EXIT_OK


def cmd_margin(args) -> int:
    from .simlab.margin import margin_curve, uniform_margin_probability
    from .simlab.oracle import solve_dgp_params

    if not 0 < args.tmax < 1:
        raise ValidationError("--tmax must lie in (0, 1)")
    t = np.linspace(args.tmax / args.points, args.tmax, args.points)
    if args.uniform:
        b0 = b1 = float("nan")
        fit = margin_curve(0.0, 0.0, t, c_max=args.c_max, prob_fn=uniform_margin_probability(1 - args.mu))
    else:
        b0, b1 = solve_dgp_params(args.mu, args.psi)
        fit = margin_curve(b0, b1, t, c_max=args.c_max)
    if args.out:
        fit.to_frame().to_csv(args.out, index=False, float_format="%.10g")
    print(json.dumps({"b0": b0, "b1": b1, "C": fit.C, "alpha": fit.alpha,
                      "max_admissible_alpha": fit.max_admissible_alpha, "c_max": fit.c_max,
                      "degenerate": fit.degenerate}))
    return EXIT_OK


def cmd_draw_data(args) -> int:
    from .simlab.dgp import DGPConfig, simulate_dataset

    seed = args.seed if args.seed is not None else _default_seed(0)
    cfg = DGPConfig.from_targets(args.mu, args.psi, beta=args.beta, n=args.n, seed=seed,
                                 include_score=not args.no_score_covariate)
    save_csv(simulate_dataset(cfg), args.out, include_latent=not args.no_latent)
    print(json.dumps({"b0": cfg.b0, "b1": cfg.b1, "n": cfg.n, "seed": seed, "out": str(args.out)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sharpiv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="classify compliers, bound subgroup effects, estimate sharpness")
    p.add_argument("input", help="CSV file with a header row")
    p.add_argument("--y-col", default="y")
    p.add_argument("--a-col", default="a")
    p.add_argument("--z-col", default="z")
    p.add_argument("--x-cols", help="comma-separated covariates (default: every other column)")
    p.add_argument("--c-col", help="optional latent complier column (ignored by estimators)")
    p.add_argument("--learner", default="logistic", help="logistic | linear | knn:K | constant")
    p.add_argument("--pi-learner", help="learner for the instrument propensity (default: --learner)")
    p.add_argument("--folds", type=int, default=2)
    p.add_argument("--clip-eps", type=float, default=0.01)
    p.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--classifier", default="quantile", choices=["bayes", "quantile", "stochastic", "modified"])
    p.add_argument("--kappa1", type=float, help="score error bound for the modified classifier")
    p.add_argument("--kappa2", type=float, help="quantile error bound for the modified classifier")
    p.add_argument("--bounds", default="ate,hq", help="comma list from ate, hq, custom")
    p.add_argument("--subgroup-col", help="0/1 column defining the custom subgroup")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--no-sharpness", action="store_true")
    p.add_argument("--ci", default="both", choices=["wald", "logit", "both"])
    p.add_argument("--late", action="store_true", help="also estimate the complier average effect")
    p.add_argument("--out-dir", default="sharpiv_out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo table over sharpness values and sample sizes")
    p.add_argument("--mu", type=float, default=0.3)
    p.add_argument("--psi", default="0.2,0.5,0.8")
    p.add_argument("--n", default="500,1000,5000")
    p.add_argument("--nsim", type=int, default=500)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--seed", type=int)
    p.add_argument("--learner", default="logistic")
    p.add_argument("--outcome-learner", default="linear", help="learner for treatment/outcome regressions, or 'same'")
    p.add_argument("--folds", type=int, default=2)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-score-covariate", action="store_true", help="give learners x only")
    p.add_argument("--out")
    p.add_argument("--replications-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dgp-solve", help="score coefficients for a target strength and sharpness")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--psi", type=float, required=True)
    p.add_argument("--scan-out", help="write sharpness along a b1 grid to this CSV")
    p.add_argument("--scan-points", type=int, default=200)
    p.set_defaults(func=cmd_dgp_solve)

    p = sub.add_parser("fstat-demo", help="first-stage F for equally strong instruments")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--nsim", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fstat)

    p = sub.add_parser("margin", help="margin curve P(|gamma - q| <= t) and its power-law fit")
    p.add_argument("--mu", type=float, default=0.3)
    p.add_argument("--psi", type=float, default=0.75)
    p.add_argument("--tmax", type=float, default=0.5)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--c-max", type=float, default=10.0)
    p.add_argument("--uniform", action="store_true", help="use a uniform score distribution instead")
    p.add_argument("--out")
    p.set_defaults(func=cmd_margin)

    p = sub.add_parser("draw-data", help="write one simulated dataset to CSV")
    p.add_argument("--mu", type=float, default=0.3)
    p.add_argument("--psi", type=float, default=0.5)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-score-covariate", action="store_true")
    p.add_argument("--no-latent", action="store_true", help="omit the latent complier column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_draw_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, ValueError) as exc:
        kind = "validation" if not isinstance(exc, FileNotFoundError) else "file"
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

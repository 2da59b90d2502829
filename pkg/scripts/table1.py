"""Monte Carlo table of classification errors, bound lengths and sharpness-estimator performance.

    python3 scripts/table1.py --nsim 500 --out results/table1.csv
"""
import argparse
import time
from pathlib import Path

from sharpiv.nuisance import LearnerSpec
from sharpiv.simlab import run_monte_carlo


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nsim", type=int, default=500)
    p.add_argument("--n", default="500,1000,5000")
    p.add_argument("--psi", default="0.2,0.5,0.8")
    p.add_argument("--seed", type=int, default=2000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--all-logistic", action="store_true",
                   help="fit treatment and outcome regressions by logistic IRLS too")
    p.add_argument("--out", default="results/table1.csv")
    args = p.parse_args()

    t0 = time.perf_counter()
    res = run_monte_carlo(
        psi_list=[float(v) for v in args.psi.split(",")],
        n_list=[int(v) for v in args.n.split(",")],
        nsim=args.nsim, seed=args.seed, jobs=args.jobs,
        learner=LearnerSpec("logistic"),
        **({"outcome_learner": None} if args.all_logistic else {}),
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    res.summary.to_csv(out, index=False, float_format="%.2f")
    res.replications.to_csv(out.with_name(out.stem + "_replications.csv"), index=False)
    print(res.summary.to_string(index=False, float_format=lambda v: f"{v:.1f}"))
    print(f"{time.perf_counter() - t0:.0f}s -> {out}")


if __name__ == "__main__":
    main()

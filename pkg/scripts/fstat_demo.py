"""Mean first-stage F for two instruments of equal strength but different sharpness.

    python3 scripts/fstat_demo.py --nsim 1000
"""
import argparse
import json

from sharpiv.simlab import first_stage_fstat_demo
from sharpiv.simlab.fstat import oracle_strength_sharpness


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--nsim", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1000)
    args = p.parse_args()
    means = first_stage_fstat_demo(args.n, args.nsim, args.seed)
    print(json.dumps({"mean_f": means._asdict(), "strength_sharpness": oracle_strength_sharpness()}, indent=2))


if __name__ == "__main__":
    main()

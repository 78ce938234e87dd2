"""Single-AP reconstruction tables for Cases 1-3 (scatter data for the line simulations)."""

import argparse
from pathlib import Path

from crowdloc.channel import ChannelParams
from crowdloc.io import write_text
from crowdloc.pipeline import case_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/case_study")
    args = ap.parse_args()
    params = ChannelParams()
    for case, m in ((1, 200), (2, 800), (3, 800)):
        for name, text in case_study(case, params, m, seed=args.seed).items():
            path = write_text(Path(args.out) / f"{name}.csv", text)
            print(path)


if __name__ == "__main__":
    main()

"""Train at one channel, test at another: median degradation of CDF-VC and kNN.

Scenarios mimic a change of carrier frequency (path-loss exponent), of
measurement quality (noise) and of receiver height.
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from crowdloc.channel import ChannelParams, generate_2d_dataset, split_indices
from crowdloc.io import load_scene, write_text
from crowdloc.pipeline import run_methods

SCENARIOS = {
    "gamma_3.5": {"gamma": 3.5},
    "noise_6": {"noise_sigma": 6.0},
    "height_1.5": {"height": 1.5},
}
METHODS = ["cdf-vc", "knn"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scene", default="scenes/floorplan1.json")
    ap.add_argument("--m", type=int, default=4000)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", default="results/generalization.csv")
    args = ap.parse_args()
    logging.getLogger("crowdloc").setLevel(logging.ERROR)

    scene = load_scene(args.scene)
    base = ChannelParams(noise_sigma=3.0, height=2.0)
    lines = ["scenario,cdf_same,cdf_shift,knn_same,knn_shift,cdf_factor,knn_factor"]
    for name, change in SCENARIOS.items():
        shifted = base.replace(**change)
        rows = []
        for seed in range(args.seeds):
            a = generate_2d_dataset(scene, base, args.m, seed)
            b = generate_2d_dataset(scene, shifted, args.m, seed)
            itr, ite = split_indices(args.m, 0.5, seed)
            same = run_methods(METHODS, a.subset(itr), a.subset(ite), scene, None, seed)
            other = run_methods(METHODS, a.subset(itr), b.subset(ite), scene, None, seed)
            rows.append([same["cdf-vc"].report.median, other["cdf-vc"].report.median,
                         same["knn"].report.median, other["knn"].report.median])
        cs, co, ks, ko = np.mean(rows, axis=0)
        lines.append(f"{name},{cs!r},{co!r},{ks!r},{ko!r},{co / cs!r},{ko / ks!r}")
        print(f"{name:11s} cdf-vc {cs:.2f}->{co:.2f} (x{co / cs:.2f})  knn {ks:.2f}->{ko:.2f} (x{ko / ks:.2f})")
    write_text(Path(args.out), "\n".join(lines) + "\n")


if __name__ == "__main__":
    main()

"""Median error of CDF-VC, LDPL and kNN as the shadowing strength varies."""

import argparse
import logging
from pathlib import Path

import numpy as np

from crowdloc.channel import ChannelParams, generate_2d_dataset
from crowdloc.io import load_scene, write_text
from crowdloc.pipeline import run_methods

METHODS = ["cdf-vc", "ldpl", "knn"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scene", default="scenes/floorplan1.json")
    ap.add_argument("--sigmas", default="0,1,2,4,6,10")
    ap.add_argument("--m", type=int, default=4000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--out", default="results/sigma_sweep.csv")
    args = ap.parse_args()
    logging.getLogger("crowdloc").setLevel(logging.ERROR)

    scene = load_scene(args.scene)
    lines = ["sigma_chi,cdf_vc,ldpl,knn,cdf_over_knn"]
    for sigma in (float(s) for s in args.sigmas.split(",")):
        params = ChannelParams(sigma_chi=sigma, noise_sigma=3.0, height=2.0)
        med = []
        for seed in range(args.seeds):
            train, test = generate_2d_dataset(scene, params, args.m, seed).split(0.5, seed)
            res = run_methods(METHODS, train, test, scene, None, seed)
            med.append([res[m].report.median for m in METHODS])
        c, l, k = np.mean(med, axis=0)
        lines.append(f"{sigma!r},{c!r},{l!r},{k!r},{c / k!r}")
        print(f"sigma {sigma:4.1f} dB  cdf-vc {c:.2f}  ldpl {l:.2f}  knn {k:.2f}  ratio {c / k:.2f}")
    write_text(Path(args.out), "\n".join(lines) + "\n")


if __name__ == "__main__":
    main()

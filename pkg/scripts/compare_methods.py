"""Median/quantile errors of every localization method on a scene, averaged over seeds."""

import argparse
import logging
from pathlib import Path

import numpy as np

from crowdloc.channel import ChannelParams, generate_2d_dataset
from crowdloc.io import load_scene, write_text
from crowdloc.pipeline import METHODS, SIDE_INFO_METHODS, run_methods

KEYS = ("median", "p67", "p90", "p95", "mean")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scene", default="scenes/floorplan1.json")
    ap.add_argument("--m", type=int, default=4000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--sigma", type=float, default=10.0, help="shadowing std (dB)")
    ap.add_argument("--noise", type=float, default=3.0)
    ap.add_argument("--height", type=float, default=2.0)
    ap.add_argument("--side-info", action="store_true", help="also run the side-information variants")
    ap.add_argument("--out", default="results/compare_methods.csv")
    args = ap.parse_args()
    logging.getLogger("crowdloc").setLevel(logging.ERROR)

    scene = load_scene(args.scene)
    params = ChannelParams(sigma_chi=args.sigma, noise_sigma=args.noise, height=args.height)
    methods = list(METHODS + (SIDE_INFO_METHODS if args.side_info else ()))
    acc = {m: [] for m in methods}
    for seed in range(args.seeds):
        train, test = generate_2d_dataset(scene, params, args.m, seed).split(0.5, seed)
        for name, res in run_methods(methods, train, test, scene, None, seed).items():
            s = res.report.summary()
            acc[name].append([s[k] for k in KEYS])
        print(f"seed {seed}: " + ", ".join(f"{m} {acc[m][-1][0]:.2f}" for m in methods))
    lines = ["method," + ",".join(KEYS)]
    for m in methods:
        lines.append(m + "," + ",".join(repr(float(v)) for v in np.mean(acc[m], axis=0)))
    print(write_text(Path(args.out), "\n".join(lines) + "\n"))
    print("\n".join(lines))


if __name__ == "__main__":
    main()

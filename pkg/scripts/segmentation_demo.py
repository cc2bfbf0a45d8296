#!/usr/bin/env python3
"""Segment a few phantom slices and write the intermediate images as PGM.

For each seed: the raw slice, smoothed slice, gradient, marker map and final
lung mask, plus the Dice score against the phantom's ground truth.
"""
import argparse
from pathlib import Path

import numpy as np

from lungpipe.imgio import GrayImage, generate_phantom, phantom_lung_mask, save_image, standard_phantom
from lungpipe.prep import median_filter
from lungpipe.segment import EXTERNAL, INTERNAL, dice, segment_details


def to_image(a: np.ndarray) -> GrayImage:
    a = a.astype(float)
    top = a.max()
    return GrayImage(np.floor(a * (65535 / top) + 0.5) if top > 0 else a)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--nodule", action="store_true")
    ap.add_argument("--out-dir", default="segmentation_out")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seed in args.seeds:
        spec = standard_phantom(seed, size=args.size, nodule=args.nodule)
        img, _ = generate_phantom(spec)
        smooth = median_filter(img)
        res = segment_details(smooth)
        markers = np.zeros(res.markers.shape)
        markers[res.markers == INTERNAL] = 2
        markers[res.markers == EXTERNAL] = 1
        stem = out / f"phantom{seed:03d}"
        save_image(img, f"{stem}_raw.pgm")
        save_image(smooth, f"{stem}_smooth.pgm")
        save_image(to_image(res.gradient), f"{stem}_gradient.pgm")
        save_image(to_image(markers), f"{stem}_markers.pgm")
        save_image(to_image(res.mask), f"{stem}_mask.pgm")
        print(f"seed {seed}: dice {dice(res.mask, phantom_lung_mask(spec)):.3f}")


if __name__ == "__main__":
    main()

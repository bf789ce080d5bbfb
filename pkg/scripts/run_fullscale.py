#!/usr/bin/env python3
"""Optional full-scale run: 28x28 images, chi=40, entanglement ordering with
post-selection at a ~10% compression ratio.

Not part of the test suite (hours of compute). Points at the real IDX files
via --images/--labels when available, otherwise uses the synthetic glyph
dataset. Reports the mean PSNR against the 20 +/- 3 dB operating target, the
full q-sparsity profile, and the fitted proportionality constant of the
sent-pixel estimate N_f ~ c * (N + log2 sparsity).
"""

import argparse
import time

import numpy as np

from tncs import TrainConfig, train
from tncs.data import (
    Dataset,
    downscale,
    filter_class,
    make_synthetic_class_dataset,
    read_idx,
    run_benchmark,
)
from tncs.metrics import benchmark_csv, fit_c
from tncs.sampling import qsparsity


def load(args, train_split):
    if args.images and args.labels:
        ds = filter_class(read_idx(args.images, args.labels), args.label)
        return ds if train_split else ds
    n = args.train_count if train_split else args.test_count
    seed = 100 if train_split else 999
    return make_synthetic_class_dataset(n, 28, 28, label=args.label, seed=seed)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--images", default=None)
    parser.add_argument("--labels", default=None)
    parser.add_argument("--test-images", default=None)
    parser.add_argument("--test-labels", default=None)
    parser.add_argument("--label", type=int, default=3)
    parser.add_argument("--chi", type=int, default=40)
    parser.add_argument("--downscale", type=int, default=1)
    parser.add_argument("--train-count", type=int, default=6000)
    parser.add_argument("--test-count", type=int, default=200)
    parser.add_argument("--sweeps", type=int, default=40)
    parser.add_argument("--tau", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", default="fullscale.csv")
    args = parser.parse_args()

    train_ds = load(args, train_split=True)
    if args.test_images and args.test_labels:
        test_ds = filter_class(read_idx(args.test_images, args.test_labels), args.label)
    else:
        test_ds = load(args, train_split=False)
    train_imgs = [downscale(im, args.downscale) for im in train_ds.images[: args.train_count]]
    test_imgs = [downscale(im, args.downscale) for im in test_ds.images[: args.test_count]]
    n = train_imgs[0].n_pixels
    print(f"training on {len(train_imgs)} images of {n} pixels, chi={args.chi}")

    t0 = time.time()
    cfg = TrainConfig(chi_max=args.chi, tau=args.tau, sweeps=args.sweeps,
                      batch=0, seed=args.seed, tol=1e-5)
    model, report = train(train_imgs, cfg)
    print(f"trained {report.sweeps_run} sweeps in {time.time() - t0:.0f}s, "
          f"final nll {report.final_nll:.4f}")

    t0 = time.time()
    sparsity = qsparsity(model)
    print(f"log2 q-sparsity = {sparsity.log2_value:.2f} "
          f"({time.time() - t0:.0f}s)")

    grid = sorted({max(1, round(n * r)) for r in (0.02, 0.04, 0.06, 0.08, 0.10)})
    test = Dataset(test_imgs, np.full(len(test_imgs), args.label))
    rows = run_benchmark(model, test, ["EO"], grid, "postselect", seed=args.seed)
    with open(args.csv, "w") as f:
        f.write(benchmark_csv(rows))
    for row in rows:
        print(f"  nf={row.nf:4d} (r={row.nf / n:.3f}) "
              f"psnr={row.psnr_mean:.2f}+/-{row.psnr_std:.2f}")

    target = next((r for r in rows if r.psnr_mean >= 20.0), rows[-1])
    print(f"operating point: nf={target.nf}, psnr={target.psnr_mean:.2f} "
          f"(target 20 +/- 3)")
    c = fit_c(n, sparsity.log2_value, target.nf)
    print(f"fitted c = {c:.2f} from nf={target.nf}, "
          f"N + log2(sparsity) = {n + sparsity.log2_value:.2f}")


if __name__ == "__main__":
    main()

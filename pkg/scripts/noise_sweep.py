#!/usr/bin/env python3
"""Measurement-noise robustness sweep on a synthetic cell.

Trains one estimator per noise condition (clean, additive Gaussian,
bounded sigmoid-of-sine) on the same data and prints a side-by-side
test-metric table.  Labels are never perturbed, so the comparison
isolates the effect of sensor noise on the learned estimate.
"""

import argparse
import pathlib
import sys

from cellgauge.data import assemble_recipe, default_manifest
from cellgauge.model import ArchSpec, build_model
from cellgauge.numerics import Rng
from cellgauge.synth import generate_dataset
from cellgauge.training import TrainConfig, evaluate, train


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-root", default="data")
    ap.add_argument("--dataset", default="synthA", choices=("synthA", "synthB"))
    ap.add_argument("--tw", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    root = pathlib.Path(args.data_root)
    if not (root / args.dataset).exists():
        generate_dataset(args.dataset, root, seed=11)

    manifest = default_manifest(args.dataset, root)
    spec = ArchSpec(t_w=args.tw)
    results = []
    for noise in ("none", "a", "b"):
        master = Rng(args.seed)
        recipe = assemble_recipe(manifest, 1.0, args.tw, noise,
                                 Rng(master.derive(0)))
        model = build_model(spec, Rng(master.derive(1)))
        config = TrainConfig(max_epochs=args.epochs, seed=args.seed)
        model, report = train(model, recipe.train, recipe.val, config,
                              rng=Rng(master.derive(2)))
        metrics = evaluate(model, recipe.test)
        mae, mx, mse = metrics.aggregate
        results.append((noise, report.best_epoch, mae, mx))
        print(f"[{noise:>4}] best epoch {report.best_epoch:3d}  "
              f"MAE {mae:5.2f}%  MAX {mx:5.2f}%", flush=True)

    print()
    print(f"{'noise':>6} {'epochs':>7} {'MAE%':>7} {'MAX%':>7}")
    for noise, epochs, mae, mx in results:
        print(f"{noise:>6} {epochs:>7d} {mae:>7.2f} {mx:>7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

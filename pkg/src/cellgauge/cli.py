"""Command-line entry point: synth / train / transfer / eval.

One binary with subcommands so config resolution and run manifests are
shared.  Every run writes a plain-text key=value manifest with the full
resolved configuration, the seed, and SHA-256 hashes of the artifacts it
produced — enough to reproduce the run exactly.  All randomness flows from
--seed through derived per-component streams; nothing draws from ambient
entropy.

Exit codes: 0 success, 2 usage/validation error, 3 missing cycle files,
4 non-finite training loss, 5 architecture mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from .data import (DATASET_KINDS, NOISE_KINDS, MissingCyclesError, assemble_recipe,
                   default_manifest, parse_manifest)
from .model import (ARCH_KINDS, ArchSpec, ModelFormatError, SpecMismatchError,
                    build_model, load_model, save_model)
from .numerics import Rng
from .synth import PRESETS, generate_dataset
from .training import (NonFiniteLossError, TrainConfig, evaluate, train,
                       transfer_init)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_CYCLES = 3
EXIT_NONFINITE_LOSS = 4
EXIT_SPEC_MISMATCH = 5

# Stream indices off the master seed, one per component that draws.
_RECIPE_STREAM = 10
_INIT_STREAM = 11
_TRAIN_STREAM = 12


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_run_manifest(out_dir: Path, command: str, resolved: dict, artifacts) -> Path:
    lines = [f"command={command}"]
    lines += [f"{k}={v}" for k, v in sorted(resolved.items())]
    for p in artifacts:
        lines.append(f"artifact.{Path(p).name}.sha256={_sha256(Path(p))}")
    path = out_dir / "run_manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _resolve_manifest(args):
    if getattr(args, "manifest", None):
        return parse_manifest(args.manifest)
    return default_manifest(args.dataset, args.data_root)


def _arch_spec(args, t_w=None) -> ArchSpec:
    return ArchSpec(arch_kind=args.arch, conv_layers=args.conv_layers,
                    t_w=args.tw if t_w is None else t_w)


def _train_config(args, freeze_policy="none") -> TrainConfig:
    return TrainConfig(batch_size=args.batch_size, max_epochs=args.epochs,
                       patience=args.patience, learning_rate=args.lr,
                       seed=args.seed, freeze_policy=freeze_policy)


def _progress_printer(epoch, train_mse, val_mse, seconds):
    print(f"epoch {epoch:3d}  train_mse {train_mse:.3e}  val_mse {val_mse:.3e}  "
          f"{seconds:.1f}s", flush=True)


def _common_run_fields(args, manifest):
    return {
        "dataset": manifest.dataset,
        "data_root": manifest.root,
        "capacity_ah": manifest.capacity_ah,
        "current_sign": manifest.current_sign,
        "sampling_hz": args.hz,
        "noise": args.noise,
        "seed": args.seed,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = generate_dataset(args.dataset, args.data_root,
                               duration_s=args.duration_s, seed=args.seed)
    print(f"wrote {len(written)} cycle files under "
          f"{Path(args.data_root) / args.dataset}")
    resolved = {"dataset": args.dataset, "data_root": args.data_root,
                "duration_s": args.duration_s, "seed": args.seed}
    _write_run_manifest(out_dir, "synth", resolved, written)
    return EXIT_OK


def _fit_and_save(args, spec, model, recipe, config, train_rng, out_dir, command,
                  extra_fields):
    model, report = train(model, recipe.train, recipe.val, config,
                          rng=train_rng, progress=_progress_printer)
    model.norm_stats = recipe.stats
    model_path = out_dir / "model.cgm"
    save_model(model, model_path)
    report_path = out_dir / "train_report.csv"
    header = {"command": command, "noise": args.noise, "dataset": args.dataset,
              "sampling_hz": args.hz, "t_w": spec.t_w, "arch": spec.arch_kind,
              "conv_layers": spec.conv_layers}
    header.update(extra_fields)
    report.to_csv(report_path, extra_header=header)
    print(f"best epoch {report.best_epoch}  best val_mse {report.best_val_mse:.3e}")
    print(f"model: {model_path}")
    return model_path, report_path


def cmd_train(args) -> int:
    spec = _arch_spec(args)
    manifest = _resolve_manifest(args)
    config = _train_config(args)
    master = Rng(args.seed)
    recipe = assemble_recipe(manifest, args.hz, spec.t_w, args.noise,
                             Rng(master.derive(_RECIPE_STREAM)))
    model = build_model(spec, Rng(master.derive(_INIT_STREAM)))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path, report_path = _fit_and_save(
        args, spec, model, recipe, config, Rng(master.derive(_TRAIN_STREAM)),
        out_dir, "train", {})
    resolved = _common_run_fields(args, manifest)
    resolved.update(t_w=spec.t_w, arch=spec.arch_kind, conv_layers=spec.conv_layers,
                    batch_size=config.batch_size, epochs=config.max_epochs,
                    patience=config.patience, learning_rate=config.learning_rate)
    _write_run_manifest(out_dir, "train", resolved, [model_path, report_path])
    return EXIT_OK


def cmd_transfer(args) -> int:
    spec = _arch_spec(args)
    manifest = _resolve_manifest(args)
    config = _train_config(args, freeze_policy="dense-frozen")
    source = load_model(args.source_model)
    model = transfer_init(spec, source)
    master = Rng(args.seed)
    recipe = assemble_recipe(manifest, args.hz, spec.t_w, args.noise,
                             Rng(master.derive(_RECIPE_STREAM)),
                             train_keep_prob=args.keep_prob)
    if recipe.train_kept is not None:
        kept = ", ".join(f"{c}@{t:g}C" for c, t in recipe.train_kept)
        print(f"subsampled training cycles (keep_prob={args.keep_prob}, "
              f"retries={recipe.subsample_retries}): {kept}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path, report_path = _fit_and_save(
        args, spec, model, recipe, config, Rng(master.derive(_TRAIN_STREAM)),
        out_dir, "transfer", {"source_model": args.source_model,
                              "keep_prob": args.keep_prob})
    resolved = _common_run_fields(args, manifest)
    resolved.update(t_w=spec.t_w, arch=spec.arch_kind, conv_layers=spec.conv_layers,
                    batch_size=config.batch_size, epochs=config.max_epochs,
                    patience=config.patience, learning_rate=config.learning_rate,
                    source_model=args.source_model, keep_prob=args.keep_prob,
                    freeze_policy=config.freeze_policy)
    if recipe.train_kept is not None:
        resolved["train_kept"] = ";".join(f"{c}@{t:g}" for c, t in recipe.train_kept)
        resolved["subsample_retries"] = recipe.subsample_retries
    _write_run_manifest(out_dir, "transfer", resolved, [model_path, report_path])
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    if args.tw is not None and args.tw != model.spec.t_w:
        raise SpecMismatchError(f"--tw {args.tw} conflicts with the model's "
                                f"t_w={model.spec.t_w}")
    if model.norm_stats is None:
        raise ValueError(f"{args.model}: model carries no normalization stats; "
                         "cannot evaluate raw cycles")
    manifest = _resolve_manifest(args)
    master = Rng(args.seed)
    recipe = assemble_recipe(manifest, args.hz, model.spec.t_w, args.noise,
                             Rng(master.derive(_RECIPE_STREAM)),
                             parts=("test",), stats=model.norm_stats)
    report = evaluate(model, recipe.test)
    text = report.to_csv_text()
    sys.stdout.write(text)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.csv"
    metrics_path.write_text(text)
    resolved = _common_run_fields(args, manifest)
    resolved.update(model=args.model, t_w=model.spec.t_w)
    _write_run_manifest(out_dir, "eval", resolved, [metrics_path])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellgauge",
        description="Windowed CNN state-of-charge estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p, datasets):
        p.add_argument("--dataset", choices=datasets, required=True)
        p.add_argument("--data-root", default="data", help="dataset root directory")
        p.add_argument("--manifest", default=None,
                       help="dataset manifest file overriding the built-in recipe")
        p.add_argument("--hz", type=float, default=1.0,
                       help="sampling rate after decimation (default 1)")
        p.add_argument("--noise", choices=NOISE_KINDS, default="none")

    def add_train_flags(p):
        p.add_argument("--tw", type=int, default=500, help="window size (default 500)")
        p.add_argument("--arch", choices=ARCH_KINDS, default="dense-first")
        p.add_argument("--conv-layers", type=int, choices=(1, 2), default=2)
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--batch-size", type=int, default=128)
        p.add_argument("--patience", type=int, default=10)
        p.add_argument("--lr", type=float, default=1e-3)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--dataset", choices=tuple(PRESETS), default="synthA")
    p.add_argument("--data-root", default="data")
    p.add_argument("--duration-s", type=float, default=3600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="runs/synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model from scratch")
    add_data_flags(p, DATASET_KINDS)
    add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="runs/train")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="fine-tune a trained model on another cell")
    add_data_flags(p, DATASET_KINDS)
    add_train_flags(p)
    p.add_argument("--source-model", required=True)
    p.add_argument("--keep-prob", type=float, default=None,
                   help="keep each training cycle with this probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="runs/transfer")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("eval", help="evaluate a saved model on a test split")
    add_data_flags(p, DATASET_KINDS)
    p.add_argument("--model", required=True)
    p.add_argument("--tw", type=int, default=None,
                   help="must match the model's window size when given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="runs/eval")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingCyclesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_CYCLES
    except NonFiniteLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE_LOSS
    except SpecMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC_MISMATCH
    except (ValueError, ModelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

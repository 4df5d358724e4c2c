"""Command-line pipelines: synth, train, trials, score, eval, gradcheck.

Every subcommand writes a JSON manifest next to its outputs recording the
resolved arguments and seeds, so a run can be reproduced byte-for-byte.
Exit codes: 0 success, 1 domain error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import evaluation, synth
from .alignment import Corpus, load_inventory, parse_alignment, write_alignment
from .embeddings import score_trials_embedding
from .errors import DurasvError
from .metric import score_trials_metric
from .model import ModelConfig, gradient_check, tiny_gradcheck_config
from .model_io import load_model, save_model
from .training import TrainConfig, train

try:
    TOOL_VERSION = version("durasv")
except PackageNotFoundError:  # running from a source tree
    TOOL_VERSION = "0.0.0+source"


def _write_manifest(out_path: Path, subcommand: str, resolved: dict) -> None:
    manifest = {
        "subcommand": subcommand,
        "tool_version": TOOL_VERSION,
        "resolved": resolved,
    }
    target = out_path / f"{subcommand}.manifest.json" if out_path.is_dir() else Path(
        str(out_path) + ".manifest.json"
    )
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_corpus(align_path: str, inventory_path: str, exclude: list[str]) -> Corpus:
    with open(inventory_path, "r", encoding="utf-8") as handle:
        inventory = load_inventory(handle)
    with open(align_path, "r", encoding="utf-8") as handle:
        return parse_alignment(handle, inventory, exclude)


def cmd_synth(args: argparse.Namespace) -> int:
    config = synth.SynthConfig.from_json_file(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng([config.seed, 0])
    profiles = synth.sample_speakers(config, rng)
    corpus = synth.generate_corpus(profiles, config, np.random.default_rng([config.seed, 1]))

    align_path = out_dir / "alignment.txt"
    inventory_path = out_dir / "inventory.txt"
    profiles_path = out_dir / "profiles.json"
    with open(align_path, "w", encoding="utf-8") as sink:
        write_alignment(corpus, sink)
    inventory_path.write_text("\n".join(corpus.inventory.symbols) + "\n")
    with open(profiles_path, "w", encoding="utf-8") as sink:
        synth.write_profiles(profiles, sink)
    _write_manifest(
        out_dir,
        "synth",
        {
            "config": args.config,
            "seed": config.seed,
            "n_speakers": config.n_speakers,
            "utts_per_speaker": config.utts_per_speaker,
            "n_classes": config.n_classes,
            "sigma_speaker": config.sigma_speaker,
            "sigma_token": config.sigma_token,
            "outputs": [str(align_path), str(inventory_path), str(profiles_path)],
        },
    )
    print(f"wrote {len(corpus)} utterances for {config.n_speakers} speakers to {out_dir}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.align, args.inventory, args.exclude)
    config = ModelConfig(
        n_classes=corpus.inventory.size,
        n_speakers=len(corpus.by_speaker),
        proj_dim=args.proj_dim,
        encoder_channels=args.channels,
        n_blocks=args.blocks,
        dilations=tuple(args.dilations),
        kernel_width=args.kernel_width,
        embed_dim=args.embed_dim,
        attention_hidden=args.attention_hidden,
    )
    hyper = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
        chunk_min=args.chunk_min,
        chunk_max=args.chunk_max,
    )
    result = train(corpus, config, hyper)
    out_path = Path(args.out)
    save_model(result.params, out_path)

    log_path = Path(args.log) if args.log else Path(str(out_path) + ".log")
    log_lines = [
        f"epoch {i + 1} mean_loss {loss!r}" for i, loss in enumerate(result.epoch_losses)
    ]
    log_path.write_text("\n".join(log_lines) + ("\n" if log_lines else ""))

    _write_manifest(
        out_path,
        "train",
        {
            "align": args.align,
            "inventory": args.inventory,
            "exclude": args.exclude,
            "seed": args.seed,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.lr,
            "chunk_min": args.chunk_min,
            "chunk_max": args.chunk_max,
            "model_config": {
                "n_classes": config.n_classes,
                "n_speakers": config.n_speakers,
                "proj_dim": config.proj_dim,
                "encoder_channels": config.encoder_channels,
                "n_blocks": config.n_blocks,
                "dilations": list(config.dilations),
                "kernel_width": config.kernel_width,
                "embed_dim": config.embed_dim,
                "attention_hidden": config.attention_hidden,
            },
            "outputs": [str(out_path), str(log_path)],
        },
    )
    first = result.epoch_losses[0] if result.epoch_losses else float("nan")
    last = result.epoch_losses[-1] if result.epoch_losses else float("nan")
    print(f"trained {args.epochs} epochs, loss {first:.4f} -> {last:.4f}, model {out_path}")
    return 0


def cmd_trials(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.align, args.inventory, args.exclude)
    trial_list = evaluation.build_trials(
        corpus, args.n_enroll, args.n_trial, args.seed, args.max_nontarget
    )
    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8") as sink:
        evaluation.write_trials(trial_list, sink)
    _write_manifest(
        out_path,
        "trials",
        {
            "align": args.align,
            "inventory": args.inventory,
            "exclude": args.exclude,
            "n_enroll": args.n_enroll,
            "n_trial": args.n_trial,
            "seed": args.seed,
            "max_nontarget": args.max_nontarget,
            "outputs": [str(out_path)],
        },
    )
    n_target = sum(1 for t in trial_list.trials if t.is_target)
    print(
        f"wrote {len(trial_list.trials)} trials ({n_target} target) to {out_path}; "
        f"skipped {len(trial_list.skipped_speakers)} speaker(s)"
    )
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.align, args.inventory, args.exclude)
    with open(args.trials, "r", encoding="utf-8") as handle:
        trial_list = evaluation.read_trials(handle)
    if args.model == "metric":
        scores = score_trials_metric(corpus, trial_list)
    else:
        params = load_model(args.model)
        scores = score_trials_embedding(params, corpus, trial_list)
    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8") as sink:
        evaluation.write_scores(scores, sink)
    _write_manifest(
        out_path,
        "score",
        {
            "align": args.align,
            "inventory": args.inventory,
            "exclude": args.exclude,
            "trials": args.trials,
            "model": args.model,
            "outputs": [str(out_path)],
        },
    )
    print(f"wrote {scores.scores.size} scores ({scores.polarity}) to {out_path}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cells = []
    for score_path in args.scores:
        with open(score_path, "r", encoding="utf-8") as handle:
            scores = evaluation.read_scores(handle)
        condition = Path(score_path).stem
        cells.append((condition, scores.model or "unknown", scores))
    table = evaluation.evaluate(cells)
    out_path = Path(args.out)
    out_path.write_text(table.to_json() + "\n")
    _write_manifest(
        out_path,
        "eval",
        {"scores": list(args.scores), "outputs": [str(out_path)]},
    )
    print(table.render())
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    config = tiny_gradcheck_config()
    report = gradient_check(
        config,
        seed=args.seed,
        n_draws=args.draws,
        corrupt=args.corrupt_gradient,
    )
    status = "PASS" if report.passed else "FAIL"
    print(
        f"gradcheck {status}: max relative error {report.max_rel_error:.3e} "
        f"(mean {report.mean_rel_error:.3e}) over {report.n_draws} draws "
        f"of {report.n_parameters} parameters"
    )
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="durasv",
        description="Speaker verification attacks on phoneme duration dynamics.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic alignment corpus")
    p.add_argument("--config", required=True, help="JSON synthesis config")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the duration embedding model")
    p.add_argument("--align", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--exclude", action="append", default=[], metavar="LABEL")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--log", default=None, help="training log path")
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--proj-dim", type=int, default=128)
    p.add_argument("--channels", type=int, default=128)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--dilations", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--kernel-width", type=int, default=3)
    p.add_argument("--embed-dim", type=int, default=128)
    p.add_argument("--attention-hidden", type=int, default=64)
    p.add_argument("--chunk-min", type=int, default=32)
    p.add_argument("--chunk-max", type=int, default=256)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("trials", help="build verification trials")
    p.add_argument("--align", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--exclude", action="append", default=[], metavar="LABEL")
    p.add_argument("--n-enroll", type=int, required=True)
    p.add_argument("--n-trial", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-nontarget", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("score", help="score trials with an attack model")
    p.add_argument("--align", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--exclude", action="append", default=[], metavar="LABEL")
    p.add_argument("--trials", required=True)
    p.add_argument(
        "--model",
        required=True,
        help='"metric" for the training-free ratio metric, or a model file path',
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="aggregate score files into an EER report")
    p.add_argument("scores", nargs="+", help="score files")
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=20)
    p.add_argument(
        "--corrupt-gradient",
        action="store_true",
        help="debug switch that biases one gradient tensor; the check must fail",
    )
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DurasvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

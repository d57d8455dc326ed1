"""Command-line entry point: train, evaluate, sweep, landscape, centers, run-all."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .harness import ExperimentConfig
from .heads import HeadKind
from .nncore import load_checkpoint


def _load_config(args) -> ExperimentConfig:
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        cfg = ExperimentConfig.from_dict(raw)
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "head", None):
        cfg.head = HeadKind(args.head)
    if args.out is not None:
        cfg.out_dir = args.out
    if cfg.out_dir is None:
        cfg.out_dir = "out"
    cfg.validate()
    return cfg


def _require_head(cfg: ExperimentConfig) -> HeadKind:
    if cfg.head is None:
        raise ValueError("this command needs a head; pass --head or set it in the config")
    return cfg.head


def _head_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out_dir) / _require_head(cfg).value


def _load_model(args, cfg: ExperimentConfig):
    ckpt = args.checkpoint or _head_dir(cfg) / "checkpoint.json"
    params, head_str, _ = load_checkpoint(ckpt)
    head = HeadKind(head_str)
    if cfg.head is not None and head is not cfg.head:
        raise ValueError(f"checkpoint holds head '{head.value}', expected '{cfg.head.value}'")
    return params, head


def cmd_train(args) -> int:
    cfg = _load_config(args)
    head = _require_head(cfg)
    result = harness.train(cfg, out_dir=_head_dir(cfg))
    print(f"trained head '{head.value}' for {cfg.optim.steps} steps; "
          f"final train accuracy {result.final_accuracy:.4f}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    params, head = _load_model(args, cfg)
    _, test_d, ood_points = harness.make_datasets(cfg)
    result = harness.evaluate(params, head, test_d, ood_points, cfg,
                              out_dir=Path(cfg.out_dir) / head.value)
    summary = result.summary
    line = f"head '{head.value}': accuracy {summary['accuracy']:.4f}, ece {summary['ece']:.4f}"
    if "auroc" in summary:
        line += f", auroc {summary['auroc']:.4f}, auprc {summary['auprc']:.4f}"
    print(line)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    params, head = _load_model(args, cfg)
    _, test_d, _ = harness.make_datasets(cfg)
    result = harness.shift_sweep(params, head, test_d, cfg,
                                 out_dir=Path(cfg.out_dir) / head.value)
    for row in result.rows:
        print(f"{row.kind:>14} intensity {row.intensity}: "
              f"accuracy {row.accuracy:.4f}, ece {row.ece:.4f}")
    return 0


def cmd_landscape(args) -> int:
    cfg = _load_config(args)
    params, head = _load_model(args, cfg)
    grid = harness.landscape(params, head, cfg)
    head_dir = Path(cfg.out_dir) / head.value
    head_dir.mkdir(parents=True, exist_ok=True)
    harness.write_landscape_csv(head_dir / "landscape.csv", grid)
    if cfg.landscape.write_pgm:
        harness.write_landscape_pgm(head_dir / "landscape.pgm", grid)
    print(f"landscape written for head '{head.value}' "
          f"({cfg.landscape.resolution}x{cfg.landscape.resolution} grid)")
    return 0


def cmd_centers(args) -> int:
    cfg = _load_config(args)
    params, head = _load_model(args, cfg)
    train_d, _, _ = harness.make_datasets(cfg)
    report = harness.centers_report(params, head, train_d)
    head_dir = Path(cfg.out_dir) / head.value
    head_dir.mkdir(parents=True, exist_ok=True)
    harness.write_centers_csv(head_dir / "centers.csv", report)
    mean_err = float(report.alignment_errors.mean())
    print(f"centers report written for head '{head.value}'; "
          f"mean alignment error {mean_err:.4f}")
    return 0


def cmd_run_all(args) -> int:
    cfg = _load_config(args)
    outcome = harness.run_all(cfg, cfg.out_dir)
    for head, stages in outcome.manifest["stages"].items():
        status = ", ".join(f"{stage}={state}" for stage, state in stages.items())
        print(f"{head}: {status}")
    print(f"artifacts in {outcome.out_dir}")
    return 0 if outcome.ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ovabench",
        description="Train and compare softmax / one-vs-all probability heads "
                    "on a synthetic 2D task")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="experiment seed")
    common.add_argument("--out", default=None,
                        help="output directory (default: config out_dir or ./out)")
    common.add_argument("--head", choices=[h.value for h in HeadKind],
                        help="which probability head to use")
    common.add_argument("--checkpoint", help="explicit checkpoint path "
                                             "(default: <out>/<head>/checkpoint.json)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common]).set_defaults(fn=cmd_train)
    sub.add_parser("evaluate", parents=[common]).set_defaults(fn=cmd_evaluate)
    sub.add_parser("sweep", parents=[common]).set_defaults(fn=cmd_sweep)
    sub.add_parser("landscape", parents=[common]).set_defaults(fn=cmd_landscape)
    sub.add_parser("centers", parents=[common]).set_defaults(fn=cmd_centers)
    sub.add_parser("run-all", parents=[common]).set_defaults(fn=cmd_run_all)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, harness.TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

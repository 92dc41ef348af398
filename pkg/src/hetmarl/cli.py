"""Experiment front door.

Subcommands: train, evaluate, sweep, vector-field, rollout,
inspect-checkpoint.  Every run writes its outputs (delimited data plus
rendered figures) and a resolved-config snapshot under the output
directory.  Exit status 0 means all requested outputs were written.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, figures
from .envs import default_spec, make_env
from .evaluation import EvalConfigError
from .experiment import (
    ConfigParseError,
    ExperimentConfig,
    parse_config,
    write_resolved_config,
)
from .nn.checkpoint import CheckpointError, load_checkpoint
from .training.config import TrainConfig, apply_profile
from .training.trainer import Trainer


def parse_levels(text: str) -> list[float]:
    """``a:b:n`` -> n evenly spaced values from a to b inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"levels must be a:b:n, got {text!r}")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("levels count must be >= 1")
    return [a] if n == 1 else list(np.linspace(a, b, n))


def _load_experiment(args, need_config=False) -> ExperimentConfig | None:
    if args.config is None:
        if need_config:
            raise ConfigParseError("--config is required for this subcommand")
        return None
    cfg = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg, seed=args.seed,
            train=dataclasses.replace(cfg.train, seed=args.seed))
    if getattr(args, "profile", None):
        cfg = dataclasses.replace(cfg, train=apply_profile(cfg.train, args.profile))
    if getattr(args, "out", None):
        cfg = dataclasses.replace(cfg, io=dataclasses.replace(cfg.io,
                                                              output_dir=args.out))
    return cfg


def _out_dir(args, cfg: ExperimentConfig | None) -> Path:
    if getattr(args, "out", None):
        d = Path(args.out)
    elif cfg is not None:
        d = Path(cfg.io.output_dir)
    else:
        d = Path("runs/out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_model(args, cfg: ExperimentConfig | None):
    model, manifest = load_checkpoint(args.checkpoint)
    if cfg is not None:
        spec, physics = cfg.spec, cfg.physics
    else:
        spec = default_spec(manifest["scenario_id"])
        physics = None
    return model, manifest, spec, physics


# ------------------------------------------------------------- subcommands

def cmd_train(args) -> int:
    cfg = _load_experiment(args, need_config=True)
    out = _out_dir(args, cfg)
    write_resolved_config(cfg, out / "config.resolved.cfg")
    train_cfg = dataclasses.replace(cfg.train,
                                    checkpoint_every=cfg.io.checkpoint_every)
    trainer = Trainer(cfg.spec, train_cfg, out, model_cfg=cfg.model,
                      physics=cfg.physics)
    trainer.run()
    figures.plot_training_curves(trainer.metrics_path, out / "training.png")
    print(f"trained {len(trainer.history)} iterations -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_experiment(args)
    model, manifest, spec, physics = _load_model(args, cfg)
    out = _out_dir(args, cfg)
    runs = args.runs if args.runs is not None else (cfg.eval.runs if cfg else 10)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    use_mean = cfg.eval.use_mean if cfg else True
    summary = evaluation.evaluate(model, spec, runs, args.noise, seed=seed,
                                  use_mean=use_mean, manifest=manifest,
                                  physics=physics)
    path = out / "evaluation.json"
    path.write_text(json.dumps(dataclasses.asdict(summary), indent=2) + "\n")
    print(json.dumps(dataclasses.asdict(summary)))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_experiment(args)
    model, manifest, spec, physics = _load_model(args, cfg)
    out = _out_dir(args, cfg)
    levels = parse_levels(args.levels) if args.levels else \
        list(cfg.eval.noise_levels if cfg else [0.0, 0.5, 1.0])
    runs = args.runs if args.runs is not None else (cfg.eval.runs if cfg else 10)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    use_mean = cfg.eval.use_mean if cfg else True
    result = evaluation.noise_sweep(model, spec, levels, runs, seed=seed,
                                    use_mean=use_mean, anchor=args.anchor,
                                    manifest=manifest, physics=physics)
    result.write_csv(out / "noise_sweep.csv")
    figures.plot_noise_sweep(result, out / "noise_sweep.png")
    print(f"sweep over {len(levels)} levels x {runs} runs -> {out}/noise_sweep.csv")
    return 0


def cmd_vector_field(args) -> int:
    cfg = _load_experiment(args)
    model, manifest, spec, physics = _load_model(args, cfg)
    out = _out_dir(args, cfg)
    gmin = cfg.eval.grid_min if cfg else -1.0
    gmax = cfg.eval.grid_max if cfg else 1.0
    res = cfg.eval.grid_resolution if cfg else 21
    table = evaluation.vector_field(model, spec, gmin, gmax, res,
                                    manifest=manifest)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    trace = evaluation.rollout_trace(model, spec, seed=seed, noise=args.noise,
                                     manifest=manifest, physics=physics)
    table.write_csv(out / "vector_field.csv")
    figures.plot_vector_field(table, out / "vector_field.png", trace=trace)
    print(f"vector field {res}x{res} -> {out}/vector_field.csv")
    return 0


def cmd_rollout(args) -> int:
    cfg = _load_experiment(args)
    model, manifest, spec, physics = _load_model(args, cfg)
    out = _out_dir(args, cfg)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    trace = evaluation.rollout_trace(model, spec, seed=seed, noise=args.noise,
                                     manifest=manifest, physics=physics)
    trace.write_jsonl(out / "rollout.jsonl")
    env = make_env(spec, physics=physics, batch_size=1)
    goals = getattr(env, "goals", None)
    statics = getattr(env, "statics", None)
    figures.plot_trace(trace, out / "rollout.png", statics=statics, goals=goals)
    print(f"trace of {len(trace.records)} steps (success={trace.success}) "
          f"-> {out}/rollout.jsonl")
    return 0


def cmd_inspect_checkpoint(args) -> int:
    _, manifest = load_checkpoint(args.checkpoint)
    slim = {k: v for k, v in manifest.items() if k not in ("rng_state", "tensors")}
    slim["n_tensors"] = len(manifest["tensors"])
    slim["n_parameters"] = int(sum(int(np.prod(t["shape"] or [1]))
                                   for t in manifest["tensors"]))
    print(json.dumps(slim, indent=2, sort_keys=True))
    return 0


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetmarl",
                                description="heterogeneous MARL workbench")
    sub = p.add_subparsers(dest="command")

    def common(sp, checkpoint=False):
        sp.add_argument("--config", default=None, help="experiment config file")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--out", default=None, help="output directory")
        if checkpoint:
            sp.add_argument("--checkpoint", required=True)

    sp = sub.add_parser("train", help="train a model")
    common(sp)
    sp.add_argument("--profile", choices=("desk", "paper"), default=None)
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("evaluate", help="evaluate a checkpoint")
    common(sp, checkpoint=True)
    sp.add_argument("--runs", type=int, default=None)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("sweep", help="deployment noise sweep")
    common(sp, checkpoint=True)
    sp.add_argument("--levels", default=None, help="a:b:n inclusive range")
    sp.add_argument("--runs", type=int, default=None)
    sp.add_argument("--anchor", type=float, default=None,
                    help="normalization anchor (defaults to own noise-0 mean)")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("vector-field", help="policy vector field (Scenario A)")
    common(sp, checkpoint=True)
    sp.add_argument("--noise", type=float, default=0.0,
                    help="noise for the overlaid rollout")
    sp.set_defaults(fn=cmd_vector_field)

    sp = sub.add_parser("rollout", help="trace one episode")
    common(sp, checkpoint=True)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.set_defaults(fn=cmd_rollout)

    sp = sub.add_parser("inspect-checkpoint", help="print checkpoint manifest")
    sp.add_argument("--checkpoint", required=True)
    sp.set_defaults(fn=cmd_inspect_checkpoint)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (ConfigParseError, CheckpointError, EvalConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

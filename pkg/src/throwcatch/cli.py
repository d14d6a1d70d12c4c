"""Command-line entry point: train, eval, sweep-alpha, sweep-noise, verify."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from throwcatch.config import AlphaSchedule, RunConfig, config_from_dict, dump_config, parse_config
from throwcatch.errors import CheckpointError, ConfigError, DimensionError, DivergenceError, NonFiniteError

log = logging.getLogger("throwcatch")

# checkpoint file names expected inside a sweep directory
ALPHA_FILES = {"1.0": "alpha_1.0.bin", "0.9": "alpha_0.9.bin", "0.8": "alpha_0.8.bin", "0.7": "alpha_0.7.bin",
               "0.6": "alpha_0.6.bin", "0.5": "alpha_0.5.bin", "decay": "alpha_decay.bin"}
METHOD_FILES = {"SA": "sa.bin", "HA-fixed": "ha_fixed.bin", "HA-decay": "ha_decay.bin"}


def _env_int(name: str):
    value = os.environ.get(name)
    return int(value) if value not in (None, "") else None


def build_run_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    data = cfg.to_dict()
    if args.mode:
        data["mode"] = args.mode
    seed = args.seed if args.seed is not None else _env_int("SEED")
    if seed is not None:
        data["seed"] = seed
    out = args.out or os.environ.get("OUT_DIR")
    if out:
        data["output_dir"] = out
    if args.iterations is not None:
        data["iterations"] = args.iterations
    if args.alpha is not None:
        data["reward"]["alpha"] = args.alpha
    if args.alpha_schedule == "fixed":
        a = data["reward"]["alpha"]
        data["alpha_schedule"] = AlphaSchedule(mode="fixed", alpha_start=a, alpha_end=a).model_dump()
    elif args.alpha_schedule == "decay":
        data["alpha_schedule"] = AlphaSchedule(mode="decay", alpha_start=1.0, alpha_end=data["reward"]["alpha"],
                                               total_iters=max(data["iterations"], 1)).model_dump()
    return config_from_dict(data)


def cmd_train(args) -> int:
    from throwcatch.harl.train import train

    cfg = build_run_config(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(cfg))
    log.info("training %s for %d iterations into %s", cfg.mode, cfg.iterations, out)
    trainer = train(cfg, output_dir=out, resume_from=args.resume)
    if trainer.history:
        last = trainer.history[-1]
        print(f"iteration {last['iteration']}: mean_r_catch={last['mean_r_catch']:.3f} "
              f"failure_rate={last['failure_rate']:.3f}")
    print(f"checkpoints in {out / 'checkpoints'}")
    return 0


def _eval_config(args, scale=None):
    from throwcatch.evaluation import EvalConfig

    seed = args.seed if args.seed is not None else (_env_int("SEED") or 0)
    return EvalConfig(episodes=args.episodes, noise_scale=scale if scale is not None else args.noise_scale,
                      seed=seed, per_object=getattr(args, "per_object", False))


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("OUT_DIR")
    if not out:
        raise ConfigError("out", "an output directory is required (--out or OUT_DIR)")
    return Path(out)


def cmd_eval(args) -> int:
    from throwcatch import evaluation as ev

    cfg = _eval_config(args)
    catcher, run_cfg = ev.load_catcher(args.checkpoint)
    result = ev.run_eval(catcher, cfg, run_cfg)
    summary = ev.summarize_box_stats(result.rewards)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    ev.write_episodes_csv(out / "episodes.csv", result)
    row = ev.SweepRow(Path(args.checkpoint).stem, "", cfg.noise_scale, summary, result)
    ev.write_summary_csv(out / "summary.csv", [row])
    if result.per_object is not None:
        ev.write_per_object_csv(out / "per_object.csv", result.per_object)
    print(f"n={summary.n} mean={summary.mean:.3f} median={summary.median:.3f} "
          f"q25={summary.q25:.3f} q75={summary.q75:.3f}")
    return 0


def _keyed(directory, files: dict) -> dict:
    d = Path(directory)
    if not d.is_dir():
        raise CheckpointError(f"{d}: not a directory")
    return {key: d / name for key, name in files.items() if (d / name).exists()}


def cmd_sweep_alpha(args) -> int:
    from throwcatch import evaluation as ev

    rows = ev.sweep_alpha(_keyed(args.checkpoints, ALPHA_FILES), _eval_config(args))
    path = ev.write_sweep(_out_dir(args), rows, "alpha_sweep")
    absent = [r.alpha for r in rows if r.summary is None]
    if absent:
        log.warning("no checkpoint for alpha %s", ", ".join(absent))
    print(f"wrote {path}")
    return 0


def cmd_sweep_noise(args) -> int:
    from throwcatch import evaluation as ev

    scales = tuple(float(s) for s in args.scales.split(",") if s.strip())
    rows = ev.sweep_noise(_keyed(args.checkpoints, METHOD_FILES), _eval_config(args, scales[0]), scales)
    path = ev.write_sweep(_out_dir(args), rows, "noise_sweep")
    print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    from throwcatch.verify import run_checks

    results = run_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="throwcatch", description="Throw-catch multi-agent training and evaluation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train SA or HARL agents")
    t.add_argument("--config", help="YAML run config (defaults when omitted)")
    t.add_argument("--mode", choices=("sa", "harl"))
    t.add_argument("--alpha", type=float)
    t.add_argument("--alpha-schedule", choices=("fixed", "decay"))
    t.add_argument("--seed", type=int)
    t.add_argument("--out")
    t.add_argument("--iterations", type=int)
    t.add_argument("--resume", help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a catcher checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--episodes", type=int, default=1000)
    e.add_argument("--noise-scale", type=float, default=1.0)
    e.add_argument("--per-object", action="store_true")
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("sweep-alpha", help="evaluate one checkpoint per alpha")
    a.add_argument("--checkpoints", required=True)
    a.add_argument("--episodes", type=int, default=1000)
    a.add_argument("--noise-scale", type=float, default=1.0)
    a.add_argument("--seed", type=int)
    a.add_argument("--out")
    a.set_defaults(func=cmd_sweep_alpha)

    n = sub.add_parser("sweep-noise", help="evaluate SA / HA-fixed / HA-decay across noise scales")
    n.add_argument("--checkpoints", required=True)
    n.add_argument("--scales", default="1.0,1.2,1.5")
    n.add_argument("--episodes", type=int, default=1000)
    n.add_argument("--seed", type=int)
    n.add_argument("--out")
    n.set_defaults(func=cmd_sweep_noise)

    v = sub.add_parser("verify", help="run the built-in oracle checks")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, DimensionError, NonFiniteError, DivergenceError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

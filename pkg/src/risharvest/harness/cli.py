"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 runtime error (missing
files, exceeded search budget, bad checkpoints), 4 ordering/acceptance
failure from reproduce-figures.
"""

import argparse
import json
import os
import sys

import yaml

from ..rl.agents import CheckpointError
from ..rl.search import BudgetError
from .config import ConfigError, load_config
from .experiments import amended, reproduce_all
from .figures import render
from .runner import (evaluate_policy, evaluate_run, exhaustive_eval,
                     mean_col, read_csv, train_run, write_csv)


def _parse_set(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError("--set expects key=value, got %r" % item)
        key, _, value = item.partition("=")
        out[key.strip()] = yaml.safe_load(value)
    return out


def _load(args):
    cfg = load_config(args.config)
    overrides = _parse_set(getattr(args, "set", None))
    if getattr(args, "outdir", None):
        overrides["run.outdir"] = args.outdir
    if overrides:
        cfg = amended(cfg, overrides)
    return cfg


def cmd_train(args):
    cfg = _load(args)
    seeds = [args.seed] if args.seed is not None else cfg.run.seeds
    for seed in seeds:
        info = train_run(cfg, seed, force=args.force,
                         progress=args.progress)
        print("%s seed %d: final50 reward %.4f (%s)"
              % (info["protocol"], seed, info["final50_reward"],
                 info["dir"]))
    return 0


def cmd_evaluate(args):
    cfg = _load(args)
    seeds = [args.seed] if args.seed is not None else cfg.run.seeds
    for seed in seeds:
        rows = evaluate_run(cfg, seed)
        print("seed %d: %d held-out slots, mean efficiency %.4f, "
              "mean reward %.4f"
              % (seed, len(rows), mean_col(rows, "efficiency"),
                 mean_col(rows, "reward")))
    return 0


def cmd_baseline(args):
    cfg = _load(args)
    if args.kind == "oracle":
        rows = exhaustive_eval(cfg)
    else:
        def act(env, obs):
            return env.map_action(
                2.0 * env._rng_channel.random(env.action_dim) - 1.0)
        rows = evaluate_policy(cfg, act, cfg.run.eval_slots)
    print("%s baseline: %d slots, mean efficiency %.4f, mean reward %.4f"
          % (args.kind, len(rows), mean_col(rows, "efficiency"),
             mean_col(rows, "reward")))
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    key, _, values = args.values.partition("=")
    if not values:
        raise ConfigError("sweep expects key=v1,v2,... got %r"
                          % args.values)
    for raw in values.split(","):
        value = yaml.safe_load(raw)
        sub = amended(cfg, {key.strip(): value})
        for seed in cfg.run.seeds:
            info = train_run(sub, seed, progress=args.progress)
            print("%s=%r seed %d: final50 reward %.4f"
                  % (key, value, seed, info["final50_reward"]))
    return 0


def cmd_export_plots(args):
    rundirs = []
    base = os.path.join(args.outdir, "runs")
    if not os.path.isdir(base):
        raise FileNotFoundError("no runs under %s" % args.outdir)
    for name in sorted(os.listdir(base)):
        meta = os.path.join(base, name, "meta.json")
        episodes = os.path.join(base, name, "episodes.csv")
        if os.path.exists(meta) and os.path.exists(episodes):
            with open(meta) as fh:
                rundirs.append((name, json.load(fh), episodes))
    if not rundirs:
        raise FileNotFoundError("no finished runs under %s" % base)
    tidy = []
    curves = {}
    for name, meta, episodes in rundirs:
        rows = read_csv(episodes)
        label = "%s %s" % (meta.get("protocol", "?"),
                           meta.get("algorithm", "?"))
        curves.setdefault(label, []).append(rows)
        for row in rows:
            tidy.append({
                "run": name,
                "seed": meta.get("seed", -1),
                "protocol": meta.get("protocol", "?"),
                "algorithm": meta.get("algorithm", "?"),
                "episode": int(row["episode"]),
                "reward_mean": row["reward_mean"],
                "eff_mean": row["eff_mean"],
            })
    figdir = os.path.join(args.outdir, "figures")
    os.makedirs(figdir, exist_ok=True)
    write_csv(os.path.join(figdir, "episodes_tidy.csv"),
              ("run", "seed", "protocol", "algorithm", "episode",
               "reward_mean", "eff_mean"), tidy)
    png = render(figdir, "fig_all_runs", "curves", curves,
                 title="training reward, all cached runs")
    print("wrote %s and episodes_tidy.csv (%d rows from %d runs)"
          % (png, len(tidy), len(rundirs)))
    return 0


def cmd_reproduce(args):
    cfg = _load(args)
    summary = reproduce_all(cfg, progress=args.progress)
    return 0 if summary["passed"] else 4


def build_parser():
    ap = argparse.ArgumentParser(
        prog="risharvest",
        description="UAV mounted RIS energy harvesting simulator "
                    "and RL training harness")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True,
                           help="YAML experiment config")
            p.add_argument("--set", action="append", metavar="KEY=VAL",
                           help="override a config field by dotted path")
            p.add_argument("--outdir", help="override run.outdir")
        p.add_argument("--progress", type=int, default=0, metavar="N",
                       help="print a line every N episodes")

    p = sub.add_parser("train", help="train an agent per seed")
    common(p)
    p.add_argument("--seed", type=int, help="train only this seed")
    p.add_argument("--force", action="store_true",
                   help="retrain even if the run directory is complete")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate",
                       help="greedy policy on held-out slots")
    common(p)
    p.add_argument("--seed", type=int, help="evaluate only this seed")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("baseline",
                       help="score a non-learning baseline")
    common(p)
    p.add_argument("--kind", choices=("oracle", "random"),
                   default="oracle")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("sweep",
                       help="cross one config key over values x seeds")
    common(p)
    p.add_argument("values", metavar="KEY=V1,V2,...",
                   help="dotted config key and comma separated values")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("export-plots",
                       help="tidy csv + figure from cached runs")
    p.add_argument("--outdir", default="results",
                   help="results directory holding runs/")
    p.set_defaults(fn=cmd_export_plots)

    p = sub.add_parser("reproduce-figures",
                       help="run the three report experiments")
    common(p)
    p.set_defaults(fn=cmd_reproduce)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (BudgetError, CheckpointError, FileNotFoundError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

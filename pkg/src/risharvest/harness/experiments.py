"""The three report experiments and their pass/fail ordering summary.

Each experiment trains (or reuses) the runs it needs, renders a figure
with a tidy csv twin, and returns its measured numbers plus explicit
ordering verdicts. reproduce_all chains them and writes summary.json.
"""

import json
import os
import time

import numpy as np

from .config import config_from_dict, resolved_dict
from .figures import ALGO_STYLE, render
from .runner import (evaluate_run, exhaustive_eval, mean_col, read_csv,
                     train_run)

PROTOCOLS = ("TS", "PS", "HYBRID")
ALGORITHMS = ("ddpg_eh", "td3", "ddpg")

IMPAIRMENT_CELLS = (
    ("ideal", 0.0, 0.0),
    ("csi_only", 0.01, 0.0),
    ("hw_only", 0.0, 0.08),
    ("both", 0.01, 0.08),
)


def amended(cfg, overrides):
    """Copy of cfg with dotted-path overrides applied and revalidated."""
    tree = resolved_dict(cfg)
    for path, value in overrides.items():
        node = tree
        keys = path.split(".")
        for key in keys[:-1]:
            node = node[key]
        node[keys[-1]] = value
    return config_from_dict(tree)


def _seed_mean(infos, key="final50_reward"):
    return float(np.mean([i[key] for i in infos]))


def _verdict(name, ok, detail):
    line = "%-28s %s  (%s)" % (name, "PASS" if ok else "FAIL", detail)
    print(line, flush=True)
    return {"name": name, "passed": bool(ok), "detail": detail}


def protocol_experiment(cfg, figdir=None, progress=None):
    """Harvesting protocol ordering with and without the renewable feed.

    Trains the configured agent under TS, PS and HYBRID across the
    configured seeds, each with the solar feed on and off, and scores
    the mean reward over the final 50 training episodes.
    """
    runs = {}
    for proto in PROTOCOLS:
        for renewable in (True, False):
            sub = amended(cfg, {"env.protocol": proto,
                                "env.use_renewable": renewable})
            runs[proto, renewable] = [
                train_run(sub, seed, progress=progress)
                for seed in cfg.run.seeds]

    final = {(p, re): _seed_mean(runs[p, re])
             for p in PROTOCOLS for re in (True, False)}
    checks = []
    h, p, t = (final[x, True] for x in PROTOCOLS[::-1])
    checks.append(_verdict(
        "protocol ordering", h > p > t,
        "HYBRID %.4f > PS %.4f > TS %.4f" % (h, p, t)))
    ratio = h / t if t > 0 else float("inf")
    checks.append(_verdict(
        "hybrid over ts margin", ratio >= 1.10,
        "ratio %.3f needs >= 1.10" % ratio))
    for proto in PROTOCOLS:
        wins = sum(on["final50_reward"] >= off["final50_reward"]
                   for on, off in zip(runs[proto, True],
                                      runs[proto, False]))
        checks.append(_verdict(
            "renewable uplift %s" % proto,
            wins * 3 >= 2 * len(cfg.run.seeds),
            "%d of %d seeds" % (wins, len(cfg.run.seeds))))

    figures = []
    if figdir:
        curves = {}
        for proto in PROTOCOLS:
            curves[proto] = [
                read_csv(os.path.join(info["dir"], "episodes.csv"))
                for info in runs[proto, True]]
        figures.append(render(
            figdir, "fig_protocol_convergence", "curves", curves,
            title="training reward by harvesting protocol"))
        bars = {}
        for proto in PROTOCOLS:
            bars[proto] = [i["final50_reward"] for i in runs[proto, True]]
            bars[proto + " w/o RE"] = [
                i["final50_reward"] for i in runs[proto, False]]
        figures.append(render(
            figdir, "fig_protocol_final", "bars", bars,
            ylabel="final 50 episode mean reward",
            title="protocol comparison, renewable on/off"))
    return {"final": {"%s_%s" % (p, "re" if re else "nore"): v
                      for (p, re), v in final.items()},
            "checks": checks, "figures": figures}


def algorithm_experiment(cfg, figdir=None, progress=None):
    """Held-out efficiency of the learners against the search oracle."""
    effs = {}
    oracle_rows = exhaustive_eval(cfg)
    effs["oracle"] = [mean_col(oracle_rows, "efficiency")]
    for algo in ALGORITHMS:
        sub = amended(cfg, {"agent.kind": algo})
        per_seed = []
        for seed in cfg.run.seeds:
            train_run(sub, seed, progress=progress)
            rows = evaluate_run(sub, seed)
            per_seed.append(mean_col(rows, "efficiency"))
        effs[algo] = per_seed

    mean = {k: float(np.mean(v)) for k, v in effs.items()}
    checks = []
    chain = ["oracle"] + list(ALGORITHMS)
    ok = all(mean[a] >= mean[b] for a, b in zip(chain, chain[1:]))
    checks.append(_verdict(
        "algorithm ordering", ok,
        " >= ".join("%s %.4f" % (k, mean[k]) for k in chain)))
    rel = (mean["oracle"] - mean["ddpg_eh"]) / mean["oracle"] \
        if mean["oracle"] > 0 else 1.0
    checks.append(_verdict(
        "learner near oracle", rel <= 0.15,
        "gap %.1f%% needs <= 15%%" % (100 * rel)))

    figures = []
    if figdir:
        figures.append(render(
            figdir, "fig_algorithm_efficiency", "bars",
            {k: effs[k] for k in chain},
            ylabel="mean held-out EH efficiency",
            title="evaluation efficiency by algorithm",
            style_table=ALGO_STYLE))
    return {"efficiency": mean, "per_seed": effs, "checks": checks,
            "figures": figures}


def impairment_experiment(cfg, figdir=None, progress=None):
    """Evaluation efficiency under CSI error and hardware distortion."""
    effs = {}
    for name, zeta, phi in IMPAIRMENT_CELLS:
        sub = amended(cfg, {"env.csi_error": zeta,
                            "env.hw_impairment": phi})
        per_seed = []
        for seed in cfg.run.seeds:
            train_run(sub, seed, progress=progress)
            rows = evaluate_run(sub, seed)
            per_seed.append(mean_col(rows, "efficiency"))
        effs[name] = per_seed

    mean = {k: float(np.mean(v)) for k, v in effs.items()}
    checks = []
    names = [c[0] for c in IMPAIRMENT_CELLS]
    ok = all(mean[a] > mean[b] for a, b in zip(names, names[1:]))
    checks.append(_verdict(
        "impairment ordering", ok,
        " > ".join("%s %.4f" % (k, mean[k]) for k in names)))
    d_csi = mean["ideal"] - mean["csi_only"]
    d_hw = mean["ideal"] - mean["hw_only"]
    checks.append(_verdict(
        "csi drop milder than hw", d_csi < d_hw,
        "csi drop %.4f vs hw drop %.4f" % (d_csi, d_hw)))

    figures = []
    if figdir:
        figures.append(render(
            figdir, "fig_impairments", "bars", effs,
            ylabel="mean held-out EH efficiency",
            title="evaluation efficiency under impairments",
            style_table={}))
    return {"efficiency": mean, "per_seed": effs, "checks": checks,
            "figures": figures}


def reproduce_all(cfg, figdir=None, progress=None):
    """Run the three experiments and write the ordering report."""
    t0 = time.time()
    if figdir is None:
        figdir = os.path.join(cfg.run.outdir, "figures")
    out = {
        "protocols": protocol_experiment(cfg, figdir, progress),
        "algorithms": algorithm_experiment(cfg, figdir, progress),
        "impairments": impairment_experiment(cfg, figdir, progress),
    }
    checks = [c for block in out.values() for c in block["checks"]]
    passed = all(c["passed"] for c in checks)
    summary = {
        "passed": passed,
        "checks": checks,
        "wall_seconds": time.time() - t0,
        "config": resolved_dict(cfg),
    }
    os.makedirs(figdir, exist_ok=True)
    with open(os.path.join(figdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    print("experiments %s in %.0f s"
          % ("PASS" if passed else "FAIL", summary["wall_seconds"]),
        flush=True)
    return summary

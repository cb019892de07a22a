"""Training / evaluation runs with on-disk caching.

A run directory is keyed by the resolved config hash plus the seed, so
any experiment that asks for the same configuration again reuses the
finished run instead of retraining. Delimited outputs are written with
repr() floats (shortest round trip form), which makes reruns of the
same config and seed byte identical.
"""

import json
import os
import time

import numpy as np

from ..energy import EhAction
from ..env import RisEnv
from ..rl.agents import load_checkpoint, make_agent
from ..rl.search import exhaustive_slot_search
from .config import config_hash, dump_config, resolved_dict

# entropy prefixes keeping evaluation slots out of sample relative to
# the training episode streams
TRAIN_STREAM = 0x7A11
EVAL_STREAM = 0xE7A1

EPISODE_COLUMNS = (
    "episode", "steps", "reward_sum", "reward_mean", "eff_mean",
    "incident_j", "harvested_rf_j", "solar_j", "qos_viol_steps",
    "causality_steps", "battery_end_j",
)

SLOT_COLUMNS = (
    "slot", "efficiency", "reward", "incident_j", "harvested_rf_j",
    "min_rate_bps", "qos_violations", "battery_after_j",
)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            vals = line.strip().split(",")
            rows.append({k: float(v) for k, v in zip(header, vals)})
    return rows


def run_key(cfg, seed):
    return "%s_%s_s%d" % (cfg.env.protocol.value.lower(),
                          config_hash(cfg)[:12], seed)


def _run_dir(cfg, seed):
    return os.path.join(cfg.run.outdir, "runs", run_key(cfg, seed))


def _complete(dirpath):
    meta = os.path.join(dirpath, "meta.json")
    if not os.path.exists(meta):
        return None
    with open(meta) as fh:
        info = json.load(fh)
    return info if info.get("complete") else None


def episode_seeds(seed, episodes):
    """Per episode environment seeds, derived once from the run seed."""
    ss = np.random.SeedSequence([TRAIN_STREAM, seed])
    return ss.generate_state(episodes, dtype=np.uint64)


def train_run(cfg, seed, force=False, progress=None):
    """Train one agent; returns the run summary dict.

    Results land in <outdir>/runs/<protocol>_<hash>_s<seed>/ and a
    finished directory is returned as is on the next call.
    """
    dirpath = _run_dir(cfg, seed)
    if not force:
        cached = _complete(dirpath)
        if cached is not None:
            return cached
    os.makedirs(dirpath, exist_ok=True)
    t0 = time.time()

    env = RisEnv(cfg.env)
    agent = make_agent(env.state_dim, env.action_dim, cfg.agent, seed)
    agent.sigma_scale = env.exploration_scale
    ep_seeds = episode_seeds(seed, cfg.run.episodes)

    sig0 = cfg.agent.sigma_explore
    sig1 = cfg.agent.sigma_explore_final
    anneal_eps = max(1, int(0.8 * cfg.run.episodes))

    ep_rows = []
    slot_rows = []
    for ep in range(cfg.run.episodes):
        if sig1 >= 0.0:
            # linear decay over the first 80% of episodes, then flat, so
            # the final-window metric sees the asymptotic policy
            frac = min(1.0, ep / anneal_eps)
            agent.sigma = sig0 + (sig1 - sig0) * frac
        obs = env.reset(int(ep_seeds[ep]))
        done = False
        rsum = effs = inc = har = sol = 0.0
        viol = caus = steps = 0
        batt = env.battery_level_j
        while not done:
            if len(agent.buffer) < cfg.agent.warmup_steps:
                raw = agent.random_action()
            else:
                raw = agent.act(obs, explore=True)
            nxt, reward, done, rep = env.step(raw)
            agent.observe(obs, raw, reward, nxt, done)
            for _ in range(cfg.run.updates_per_step):
                agent.train_step()
            obs = nxt
            rsum += reward
            effs += rep.efficiency
            inc += rep.incident_rf_j
            har += rep.harvested_rf_j
            sol += rep.solar_j
            viol += int(rep.qos_violations > 0)
            caus += int(rep.causality_violation)
            batt = rep.battery_after_j
            steps += 1
            if cfg.run.log_slots:
                slot_rows.append(_slot_row(len(slot_rows), rep))
        ep_rows.append({
            "episode": ep, "steps": steps, "reward_sum": rsum,
            "reward_mean": rsum / steps, "eff_mean": effs / steps,
            "incident_j": inc, "harvested_rf_j": har, "solar_j": sol,
            "qos_viol_steps": viol, "causality_steps": caus,
            "battery_end_j": batt,
        })
        if progress and (ep + 1) % progress == 0:
            last = ep_rows[-progress:]
            print("  ep %4d | reward %.4f | eff %.4f" % (
                ep + 1,
                float(np.mean([r["reward_mean"] for r in last])),
                float(np.mean([r["eff_mean"] for r in last]))))

    write_csv(os.path.join(dirpath, "episodes.csv"),
              EPISODE_COLUMNS, ep_rows)
    if cfg.run.log_slots:
        write_csv(os.path.join(dirpath, "slots.csv"),
                  SLOT_COLUMNS, slot_rows)
    dump_config(cfg, os.path.join(dirpath, "config.yaml"))
    chash = config_hash(cfg)
    if cfg.run.save_checkpoint:
        agent.save(os.path.join(dirpath, "checkpoint.npz"),
                   config_hash=chash)

    tail = min(50, len(ep_rows))
    final = float(np.mean([r["reward_mean"] for r in ep_rows[-tail:]]))
    info = {
        "complete": True,
        "config_hash": chash,
        "seed": seed,
        "algorithm": cfg.agent.kind,
        "protocol": cfg.env.protocol.value,
        "episodes": cfg.run.episodes,
        "final50_reward": final,
        "final50_eff": float(np.mean(
            [r["eff_mean"] for r in ep_rows[-tail:]])),
        "wall_seconds": time.time() - t0,
        "dir": dirpath,
    }
    with open(os.path.join(dirpath, "meta.json"), "w") as fh:
        json.dump(info, fh, indent=1, sort_keys=True)
    return info


def _slot_row(idx, rep):
    rates = np.asarray(rep.rates_bps, dtype=float)
    return {
        "slot": idx,
        "efficiency": rep.efficiency,
        "reward": rep.reward,
        "incident_j": rep.incident_rf_j,
        "harvested_rf_j": rep.harvested_rf_j,
        "min_rate_bps": float(rates.min()) if rates.size else 0.0,
        "qos_violations": rep.qos_violations,
        "battery_after_j": rep.battery_after_j,
    }


def held_out_seeds(n_slots):
    ss = np.random.SeedSequence([EVAL_STREAM])
    return ss.generate_state(n_slots, dtype=np.uint64)


def evaluate_policy(cfg, act_fn, n_slots):
    """Score a policy on fresh single-step slots.

    Every caller with the same env config sees the identical slot
    sequence (common random numbers), so baselines pair cleanly.
    act_fn(env, obs) must return a raw action vector.
    """
    env = RisEnv(cfg.env)
    rows = []
    for i, s in enumerate(held_out_seeds(n_slots)):
        obs = env.reset(int(s))
        act = act_fn(env, obs)
        if isinstance(act, EhAction):
            _, _, _, rep = env.step_action(act)
        else:
            _, _, _, rep = env.step(act)
        rows.append(_slot_row(i, rep))
    return rows


def agent_policy(agent):
    def act(env, obs):
        return agent.act(obs, explore=False)
    return act


def evaluate_run(cfg, seed, force=False):
    """Deterministic held out evaluation of a finished training run."""
    info = train_run(cfg, seed)
    dirpath = info["dir"]
    out = os.path.join(dirpath, "eval_slots.csv")
    if os.path.exists(out) and not force:
        rows = read_csv(out)
    else:
        agent = load_checkpoint(os.path.join(dirpath, "checkpoint.npz"),
                                expect_hash=info["config_hash"])
        rows = evaluate_policy(cfg, agent_policy(agent),
                               cfg.run.eval_slots)
        write_csv(out, SLOT_COLUMNS, rows)
    return rows


def oracle_policy(search_cfg):
    def act(env, obs):
        action, _, _ = exhaustive_slot_search(
            env,
            n_phase=search_cfg.n_phase,
            n_scalar=search_cfg.n_scalar,
            power_resolution=search_cfg.power_resolution,
            power_levels=search_cfg.power_levels,
            sweep_passes=search_cfg.sweep_passes,
            budget=search_cfg.budget)
        return action
    return act


def exhaustive_eval(cfg, force=False):
    """Oracle search over the held out slots, cached on disk."""
    key = "oracle_%s_%s" % (cfg.env.protocol.value.lower(),
                            config_hash(cfg)[:12])
    dirpath = os.path.join(cfg.run.outdir, "runs", key)
    out = os.path.join(dirpath, "eval_slots.csv")
    if os.path.exists(out) and not force:
        return read_csv(out)
    os.makedirs(dirpath, exist_ok=True)
    rows = evaluate_policy(cfg, oracle_policy(cfg.search),
                           cfg.run.eval_slots)
    write_csv(out, SLOT_COLUMNS, rows)
    with open(os.path.join(dirpath, "meta.json"), "w") as fh:
        json.dump({"complete": True, "kind": "oracle",
                   "config_hash": config_hash(cfg),
                   "resolved": resolved_dict(cfg)["search"]},
                  fh, indent=1, sort_keys=True)
    return rows


def mean_col(rows, col):
    return float(np.mean([r[col] for r in rows])) if rows else 0.0

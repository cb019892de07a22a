"""Continuous control agents over the numpy substrate.

DdpgEhAgent carries two independent actor-critic pairs behind one replay
buffer. Targets blend clipped-noise candidate actions from both target
actors, score each candidate with the min over the pairs' target critics
and collapse the scores with a softmax weighted mean; at execution both
actors propose and the one whose own critic scores higher wins.

Td3Agent (single actor, twin critics, min target, delayed policy) and
DdpgAgent (single pair, no smoothing, no delay) are the reference
baselines. With one candidate and the softmax collapsed onto it, the
paired agent's target values coincide with TD3's.
"""

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .buffer import ReplayBuffer
from .nets import Adam, Mlp, soft_update, softmax_value

CHECKPOINT_FORMAT = 1


class CheckpointError(RuntimeError):
    pass


@dataclass
class AgentConfig:
    kind: str = "ddpg_eh"            # ddpg_eh | td3 | ddpg
    hidden: tuple = (256, 256)
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    gamma: float = 0.99
    soft_update_rate: float = 5e-3
    policy_delay: int = 2
    sigma_explore: float = 0.1
    sigma_explore_final: float = -1.0  # < 0 keeps sigma_explore fixed
    explore_kick_prob: float = 0.0   # chance of a joint uniform redraw
                                     # of the emphasized dims
    sigma_target: float = 0.2
    target_noise_clip: float = 0.5
    softmax_beta: float = 1.0
    target_candidates: int = 8       # M
    batch_size: int = 128
    buffer_capacity: int = 100000
    warmup_steps: int = 1000         # random actions before the policy runs
    train_every: int = 1             # env steps between gradient updates

    def validate(self):
        if self.kind not in ("ddpg_eh", "td3", "ddpg"):
            raise ValueError("unknown agent kind %r" % (self.kind,))
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 < self.soft_update_rate <= 1.0:
            raise ValueError("soft_update_rate must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be >= 1")
        if self.target_candidates < 1:
            raise ValueError("target_candidates must be >= 1")
        if self.sigma_explore < 0 or self.sigma_target < 0 \
                or self.target_noise_clip < 0:
            raise ValueError("noise scales must be >= 0")
        if not 0.0 <= self.explore_kick_prob <= 1.0:
            raise ValueError("explore_kick_prob must lie in [0, 1]")
        if self.sigma_explore_final > self.sigma_explore:
            raise ValueError("sigma_explore_final must not exceed "
                             "sigma_explore")
        if self.softmax_beta < 0:
            raise ValueError("softmax_beta must be >= 0")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("bad batch/buffer sizing")
        if self.warmup_steps < 0 or self.train_every < 1:
            raise ValueError("bad schedule")


class _Pair:
    """One actor-critic pair plus frozen target copies."""

    def __init__(self, state_dim, action_dim, cfg, rng):
        hid = list(cfg.hidden)
        self.actor = Mlp([state_dim] + hid + [action_dim], "tanh", rng)
        self.critic = Mlp([state_dim + action_dim] + hid + [1], "linear",
                          rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.opt_actor = Adam(self.actor.parameters(), cfg.lr_actor)
        self.opt_critic = Adam(self.critic.parameters(), cfg.lr_critic)

    def soft_sync(self, rate):
        soft_update(self.target_actor, self.actor, rate)
        soft_update(self.target_critic, self.critic, rate)


def _critic_in(state, action):
    return np.concatenate([state, action], axis=-1)


class _AgentBase:
    kind = None

    def __init__(self, state_dim, action_dim, cfg, seed):
        cfg.validate()
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.cfg = cfg
        self._seed = int(seed)
        ss = np.random.SeedSequence(self._seed)
        (self._ss_init, ss_explore, ss_target, ss_sample) = ss.spawn(4)
        self._rng_explore = np.random.default_rng(ss_explore)
        self._rng_target = np.random.default_rng(ss_target)
        self._rng_sample = np.random.default_rng(ss_sample)
        self._updates = 0
        # live exploration scale; training loops anneal it toward
        # sigma_explore_final when that is set, and may install a per
        # dimension emphasis vector (e.g. the environment's
        # exploration_scale) to keep counterfactual data flowing on the
        # coordinates the reward is most sensitive to
        self.sigma = float(cfg.sigma_explore)
        self.sigma_scale = np.ones(self.action_dim)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, self.state_dim,
                                   self.action_dim)

    def random_action(self):
        return self._rng_explore.uniform(-1.0, 1.0, self.action_dim)

    def _explore(self, action):
        noise = self._rng_explore.normal(0.0, self.sigma, self.action_dim)
        out = np.clip(action + noise * self.sigma_scale, -1.0, 1.0)
        if self.cfg.explore_kick_prob > 0.0 \
                and self._rng_explore.uniform() < self.cfg.explore_kick_prob:
            # joint uniform redraw of the emphasized dims only: keeps the
            # policy's fine-grained dims (phases) while planting a fully
            # counterfactual protocol/power choice in the replay stream,
            # which is the data a critic needs to keep its off-policy
            # action ranking honest
            kick = self.sigma_scale > 1.0
            out[kick] = self._rng_explore.uniform(-1.0, 1.0,
                                                  int(np.sum(kick)))
        return out

    def _policy_ready(self):
        # the actor (and the frozen targets) only start moving once the
        # warmup data is in the buffer; the critics train earlier, so by
        # the time the actor takes its first gradient step it follows a
        # critic that has already seen the whole action box instead of a
        # few early policy samples
        return len(self.buffer) >= self.cfg.warmup_steps

    def observe(self, state, action, reward, next_state, done):
        self.buffer.add(state, action, reward, next_state, done)

    # -- checkpointing -------------------------------------------------

    def nets(self):
        raise NotImplementedError

    def save(self, path, config_hash=""):
        meta = {
            "format": CHECKPOINT_FORMAT,
            "kind": self.kind,
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "config_hash": config_hash,
            "updates": self._updates,
            "agent_config": dataclasses.asdict(self.cfg),
        }
        arrays = {"meta": np.array(json.dumps(meta))}
        for name, net in self.nets():
            for i, p in enumerate(net.parameters()):
                arrays["%s__p%d" % (name, i)] = p
        np.savez(path, **arrays)

    def restore_arrays(self, npz):
        for name, net in self.nets():
            for i, p in enumerate(net.parameters()):
                key = "%s__p%d" % (name, i)
                if key not in npz:
                    raise CheckpointError("missing array %s" % key)
                stored = npz[key]
                if stored.shape != p.shape:
                    raise CheckpointError("shape mismatch on %s" % key)
                p[...] = stored


class DdpgEhAgent(_AgentBase):
    kind = "ddpg_eh"

    def __init__(self, state_dim, action_dim, cfg, seed):
        super().__init__(state_dim, action_dim, cfg, seed)
        init_rng = np.random.default_rng(self._ss_init)
        self.pairs = [_Pair(state_dim, action_dim, cfg, init_rng),
                      _Pair(state_dim, action_dim, cfg, init_rng)]

    def act(self, state, explore=False):
        """Both actors propose, own-critic scores decide (ties: pair 0)."""
        state = np.asarray(state, dtype=float)
        proposals = []
        scores = []
        for pair in self.pairs:
            a = pair.actor.forward(state)
            q = pair.critic.forward(_critic_in(state, a))
            proposals.append(a)
            scores.append(float(q[0]))
        action = proposals[int(np.argmax(scores))]
        if explore:
            action = self._explore(action)
        return action

    def target_values(self, next_state, reward, done, noise=None):
        """Bootstrap targets shared by both critic regressions.

        M candidate actions come from the two target actors (first half
        rounded up from pair 0), each perturbed by clipped gaussian noise
        and clipped back into the action box. Every candidate is scored
        by the min of the two target critics and the M scores collapse
        through the softmax weighted mean.
        """
        cfg = self.cfg
        s2 = np.asarray(next_state, dtype=float)
        b = s2.shape[0]
        m = cfg.target_candidates
        if noise is None:
            noise = self._rng_target.normal(
                0.0, cfg.sigma_target, size=(b, m, self.action_dim))
        noise = np.clip(noise, -cfg.target_noise_clip,
                        cfg.target_noise_clip)
        if noise.shape != (b, m, self.action_dim):
            raise ValueError("noise must have shape (B, M, A)")
        base0 = self.pairs[0].target_actor.forward(s2)
        base1 = self.pairs[1].target_actor.forward(s2)
        m0 = (m + 1) // 2
        q = np.empty((b, m))
        for j in range(m):
            base = base0 if j < m0 else base1
            cand = np.clip(base + noise[:, j, :], -1.0, 1.0)
            x = _critic_in(s2, cand)
            q0 = self.pairs[0].target_critic.forward(x)[:, 0]
            q1 = self.pairs[1].target_critic.forward(x)[:, 0]
            q[:, j] = np.minimum(q0, q1)
        v = softmax_value(q, cfg.softmax_beta, axis=1)
        return np.asarray(reward) + cfg.gamma * (1.0 - np.asarray(done)) * v

    def train_step(self):
        cfg = self.cfg
        if len(self.buffer) < cfg.batch_size:
            return None
        batch = self.buffer.sample(self._rng_sample, cfg.batch_size)
        y = self.target_values(batch["next_state"], batch["reward"],
                               batch["done"])
        b = cfg.batch_size
        diag = {"target_mean": float(np.mean(y))}
        x = _critic_in(batch["state"], batch["action"])
        for i, pair in enumerate(self.pairs):
            q, cache = pair.critic.forward_cache(x)
            err = q[:, 0] - y
            diag["critic%d_loss" % i] = float(np.mean(err ** 2))
            grads, _ = pair.critic.backward(cache, (2.0 / b) * err[:, None])
            pair.opt_critic.step(pair.critic.parameters(), grads)
        self._updates += 1
        if self._updates % cfg.policy_delay == 0 and self._policy_ready():
            for pair in self.pairs:
                a, ca = pair.actor.forward_cache(batch["state"])
                q, cc = pair.critic.forward_cache(
                    _critic_in(batch["state"], a))
                _, dx = pair.critic.backward(cc, np.full((b, 1), -1.0 / b))
                agrads, _ = pair.actor.backward(ca, dx[:, self.state_dim:])
                pair.opt_actor.step(pair.actor.parameters(), agrads)
            for pair in self.pairs:
                pair.soft_sync(cfg.soft_update_rate)
        return diag

    def nets(self):
        out = []
        for i, pair in enumerate(self.pairs):
            out += [("pair%d_actor" % i, pair.actor),
                    ("pair%d_critic" % i, pair.critic),
                    ("pair%d_target_actor" % i, pair.target_actor),
                    ("pair%d_target_critic" % i, pair.target_critic)]
        return out


class Td3Agent(_AgentBase):
    kind = "td3"

    def __init__(self, state_dim, action_dim, cfg, seed):
        super().__init__(state_dim, action_dim, cfg, seed)
        rng = np.random.default_rng(self._ss_init)
        hid = list(cfg.hidden)
        self.actor = Mlp([state_dim] + hid + [action_dim], "tanh", rng)
        self.critic_a = Mlp([state_dim + action_dim] + hid + [1], "linear",
                            rng)
        self.critic_b = Mlp([state_dim + action_dim] + hid + [1], "linear",
                            rng)
        self.target_actor = self.actor.copy()
        self.target_critic_a = self.critic_a.copy()
        self.target_critic_b = self.critic_b.copy()
        self.opt_actor = Adam(self.actor.parameters(), cfg.lr_actor)
        self.opt_critic_a = Adam(self.critic_a.parameters(), cfg.lr_critic)
        self.opt_critic_b = Adam(self.critic_b.parameters(), cfg.lr_critic)

    def act(self, state, explore=False):
        action = self.actor.forward(np.asarray(state, dtype=float))
        if explore:
            action = self._explore(action)
        return action

    def target_values(self, next_state, reward, done, noise=None):
        cfg = self.cfg
        s2 = np.asarray(next_state, dtype=float)
        b = s2.shape[0]
        if noise is None:
            noise = self._rng_target.normal(
                0.0, cfg.sigma_target, size=(b, self.action_dim))
        noise = np.clip(noise, -cfg.target_noise_clip,
                        cfg.target_noise_clip)
        cand = np.clip(self.target_actor.forward(s2) + noise, -1.0, 1.0)
        x = _critic_in(s2, cand)
        qa = self.target_critic_a.forward(x)[:, 0]
        qb = self.target_critic_b.forward(x)[:, 0]
        v = np.minimum(qa, qb)
        return np.asarray(reward) + cfg.gamma * (1.0 - np.asarray(done)) * v

    def train_step(self):
        cfg = self.cfg
        if len(self.buffer) < cfg.batch_size:
            return None
        batch = self.buffer.sample(self._rng_sample, cfg.batch_size)
        y = self.target_values(batch["next_state"], batch["reward"],
                               batch["done"])
        b = cfg.batch_size
        x = _critic_in(batch["state"], batch["action"])
        diag = {"target_mean": float(np.mean(y))}
        for name, critic, opt in (("a", self.critic_a, self.opt_critic_a),
                                  ("b", self.critic_b, self.opt_critic_b)):
            q, cache = critic.forward_cache(x)
            err = q[:, 0] - y
            diag["critic_%s_loss" % name] = float(np.mean(err ** 2))
            grads, _ = critic.backward(cache, (2.0 / b) * err[:, None])
            opt.step(critic.parameters(), grads)
        self._updates += 1
        if self._updates % cfg.policy_delay == 0 and self._policy_ready():
            a, ca = self.actor.forward_cache(batch["state"])
            q, cc = self.critic_a.forward_cache(
                _critic_in(batch["state"], a))
            _, dx = self.critic_a.backward(cc, np.full((b, 1), -1.0 / b))
            agrads, _ = self.actor.backward(ca, dx[:, self.state_dim:])
            self.opt_actor.step(self.actor.parameters(), agrads)
            soft_update(self.target_actor, self.actor,
                        cfg.soft_update_rate)
            soft_update(self.target_critic_a, self.critic_a,
                        cfg.soft_update_rate)
            soft_update(self.target_critic_b, self.critic_b,
                        cfg.soft_update_rate)
        return diag

    def nets(self):
        return [("actor", self.actor), ("critic_a", self.critic_a),
                ("critic_b", self.critic_b),
                ("target_actor", self.target_actor),
                ("target_critic_a", self.target_critic_a),
                ("target_critic_b", self.target_critic_b)]


class DdpgAgent(_AgentBase):
    kind = "ddpg"

    def __init__(self, state_dim, action_dim, cfg, seed):
        super().__init__(state_dim, action_dim, cfg, seed)
        rng = np.random.default_rng(self._ss_init)
        hid = list(cfg.hidden)
        self.actor = Mlp([state_dim] + hid + [action_dim], "tanh", rng)
        self.critic = Mlp([state_dim + action_dim] + hid + [1], "linear",
                          rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.opt_actor = Adam(self.actor.parameters(), cfg.lr_actor)
        self.opt_critic = Adam(self.critic.parameters(), cfg.lr_critic)

    def act(self, state, explore=False):
        action = self.actor.forward(np.asarray(state, dtype=float))
        if explore:
            action = self._explore(action)
        return action

    def target_values(self, next_state, reward, done, noise=None):
        # plain bootstrap, no smoothing and no pessimism
        cfg = self.cfg
        s2 = np.asarray(next_state, dtype=float)
        cand = self.target_actor.forward(s2)
        v = self.target_critic.forward(_critic_in(s2, cand))[:, 0]
        return np.asarray(reward) + cfg.gamma * (1.0 - np.asarray(done)) * v

    def train_step(self):
        cfg = self.cfg
        if len(self.buffer) < cfg.batch_size:
            return None
        batch = self.buffer.sample(self._rng_sample, cfg.batch_size)
        y = self.target_values(batch["next_state"], batch["reward"],
                               batch["done"])
        b = cfg.batch_size
        x = _critic_in(batch["state"], batch["action"])
        q, cache = self.critic.forward_cache(x)
        err = q[:, 0] - y
        diag = {"critic_loss": float(np.mean(err ** 2)),
                "target_mean": float(np.mean(y))}
        grads, _ = self.critic.backward(cache, (2.0 / b) * err[:, None])
        self.opt_critic.step(self.critic.parameters(), grads)
        self._updates += 1
        if self._policy_ready():
            a, ca = self.actor.forward_cache(batch["state"])
            q, cc = self.critic.forward_cache(_critic_in(batch["state"], a))
            _, dx = self.critic.backward(cc, np.full((b, 1), -1.0 / b))
            agrads, _ = self.actor.backward(ca, dx[:, self.state_dim:])
            self.opt_actor.step(self.actor.parameters(), agrads)
            soft_update(self.target_actor, self.actor, cfg.soft_update_rate)
            soft_update(self.target_critic, self.critic,
                        cfg.soft_update_rate)
        return diag

    def nets(self):
        return [("actor", self.actor), ("critic", self.critic),
                ("target_actor", self.target_actor),
                ("target_critic", self.target_critic)]


_KINDS = {"ddpg_eh": DdpgEhAgent, "td3": Td3Agent, "ddpg": DdpgAgent}


def make_agent(state_dim, action_dim, cfg, seed):
    cfg.validate()
    return _KINDS[cfg.kind](state_dim, action_dim, cfg, seed)


def load_checkpoint(path, expect_hash=None):
    """Rebuild an agent from an .npz checkpoint.

    Rejects unknown format versions and, when expect_hash is given, any
    config hash mismatch. Optimizer moments are not stored; a restored
    agent is meant for evaluation or a cold optimizer restart.
    """
    with np.load(path, allow_pickle=False) as npz:
        if "meta" not in npz:
            raise CheckpointError("not an agent checkpoint (no meta)")
        meta = json.loads(str(npz["meta"][()]))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError("unsupported checkpoint format %r"
                                  % (meta.get("format"),))
        if expect_hash is not None and meta.get("config_hash") \
                not in ("", expect_hash):
            raise CheckpointError(
                "checkpoint belongs to a different configuration")
        acfg = AgentConfig(**{k: tuple(v) if k == "hidden" else v
                              for k, v in meta["agent_config"].items()})
        agent = make_agent(meta["state_dim"], meta["action_dim"], acfg,
                           seed=0)
        agent.restore_arrays(npz)
        agent._updates = int(meta.get("updates", 0))
    return agent

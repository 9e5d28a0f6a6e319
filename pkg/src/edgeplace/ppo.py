"""Clipped-surrogate PPO for multi-binary placement actions, in plain numpy.

The policy emits one Bernoulli per node; the joint action log-probability is
the sum over nodes. Gradients of the full objective (clipped surrogate +
value MSE - entropy bonus) are computed analytically and verified against
finite differences in the tests, so every sign here is load-bearing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .nn import MLP, Adam, PolicyArchitectureError
from .util import dump_json, load_json

POLICY_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PPOConfig:
    learning_rate: float = 3e-4
    clip_ratio: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 10
    minibatch_size: int = 64
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    update_interval: int = 256  # env steps collected per update
    hidden: tuple[int, ...] = (64, 64)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["hidden"] = list(self.hidden)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PPOConfig":
        known = {f: doc[f] for f in cls.__dataclass_fields__ if f in doc}
        if "hidden" in known:
            known["hidden"] = tuple(int(h) for h in known["hidden"])
        return cls(**known)


# --------------------------------------------------------------------------
# policy wrapper and action interface
# --------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


@dataclass
class PolicyAgent:
    """Network plus the fixed per-component state scaling it was trained with."""

    net: MLP
    state_scale: np.ndarray  # positive, same length as the state vector

    def probs_value(self, state: np.ndarray):
        logits, values = self.net.forward(np.asarray(state, dtype=float) / self.state_scale)
        return _sigmoid(logits[0]), float(values[0])


def forward(net: MLP, state: np.ndarray):
    """Per-node activation probabilities and state value for one raw state."""
    logits, values = net.forward(state)
    return _sigmoid(logits[0]), float(values[0])


def sample_action(probs: np.ndarray, rng: np.random.Generator):
    """Draw one multi-binary action; returns (bool vector, joint log-prob)."""
    probs = np.asarray(probs, dtype=float)
    action = rng.random(probs.shape) < probs
    picked = np.where(action, probs, 1.0 - probs)
    log_prob = float(np.sum(np.log(np.maximum(picked, 1e-300))))
    return action, log_prob


def deterministic_action(probs: np.ndarray) -> np.ndarray:
    """Evaluation-mode action: activate every node with probability >= 0.5."""
    return np.asarray(probs, dtype=float) >= 0.5


def log_prob_from_logits(logits: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Joint log-prob per row; log p(a) = sum_i a_i z_i - softplus(z_i)."""
    a = actions.astype(float)
    return np.sum(a * logits - _softplus(logits), axis=1)


# --------------------------------------------------------------------------
# trajectories and advantage estimation
# --------------------------------------------------------------------------


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    last_value: float = 0.0  # bootstrap for a rollout cut mid-episode

    def __len__(self) -> int:
        return len(self.rewards)

    def add(self, state, action, log_prob, value, reward, done) -> None:
        self.states.append(np.asarray(state, dtype=float))
        self.actions.append(np.asarray(action, dtype=bool))
        self.log_probs.append(float(log_prob))
        self.values.append(float(value))
        self.rewards.append(float(reward))
        self.dones.append(bool(done))

    def arrays(self) -> dict:
        return {
            "states": np.stack(self.states),
            "actions": np.stack(self.actions),
            "log_probs": np.array(self.log_probs),
            "values": np.array(self.values),
            "rewards": np.array(self.rewards),
            "dones": np.array(self.dones, dtype=bool),
        }


def compute_gae(trajectory: Trajectory, gamma: float, lam: float):
    """Generalized advantage estimation over a (possibly multi-episode) rollout.

    Returns raw advantages and value targets (advantage + value); batch
    normalization is the updater's job so a single transition keeps the
    textbook identity advantage = reward - value (when done).
    """
    rewards = np.array(trajectory.rewards)
    values = np.array(trajectory.values)
    dones = np.array(trajectory.dones, dtype=bool)
    t_len = len(rewards)
    advantages = np.zeros(t_len)
    next_adv = 0.0
    next_value = float(trajectory.last_value)
    for t in range(t_len - 1, -1, -1):
        keep = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * keep - values[t]
        next_adv = delta + gamma * lam * keep * next_adv
        advantages[t] = next_adv
        next_value = values[t]
    return advantages, advantages + values


# --------------------------------------------------------------------------
# loss, gradient, update
# --------------------------------------------------------------------------


def ppo_loss_and_grad(net: MLP, batch: dict, config: PPOConfig):
    """Analytic loss and flat parameter gradient for one minibatch.

    batch: states (B,D), actions (B,N), old_log_probs (B,), advantages (B,)
    (already normalized), returns (B,). Returns (stats dict, grad vector).
    """
    states = batch["states"]
    actions = batch["actions"].astype(float)
    old_lp = batch["old_log_probs"]
    adv = batch["advantages"]
    rets = batch["returns"]
    b = states.shape[0]
    eps = config.clip_ratio
    stats: dict = {}

    def d_out(logits, values):
        probs = _sigmoid(logits)
        new_lp = np.sum(actions * logits - _softplus(logits), axis=1)
        ratio = np.exp(new_lp - old_lp)
        clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps)
        surr = np.minimum(ratio * adv, clipped * adv)
        # gradient flows only where the unclipped branch attains the min
        active = np.where(adv >= 0.0, ratio <= 1.0 + eps, ratio >= 1.0 - eps)
        d_logits = -(active * ratio * adv)[:, None] * (actions - probs) / b
        ent = _softplus(logits) - probs * logits
        d_logits += config.entropy_coef * (logits * probs * (1.0 - probs)) / b
        v_err = values - rets
        d_values = config.value_coef * 2.0 * v_err / b
        stats["policy_loss"] = float(-np.mean(surr))
        stats["value_loss"] = float(np.mean(v_err**2))
        stats["entropy"] = float(np.mean(np.sum(ent, axis=1)))
        stats["clip_fraction"] = float(np.mean(np.abs(ratio - 1.0) > eps))
        stats["approx_kl"] = float(np.mean(old_lp - new_lp))
        return np.concatenate([d_logits, d_values[:, None]], axis=1)

    _, _, grad = net.forward_backward(states, d_out)
    stats["loss"] = (
        stats["policy_loss"]
        + config.value_coef * stats["value_loss"]
        - config.entropy_coef * stats["entropy"]
    )
    return stats, grad


def ppo_update(
    net: MLP,
    trajectory: Trajectory,
    config: PPOConfig,
    optimizer: Adam,
    rng: np.random.Generator,
) -> dict:
    """Multi-epoch minibatch PPO update in place. Returns diagnostics."""
    data = trajectory.arrays()
    adv_raw, returns = compute_gae(trajectory, config.gamma, config.gae_lambda)
    adv = (adv_raw - adv_raw.mean()) / (adv_raw.std() + 1e-8)
    t_len = len(trajectory)
    diag: dict = {}
    for _ in range(config.epochs):
        perm = rng.permutation(t_len)
        for start in range(0, t_len, config.minibatch_size):
            idx = perm[start : start + config.minibatch_size]
            batch = {
                "states": data["states"][idx],
                "actions": data["actions"][idx],
                "old_log_probs": data["log_probs"][idx],
                "advantages": adv[idx],
                "returns": returns[idx],
            }
            stats, grad = ppo_loss_and_grad(net, batch, config)
            net.set_params(optimizer.step(net.get_params(), grad))
            diag = stats
    diag["mean_reward"] = float(np.mean(data["rewards"]))
    diag["mean_advantage"] = float(adv_raw.mean())
    return diag


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def save_policy(
    path: str, agent: PolicyAgent, optimizer: Adam | None = None, extras: dict | None = None
) -> None:
    doc = {
        "schema_version": POLICY_SCHEMA_VERSION,
        "arch": agent.net.arch_dict(),
        "params": agent.net.get_params().tolist(),
        "state_scale": agent.state_scale.tolist(),
    }
    if optimizer is not None:
        doc["adam"] = optimizer.state_dict()
    if extras:
        doc["extras"] = extras
    dump_json(path, doc)


@dataclass
class PolicyCheckpoint:
    agent: PolicyAgent
    optimizer: Adam | None
    extras: dict


def load_policy(
    path: str, expect_input_dim: int | None = None, expect_n_actions: int | None = None
) -> PolicyCheckpoint:
    doc = load_json(path)
    version = doc.get("schema_version")
    if version != POLICY_SCHEMA_VERSION:
        raise PolicyArchitectureError(f"unsupported policy schema_version {version}")
    arch = doc["arch"]
    if expect_input_dim is not None and arch["input_dim"] != expect_input_dim:
        raise PolicyArchitectureError(
            f"policy expects input_dim {arch['input_dim']}, scenario needs {expect_input_dim}"
        )
    if expect_n_actions is not None and arch["n_actions"] != expect_n_actions:
        raise PolicyArchitectureError(
            f"policy expects n_actions {arch['n_actions']}, scenario needs {expect_n_actions}"
        )
    net = MLP(arch["input_dim"], arch["n_actions"], hidden=tuple(arch["hidden"]))
    net.set_params(np.array(doc["params"], dtype=float))
    scale = np.array(doc["state_scale"], dtype=float)
    if scale.shape != (net.input_dim,):
        raise PolicyArchitectureError("state_scale length does not match input_dim")
    optimizer = Adam.from_state(doc["adam"]) if "adam" in doc else None
    return PolicyCheckpoint(
        agent=PolicyAgent(net=net, state_scale=scale),
        optimizer=optimizer,
        extras=doc.get("extras", {}),
    )

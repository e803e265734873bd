"""Rollouts, trajectory/sub-trajectory balance losses, and the training loop.

The environment is a tree (one parent per state), so every backward
log-probability is exactly zero and the losses only accumulate forward
terms. Exploration noise (epsilon-uniform over the mask) biases which
actions get sampled but never what log-probabilities are recorded, so the
losses always see the unmixed policy.

Reproducibility: every rollout batch draws its per-trajectory generators
from spawned seed-sequence children, so results do not depend on scheduling
and a fixed seed yields bit-identical traces in single-threaded mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .environment import EXIT_ACTION, CodonDesignEnvironment, State
from .exceptions import ConfigurationError, NumericFailureError, TrainingAbortError
from .genetic_code import MrnaSequence
from .objectives import ObjectiveScorer, check_weights
from .policy import (
    NO_PREV_CODON,
    AdamOptimizer,
    MlpPolicy,
    TabularPolicy,
    sample_action,
)

DIRICHLET_ALPHA_DEFAULT = (1.0, 1.0, 1.0)


def sample_weights(rng: np.random.Generator, alpha=DIRICHLET_ALPHA_DEFAULT) -> np.ndarray:
    """Draw preference weights from a Dirichlet over the 3-simplex."""
    w = rng.dirichlet(np.asarray(alpha, dtype=np.float64))
    return w / w.sum()


@dataclass
class Trajectory:
    """One complete rollout: codon actions then exit, with recorded log P_F."""

    actions: np.ndarray  # (L+1,) int, last entry is EXIT_ACTION
    log_pf: np.ndarray  # (L+1,) float
    design: MrnaSequence
    reward: float
    weights: np.ndarray  # (3,)

    def state_sequence(self, env: CodonDesignEnvironment) -> list[State]:
        """States s_0..s_L visited before the exit step."""
        states = [env.initial_state()]
        for action in self.actions[:-1]:
            states.append(env.step(states[-1], int(action)))
        return states


@dataclass
class TrajectoryBatch:
    """B same-protein rollouts in matrix form; the exit step is implicit."""

    env: CodonDesignEnvironment
    actions: np.ndarray  # (B, L) codon indices
    log_pf: np.ndarray  # (B, L+1), column L is the exit step (exactly 0)
    rewards: np.ndarray | None  # (B,)
    weights: np.ndarray  # (3,) shared or (B, 3) per trajectory

    @property
    def size(self) -> int:
        return self.actions.shape[0]

    def weight_row(self, b: int) -> np.ndarray:
        w = self.weights
        return w[b] if w.ndim == 2 else w

    def designs(self) -> list[MrnaSequence]:
        return [MrnaSequence(tuple(int(c) for c in row)) for row in self.actions]

    def trajectories(self) -> list[Trajectory]:
        out = []
        designs = self.designs()
        for b in range(self.size):
            full = np.append(self.actions[b], EXIT_ACTION)
            out.append(
                Trajectory(
                    actions=full,
                    log_pf=self.log_pf[b].copy(),
                    design=designs[b],
                    reward=float(self.rewards[b]) if self.rewards is not None else np.nan,
                    weights=np.array(self.weight_row(b)),
                )
            )
        return out


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _check_weight_matrix(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim == 1:
        return check_weights(w)
    if w.ndim != 2 or w.shape[1] != 3:
        raise ConfigurationError(f"weight matrix must be (B, 3), got {w.shape}")
    for row in w:
        check_weights(row)
    return w


def rollout_batch(
    env: CodonDesignEnvironment,
    policy,
    scorer: ObjectiveScorer | None,
    weights,
    batch_size: int,
    epsilon: float,
    seed,
    compute_rewards: bool = True,
) -> TrajectoryBatch:
    """Sample B trajectories in lockstep (same protein => same length)."""
    if batch_size < 1:
        raise ConfigurationError("batch_size must be >= 1")
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigurationError(f"epsilon must lie in [0, 1], got {epsilon}")
    w = _check_weight_matrix(weights)
    if w.ndim == 2 and w.shape[0] != batch_size:
        raise ConfigurationError("per-trajectory weights must match batch_size")
    seed_seq = _as_seed_sequence(seed)
    rngs = [np.random.default_rng(child) for child in seed_seq.spawn(batch_size)]
    L = env.length
    B = batch_size
    actions = np.empty((B, L), dtype=np.int64)
    log_pf = np.zeros((B, L + 1))
    prefixes = [() for _ in range(B)] if policy.kind == "tabular" else None
    for t in range(L):
        prev = actions[:, t - 1] if t > 0 else np.full(B, NO_PREV_CODON, dtype=np.int64)
        lp = policy.masked_step_log_probs(env, prev, t, w, prefixes=prefixes)
        mask = env.mask_matrix[t]
        for b in range(B):
            a = sample_action(lp[b], mask, epsilon, rngs[b])
            actions[b, t] = a
            log_pf[b, t] = lp[b, a]
        if prefixes is not None:
            prefixes = [prefixes[b] + (int(actions[b, t]),) for b in range(B)]
    rewards = None
    if compute_rewards:
        if scorer is None:
            raise ConfigurationError("compute_rewards=True needs a scorer")
        phi = scorer.phi_batch_indices(actions)
        if w.ndim == 2:
            rewards = scorer.reward_from_phi_rows(phi, w)
        else:
            rewards = scorer.reward_from_phi(phi, w)
    return TrajectoryBatch(env=env, actions=actions, log_pf=log_pf, rewards=rewards, weights=w)


def _batch_log_rewards(batch: TrajectoryBatch) -> np.ndarray:
    if batch.rewards is None:
        raise NumericFailureError("losses need rewards; rollout was sampled without them")
    return np.log(batch.rewards)


def tb_loss_batch(policy, env: CodonDesignEnvironment, batch: TrajectoryBatch):
    """Trajectory balance: mean over B of (log Z + sum log P_F - log R)^2.

    Backward log-probabilities vanish on a tree, so they never appear.
    Returns (scalar loss tensor, leaf tensors for gradient collection).
    """
    log_pf, _flows, log_z, leaves = policy.trajectory_log_terms(env, batch.actions, batch.weights)
    resid = log_pf.sum(axis=1) + log_z - ad.constant(_batch_log_rewards(batch))
    loss = resid.square().mean()
    return loss, leaves


def _subtb_pairs(L: int, lam: float, only_full: bool):
    if only_full:
        return np.array([0]), np.array([L]), np.array([1.0])
    i_idx, j_idx = np.triu_indices(L + 1, k=1)
    weights = lam ** (j_idx - i_idx).astype(np.float64)
    return i_idx, j_idx, weights / weights.sum()


def subtb_loss_batch(
    policy,
    env: CodonDesignEnvironment,
    batch: TrajectoryBatch,
    lam: float = 0.9,
    only_full: bool = False,
):
    """Sub-trajectory balance with lambda^length weighting, normalized per trajectory.

    Boundary conventions: the root flow is log Z and the completed-sequence
    flow is log R(x); interior flows come from the policy's flow head. With
    the weighting restricted to the single full-length sub-trajectory this
    reproduces the trajectory balance loss exactly.
    """
    if not 0.0 < lam <= 1.0:
        raise ConfigurationError(f"subtb lambda must lie in (0, 1], got {lam}")
    B, L = batch.actions.shape
    log_pf, flows, log_z, leaves = policy.trajectory_log_terms(env, batch.actions, batch.weights)
    log_r = _batch_log_rewards(batch)
    i_idx, j_idx, pair_w = _subtb_pairs(L, lam, only_full)
    pair_w_t = ad.constant(pair_w)
    per_traj = []
    zero = ad.constant(np.zeros(1))
    for b in range(B):
        lp_row = log_pf[b, 0:L]
        cum = ad.concat([zero, ad.cumsum(lp_row)])  # c_t = sum of lp before step t
        boundary_flows = [log_z.reshape(1)]
        if L > 1:
            boundary_flows.append(flows[b, 1:L])
        boundary_flows.append(ad.constant(np.array([log_r[b]])))
        f = ad.concat(boundary_flows)
        u = f - cum
        resid = ad.take(u, i_idx) - ad.take(u, j_idx)
        per_traj.append((resid.square() * pair_w_t).sum())
    loss = ad.stack_scalars(per_traj).mean()
    return loss, leaves


def tb_loss(policy, env: CodonDesignEnvironment, trajectory: Trajectory) -> float:
    """Loss value for one trajectory; use the batch form when you need gradients."""
    batch = _single(env, trajectory)
    loss, _ = tb_loss_batch(policy, env, batch)
    return float(loss.data)


def subtb_loss(
    policy, env: CodonDesignEnvironment, trajectory: Trajectory, lam: float = 0.9, only_full: bool = False
) -> float:
    batch = _single(env, trajectory)
    loss, _ = subtb_loss_batch(policy, env, batch, lam=lam, only_full=only_full)
    return float(loss.data)


def _single(env, trajectory: Trajectory) -> TrajectoryBatch:
    actions = np.asarray(trajectory.actions[:-1], dtype=np.int64)[None, :]
    return TrajectoryBatch(
        env=env,
        actions=actions,
        log_pf=np.asarray(trajectory.log_pf)[None, :],
        rewards=np.array([trajectory.reward]),
        weights=np.asarray(trajectory.weights),
    )


@dataclass
class TrainingConfig:
    """Optimization knobs; defaults follow the documented desk-scale recipe."""

    loss: str = "subtb"  # "tb" | "subtb"
    subtb_lambda: float = 0.9
    batch_size: int = 64
    n_iterations: int = 2000
    epsilon: float = 0.25
    dirichlet_alpha: tuple = DIRICHLET_ALPHA_DEFAULT
    lr: float = 5e-3
    lr_logz: float = 1e-1
    lr_patience: int = 10
    seed: int = 0
    conditional: bool = True
    fixed_weights: tuple = (0.3, 0.3, 0.4)

    def __post_init__(self):
        if self.loss not in ("tb", "subtb"):
            raise ConfigurationError(f"unknown loss {self.loss!r}")
        if not 0.0 < self.subtb_lambda <= 1.0:
            raise ConfigurationError("subtb_lambda must lie in (0, 1]")
        if self.batch_size < 1 or self.n_iterations < 0:
            raise ConfigurationError("batch_size must be >= 1 and n_iterations >= 0")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError("epsilon must lie in [0, 1]")
        if len(tuple(self.dirichlet_alpha)) != 3 or any(a <= 0 for a in self.dirichlet_alpha):
            raise ConfigurationError("dirichlet_alpha needs 3 positive entries")
        if self.lr <= 0 or self.lr_logz <= 0:
            raise ConfigurationError("learning rates must be positive")
        if self.lr_patience < 1:
            raise ConfigurationError("lr_patience must be >= 1")
        if not self.conditional:
            check_weights(self.fixed_weights)


@dataclass
class TraceRow:
    iteration: int
    loss: float
    mean_reward: float
    log_z: float


@dataclass
class TrainResult:
    policy: object
    trace: list[TraceRow]
    optimizer: AdamOptimizer


def _loss_for(cfg: TrainingConfig):
    if cfg.loss == "tb":
        return lambda policy, env, batch: tb_loss_batch(policy, env, batch)
    return lambda policy, env, batch: subtb_loss_batch(policy, env, batch, lam=cfg.subtb_lambda)


def _snapshot(policy, optimizer, iteration: int) -> dict:
    if policy.kind == "mlp":
        params = {k: v.copy() for k, v in policy.params.items()}
    else:
        params = {"log_z": policy.log_z_array.copy()}
    return {"iteration": iteration, "params": params, "optimizer": optimizer.state_dict()}


def training_step(policy, env, scorer, cfg: TrainingConfig, weights, seed, optimizer, iteration=0):
    """One rollout batch + loss + Adam update; returns (loss, mean_reward)."""
    try:
        batch = rollout_batch(env, policy, scorer, weights, cfg.batch_size, cfg.epsilon, seed)
    except TrainingAbortError:
        raise
    except NumericFailureError as exc:
        raise TrainingAbortError(
            f"numeric failure while sampling at iteration {iteration}: {exc}",
            checkpoint=_snapshot(policy, optimizer, iteration),
        ) from exc
    loss_t, leaves = _loss_for(cfg)(policy, env, batch)
    loss_val = float(loss_t.data)
    if not np.isfinite(loss_val):
        raise TrainingAbortError(
            f"non-finite loss at iteration {iteration}",
            checkpoint=_snapshot(policy, optimizer, iteration),
        )
    loss_t.backward()
    grads = {}
    for key, leaf in leaves.items():
        if leaf.grad is None:
            continue
        if not np.all(np.isfinite(leaf.grad)):
            raise TrainingAbortError(
                f"non-finite gradient for {key!r} at iteration {iteration}",
                checkpoint=_snapshot(policy, optimizer, iteration),
            )
        grads[key] = leaf.grad
    if policy.kind == "tabular":
        optimizer.params = policy.apply_grads_keys()
    optimizer.step(grads)
    return loss_val, float(batch.rewards.mean())


def make_optimizer(policy, cfg: TrainingConfig) -> AdamOptimizer:
    params = policy.params if policy.kind == "mlp" else policy.apply_grads_keys()
    return AdamOptimizer(
        params, lr=cfg.lr, lr_logz=cfg.lr_logz, patience=cfg.lr_patience
    )


def train(
    env: CodonDesignEnvironment,
    policy,
    scorer: ObjectiveScorer,
    cfg: TrainingConfig,
    seed_seq=None,
    optimizer: AdamOptimizer | None = None,
    on_iteration=None,
) -> TrainResult:
    """Run cfg.n_iterations of on-policy updates on one environment.

    Conditional mode draws fresh Dirichlet preference weights per iteration;
    otherwise cfg.fixed_weights is used throughout. A non-finite loss or
    gradient aborts with the last good parameters attached.
    """
    master = _as_seed_sequence(seed_seq if seed_seq is not None else cfg.seed)
    weight_rng = np.random.default_rng(master.spawn(1)[0])
    if optimizer is None:
        optimizer = make_optimizer(policy, cfg)
    trace: list[TraceRow] = []
    for iteration in range(cfg.n_iterations):
        if cfg.conditional:
            w = sample_weights(weight_rng, cfg.dirichlet_alpha)
        else:
            w = np.asarray(cfg.fixed_weights, dtype=np.float64)
        loss_val, mean_reward = training_step(
            policy, env, scorer, cfg, w, master.spawn(1)[0], optimizer, iteration
        )
        optimizer.update_plateau(loss_val)
        trace.append(TraceRow(iteration, loss_val, mean_reward, policy.log_z))
        if on_iteration is not None:
            on_iteration(trace[-1])
    return TrainResult(policy=policy, trace=trace, optimizer=optimizer)


def evaluate_mean_reward(env, policy, scorer, weights, n: int, seed) -> float:
    """Greedy-free evaluation: n rollouts at epsilon 0 under fixed weights."""
    batch = rollout_batch(env, policy, scorer, weights, n, 0.0, seed)
    return float(batch.rewards.mean())


def write_loss_trace(path, trace: list[TraceRow]) -> None:
    """CSV trace with full-precision floats; stable column order."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# codonflow loss trace v1\n")
        handle.write("iteration,loss,mean_reward,log_z\n")
        for row in trace:
            handle.write(f"{row.iteration},{row.loss!r},{row.mean_reward!r},{row.log_z!r}\n")

"""Forward-policy models over codon-assembly states, plus their optimizer.

Two interchangeable parameterizations:

* ``MlpPolicy`` encodes a state into 91 features (next-residue one-hot with a
  "done" slot, previous-codon one-hot with a "none" slot, position fraction,
  length scale, preference weights) and runs a tanh network with widths
  91 -> hidden -> hidden -> 66. Outputs 0..64 are action logits, output 65
  is the state's log-flow estimate. log Z is a separate scalar parameter.
* ``TabularPolicy`` stores one 66-entry row per visited (state prefix,
  quantized weights) pair; it can represent the reward-proportional policy
  exactly on small instances, which the tests exploit.

Masked entries of the categorical get a -1e9 additive sentinel before the
log-softmax, which makes their probability exactly zero in float64 while
keeping the computation differentiable through allowed entries.
"""

from __future__ import annotations

import json

import numpy as np

from . import autodiff as ad
from .environment import EXIT_ACTION, N_ACTIONS, CodonDesignEnvironment, State
from .exceptions import (
    ConfigurationError,
    InputError,
    InvariantViolationError,
    NumericFailureError,
)
from .genetic_code import MrnaSequence

N_AA_FEATURES = 21  # 20 residues + "done"
N_PREV_FEATURES = N_ACTIONS  # 64 codons + "none"
N_FEATURES = N_AA_FEATURES + N_PREV_FEATURES + 2 + 3  # 91
N_OUTPUTS = N_ACTIONS + 1  # 65 logits + log-flow

DONE_AA_SLOT = 20
NO_PREV_CODON = 64

HIDDEN_DEFAULT = 256
L_MAX_DEFAULT = 180
MASK_SENTINEL = -1e9

CHECKPOINT_VERSION = 1


def encode_state(env: CodonDesignEnvironment, state: State, weights, l_max: int = L_MAX_DEFAULT) -> np.ndarray:
    """Feature vector for one state; the batched encoder below is the hot path."""
    t = state.fill_count
    L = env.length
    feats = np.zeros(N_FEATURES)
    aa_slot = DONE_AA_SLOT if t == L else int(env.aa_indices[t])
    feats[aa_slot] = 1.0
    prev = NO_PREV_CODON if t == 0 else state.slots[t - 1]
    feats[N_AA_FEATURES + prev] = 1.0
    feats[86] = t / L
    feats[87] = min(1.0, L / l_max)
    feats[88:91] = np.asarray(weights, dtype=np.float64)
    return feats


def encode_step_batch(
    env: CodonDesignEnvironment, prev_codons: np.ndarray, t: int, weights: np.ndarray, l_max: int
) -> np.ndarray:
    """(B, 91) features for B states that share the same fill count t.

    prev_codons holds the codon filled at t-1 (NO_PREV_CODON at the root);
    weights is (3,) shared or (B, 3) per trajectory.
    """
    B = prev_codons.shape[0]
    L = env.length
    feats = np.zeros((B, N_FEATURES))
    aa_slot = DONE_AA_SLOT if t == L else int(env.aa_indices[t])
    feats[:, aa_slot] = 1.0
    feats[np.arange(B), N_AA_FEATURES + prev_codons] = 1.0
    feats[:, 86] = t / L
    feats[:, 87] = min(1.0, L / l_max)
    feats[:, 88:91] = np.asarray(weights, dtype=np.float64)
    return feats


def encode_trajectory_batch(
    env: CodonDesignEnvironment, actions: np.ndarray, weights: np.ndarray, l_max: int
) -> np.ndarray:
    """(B, L+1, 91) features for every state along B same-protein trajectories.

    actions is the (B, L) codon matrix; state t sees actions[:, t-1] as its
    previous codon.
    """
    B, L = actions.shape
    feats = np.zeros((B, L + 1, N_FEATURES))
    aa_cols = np.append(env.aa_indices, DONE_AA_SLOT)
    feats[:, np.arange(L + 1), aa_cols] = 1.0
    prev = np.concatenate([np.full((B, 1), NO_PREV_CODON, dtype=np.int64), actions], axis=1)
    b_idx = np.repeat(np.arange(B), L + 1)
    t_idx = np.tile(np.arange(L + 1), B)
    feats[b_idx, t_idx, N_AA_FEATURES + prev.reshape(-1)] = 1.0
    feats[:, :, 86] = np.arange(L + 1) / L
    feats[:, :, 87] = min(1.0, L / l_max)
    w = np.asarray(weights, dtype=np.float64)
    feats[:, :, 88:91] = w[:, None, :] if w.ndim == 2 else w
    return feats


def masked_log_probs(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Log-probabilities with disallowed entries forced to probability zero.

    Works on (..., 65) logits with a boolean mask of the same shape. A row
    with no allowed action is a structural bug, not a user error.
    """
    if mask.shape != logits.shape:
        raise InvariantViolationError(f"mask shape {mask.shape} != logits shape {logits.shape}")
    if not mask.any(axis=-1).all():
        raise InvariantViolationError("action mask with no allowed action")
    shifted = np.where(mask, logits, logits + MASK_SENTINEL)
    m = shifted.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted - m).sum(axis=-1, keepdims=True)) + m
    return shifted - lse


def sample_action(log_probs: np.ndarray, mask: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Draw one action; with probability epsilon uniform over the mask instead.

    Exploration never changes the log-probabilities recorded for training.
    """
    allowed = np.flatnonzero(mask)
    if allowed.size == 0:
        raise InvariantViolationError("cannot sample from an empty mask")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.choice(allowed))
    if not np.isfinite(log_probs[allowed]).all():
        raise NumericFailureError("non-finite action probabilities")
    probs = np.exp(log_probs[allowed])
    probs /= probs.sum()
    return int(allowed[rng.choice(allowed.size, p=probs)])


class MlpPolicy:
    """Weight-conditioned forward policy with a log-flow head and scalar log Z."""

    kind = "mlp"

    def __init__(self, hidden: int = HIDDEN_DEFAULT, l_max: int = L_MAX_DEFAULT, rng=None):
        if hidden < 1:
            raise ConfigurationError("hidden width must be >= 1")
        if l_max < 1:
            raise ConfigurationError("l_max must be >= 1")
        self.hidden = hidden
        self.l_max = l_max
        rng = rng if rng is not None else np.random.default_rng(0)
        # small final layer keeps the starting policy near uniform
        self.params: dict[str, np.ndarray] = {
            "w1": rng.normal(0.0, 1.0 / np.sqrt(N_FEATURES), size=(N_FEATURES, hidden)),
            "b1": np.zeros(hidden),
            "w2": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, hidden)),
            "b2": np.zeros(hidden),
            "w3": rng.normal(0.0, 0.01 / np.sqrt(hidden), size=(hidden, N_OUTPUTS)),
            "b3": np.zeros(N_OUTPUTS),
            "log_z": np.zeros(()),
        }

    @property
    def log_z(self) -> float:
        return float(self.params["log_z"])

    def forward(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(N, 91) -> logits (N, 65), log-flow (N,); plain numpy, no tape."""
        p = self.params
        h1 = np.tanh(features @ p["w1"] + p["b1"])
        h2 = np.tanh(h1 @ p["w2"] + p["b2"])
        out = h2 @ p["w3"] + p["b3"]
        return out[..., :N_ACTIONS], out[..., N_ACTIONS]

    def masked_step_log_probs(
        self, env: CodonDesignEnvironment, prev_codons: np.ndarray, t: int, weights: np.ndarray, prefixes=None
    ) -> np.ndarray:
        feats = encode_step_batch(env, prev_codons, t, weights, self.l_max)
        logits, _ = self.forward(feats)
        mask = np.broadcast_to(env.mask_matrix[t], logits.shape)
        return masked_log_probs(logits, mask)

    def leaf_tensors(self) -> dict[str, ad.Tensor]:
        return {name: ad.Tensor(arr, requires_grad=True) for name, arr in self.params.items()}

    def forward_tensors(self, leaves: dict[str, ad.Tensor], features: np.ndarray):
        """Tape-recorded forward pass; returns (logits, log_flow) tensors."""
        x = ad.constant(features)
        h1 = (x @ leaves["w1"] + leaves["b1"]).tanh()
        h2 = (h1 @ leaves["w2"] + leaves["b2"]).tanh()
        out = h2 @ leaves["w3"] + leaves["b3"]
        return out[:, :N_ACTIONS], out[:, N_ACTIONS]

    def trajectory_log_terms(self, env, actions: np.ndarray, weights: np.ndarray):
        """Tape-recorded per-step terms for a batch of complete trajectories.

        Returns (log_pf (B, L+1), log_flow (B, L+1), log_z scalar, leaves).
        The column L is the exit step, whose log-probability is exactly 0.
        """
        B, L = actions.shape
        feats = encode_trajectory_batch(env, actions, weights, self.l_max).reshape(-1, N_FEATURES)
        leaves = self.leaf_tensors()
        logits, flows = self.forward_tensors(leaves, feats)
        mask = np.broadcast_to(env.mask_matrix[None, :, :], (B, L + 1, N_ACTIONS)).reshape(
            -1, N_ACTIONS
        )
        offsets = np.where(mask, 0.0, MASK_SENTINEL)
        log_probs = ad.log_softmax(logits + ad.constant(offsets))
        full_actions = np.concatenate(
            [actions, np.full((B, 1), EXIT_ACTION, dtype=np.int64)], axis=1
        ).reshape(-1)
        log_pf = ad.gather_rows(log_probs, full_actions).reshape(B, L + 1)
        return log_pf, flows.reshape(B, L + 1), leaves["log_z"], leaves

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.params[k].reshape(-1) for k in sorted(self.params)])

    def from_vector(self, vec: np.ndarray) -> None:
        expected = sum(arr.size for arr in self.params.values())
        if vec.size != expected:
            raise InputError(f"parameter vector has {vec.size} entries, expected {expected}")
        offset = 0
        for k in sorted(self.params):
            size = self.params[k].size
            self.params[k] = vec[offset : offset + size].reshape(self.params[k].shape).copy()
            offset += size


def _weight_key(weights, decimals: int = 3) -> tuple:
    return tuple(round(float(x), decimals) for x in np.asarray(weights).reshape(-1))


class TabularPolicy:
    """One logits/flow row per (state prefix, quantized weights) pair."""

    kind = "tabular"

    def __init__(self, w_decimals: int = 3):
        self.table: dict[tuple, np.ndarray] = {}
        self.log_z_array = np.zeros(())
        self.w_decimals = w_decimals

    @property
    def log_z(self) -> float:
        return float(self.log_z_array)

    def state_key(self, prefix: tuple, weights) -> tuple:
        return (tuple(int(c) for c in prefix), _weight_key(weights, self.w_decimals))

    def row(self, prefix: tuple, weights) -> np.ndarray:
        key = self.state_key(prefix, weights)
        if key not in self.table:
            self.table[key] = np.zeros(N_OUTPUTS)
        return self.table[key]

    def masked_step_log_probs(self, env, prev_codons: np.ndarray, t: int, weights: np.ndarray, prefixes=None):
        if prefixes is None:
            raise InvariantViolationError("tabular policy needs explicit state prefixes")
        B = len(prefixes)
        logits = np.empty((B, N_ACTIONS))
        w = np.asarray(weights, dtype=np.float64)
        for b, prefix in enumerate(prefixes):
            wb = w[b] if w.ndim == 2 else w
            logits[b] = self.row(prefix, wb)[:N_ACTIONS]
        mask = np.broadcast_to(env.mask_matrix[t], logits.shape)
        return masked_log_probs(logits, mask)

    def trajectory_log_terms(self, env, actions: np.ndarray, weights: np.ndarray):
        """Same contract as MlpPolicy.trajectory_log_terms, built row by row."""
        B, L = actions.shape
        w = np.asarray(weights, dtype=np.float64)
        leaves: dict[str, ad.Tensor] = {}
        log_z = ad.Tensor(self.log_z_array, requires_grad=True)
        leaves["log_z"] = log_z
        tensor_cache: dict[tuple, ad.Tensor] = {}
        lp_rows = []
        flow_rows = []
        for b in range(B):
            wb = w[b] if w.ndim == 2 else w
            lp_steps = []
            flow_steps = []
            for t in range(L + 1):
                prefix = tuple(int(c) for c in actions[b, :t])
                key = self.state_key(prefix, wb)
                if key not in tensor_cache:
                    self.row(prefix, wb)  # materialize storage
                    tensor_cache[key] = ad.Tensor(self.table[key], requires_grad=True)
                node = tensor_cache[key]
                logits = node[0:N_ACTIONS]
                offsets = np.where(env.mask_matrix[t], 0.0, MASK_SENTINEL)
                lp = ad.log_softmax(logits + ad.constant(offsets))
                action = EXIT_ACTION if t == L else int(actions[b, t])
                lp_steps.append(ad.take(lp, np.array([action])))
                flow_steps.append(node[N_ACTIONS : N_ACTIONS + 1])
            lp_rows.append(ad.concat(lp_steps))
            flow_rows.append(ad.concat(flow_steps))
        for key, tensor in tensor_cache.items():
            leaves[key] = tensor
        log_pf = ad.concat(lp_rows).reshape(B, L + 1)
        flows = ad.concat(flow_rows).reshape(B, L + 1)
        return log_pf, flows, log_z, leaves

    def apply_grads_keys(self):
        """Parameter arrays addressed the way trajectory_log_terms names them."""
        params = {key: arr for key, arr in self.table.items()}
        params["log_z"] = self.log_z_array
        return params

    @classmethod
    def exact_proportional(cls, env: CodonDesignEnvironment, scorer, weights) -> "TabularPolicy":
        """Construct the reward-proportional policy analytically from exhaustive flows.

        Child logits are log child flows, so the masked softmax reproduces
        F(child)/F(state) exactly and the trajectory-balance loss is zero.
        """
        policy = cls()
        w = np.asarray(weights, dtype=np.float64)
        L = env.length

        flows: dict[tuple, float] = {}

        def flow(prefix: tuple) -> float:
            if prefix in flows:
                return flows[prefix]
            if len(prefix) == L:
                idx = np.asarray(prefix, dtype=np.int64)
                phi = scorer.phi_batch_indices(idx[None, :])
                value = float(scorer.reward_from_phi(phi, w)[0])
            else:
                value = sum(flow(prefix + (c,)) for c in env.syn_indices[len(prefix)])
            flows[prefix] = value
            return value

        total = flow(())
        policy.log_z_array = np.array(np.log(total))
        for prefix, value in flows.items():
            row = policy.row(prefix, w)
            row[N_ACTIONS] = np.log(value)
            if len(prefix) < L:
                for c in env.syn_indices[len(prefix)]:
                    row[c] = np.log(flows[prefix + (c,)])
        return policy


class AdamOptimizer:
    """Adam over named arrays with a separate rate for log Z and a plateau halver."""

    def __init__(
        self,
        params: dict,
        lr: float = 5e-3,
        lr_logz: float = 1e-1,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        patience: int = 10,
        factor: float = 0.5,
    ):
        self.params = params
        self.lr = lr
        self.lr_logz = lr_logz
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.patience = patience
        self.factor = factor
        self._m: dict = {}
        self._v: dict = {}
        self._t: dict = {}
        self.best_metric = np.inf
        self.stale_evals = 0

    def step(self, grads: dict) -> None:
        for key, g in grads.items():
            if key not in self.params:
                raise InvariantViolationError(f"gradient for unknown parameter {key!r}")
            g = np.asarray(g, dtype=np.float64)
            if key not in self._m:
                self._m[key] = np.zeros_like(self.params[key])
                self._v[key] = np.zeros_like(self.params[key])
                self._t[key] = 0
            self._t[key] += 1
            t = self._t[key]
            m = self._m[key] = self.beta1 * self._m[key] + (1 - self.beta1) * g
            v = self._v[key] = self.beta2 * self._v[key] + (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            rate = self.lr_logz if key == "log_z" else self.lr
            self.params[key] -= rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def update_plateau(self, metric: float) -> bool:
        """Track a minimized metric; halve both rates after `patience` stale calls."""
        if metric < self.best_metric - 1e-12:
            self.best_metric = metric
            self.stale_evals = 0
            return False
        self.stale_evals += 1
        if self.stale_evals >= self.patience:
            self.lr *= self.factor
            self.lr_logz *= self.factor
            self.stale_evals = 0
            return True
        return False

    def state_dict(self) -> dict:
        return {
            "lr": self.lr,
            "lr_logz": self.lr_logz,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "patience": self.patience,
            "factor": self.factor,
            "best_metric": None if np.isinf(self.best_metric) else self.best_metric,
            "stale_evals": self.stale_evals,
            "m": {str(k): v.tolist() for k, v in self._m.items()},
            "v": {str(k): v.tolist() for k, v in self._v.items()},
            "t": {str(k): v for k, v in self._t.items()},
        }


def save_checkpoint(path, policy: MlpPolicy, optimizer: AdamOptimizer | None, seed: int, extra: dict | None = None) -> None:
    """Deterministic JSON checkpoint: identical state always writes identical bytes."""
    if policy.kind != "mlp":
        raise ConfigurationError("only MLP policies are checkpointed")
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "kind": policy.kind,
        "hidden": policy.hidden,
        "l_max": policy.l_max,
        "seed": seed,
        "arrays": {k: v.tolist() for k, v in policy.params.items()},
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "extra": extra or {},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def load_checkpoint(path) -> tuple[MlpPolicy, dict]:
    """Rebuild the policy; returns (policy, payload) with optimizer state left raw."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise InputError(f"unsupported checkpoint version {version!r}")
    policy = MlpPolicy(hidden=payload["hidden"], l_max=payload["l_max"])
    for key in policy.params:
        arr = np.asarray(payload["arrays"][key], dtype=np.float64)
        if arr.shape != policy.params[key].shape:
            raise InputError(f"checkpoint array {key} has shape {arr.shape}")
        policy.params[key] = arr
    return policy, payload

"""Self-verification checks: masks, gradients, loss identities, sampler TV.

Each check returns a structured result with the measured values so the CLI
can emit a machine-readable report. The gradient check accepts an injectable
gradient function, which lets tests confirm the check actually catches a
wrong gradient (negative control).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .environment import CodonDesignEnvironment
from .exceptions import ConfigurationError
from .genetic_code import Protein, translate
from .objectives import ObjectiveScorer
from .oracle import empirical_counts, enumerate_design_space, tv_distance
from .policy import MlpPolicy, TabularPolicy
from .proteins import random_protein
from .training import (
    TrainingConfig,
    rollout_batch,
    subtb_loss_batch,
    tb_loss_batch,
    train,
)

TV_THRESHOLD_DEFAULT = 0.05
GRAD_REL_THRESHOLD_DEFAULT = 1e-4
FD_STEP_DEFAULT = 1e-5
SUBTB_REDUCTION_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": self.measured,
            "detail": self.detail,
        }


def verification_report(results: list[CheckResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }


# --- mask / validity ---------------------------------------------------------


def check_masks(seed=0, n_proteins: int = 10, n_rollouts: int = 40) -> CheckResult:
    """Structural mask properties plus end-to-end rollout validity."""
    rng = np.random.default_rng(seed)
    scorer = ObjectiveScorer()
    mask_violations = 0
    invalid_designs = 0
    total_rollouts = 0
    policy = MlpPolicy(hidden=16, l_max=40, rng=np.random.default_rng(seed))
    for p in range(n_proteins):
        protein = random_protein(rng, int(rng.integers(3, 26)))
        env = CodonDesignEnvironment(protein)
        table = protein.synonymous_index_table
        for t in range(len(protein)):
            mask = env.mask_matrix[t]
            if mask[:64].sum() != len(table[t]) or mask[64]:
                mask_violations += 1
        final = env.mask_matrix[len(protein)]
        if final[:64].any() or not final[64]:
            mask_violations += 1
        batch = rollout_batch(
            env, policy, scorer, np.array([0.3, 0.3, 0.4]), n_rollouts, 0.5, rng.integers(2**32)
        )
        total_rollouts += batch.size
        for design in batch.designs():
            if translate(design) != protein:
                invalid_designs += 1
    measured = {
        "proteins": n_proteins,
        "rollouts": total_rollouts,
        "mask_violations": mask_violations,
        "invalid_designs": invalid_designs,
    }
    return CheckResult(
        name="mask_properties",
        passed=mask_violations == 0 and invalid_designs == 0,
        measured=measured,
        detail="per-position masks match synonymous sets; every rollout decodes",
    )


# --- gradients ---------------------------------------------------------------


def _loss_tensor(policy, env, batch, loss_kind: str, lam: float = 0.9):
    if loss_kind == "tb":
        return tb_loss_batch(policy, env, batch)
    if loss_kind == "subtb":
        return subtb_loss_batch(policy, env, batch, lam=lam)
    raise ConfigurationError(f"unknown loss kind {loss_kind!r}")


def loss_value(policy, env, batch, loss_kind: str, lam: float = 0.9) -> float:
    loss_t, _ = _loss_tensor(policy, env, batch, loss_kind, lam)
    return float(loss_t.data)


def analytic_grad_vector(policy, env, batch, loss_kind: str, lam: float = 0.9) -> np.ndarray:
    """Gradient of the batch loss stacked in sorted-parameter order."""
    loss_t, leaves = _loss_tensor(policy, env, batch, loss_kind, lam)
    loss_t.backward()
    parts = []
    for key in sorted(policy.params):
        leaf = leaves[key]
        grad = leaf.grad if leaf.grad is not None else np.zeros_like(policy.params[key])
        parts.append(np.asarray(grad).reshape(-1))
    return np.concatenate(parts)


def finite_difference_grad(
    policy, env, batch, loss_kind: str, coords, step: float = FD_STEP_DEFAULT, lam: float = 0.9
) -> np.ndarray:
    """Central finite differences of the loss along the given coordinates."""
    base = policy.to_vector()
    out = np.empty(len(coords))
    try:
        for n, c in enumerate(coords):
            for sign, slot in ((+1, 0), (-1, 1)):
                shifted = base.copy()
                shifted[c] += sign * step
                policy.from_vector(shifted)
                value = loss_value(policy, env, batch, loss_kind, lam)
                if slot == 0:
                    plus = value
                else:
                    out[n] = (plus - value) / (2.0 * step)
    finally:
        policy.from_vector(base)
    return out


def check_gradients(
    seed=0,
    n_pairs: int = 20,
    coords_per_pair: int = 5,
    rel_threshold: float = GRAD_REL_THRESHOLD_DEFAULT,
    step: float = FD_STEP_DEFAULT,
    gradient_fn=None,
) -> CheckResult:
    """Analytic loss gradients against central finite differences.

    One "pair" is a random (policy parameters, rollout batch) combination;
    several random coordinates are probed per pair, alternating TB and SubTB.
    """
    if gradient_fn is None:
        gradient_fn = analytic_grad_vector
    rng = np.random.default_rng(seed)
    scorer = ObjectiveScorer()
    worst = 0.0
    checked = 0
    for pair in range(n_pairs):
        protein = random_protein(rng, int(rng.integers(2, 5)))
        env = CodonDesignEnvironment(protein)
        policy = MlpPolicy(hidden=6, l_max=8, rng=np.random.default_rng(rng.integers(2**32)))
        # spread the parameters away from the near-zero init so the loss
        # surface is not artificially flat
        vec = policy.to_vector()
        policy.from_vector(vec + 0.2 * rng.standard_normal(vec.size))
        w = rng.dirichlet((1.0, 1.0, 1.0))
        batch = rollout_batch(env, policy, scorer, w, 3, 0.3, rng.integers(2**32))
        loss_kind = "tb" if pair % 2 == 0 else "subtb"
        grad = gradient_fn(policy, env, batch, loss_kind)
        coords = rng.choice(grad.size, size=min(coords_per_pair, grad.size), replace=False)
        fd = finite_difference_grad(policy, env, batch, loss_kind, coords, step=step)
        for g, f in zip(grad[coords], fd):
            rel = abs(g - f) / max(abs(g), abs(f), 1e-8)
            worst = max(worst, rel)
            checked += 1
    return CheckResult(
        name="gradient_exactness",
        passed=worst <= rel_threshold,
        measured={
            "pairs": n_pairs,
            "coordinates": checked,
            "max_rel_error": float(worst),
            "threshold": rel_threshold,
            "fd_step": step,
        },
        detail="analytic TB/SubTB gradients vs central finite differences",
    )


# --- loss identity -----------------------------------------------------------


def check_subtb_reduction(seed=0, n_trajectories: int = 100, tol=SUBTB_REDUCTION_TOL) -> CheckResult:
    """Full-trajectory-only SubTB must equal TB to solver precision."""
    rng = np.random.default_rng(seed)
    scorer = ObjectiveScorer()
    worst = 0.0
    done = 0
    while done < n_trajectories:
        protein = random_protein(rng, int(rng.integers(2, 7)))
        env = CodonDesignEnvironment(protein)
        policy = MlpPolicy(hidden=8, l_max=8, rng=np.random.default_rng(rng.integers(2**32)))
        vec = policy.to_vector()
        policy.from_vector(vec + 0.3 * rng.standard_normal(vec.size))
        size = int(min(8, n_trajectories - done))
        batch = rollout_batch(
            env, policy, scorer, rng.dirichlet((1, 1, 1)), size, 0.2, rng.integers(2**32)
        )
        tb_val = loss_value(policy, env, batch, "tb")
        sub_t, _ = subtb_loss_batch(policy, env, batch, lam=0.9, only_full=True)
        worst = max(worst, abs(tb_val - float(sub_t.data)))
        done += size
    return CheckResult(
        name="subtb_reduces_to_tb",
        passed=worst <= tol,
        measured={"trajectories": done, "max_abs_diff": float(worst), "tolerance": tol},
        detail="lambda-SubTB restricted to the full trajectory equals TB",
    )


# --- sampler total variation -------------------------------------------------


def check_tv_small_space(
    seed=0,
    protein: str = "MFK",
    train_iterations: int = 800,
    n_samples: int = 20_000,
    threshold: float = TV_THRESHOLD_DEFAULT,
    weights=(0.3, 0.3, 0.4),
) -> CheckResult:
    """Short tabular TB run on a tiny space, then empirical-vs-exact TV."""
    target = Protein(protein)
    scorer = ObjectiveScorer()
    env = CodonDesignEnvironment(target)
    space = enumerate_design_space(target, scorer)
    policy = TabularPolicy()
    cfg = TrainingConfig(
        loss="tb",
        batch_size=32,
        n_iterations=train_iterations,
        epsilon=0.25,
        conditional=False,
        fixed_weights=tuple(weights),
        seed=seed,
    )
    train(env, policy, scorer, cfg)
    batch = rollout_batch(
        env, policy, scorer, np.asarray(weights), n_samples, 0.0, seed
    )
    tv = tv_distance(empirical_counts(batch.actions), space.distribution_map(weights))
    return CheckResult(
        name="sampler_tv",
        passed=tv < threshold,
        measured={
            "protein": protein,
            "designs": space.size,
            "train_iterations": train_iterations,
            "samples": n_samples,
            "tv": tv,
            "threshold": threshold,
        },
        detail="trained tabular sampler matches the exact reward-proportional law",
    )


def run_standard_checks(seed=0) -> list[CheckResult]:
    return [
        check_masks(seed=seed),
        check_gradients(seed=seed),
        check_subtb_reduction(seed=seed),
        check_tv_small_space(seed=seed),
    ]

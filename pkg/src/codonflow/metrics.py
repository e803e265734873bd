"""Sample-set quality metrics: uniqueness, top-K reward/diversity, Pareto front.

All metrics operate on scored designs for a single protein, so every sequence
has the same codon length and distances are plain codon-level Hamming.
Dominance is component-wise maximization of the normalized objective vector
(phi_gc, phi_mfe, phi_cai).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, InsufficientSamplesError, MetricUndefinedError
from .genetic_code import MrnaSequence, Protein, translate
from .objectives import ObjectiveScorer, ObjectiveVector, check_weights


@dataclass(frozen=True)
class ScoredDesign:
    """One generated sequence with its objective vector and scalarized reward."""

    sequence: MrnaSequence
    objectives: ObjectiveVector
    reward: float


@dataclass
class SampleSet:
    """Scored designs for one protein plus the generation metadata."""

    protein: Protein
    weights: np.ndarray
    items: list[ScoredDesign]
    seed: int | None = None

    def __post_init__(self):
        self.weights = check_weights(self.weights)
        if not self.items:
            raise InputError("a sample set must contain at least one design")
        for pos, item in enumerate(self.items):
            if translate(item.sequence) != self.protein:
                raise InputError(
                    f"sample {pos} does not encode the sample set's protein"
                )

    @classmethod
    def from_actions(
        cls,
        protein: Protein,
        actions: np.ndarray,
        scorer: ObjectiveScorer,
        weights,
        seed: int | None = None,
    ) -> "SampleSet":
        w = check_weights(weights)
        actions = np.asarray(actions, dtype=np.int64)
        items = []
        for row in actions:
            seq = MrnaSequence(tuple(int(c) for c in row))
            vec = scorer.objectives(seq)
            rew = float(scorer.reward_from_phi(vec.phi[None, :], w)[0])
            items.append(ScoredDesign(sequence=seq, objectives=vec, reward=rew))
        return cls(protein=protein, weights=w, items=items, seed=seed)

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class ParetoFront:
    """Non-dominated subset, ordered lexicographically by codon indices."""

    members: list[ScoredDesign] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.members)


def _items(samples) -> list[ScoredDesign]:
    items = samples.items if isinstance(samples, SampleSet) else list(samples)
    if not items:
        raise InputError("metric requires at least one sample")
    return items


def _distinct(items: list[ScoredDesign]) -> dict[tuple[int, ...], ScoredDesign]:
    """First occurrence per distinct codon sequence, keyed by codon indices."""
    seen: dict[tuple[int, ...], ScoredDesign] = {}
    for item in items:
        seen.setdefault(item.sequence.codon_indices, item)
    return seen


def uniqueness(samples) -> int:
    """Number of distinct codon sequences in the set."""
    return len(_distinct(_items(samples)))


def _top_sorted(items: list[ScoredDesign]) -> list[ScoredDesign]:
    """Deduplicated designs, reward descending, ties by codon order."""
    distinct = _distinct(items)
    return [
        distinct[key]
        for key in sorted(distinct, key=lambda k: (-distinct[k].reward, k))
    ]


def _check_k(k: int, available: int, minimum: int) -> None:
    if k < minimum:
        raise MetricUndefinedError(f"K must be at least {minimum}, got {k}")
    if k > available:
        raise InsufficientSamplesError(
            f"K={k} exceeds the {available} unique sample(s) available", available
        )


def topk_reward(samples, k: int) -> float:
    """Mean reward over the K best distinct designs."""
    ranked = _top_sorted(_items(samples))
    _check_k(k, len(ranked), minimum=1)
    return float(np.mean([item.reward for item in ranked[:k]]))


def topk_diversity(samples, k: int) -> float:
    """Mean pairwise codon Hamming distance among the K best distinct designs."""
    ranked = _top_sorted(_items(samples))
    _check_k(k, len(ranked), minimum=2)
    rows = np.array([item.sequence.codon_indices for item in ranked[:k]], dtype=np.int64)
    diffs = (rows[:, None, :] != rows[None, :, :]).sum(axis=2)
    return float(diffs.sum() / (k * (k - 1)))


def non_dominated_mask(phis: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not dominated under component-wise maximization.

    Rows are scanned in descending lexicographic order so any dominator of a
    row appears before it; each candidate is tested only against the current
    front, which stays small in practice.
    """
    phis = np.asarray(phis, dtype=np.float64)
    if phis.ndim != 2:
        raise InputError(f"expected a 2-D objective matrix, got shape {phis.shape}")
    n = phis.shape[0]
    order = np.lexsort(tuple(-phis[:, c] for c in reversed(range(phis.shape[1]))))
    keep = np.zeros(n, dtype=bool)
    front_rows: list[np.ndarray] = []
    for i in order:
        row = phis[i]
        dominated = any(
            (f >= row).all() and (f > row).any() for f in front_rows
        )
        if not dominated:
            keep[i] = True
            front_rows.append(row)
    return keep


def pareto_front(samples) -> ParetoFront:
    """Non-dominated distinct designs; equal objective vectors are all kept."""
    distinct = _distinct(_items(samples))
    keys = sorted(distinct)
    phis = np.array([distinct[key].objectives.phi for key in keys])
    keep = non_dominated_mask(phis)
    members = [distinct[key] for key, kept in zip(keys, keep) if kept]
    return ParetoFront(members=members)


def pareto_performance(samples) -> float:
    """Fraction of unique designs that sit on the Pareto front."""
    return pareto_front(samples).size / uniqueness(samples)


def metrics_report(samples, k: int) -> dict:
    """Summary dict with the fixed report keys; diversity is null when K < 2."""
    front = pareto_front(samples)
    n_unique = uniqueness(samples)
    return {
        "uniqueness": n_unique,
        "topk_reward": topk_reward(samples, k),
        "topk_diversity": topk_diversity(samples, k) if k >= 2 else None,
        "pareto_performance": front.size / n_unique,
        "front_size": front.size,
        "K": k,
    }

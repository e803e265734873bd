"""Exhaustive enumeration of small design spaces and exact target checks.

The enumeration is the ground truth the samplers are verified against: it
lists every synonymous codon sequence in lexicographic codon-index order,
scores each one, and exposes the exact reward-proportional distribution
R(x)/Z. Total-variation distance against empirical sample counts is the
headline verification metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .exceptions import EnumerationCapError, InputError
from .genetic_code import MrnaSequence, Protein, design_space_size
from .objectives import REWARD_FLOOR_DEFAULT, ObjectiveScorer, check_weights

ENUMERATION_CAP_DEFAULT = 1_000_000
_CHUNK = 8192


@dataclass
class DesignSpace:
    """Every design for one protein, with per-design normalized objectives."""

    protein: Protein
    actions: np.ndarray  # (N, L) codon indices, lexicographically ordered
    phis: np.ndarray  # (N, 3)
    reward_floor: float = REWARD_FLOOR_DEFAULT

    @property
    def size(self) -> int:
        return self.actions.shape[0]

    def keys(self) -> list[tuple[int, ...]]:
        return [tuple(int(c) for c in row) for row in self.actions]

    def designs(self) -> list[MrnaSequence]:
        return [MrnaSequence(tuple(int(c) for c in row)) for row in self.actions]

    def rewards(self, weights) -> np.ndarray:
        scorer_w = check_weights(weights)
        return np.minimum(self.phis @ scorer_w + self.reward_floor, 1.0)

    def partition(self, weights) -> float:
        """Z(w): total reward mass over the space."""
        return float(self.rewards(weights).sum())

    def distribution(self, weights) -> np.ndarray:
        """Exact target probabilities R(x|w)/Z(w), summing to 1."""
        r = self.rewards(weights)
        return r / r.sum()

    def distribution_map(self, weights) -> dict[tuple[int, ...], float]:
        return dict(zip(self.keys(), self.distribution(weights).tolist()))


def enumerate_design_space(
    protein: Protein,
    scorer: ObjectiveScorer | None = None,
    cap: int = ENUMERATION_CAP_DEFAULT,
) -> DesignSpace:
    """List and score the whole space; refuses oversized spaces by exact count."""
    size = design_space_size(protein)
    if size > cap:
        raise EnumerationCapError(size, cap)
    scorer = scorer if scorer is not None else ObjectiveScorer()
    L = len(protein)
    actions = np.empty((size, L), dtype=np.int64)
    for row, combo in enumerate(product(*protein.synonymous_index_table)):
        actions[row] = combo
    phis = np.empty((size, 3))
    for start in range(0, size, _CHUNK):
        block = actions[start : start + _CHUNK]
        phis[start : start + len(block)] = scorer.phi_batch_indices(block)
    return DesignSpace(
        protein=protein,
        actions=actions,
        phis=phis,
        reward_floor=scorer.config.reward_floor,
    )


ENUMERATION_CSV_HEADER = "sequence,gc_raw,mfe_pairs,cai,phi_gc,phi_mfe,phi_cai,reward,exact_prob"


def write_enumeration_csv(path, space: DesignSpace, scorer: ObjectiveScorer, weights) -> None:
    """Write one row per design, in enumeration order, with a versioned header."""
    probs = space.distribution(weights)
    rewards = space.rewards(weights)
    lines = ["# codonflow enumeration v1", ENUMERATION_CSV_HEADER]
    for row in range(space.size):
        seq = MrnaSequence(tuple(int(c) for c in space.actions[row]))
        vec = scorer.objectives(seq)
        lines.append(
            ",".join(
                [
                    seq.nucleotides,
                    repr(vec.gc_raw),
                    repr(vec.mfe_raw),
                    repr(vec.cai_raw),
                    repr(float(space.phis[row, 0])),
                    repr(float(space.phis[row, 1])),
                    repr(float(space.phis[row, 2])),
                    repr(float(rewards[row])),
                    repr(float(probs[row])),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def empirical_counts(action_rows: np.ndarray) -> dict[tuple[int, ...], int]:
    """Histogram sampled designs by codon-index tuple."""
    counts: dict[tuple[int, ...], int] = {}
    for row in np.asarray(action_rows, dtype=np.int64):
        key = tuple(int(c) for c in row)
        counts[key] = counts.get(key, 0) + 1
    return counts


def tv_distance(counts: dict, exact: dict) -> float:
    """Total variation between normalized counts and an exact distribution.

    Designs the sampler never produced contribute their full exact mass;
    sampled designs outside the exact support are a support violation.
    """
    extras = [k for k in counts if k not in exact]
    if extras:
        shown = ", ".join(repr(k) for k in extras[:5])
        raise InputError(
            f"{len(extras)} sampled design(s) outside the enumerated support: {shown}"
        )
    total = sum(counts.values())
    if total <= 0:
        raise InputError("empirical counts are empty")
    return 0.5 * sum(abs(counts.get(k, 0) / total - p) for k, p in exact.items())

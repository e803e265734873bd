"""Scoring one mRNA: codon-usage fitness, GC content, folding pair count.

The scorer maps a sequence to three objectives in [0, 1] and combines them
with a preference-weight vector into a single scalar reward.

Run:  python3 demos/02_objectives.py
"""

import numpy as np

from codonflow.genetic_code import MrnaSequence, translate
from codonflow.objectives import ObjectiveScorer, mfe_pair_count

scorer = ObjectiveScorer()

candidates = {
    "common codons": "AUGCUGAAGGAGCUG",
    "rare codons": "AUGCUAAAAGAACUA",
    "synonym swap": "AUGCUCAAGGAGCUC",
}

print("objective vectors (GC-band, folding, codon-usage):")
for label, nts in candidates.items():
    seq = MrnaSequence.from_nucleotides(nts)
    phi = scorer.phi(seq)
    print(
        f"  {label:14s} {nts} -> ({phi[0]:.3f}, {phi[1]:.3f}, {phi[2]:.3f})"
        f"  [protein {translate(seq).residues}]"
    )

weights = np.array([0.3, 0.3, 0.4])
print("\nscalar rewards under weights (0.3, 0.3, 0.4):")
for label, nts in candidates.items():
    seq = MrnaSequence.from_nucleotides(nts)
    print(f"  {label:14s} reward = {scorer.reward(seq, weights):.4f}")

hairpin = "GGGGAAAACCCC"
print(
    f"\nfolding oracle: {hairpin} can form {mfe_pair_count(hairpin)} "
    "non-crossing base pairs (Watson-Crick + GU wobble, loop >= 3)."
)

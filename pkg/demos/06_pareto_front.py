"""Multi-objective view: sample designs and extract the Pareto front.

Each sampled mRNA gets a three-component objective vector; the Pareto
front keeps exactly those designs no other design beats on every
component at once.

Run:  python3 demos/06_pareto_front.py        (~5 seconds)
"""

import numpy as np

from codonflow.environment import CodonDesignEnvironment
from codonflow.genetic_code import Protein
from codonflow.metrics import SampleSet, metrics_report, pareto_front
from codonflow.objectives import ObjectiveScorer
from codonflow.policy import MlpPolicy
from codonflow.training import rollout_batch

protein = Protein("MKTAYIALKERQ")
scorer = ObjectiveScorer()
env = CodonDesignEnvironment(protein)
weights = np.array([1 / 3, 1 / 3, 1 / 3])

policy = MlpPolicy(hidden=16, l_max=16, rng=np.random.default_rng(0))
batch = rollout_batch(env, policy, scorer, weights, 400, 1.0, 5)
samples = SampleSet.from_actions(protein, batch.actions, scorer, weights, seed=5)

front = pareto_front(samples)
print(f"sampled {len(samples.items)} designs for {protein.residues}; "
      f"Pareto front keeps {len(front.members)}:\n")
print("sequence" + " " * (3 * len(protein) - 6) + "GC     folding  usage")
for member in front.members[:10]:
    gc_score, fold_score, usage_score = member.objectives.phi
    print(
        f"{member.sequence.nucleotides}  {gc_score:.3f}  {fold_score:.3f}"
        f"  {usage_score:.3f}"
    )
if len(front.members) > 10:
    print(f"... and {len(front.members) - 10} more")

report = metrics_report(samples, k=50)
print("\nsummary metrics:")
for key, value in report.items():
    print(f"  {key}: {value:.4f}" if isinstance(value, float) else f"  {key}: {value}")

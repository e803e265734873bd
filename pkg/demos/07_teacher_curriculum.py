"""Curriculum machinery: the teacher watches per-task learning progress
and routes training effort toward whichever task is currently movable.

Part 1 feeds the teacher a synthetic stream where only one task improves
and shows its sampling distribution locking on.  Part 2 runs a real
two-task curriculum on toy proteins.

Run:  python3 demos/07_teacher_curriculum.py        (~40 seconds)
"""

import numpy as np

from codonflow.curriculum import CurriculumConfig, Teacher, curriculum_train
from codonflow.genetic_code import Protein
from codonflow.objectives import ObjectiveScorer
from codonflow.policy import MlpPolicy
from codonflow.proteins import ProteinPool, ProteinRecord, random_protein
from codonflow.training import TrainingConfig

# --- Part 1: teacher on a synthetic progress stream ----------------------
cfg = CurriculumConfig(
    tasks=((5, 10), (15, 20), (25, 30), (35, 40), (45, 50)),
    lpe="online",
    lpe_alpha=1.0,
    acp="lp",
    a2d="prop",
    floor_eps=0.01,
)
teacher = Teacher(cfg)
print("teacher probabilities as task 2 alone improves (+0.1/round):")
metrics = np.zeros(5)
for round_index in range(1, 4):
    metrics[2] = 0.1 * round_index
    teacher.observe(metrics)
    probs = ", ".join(f"{p:.3f}" for p in teacher.p)
    print(f"  round {round_index}: P = [{probs}]")

# --- Part 2: real two-task curriculum ------------------------------------
print("\ntwo-task curriculum on toy proteins (short 3-5 aa, long 8-12 aa):")
rng = np.random.default_rng(3)
pools = [
    ProteinPool([ProteinRecord("short", random_protein(rng, 4))]),
    ProteinPool([ProteinRecord("long", random_protein(rng, 10))]),
]
run_cfg = CurriculumConfig(
    tasks=((3, 5), (8, 12)),
    n_iterations=8,
    eval_every=1,
    train_steps_per_task=6,
    lpe="online",
    lpe_alpha=0.35,
    acp="lp",
    a2d="greedy_prop",
    a2d_eps=0.15,
    floor_eps=0.01,
    w_eval=(0.0, 1.0, 0.0),
    n_eval=512,
    fixed_eval_protein=True,
)
train_cfg = TrainingConfig(
    loss="subtb",
    batch_size=16,
    epsilon=0.3,
    conditional=False,
    fixed_weights=(0.0, 1.0, 0.0),
    seed=3,
    lr=0.008,
)
scorer = ObjectiveScorer()
policy = MlpPolicy(hidden=32, l_max=12, rng=np.random.default_rng(3))
result = curriculum_train(
    pools, policy, scorer, run_cfg, train_cfg, schedule="curriculum", seed=3
)
print("  round  mean-reward (aggregate over tasks)")
for i, value in enumerate(result.aggregate, start=1):
    print(f"  {i:5d}  {value:.4f}")
print("\nteacher trace (last round):")
for row in result.teacher.trace[-2:]:
    print(
        f"  task {row.task_id}: metric {row.m:.4f}, progress {row.lp:+.4f}, "
        f"P = {row.p:.3f}"
    )

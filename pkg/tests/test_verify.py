"""Verification harness: checks pass on a healthy build, catch injected bugs."""

import json

import numpy as np
import pytest

from codonflow.environment import CodonDesignEnvironment
from codonflow.exceptions import ConfigurationError
from codonflow.genetic_code import Protein
from codonflow.objectives import ObjectiveScorer
from codonflow.policy import MlpPolicy
from codonflow.training import rollout_batch
from codonflow.verify import (
    analytic_grad_vector,
    check_gradients,
    check_masks,
    check_subtb_reduction,
    check_tv_small_space,
    finite_difference_grad,
    loss_value,
    verification_report,
)


def test_mask_check_passes():
    result = check_masks(seed=3, n_proteins=4, n_rollouts=16)
    assert result.passed
    assert result.measured["mask_violations"] == 0
    assert result.measured["invalid_designs"] == 0


def test_gradient_check_passes():
    result = check_gradients(seed=1, n_pairs=6)
    assert result.passed
    assert result.measured["max_rel_error"] <= 1e-4


def test_gradient_check_catches_injected_bug():
    def corrupted(policy, env, batch, loss_kind):
        return 1.01 * analytic_grad_vector(policy, env, batch, loss_kind)

    result = check_gradients(seed=1, n_pairs=4, gradient_fn=corrupted)
    assert not result.passed
    assert result.measured["max_rel_error"] > 1e-4


def test_subtb_reduction_check():
    result = check_subtb_reduction(seed=2, n_trajectories=24)
    assert result.passed
    assert result.measured["max_abs_diff"] <= 1e-12


def test_tv_check_small_space():
    result = check_tv_small_space(seed=0, train_iterations=600, n_samples=8000)
    assert result.passed
    assert 0.0 <= result.measured["tv"] < 0.05
    assert result.measured["designs"] == 4


def test_report_serializes_to_json():
    results = [check_masks(seed=0, n_proteins=2, n_rollouts=8)]
    report = verification_report(results)
    text = json.dumps(report)
    parsed = json.loads(text)
    assert parsed["passed"] is True
    assert parsed["checks"][0]["name"] == "mask_properties"


def test_loss_value_rejects_unknown_kind():
    env = CodonDesignEnvironment(Protein("MF"))
    policy = MlpPolicy(hidden=4, l_max=4, rng=np.random.default_rng(0))
    batch = rollout_batch(env, policy, ObjectiveScorer(), np.array([0.3, 0.3, 0.4]), 2, 0.0, 0)
    with pytest.raises(ConfigurationError):
        loss_value(policy, env, batch, "huber")


def test_finite_difference_restores_parameters():
    env = CodonDesignEnvironment(Protein("MF"))
    policy = MlpPolicy(hidden=4, l_max=4, rng=np.random.default_rng(0))
    batch = rollout_batch(env, policy, ObjectiveScorer(), np.array([0.3, 0.3, 0.4]), 2, 0.0, 0)
    before = policy.to_vector()
    finite_difference_grad(policy, env, batch, "tb", coords=[0, 5, 11])
    np.testing.assert_array_equal(policy.to_vector(), before)

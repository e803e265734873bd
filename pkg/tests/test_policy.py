import json
from itertools import product

import numpy as np
import pytest

from codonflow import policy as pol
from codonflow.environment import EXIT_ACTION, CodonDesignEnvironment
from codonflow.exceptions import ConfigurationError, InputError, InvariantViolationError
from codonflow.genetic_code import Protein, codon_index
from codonflow.objectives import ObjectiveScorer

W_DEFAULT = np.array([0.3, 0.3, 0.4])


def make_env(residues="MFK"):
    return CodonDesignEnvironment(Protein(residues))


def test_feature_layout():
    env = make_env("MFK")
    s0 = env.initial_state()
    f = pol.encode_state(env, s0, W_DEFAULT)
    assert f.shape == (pol.N_FEATURES,)
    # next residue M at slot index of 'M'
    from codonflow.genetic_code import AA_INDEX

    assert f[AA_INDEX["M"]] == 1.0
    assert f[:21].sum() == 1.0
    # previous codon is "none"
    assert f[21 + pol.NO_PREV_CODON] == 1.0
    assert f[21:86].sum() == 1.0
    assert f[86] == 0.0  # position fraction
    assert f[87] == pytest.approx(3 / pol.L_MAX_DEFAULT)
    assert np.allclose(f[88:91], W_DEFAULT)


def test_feature_done_slot_and_prev_codon():
    env = make_env("MF")
    s1 = env.step(env.initial_state(), codon_index("AUG"))
    s2 = env.step(s1, codon_index("UUU"))
    f = pol.encode_state(env, s2, W_DEFAULT)
    assert f[pol.DONE_AA_SLOT] == 1.0
    assert f[21 + codon_index("UUU")] == 1.0
    assert f[86] == 1.0


def test_encode_trajectory_batch_matches_single_state():
    env = make_env("MLS")
    rng = np.random.default_rng(0)
    actions = np.array(
        [[rng.choice(env.syn_indices[t]) for t in range(env.length)] for _ in range(5)],
        dtype=np.int64,
    )
    feats = pol.encode_trajectory_batch(env, actions, W_DEFAULT, pol.L_MAX_DEFAULT)
    assert feats.shape == (5, env.length + 1, pol.N_FEATURES)
    for b in range(5):
        state = env.initial_state()
        for t in range(env.length + 1):
            single = pol.encode_state(env, state, W_DEFAULT)
            assert np.array_equal(feats[b, t], single)
            if t < env.length:
                state = env.step(state, int(actions[b, t]))


def test_encode_per_trajectory_weights():
    env = make_env("MF")
    actions = np.array([[14, 63], [14, 61]], dtype=np.int64)
    w = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]])
    feats = pol.encode_trajectory_batch(env, actions, w, 180)
    assert np.allclose(feats[0, :, 88:91], [1.0, 0.0, 0.0])
    assert np.allclose(feats[1, :, 88:91], [0.0, 0.5, 0.5])


def test_masked_log_probs_zero_for_disallowed():
    logits = np.array([2.0, -1.0, 0.5, 0.0])
    mask = np.array([True, False, True, False])
    lp = pol.masked_log_probs(logits, mask)
    probs = np.exp(lp)
    assert probs[1] == 0.0 and probs[3] == 0.0
    assert probs[1] <= 1e-30 and probs[3] <= 1e-30
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    # allowed entries renormalize among themselves
    expect = np.exp([2.0, 0.5])
    expect = expect / expect.sum()
    assert np.allclose(probs[[0, 2]], expect)


def test_masked_log_probs_all_false_raises():
    with pytest.raises(InvariantViolationError):
        pol.masked_log_probs(np.zeros(4), np.zeros(4, dtype=bool))
    with pytest.raises(InvariantViolationError):
        pol.masked_log_probs(np.zeros((2, 4)), np.array([[True] * 4, [False] * 4]))


def test_sample_action_respects_mask():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=65)
    mask = np.zeros(65, dtype=bool)
    mask[[3, 10, 40]] = True
    lp = pol.masked_log_probs(logits, mask)
    for eps in (0.0, 0.5, 1.0):
        draws = {pol.sample_action(lp, mask, eps, rng) for _ in range(300)}
        assert draws <= {3, 10, 40}


def test_sample_action_matches_distribution():
    rng = np.random.default_rng(2)
    logits = np.array([1.0, 0.0, -1.0])
    mask = np.ones(3, dtype=bool)
    lp = pol.masked_log_probs(logits, mask)
    counts = np.zeros(3)
    n = 20000
    for _ in range(n):
        counts[pol.sample_action(lp, mask, 0.0, rng)] += 1
    assert np.abs(counts / n - np.exp(lp)).max() < 0.02


def test_mlp_policy_shapes_and_near_uniform_init():
    policy = pol.MlpPolicy(hidden=32, rng=np.random.default_rng(0))
    feats = np.zeros((7, pol.N_FEATURES))
    logits, flow = policy.forward(feats)
    assert logits.shape == (7, 65)
    assert flow.shape == (7,)
    assert np.abs(logits).max() < 0.2  # small output init keeps start near uniform
    assert policy.log_z == 0.0


def test_mlp_trajectory_log_terms_consistency():
    env = make_env("MLK")
    policy = pol.MlpPolicy(hidden=24, rng=np.random.default_rng(3))
    rng = np.random.default_rng(4)
    actions = np.array(
        [[rng.choice(env.syn_indices[t]) for t in range(env.length)] for _ in range(6)],
        dtype=np.int64,
    )
    lp, flows, log_z, leaves = policy.trajectory_log_terms(env, actions, W_DEFAULT)
    assert lp.data.shape == (6, env.length + 1)
    assert np.allclose(lp.data[:, -1], 0.0)  # exit is forced, log-prob exactly 0
    # stepwise recomputation agrees
    for t in range(env.length):
        prev = np.full(6, pol.NO_PREV_CODON, dtype=np.int64) if t == 0 else actions[:, t - 1]
        step_lp = policy.masked_step_log_probs(env, prev, t, W_DEFAULT)
        picked = step_lp[np.arange(6), actions[:, t]]
        assert np.allclose(picked, lp.data[:, t])


def test_vector_round_trip():
    policy = pol.MlpPolicy(hidden=8, rng=np.random.default_rng(5))
    vec = policy.to_vector()
    clone = pol.MlpPolicy(hidden=8, rng=np.random.default_rng(99))
    clone.from_vector(vec)
    for key in policy.params:
        assert np.array_equal(policy.params[key], clone.params[key])
    with pytest.raises(InputError):
        clone.from_vector(vec[:-1])


def test_tabular_exact_proportional_zero_tb_residual():
    env = make_env("SI")  # 6 * 3 = 18 designs
    scorer = ObjectiveScorer()
    policy = pol.TabularPolicy.exact_proportional(env, scorer, W_DEFAULT)
    designs = np.array(list(product(*env.syn_indices)), dtype=np.int64)
    lp, flows, log_z, _ = policy.trajectory_log_terms(env, designs, W_DEFAULT)
    rewards = scorer.reward_from_phi(scorer.phi_batch_indices(designs), W_DEFAULT)
    resid = lp.data.sum(axis=1) + log_z.data - np.log(rewards)
    assert np.abs(resid).max() < 1e-12
    probs = np.exp(lp.data.sum(axis=1))
    assert np.allclose(probs, rewards / rewards.sum(), atol=1e-12)
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_tabular_weight_quantization():
    policy = pol.TabularPolicy(w_decimals=2)
    k1 = policy.state_key((14,), [0.331, 0.329, 0.34])
    k2 = policy.state_key((14,), [0.330, 0.330, 0.34])
    assert k1 == k2
    k3 = policy.state_key((14,), [0.4, 0.3, 0.3])
    assert k1 != k3


def test_adam_minimizes_quadratic():
    params = {"x": np.array([5.0, -3.0]), "log_z": np.array(4.0)}
    opt = pol.AdamOptimizer(params, lr=0.05, lr_logz=0.2)
    for _ in range(400):
        grads = {"x": 2 * params["x"], "log_z": 2 * params["log_z"]}
        opt.step(grads)
    assert np.abs(params["x"]).max() < 1e-2
    assert abs(params["log_z"]) < 1e-2


def test_adam_separate_rates():
    params = {"x": np.array([1.0]), "log_z": np.array(1.0)}
    opt = pol.AdamOptimizer(params, lr=1e-3, lr_logz=1e-1)
    opt.step({"x": np.array([1.0]), "log_z": np.array(1.0)})
    # first Adam step size equals the learning rate (bias-corrected)
    assert params["x"][0] == pytest.approx(1.0 - 1e-3, abs=1e-6)
    assert float(params["log_z"]) == pytest.approx(1.0 - 1e-1, abs=1e-4)


def test_plateau_halves_after_patience():
    params = {"x": np.array([0.0])}
    opt = pol.AdamOptimizer(params, lr=0.4, lr_logz=0.8, patience=10)
    opt.update_plateau(1.0)
    for i in range(9):
        assert not opt.update_plateau(1.0)
    assert opt.update_plateau(1.0)  # 10th stale evaluation halves
    assert opt.lr == pytest.approx(0.2)
    assert opt.lr_logz == pytest.approx(0.4)
    # an improvement resets the stale counter
    opt.update_plateau(0.5)
    assert opt.stale_evals == 0


def test_checkpoint_round_trip_and_determinism(tmp_path):
    policy = pol.MlpPolicy(hidden=6, rng=np.random.default_rng(8))
    opt = pol.AdamOptimizer(policy.params, lr=0.01)
    opt.step({"w1": np.ones_like(policy.params["w1"])})
    p1 = tmp_path / "a.ckpt"
    p2 = tmp_path / "b.ckpt"
    pol.save_checkpoint(p1, policy, opt, seed=42, extra={"note": "test"})
    pol.save_checkpoint(p2, policy, opt, seed=42, extra={"note": "test"})
    assert p1.read_bytes() == p2.read_bytes()
    loaded, payload = pol.load_checkpoint(p1)
    for key in policy.params:
        assert np.array_equal(loaded.params[key], policy.params[key])
    assert payload["seed"] == 42
    assert payload["extra"]["note"] == "test"


def test_checkpoint_rejects_unknown_version(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_text(json.dumps({"format_version": 99}))
    with pytest.raises(InputError):
        pol.load_checkpoint(path)


def test_policy_config_validation():
    with pytest.raises(ConfigurationError):
        pol.MlpPolicy(hidden=0)
    with pytest.raises(ConfigurationError):
        pol.MlpPolicy(l_max=0)

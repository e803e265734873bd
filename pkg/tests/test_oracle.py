"""Exact-enumeration oracle: ordering, probabilities, cap refusal, TV metric."""

import csv
import math

import numpy as np
import pytest

from codonflow.environment import CodonDesignEnvironment
from codonflow.exceptions import EnumerationCapError, InputError
from codonflow.genetic_code import MrnaSequence, Protein, translate
from codonflow.objectives import ObjectiveScorer
from codonflow.oracle import (
    DesignSpace,
    empirical_counts,
    enumerate_design_space,
    tv_distance,
    write_enumeration_csv,
)
from codonflow.policy import TabularPolicy
from codonflow.training import rollout_batch

W_DEFAULT = (0.3, 0.3, 0.4)


@pytest.fixture(scope="module")
def scorer():
    return ObjectiveScorer()


@pytest.fixture(scope="module")
def mfk_space(scorer):
    return enumerate_design_space(Protein("MFK"), scorer)


def test_mfk_designs_and_order(mfk_space):
    seqs = [d.nucleotides for d in mfk_space.designs()]
    assert seqs == ["AUGUUCAAA", "AUGUUCAAG", "AUGUUUAAA", "AUGUUUAAG"]
    assert mfk_space.size == 4


def test_designs_translate_back(scorer):
    protein = Protein("MLWH")
    space = enumerate_design_space(protein, scorer)
    assert space.size == 1 * 6 * 1 * 2
    for design in space.designs():
        assert translate(design) == protein


def test_probabilities_sum_to_one_and_match_rewards(mfk_space, scorer):
    probs = mfk_space.distribution(W_DEFAULT)
    assert probs.shape == (4,)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    rewards = mfk_space.rewards(W_DEFAULT)
    z = mfk_space.partition(W_DEFAULT)
    assert z == pytest.approx(rewards.sum())
    np.testing.assert_allclose(probs, rewards / z, rtol=0, atol=1e-15)
    for row, design in enumerate(mfk_space.designs()):
        assert rewards[row] == pytest.approx(scorer.reward(design, W_DEFAULT), abs=1e-15)


def test_phis_are_weight_independent(mfk_space):
    d1 = mfk_space.distribution((1.0, 0.0, 0.0))
    d2 = mfk_space.distribution((0.0, 0.0, 1.0))
    assert d1.sum() == pytest.approx(1.0)
    assert d2.sum() == pytest.approx(1.0)
    assert not np.allclose(d1, d2)
    assert list(mfk_space.distribution_map(W_DEFAULT)) == mfk_space.keys()


def test_cap_refusal_reports_exact_size():
    protein = Protein("LLLLLLLL")  # 6^8 = 1_679_616 designs
    with pytest.raises(EnumerationCapError) as err:
        enumerate_design_space(protein, cap=1_000_000)
    assert err.value.size == 6**8
    assert err.value.cap == 1_000_000
    assert "1679616" in str(err.value)


def test_cap_boundary_is_inclusive(scorer):
    protein = Protein("MLL")  # 36 designs
    space = enumerate_design_space(protein, scorer, cap=36)
    assert space.size == 36
    with pytest.raises(EnumerationCapError):
        enumerate_design_space(protein, scorer, cap=35)


def test_empirical_counts_histogram():
    rows = np.array([[14, 61, 0], [14, 61, 0], [14, 63, 2]])
    counts = empirical_counts(rows)
    assert counts == {(14, 61, 0): 2, (14, 63, 2): 1}


def test_tv_identical_is_zero():
    exact = {(0,): 0.25, (1,): 0.75}
    counts = {(0,): 25, (1,): 75}
    assert tv_distance(counts, exact) == pytest.approx(0.0, abs=1e-15)


def test_tv_disjoint_point_masses_is_one():
    exact = {(0,): 0.0, (1,): 1.0}
    counts = {(0,): 17}
    assert tv_distance(counts, exact) == pytest.approx(1.0)


def test_tv_rejects_designs_outside_support():
    exact = {(0,): 1.0}
    with pytest.raises(InputError):
        tv_distance({(0,): 1, (9,): 1}, exact)
    with pytest.raises(InputError):
        tv_distance({}, exact)


def test_tv_symmetry_and_triangle():
    support = [(0,), (1,), (2,)]
    p = {support[0]: 0.5, support[1]: 0.5, support[2]: 0.0}
    q = {support[0]: 0.5, support[1]: 0.25, support[2]: 0.25}
    r = {support[0]: 0.2, support[1]: 0.2, support[2]: 0.6}

    def as_counts(dist, scale=10_000):
        return {k: round(v * scale) for k, v in dist.items() if v > 0}

    tv_pq = tv_distance(as_counts(p), q)
    tv_qp = tv_distance(as_counts(q), p)
    assert tv_pq == pytest.approx(tv_qp, abs=1e-12)
    assert tv_pq == pytest.approx(0.25)
    tv_pr = tv_distance(as_counts(p), r)
    tv_qr = tv_distance(as_counts(q), r)
    assert tv_pr <= tv_pq + tv_qr + 1e-12


def test_exact_policy_samples_match_distribution(mfk_space, scorer):
    env = CodonDesignEnvironment(Protein("MFK"))
    policy = TabularPolicy.exact_proportional(env, scorer, W_DEFAULT)
    batch = rollout_batch(
        env, policy, scorer, np.asarray(W_DEFAULT), batch_size=4000, epsilon=0.0, seed=7
    )
    tv = tv_distance(empirical_counts(batch.actions), mfk_space.distribution_map(W_DEFAULT))
    assert tv < 0.05


def test_enumeration_csv_golden_shape(tmp_path, mfk_space, scorer):
    path = tmp_path / "mfk.csv"
    write_enumeration_csv(path, mfk_space, scorer, W_DEFAULT)
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == "# codonflow enumeration v1"
    assert lines[1] == "sequence,gc_raw,mfe_pairs,cai,phi_gc,phi_mfe,phi_cai,reward,exact_prob"
    rows = list(csv.DictReader(lines[1:]))
    assert [r["sequence"] for r in rows] == [d.nucleotides for d in mfk_space.designs()]
    assert math.fsum(float(r["exact_prob"]) for r in rows) == pytest.approx(1.0, abs=1e-9)
    first = scorer.objectives(MrnaSequence.from_nucleotides(rows[0]["sequence"]))
    assert float(rows[0]["gc_raw"]) == pytest.approx(first.gc_raw, abs=1e-15)
    assert float(rows[0]["cai"]) == pytest.approx(first.cai_raw, abs=1e-15)

    path2 = tmp_path / "mfk2.csv"
    write_enumeration_csv(path2, mfk_space, scorer, W_DEFAULT)
    assert path2.read_bytes() == path.read_bytes()


def test_space_dataclass_fields(mfk_space):
    assert isinstance(mfk_space, DesignSpace)
    assert mfk_space.actions.shape == (4, 3)
    assert mfk_space.phis.shape == (4, 3)
    assert mfk_space.keys()[0] == (14, 61, 0)

import math

import numpy as np
import pytest

from codonflow import genetic_code as gc
from codonflow.exceptions import InputError, InvalidDesignError


def test_codon_index_round_trip_all_64():
    for i in range(64):
        t = gc.codon_triplet(i)
        assert gc.codon_index(t) == i
        assert gc.Codon(i).triplet == t
    assert len({gc.codon_triplet(i) for i in range(64)}) == 64


def test_codon_index_formula():
    # A=0 C=1 G=2 U=3, index = 16*b1 + 4*b2 + b3
    assert gc.codon_index("AAA") == 0
    assert gc.codon_index("AUG") == 16 * 0 + 4 * 3 + 2
    assert gc.codon_index("UUU") == 63


def test_codon_rejects_bad_input():
    with pytest.raises(InputError):
        gc.codon_index("AXG")
    with pytest.raises(InputError):
        gc.codon_index("AU")
    with pytest.raises(InputError):
        gc.Codon(64)
    with pytest.raises(InputError):
        gc.Codon(-1)


def test_genetic_code_partition():
    # every codon encodes exactly one amino acid or STOP; sets are disjoint
    seen = []
    for aa in gc.AMINO_ACIDS:
        seen.extend(gc.SYNONYMOUS_INDICES[aa])
    seen.extend(gc.STOP_CODON_INDICES)
    assert sorted(seen) == list(range(64))


def test_synonymous_set_sizes():
    sizes = sorted(len(gc.SYNONYMOUS_INDICES[aa]) for aa in gc.AMINO_ACIDS)
    assert sizes == [1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 3, 4, 4, 4, 4, 4, 6, 6, 6]
    assert set(sizes) <= {1, 2, 3, 4, 6}


def test_known_synonymous_sets():
    assert [c.triplet for c in gc.synonymous_codons("M")] == ["AUG"]
    assert [c.triplet for c in gc.synonymous_codons("W")] == ["UGG"]
    leu = {c.triplet for c in gc.synonymous_codons("L")}
    assert leu == {"UUA", "UUG", "CUU", "CUC", "CUA", "CUG"}
    ser = {c.triplet for c in gc.synonymous_codons("S")}
    assert ser == {"UCU", "UCC", "UCA", "UCG", "AGU", "AGC"}
    ile = {c.triplet for c in gc.synonymous_codons("I")}
    assert ile == {"AUU", "AUC", "AUA"}


def test_synonymous_sets_sorted_by_index():
    for aa in gc.AMINO_ACIDS:
        idx = gc.SYNONYMOUS_INDICES[aa]
        assert list(idx) == sorted(idx)


def test_stop_codons():
    assert {gc.codon_triplet(i) for i in gc.STOP_CODON_INDICES} == {"UAA", "UAG", "UGA"}
    with pytest.raises(InputError):
        gc.synonymous_codons("*")


def test_translate_codon_string():
    seq = gc.MrnaSequence.from_nucleotides("AUGCUGGGC")
    assert gc.translate(seq).residues == "MLG"


def test_translate_rejects_stop_inside():
    seq = gc.MrnaSequence.from_nucleotides("AUGUAAGGC")
    with pytest.raises(InvalidDesignError):
        gc.translate(seq)


def test_mrna_from_nucleotides_accepts_dna_t():
    seq = gc.MrnaSequence.from_nucleotides("ATGTTT")
    assert seq.nucleotides == "AUGUUU"
    with pytest.raises(InputError):
        gc.MrnaSequence.from_nucleotides("AUGC")
    with pytest.raises(InputError):
        gc.MrnaSequence.from_nucleotides("")


def test_protein_validation():
    p = gc.Protein("MFK")
    assert len(p) == 3
    with pytest.raises(InputError):
        gc.Protein("MFX")
    with pytest.raises(InputError):
        gc.Protein("")
    with pytest.raises(InputError):
        gc.Protein("MF*")


def test_design_space_size_small():
    assert gc.design_space_size(gc.Protein("MFK")) == 4  # 1 * 2 * 2
    assert gc.design_space_size(gc.Protein("LL")) == 36
    assert gc.design_space_size(gc.Protein("M")) == 1
    assert gc.design_space_size(gc.Protein("SI")) == 18


def test_design_space_log10_matches_exact_product():
    rng = np.random.default_rng(7)
    for _ in range(20):
        residues = "".join(rng.choice(list(gc.AMINO_ACIDS), size=12))
        p = gc.Protein(residues)
        assert gc.design_space_log10(p) == pytest.approx(
            math.log10(gc.design_space_size(p)), abs=1e-9
        )


def test_gc_count_table():
    assert gc.CODON_GC_COUNT[gc.codon_index("GGG")] == 3
    assert gc.CODON_GC_COUNT[gc.codon_index("AUA")] == 0
    assert gc.CODON_GC_COUNT[gc.codon_index("AUG")] == 1
    assert gc.CODON_BASES.shape == (64, 3)


def test_base_ints_layout():
    seq = gc.MrnaSequence.from_nucleotides("AUGGGC")
    expected = [gc.BASE_INDEX[b] for b in "AUGGGC"]
    assert seq.base_ints().tolist() == expected

"""Protein ingestion: FASTA/CSV parsing, pools, and the bundled fixture."""

import numpy as np
import pytest

from codonflow.exceptions import ConfigurationError, InputError
from codonflow.genetic_code import Protein, design_space_log10
from codonflow.proteins import (
    ProteinPool,
    ProteinRecord,
    bundled_demo_pool,
    load_csv,
    load_fasta,
    load_proteins,
    random_pool,
    random_protein,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_fasta_two_records(tmp_path):
    path = write(
        tmp_path,
        "two.fasta",
        ">alpha first protein\nMFK\n>beta\nML\nWH\n",
    )
    pool = load_fasta(path)
    assert len(pool) == 2
    assert pool[0].name == "alpha first protein"
    assert pool[0].protein == Protein("MFK")
    assert pool[1].protein == Protein("MLWH")  # multi-line sequence concatenated


def test_fasta_blank_lines_tolerated(tmp_path):
    path = write(tmp_path, "gap.fasta", "\n>only\n\nMF\nK\n\n")
    pool = load_fasta(path)
    assert pool[0].protein == Protein("MFK")


def test_fasta_invalid_residue_names_letter_and_line(tmp_path):
    path = write(tmp_path, "bad.fasta", ">x\nMBK\n")
    with pytest.raises(InputError) as err:
        load_fasta(path)
    msg = str(err.value)
    assert "'B'" in msg and ":1" in msg


def test_fasta_structural_errors(tmp_path):
    with pytest.raises(InputError, match="no sequence"):
        load_fasta(write(tmp_path, "empty_rec.fasta", ">lonely\n>next\nMF\n"))
    with pytest.raises(InputError, match="before the first"):
        load_fasta(write(tmp_path, "headless.fasta", "MFK\n"))
    with pytest.raises(InputError, match="no FASTA records"):
        load_fasta(write(tmp_path, "void.fasta", "\n\n"))


def test_csv_with_name_and_dna_cross_check(tmp_path):
    path = write(
        tmp_path,
        "ok.csv",
        "name,protein,dna\nfirst,MLG,ATGCTGGGC\nsecond,MF,ATGTTTTAA\nthird,MW,\n",
    )
    pool = load_csv(path)
    assert [r.name for r in pool] == ["first", "second", "third"]
    assert pool[1].protein == Protein("MF")  # trailing stop codon tolerated


def test_csv_dna_mismatch_reports_row(tmp_path):
    path = write(tmp_path, "bad.csv", "protein,dna\nMLW,ATGCTGGGC\n")
    with pytest.raises(InputError) as err:
        load_csv(path)
    assert ":2" in str(err.value) and "differs" in str(err.value)


def test_csv_structural_errors(tmp_path):
    with pytest.raises(InputError, match="'protein' column"):
        load_csv(write(tmp_path, "nocol.csv", "seq\nMFK\n"))
    with pytest.raises(InputError, match="empty protein cell"):
        load_csv(write(tmp_path, "hole.csv", "name,protein\nok,MFK\nbad,\n"))
    with pytest.raises(InputError, match="no data rows"):
        load_csv(write(tmp_path, "hdr.csv", "protein\n"))


def test_load_proteins_suffix_inference(tmp_path):
    fasta = write(tmp_path, "p.fasta", ">a\nMF\n")
    csv_path = write(tmp_path, "p.csv", "protein\nMF\n")
    assert load_proteins(fasta)[0].protein == Protein("MF")
    assert load_proteins(csv_path)[0].protein == Protein("MF")
    assert load_proteins(fasta, fmt="fasta")[0].protein == Protein("MF")
    with pytest.raises(ConfigurationError):
        load_proteins(fasta, fmt="genbank")


def test_filter_length_inclusive_and_task_pools():
    records = [
        ProteinRecord(name=f"p{n}", protein=Protein("M" * n)) for n in (2, 3, 5, 8)
    ]
    pool = ProteinPool(records)
    assert [len(r) for r in pool.filter_length(3, 5)] == [3, 5]
    tasks = pool.task_pools([(2, 3), (5, 8)])
    assert [len(t) for t in tasks] == [2, 2]
    with pytest.raises(ConfigurationError, match=r"\[10, 20\]"):
        pool.task_pools([(10, 20)])


def test_pool_sampling_deterministic():
    pool = ProteinPool(
        [ProteinRecord(name=f"p{n}", protein=Protein("M" * n)) for n in (1, 2, 3)]
    )
    picks1 = [pool.sample(np.random.default_rng(4)).name for _ in range(1)]
    picks2 = [pool.sample(np.random.default_rng(4)).name for _ in range(1)]
    assert picks1 == picks2
    with pytest.raises(InputError):
        ProteinPool([]).sample(np.random.default_rng(0))


def test_random_protein_and_pool():
    rng = np.random.default_rng(9)
    protein = random_protein(rng, 25)
    assert len(protein) == 25
    pool = random_pool(np.random.default_rng(1), 12, 4, 9)
    assert len(pool) == 12
    assert all(4 <= n <= 9 for n in pool.lengths())
    with pytest.raises(InputError):
        random_protein(rng, 0)
    with pytest.raises(InputError):
        random_pool(rng, 3, 5, 4)


def test_bundled_demo_protein_magnitude():
    pool = bundled_demo_pool()
    assert len(pool) == 1
    protein = pool[0].protein
    assert len(protein) == 1273
    assert protein.residues[0] == "M"
    log10_size = design_space_log10(protein)
    assert 627.0 <= log10_size <= 637.0

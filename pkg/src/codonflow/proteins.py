"""Protein ingestion (FASTA/CSV), length-binned pools, and random proteins.

Pools feed both single-protein training and the multi-task curriculum, which
bins proteins by amino-acid length. A bundled 1273-residue demonstration
protein with a natural-like composition ships with the package.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .exceptions import ConfigurationError, InputError, InvalidDesignError
from .genetic_code import AMINO_ACIDS, MrnaSequence, Protein, STOP_CODON_INDICES, translate

BUNDLED_PROTEIN_RESOURCE = "spike_like_1273aa.fasta"


@dataclass(frozen=True)
class ProteinRecord:
    name: str
    protein: Protein

    def __len__(self) -> int:
        return len(self.protein)


class ProteinPool:
    """An ordered collection of named proteins with length-based selection."""

    def __init__(self, records: list[ProteinRecord]):
        self.records = list(records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i: int) -> ProteinRecord:
        return self.records[i]

    @property
    def proteins(self) -> list[Protein]:
        return [r.protein for r in self.records]

    def lengths(self) -> np.ndarray:
        return np.array([len(r) for r in self.records], dtype=np.int64)

    def filter_length(self, lo: int, hi: int) -> "ProteinPool":
        """Sub-pool with amino-acid length in the inclusive interval [lo, hi]."""
        return ProteinPool([r for r in self.records if lo <= len(r) <= hi])

    def task_pools(self, intervals) -> list["ProteinPool"]:
        """One sub-pool per length interval; an empty bin is a setup error."""
        pools = []
        for lo, hi in intervals:
            sub = self.filter_length(lo, hi)
            if len(sub) == 0:
                raise ConfigurationError(
                    f"no proteins with length in [{lo}, {hi}]; "
                    "every curriculum task needs at least one protein"
                )
            pools.append(sub)
        return pools

    def sample(self, rng: np.random.Generator) -> ProteinRecord:
        if not self.records:
            raise InputError("cannot sample from an empty protein pool")
        return self.records[int(rng.integers(len(self.records)))]


def _make_record(name: str, residues: str, where: str) -> ProteinRecord:
    try:
        return ProteinRecord(name=name, protein=Protein(residues))
    except InputError as err:
        raise InputError(f"{where}: {err}") from err


def load_fasta(path) -> ProteinPool:
    """Parse '>'-headed records; sequence may span multiple lines."""
    records: list[ProteinRecord] = []
    name: str | None = None
    chunks: list[str] = []
    header_line = 0

    def flush():
        if name is None:
            return
        if not chunks:
            raise InputError(f"{path}:{header_line}: record '{name}' has no sequence")
        records.append(_make_record(name, "".join(chunks), f"{path}:{header_line}"))

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(">"):
                flush()
                name = line[1:].strip() or f"record_{len(records) + 1}"
                chunks = []
                header_line = lineno
            else:
                if name is None:
                    raise InputError(
                        f"{path}:{lineno}: sequence data before the first '>' header"
                    )
                chunks.append(line)
    flush()
    if not records:
        raise InputError(f"{path}: no FASTA records found")
    return ProteinPool(records)


def _strip_trailing_stop(indices: tuple[int, ...]) -> tuple[int, ...]:
    if indices and indices[-1] in STOP_CODON_INDICES:
        return indices[:-1]
    return indices


def load_csv(path) -> ProteinPool:
    """Parse rows with a 'protein' column; optional 'name' and 'dna' columns.

    When a DNA column is present it is translated (one trailing stop codon is
    tolerated) and must reproduce the protein column exactly.
    """
    records: list[ProteinRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty CSV file")
        fields = {f.lower().strip(): f for f in reader.fieldnames}
        if "protein" not in fields:
            raise InputError(
                f"{path}: CSV needs a 'protein' column, found {reader.fieldnames}"
            )
        for rowno, row in enumerate(reader, start=2):
            residues = (row[fields["protein"]] or "").strip()
            if not residues:
                raise InputError(f"{path}:{rowno}: empty protein cell")
            name = (row.get(fields.get("name", ""), "") or "").strip() or f"row_{rowno}"
            record = _make_record(name, residues, f"{path}:{rowno}")
            dna_field = fields.get("dna")
            if dna_field is not None:
                dna = (row.get(dna_field, "") or "").strip()
                if dna:
                    _cross_check_dna(dna, record.protein, f"{path}:{rowno}")
            records.append(record)
    if not records:
        raise InputError(f"{path}: no data rows found")
    return ProteinPool(records)


def _cross_check_dna(dna: str, protein: Protein, where: str) -> None:
    try:
        seq = MrnaSequence.from_nucleotides(dna)
        decoded = translate(MrnaSequence(_strip_trailing_stop(seq.codon_indices)))
    except (InputError, InvalidDesignError) as err:
        raise InputError(f"{where}: DNA column does not decode cleanly: {err}") from err
    if decoded != protein:
        raise InputError(
            f"{where}: DNA column translates to '{decoded.residues}', "
            f"which differs from the protein column"
        )


def load_proteins(path, fmt: str | None = None) -> ProteinPool:
    """Load a pool from FASTA or CSV; format inferred from the suffix if omitted."""
    if fmt is None:
        lowered = str(path).lower()
        fmt = "csv" if lowered.endswith(".csv") else "fasta"
    if fmt == "fasta":
        return load_fasta(path)
    if fmt == "csv":
        return load_csv(path)
    raise ConfigurationError(f"unknown protein file format {fmt!r}; use 'fasta' or 'csv'")


def random_protein(rng: np.random.Generator, length: int) -> Protein:
    """Uniform random residues; handy for property tests and toy pools."""
    if length < 1:
        raise InputError(f"protein length must be >= 1, got {length}")
    letters = rng.choice(list(AMINO_ACIDS), size=length)
    return Protein("".join(letters))


def random_pool(
    rng: np.random.Generator, n: int, min_len: int, max_len: int, prefix: str = "random"
) -> ProteinPool:
    """Pool of uniform random proteins with lengths drawn from [min_len, max_len]."""
    if min_len < 1 or max_len < min_len:
        raise InputError(f"bad length interval [{min_len}, {max_len}]")
    records = []
    for i in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        records.append(ProteinRecord(name=f"{prefix}_{i}", protein=random_protein(rng, length)))
    return ProteinPool(records)


def bundled_demo_pool() -> ProteinPool:
    """The packaged 1273-residue demonstration protein as a one-record pool."""
    source = resources.files("codonflow.data") / BUNDLED_PROTEIN_RESOURCE
    with resources.as_file(source) as path:
        return load_fasta(path)

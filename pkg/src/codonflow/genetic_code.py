"""Standard genetic code, codon indexing, and protein/mRNA sequence types.

Bases carry a stable integer encoding A=0, C=1, G=2, U=3 and a codon with
bases (b1, b2, b3) gets the index 16*b1 + 4*b2 + b3, so codon indices run
0..63 in a fixed order that never depends on dict iteration. Amino acids are
one-letter codes; STOP is '*' and is never part of a design alphabet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import InputError, InvalidDesignError

BASES = "ACGU"
BASE_INDEX = {b: i for i, b in enumerate(BASES)}

N_CODONS = 64

# NCBI translation table 1, listed in the conventional U,C,A,G base order
# (base1 major). Re-indexed below into the A,C,G,U encoding used here.
_NCBI_BASES = "UCAG"
_NCBI_AAS = "FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG"

STOP = "*"
AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
AA_INDEX = {a: i for i, a in enumerate(AMINO_ACIDS)}


def _build_code() -> list[str]:
    code = [""] * N_CODONS
    pos = 0
    for b1 in _NCBI_BASES:
        for b2 in _NCBI_BASES:
            for b3 in _NCBI_BASES:
                idx = 16 * BASE_INDEX[b1] + 4 * BASE_INDEX[b2] + BASE_INDEX[b3]
                code[idx] = _NCBI_AAS[pos]
                pos += 1
    return code


#: amino acid (or '*') encoded by each codon index
CODON_TO_AA: tuple[str, ...] = tuple(_build_code())

#: codon index -> (b1, b2, b3) integer bases
CODON_BASES = np.array([(i // 16, (i // 4) % 4, i % 4) for i in range(N_CODONS)], dtype=np.int64)

#: number of G or C bases in each codon
CODON_GC_COUNT = np.array(
    [sum(1 for b in row if b in (BASE_INDEX["G"], BASE_INDEX["C"])) for row in CODON_BASES],
    dtype=np.int64,
)

STOP_CODON_INDICES = tuple(i for i in range(N_CODONS) if CODON_TO_AA[i] == STOP)

#: amino acid -> codon indices in ascending order (design alphabet per residue)
SYNONYMOUS_INDICES: dict[str, tuple[int, ...]] = {
    aa: tuple(i for i in range(N_CODONS) if CODON_TO_AA[i] == aa) for aa in AMINO_ACIDS
}


def codon_index(triplet: str) -> int:
    """Map a 3-letter RNA triplet to its codon index."""
    if len(triplet) != 3:
        raise InputError(f"codon {triplet!r} must have exactly 3 bases")
    try:
        b1, b2, b3 = (BASE_INDEX[b] for b in triplet)
    except KeyError as exc:
        raise InputError(f"codon {triplet!r} contains a non-RNA base {exc.args[0]!r}") from None
    return 16 * b1 + 4 * b2 + b3


def codon_triplet(index: int) -> str:
    """Inverse of :func:`codon_index`."""
    if not 0 <= index < N_CODONS:
        raise InputError(f"codon index {index} out of range 0..63")
    return BASES[index // 16] + BASES[(index // 4) % 4] + BASES[index % 4]


@dataclass(frozen=True)
class Codon:
    """One codon, identified by its stable index."""

    index: int

    def __post_init__(self):
        if not 0 <= self.index < N_CODONS:
            raise InputError(f"codon index {self.index} out of range 0..63")

    @property
    def triplet(self) -> str:
        return codon_triplet(self.index)

    @property
    def amino_acid(self) -> str:
        return CODON_TO_AA[self.index]

    @classmethod
    def from_triplet(cls, triplet: str) -> "Codon":
        return cls(codon_index(triplet))


def synonymous_codons(amino_acid: str) -> tuple[Codon, ...]:
    """All codons encoding the given amino acid, ascending by index.

    Set sizes are 1, 2, 3, 4 or 6; STOP is rejected because designs never
    contain it.
    """
    if amino_acid == STOP:
        raise InputError("STOP has no synonymous design codons")
    try:
        indices = SYNONYMOUS_INDICES[amino_acid]
    except KeyError:
        raise InputError(f"unknown amino acid {amino_acid!r}") from None
    return tuple(Codon(i) for i in indices)


@dataclass(frozen=True)
class Protein:
    """A validated amino-acid sequence (one-letter codes, no STOP)."""

    residues: str

    def __post_init__(self):
        if not self.residues:
            raise InputError("empty protein sequence")
        for pos, aa in enumerate(self.residues):
            if aa not in AA_INDEX:
                raise InputError(
                    f"invalid residue {aa!r} at position {pos} (expected one of {AMINO_ACIDS})"
                )

    def __len__(self) -> int:
        return len(self.residues)

    def __str__(self) -> str:
        return self.residues

    @property
    def synonymous_index_table(self) -> tuple[tuple[int, ...], ...]:
        """Per-position allowed codon indices."""
        return _synonymous_table(self.residues)


@lru_cache(maxsize=4096)
def _synonymous_table(residues: str) -> tuple[tuple[int, ...], ...]:
    return tuple(SYNONYMOUS_INDICES[aa] for aa in residues)


@dataclass(frozen=True)
class MrnaSequence:
    """A complete codon-level design: L codons, 3L nucleotides."""

    codon_indices: tuple[int, ...]

    def __post_init__(self):
        for idx in self.codon_indices:
            if not 0 <= idx < N_CODONS:
                raise InputError(f"codon index {idx} out of range 0..63")

    def __len__(self) -> int:
        return len(self.codon_indices)

    @property
    def nucleotides(self) -> str:
        return "".join(codon_triplet(i) for i in self.codon_indices)

    @property
    def codons(self) -> tuple[Codon, ...]:
        return tuple(Codon(i) for i in self.codon_indices)

    @classmethod
    def from_nucleotides(cls, nucleotides: str) -> "MrnaSequence":
        """Parse a nucleotide string; DNA 'T' is accepted and read as 'U'."""
        seq = nucleotides.strip().upper().replace("T", "U")
        if len(seq) == 0:
            raise InputError("empty nucleotide sequence")
        if len(seq) % 3 != 0:
            raise InputError(f"nucleotide length {len(seq)} is not a multiple of 3")
        return cls(tuple(codon_index(seq[i : i + 3]) for i in range(0, len(seq), 3)))

    def base_ints(self) -> np.ndarray:
        """Flat (3L,) array of integer bases, for folding routines."""
        return CODON_BASES[np.asarray(self.codon_indices, dtype=np.int64)].reshape(-1)


def translate(sequence: MrnaSequence) -> Protein:
    """Decode a codon sequence; a STOP codon anywhere makes it an invalid design."""
    residues = []
    for pos, idx in enumerate(sequence.codon_indices):
        aa = CODON_TO_AA[idx]
        if aa == STOP:
            raise InvalidDesignError(
                f"STOP codon {codon_triplet(idx)} at codon position {pos}"
            )
        residues.append(aa)
    return Protein("".join(residues))


def design_space_size(protein: Protein) -> int:
    """Number of synonymous codon sequences encoding the protein (exact integer)."""
    return math.prod(len(s) for s in protein.synonymous_index_table)


def design_space_log10(protein: Protein) -> float:
    """log10 of the design space size, safe for proteins far beyond enumeration."""
    return sum(math.log10(len(s)) for s in protein.synonymous_index_table)

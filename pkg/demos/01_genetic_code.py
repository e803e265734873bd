"""Codon table basics: synonymous choices, translation, design-space size.

Run:  python3 demos/01_genetic_code.py
"""

from codonflow.genetic_code import (
    MrnaSequence,
    Protein,
    codon_triplet,
    design_space_log10,
    design_space_size,
    synonymous_codons,
    translate,
)

protein = Protein("MFKL")
print(f"protein: {protein.residues}")
for aa in protein.residues:
    triplets = [codon_triplet(c.index) for c in synonymous_codons(aa)]
    print(f"  {aa}: {len(triplets)} synonymous codons -> {', '.join(triplets)}")

print(f"\ndesign space size: {design_space_size(protein)} synonymous mRNAs")

seq = MrnaSequence.from_nucleotides("AUGUUUAAACUG")
print(f"\nexample mRNA {seq.nucleotides} translates to {translate(seq).residues}")

big = Protein("MSKGEELFTGVVPILVELDGDVNGHKFSVSGEGEGDATYGKLTLKFICTTGKLPVPWPTLVTTF")
print(
    f"\na {len(big)}-residue fragment already has ~10^"
    f"{design_space_log10(big):.1f} synonymous designs -- "
    "enumeration stops being an option almost immediately."
)

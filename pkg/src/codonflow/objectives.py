"""Sequence objectives (GC content, folding proxy, codon adaptation) and reward.

Raw values and normalized values are kept separate: ``gc_raw`` is a fraction,
``mfe_raw`` is a base-pair count under the max-pairing proxy (or an energy if
an external scorer is configured), ``cai_raw`` is the geometric-mean codon
adaptation index. Normalization maps each onto [0, 1] where higher is better,
and the scalar reward is the preference-weighted sum, floored away from zero
so every design keeps positive probability mass.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from numba import njit

from .exceptions import ConfigurationError, InputError, NumericFailureError
from .genetic_code import (
    CODON_BASES,
    CODON_GC_COUNT,
    CODON_TO_AA,
    N_CODONS,
    STOP,
    SYNONYMOUS_INDICES,
    MrnaSequence,
    codon_index,
    codon_triplet,
)

GC_BAND_DEFAULT = (0.35, 0.65)
MIN_LOOP_DEFAULT = 3
REWARD_FLOOR_DEFAULT = 1e-6
EXTERNAL_BOUNDS_DEFAULT = (-0.5, 0.0)  # kcal/mol per nucleotide


class CodonUsageTable:
    """Codon frequencies plus relative-adaptiveness weights for CAI.

    The text format is one ``CODON frequency`` pair per line with ``#``
    comments. Every coding codon must appear with a positive frequency;
    STOP codon lines are accepted and ignored for weights.
    """

    def __init__(self, frequencies: dict[str, float]):
        freq = np.zeros(N_CODONS)
        for triplet, value in frequencies.items():
            idx = codon_index(triplet.strip().upper().replace("T", "U"))
            if value < 0:
                raise InputError(f"negative frequency for codon {triplet}")
            freq[idx] = value
        missing = [
            codon_triplet(i)
            for i in range(N_CODONS)
            if CODON_TO_AA[i] != STOP and freq[i] <= 0.0
        ]
        if missing:
            raise InputError(
                "codon usage table must give positive frequency to every coding codon; "
                f"missing or zero: {', '.join(missing)}"
            )
        self.frequencies = freq
        weights = np.zeros(N_CODONS)
        for indices in SYNONYMOUS_INDICES.values():
            block = freq[list(indices)]
            weights[list(indices)] = block / block.max()
        self.weights = weights
        self.log_weights = np.where(weights > 0, np.log(np.maximum(weights, 1e-300)), 0.0)

    @classmethod
    def from_text(cls, text: str) -> "CodonUsageTable":
        frequencies: dict[str, float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InputError(f"usage table line {lineno}: expected 'CODON frequency', got {raw!r}")
            triplet, value = parts
            if triplet.upper().replace("T", "U") in frequencies:
                raise InputError(f"usage table line {lineno}: duplicate codon {triplet}")
            try:
                frequencies[triplet.upper().replace("T", "U")] = float(value)
            except ValueError:
                raise InputError(f"usage table line {lineno}: bad frequency {value!r}") from None
        return cls(frequencies)

    @classmethod
    def from_file(cls, path) -> "CodonUsageTable":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read())

    @classmethod
    def bundled_human(cls) -> "CodonUsageTable":
        text = resources.files("codonflow.data").joinpath("human_codon_usage.txt").read_text()
        return cls.from_text(text)


def gc_content(sequence: MrnaSequence) -> float:
    """Fraction of G/C bases over the whole nucleotide string."""
    idx = np.asarray(sequence.codon_indices, dtype=np.int64)
    return float(CODON_GC_COUNT[idx].sum()) / (3 * len(idx))


def codon_adaptation_index(sequence: MrnaSequence, table: CodonUsageTable) -> float:
    """Geometric mean of relative-adaptiveness weights; 1.0 means most-used codons only."""
    idx = np.asarray(sequence.codon_indices, dtype=np.int64)
    return float(np.exp(table.log_weights[idx].mean()))


@njit(cache=True)
def _max_pairs_dp(bases, min_loop):  # pragma: no cover - exercised via wrapper
    n = bases.shape[0]
    dp = np.zeros((n, n), dtype=np.int64)
    for span in range(min_loop + 1, n):
        for i in range(0, n - span):
            j = i + span
            best = dp[i, j - 1]
            bj = bases[j]
            for k in range(i, j - min_loop):
                s = bases[k] + bj
                if s == 3 or s == 5:  # AU/UA, CG/GC, GU/UG under A=0 C=1 G=2 U=3
                    left = dp[i, k - 1] if k > i else 0
                    inner = dp[k + 1, j - 1] if k + 1 <= j - 1 else 0
                    v = left + inner + 1
                    if v > best:
                        best = v
            dp[i, j] = best
    return dp[0, n - 1] if n > 1 else 0


@lru_cache(maxsize=200_000)
def _cached_pairs(nucleotides: str, min_loop: int) -> int:
    bases = np.array([ "ACGU".index(b) for b in nucleotides ], dtype=np.int64)
    return int(_max_pairs_dp(bases, min_loop))


def mfe_pair_count(sequence: MrnaSequence | str, min_loop: int = MIN_LOOP_DEFAULT) -> int:
    """Maximum number of non-crossing AU/GC/GU pairs with >= min_loop unpaired
    bases inside every hairpin. Used as a folding-stability proxy; the
    pseudo-energy is minus this count."""
    nucleotides = sequence if isinstance(sequence, str) else sequence.nucleotides
    return _cached_pairs(nucleotides, min_loop)


class ExternalMfeScorer:
    """Spawn a scorer process per sequence: nucleotides on stdin, one real on stdout."""

    def __init__(self, command: str, timeout: float = 60.0):
        if not command.strip():
            raise ConfigurationError("external scorer command is empty")
        self.argv = shlex.split(command)
        self.timeout = timeout

    def __call__(self, nucleotides: str) -> float:
        try:
            proc = subprocess.run(
                self.argv,
                input=nucleotides + "\n",
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except OSError as exc:
            raise ConfigurationError(f"cannot run external scorer {self.argv[0]!r}: {exc}") from exc
        except subprocess.TimeoutExpired as exc:
            raise NumericFailureError(f"external scorer timed out after {self.timeout}s") from exc
        if proc.returncode != 0:
            raise NumericFailureError(
                f"external scorer exited with {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        tokens = proc.stdout.split()
        if not tokens:
            raise InputError("external scorer produced no output")
        try:
            return float(tokens[0])
        except ValueError:
            raise InputError(f"external scorer output {tokens[0]!r} is not a number") from None


@dataclass
class ObjectivesConfig:
    """Normalization and scoring knobs; defaults match the documented desk-scale setup."""

    gc_band: tuple[float, float] = GC_BAND_DEFAULT
    min_loop: int = MIN_LOOP_DEFAULT
    mfe_scorer: str = "nussinov"  # "nussinov" | "external"
    external_cmd: str | None = None
    external_bounds: tuple[float, float] = EXTERNAL_BOUNDS_DEFAULT
    reward_floor: float = REWARD_FLOOR_DEFAULT

    def __post_init__(self):
        lo, hi = self.gc_band
        if not (0.0 <= lo < hi <= 1.0):
            raise ConfigurationError(f"gc_band must satisfy 0 <= lo < hi <= 1, got {self.gc_band}")
        if self.min_loop < 0:
            raise ConfigurationError("min_loop must be >= 0")
        if self.mfe_scorer not in ("nussinov", "external"):
            raise ConfigurationError(f"unknown mfe_scorer {self.mfe_scorer!r}")
        if self.mfe_scorer == "external" and not self.external_cmd:
            raise ConfigurationError("mfe_scorer 'external' requires external_cmd")
        elo, ehi = self.external_bounds
        if not elo < ehi:
            raise ConfigurationError("external_bounds must satisfy lo < hi")
        if not 0 < self.reward_floor < 1:
            raise ConfigurationError("reward_floor must lie in (0, 1)")


def normalize_gc(gc_raw: float, band: tuple[float, float] = GC_BAND_DEFAULT) -> float:
    """1 inside the band, decaying linearly to 0 at gc = 0 and gc = 1."""
    lo, hi = band
    if lo <= gc_raw <= hi:
        return 1.0
    if gc_raw < lo:
        return gc_raw / lo if lo > 0 else 1.0
    return (1.0 - gc_raw) / (1.0 - hi) if hi < 1 else 1.0


def normalize_mfe_pairs(pairs: int, n_codons: int) -> float:
    """Pair count over the ceiling floor(3L/2) attainable by a 3L-base string."""
    cap = (3 * n_codons) // 2
    if cap == 0:
        return 0.0
    return float(np.clip(pairs / cap, 0.0, 1.0))


def normalize_mfe_energy(
    energy: float, n_bases: int, bounds: tuple[float, float] = EXTERNAL_BOUNDS_DEFAULT
) -> float:
    """Min-max an external free energy via per-nucleotide bounds; lower energy -> closer to 1."""
    lo, hi = bounds
    per_nt = energy / n_bases
    return float(np.clip((hi - per_nt) / (hi - lo), 0.0, 1.0))


def check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (3,):
        raise ConfigurationError(f"preference weights must have 3 entries, got shape {w.shape}")
    if np.any(w < 0) or not np.isfinite(w).all():
        raise ConfigurationError(f"preference weights must be non-negative finite, got {w}")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ConfigurationError(f"preference weights must sum to 1, got sum {w.sum()!r}")
    return w


@dataclass(frozen=True)
class ObjectiveVector:
    """Raw objective values plus their normalized phi, ordered (gc, mfe, cai)."""

    gc_raw: float
    mfe_raw: float
    cai_raw: float
    phi: np.ndarray = field(repr=False)


class ObjectiveScorer:
    """Binds a usage table and config; caches phi per codon sequence."""

    def __init__(self, table: CodonUsageTable | None = None, config: ObjectivesConfig | None = None):
        self.table = table if table is not None else CodonUsageTable.bundled_human()
        self.config = config if config is not None else ObjectivesConfig()
        self._external = (
            ExternalMfeScorer(self.config.external_cmd)
            if self.config.mfe_scorer == "external"
            else None
        )
        self._phi_cache: dict[bytes, tuple[float, float, float, np.ndarray]] = {}

    def _score_row(self, idx: np.ndarray) -> tuple[float, float, float, np.ndarray]:
        key = idx.tobytes()
        hit = self._phi_cache.get(key)
        if hit is not None:
            return hit
        n_codons = idx.shape[0]
        n_bases = 3 * n_codons
        gc_raw = float(CODON_GC_COUNT[idx].sum()) / n_bases
        cai_raw = float(np.exp(self.table.log_weights[idx].mean()))
        bases = CODON_BASES[idx].reshape(-1)
        if self._external is not None:
            nucleotides = "".join("ACGU"[b] for b in bases)
            mfe_raw = self._external(nucleotides)
            phi_mfe = normalize_mfe_energy(mfe_raw, n_bases, self.config.external_bounds)
        else:
            mfe_raw = float(_max_pairs_dp(bases, self.config.min_loop))
            phi_mfe = normalize_mfe_pairs(int(mfe_raw), n_codons)
        phi = np.array(
            [normalize_gc(gc_raw, self.config.gc_band), phi_mfe, cai_raw], dtype=np.float64
        )
        out = (gc_raw, mfe_raw, cai_raw, phi)
        if len(self._phi_cache) < 500_000:
            self._phi_cache[key] = out
        return out

    def objectives(self, sequence: MrnaSequence) -> ObjectiveVector:
        idx = np.asarray(sequence.codon_indices, dtype=np.int64)
        gc_raw, mfe_raw, cai_raw, phi = self._score_row(idx)
        return ObjectiveVector(gc_raw=gc_raw, mfe_raw=mfe_raw, cai_raw=cai_raw, phi=phi.copy())

    def phi(self, sequence: MrnaSequence) -> np.ndarray:
        idx = np.asarray(sequence.codon_indices, dtype=np.int64)
        return self._score_row(idx)[3].copy()

    def phi_batch_indices(self, idx_matrix: np.ndarray) -> np.ndarray:
        """phi rows for a (B, L) int matrix of codon indices; duplicates folded."""
        idx_matrix = np.ascontiguousarray(idx_matrix, dtype=np.int64)
        uniq, inverse = np.unique(idx_matrix, axis=0, return_inverse=True)
        phis = np.empty((uniq.shape[0], 3))
        for r in range(uniq.shape[0]):
            phis[r] = self._score_row(uniq[r])[3]
        return phis[inverse.reshape(-1)]

    def reward(self, sequence: MrnaSequence, weights) -> float:
        w = check_weights(weights)
        return float(self.reward_from_phi(self.phi(sequence)[None, :], w)[0])

    def reward_from_phi(self, phi: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Scalarize: min(1, w . phi + floor); stays in [reward_floor, 1]."""
        raw = phi @ np.asarray(weights, dtype=np.float64)
        return np.minimum(raw + self.config.reward_floor, 1.0)

    def reward_from_phi_rows(self, phi: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Row-wise scalarization for per-trajectory weight matrices."""
        raw = np.sum(phi * np.asarray(weights, dtype=np.float64), axis=1)
        return np.minimum(raw + self.config.reward_floor, 1.0)


def reward(sequence: MrnaSequence, weights, table: CodonUsageTable, config: ObjectivesConfig) -> float:
    """One-shot convenience wrapper around :class:`ObjectiveScorer`."""
    return ObjectiveScorer(table, config).reward(sequence, weights)

"""Left-to-right codon assembly environment.

A state is a fixed-length vector of codon slots, filled as a prefix; -1 marks
an unassigned slot. The action alphabet has 65 entries: codon indices 0..63
plus EXIT_ACTION. Forward masks expose exactly the synonymous codons of the
next residue while slots remain, and exit alone once every slot is filled, so
every reachable complete sequence translates back to the target protein by
construction. Only the most recently filled slot can be removed, which makes
the state graph a tree: each state has exactly one parent and P_B == 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .exceptions import IllegalActionError, InvariantViolationError
from .genetic_code import AA_INDEX, N_CODONS, MrnaSequence, Protein

EXIT_ACTION = N_CODONS
N_ACTIONS = N_CODONS + 1


@dataclass(frozen=True)
class State:
    """Partial design: codon slots with a filled prefix of length fill_count."""

    slots: tuple[int, ...]
    fill_count: int

    @property
    def prefix(self) -> tuple[int, ...]:
        """The filled codons; hashable key for tabular policies."""
        return self.slots[: self.fill_count]

    def __len__(self) -> int:
        return len(self.slots)


class CodonDesignEnvironment:
    """Binds a target protein to masks, transitions and state bookkeeping."""

    def __init__(self, protein: Protein):
        self.protein = protein
        self.length = len(protein)
        self.syn_indices = protein.synonymous_index_table
        self.aa_indices = np.array([AA_INDEX[a] for a in protein.residues], dtype=np.int64)
        masks = np.zeros((self.length + 1, N_ACTIONS), dtype=bool)
        for t, indices in enumerate(self.syn_indices):
            masks[t, list(indices)] = True
        masks[self.length, EXIT_ACTION] = True
        masks.setflags(write=False)
        self.mask_matrix = masks

    def initial_state(self) -> State:
        return State(slots=(-1,) * self.length, fill_count=0)

    def check_state(self, state: State) -> None:
        """Raise if the state is not a valid prefix-filled vector for this protein."""
        if len(state.slots) != self.length:
            raise InvariantViolationError(
                f"state has {len(state.slots)} slots, protein needs {self.length}"
            )
        if not 0 <= state.fill_count <= self.length:
            raise InvariantViolationError(f"fill_count {state.fill_count} out of range")
        for pos, slot in enumerate(state.slots):
            if pos < state.fill_count:
                if slot not in self.syn_indices[pos]:
                    raise InvariantViolationError(
                        f"slot {pos} holds codon {slot}, not synonymous with "
                        f"{self.protein.residues[pos]!r}"
                    )
            elif slot != -1:
                raise InvariantViolationError(f"slot {pos} assigned beyond the filled prefix")

    def forward_mask(self, state: State) -> np.ndarray:
        """Allowed forward actions; read-only view, never all-false."""
        return self.mask_matrix[state.fill_count]

    def step(self, state: State, action: int) -> State | MrnaSequence:
        """Apply a forward action; the exit action yields the finished design."""
        if not 0 <= action < N_ACTIONS:
            raise IllegalActionError(f"action {action} out of range 0..{N_ACTIONS - 1}")
        t = state.fill_count
        if not self.mask_matrix[t, action]:
            raise IllegalActionError(
                f"action {action} not allowed at position {t} of {self.protein.residues!r}"
            )
        if action == EXIT_ACTION:
            return MrnaSequence(state.slots)
        slots = state.slots[:t] + (action,) + state.slots[t + 1 :]
        return State(slots=slots, fill_count=t + 1)

    def backward_mask(self, state: State) -> np.ndarray:
        """Exactly one removable codon (the last filled slot); all-false at the root."""
        mask = np.zeros(N_ACTIONS, dtype=bool)
        if state.fill_count > 0:
            mask[state.slots[state.fill_count - 1]] = True
        return mask

    def backstep(self, state: State) -> State:
        """Remove the last filled slot; the root has no parent."""
        t = state.fill_count
        if t == 0:
            raise IllegalActionError("initial state has no parent")
        slots = state.slots[: t - 1] + (-1,) + state.slots[t:]
        return State(slots=slots, fill_count=t - 1)

    def is_terminal_ready(self, state: State) -> bool:
        return state.fill_count == self.length

    def is_tree(self) -> bool:
        """Every state has at most one parent, so trajectories are unique."""
        return True

    def enumerate_states(self) -> list[State]:
        """All reachable states (prefix combinations); only safe for tiny proteins."""
        states = [self.initial_state()]
        for t in range(1, self.length + 1):
            tail = (-1,) * (self.length - t)
            for combo in product(*self.syn_indices[:t]):
                states.append(State(slots=combo + tail, fill_count=t))
        return states

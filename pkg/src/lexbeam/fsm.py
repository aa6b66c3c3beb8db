"""Compile lexical constraints into a dense finite state machine.

A constraint group is a set of alternative token sequences (word forms
or multi-word phrases); the group counts as satisfied once any one of
its alternatives occurs contiguously in the decoded output. The machine
tracks which groups have been satisfied (a bitmask) together with the
progress of the phrase currently being matched, so a beam decoder can
keep one beam per state and read constraint satisfaction off the state
id alone. A state is accepting when at least ``min_satisfied`` of the
``n`` groups are satisfied.

State layout
------------
Ids ``0 .. 2**n - 1`` are the *mask states*; the id of a mask state is
its satisfaction bitmask (bit ``g`` set means group ``g`` satisfied),
so id 0 is the initial state. Phrase-progress states follow: every
alternative of length ``L > 1`` owns ``L - 1`` progress states in every
mask state where its group is still unsatisfied. With three single-word
groups the machine therefore has exactly 8 states, and a two-word or
three-word alternative adds exactly 4 or 8 states respectively.

Phrase mismatch semantics
-------------------------
Two transition semantics are provided (:class:`PhraseMatchMode`):

* ``FAILURE`` (default): mismatching tokens follow failure transitions
  that keep the longest suffix of the input still matching a prefix of
  some live alternative, so substring recognition is exact even when
  phrases overlap themselves or each other.
* ``FAITHFUL``: any token that does not extend the phrase currently in
  progress drops back to the bare mask state, even when that token
  would restart the phrase or complete another group. This replicates
  the classic construction where every progress state has a single
  reset edge for all non-matching tokens.

Progress states are allocated per alternative in both modes. In
``FAILURE`` mode, alternatives sharing a prefix are recognized through
the canonical (first-listed) state for that prefix; the duplicate
states remain in the table with equivalent transitions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyGroupError,
    OutOfRangeError,
    TooManyGroupsError,
)
from .vocab import Vocabulary

MAX_GROUPS = 16


class PhraseMatchMode(str, Enum):
    """How multi-word phrase progress reacts to a mismatching token."""

    FAITHFUL = "faithful"
    FAILURE = "failure"


@dataclass(frozen=True)
class ConstraintGroup:
    """One constraint: alternative token sequences, any of which satisfies it.

    ``alternatives`` holds token *strings*; they are resolved against a
    vocabulary when the group is compiled. Duplicates are collapsed;
    the label is free-form provenance (typically the source object
    class).
    """

    label: str
    alternatives: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        seen: set[tuple[str, ...]] = set()
        unique: list[tuple[str, ...]] = []
        for alt in self.alternatives:
            alt = tuple(alt)
            if not alt:
                raise EmptyGroupError(
                    f"group {self.label!r} contains an empty alternative"
                )
            if alt not in seen:
                seen.add(alt)
                unique.append(alt)
        if not unique:
            raise EmptyGroupError(f"group {self.label!r} has no alternatives")
        object.__setattr__(self, "alternatives", tuple(unique))

    @classmethod
    def from_json(cls, obj: dict) -> "ConstraintGroup":
        return cls(
            label=str(obj.get("label", "")),
            alternatives=tuple(tuple(alt) for alt in obj["alternatives"]),
        )

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "alternatives": [list(alt) for alt in self.alternatives],
        }


def load_constraints(obj: dict) -> tuple[list[ConstraintGroup], int]:
    """Parse a constraint record ``{"min_satisfied": k, "groups": [...]}``.

    ``min_satisfied`` defaults to ``min(2, len(groups))`` when absent.
    """
    groups = [ConstraintGroup.from_json(g) for g in obj.get("groups", [])]
    k = obj.get("min_satisfied")
    if k is None:
        k = min(2, len(groups))
    return groups, int(k)


def load_constraints_file(path: str) -> tuple[list[ConstraintGroup], int]:
    with open(path, "r", encoding="utf-8") as fp:
        return load_constraints(json.load(fp))


class ConstraintFSM:
    """A compiled constraint machine with a dense transition table.

    Immutable once built; :meth:`step`, :meth:`accepting` and
    :meth:`satisfied_count` are pure reads and safe to share across
    threads. Use :func:`compile_fsm` to construct one.
    """

    __slots__ = (
        "transitions",
        "state_labels",
        "min_satisfied",
        "n_groups",
        "mode",
        "_masks",
        "_popcounts",
    )

    def __init__(
        self,
        transitions: np.ndarray,
        state_labels: tuple[tuple, ...],
        min_satisfied: int,
        n_groups: int,
        mode: PhraseMatchMode,
    ):
        transitions.flags.writeable = False
        self.transitions = transitions
        self.state_labels = state_labels
        self.min_satisfied = min_satisfied
        self.n_groups = n_groups
        self.mode = mode
        masks = np.array([label[0] for label in state_labels], dtype=np.int64)
        masks.flags.writeable = False
        self._masks = masks
        pop = np.array([int(m).bit_count() for m in masks], dtype=np.int64)
        pop.flags.writeable = False
        self._popcounts = pop

    @property
    def state_count(self) -> int:
        return self.transitions.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.transitions.shape[1]

    @property
    def initial_state(self) -> int:
        return 0

    def _check_state(self, state: int) -> None:
        if not 0 <= state < self.state_count:
            raise OutOfRangeError(
                f"state {state} out of range [0, {self.state_count})"
            )

    def step(self, state: int, token: int) -> int:
        """The transition function: next state for ``token`` read in ``state``."""
        self._check_state(state)
        if not 0 <= token < self.vocab_size:
            raise OutOfRangeError(
                f"token {token} out of range [0, {self.vocab_size})"
            )
        return int(self.transitions[state, token])

    def run(self, tokens: Iterable[int], state: int | None = None) -> int:
        """Fold :meth:`step` over ``tokens`` (from the initial state by default)."""
        cur = self.initial_state if state is None else state
        for tok in tokens:
            cur = self.step(cur, tok)
        return cur

    def satisfied_mask(self, state: int) -> int:
        self._check_state(state)
        return int(self._masks[state])

    def satisfied_count(self, state: int) -> int:
        """Number of groups satisfied on every path into ``state``."""
        self._check_state(state)
        return int(self._popcounts[state])

    def accepting(self, state: int) -> bool:
        """True iff at least ``min_satisfied`` groups are satisfied in ``state``."""
        return self.satisfied_count(state) >= self.min_satisfied

    def accepting_states(self) -> tuple[int, ...]:
        return tuple(
            int(s) for s in np.flatnonzero(self._popcounts >= self.min_satisfied)
        )

    def describe_state(self, state: int) -> str:
        self._check_state(state)
        label = self.state_labels[state]
        mask = label[0]
        bits = format(mask, f"0{max(self.n_groups, 1)}b")
        if len(label) == 1:
            progress = "-"
        else:
            _, g, ai, pos = label
            progress = f"group={g} alt={ai} matched={pos}"
        flag = " accepting" if self.accepting(state) else ""
        return f"state {state}: mask={bits} satisfied={self.satisfied_count(state)} progress={progress}{flag}"

    def __repr__(self) -> str:
        return (
            f"ConstraintFSM(states={self.state_count}, groups={self.n_groups}, "
            f"min_satisfied={self.min_satisfied}, mode={self.mode.value})"
        )


def _resolve_groups(
    groups: Sequence[ConstraintGroup], vocab: Vocabulary
) -> list[tuple[tuple[int, ...], ...]]:
    resolved = []
    for group in groups:
        alts = sorted({vocab.ids(alt) for alt in group.alternatives})
        resolved.append(tuple(alts))
    return resolved


def compile_fsm(
    groups: Sequence[ConstraintGroup],
    min_satisfied: int,
    vocab: Vocabulary,
    mode: PhraseMatchMode = PhraseMatchMode.FAILURE,
) -> ConstraintFSM:
    """Compile constraint groups into a :class:`ConstraintFSM`.

    Parameters
    ----------
    groups:
        At most :data:`MAX_GROUPS` constraint groups. Group ``g`` owns
        bit ``g`` of the satisfaction mask.
    min_satisfied:
        Accepting quota ``k``: a state accepts when at least ``k``
        groups are satisfied. ``0 <= k <= len(groups)``; with zero
        groups and ``k = 0`` the result is the trivial one-state,
        always-accepting machine.
    vocab:
        Every token string in every alternative must resolve here.
    mode:
        Phrase mismatch semantics, see :class:`PhraseMatchMode`.
    """
    n = len(groups)
    if n > MAX_GROUPS:
        raise TooManyGroupsError(f"{n} groups exceed the mask width ({MAX_GROUPS})")
    if not 0 <= min_satisfied <= n:
        raise ValueError(f"min_satisfied={min_satisfied} outside [0, {n}]")
    mode = PhraseMatchMode(mode)
    alt_ids = _resolve_groups(groups, vocab)

    n_masks = 1 << n
    state_labels: list[tuple] = [(m,) for m in range(n_masks)]
    progress_ids: dict[tuple[int, int, int, int], int] = {}
    for m in range(n_masks):
        for g in range(n):
            if m >> g & 1:
                continue
            for ai, alt in enumerate(alt_ids[g]):
                for pos in range(1, len(alt)):
                    progress_ids[(m, g, ai, pos)] = len(state_labels)
                    state_labels.append((m, g, ai, pos))

    def unsat(mask: int) -> Iterable[int]:
        return (g for g in range(n) if not mask >> g & 1)

    def failure_target(mask: int, prefix: tuple[int, ...], token: int) -> int:
        s = prefix + (token,)
        gained = 0
        for g in unsat(mask):
            for alt in alt_ids[g]:
                if len(alt) <= len(s) and s[len(s) - len(alt):] == alt:
                    gained |= 1 << g
                    break
        new_mask = mask | gained
        # Longest suffix of the input that is a proper prefix of a live
        # alternative; carried progress survives mask changes.
        for length in range(len(s), 0, -1):
            suffix = s[len(s) - length:]
            for g in unsat(new_mask):
                for ai, alt in enumerate(alt_ids[g]):
                    if len(alt) > length and alt[:length] == suffix:
                        return progress_ids[(new_mask, g, ai, length)]
        return new_mask

    def faithful_target(label: tuple, token: int) -> int:
        mask = label[0]
        if len(label) == 1:
            gained = 0
            for g in unsat(mask):
                if (token,) in alt_ids[g]:
                    gained |= 1 << g
            if gained:
                return mask | gained
            for g in unsat(mask):
                for ai, alt in enumerate(alt_ids[g]):
                    if len(alt) > 1 and alt[0] == token:
                        return progress_ids[(mask, g, ai, 1)]
            return mask
        _, g, ai, pos = label
        alt = alt_ids[g][ai]
        if token == alt[pos]:
            if pos + 1 == len(alt):
                return mask | 1 << g
            return progress_ids[(mask, g, ai, pos + 1)]
        return mask

    interesting = sorted({t for alts in alt_ids for alt in alts for t in alt})
    n_states = len(state_labels)
    transitions = np.empty((n_states, len(vocab)), dtype=np.int32)
    for sid, label in enumerate(state_labels):
        # Tokens appearing in no alternative neither complete nor start
        # anything: they land on the bare mask state in both modes.
        transitions[sid, :] = label[0]
        if mode is PhraseMatchMode.FAILURE:
            mask = label[0]
            if len(label) == 1:
                prefix: tuple[int, ...] = ()
            else:
                _, g, ai, pos = label
                prefix = alt_ids[g][ai][:pos]
            for tok in interesting:
                transitions[sid, tok] = failure_target(mask, prefix, tok)
        else:
            for tok in interesting:
                transitions[sid, tok] = faithful_target(label, tok)

    return ConstraintFSM(
        transitions=transitions,
        state_labels=tuple(state_labels),
        min_satisfied=min_satisfied,
        n_groups=n,
        mode=mode,
    )

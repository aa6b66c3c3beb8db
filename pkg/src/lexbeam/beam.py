"""Constrained beam search with one beam per FSM state.

Every live hypothesis carries its machine state; at each step every
hypothesis is extended by every vocabulary token, routed to the state
the transition table dictates, and each *target* state keeps its
``beam_width`` best extensions. Keeping a separate beam per state
guarantees that hypotheses survive for every satisfaction level, so a
completed caption meeting the quota can be post-selected at the end.

Conventions:

* ``max_len`` caps the number of content tokens. The end sentinel is
  scored like any other step and terminates a hypothesis; its id is
  routed through the transition table, and finished token sequences
  include it.
* Scores are natural-log probabilities, summed; nothing is ever
  multiplied in linear space.
* Ties in log-probability break toward the lexicographically smallest
  token-id sequence, making results fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NoHypothesisError, VocabMismatchError
from .fsm import ConstraintFSM, compile_fsm
from .scorers import Scorer


@dataclass(frozen=True)
class DecodeConfig:
    """Knobs for :func:`decode`.

    beam_width:
        Hypotheses kept per FSM state (not globally).
    max_len:
        Maximum caption length in content tokens.
    min_satisfied_fallback:
        When no completed hypothesis meets the quota, relax it one step
        at a time (k-1, k-2, ... 0) and return the first tier that has
        a finisher. With it off, :class:`NoHypothesisError` is raised
        instead.
    length_normalize:
        Post-select by logprob divided by sequence length instead of
        raw logprob. Off by default; the reported logprob is always the
        raw sum either way.
    """

    beam_width: int = 5
    max_len: int = 20
    min_satisfied_fallback: bool = True
    length_normalize: bool = False

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")


@dataclass(frozen=True)
class BeamHypothesis:
    """A finished candidate: tokens (ending in the end sentinel), score,
    the FSM state it finished in, and a completion flag."""

    tokens: tuple[int, ...]
    logprob: float
    fsm_state: int
    complete: bool


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of a decode call.

    ``tokens`` includes the terminating end-sentinel id;
    ``satisfied_count`` is the actual satisfied-group count of the
    winning hypothesis, which can be below the quota only when the
    fallback tiers were used. ``per_state_finalists`` maps each FSM
    state that produced finishers to its best completed hypotheses.
    """

    tokens: tuple[int, ...]
    logprob: float
    satisfied_count: int
    per_state_finalists: dict[int, tuple[BeamHypothesis, ...]] = field(hash=False)


class _Node:
    """A live hypothesis; token sequences are materialized lazily via
    parent links. ``rank`` is the node's position in the global
    lexicographic order of all live sequences (all the same length), so
    candidate ties can be broken without comparing sequences."""

    __slots__ = ("parent", "token", "logprob", "rank")

    def __init__(self, parent: "_Node | None", token: int, logprob: float, rank: int):
        self.parent = parent
        self.token = token
        self.logprob = logprob
        self.rank = rank

    def sequence(self) -> tuple[int, ...]:
        toks: list[int] = []
        node = self
        while node.parent is not None:
            toks.append(node.token)
            node = node.parent
        toks.reverse()
        return tuple(toks)


def decode(scorer: Scorer, fsm: ConstraintFSM, cfg: DecodeConfig = DecodeConfig()) -> DecodeResult:
    """Run constrained beam search and post-select the best finisher.

    Raises :class:`VocabMismatchError` when scorer and FSM disagree on
    vocabulary size, and :class:`NoHypothesisError` when the quota
    cannot be met and the fallback is disabled.
    """
    vocab = scorer.vocab
    if len(vocab) != fsm.vocab_size:
        raise VocabMismatchError(
            f"scorer vocabulary has {len(vocab)} tokens, FSM expects {fsm.vocab_size}"
        )
    eos = vocab.eos_id
    trans = fsm.transitions

    # Token ids grouped by target state, per source state (end sentinel
    # handled separately).
    groups_cache: dict[int, list[tuple[int, np.ndarray]]] = {}

    def groups_for(state: int) -> list[tuple[int, np.ndarray]]:
        got = groups_cache.get(state)
        if got is None:
            row = trans[state]
            got = []
            for target in np.unique(row):
                toks = np.flatnonzero(row == target)
                toks = toks[toks != eos]
                if toks.size:
                    got.append((int(target), toks))
            groups_cache[state] = got
        return got

    root = _Node(None, -1, 0.0, 0)
    live: dict[int, list[_Node]] = {fsm.initial_state: [root]}
    finished: dict[int, list[tuple[float, tuple[int, ...]]]] = {}

    for step in range(cfg.max_len + 1):
        rows: dict[int, np.ndarray] = {
            s: np.stack([scorer.next_logprobs(node.sequence()) for node in nodes])
            for s, nodes in live.items()
        }

        for s in sorted(live):
            nodes = live[s]
            target = int(trans[s, eos])
            bucket = finished.setdefault(target, [])
            eos_scores = rows[s][:, eos]
            for node, extra in zip(nodes, eos_scores):
                bucket.append((node.logprob + float(extra), node.sequence() + (eos,)))
            bucket.sort(key=lambda entry: (-entry[0], entry[1]))
            del bucket[cfg.beam_width:]

        if step == cfg.max_len:
            break

        # Gather candidate extensions per target state.
        registry: list[_Node] = []
        cand: dict[int, list[list[np.ndarray]]] = {}
        for s in sorted(live):
            nodes = live[s]
            scores = np.array([n.logprob for n in nodes])[:, None] + rows[s]
            ranks = np.array([n.rank for n in nodes])
            base = len(registry)
            registry.extend(nodes)
            parents = np.arange(base, base + len(nodes))
            for target, toks in groups_for(s):
                sub = scores[:, toks]
                lists = cand.setdefault(target, [[], [], [], []])
                lists[0].append(sub.ravel())
                lists[1].append(np.repeat(ranks, toks.size))
                lists[2].append(np.tile(toks, len(nodes)))
                lists[3].append(np.repeat(parents, toks.size))

        new_nodes: list[_Node] = []
        live = {}
        for target in sorted(cand):
            lp, rank, tok, parent = (np.concatenate(part) for part in cand[target])
            order = np.lexsort((tok, rank, -lp))[: cfg.beam_width]
            beam = [
                _Node(registry[parent[i]], int(tok[i]), float(lp[i]), -1)
                for i in order
            ]
            live[target] = beam
            new_nodes.extend(beam)

        # Refresh global lexicographic ranks for the new generation.
        parent_ranks = np.array([n.parent.rank for n in new_nodes])
        tokens = np.array([n.token for n in new_nodes])
        for pos, idx in enumerate(np.lexsort((tokens, parent_ranks))):
            new_nodes[idx].rank = int(pos)

    if cfg.length_normalize:
        sort_key: Callable = lambda entry: (-entry[0] / len(entry[1]), entry[1])
    else:
        sort_key = lambda entry: (-entry[0], entry[1])

    def best_at(quota: int) -> tuple[float, tuple[int, ...], int] | None:
        pool = [
            (lp, seq, s)
            for s, bucket in finished.items()
            if fsm.satisfied_count(s) >= quota
            for lp, seq in bucket
        ]
        if not pool:
            return None
        lp, seq, s = min(pool, key=lambda entry: sort_key(entry[:2]))
        return lp, seq, s

    best = best_at(fsm.min_satisfied)
    if best is None:
        if not cfg.min_satisfied_fallback:
            raise NoHypothesisError(
                f"no completed hypothesis satisfies {fsm.min_satisfied} "
                f"constraint(s) within {cfg.max_len} tokens"
            )
        for quota in range(fsm.min_satisfied - 1, -1, -1):
            best = best_at(quota)
            if best is not None:
                break
    if best is None:
        raise NoHypothesisError("no completed hypothesis at any satisfaction tier")

    logprob, seq, state = best
    finalists = {
        s: tuple(BeamHypothesis(seq, lp, s, True) for lp, seq in bucket)
        for s, bucket in sorted(finished.items())
        if bucket
    }
    return DecodeResult(
        tokens=seq,
        logprob=logprob,
        satisfied_count=fsm.satisfied_count(state),
        per_state_finalists=finalists,
    )


def decode_unconstrained(
    scorer: Scorer, beam_width: int = 5, max_len: int = 20
) -> DecodeResult:
    """Standard beam search: decoding against the trivial one-state machine."""
    fsm = compile_fsm([], 0, scorer.vocab)
    return decode(scorer, fsm, DecodeConfig(beam_width=beam_width, max_len=max_len))

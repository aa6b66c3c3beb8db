"""Shared test oracles, all deliberately independent of the library's
FSM/beam machinery: plain substring scans and exhaustive enumeration."""

from __future__ import annotations

import itertools
import random

from lexbeam import BigramModel, ConstraintGroup, Vocabulary


def contains_phrase(seq, phrase) -> bool:
    phrase = tuple(phrase)
    return any(
        tuple(seq[i : i + len(phrase)]) == phrase
        for i in range(len(seq) - len(phrase) + 1)
    )


def scan_satisfied(seq, groups_ids) -> int:
    """Number of groups with some alternative contiguous in ``seq``."""
    return sum(
        1
        for alts in groups_ids
        if any(contains_phrase(seq, alt) for alt in alts)
    )


def groups_to_ids(groups: list[ConstraintGroup], vocab: Vocabulary):
    return [tuple(vocab.ids(alt) for alt in g.alternatives) for g in groups]


def sequence_logprob(scorer, seq) -> float:
    """Log-probability of a content sequence terminated by the end
    sentinel, accumulated step by step."""
    lp = 0.0
    for i in range(len(seq)):
        lp += float(scorer.next_logprobs(seq[:i])[seq[i]])
    lp += float(scorer.next_logprobs(seq)[scorer.vocab.eos_id])
    return lp


def all_sequences(alphabet, max_len):
    for length in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=length)


def constrained_argmax(scorer, groups_ids, quota, max_len):
    """Exhaustive constrained argmax over content sequences of length
    <= max_len (any non-end token may appear). Returns (logprob, seq)
    with ties broken toward the lexicographically smallest sequence,
    or None when no sequence meets the quota."""
    vocab = scorer.vocab
    alphabet = [i for i in range(len(vocab)) if i != vocab.eos_id]
    best = None
    for seq in all_sequences(alphabet, max_len):
        if scan_satisfied(seq, groups_ids) < quota:
            continue
        lp = sequence_logprob(scorer, seq)
        if best is None or lp > best[0] or (lp == best[0] and seq < best[1]):
            best = (lp, seq)
    return best


def random_bigram(rng: random.Random, vocab: Vocabulary) -> BigramModel:
    size = len(vocab)
    counts = {
        (v, w): rng.randrange(0, 5)
        for v in range(size)
        for w in range(size)
        if w != vocab.bos_id
    }
    alpha = rng.choice([0.1, 0.5, 1.0, 2.0])
    return BigramModel(vocab, counts, alpha)


def random_groups(
    rng: random.Random,
    vocab: Vocabulary,
    max_groups: int = 3,
    max_phrase_len: int = 1,
    max_alts: int = 2,
) -> list[ConstraintGroup]:
    content = list(vocab.content_tokens)
    n = rng.randint(1, max_groups)
    groups = []
    for g in range(n):
        alts = []
        for _ in range(rng.randint(1, max_alts)):
            length = rng.randint(1, max_phrase_len)
            alts.append(tuple(rng.choice(content) for _ in range(length)))
        groups.append(ConstraintGroup(label=f"g{g}", alternatives=tuple(alts)))
    return groups

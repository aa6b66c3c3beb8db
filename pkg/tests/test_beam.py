import random

import numpy as np
import pytest

from lexbeam import (
    BigramModel,
    ConstraintGroup,
    DecodeConfig,
    TableScorer,
    Vocabulary,
    compile_fsm,
    decode,
    decode_unconstrained,
)
from lexbeam.errors import NoHypothesisError, VocabMismatchError

from helpers import (
    constrained_argmax,
    groups_to_ids,
    random_bigram,
    random_groups,
    scan_satisfied,
    sequence_logprob,
)


def exhaustive_width(vocab, max_len):
    # every content/start token may extend a hypothesis; the end token
    # only finishes them
    return (len(vocab) - 1) ** max_len


def test_two_constraints_match_bruteforce_argmax():
    vocab = Vocabulary(["a", "b", "c"])
    model = BigramModel.fit(["a a b", "c a", "b c"], alpha=1.0, vocab=vocab)
    groups = [ConstraintGroup("b", (("b",),)), ConstraintGroup("c", (("c",),))]
    fsm = compile_fsm(groups, 2, vocab)
    result = decode(model, fsm, DecodeConfig(beam_width=64, max_len=4))
    expected = constrained_argmax(model, groups_to_ids(groups, vocab), 2, 4)
    assert result.logprob == pytest.approx(expected[0], abs=1e-9)
    assert result.tokens == expected[1] + (vocab.eos_id,)
    assert result.satisfied_count == 2


def test_fallback_tier_when_quota_is_unreachable():
    vocab = Vocabulary(["a", "b", "c"])
    model = BigramModel.fit(["a b", "c"], alpha=1.0, vocab=vocab)
    groups = [ConstraintGroup("b", (("b",),)), ConstraintGroup("c", (("c",),))]
    fsm = compile_fsm(groups, 2, vocab)
    result = decode(model, fsm, DecodeConfig(beam_width=64, max_len=1))
    assert result.satisfied_count == 1
    expected = constrained_argmax(model, groups_to_ids(groups, vocab), 1, 1)
    assert result.logprob == pytest.approx(expected[0], abs=1e-9)


def test_no_hypothesis_when_fallback_disabled():
    vocab = Vocabulary(["a", "b", "c"])
    model = BigramModel.fit(["a b c"], vocab=vocab)
    groups = [ConstraintGroup("b", (("b",),)), ConstraintGroup("c", (("c",),))]
    fsm = compile_fsm(groups, 2, vocab)
    with pytest.raises(NoHypothesisError):
        decode(
            model,
            fsm,
            DecodeConfig(beam_width=64, max_len=1, min_satisfied_fallback=False),
        )


def test_empty_constraints_equal_unconstrained_bitwise():
    rng = random.Random(42)
    for _ in range(20):
        vocab = Vocabulary([f"w{i}" for i in range(rng.randint(1, 4))])
        model = random_bigram(rng, vocab)
        cfg = DecodeConfig(beam_width=rng.randint(1, 6), max_len=rng.randint(1, 5))
        via_fsm = decode(model, compile_fsm([], 0, vocab), cfg)
        direct = decode_unconstrained(model, cfg.beam_width, cfg.max_len)
        assert via_fsm == direct


def test_randomized_oracle_optimality():
    rng = random.Random(2718)
    for _ in range(40):
        size = rng.randint(2, 3)
        vocab = Vocabulary([f"w{i}" for i in range(size)])
        model = random_bigram(rng, vocab)
        groups = random_groups(rng, vocab, max_groups=2, max_phrase_len=2)
        quota = rng.randint(1, len(groups))
        max_len = rng.randint(3, 4)
        fsm = compile_fsm(groups, quota, vocab)
        result = decode(
            model,
            fsm,
            DecodeConfig(beam_width=exhaustive_width(vocab, max_len), max_len=max_len),
        )
        expected = constrained_argmax(model, groups_to_ids(groups, vocab), quota, max_len)
        if expected is None or expected[0] == float("-inf"):
            continue
        assert result.satisfied_count >= quota
        assert result.logprob == pytest.approx(expected[0], abs=1e-9)


def test_constraint_guarantee_via_substring_scan():
    rng = random.Random(31)
    for _ in range(60):
        vocab = Vocabulary([f"w{i}" for i in range(rng.randint(2, 4))])
        model = random_bigram(rng, vocab)
        groups = random_groups(rng, vocab, max_groups=2, max_phrase_len=2)
        quota = rng.randint(1, len(groups))
        fsm = compile_fsm(groups, quota, vocab)
        try:
            result = decode(
                model,
                fsm,
                DecodeConfig(
                    beam_width=4, max_len=6, min_satisfied_fallback=False
                ),
            )
        except NoHypothesisError:
            continue
        content = vocab.strip_sentinels(result.tokens)
        assert scan_satisfied(content, groups_to_ids(groups, vocab)) >= quota


def test_constrained_never_beats_unconstrained_with_exhaustive_beams():
    rng = random.Random(90125)
    for _ in range(15):
        vocab = Vocabulary([f"w{i}" for i in range(2)])
        model = random_bigram(rng, vocab)
        groups = random_groups(rng, vocab, max_groups=2, max_phrase_len=2)
        max_len = 4
        width = exhaustive_width(vocab, max_len)
        fsm = compile_fsm(groups, len(groups), vocab)
        constrained = decode(model, fsm, DecodeConfig(beam_width=width, max_len=max_len))
        unconstrained = decode_unconstrained(model, width, max_len)
        assert constrained.logprob <= unconstrained.logprob + 1e-12


def test_ties_break_toward_lexicographically_smallest_sequence():
    vocab = Vocabulary(["u", "v"])
    no_end = np.log(np.full(len(vocab), 1 / (len(vocab) - 1)))
    no_end[vocab.eos_id] = -np.inf
    uniform = np.log(np.full(len(vocab), 1 / len(vocab)))
    scorer = TableScorer(vocab, {(): no_end}, default=uniform)
    result = decode_unconstrained(scorer, beam_width=2, max_len=1)
    # every single-token caption has identical score; smallest token id wins
    assert result.tokens == (vocab.bos_id, vocab.eos_id)
    again = decode_unconstrained(scorer, beam_width=2, max_len=1)
    assert result == again


def test_deterministic_across_repeats():
    rng = random.Random(808)
    vocab = Vocabulary(["a", "b", "c"])
    model = random_bigram(rng, vocab)
    groups = random_groups(rng, vocab, max_groups=2, max_phrase_len=2)
    fsm = compile_fsm(groups, 1, vocab)
    cfg = DecodeConfig(beam_width=3, max_len=5)
    assert decode(model, fsm, cfg) == decode(model, fsm, cfg)


def test_finalist_states_are_consistent_with_their_tokens():
    rng = random.Random(99)
    vocab = Vocabulary(["a", "b", "c"])
    model = random_bigram(rng, vocab)
    groups = random_groups(rng, vocab, max_groups=2, max_phrase_len=2)
    fsm = compile_fsm(groups, 1, vocab)
    result = decode(model, fsm, DecodeConfig(beam_width=4, max_len=4))
    assert result.per_state_finalists
    for state, finalists in result.per_state_finalists.items():
        for hyp in finalists:
            assert hyp.complete
            assert hyp.fsm_state == state
            assert fsm.run(hyp.tokens) == state
            assert hyp.logprob == pytest.approx(
                sequence_logprob(model, hyp.tokens[:-1]), abs=1e-9
            )


def test_greedy_beam_matches_repeated_argmax():
    vocab = Vocabulary(["a", "b"])
    a, b, eos = vocab.id("a"), vocab.id("b"), vocab.eos_id

    def row(**probs):
        vec = np.full(len(vocab), 1e-9)
        for tok, p in probs.items():
            vec[{"a": a, "b": b, "eos": eos}[tok]] = p
        vec = np.log(vec / vec.sum())
        return vec

    scorer = TableScorer(
        vocab,
        {
            (): row(a=0.9, b=0.1),
            (a,): row(b=0.8, a=0.1, eos=0.1),
            (a, b): row(eos=0.95, a=0.05),
        },
        default=row(eos=1.0),
    )
    result = decode_unconstrained(scorer, beam_width=1, max_len=5)
    # repeated argmax: a, then b, then end
    assert result.tokens == (a, b, eos)


def test_immediate_end_gives_empty_caption_with_logprob_zero():
    vocab = Vocabulary(["a"])
    eos_row = np.full(len(vocab), -np.inf)
    eos_row[vocab.eos_id] = 0.0
    scorer = TableScorer(vocab, {}, default=eos_row)
    result = decode_unconstrained(scorer, beam_width=2, max_len=3)
    assert result.tokens == (vocab.eos_id,)
    assert result.logprob == 0.0


def test_vocab_mismatch_raises():
    v1 = Vocabulary(["a"])
    v2 = Vocabulary(["a", "b"])
    model = BigramModel.fit(["a"], vocab=v1)
    fsm = compile_fsm([], 0, v2)
    with pytest.raises(VocabMismatchError):
        decode(model, fsm)


def test_length_normalization_changes_selection_not_reported_logprob():
    vocab = Vocabulary(["a", "b"])
    a, b, eos = vocab.id("a"), vocab.id("b"), vocab.eos_id

    def norm(vec):
        vec = np.asarray(vec, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(vec / vec.sum())

    # short caption: lp("a") = log(.6 * .5); long: lp("b b b") decays slower
    # per token, so normalization prefers it.
    rows = {
        (): norm([0, 0, 0.6, 0.4]),
        (a,): norm([0, 0.5, 0.25, 0.25]),
        (b,): norm([0, 0.1, 0.01, 0.89]),
        (b, b): norm([0, 0.1, 0.01, 0.89]),
        (b, b, b): norm([0, 0.9, 0.05, 0.05]),
    }
    scorer = TableScorer(vocab, rows, default=norm([0, 1.0, 0.001, 0.001]))
    raw = decode_unconstrained(scorer, beam_width=8, max_len=3)
    cfg = DecodeConfig(beam_width=8, max_len=3, length_normalize=True)
    normalized = decode(scorer, compile_fsm([], 0, vocab), cfg)
    assert raw.tokens != normalized.tokens
    assert normalized.logprob == pytest.approx(
        sequence_logprob(scorer, normalized.tokens[:-1]), abs=1e-12
    )


def test_config_validation():
    with pytest.raises(ValueError):
        DecodeConfig(beam_width=0)
    with pytest.raises(ValueError):
        DecodeConfig(max_len=0)


def test_decode_at_working_scale_stays_fast():
    import time

    rng = random.Random(0)
    vocab = Vocabulary([f"w{i}" for i in range(2_000)])
    counts = {
        (rng.randrange(len(vocab)), rng.randrange(2, len(vocab))): rng.randrange(1, 9)
        for _ in range(30_000)
    }
    model = BigramModel(vocab, counts, alpha=0.1)
    groups = [
        ConstraintGroup("a", (("w10",), ("w11", "w12"))),
        ConstraintGroup("b", (("w20",),)),
        ConstraintGroup("c", (("w30", "w31"),)),
    ]
    fsm = compile_fsm(groups, 2, vocab)
    started = time.monotonic()
    result = decode(model, fsm, DecodeConfig(beam_width=10, max_len=16))
    assert time.monotonic() - started < 5.0
    assert result.satisfied_count >= 2


def test_sentinel_tokens_may_appear_in_constraints():
    # legal but unusual: the end sentinel is routed through the
    # transition table like any token, so a group keyed on it is
    # satisfied exactly when a hypothesis finishes
    vocab = Vocabulary(["a", "b"])
    model = BigramModel.fit(["a b", "b a"], vocab=vocab)
    from lexbeam import EOS

    fsm = compile_fsm([ConstraintGroup("end", ((EOS,),))], 1, vocab)
    assert fsm.satisfied_count(fsm.step(0, vocab.eos_id)) == 1
    result = decode(model, fsm, DecodeConfig(beam_width=4, max_len=3))
    assert result.satisfied_count == 1
    assert result.tokens[-1] == vocab.eos_id


def test_decode_with_empty_content_vocabulary():
    vocab = Vocabulary([])
    model = BigramModel.fit([[]], vocab=vocab)
    result = decode_unconstrained(model, beam_width=2, max_len=2)
    assert vocab.strip_sentinels(result.tokens) == ()


def test_concurrent_decodes_share_one_fsm_and_scorer():
    from concurrent.futures import ThreadPoolExecutor

    rng = random.Random(61)
    vocab = Vocabulary(["a", "b", "c"])
    model = random_bigram(rng, vocab)
    groups = random_groups(rng, vocab, max_groups=2, max_phrase_len=2)
    fsm = compile_fsm(groups, 1, vocab)
    cfg = DecodeConfig(beam_width=4, max_len=5)
    reference = decode(model, fsm, cfg)
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda _: decode(model, fsm, cfg), range(32)))
    assert all(r == reference for r in results)
    # compiled tables are immutable
    with pytest.raises(ValueError):
        fsm.transitions[0, 0] = 1

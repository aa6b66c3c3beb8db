#!/usr/bin/env python3
"""Walkthrough: forcing words into a decoded caption.

A tiny bigram language model is fit on a handful of sentences. Plain
beam search then happily talks about dogs in parks; by compiling the
words we *require* into a finite state machine and running constrained
beam search, the decoder is forced to mention them while still picking
the most probable phrasing it can.
"""

from lexbeam import (
    BigramModel,
    ConstraintGroup,
    DecodeConfig,
    PhraseMatchMode,
    Vocabulary,
    compile_fsm,
    decode,
    decode_unconstrained,
)

CORPUS = [
    "a dog ran in the park",
    "the dog ran after the ball",
    "a red ball in the grass",
    "the cat sat in the grass",
    "a fire hydrant in the park",
    "the dog ran after the cat",
    "a cat sat near the fire hydrant",
]


def show(tag, result, vocab):
    caption = " ".join(vocab.words(vocab.strip_sentinels(result.tokens)))
    print(f"  {tag:<28} {caption!r}")
    print(f"  {'':<28} logprob={result.logprob:.3f} satisfied={result.satisfied_count}")


def main():
    words = sorted({w for sent in CORPUS for w in sent.split()})
    vocab = Vocabulary(words)
    model = BigramModel.fit(CORPUS, alpha=0.1, vocab=vocab)

    print("== unconstrained beam search ==")
    baseline = decode_unconstrained(model, beam_width=6, max_len=10)
    show("baseline", baseline, vocab)

    print("\n== require 2 of: cat, ball, hydrant (with word forms) ==")
    groups = [
        ConstraintGroup("cat", (("cat",),)),
        ConstraintGroup("ball", (("ball",),)),
        ConstraintGroup("hydrant", (("fire", "hydrant"),)),
    ]
    fsm = compile_fsm(groups, min_satisfied=2, vocab=vocab)
    print(f"  compiled machine: {fsm.state_count} states, "
          f"{len(fsm.accepting_states())} accepting")
    constrained = decode(model, fsm, DecodeConfig(beam_width=6, max_len=10))
    show("at least 2 of 3", constrained, vocab)

    print("\n== quota too strict for the budget: fallback tiers ==")
    tight = decode(model, fsm, DecodeConfig(beam_width=6, max_len=1))
    show("max_len=1, quota 2", tight, vocab)

    print("\n== phrase mismatch semantics ==")
    phrase = [ConstraintGroup("hydrant", (("fire", "hydrant"),))]
    for mode in PhraseMatchMode:
        m = compile_fsm(phrase, 1, vocab, mode)
        state = m.run(vocab.ids(["fire", "fire", "hydrant"]))
        print(f"  mode={mode.value:<9} 'fire fire hydrant' accepted: {m.accepting(state)}")
    print("  (the failure-function mode keeps the restarted prefix alive)")


if __name__ == "__main__":
    main()

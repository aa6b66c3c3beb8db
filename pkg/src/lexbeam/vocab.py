"""Token table with dense ids and reserved sequence sentinels."""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

from .errors import UnknownTokenError

BOS = "<s>"
EOS = "</s>"


class Vocabulary:
    """An ordered token table.

    Ids are dense integers starting at 0. The sequence-start and
    sequence-end sentinels are always present and occupy ids 0 and 1;
    content tokens follow in the order given.

    Parameters
    ----------
    words:
        Content token strings, unique, excluding the sentinels.
    """

    __slots__ = ("tokens", "bos_id", "eos_id", "_index")

    def __init__(self, words: Iterable[str], bos: str = BOS, eos: str = EOS):
        if bos == eos:
            raise ValueError("start and end sentinels must differ")
        tokens = [bos, eos]
        tokens.extend(words)
        index: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if tok in index:
                raise ValueError(f"duplicate token {tok!r}")
            index[tok] = i
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.bos_id = 0
        self.eos_id = 1
        self._index = index

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __repr__(self) -> str:
        return f"Vocabulary({len(self)} tokens)"

    def id(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise UnknownTokenError(f"token {token!r} not in vocabulary") from None

    def ids(self, tokens: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.id(t) for t in tokens)

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise UnknownTokenError(f"token id {token_id} out of range")
        return self.tokens[token_id]

    def words(self, token_ids: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.token(i) for i in token_ids)

    @property
    def content_tokens(self) -> tuple[str, ...]:
        """Tokens excluding the two sentinels, in id order."""
        return self.tokens[2:]

    def strip_sentinels(self, token_ids: Sequence[int]) -> tuple[int, ...]:
        """Drop start/end sentinel ids, e.g. to render a caption."""
        return tuple(i for i in token_ids if i not in (self.bos_id, self.eos_id))

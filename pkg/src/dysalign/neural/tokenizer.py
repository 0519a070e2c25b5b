"""Token and character vocabularies for the neural aligner.

Phoneme vocabularies are fixed by the inventory.  Word vocabularies are
built from a corpus; words are additionally decomposed into characters so
the model can embed out-of-vocabulary words from their spelling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import ModelError
from ..phonemes import INVENTORY, Level, TokenSequence

PAD = "<pad>"
SEP = "<sep>"
UNK = "<unk>"

SPECIALS = (PAD, SEP, UNK)

CHAR_PAD = "<cpad>"
CHAR_UNK = "<cunk>"

_CHARSET = "abcdefghijklmnopqrstuvwxyz'-"


@dataclass(frozen=True)
class TokenizerSpec:
    level: Level
    vocab: dict[str, int]
    char_vocab: dict[str, int] | None = None

    def __post_init__(self):
        ids = sorted(self.vocab.values())
        if ids != list(range(len(ids))) or self.vocab[PAD] != 0:
            raise ModelError("vocabulary ids must be dense with PAD=0")
        if self.level is Level.WORD and self.char_vocab is None:
            raise ModelError("word-level tokenizers need a character vocabulary")

    @property
    def size(self) -> int:
        return len(self.vocab)

    @property
    def char_size(self) -> int:
        return len(self.char_vocab) if self.char_vocab else 0

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        unk = self.vocab[UNK]
        return np.array([self.vocab.get(t, unk) for t in tokens], dtype=np.int64)

    def decode(self, ids: Iterable[int]) -> list[str]:
        rev = {i: t for t, i in self.vocab.items()}
        return [rev[int(i)] for i in ids]

    def encode_chars(self, word: str, max_len: int) -> np.ndarray:
        """Character ids for one word, cropped/padded to max_len."""
        assert self.char_vocab is not None
        unk = self.char_vocab[CHAR_UNK]
        pad = self.char_vocab[CHAR_PAD]
        ids = [self.char_vocab.get(c, unk) for c in word[:max_len]]
        ids += [pad] * (max_len - len(ids))
        return np.array(ids, dtype=np.int64)


def build_tokenizer(
    level: Level, corpus: Iterable[TokenSequence] = ()
) -> TokenizerSpec:
    """Phoneme vocabularies are static; word vocabularies come from data."""
    if level is Level.PHONEME:
        vocab = {t: i for i, t in enumerate(SPECIALS + INVENTORY)}
        return TokenizerSpec(level, vocab)
    words = sorted({tok for seq in corpus for tok in seq})
    vocab = {t: i for i, t in enumerate(SPECIALS + tuple(words))}
    char_vocab = {c: i for i, c in enumerate((CHAR_PAD, CHAR_UNK) + tuple(_CHARSET))}
    return TokenizerSpec(level, vocab, char_vocab)

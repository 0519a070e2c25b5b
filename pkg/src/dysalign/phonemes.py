"""CMU phoneme inventory, articulatory categories, and similarity relations.

The inventory is the 39-symbol CMU set partitioned into seven articulatory
categories.  HH is treated as a fricative (aspirate with continuant airflow);
it is the one phoneme whose category is a local convention rather than
received ground truth.  Stress digits (AH0/AH1/AH2) are stripped on
ingestion; everything downstream is stress-insensitive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InventoryError, ValidationError

CATEGORIES: dict[str, tuple[str, ...]] = {
    "Plosive": ("P", "B", "T", "D", "K", "G"),
    "Fricative": ("F", "V", "TH", "DH", "S", "Z", "SH", "ZH", "HH"),
    "Affricate": ("CH", "JH"),
    "Nasal": ("M", "N", "NG"),
    "Liquid": ("L", "R"),
    "Glide": ("W", "Y"),
    "Vowel": (
        "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
        "EY", "IH", "IY", "OW", "OY", "UH", "UW",
    ),
}

CATEGORY_OF: dict[str, str] = {
    symbol: name for name, members in CATEGORIES.items() for symbol in members
}

#: All 39 phonemes in a fixed canonical order (category blocks as above).
INVENTORY: tuple[str, ...] = tuple(
    symbol for members in CATEGORIES.values() for symbol in members
)

_INDEX_OF: dict[str, int] = {symbol: i for i, symbol in enumerate(INVENTORY)}


class Similarity(enum.Enum):
    EXACT = "exact"
    SIMILAR = "similar"
    DISSIMILAR = "dissimilar"


class Level(enum.Enum):
    PHONEME = "phoneme"
    WORD = "word"


def strip_stress(symbol: str) -> str:
    """AH0/AH1/AH2 -> AH; symbols without a digit pass through."""
    if symbol and symbol[-1].isdigit():
        return symbol[:-1]
    return symbol


def phoneme_index(symbol: str) -> int:
    """Position of ``symbol`` in the canonical inventory order."""
    try:
        return _INDEX_OF[symbol]
    except KeyError:
        raise InventoryError(f"unknown phoneme symbol: {symbol!r}") from None


def category_of(symbol: str) -> str:
    """Articulatory category name for a phoneme symbol."""
    try:
        return CATEGORY_OF[symbol]
    except KeyError:
        raise InventoryError(f"unknown phoneme symbol: {symbol!r}") from None


def similar(a: str, b: str) -> Similarity:
    """Similarity relation between two phonemes.

    Exact for identical symbols, Similar for distinct symbols sharing an
    articulatory category, Dissimilar across categories.
    """
    ca, cb = category_of(a), category_of(b)
    if a == b:
        return Similarity.EXACT
    return Similarity.SIMILAR if ca == cb else Similarity.DISSIMILAR


def token_similarity(level: Level, a: str, b: str) -> Similarity:
    """Similarity for tokens at either level.

    Words have no category structure: they are Exact when equal and
    Dissimilar otherwise.
    """
    if level is Level.PHONEME:
        return similar(a, b)
    return Similarity.EXACT if a == b else Similarity.DISSIMILAR


def sample_confusable(symbol: str, rng: np.random.Generator) -> str:
    """Draw a phoneme uniformly from ``symbol``'s category, excluding itself.

    Falls back to a uniform draw over all other phonemes if the category is
    a singleton (unreachable with the built-in inventory).
    """
    pool = [p for p in CATEGORIES[category_of(symbol)] if p != symbol]
    if not pool:
        pool = [p for p in INVENTORY if p != symbol]
    return pool[int(rng.integers(len(pool)))]


def sample_dissimilar(
    symbol: str, rng: np.random.Generator, avoid: Iterable[str] = ()
) -> str:
    """Draw a phoneme from a different category than ``symbol``.

    Also avoids the categories of every phoneme in ``avoid`` so the draw is
    dissimilar to all of them.
    """
    blocked = {category_of(symbol)}
    blocked.update(category_of(p) for p in avoid)
    pool = [p for p in INVENTORY if CATEGORY_OF[p] not in blocked]
    if not pool:
        raise InventoryError(f"no phoneme dissimilar to {sorted(blocked)}")
    return pool[int(rng.integers(len(pool)))]


@dataclass(frozen=True)
class TokenSequence:
    """An ordered, level-homogeneous sequence of tokens.

    Phoneme tokens are uppercase CMU symbols validated against the
    inventory; word tokens are non-empty lowercase strings.
    """

    level: Level
    tokens: tuple[str, ...]

    def __post_init__(self):
        for t in self.tokens:
            _validate_token(self.level, t)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def text(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def parse(cls, text: str, level: Level) -> "TokenSequence":
        """Parse a space-separated token string, stripping stress digits."""
        raw = text.split()
        if level is Level.PHONEME:
            raw = [strip_stress(t.upper()) for t in raw]
        else:
            raw = [t.lower() for t in raw]
        return cls(level, tuple(raw))


def _validate_token(level: Level, value: str) -> None:
    if level is Level.PHONEME:
        if value not in CATEGORY_OF:
            raise InventoryError(f"unknown phoneme symbol: {value!r}")
    else:
        if not value:
            raise ValidationError("word tokens must be non-empty")


def inventory_table() -> list[dict[str, str]]:
    """Inventory rows (symbol, category) for the CLI dump."""
    return [{"symbol": p, "category": CATEGORY_OF[p]} for p in INVENTORY]

"""Built-in demo lexicon and reference-text sampler.

A small word -> CMU-phoneme lookup so the toolkit can turn plain English
lines into phoneme references without a full G2P stack.  Every inventory
phoneme occurs in at least one entry.  Pronunciations are stress-stripped.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .phonemes import Level, TokenSequence

LEXICON: dict[str, tuple[str, ...]] = {
    "a": ("AH",),
    "the": ("DH", "AH"),
    "pen": ("P", "EH", "N"),
    "on": ("AA", "N"),
    "table": ("T", "EY", "B", "AH", "L"),
    "and": ("AE", "N", "D"),
    "of": ("AH", "V"),
    "in": ("IH", "N"),
    "to": ("T", "UW"),
    "it": ("IH", "T"),
    "is": ("IH", "Z"),
    "at": ("AE", "T"),
    "we": ("W", "IY"),
    "he": ("HH", "IY"),
    "she": ("SH", "IY"),
    "you": ("Y", "UW"),
    "for": ("F", "AO", "R"),
    "not": ("N", "AA", "T"),
    "but": ("B", "AH", "T"),
    "answer": ("AE", "N", "S", "ER"),
    "apple": ("AE", "P", "AH", "L"),
    "arm": ("AA", "R", "M"),
    "ask": ("AE", "S", "K"),
    "baby": ("B", "EY", "B", "IY"),
    "back": ("B", "AE", "K"),
    "bad": ("B", "AE", "D"),
    "banana": ("B", "AH", "N", "AE", "N", "AH"),
    "big": ("B", "IH", "G"),
    "bird": ("B", "ER", "D"),
    "blue": ("B", "L", "UW"),
    "book": ("B", "UH", "K"),
    "boy": ("B", "OY"),
    "bread": ("B", "R", "EH", "D"),
    "breakfast": ("B", "R", "EH", "K", "F", "AH", "S", "T"),
    "brother": ("B", "R", "AH", "DH", "ER"),
    "butter": ("B", "AH", "T", "ER"),
    "cat": ("K", "AE", "T"),
    "cheese": ("CH", "IY", "Z"),
    "chicken": ("CH", "IH", "K", "AH", "N"),
    "child": ("CH", "AY", "L", "D"),
    "city": ("S", "IH", "T", "IY"),
    "class": ("K", "L", "AE", "S"),
    "clock": ("K", "L", "AA", "K"),
    "close": ("K", "L", "OW", "Z"),
    "cloud": ("K", "L", "AW", "D"),
    "cold": ("K", "OW", "L", "D"),
    "come": ("K", "AH", "M"),
    "cool": ("K", "UW", "L"),
    "cow": ("K", "AW"),
    "day": ("D", "EY"),
    "dinner": ("D", "IH", "N", "ER"),
    "doctor": ("D", "AA", "K", "T", "ER"),
    "dog": ("D", "AO", "G"),
    "door": ("D", "AO", "R"),
    "drink": ("D", "R", "IH", "NG", "K"),
    "duck": ("D", "AH", "K"),
    "ear": ("IY", "R"),
    "eat": ("IY", "T"),
    "evening": ("IY", "V", "N", "IH", "NG"),
    "eye": ("AY",),
    "family": ("F", "AE", "M", "AH", "L", "IY"),
    "farm": ("F", "AA", "R", "M"),
    "fast": ("F", "AE", "S", "T"),
    "father": ("F", "AA", "DH", "ER"),
    "field": ("F", "IY", "L", "D"),
    "find": ("F", "AY", "N", "D"),
    "fire": ("F", "AY", "ER"),
    "fish": ("F", "IH", "SH"),
    "floor": ("F", "L", "AO", "R"),
    "flower": ("F", "L", "AW", "ER"),
    "foot": ("F", "UH", "T"),
    "forest": ("F", "AO", "R", "AH", "S", "T"),
    "friend": ("F", "R", "EH", "N", "D"),
    "garden": ("G", "AA", "R", "D", "AH", "N"),
    "girl": ("G", "ER", "L"),
    "give": ("G", "IH", "V"),
    "go": ("G", "OW"),
    "goat": ("G", "OW", "T"),
    "good": ("G", "UH", "D"),
    "grass": ("G", "R", "AE", "S"),
    "green": ("G", "R", "IY", "N"),
    "hand": ("HH", "AE", "N", "D"),
    "happy": ("HH", "AE", "P", "IY"),
    "head": ("HH", "EH", "D"),
    "horse": ("HH", "AO", "R", "S"),
    "hot": ("HH", "AA", "T"),
    "house": ("HH", "AW", "S"),
    "jump": ("JH", "AH", "M", "P"),
    "jungle": ("JH", "AH", "NG", "G", "AH", "L"),
    "know": ("N", "OW"),
    "lake": ("L", "EY", "K"),
    "leg": ("L", "EH", "G"),
    "lesson": ("L", "EH", "S", "AH", "N"),
    "letter": ("L", "EH", "T", "ER"),
    "lion": ("L", "AY", "AH", "N"),
    "look": ("L", "UH", "K"),
    "make": ("M", "EY", "K"),
    "man": ("M", "AE", "N"),
    "measure": ("M", "EH", "ZH", "ER"),
    "milk": ("M", "IH", "L", "K"),
    "month": ("M", "AH", "N", "TH"),
    "moon": ("M", "UW", "N"),
    "morning": ("M", "AO", "R", "N", "IH", "NG"),
    "mother": ("M", "AH", "DH", "ER"),
    "mountain": ("M", "AW", "N", "T", "AH", "N"),
    "mouse": ("M", "AW", "S"),
    "mouth": ("M", "AW", "TH"),
    "music": ("M", "Y", "UW", "Z", "IH", "K"),
    "name": ("N", "EY", "M"),
    "new": ("N", "UW"),
    "night": ("N", "AY", "T"),
    "noise": ("N", "OY", "Z"),
    "north": ("N", "AO", "R", "TH"),
    "nose": ("N", "OW", "Z"),
    "ocean": ("OW", "SH", "AH", "N"),
    "old": ("OW", "L", "D"),
    "open": ("OW", "P", "AH", "N"),
    "orange": ("AO", "R", "AH", "N", "JH"),
    "paper": ("P", "EY", "P", "ER"),
    "pencil": ("P", "EH", "N", "S", "AH", "L"),
    "people": ("P", "IY", "P", "AH", "L"),
    "pig": ("P", "IH", "G"),
    "play": ("P", "L", "EY"),
    "question": ("K", "W", "EH", "S", "CH", "AH", "N"),
    "rain": ("R", "EY", "N"),
    "read": ("R", "IY", "D"),
    "red": ("R", "EH", "D"),
    "river": ("R", "IH", "V", "ER"),
    "road": ("R", "OW", "D"),
    "roof": ("R", "UW", "F"),
    "run": ("R", "AH", "N"),
    "say": ("S", "EY"),
    "school": ("S", "K", "UW", "L"),
    "see": ("S", "IY"),
    "sheep": ("SH", "IY", "P"),
    "ship": ("SH", "IH", "P"),
    "shoe": ("SH", "UW"),
    "sister": ("S", "IH", "S", "T", "ER"),
    "sit": ("S", "IH", "T"),
    "sleep": ("S", "L", "IY", "P"),
    "slow": ("S", "L", "OW"),
    "small": ("S", "M", "AO", "L"),
    "snow": ("S", "N", "OW"),
    "sock": ("S", "AA", "K"),
    "song": ("S", "AO", "NG"),
    "sound": ("S", "AW", "N", "D"),
    "south": ("S", "AW", "TH"),
    "stand": ("S", "T", "AE", "N", "D"),
    "star": ("S", "T", "AA", "R"),
    "stone": ("S", "T", "OW", "N"),
    "storm": ("S", "T", "AO", "R", "M"),
    "story": ("S", "T", "AO", "R", "IY"),
    "street": ("S", "T", "R", "IY", "T"),
    "sun": ("S", "AH", "N"),
    "take": ("T", "EY", "K"),
    "teacher": ("T", "IY", "CH", "ER"),
    "tell": ("T", "EH", "L"),
    "that": ("DH", "AE", "T"),
    "them": ("DH", "EH", "M"),
    "then": ("DH", "EH", "N"),
    "there": ("DH", "EH", "R"),
    "they": ("DH", "EY"),
    "thick": ("TH", "IH", "K"),
    "thin": ("TH", "IH", "N"),
    "think": ("TH", "IH", "NG", "K"),
    "this": ("DH", "IH", "S"),
    "three": ("TH", "R", "IY"),
    "tiger": ("T", "AY", "G", "ER"),
    "time": ("T", "AY", "M"),
    "town": ("T", "AW", "N"),
    "treasure": ("T", "R", "EH", "ZH", "ER"),
    "tree": ("T", "R", "IY"),
    "usual": ("Y", "UW", "ZH", "AH", "W", "AH", "L"),
    "valley": ("V", "AE", "L", "IY"),
    "vision": ("V", "IH", "ZH", "AH", "N"),
    "voice": ("V", "OY", "S"),
    "walk": ("W", "AO", "K"),
    "wall": ("W", "AO", "L"),
    "warm": ("W", "AO", "R", "M"),
    "watch": ("W", "AA", "CH"),
    "water": ("W", "AO", "T", "ER"),
    "week": ("W", "IY", "K"),
    "wind": ("W", "IH", "N", "D"),
    "window": ("W", "IH", "N", "D", "OW"),
    "with": ("W", "IH", "TH"),
    "woman": ("W", "UH", "M", "AH", "N"),
    "word": ("W", "ER", "D"),
    "write": ("R", "AY", "T"),
    "year": ("Y", "IH", "R"),
    "yellow": ("Y", "EH", "L", "OW"),
    "zebra": ("Z", "IY", "B", "R", "AH"),
}

_WORDS: tuple[str, ...] = tuple(sorted(LEXICON))


def words_to_phonemes(words: list[str], strict: bool = True) -> list[str]:
    """Look up each word; unknown words raise or are skipped."""
    out: list[str] = []
    for w in words:
        pron = LEXICON.get(w.lower())
        if pron is None:
            if strict:
                raise ValidationError(f"word not in the demo lexicon: {w!r}")
            continue
        out.extend(pron)
    return out


def line_to_sequence(line: str, level: Level, strict: bool = True) -> TokenSequence:
    """Turn a plain text line into a token sequence at the requested level.

    Phoneme level accepts either space-separated CMU symbols or raw words
    covered by the demo lexicon (the line must be entirely one or the
    other).
    """
    parts = line.split()
    if not parts:
        raise ValidationError("empty line")
    if level is Level.WORD:
        return TokenSequence(level, tuple(p.lower() for p in parts))
    if all(_looks_like_phoneme(p) for p in parts):
        return TokenSequence.parse(line, level)
    return TokenSequence(level, tuple(words_to_phonemes(parts, strict=strict)))


def _looks_like_phoneme(token: str) -> bool:
    from .phonemes import CATEGORY_OF, strip_stress

    return strip_stress(token.upper()) in CATEGORY_OF


def demo_texts(n: int, seed: int, min_words: int = 3, max_words: int = 6) -> list[str]:
    """Sample n whitespace-joined word sentences from the demo lexicon."""
    rng = np.random.default_rng([seed, 0x7E57])
    out = []
    for _ in range(n):
        k = int(rng.integers(min_words, max_words + 1))
        idx = rng.integers(0, len(_WORDS), size=k)
        out.append(" ".join(_WORDS[int(i)] for i in idx))
    return out

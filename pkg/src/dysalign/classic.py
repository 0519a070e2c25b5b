"""Deterministic aligners: hard LCS, similarity-weighted soft LCS, and DTW.

All three emit the same joint label encoding so they can be evaluated
uniformly against simulator gold.  Matching is monotone and non-crossing;
matched dysfluent tokens get label 1, unmatched dysfluent tokens 0, and
unmatched reference tokens 2.

Backtrace ties resolve as: take the match, else drop a reference token,
else consume a dysfluent token.  Walking backward from the end, this pairs
each reference token with the latest dysfluent token that still yields an
optimal alignment, consistent with the boundary rule used for gold labels
(the last exact arrival wins); dropping the reference token first is what
keeps that property when an unmatched reference token sits between two
matched ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import AlignError, OracleError
from .labels import GoldAlignment, JointLabelEncoding, d2_boundary
from .phonemes import Similarity, TokenSequence, token_similarity


@dataclass(frozen=True)
class ScoringScheme:
    """Match scores for the soft LCS.

    ``dissimilar`` is None when cross-category matches are forbidden, or a
    score when they should merely be discouraged.  ``skip_cost`` is charged
    for every unmatched token.
    """

    exact_score: float = 2.0
    similar_score: float = 1.0
    dissimilar: float | None = None
    skip_cost: float = 0.0

    def __post_init__(self):
        if self.exact_score <= self.similar_score:
            raise AlignError("exact_score must exceed similar_score")
        if self.skip_cost < 0:
            raise AlignError("skip_cost must be non-negative")


@dataclass(frozen=True)
class AlignmentResult:
    labels: JointLabelEncoding
    matched_pairs: tuple[tuple[int, int], ...]
    score: float


def _check_pair(ref: TokenSequence, dys: TokenSequence) -> None:
    if ref.level is not dys.level:
        raise AlignError("sequences must share a level")
    if len(ref) == 0 or len(dys) == 0:
        raise AlignError("alignment requires non-empty sequences")


def _labels_from_pairs(
    pairs: list[tuple[int, int]], n_ref: int, n_dys: int
) -> JointLabelEncoding:
    matched_ref = {i for i, _ in pairs}
    matched_dys = {j for _, j in pairs}
    return JointLabelEncoding(
        tuple(1 if i in matched_ref else 2 for i in range(n_ref)),
        tuple(1 if j in matched_dys else 0 for j in range(n_dys)),
    )


def hard_lcs(ref: TokenSequence, dys: TokenSequence) -> AlignmentResult:
    """Longest common subsequence with exact token matches."""
    _check_pair(ref, dys)
    n, m = len(ref), len(dys)
    length = np.zeros((n + 1, m + 1), dtype=np.int32)
    for i in range(1, n + 1):
        row = length[i]
        prev = length[i - 1]
        a = ref[i - 1]
        for j in range(1, m + 1):
            if a == dys[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = prev[j] if prev[j] >= row[j - 1] else row[j - 1]
    pairs: list[tuple[int, int]] = []
    i, j = n, m
    while i > 0 and j > 0:
        if ref[i - 1] == dys[j - 1] and length[i][j] == length[i - 1][j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif length[i - 1][j] == length[i][j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return AlignmentResult(
        _labels_from_pairs(pairs, n, m), tuple(pairs), float(len(pairs))
    )


def soft_lcs(
    ref: TokenSequence,
    dys: TokenSequence,
    scheme: ScoringScheme = ScoringScheme(),
) -> AlignmentResult:
    """LCS variant where same-category tokens may match at reduced score."""
    _check_pair(ref, dys)
    n, m = len(ref), len(dys)
    neg = float("-inf")
    score = np.zeros((n + 1, m + 1), dtype=float)
    skip = scheme.skip_cost
    for i in range(n + 1):
        score[i][0] = -skip * i
    for j in range(m + 1):
        score[0][j] = -skip * j

    def match_score(a: str, b: str) -> float:
        rel = token_similarity(ref.level, a, b)
        if rel is Similarity.EXACT:
            return scheme.exact_score
        if rel is Similarity.SIMILAR:
            return scheme.similar_score
        return neg if scheme.dissimilar is None else scheme.dissimilar

    for i in range(1, n + 1):
        a = ref[i - 1]
        for j in range(1, m + 1):
            s = match_score(a, dys[j - 1])
            best = score[i - 1][j] - skip
            alt = score[i][j - 1] - skip
            if alt > best:
                best = alt
            if s > neg:
                diag = score[i - 1][j - 1] + s
                if diag > best:
                    best = diag
            score[i][j] = best
    pairs = []
    i, j = n, m
    while i > 0 and j > 0:
        s = match_score(ref[i - 1], dys[j - 1])
        if s > neg and np.isclose(score[i][j], score[i - 1][j - 1] + s):
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif np.isclose(score[i][j], score[i - 1][j] - skip):
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return AlignmentResult(
        _labels_from_pairs(pairs, n, m), tuple(pairs), float(score[n][m])
    )


def _dtw_distance(level, a: str, b: str) -> float:
    rel = token_similarity(level, a, b)
    if rel is Similarity.EXACT:
        return 0.0
    if rel is Similarity.SIMILAR:
        return 0.5
    return 1.0


def dtw_align(ref: TokenSequence, dys: TokenSequence) -> AlignmentResult:
    """Global DTW over category-aware token distance (0 / 0.5 / 1).

    The warping path is converted to labels by giving each reference token
    the last dysfluent token on its path row, preferring exact matches,
    then same-category matches; a reference token whose row offers no
    unclaimed dysfluent token is marked missing.  The score is the total
    path cost (lower is better).
    """
    _check_pair(ref, dys)
    n, m = len(ref), len(dys)
    inf = float("inf")
    acc = np.full((n + 1, m + 1), inf)
    acc[0][0] = 0.0
    cost = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            cost[i][j] = _dtw_distance(ref.level, ref[i], dys[j])
            acc[i + 1][j + 1] = cost[i][j] + min(
                acc[i][j], acc[i][j + 1], acc[i + 1][j]
            )
    # Backtrace, preferring diagonal, then vertical, then horizontal.
    path: list[tuple[int, int]] = []
    i, j = n - 1, m - 1
    while True:
        path.append((i, j))
        if i == 0 and j == 0:
            break
        options = (acc[i][j], acc[i][j + 1], acc[i + 1][j])
        pick = int(np.argmin(options))
        if pick == 0 and i > 0 and j > 0:
            i, j = i - 1, j - 1
        elif (pick <= 1 and i > 0) or j == 0:
            i -= 1
        else:
            j -= 1
    path.reverse()

    rows: list[list[int]] = [[] for _ in range(n)]
    for i, j in path:
        rows[i].append(j)
    pairs = []
    last_used = -1
    for i in range(n):
        candidates = [j for j in rows[i] if j > last_used]
        if not candidates:
            continue
        pick = candidates[
            d2_boundary([dys[j] for j in candidates], ref[i], ref.level)
        ]
        pairs.append((i, pick))
        last_used = pick
    total = float(sum(cost[i][j] for i, j in path))
    return AlignmentResult(_labels_from_pairs(pairs, n, m), tuple(pairs), total)


def lcs_bruteforce_oracle(ref: TokenSequence, dys: TokenSequence, limit: int = 12) -> int:
    """Exhaustively enumerate common subsequences; returns the max length.

    Independent of the dynamic program: every subsequence of the shorter
    side is generated and tested for being a subsequence of the longer.
    """
    if len(ref) > limit or len(dys) > limit:
        raise OracleError(f"oracle inputs must be at most {limit} tokens")
    short, long_ = (ref.tokens, dys.tokens)
    if len(short) > len(long_):
        short, long_ = long_, short
    best = 0
    for k in range(len(short), 0, -1):
        if k <= best:
            break
        for picked in combinations(short, k):
            if _is_subsequence(picked, long_):
                best = k
                break
    return best


def _is_subsequence(sub: tuple[str, ...], seq: tuple[str, ...]) -> bool:
    it = iter(seq)
    return all(any(tok == s for s in it) for tok in sub)


def alignment_to_gold(
    result: AlignmentResult, ref: TokenSequence, dys: TokenSequence
) -> GoldAlignment:
    """Grouped view of an aligner result via the shared label codec."""
    from .labels import alignment_from_labels

    return alignment_from_labels(result.labels, ref, dys)

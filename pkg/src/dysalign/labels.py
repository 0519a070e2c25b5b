"""Joint alignment labels and the grouped-alignment codec.

The canonical alignment representation is a pair of label vectors:

* ``ref_labels[i]`` is 1 when reference token i has a spoken realization and
  2 when it is missing (deleted);
* ``dys_labels[j]`` is 1 when dysfluent token j is the boundary of some
  reference token's group and 0 when it is a dysfluent unit inside a group.

The grouped form attaches to each reference token a contiguous (possibly
empty) span of dysfluent-token indices, with one boundary token per
non-empty group.  ``gold_labels_from_alignment`` and
``alignment_from_labels`` convert between the two forms; the round trip is
exact on simulator output.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AlignmentError, CodecError
from .phonemes import Level, Similarity, TokenSequence, token_similarity

REF_PRESENT = 1
REF_MISSING = 2
DYS_BOUNDARY = 1
DYS_UNIT = 0


@dataclass(frozen=True)
class JointLabelEncoding:
    ref_labels: tuple[int, ...]
    dys_labels: tuple[int, ...]

    def __post_init__(self):
        if any(v not in (REF_PRESENT, REF_MISSING) for v in self.ref_labels):
            raise AlignmentError("ref labels must be 1 (present) or 2 (missing)")
        if any(v not in (DYS_UNIT, DYS_BOUNDARY) for v in self.dys_labels):
            raise AlignmentError("dys labels must be 0 (unit) or 1 (boundary)")

    @property
    def boundary_count(self) -> int:
        return sum(1 for v in self.dys_labels if v == DYS_BOUNDARY)

    @property
    def present_count(self) -> int:
        return sum(1 for v in self.ref_labels if v == REF_PRESENT)

    def counts_consistent(self) -> bool:
        """Each boundary pairs with one surviving reference token."""
        return self.boundary_count == self.present_count


@dataclass(frozen=True)
class GoldAlignment:
    """One group of dysfluent-token indices per reference token.

    ``groups[i]`` is a contiguous run of dys indices (empty iff reference
    token i was deleted); ``boundaries[i]`` is the index inside that run
    designated as the token's realization (None for empty groups).

    When the label codec decodes a prediction with zero boundaries over a
    non-empty dysfluent sequence, every group is empty and the dysfluent
    tokens stay unattached; ``validate`` permits that one degenerate shape
    because downstream segmentation treats it as all-missing.
    """

    groups: tuple[tuple[int, ...], ...]
    boundaries: tuple[int | None, ...]

    def validate(self, n_dys: int) -> None:
        if len(self.groups) != len(self.boundaries):
            raise AlignmentError("groups and boundaries must be parallel")
        covered = []
        for group, boundary in zip(self.groups, self.boundaries):
            if group and list(group) != list(range(group[0], group[-1] + 1)):
                raise AlignmentError(f"group {group} is not contiguous")
            if group:
                if boundary not in group:
                    raise AlignmentError(f"boundary {boundary} outside group {group}")
            elif boundary is not None:
                raise AlignmentError("empty group cannot carry a boundary")
            covered.extend(group)
        if covered:
            if covered != sorted(covered) or len(set(covered)) != len(covered):
                raise AlignmentError("groups must be ordered and disjoint")
            if covered != list(range(n_dys)):
                raise AlignmentError("groups must cover all dysfluent indices")
        elif n_dys and any(self.boundaries):
            raise AlignmentError("non-empty boundaries without coverage")


def d2_boundary(group_tokens: list[str], ref_token: str, level: Level) -> int:
    """Pick the boundary position within a group (offset into the group).

    Preference order: the last member exactly equal to the reference token,
    else the last member in the same category, else the last member.
    """
    if not group_tokens:
        raise AlignmentError("cannot pick a boundary in an empty group")
    last_similar = None
    last_exact = None
    for k, tok in enumerate(group_tokens):
        rel = token_similarity(level, tok, ref_token)
        if rel is Similarity.EXACT:
            last_exact = k
        elif rel is Similarity.SIMILAR:
            last_similar = k
    if last_exact is not None:
        return last_exact
    if last_similar is not None:
        return last_similar
    return len(group_tokens) - 1


def gold_labels_from_alignment(
    gold: GoldAlignment, ref: TokenSequence, dys: TokenSequence
) -> JointLabelEncoding:
    """Emit the 1/0/2 label pair for a grouped alignment."""
    if len(gold.groups) != len(ref):
        raise AlignmentError("one group per reference token required")
    gold.validate(len(dys))
    ref_labels = tuple(
        REF_PRESENT if group else REF_MISSING for group in gold.groups
    )
    boundary_set = {b for b in gold.boundaries if b is not None}
    dys_labels = tuple(
        DYS_BOUNDARY if j in boundary_set else DYS_UNIT for j in range(len(dys))
    )
    return JointLabelEncoding(ref_labels, dys_labels)


def alignment_from_labels(
    labels: JointLabelEncoding, ref: TokenSequence, dys: TokenSequence
) -> GoldAlignment:
    """Decode a label pair into a grouped alignment.

    The k-th surviving reference token pairs with the k-th boundary.  A run
    of 0-labeled tokens between two boundaries attaches to the preceding
    group, except that its longest suffix whose members are all
    similar-or-exact to the next surviving reference token attaches forward
    (repetition copies precede their target; insertions trail their group).
    """
    if len(labels.ref_labels) != len(ref) or len(labels.dys_labels) != len(dys):
        raise CodecError("label lengths must match the token sequences")
    if not labels.counts_consistent():
        raise CodecError(
            f"{labels.present_count} surviving reference tokens vs "
            f"{labels.boundary_count} boundaries; repair labels first"
        )
    surviving = [i for i, v in enumerate(labels.ref_labels) if v == REF_PRESENT]
    bounds = [j for j, v in enumerate(labels.dys_labels) if v == DYS_BOUNDARY]

    n_ref = len(ref)
    members: list[list[int]] = [[] for _ in range(n_ref)]
    if bounds:
        # Leading run attaches to the first group, trailing run to the last.
        for k, b in enumerate(bounds):
            members[surviving[k]].append(b)
        members[surviving[0]] = list(range(0, bounds[0])) + members[surviving[0]]
        members[surviving[-1]] += list(range(bounds[-1] + 1, len(dys)))
        for k in range(len(bounds) - 1):
            run = list(range(bounds[k] + 1, bounds[k + 1]))
            if not run:
                continue
            nxt_ref_tok = ref[surviving[k + 1]]
            split = len(run)
            while split > 0 and token_similarity(
                ref.level, dys[run[split - 1]], nxt_ref_tok
            ) is not Similarity.DISSIMILAR:
                split -= 1
            members[surviving[k]] += run[:split]
            members[surviving[k + 1]] = run[split:] + members[surviving[k + 1]]
    boundaries: list[int | None] = [None] * n_ref
    for k, b in enumerate(bounds):
        boundaries[surviving[k]] = b
    out = GoldAlignment(
        tuple(tuple(m) for m in members),
        tuple(boundaries),
    )
    out.validate(len(dys) if bounds else 0)
    return out


def serialize_flat(
    labels: JointLabelEncoding, ref: TokenSequence, dys: TokenSequence
) -> str:
    """Single reading-order label string.

    Interleaves the dysfluent-side labels with a "2" at each deleted
    reference position, placed right after the previous group's span.
    Lossless only jointly with the ref/dys lengths.
    """
    gold = alignment_from_labels(labels, ref, dys)
    out: list[str] = []
    for group, boundary in zip(gold.groups, gold.boundaries):
        if not group:
            out.append("2")
        else:
            out.extend(
                "1" if j == boundary else "0" for j in group
            )
    return " ".join(out)


def format_groups(
    gold: GoldAlignment, ref: TokenSequence, dys: TokenSequence
) -> str:
    """Human-readable grouped alignment, e.g. ``P-(P) EH-(EH K) N-(N)``."""
    parts = []
    for i, group in enumerate(gold.groups):
        inner = " ".join(dys[j] for j in group)
        parts.append(f"{ref[i]}-({inner})")
    return " ".join(parts)

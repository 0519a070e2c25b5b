"""Dysfluent-sequence alignment toolkit.

Simulates dysfluent phoneme/word corpora with gold alignment labels,
aligns dysfluent sequences against reference text with classic and learned
aligners, and segments simulated speech timelines through a
CTC-decode-then-align pipeline.
"""

from .errors import (
    AlignError,
    AlignmentError,
    CodecError,
    DysalignError,
    EvalError,
    InventoryError,
    ModelError,
    OracleError,
    TrainError,
    ValidationError,
)
from .phonemes import (
    CATEGORIES,
    INVENTORY,
    Level,
    Similarity,
    TokenSequence,
    category_of,
    sample_confusable,
    similar,
)
from .labels import (
    GoldAlignment,
    JointLabelEncoding,
    alignment_from_labels,
    format_groups,
    gold_labels_from_alignment,
    serialize_flat,
)
from .simulate import (
    CorpusRecord,
    DysfluencyEvent,
    DysfluencyType,
    SimulationConfig,
    inject,
    inject_word_level,
    read_corpus,
    simulate_corpus,
    write_corpus,
)
from .classic import (
    AlignmentResult,
    ScoringScheme,
    dtw_align,
    hard_lcs,
    lcs_bruteforce_oracle,
    soft_lcs,
)

__version__ = "0.1.0"

"""Probing contextual embeddings with lexical substitution, and reranking
static-embedding neighbors with contextual models."""

from .corpus import (
    SelectionStrategy,
    TestSentence,
    load_sense_tagged,
    sample_raw_sentences,
    select_test_sentences,
)
from .embedding import (
    Backend,
    MockBackend,
    Memoizer,
    SentenceEncoding,
    WordVector,
    cosine,
    encode,
    mock_encode,
    word_repr,
)
from .evaluation import (
    EvalReport,
    emit_report,
    frequency_split,
    load_frequencies,
    load_gold,
    p_at_1_by_relation_type,
    p_at_k,
    wilcoxon_paired,
)
from .lexicon import (
    CapConfig,
    LexiconEntry,
    NeighborList,
    RelationLexicon,
    RelationType,
    TargetSet,
    TargetSetRejection,
    assemble_target_set,
    dist_neighbors,
    load_lexicon,
    load_neighbors,
)
from .probe import (
    RankedTargets,
    Trial,
    p_at_1_by_relation,
    random_baseline,
    rank_targets,
    substitute,
)
from .rerank import (
    FusionMethod,
    RerankResult,
    borda_fuse,
    combsum_fuse,
    condorcet_fuse,
    early_fuse,
    per_sentence_rankings,
    rerank_early,
    rerank_late,
    rrf_fuse,
    zero_one_normalize,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "CapConfig",
    "EvalReport",
    "FusionMethod",
    "LexiconEntry",
    "Memoizer",
    "MockBackend",
    "NeighborList",
    "RankedTargets",
    "RelationLexicon",
    "RelationType",
    "RerankResult",
    "SelectionStrategy",
    "SentenceEncoding",
    "TargetSet",
    "TargetSetRejection",
    "TestSentence",
    "Trial",
    "WordVector",
    "assemble_target_set",
    "borda_fuse",
    "combsum_fuse",
    "condorcet_fuse",
    "cosine",
    "dist_neighbors",
    "early_fuse",
    "emit_report",
    "encode",
    "frequency_split",
    "load_frequencies",
    "load_gold",
    "load_lexicon",
    "load_neighbors",
    "load_sense_tagged",
    "mock_encode",
    "p_at_1_by_relation",
    "p_at_1_by_relation_type",
    "p_at_k",
    "per_sentence_rankings",
    "random_baseline",
    "rank_targets",
    "rerank_early",
    "rerank_late",
    "rrf_fuse",
    "sample_raw_sentences",
    "select_test_sentences",
    "substitute",
    "wilcoxon_paired",
    "word_repr",
    "zero_one_normalize",
]

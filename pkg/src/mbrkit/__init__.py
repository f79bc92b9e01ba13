"""mbrkit: decision-phase toolkit for machine-translation decoding.

Decision rules (MAP, MBR naive/fast, QE reranking, source-based MBR) run
over externally supplied candidate hypotheses and quasi-sources, with native
surface metrics, paired bootstrap significance testing, support-set analyses
and call-count benchmarking.  Utility functions come from in-process mock
providers or external scorer processes speaking a line-delimited JSON
protocol.
"""

from .bleu import BleuScore, corpus_bleu, self_bleu, sentence_bleu, tokenize
from .corpus import (
    Candidate,
    QuasiSource,
    Segment,
    SegmentSet,
    SegmentValidationError,
    load_segments,
    support_view,
    write_segments,
)
from .decision import (
    DecisionResult,
    SupportWeights,
    filter_support,
    map_select,
    mbr_select_fast,
    mbr_select_naive,
    qe_rerank,
    smbr_select,
)
from .significance import SignificanceReport, paired_bootstrap, significance_marker
from .utility import (
    BleuUtilityProvider,
    LexicalMockProvider,
    ProviderCapabilities,
    QEMockProvider,
    UtilityMatrix,
    UtilityProvider,
    build_utility_matrix,
    get_mock_provider,
)

__version__ = "0.1.0"

__all__ = [
    "BleuScore",
    "BleuUtilityProvider",
    "Candidate",
    "DecisionResult",
    "LexicalMockProvider",
    "ProviderCapabilities",
    "QEMockProvider",
    "QuasiSource",
    "Segment",
    "SegmentSet",
    "SegmentValidationError",
    "SignificanceReport",
    "SupportWeights",
    "UtilityMatrix",
    "UtilityProvider",
    "build_utility_matrix",
    "corpus_bleu",
    "filter_support",
    "get_mock_provider",
    "load_segments",
    "map_select",
    "mbr_select_fast",
    "mbr_select_naive",
    "paired_bootstrap",
    "qe_rerank",
    "self_bleu",
    "sentence_bleu",
    "significance_marker",
    "smbr_select",
    "support_view",
    "tokenize",
    "write_segments",
]

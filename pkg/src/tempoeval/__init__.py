"""TempEval-3 toolkit: datafile I/O, temporal closure, scoring and merging."""

from .closure import InconsistentError, build, close, closure, entails, interval_to_points, reduce
from .merging import MergeConfig, merge_corpus, merge_document
from .model import (
    AnnotatedDocument,
    EventAnnotation,
    RelationType,
    Span,
    TemporalLink,
    TimexAnnotation,
    TimexType,
    inverse,
    resolve_endpoint,
)
from .scoring import ScoreOptions, score_corpora, score_corpus, temporal_awareness
from .timeml import load_corpus, parse_document, serialize_document, validate_document

__version__ = "0.1.0"

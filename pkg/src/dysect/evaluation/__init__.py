from dysect.evaluation.docred import (
    GoldDocument,
    GoldEntity,
    IngestionError,
    ingest_docred,
    load_relation_labels,
)
from dysect.evaluation.scoring import (
    AlignmentError,
    EvalReport,
    MatcherConfig,
    report_table,
    score,
)

__all__ = [
    "AlignmentError",
    "EvalReport",
    "GoldDocument",
    "GoldEntity",
    "IngestionError",
    "MatcherConfig",
    "ingest_docred",
    "load_relation_labels",
    "report_table",
    "score",
]

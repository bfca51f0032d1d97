"""Dataset construction pipeline: ingest, label, augment, sample, export."""

from .augment import AugmentError, AugmentResult, QueryGenerator, RemoteQueryGenerator, augment_to_parity
from .io import (
    CORPUS_SCHEMA,
    DATASET_SCHEMA,
    ExportError,
    IngestError,
    IngestResult,
    export_records,
    export_split,
    ingest,
    read_dataset_file,
    write_corpus_file,
)
from .labeling import LabelRunResult, llm_label
from .pool import (
    LabeledQuery,
    PoolError,
    ProvenanceError,
    QueryPool,
    ReviewEvent,
    check_provenance_transition,
    content_id,
    normalize_text,
)
from .sampling import (
    DEFAULT_FRACTIONS,
    DatasetSplit,
    PLAN_KINDS,
    SamplingError,
    SamplingPlan,
    largest_remainder,
    materialize,
    sample,
)

__all__ = [
    "AugmentError",
    "AugmentResult",
    "CORPUS_SCHEMA",
    "DATASET_SCHEMA",
    "DEFAULT_FRACTIONS",
    "DatasetSplit",
    "ExportError",
    "IngestError",
    "IngestResult",
    "LabelRunResult",
    "LabeledQuery",
    "PLAN_KINDS",
    "PoolError",
    "ProvenanceError",
    "QueryGenerator",
    "QueryPool",
    "RemoteQueryGenerator",
    "ReviewEvent",
    "SamplingError",
    "SamplingPlan",
    "augment_to_parity",
    "check_provenance_transition",
    "content_id",
    "export_records",
    "export_split",
    "ingest",
    "largest_remainder",
    "llm_label",
    "materialize",
    "normalize_text",
    "read_dataset_file",
    "sample",
    "write_corpus_file",
]

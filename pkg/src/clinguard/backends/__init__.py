"""Interchangeable classifier backends behind one prediction contract."""

from .base import (
    BackendConfig,
    ClassificationError,
    ClassifierBackend,
    HttpJsonTransport,
    Prediction,
    TransportError,
    argmax_lowest,
    one_hot,
    validate_prediction,
)
from .encoder import EncoderBackend
from .keyword import KeywordBackend, KeywordRule, default_keyword_backend, load_keyword_backend
from .prompt import (
    REPLICATION_SHOT_COUNTS,
    PromptError,
    PromptSpec,
    PromptedBackend,
    ResponseParseError,
    build_prompt,
    exemplar_sequence,
    normalize_class_name,
    parse_class_response,
)
from .stub import BagOfWordsBackend, EncoderStubBackend, FailingBackend, NotFittedError

__all__ = [
    "BackendConfig",
    "BagOfWordsBackend",
    "ClassificationError",
    "ClassifierBackend",
    "EncoderBackend",
    "EncoderStubBackend",
    "FailingBackend",
    "HttpJsonTransport",
    "KeywordBackend",
    "KeywordRule",
    "NotFittedError",
    "Prediction",
    "PromptError",
    "PromptSpec",
    "PromptedBackend",
    "REPLICATION_SHOT_COUNTS",
    "ResponseParseError",
    "TransportError",
    "argmax_lowest",
    "build_prompt",
    "default_keyword_backend",
    "exemplar_sequence",
    "load_keyword_backend",
    "normalize_class_name",
    "one_hot",
    "parse_class_response",
    "validate_prediction",
]

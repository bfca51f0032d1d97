"""Network-facing gateway service and its annotation store."""

from .annotations import (
    AnnotationError,
    AnnotationRevision,
    AnnotationStore,
    ConflictError,
    UnknownItemError,
)
from .config import GatewayConfig, GatewayConfigError
from .service import MEDIA_TYPE, build_gateway_backend, create_app

__all__ = [
    "AnnotationError",
    "AnnotationRevision",
    "AnnotationStore",
    "ConflictError",
    "GatewayConfig",
    "GatewayConfigError",
    "MEDIA_TYPE",
    "UnknownItemError",
    "build_gateway_backend",
    "create_app",
]

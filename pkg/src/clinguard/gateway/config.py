"""Gateway configuration.

All referenced files must exist and validate at startup; a service that
cannot prove its taxonomy, policy, and templates are mutually consistent
refuses to start rather than failing per-request.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml


class GatewayConfigError(ValueError):
    pass


@dataclass
class GatewayConfig:
    taxonomy_path: str
    policy_path: str
    templates_path: str
    active_backend: str
    backends: list[dict]
    audit_log_path: str
    dataset_store_dir: str
    reports_dir: str
    host: str = "127.0.0.1"
    port: int = 8400
    include_scores: bool = False
    request_timeout_s: float = 10.0
    annotator_header: str = "X-Annotator-Id"
    ui_dir: str | None = None
    locale: str | None = None

    def backend_spec(self, backend_id: str) -> dict:
        for spec in self.backends:
            if spec.get("id") == backend_id:
                return spec
        raise GatewayConfigError(f"no backend config with id {backend_id!r}")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "GatewayConfig":
        def resolve(value: str | None) -> str | None:
            if value is None:
                return None
            path = Path(value)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return str(path)

        try:
            return cls(
                taxonomy_path=resolve(data["taxonomy"]),
                policy_path=resolve(data["policy"]),
                templates_path=resolve(data["templates"]),
                active_backend=data["active_backend"],
                backends=list(data.get("backends", [])),
                audit_log_path=resolve(data["audit_log"]),
                dataset_store_dir=resolve(data["dataset_store"]),
                reports_dir=resolve(data["reports_dir"]),
                host=data.get("host", "127.0.0.1"),
                port=int(data.get("port", 8400)),
                include_scores=bool(data.get("include_scores", False)),
                request_timeout_s=float(data.get("request_timeout_s", 10.0)),
                annotator_header=data.get("annotator_header", "X-Annotator-Id"),
                ui_dir=resolve(data.get("ui_dir")),
                locale=data.get("locale"),
            )
        except KeyError as exc:
            raise GatewayConfigError(f"gateway config is missing {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "GatewayConfig":
        path = Path(path)
        data = yaml.safe_load(path.read_text("utf-8"))
        if not isinstance(data, dict):
            raise GatewayConfigError("gateway config must be a mapping")
        return cls.from_dict(data, base_dir=path.parent)

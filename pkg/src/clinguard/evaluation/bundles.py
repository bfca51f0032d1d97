"""Report bundles: the on-disk output format of experiment runs.

A bundle is a directory named by the config digest, holding a manifest plus
metrics, latency, plot-data, table, and confusion files. Everything except
latency files is deterministic for a given config and seeds, so reruns are
byte-comparable.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping

BUNDLE_SCHEMA = "clinguard.bundle/1"
MANIFEST_NAME = "manifest.json"


class BundleError(ValueError):
    pass


def config_digest(config: Mapping) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _dump_json(value) -> str:
    return json.dumps(value, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_bundle(
    root: str | Path,
    digest: str,
    manifest: Mapping,
    files: Mapping[str, object],
) -> Path:
    """Write a bundle; file values may be dicts (JSON), text, or bytes."""
    bundle_dir = Path(root) / digest
    bundle_dir.mkdir(parents=True, exist_ok=True)
    full_manifest = {"schema": BUNDLE_SCHEMA, "digest": digest, **manifest}
    (bundle_dir / MANIFEST_NAME).write_text(_dump_json(full_manifest), encoding="utf-8")
    for relpath, content in files.items():
        target = bundle_dir / relpath
        target.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            target.write_bytes(content)
        elif isinstance(content, str):
            target.write_text(content, encoding="utf-8")
        else:
            target.write_text(_dump_json(content), encoding="utf-8")
    return bundle_dir


def list_bundles(root: str | Path) -> list[dict]:
    """Manifests of all bundles under root, sorted by digest."""
    root = Path(root)
    if not root.exists():
        return []
    manifests = []
    for manifest_path in sorted(root.glob(f"*/{MANIFEST_NAME}")):
        try:
            manifests.append(json.loads(manifest_path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError):
            continue
    return manifests


def bundle_files(root: str | Path, digest: str) -> list[str]:
    bundle_dir = Path(root) / digest
    if not bundle_dir.is_dir():
        raise BundleError(f"unknown bundle digest {digest!r}")
    return sorted(
        str(p.relative_to(bundle_dir)) for p in bundle_dir.rglob("*") if p.is_file()
    )


def read_bundle_file(root: str | Path, digest: str, relpath: str) -> bytes:
    bundle_dir = (Path(root) / digest).resolve()
    target = (bundle_dir / relpath).resolve()
    if not str(target).startswith(str(bundle_dir)):
        raise BundleError("path escapes the bundle directory")
    if not bundle_dir.is_dir() or not target.is_file():
        raise BundleError(f"unknown bundle file {digest}/{relpath}")
    return target.read_bytes()

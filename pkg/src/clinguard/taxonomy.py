"""Hierarchical intent taxonomy for clinical chat queries.

The label tree places every query class on a path of safety -> clinicality,
with safe/clinical leaves further split by seeking status. The names of the
information-seeking leaves encode which external sources an answer needs
(patient record, medical knowledge, app API), so tool sets can be derived
from the class id alone.

Design principles:
  * Taxonomies are immutable values; services swap whole instances on reload.
  * The definition lives in a versioned data file, not code, so deployments
    can hot-load a new tree without a rebuild.
  * Leaf order in the file is canonical: it fixes score-vector indexing and
    confusion-matrix layout everywhere downstream.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

SAFETY_SEGMENTS = ("safe", "unsafe")
CLINICALITY_SEGMENTS = ("clinical", "non_clinical")
SEEKING_SEGMENTS = ("information_seeking", "non_information_seeking")
NOT_APPLICABLE = "not_applicable"

_ID_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class ToolRequirement(Enum):
    """External sources an information-seeking answer may depend on."""

    PATIENT_RECORD = "patient_record"
    MEDICAL_KNOWLEDGE = "medical_knowledge"
    APP_API = "app_api"


# Token order inside information-seeking leaf ids is fixed: patient, medical, app.
_IS_NAME_TOKENS = (
    ("patient", ToolRequirement.PATIENT_RECORD),
    ("medical", ToolRequirement.MEDICAL_KNOWLEDGE),
    ("app", ToolRequirement.APP_API),
)
_IS_SUFFIX = "_inquiry"
_IS_EMPTY_ID = "general_inquiry"


class TaxonomyError(ValueError):
    """Raised for malformed taxonomy documents. Carries a document location."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{message} (at {location})" if location else message)


class UnknownLabelError(KeyError):
    """Raised when a label id is not a leaf of the taxonomy in use."""


@dataclass(frozen=True)
class ClassLabel:
    id: str
    display_name: str
    path: tuple[str, ...]
    description: str
    examples: tuple[str, ...]

    @property
    def safety(self) -> str:
        return self.path[0]

    @property
    def clinicality(self) -> str:
        return self.path[1]

    @property
    def seeking(self) -> str:
        return self.path[2] if len(self.path) == 3 else NOT_APPLICABLE

    @property
    def is_unsafe(self) -> bool:
        return self.safety == "unsafe"

    @property
    def is_information_seeking(self) -> bool:
        return self.seeking == "information_seeking"


@dataclass(frozen=True)
class Taxonomy:
    leaves: tuple[ClassLabel, ...]
    version: str
    source_digest: str
    default_locale: str = "en"

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {leaf.id: i for i, leaf in enumerate(self.leaves)})

    def ids(self) -> tuple[str, ...]:
        return tuple(leaf.id for leaf in self.leaves)

    def __len__(self) -> int:
        return len(self.leaves)

    def __contains__(self, label_id: str) -> bool:
        return label_id in self._by_id

    def index_of(self, label_id: str) -> int:
        try:
            return self._by_id[label_id]
        except KeyError:
            raise UnknownLabelError(label_id) from None

    def leaf(self, label_id: str) -> ClassLabel:
        return self.leaves[self.index_of(label_id)]

    def information_seeking_ids(self) -> tuple[str, ...]:
        return tuple(leaf.id for leaf in self.leaves if leaf.is_information_seeking)

    def unsafe_ids(self) -> tuple[str, ...]:
        return tuple(leaf.id for leaf in self.leaves if leaf.is_unsafe)

    def partition_counts(self) -> dict[str, int]:
        """Leaf counts keyed by hierarchy bucket (joined path)."""
        counts: dict[str, int] = {}
        for leaf in self.leaves:
            key = "/".join(leaf.path)
            counts[key] = counts.get(key, 0) + 1
        return counts


@dataclass(frozen=True)
class LabelMapping:
    """Total map from source label ids onto target label ids."""

    name: str
    entries: Mapping[str, str]

    def target_ids(self) -> set[str]:
        return set(self.entries.values())


def _validate_path(path: Sequence[str], location: str) -> tuple[str, ...]:
    if not isinstance(path, (list, tuple)) or not all(isinstance(s, str) for s in path):
        raise TaxonomyError("path must be a list of segment strings", location)
    path = tuple(path)
    if len(path) not in (2, 3):
        raise TaxonomyError(f"path must have 2 or 3 segments, got {len(path)}", location)
    if path[0] not in SAFETY_SEGMENTS:
        raise TaxonomyError(f"unknown safety segment {path[0]!r}", location)
    if path[1] not in CLINICALITY_SEGMENTS:
        raise TaxonomyError(f"unknown clinicality segment {path[1]!r}", location)
    if path[0] == "safe" and path[1] == "clinical":
        if len(path) != 3 or path[2] not in SEEKING_SEGMENTS:
            raise TaxonomyError(
                "safe/clinical leaves need a seeking segment "
                f"(one of {SEEKING_SEGMENTS})",
                location,
            )
    elif len(path) != 2:
        raise TaxonomyError(
            "seeking segments only apply to safe/clinical leaves", location
        )
    return path


def _parse_is_tools(label_id: str) -> frozenset[ToolRequirement]:
    """Decode the tool set encoded in an information-seeking leaf id."""
    if label_id == _IS_EMPTY_ID:
        return frozenset()
    if not label_id.endswith(_IS_SUFFIX):
        raise TaxonomyError(
            f"information-seeking id {label_id!r} must end with {_IS_SUFFIX!r}"
        )
    tokens = label_id[: -len(_IS_SUFFIX)].split("_")
    tools: list[ToolRequirement] = []
    cursor = 0
    for token in tokens:
        while cursor < len(_IS_NAME_TOKENS) and _IS_NAME_TOKENS[cursor][0] != token:
            cursor += 1
        if cursor == len(_IS_NAME_TOKENS):
            raise TaxonomyError(
                f"information-seeking id {label_id!r} does not encode an ordered "
                "subset of patient/medical/app"
            )
        tools.append(_IS_NAME_TOKENS[cursor][1])
        cursor += 1
    if not tools:
        raise TaxonomyError(f"information-seeking id {label_id!r} encodes no tools")
    return frozenset(tools)


def _resolve_locale(value, locale: str, default_locale: str, what: str, location: str):
    """Pull one locale out of a per-locale mapping (plain values mean default)."""
    if isinstance(value, dict):
        if locale in value:
            return value[locale]
        if default_locale in value:
            return value[default_locale]
        raise TaxonomyError(
            f"{what} has no entry for locale {locale!r} or default "
            f"{default_locale!r}",
            location,
        )
    return value


def load_taxonomy(document: str | bytes, locale: str | None = None) -> Taxonomy:
    """Parse and validate a taxonomy definition document.

    The digest is computed over the raw document bytes, so equal inputs load
    to equal taxonomies.
    """
    raw = document.encode("utf-8") if isinstance(document, str) else document
    digest = hashlib.sha256(raw).hexdigest()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise TaxonomyError(f"document does not parse: {exc}") from exc
    if not isinstance(doc, dict):
        raise TaxonomyError("document root must be a mapping")
    version = doc.get("version")
    if not isinstance(version, str) or not version:
        raise TaxonomyError("missing or empty 'version'", "version")
    default_locale = doc.get("default_locale", "en")
    locale = locale or default_locale
    raw_leaves = doc.get("leaves")
    if not isinstance(raw_leaves, list) or not raw_leaves:
        raise TaxonomyError("'leaves' must be a non-empty list", "leaves")

    leaves: list[ClassLabel] = []
    seen: dict[str, int] = {}
    for i, entry in enumerate(raw_leaves):
        location = f"leaves[{i}]"
        if not isinstance(entry, dict):
            raise TaxonomyError("leaf record must be a mapping", location)
        leaf_id = entry.get("id")
        if not isinstance(leaf_id, str) or not _ID_RE.match(leaf_id):
            raise TaxonomyError(f"invalid id {leaf_id!r}", location)
        if leaf_id in seen:
            raise TaxonomyError(
                f"duplicate id {leaf_id!r} (first at leaves[{seen[leaf_id]}])", location
            )
        seen[leaf_id] = i
        path = _validate_path(entry.get("path"), location)
        display_name = entry.get("display_name") or leaf_id.replace("_", " ").title()
        description = _resolve_locale(
            entry.get("description"), locale, default_locale, "description", location
        )
        if not isinstance(description, str) or not description.strip():
            raise TaxonomyError("missing description", location)
        examples = _resolve_locale(
            entry.get("examples"), locale, default_locale, "examples", location
        )
        if not isinstance(examples, list) or not examples:
            raise TaxonomyError("at least one example is required", location)
        if not all(isinstance(e, str) and e.strip() for e in examples):
            raise TaxonomyError("examples must be non-empty strings", location)
        leaf = ClassLabel(
            id=leaf_id,
            display_name=str(display_name),
            path=path,
            description=description.strip(),
            examples=tuple(e.strip() for e in examples),
        )
        if leaf.is_information_seeking:
            try:
                _parse_is_tools(leaf_id)
            except TaxonomyError as exc:
                raise TaxonomyError(str(exc), location) from None
        leaves.append(leaf)

    return Taxonomy(
        leaves=tuple(leaves),
        version=version,
        source_digest=digest,
        default_locale=default_locale,
    )


def load_taxonomy_file(path: str | Path, locale: str | None = None) -> Taxonomy:
    return load_taxonomy(Path(path).read_bytes(), locale=locale)


CANONICAL_TAXONOMY_RESOURCE = "clinical_intent_21.yaml"
CANONICAL_PARTITION = {
    "unsafe/non_clinical": 5,
    "unsafe/clinical": 4,
    "safe/non_clinical": 2,
    "safe/clinical/non_information_seeking": 2,
    "safe/clinical/information_seeking": 8,
}


def packaged_data_path(name: str) -> Path:
    """Filesystem path of a data file shipped inside the package."""
    return Path(str(resources.files("clinguard").joinpath("data").joinpath(name)))


def canonical_taxonomy(locale: str | None = None) -> Taxonomy:
    """Load the shipped 21-leaf clinical intent taxonomy."""
    return load_taxonomy_file(packaged_data_path(CANONICAL_TAXONOMY_RESOURCE), locale=locale)


def validate_canonical_shape(taxonomy: Taxonomy) -> None:
    """Check the 21-leaf partition shape of the canonical tree."""
    if len(taxonomy) != 21:
        raise TaxonomyError(f"canonical taxonomy must have 21 leaves, got {len(taxonomy)}")
    counts = taxonomy.partition_counts()
    if counts != CANONICAL_PARTITION:
        raise TaxonomyError(f"canonical partition mismatch: {counts}")


def tool_requirements(
    taxonomy: Taxonomy, label_id: str
) -> frozenset[ToolRequirement] | None:
    """Tool set an answer for this class depends on.

    Returns the (possibly empty) set for the information-seeking leaves and
    None for every other leaf, where tool selection does not apply.
    """
    leaf = taxonomy.leaf(label_id)
    if not leaf.is_information_seeking:
        return None
    return _parse_is_tools(label_id)


def collapse_labels(mapping: LabelMapping, labels: Sequence[str]) -> list[str]:
    """Substitute every label through the mapping, preserving order."""
    out = []
    for label in labels:
        try:
            out.append(mapping.entries[label])
        except KeyError:
            raise UnknownLabelError(f"label {label!r} is not a source of mapping {mapping.name!r}") from None
    return out


def restrict_taxonomy(
    taxonomy: Taxonomy, leaf_ids: Iterable[str], name: str | None = None
) -> Taxonomy:
    """Sub-taxonomy over the given leaves, preserving canonical order.

    Restricting to the full leaf set returns the input unchanged.
    """
    wanted = set(leaf_ids)
    if not wanted:
        raise TaxonomyError("cannot restrict to an empty leaf set")
    unknown = wanted - set(taxonomy.ids())
    if unknown:
        raise UnknownLabelError(f"unknown leaf ids: {sorted(unknown)}")
    if wanted == set(taxonomy.ids()):
        return taxonomy
    kept = tuple(leaf for leaf in taxonomy.leaves if leaf.id in wanted)
    subset_name = name or f"subset{len(kept)}"
    digest = hashlib.sha256(
        f"{taxonomy.source_digest}:{','.join(l.id for l in kept)}".encode()
    ).hexdigest()
    return Taxonomy(
        leaves=kept,
        version=f"{taxonomy.version}+{subset_name}",
        source_digest=digest,
        default_locale=taxonomy.default_locale,
    )


def load_mapping(document: str, name: str = "mapping") -> LabelMapping:
    """Parse a two-column mapping document (source id TAB target id)."""
    entries: dict[str, str] = {}
    for lineno, line in enumerate(document.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise TaxonomyError("expected 'source<TAB>target'", f"line {lineno}")
        source, target = parts
        if source in entries:
            raise TaxonomyError(f"duplicate source id {source!r}", f"line {lineno}")
        entries[source] = target
    if not entries:
        raise TaxonomyError("mapping document has no entries")
    return LabelMapping(name=name, entries=entries)


def load_mapping_file(path: str | Path) -> LabelMapping:
    p = Path(path)
    return load_mapping(p.read_text("utf-8"), name=p.stem)


def identity_mapping(taxonomy: Taxonomy, name: str = "identity") -> LabelMapping:
    return LabelMapping(name=name, entries={i: i for i in taxonomy.ids()})


def validate_mapping(
    mapping: LabelMapping,
    source_taxonomy: Taxonomy | None = None,
    target_taxonomy: Taxonomy | None = None,
) -> None:
    """Check totality over the source leaves and closure over the target leaves."""
    if source_taxonomy is not None:
        missing = set(source_taxonomy.ids()) - set(mapping.entries)
        if missing:
            raise TaxonomyError(
                f"mapping {mapping.name!r} misses source leaves: {sorted(missing)}"
            )
    if target_taxonomy is not None:
        stray = mapping.target_ids() - set(target_taxonomy.ids())
        if stray:
            raise TaxonomyError(
                f"mapping {mapping.name!r} has targets outside the target taxonomy: {sorted(stray)}"
            )

"""Few-shot prompt construction and response parsing.

Prompts are a pure function of their spec: same taxonomy subset, shot count,
seed, and exemplar pool produce byte-identical text. Exemplars are drawn
without replacement, stratified round-robin across classes in a seeded
order, and shot count k takes a prefix of that sequence, so prompt length is
non-decreasing in k for a fixed pool and seed.
"""
from __future__ import annotations

import random
import re
import time
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from ..taxonomy import Taxonomy
from .base import (
    BackendConfig,
    ClassificationError,
    ClassifierBackend,
    HttpJsonTransport,
    Prediction,
    TransportError,
    one_hot,
)

# Shot counts used by the replication experiment configs.
REPLICATION_SHOT_COUNTS = (0, 1, 5, 10, 20, 30, 40, 50, 100)

COMPLETION_PATH = "/v1/complete"


class PromptError(ValueError):
    pass


class ResponseParseError(ValueError):
    """The model output did not uniquely name a class."""


@dataclass(frozen=True)
class PromptSpec:
    taxonomy: Taxonomy
    shots: int
    seed: int
    exemplars: tuple[tuple[str, str], ...]  # (query text, label id)

    def __post_init__(self):
        if self.shots < 0:
            raise PromptError("shot count must be non-negative")


def exemplar_sequence(spec: PromptSpec) -> list[tuple[str, str]]:
    """Full stratified draw order for a spec; build_prompt uses its prefix."""
    by_class: dict[str, list[str]] = {cid: [] for cid in spec.taxonomy.ids()}
    for text, label in spec.exemplars:
        if label not in by_class:
            raise PromptError(f"exemplar label {label!r} is not in the active subset")
        by_class[label].append(text)
    rng = random.Random(spec.seed)
    class_order = list(spec.taxonomy.ids())
    rng.shuffle(class_order)
    queues: dict[str, deque[str]] = {}
    for cid in class_order:
        distinct = sorted(set(by_class[cid]))
        rng.shuffle(distinct)
        queues[cid] = deque(distinct)
    sequence: list[tuple[str, str]] = []
    while any(queues.values()):
        for cid in class_order:
            if queues[cid]:
                sequence.append((queues[cid].popleft(), cid))
    return sequence


def build_prompt(spec: PromptSpec) -> str:
    """Render the classification prompt up to the target-query slot.

    The returned text ends with the query marker; callers append the query
    text verbatim.
    """
    leaves = spec.taxonomy.leaves
    lines = [
        "You are a classification assistant for a clinical chatbot. "
        f"Your job is to classify a user query into exactly one of {len(leaves)} "
        "predefined categories.",
        "The classification must be based on the intent and nature of the user's input.",
        f'Return only the class name (e.g., "{leaves[0].display_name}") without explanation.',
        "Refer strictly to the following definitions:",
        "",
    ]
    lines.extend(f"{i}. {leaf.id}: {leaf.description}" for i, leaf in enumerate(leaves, 1))
    if spec.shots:
        sequence = exemplar_sequence(spec)
        if spec.shots > len(sequence):
            raise PromptError(
                f"{spec.shots} shots requested but only {len(sequence)} distinct exemplars available"
            )
        lines.append("")
        lines.append("Examples:")
        lines.extend(f"{text} -> {label}" for text, label in sequence[: spec.shots])
    lines.extend(
        [
            "",
            "Classify the following user query based on these definitions.",
            "Output only the class name, no other text.",
            "",
            "Query: ",
        ]
    )
    return "\n".join(lines)


_TRAILING_PUNCT = re.compile(r"[.!?,;:]+$")
_SEPARATORS = re.compile(r"[\s\-]+")


def normalize_class_name(raw: str) -> str:
    s = raw.strip().strip("\"'`“”‘’").strip()
    s = _TRAILING_PUNCT.sub("", s)
    s = _SEPARATORS.sub("_", s.lower())
    s = re.sub(r"_+", "_", s).strip("_")
    return s


def parse_class_response(taxonomy: Taxonomy, raw: str) -> str:
    """Resolve raw model output to a leaf id, accepting ids or display names.

    Total: every input either matches exactly one class after normalization
    or raises ResponseParseError; there is no silent default.
    """
    table: dict[str, str] = {}
    for leaf in taxonomy.leaves:
        for alias in (normalize_class_name(leaf.id), normalize_class_name(leaf.display_name)):
            previous = table.get(alias)
            if previous is not None and previous != leaf.id:
                raise PromptError(f"alias {alias!r} is ambiguous in this taxonomy")
            table[alias] = leaf.id
    key = normalize_class_name(raw)
    if key in table:
        return table[key]
    raise ResponseParseError(f"no unique class matches response {raw!r}")


class PromptedBackend(ClassifierBackend):
    """Few-shot classification against a remote single-turn completion endpoint.

    Requests carry the model name, temperature 0, and the rendered prompt.
    Unparseable completions and transport failures are retried up to the
    configured budget; parse failures past the budget surface as
    ClassificationError so callers fail closed.
    """

    def __init__(
        self,
        config: BackendConfig,
        spec: PromptSpec,
        model: str,
        transport=None,
    ):
        self.config = config
        self.backend_id = config.backend_id
        self.spec = spec
        self.model = model
        self._transport = transport or HttpJsonTransport(
            config.endpoint,
            config.credentials_env,
            config.timeout_s,
            max_in_flight=config.max_in_flight,
        )
        self._prefix = build_prompt(spec)

    @property
    def shots(self) -> int:
        return self.spec.shots

    def classify(self, taxonomy: Taxonomy, query_text: str) -> Prediction:
        if taxonomy.ids() != self.spec.taxonomy.ids():
            raise ClassificationError(
                "active taxonomy does not match the prompt's class subset"
            )
        started = time.perf_counter()
        attempts = self.config.retries + 1
        last_error: Exception | None = None
        for _ in range(attempts):
            try:
                data = self._transport.post(
                    COMPLETION_PATH,
                    {"model": self.model, "prompt": self._prefix + query_text, "temperature": 0.0},
                )
            except TransportError as exc:
                last_error = exc
                continue
            completion = data.get("completion")
            try:
                label = parse_class_response(self.spec.taxonomy, str(completion))
            except ResponseParseError as exc:
                last_error = exc
                continue
            index = self.spec.taxonomy.index_of(label)
            return Prediction(
                label_id=label,
                scores=one_hot(index, len(self.spec.taxonomy)),
                latency_s=time.perf_counter() - started,
                backend_id=self.backend_id,
            )
        if isinstance(last_error, TransportError):
            raise last_error
        raise ClassificationError(
            f"no parseable completion after {attempts} attempts: {last_error}"
        )

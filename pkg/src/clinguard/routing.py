"""Label-to-action routing for the safety gateway.

Maps a classified query label onto a concrete service action: block it,
elicit a follow-up, respond with empathy, redirect, or answer (optionally
with a derived external tool set). The policy is configuration, loaded from
a versioned file and validated against the active taxonomy at startup, so a
classifier label can never reach an unhandled state at request time: any
label/policy mismatch fails closed to a block.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

import yaml

from .taxonomy import Taxonomy, ToolRequirement, packaged_data_path, tool_requirements

logger = logging.getLogger(__name__)

GENERIC_BLOCK_TEMPLATE = "block_generic"


class RoutingAction(Enum):
    BLOCK_WITH_WARNING = "block_with_warning"
    SAFE_REFUSAL_WITH_DISCLAIMER = "safe_refusal_with_disclaimer"
    EMPATHY_RESPONSE = "empathy_response"
    FOLLOW_UP_ELICITATION = "follow_up_elicitation"
    REFORMULATION_REDIRECT = "reformulation_redirect"
    ANSWER_DIRECT = "answer_direct"
    ANSWER_WITH_TOOLS = "answer_with_tools"


class PolicyError(ValueError):
    """Raised when a routing policy fails validation against a taxonomy."""


@dataclass(frozen=True)
class PolicyRule:
    action: RoutingAction
    template_id: str
    log_unsafe: bool


@dataclass(frozen=True)
class RoutingPolicy:
    rules: Mapping[str, PolicyRule]
    version: str


@dataclass(frozen=True)
class RoutingDecision:
    label_id: str
    action: RoutingAction
    tools: frozenset[ToolRequirement]
    message_template_id: str
    log_unsafe: bool


def load_policy(document: str) -> RoutingPolicy:
    doc = yaml.safe_load(document)
    if not isinstance(doc, dict) or not isinstance(doc.get("rules"), dict):
        raise PolicyError("policy document must be a mapping with a 'rules' table")
    rules: dict[str, PolicyRule] = {}
    for label_id, raw in doc["rules"].items():
        if not isinstance(raw, dict):
            raise PolicyError(f"rule for {label_id!r} must be a mapping")
        try:
            action = RoutingAction(raw["action"])
        except (KeyError, ValueError) as exc:
            raise PolicyError(f"rule for {label_id!r} has invalid action: {exc}") from exc
        template_id = raw.get("template")
        if not isinstance(template_id, str) or not template_id:
            raise PolicyError(f"rule for {label_id!r} is missing a template id")
        rules[label_id] = PolicyRule(
            action=action,
            template_id=template_id,
            log_unsafe=bool(raw.get("log_unsafe", False)),
        )
    version = str(doc.get("version", "unversioned"))
    return RoutingPolicy(rules=rules, version=version)


def load_policy_file(path: str | Path) -> RoutingPolicy:
    return load_policy(Path(path).read_text("utf-8"))


def default_policy() -> RoutingPolicy:
    return load_policy_file(packaged_data_path("policy_default.yaml"))


def validate_policy(policy: RoutingPolicy, taxonomy: Taxonomy) -> None:
    """Reject policies that are not total and internally consistent.

    A valid policy covers every leaf, blocks-and-logs every unsafe leaf, and
    only assigns answer_with_tools where the taxonomy derives a non-empty
    tool set.
    """
    missing = set(taxonomy.ids()) - set(policy.rules)
    if missing:
        raise PolicyError(f"policy is not total; missing leaves: {sorted(missing)}")
    stray = set(policy.rules) - set(taxonomy.ids())
    if stray:
        raise PolicyError(f"policy has rules for unknown labels: {sorted(stray)}")
    for leaf in taxonomy.leaves:
        rule = policy.rules[leaf.id]
        if leaf.is_unsafe:
            if rule.action is not RoutingAction.BLOCK_WITH_WARNING:
                raise PolicyError(f"unsafe leaf {leaf.id!r} must block_with_warning")
            if not rule.log_unsafe:
                raise PolicyError(f"unsafe leaf {leaf.id!r} must set log_unsafe")
        if rule.action is RoutingAction.ANSWER_WITH_TOOLS:
            tools = tool_requirements(taxonomy, leaf.id)
            if not tools:
                raise PolicyError(
                    f"leaf {leaf.id!r} derives no tools; answer_with_tools is invalid"
                )


def fail_closed_decision(label_id: str) -> RoutingDecision:
    """Blocking decision used whenever routing cannot resolve a label."""
    return RoutingDecision(
        label_id=label_id,
        action=RoutingAction.BLOCK_WITH_WARNING,
        tools=frozenset(),
        message_template_id=GENERIC_BLOCK_TEMPLATE,
        log_unsafe=True,
    )


def route(taxonomy: Taxonomy, policy: RoutingPolicy, label_id: str) -> RoutingDecision:
    """Resolve a label to a routing decision.

    Pure and deterministic. A label missing from the taxonomy or the policy
    is a configuration error: it is reported and fails closed to a block
    rather than raising into the request path.
    """
    rule = policy.rules.get(label_id)
    if label_id not in taxonomy or rule is None:
        logger.error("routing fail-closed: label %r not covered by taxonomy/policy", label_id)
        return fail_closed_decision(label_id)
    tools: frozenset[ToolRequirement] = frozenset()
    if rule.action is RoutingAction.ANSWER_WITH_TOOLS:
        tools = tool_requirements(taxonomy, label_id) or frozenset()
    return RoutingDecision(
        label_id=label_id,
        action=rule.action,
        tools=tools,
        message_template_id=rule.template_id,
        log_unsafe=rule.log_unsafe,
    )


@dataclass(frozen=True)
class MessageTemplates:
    """Locale-keyed user-facing texts, referenced from policies by id."""

    templates: Mapping[str, Mapping[str, str]]
    default_locale: str = "en"

    def resolve(self, template_id: str, locale: str | None = None) -> str:
        entry = self.templates.get(template_id)
        if entry is None:
            raise KeyError(template_id)
        if locale and locale in entry:
            return entry[locale]
        return entry[self.default_locale]

    def __contains__(self, template_id: str) -> bool:
        return template_id in self.templates


def load_templates(document: str) -> MessageTemplates:
    doc = yaml.safe_load(document)
    if not isinstance(doc, dict) or not isinstance(doc.get("templates"), dict):
        raise PolicyError("template document must be a mapping with a 'templates' table")
    default_locale = str(doc.get("default_locale", "en"))
    templates: dict[str, dict[str, str]] = {}
    for template_id, texts in doc["templates"].items():
        if not isinstance(texts, dict) or default_locale not in texts:
            raise PolicyError(
                f"template {template_id!r} must provide the default locale {default_locale!r}"
            )
        templates[template_id] = {str(k): str(v) for k, v in texts.items()}
    return MessageTemplates(templates=templates, default_locale=default_locale)


def load_templates_file(path: str | Path) -> MessageTemplates:
    return load_templates(Path(path).read_text("utf-8"))


def default_templates() -> MessageTemplates:
    return load_templates_file(packaged_data_path("templates_default.yaml"))


def validate_templates(policy: RoutingPolicy, templates: MessageTemplates) -> None:
    referenced = {rule.template_id for rule in policy.rules.values()}
    referenced.add(GENERIC_BLOCK_TEMPLATE)
    missing = {t for t in referenced if t not in templates}
    if missing:
        raise PolicyError(f"policy references unknown templates: {sorted(missing)}")

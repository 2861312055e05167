"""Label schema: the binary speaker attributes and the rules between them.

The schema is data, not code. The default nine-label schema is embedded
here, and the same structures round-trip through a JSON file so deployments
can extend label or language coverage without touching the validator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ClosureConflictError, SchemaError

GROUPS = ("gender", "age_group", "parental_status", "diet", "personality")

MUTUAL_EXCLUSION = "mutual_exclusion"
IMPLICATION = "implication"


@dataclass(frozen=True)
class LabelDefinition:
    label_id: str
    group: str
    definition_text: str

    def __post_init__(self) -> None:
        if not self.label_id:
            raise SchemaError("label_id must be non-empty")
        if self.group not in GROUPS:
            raise SchemaError(f"unknown label group: {self.group!r}")
        if not self.definition_text:
            raise SchemaError(f"label {self.label_id!r} has an empty definition")


@dataclass(frozen=True)
class LabelRule:
    kind: str
    antecedents: tuple[str, ...]
    consequent: str | None = None

    def __post_init__(self) -> None:
        if self.kind == MUTUAL_EXCLUSION:
            if len(self.antecedents) < 2 or self.consequent is not None:
                raise SchemaError("mutual_exclusion takes >=2 labels and no consequent")
        elif self.kind == IMPLICATION:
            if len(self.antecedents) < 1 or self.consequent is None:
                raise SchemaError("implication takes antecedents and a consequent")
            if self.consequent in self.antecedents:
                raise SchemaError(f"label {self.consequent!r} cannot imply itself")
        else:
            raise SchemaError(f"unknown rule kind: {self.kind!r}")

    def describe(self) -> str:
        if self.kind == MUTUAL_EXCLUSION:
            return f"mutual_exclusion({', '.join(self.antecedents)})"
        return f"implication({' & '.join(self.antecedents)} -> {self.consequent})"


@dataclass(frozen=True)
class Violation:
    rule: LabelRule
    offending: tuple[str, ...]
    instance_id: str | None = None

    def describe(self) -> str:
        return f"{self.rule.describe()} violated by {{{', '.join(self.offending)}}}"


@dataclass(frozen=True)
class LabelSchema:
    labels: tuple[LabelDefinition, ...]
    rules: tuple[LabelRule, ...]
    _by_id: dict[str, LabelDefinition] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, LabelDefinition] = {}
        for label in self.labels:
            if label.label_id in by_id:
                raise SchemaError(f"duplicate label id: {label.label_id!r}")
            by_id[label.label_id] = label
        for rule in self.rules:
            referenced = set(rule.antecedents)
            if rule.consequent is not None:
                referenced.add(rule.consequent)
            unknown = referenced - by_id.keys()
            if unknown:
                raise SchemaError(
                    f"rule {rule.describe()} references unknown labels: {sorted(unknown)}"
                )
        object.__setattr__(self, "_by_id", by_id)

    @property
    def label_ids(self) -> tuple[str, ...]:
        return tuple(label.label_id for label in self.labels)

    def has_label(self, label_id: str) -> bool:
        return label_id in self._by_id

    def definition(self, label_id: str) -> LabelDefinition:
        try:
            return self._by_id[label_id]
        except KeyError:
            raise SchemaError(f"unknown label id: {label_id!r}") from None

    def require_labels(self, label_ids) -> None:
        unknown = [l for l in label_ids if l not in self._by_id]
        if unknown:
            raise SchemaError(f"unknown label id: {unknown[0]!r}")


_DEFAULT_LABELS = (
    ("male", "gender", "The speaker self-identifies as male."),
    ("female", "gender", "The speaker self-identifies as female."),
    ("child", "age_group", "The speaker is a child or teenager."),
    (
        "adult",
        "age_group",
        "The speaker is an adult, or the sentence involves \"adult\" themes "
        "(e.g., alcoholic or caffeinated beverage consumption).",
    ),
    ("elderly", "age_group", "The speaker is elderly or identified as a grandparent."),
    (
        "parent",
        "parental_status",
        "The speaker states or is implied to have children, but does not indicate "
        "that the speaker is elderly or a grandparent.",
    ),
    (
        "meat-eater",
        "diet",
        "The speaker eats meat, poultry, seafood, or eggs (dairy products are excluded).",
    ),
    (
        "vegetarian",
        "diet",
        "The sentence specifically states (or implies) the speaker is vegetarian.",
    ),
    (
        "serious",
        "personality",
        "The sentence deals with serious or negative themes, such as death, illness, "
        "crime, or sadness.",
    ),
)

_DEFAULT_RULES = (
    (MUTUAL_EXCLUSION, ("male", "female"), None),
    (MUTUAL_EXCLUSION, ("meat-eater", "vegetarian"), None),
    (MUTUAL_EXCLUSION, ("parent", "elderly"), None),
    (IMPLICATION, ("parent",), "adult"),
    (IMPLICATION, ("elderly",), "adult"),
)


def default_schema() -> LabelSchema:
    """The embedded nine-label, five-group schema with its exclusion and
    implication rules."""
    labels = tuple(LabelDefinition(i, g, d) for i, g, d in _DEFAULT_LABELS)
    rules = tuple(LabelRule(k, a, c) for k, a, c in _DEFAULT_RULES)
    return LabelSchema(labels=labels, rules=rules)


def _check_values(values: dict[str, int], schema: LabelSchema) -> None:
    schema.require_labels(values.keys())
    bad = {l: v for l, v in values.items() if v not in (0, 1)}
    if bad:
        raise SchemaError(f"label values must be 0 or 1, got {bad}")


def validate_assignment(
    values: dict[str, int],
    schema: LabelSchema,
    instance_id: str | None = None,
) -> list[Violation]:
    """Check one (possibly partial) assignment against every schema rule.

    Missing labels are unconstrained: an exclusion fires only when all of
    its labels are present and positive, and an implication fires only when
    its antecedents are present and positive and its consequent is present
    and zero.
    """
    _check_values(values, schema)
    violations: list[Violation] = []
    for rule in schema.rules:
        if rule.kind == MUTUAL_EXCLUSION:
            positive = tuple(l for l in rule.antecedents if values.get(l) == 1)
            if len(positive) >= 2:
                violations.append(Violation(rule, positive, instance_id))
        else:
            if all(values.get(l) == 1 for l in rule.antecedents):
                if rule.consequent in values and values[rule.consequent] == 0:
                    offending = rule.antecedents + (rule.consequent,)
                    violations.append(Violation(rule, offending, instance_id))
    return violations


def implication_closure(values: dict[str, int], schema: LabelSchema) -> dict[str, int]:
    """Smallest superset of ``values`` in which every implication holds.

    Consequents are promoted to 1 (0 -> 1 upgrades included, never 1 -> 0);
    the operation is idempotent. Raises :class:`ClosureConflictError` when
    the closed assignment violates a mutual exclusion.
    """
    _check_values(values, schema)
    closed = dict(values)
    changed = True
    while changed:
        changed = False
        for rule in schema.rules:
            if rule.kind != IMPLICATION:
                continue
            if all(closed.get(l) == 1 for l in rule.antecedents):
                if closed.get(rule.consequent) != 1:
                    closed[rule.consequent] = 1
                    changed = True
    for rule in schema.rules:
        if rule.kind == MUTUAL_EXCLUSION:
            positive = [l for l in rule.antecedents if closed.get(l) == 1]
            if len(positive) >= 2:
                raise ClosureConflictError(
                    f"closure violates {rule.describe()}: {positive}", positive
                )
    return closed


def schema_to_dict(schema: LabelSchema) -> dict:
    rules = []
    for rule in schema.rules:
        if rule.kind == MUTUAL_EXCLUSION:
            rules.append({"kind": rule.kind, "labels": list(rule.antecedents)})
        else:
            rules.append(
                {
                    "kind": rule.kind,
                    "antecedents": list(rule.antecedents),
                    "consequent": rule.consequent,
                }
            )
    return {
        "labels": [
            {"id": l.label_id, "group": l.group, "definition": l.definition_text}
            for l in schema.labels
        ],
        "rules": rules,
    }


def schema_from_dict(data: dict) -> LabelSchema:
    try:
        labels = tuple(
            LabelDefinition(entry["id"], entry["group"], entry["definition"])
            for entry in data["labels"]
        )
        rules = []
        for entry in data.get("rules", []):
            kind = entry["kind"]
            if kind == MUTUAL_EXCLUSION:
                rules.append(LabelRule(kind, tuple(entry["labels"])))
            else:
                rules.append(
                    LabelRule(kind, tuple(entry["antecedents"]), entry["consequent"])
                )
    except KeyError as exc:
        raise SchemaError(f"schema file missing required key: {exc}") from None
    return LabelSchema(labels=labels, rules=tuple(rules))


def load_schema(path: str | Path) -> LabelSchema:
    with open(path, encoding="utf-8") as fh:
        return schema_from_dict(json.load(fh))


def save_schema(schema: LabelSchema, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_dict(schema), fh, ensure_ascii=False, indent=2)
        fh.write("\n")

from __future__ import annotations

import itertools
import json

import pytest
from hypothesis import given, strategies as st

from annoloop.errors import ClosureConflictError, SchemaError
from annoloop.schema import (
    LabelDefinition,
    LabelRule,
    LabelSchema,
    default_schema,
    implication_closure,
    load_schema,
    save_schema,
    validate_assignment,
)

from oracles import rule_violations_oracle

LABELS9 = (
    "male",
    "female",
    "child",
    "adult",
    "elderly",
    "parent",
    "meat-eater",
    "vegetarian",
    "serious",
)


def test_default_schema_has_nine_labels_in_five_groups(schema):
    assert len(schema.labels) == 9
    assert {l.group for l in schema.labels} == {
        "gender",
        "age_group",
        "parental_status",
        "diet",
        "personality",
    }
    assert schema.label_ids == LABELS9


def test_default_rules(schema):
    exclusions = {
        frozenset(r.antecedents) for r in schema.rules if r.kind == "mutual_exclusion"
    }
    assert exclusions == {
        frozenset({"male", "female"}),
        frozenset({"meat-eater", "vegetarian"}),
        frozenset({"parent", "elderly"}),
    }
    implications = {
        (r.antecedents, r.consequent) for r in schema.rules if r.kind == "implication"
    }
    assert implications == {(("parent",), "adult"), (("elderly",), "adult")}


@pytest.mark.parametrize(
    "values,expected_rules",
    [
        ({"male": 1, "female": 1}, ["mutual_exclusion(male, female)"]),
        ({"male": 1, "child": 1}, []),
        ({"parent": 1, "adult": 0}, ["implication(parent -> adult)"]),
        ({"parent": 1, "elderly": 1}, ["mutual_exclusion(parent, elderly)"]),
        ({"meat-eater": 1, "vegetarian": 1}, ["mutual_exclusion(meat-eater, vegetarian)"]),
        ({"elderly": 1, "adult": 1}, []),
        ({}, []),
    ],
)
def test_validate_assignment_named_cases(schema, values, expected_rules):
    violations = validate_assignment(values, schema)
    assert [v.rule.describe() for v in violations] == expected_rules


def test_validate_assignment_unknown_label(schema):
    with pytest.raises(SchemaError, match="unknown label"):
        validate_assignment({"robot": 1}, schema)


def test_validate_assignment_rejects_nonbinary(schema):
    with pytest.raises(SchemaError, match="0 or 1"):
        validate_assignment({"male": 2}, schema)


def test_all_512_complete_assignments_match_oracle(schema):
    for bits in itertools.product((0, 1), repeat=9):
        values = dict(zip(LABELS9, bits))
        got = len(validate_assignment(values, schema))
        assert got == rule_violations_oracle(values), values


def test_closure_promotes_implied_labels(schema):
    assert implication_closure({"elderly": 1}, schema) == {"elderly": 1, "adult": 1}
    assert implication_closure({}, schema) == {}
    assert implication_closure({"parent": 1, "adult": 0}, schema) == {
        "parent": 1,
        "adult": 1,
    }


def test_closure_conflict_raises(schema):
    with pytest.raises(ClosureConflictError) as err:
        implication_closure({"parent": 1, "elderly": 1}, schema)
    assert set(err.value.offending) == {"parent", "elderly"}


@given(
    st.dictionaries(
        st.sampled_from(LABELS9), st.integers(min_value=0, max_value=1), max_size=9
    )
)
def test_closure_idempotent_and_monotone(values):
    schema = default_schema()
    try:
        once = implication_closure(values, schema)
    except ClosureConflictError:
        return
    assert implication_closure(once, schema) == once
    for label, value in values.items():
        if value == 1:
            assert once[label] == 1  # never flips 1 -> 0


def test_validation_reproducible(schema):
    values = {"male": 1, "female": 1, "parent": 1, "elderly": 1}
    first = validate_assignment(values, schema)
    second = validate_assignment(values, schema)
    assert [v.describe() for v in first] == [v.describe() for v in second]


def test_schema_roundtrips_through_json(schema, tmp_path):
    path = tmp_path / "schema.json"
    save_schema(schema, path)
    loaded = load_schema(path)
    assert loaded.label_ids == schema.label_ids
    for bits in itertools.product((0, 1), repeat=9):
        values = dict(zip(LABELS9, bits))
        assert [v.describe() for v in validate_assignment(values, loaded)] == [
            v.describe() for v in validate_assignment(values, schema)
        ]


def test_schema_file_is_data(tmp_path):
    custom = {
        "labels": [
            {"id": "cat", "group": "personality", "definition": "Speaker is a cat."},
            {"id": "animal", "group": "personality", "definition": "Speaker is an animal."},
        ],
        "rules": [
            {"kind": "implication", "antecedents": ["cat"], "consequent": "animal"}
        ],
    }
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(custom), encoding="utf-8")
    schema = load_schema(path)
    assert [v.rule.kind for v in validate_assignment({"cat": 1, "animal": 0}, schema)] == [
        "implication"
    ]


def test_rule_invariants():
    with pytest.raises(SchemaError, match="imply itself"):
        LabelRule("implication", ("adult",), "adult")
    with pytest.raises(SchemaError, match="unknown labels"):
        LabelSchema(
            labels=(LabelDefinition("a", "gender", "x"),),
            rules=(LabelRule("implication", ("a",), "ghost"),),
        )
    with pytest.raises(SchemaError, match="duplicate label"):
        LabelSchema(
            labels=(
                LabelDefinition("a", "gender", "x"),
                LabelDefinition("a", "gender", "y"),
            ),
            rules=(),
        )

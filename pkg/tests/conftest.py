from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from annoloop.corpus import Corpus, Instance, LabelAssignment
from annoloop.schema import default_schema

TS = "2025-01-01T00:00:00+00:00"


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        print(f"[{status}] {name}", flush=True)
    elif report.when == "setup" and report.skipped:
        print(f"[SKIP] {name}", flush=True)


@pytest.fixture
def schema():
    return default_schema()


def build_corpus(rows, layer="original", provenance="fixture", schema=None):
    """rows: (id, text, language, {label: value}) tuples."""
    corpus = Corpus(schema=schema)
    for iid, text, language, values in rows:
        corpus.add_instance(Instance(id=iid, text=text, language=language))
        for label, value in values.items():
            corpus.add_assignment(
                LabelAssignment(
                    instance_id=iid,
                    label_id=label,
                    value=value,
                    layer=layer,
                    provenance=provenance,
                    timestamp=TS,
                )
            )
    return corpus


def add_layer(corpus, values_by_id, layer, provenance="fixture", timestamp=TS):
    for iid, values in values_by_id.items():
        for label, value in values.items():
            corpus.add_assignment(
                LabelAssignment(
                    instance_id=iid,
                    label_id=label,
                    value=value,
                    layer=layer,
                    provenance=provenance,
                    timestamp=timestamp,
                )
            )
    return corpus


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def table_sample_corpus():
    """The four illustrative multilingual instances with their labels."""
    return build_corpus(
        [
            ("en-1", "We are boys.", "en", {"male": 1, "child": 1}),
            (
                "ja-1",
                "私の孫たちはたくさん遊んでいます。",
                "ja",
                {"elderly": 1, "adult": 1},
            ),
            (
                "ru-1",
                "Моя жена умная.",
                "ru",
                {"adult": 1},
            ),
            (
                "fr-1",
                "Je suis végétarienne, comme ma mère.",
                "fr",
                {"female": 1, "vegetarian": 1},
            ),
        ]
    )

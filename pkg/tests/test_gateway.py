from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from annoloop.corpus import Instance
from annoloop.errors import ClassificationError, ParseError, TransportError
from annoloop.gateway import (
    BackendConfig,
    StubBackend,
    assemble_prompt,
    classify,
    classify_batch,
    parse_response,
    render_response,
    write_judgments_jsonl,
    read_judgments_jsonl,
)
from annoloop.prompts import PromptSpec


SPEC_WITH_DEMO = PromptSpec(
    label_id="meat-eater",
    variant="definition_only",
    version="v1",
    system_text="Assess the text.\nOutput format:\nRATIONALE:\nSCORE: 0 or 1",
    demo_user="We're grilling sausages tonight.",
    demo_assistant="RATIONALE: Grilled sausages are meat.\nSCORE: 1",
)

SPEC_NO_DEMO = PromptSpec(
    label_id="serious",
    variant="definition_only",
    version="v1",
    system_text="Assess the text.\nOutput format:\nRATIONALE:\nSCORE: 0 or 1",
)


def test_assemble_with_demo():
    inst = Instance("x", "The main dish is steak.", "en")
    messages = assemble_prompt(SPEC_WITH_DEMO, inst)
    assert [m.role for m in messages] == ["system", "user", "assistant", "user"]
    assert messages[-1].content == "The main dish is steak."


def test_assemble_without_demo():
    inst = Instance("x", "Hello there.", "en")
    messages = assemble_prompt(SPEC_NO_DEMO, inst)
    assert [m.role for m in messages] == ["system", "user"]
    assert messages[-1].content == "Hello there."


# -- parsing ---------------------------------------------------------------


def test_parse_basic():
    assert parse_response("RATIONALE: mentions steak\nSCORE: 1") == ("mentions steak", 1)


def test_parse_empty_rationale():
    assert parse_response("RATIONALE: \nSCORE: 0") == ("", 0)


def test_parse_missing_score():
    with pytest.raises(ParseError) as err:
        parse_response("The text is about tea.")
    assert err.value.code == "missing_score"


@pytest.mark.parametrize(
    "raw,expected",
    [
        # protocol-conformant responses in the published output format
        ("RATIONALE: The speaker eats chicken.\nSCORE: 1", ("The speaker eats chicken.", 1)),
        ("RATIONALE: No meat-related food appears.\nSCORE: 0", ("No meat-related food appears.", 0)),
        ("RATIONALE:\nSCORE: 1", ("", 1)),
        # marker echo inside the rationale: the final markers win
        (
            "RATIONALE: format is RATIONALE: text SCORE: 0 or 1, so...\nRATIONALE: has beef\nSCORE: 1",
            ("has beef", 1),
        ),
        ("rationale: lowercase marker\nscore: 1", ("lowercase marker", 1)),
        ("RATIONALE: x\nSCORE:1", ("x", 1)),
        ("RATIONALE: x\nSCORE:   0   ", ("x", 0)),
        ("RATIONALE: x\nSCORE: 1\n", ("x", 1)),
        ("Preamble text.\nRATIONALE: y\nSCORE: 0", ("y", 0)),
        ("RATIONALE: a\nSCORE: 0\nRATIONALE: b\nSCORE: 1", ("b", 1)),
        # trailing prose after the score is tolerated
        ("RATIONALE: z\nSCORE: 1 (confident)", ("z", 1)),
        ("RATIONALE: z\nSCORE: 1. Done.", ("z", 1)),
        # no rationale marker at all: empty rationale
        ("SCORE: 0", ("", 0)),
        # the bare format template parses to score 0 per the integer rule
        ("RATIONALE:\nSCORE: 0 or 1", ("", 0)),
    ],
)
def test_parse_adversarial_accepted(raw, expected):
    assert parse_response(raw) == expected


@pytest.mark.parametrize(
    "raw,code",
    [
        ("RATIONALE: thinking...", "missing_score"),
        ("", "missing_score"),
        ("The score is one.", "missing_score"),
        ("RATIONALE: x\nSCORE: 2", "invalid_score"),
        ("RATIONALE: x\nSCORE: 10", "invalid_score"),
        ("RATIONALE: x\nSCORE: yes", "invalid_score"),
        ("RATIONALE: x\nSCORE:", "invalid_score"),
        ("RATIONALE: x\nSCORE: -1", "invalid_score"),
        # a later echoed marker overrides an earlier valid one
        ("RATIONALE: x\nSCORE: 1\nP.S. remember the SCORE: format", "invalid_score"),
    ],
)
def test_parse_adversarial_rejected(raw, code):
    with pytest.raises(ParseError) as err:
        parse_response(raw)
    assert err.value.code == code


@given(
    st.text(max_size=60).filter(
        lambda s: "RATIONALE" not in s.upper() and "SCORE" not in s.upper()
    ),
    st.integers(min_value=0, max_value=1),
)
def test_parse_render_roundtrip(rationale, score):
    parsed_rationale, parsed_score = parse_response(render_response(rationale, score))
    assert parsed_rationale == rationale.strip()
    assert parsed_score == score


# -- classify --------------------------------------------------------------


def _inst(i=0):
    return Instance(f"i{i}", f"text {i}", "en")


def test_classify_stub_passthrough():
    backend = StubBackend({"i0": "RATIONALE: x\nSCORE: 1"})
    judgment = classify(backend, SPEC_NO_DEMO, _inst())
    assert judgment.score == 1
    assert judgment.rationale == "x"
    assert judgment.model_id == "stub"
    assert judgment.prompt_version == "definition_only/v1"
    assert judgment.raw_response == "RATIONALE: x\nSCORE: 1"


def test_classify_retry_then_success():
    backend = StubBackend({"i0": ["garbage", "RATIONALE: ok\nSCORE: 0"]})
    judgment = classify(backend, SPEC_NO_DEMO, _inst())
    assert judgment.score == 0
    assert judgment.raw_response == "RATIONALE: ok\nSCORE: 0"


def test_classify_exhausts_retries():
    backend = StubBackend(
        {"i0": "always garbage"}, config=BackendConfig(model_id="stub", max_retries=2)
    )
    with pytest.raises(ClassificationError) as err:
        classify(backend, SPEC_NO_DEMO, _inst())
    assert err.value.attempts == 3
    assert err.value.last_response == "always garbage"


def test_classify_transport_error_propagates():
    backend = StubBackend(default="RATIONALE: x\nSCORE: 1", transport_failures={"i0"})
    with pytest.raises(TransportError):
        classify(backend, SPEC_NO_DEMO, _inst())


def test_classify_batch_order_and_isolation():
    responses = {f"i{k}": f"RATIONALE: r{k}\nSCORE: {k % 2}" for k in range(10)}
    backend = StubBackend(responses, transport_failures={"i6"})
    instances = [_inst(k) for k in range(10)]
    judgments, failures = classify_batch(backend, SPEC_NO_DEMO, instances, parallelism=4)
    assert len(judgments) == 9
    assert [j.instance_id for j in judgments] == [f"i{k}" for k in range(10) if k != 6]
    assert [f.instance_id for f in failures] == ["i6"]
    assert failures[0].error_type == "TransportError"


def test_classify_batch_parallelism_invariant():
    responses = {f"i{k}": f"RATIONALE: r{k}\nSCORE: {k % 2}" for k in range(10)}
    instances = [_inst(k) for k in range(10)]
    serial, _ = classify_batch(StubBackend(responses), SPEC_NO_DEMO, instances, parallelism=1)
    parallel, _ = classify_batch(StubBackend(responses), SPEC_NO_DEMO, instances, parallelism=8)
    assert serial == parallel


def test_classify_batch_rejects_bad_parallelism():
    with pytest.raises(ValueError):
        classify_batch(StubBackend({}), SPEC_NO_DEMO, [], parallelism=0)


def test_recorded_replay_is_byte_identical():
    responses = {f"i{k}": f"RATIONALE: r{k}\nSCORE: {k % 2}" for k in range(6)}
    instances = [_inst(k) for k in range(6)]
    first, _ = classify_batch(StubBackend(responses), SPEC_NO_DEMO, instances)
    replay_backend = StubBackend.from_judgments(first)
    second, _ = classify_batch(replay_backend, SPEC_NO_DEMO, instances)
    assert first == second


def test_judgments_jsonl_roundtrip(tmp_path):
    backend = StubBackend({f"i{k}": f"RATIONALE: r{k}\nSCORE: 1" for k in range(3)})
    judgments, _ = classify_batch(backend, SPEC_NO_DEMO, [_inst(k) for k in range(3)])
    path = tmp_path / "j.jsonl"
    write_judgments_jsonl(judgments, path)
    assert read_judgments_jsonl(path) == judgments


def test_prompt_never_contains_gold_labels(table_sample_corpus):
    for inst in table_sample_corpus.instances:
        messages = assemble_prompt(SPEC_NO_DEMO, inst)
        assert messages[0].content == SPEC_NO_DEMO.system_text
        assert messages[-1].content == inst.text
        assert len(messages) == 2


def test_backend_config_invariants():
    with pytest.raises(ValueError):
        BackendConfig(model_id="m", temperature=-0.1)
    with pytest.raises(ValueError):
        BackendConfig(model_id="m", max_retries=-1)

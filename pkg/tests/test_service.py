from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from annoloop.gateway import ModelJudgment, write_judgments_jsonl
from annoloop.service import ServiceConfig, build_state, create_app, load_config

from conftest import write_jsonl

TOKENS = {
    "tok-annot": {"actor": "alice", "role": "annotator"},
    "tok-adjud": {"actor": "expert", "role": "adjudicator"},
    "tok-admin": {"actor": "root", "role": "admin"},
}

ANNOT = {"Authorization": "Bearer tok-annot"}
ADJUD = {"Authorization": "Bearer tok-adjud"}
ADMIN = {"Authorization": "Bearer tok-admin"}


def _setup(tmp_path, n=6, flip=("i001",)):
    corpus_path = write_jsonl(
        tmp_path / "original.jsonl",
        [
            {"id": f"i{k:03d}", "text": f"text {k}", "language": "en", "serious": k % 2}
            for k in range(n)
        ],
    )
    judgments = []
    for k in range(n):
        iid = f"i{k:03d}"
        score = (k % 2) if iid not in flip else 1 - (k % 2)
        judgments.append(
            ModelJudgment(
                instance_id=iid,
                label_id="serious",
                score=score,
                rationale=f"cue {k}",
                model_id="stub",
                prompt_version="definition_only/v1",
                raw_response=f"RATIONALE: cue {k}\nSCORE: {score}",
            )
        )
    judgments_path = tmp_path / "judgments.jsonl"
    write_judgments_jsonl(judgments, judgments_path)
    config = ServiceConfig(
        corpus_files={
            "original": str(corpus_path),
            "final": str(tmp_path / "final.jsonl"),
        },
        judgments_path=str(judgments_path),
        event_log=str(tmp_path / "events.jsonl"),
        tokens=dict(TOKENS),
    )
    state = build_state(config)
    batch = state.workflow.create_batch(
        state.corpus.ids(), ["serious"], actor="root", batch_id="b1"
    )
    return config, state, batch


@pytest.fixture
def client_state(tmp_path):
    config, state, batch = _setup(tmp_path)
    return TestClient(create_app(state)), state


def test_health_open(client_state):
    client, _ = client_state
    assert client.get("/health").json() == {"status": "ok"}


def test_auth_required(client_state):
    client, _ = client_state
    response = client.get("/batches")
    assert response.status_code == 401
    assert set(response.json()) == {"code", "message", "detail"}
    assert client.get("/batches", headers={"Authorization": "Bearer nope"}).status_code == 401


def test_batches_listing(client_state):
    client, _ = client_state
    body = client.get("/batches", headers=ANNOT).json()
    assert body["items"][0]["batch_id"] == "b1"
    assert body["items"][0]["pending"] == 6


def test_next_task_has_no_model_data(client_state):
    client, _ = client_state
    task = client.get("/batches/b1/next-task", headers=ANNOT).json()["task"]
    assert task["task_id"] == "b1:i000"
    assert "model" not in json.dumps(task)


def test_judgment_then_reveal(client_state):
    client, _ = client_state
    response = client.post(
        "/tasks/b1:i000/judgment", headers=ANNOT, json={"values": {"serious": 0}}
    )
    assert response.status_code == 200
    assert response.json()["task"]["state"] == "judged"
    reveal = client.post("/tasks/b1:i000/reveal", headers=ANNOT)
    assert reveal.status_code == 200
    judgments = reveal.json()["judgments"]
    assert judgments[0]["label_id"] == "serious"
    assert "rationale" in judgments[0]


def test_reveal_before_judgment_409(client_state):
    client, _ = client_state
    response = client.post("/tasks/b1:i000/reveal", headers=ANNOT)
    assert response.status_code == 409
    body = response.json()
    assert body["code"] == "gating_error"


def test_role_gates(client_state):
    client, _ = client_state
    client.post("/tasks/b1:i000/judgment", headers=ANNOT, json={"values": {"serious": 0}})
    client.post("/tasks/b1:i000/flag", headers=ANNOT, json={"note": "unsure"})
    # annotator cannot adjudicate
    response = client.post("/tasks/b1:i000/adjudicate", headers=ANNOT, json={})
    assert response.status_code == 403
    # adjudicator cannot submit judgments
    response = client.post(
        "/tasks/b1:i001/judgment", headers=ADJUD, json={"values": {"serious": 1}}
    )
    assert response.status_code == 403
    # adjudicator works the queue
    response = client.post("/tasks/b1:i000/adjudicate", headers=ADJUD, json={})
    assert response.status_code == 200
    assert response.json()["task"]["final_values"] == {"serious": 0}


def test_unknown_task_404(client_state):
    client, _ = client_state
    response = client.post(
        "/tasks/b1:ghost/judgment", headers=ANNOT, json={"values": {"serious": 0}}
    )
    assert response.status_code == 404


def test_validation_envelope(client_state):
    client, _ = client_state
    response = client.post("/tasks/b1:i000/judgment", headers=ANNOT, json={"oops": 1})
    assert response.status_code == 422
    assert response.json()["code"] == "validation_error"


def _drive_to_qc(client):
    for k in range(6):
        client.post(
            f"/tasks/b1:i{k:03d}/judgment",
            headers=ANNOT,
            json={"values": {"serious": k % 2}},
        )
    assert client.post("/batches/b1/qc", headers=ADMIN).status_code == 200


def test_adjudication_queue_pagination(client_state):
    client, _ = client_state
    _drive_to_qc(client)
    client.post(
        "/batches/b1/audit",
        headers=ADMIN,
        json={"fraction": 1.0, "targeted": False, "seed": 1},
    )
    first = client.get(
        "/batches/b1/adjudication-queue", headers=ADJUD, params={"page_size": 4}
    ).json()
    assert len(first["items"]) == 4
    assert first["total"] == 6
    second = client.get(
        "/batches/b1/adjudication-queue",
        headers=ADJUD,
        params={"page_size": 4, "cursor": first["next_cursor"]},
    ).json()
    assert len(second["items"]) == 2
    assert second["next_cursor"] is None
    ids = [t["task_id"] for t in first["items"] + second["items"]]
    assert len(set(ids)) == 6
    # diffs present: i001 was flipped by the model
    flipped = [t for t in first["items"] + second["items"] if t["task_id"] == "b1:i001"]
    assert flipped[0]["disagreeing_labels"] == ["serious"]


def test_full_qc_cycle_and_finalize(client_state, tmp_path):
    client, state = client_state
    _drive_to_qc(client)
    audit = client.post(
        "/batches/b1/audit",
        headers=ADMIN,
        json={"fraction": 0.5, "targeted": True, "seed": 3},
    ).json()
    assert "b1:i001" in audit["selected"]
    queue = client.get("/batches/b1/adjudication-queue", headers=ADJUD).json()
    for item in queue["items"]:
        response = client.post(
            f"/tasks/{item['task_id']}/adjudicate", headers=ADJUD, json={"note": ""}
        )
        assert response.status_code == 200
    final = client.post("/batches/b1/finalize", headers=ADMIN)
    assert final.status_code == 200
    assert final.json()["finalized_count"] == 6
    progress = client.get("/batches/b1/progress", headers=ANNOT).json()
    assert progress["state"] == "finalized"
    assert progress["task_states"] == {"final": 6}
    # final layer exported to the configured file
    final_path = state.config.corpus_files["final"]
    lines = [json.loads(l) for l in open(final_path, encoding="utf-8")]
    assert len(lines) == 6
    assert all("serious" in l for l in lines)


def test_reports(client_state):
    client, _ = client_state
    _drive_to_qc(client)
    client.post("/batches/b1/finalize", headers=ADMIN)
    kappa = client.get(
        "/reports/kappa",
        headers=ADJUD,
        params={"layer_a": "original", "layer_b": "final", "batch_id": "b1"},
    ).json()
    pooled = [r for r in kappa["rows"] if r["language"] == "all" and r["label"] == "serious"]
    assert pooled[0]["value"] == 1.0
    csv_text = client.get(
        "/reports/kappa", headers=ADJUD, params={"format": "csv"}
    ).text
    assert csv_text.splitlines()[0].startswith("language,")
    metrics = client.get(
        "/reports/metrics",
        headers=ANNOT,
        params={"pred_layer": "model", "gold_layer": "final", "batch_id": "b1"},
    ).json()
    f1 = [
        r
        for r in metrics["rows"]
        if r["language"] == "all" and r["label"] == "serious" and r["metric"] == "f1"
    ]
    assert 0.0 <= f1[0]["value"] <= 1.0


def test_kill_and_restart_preserves_state(tmp_path):
    config, state, batch = _setup(tmp_path)
    client = TestClient(create_app(state))
    client.post("/tasks/b1:i000/judgment", headers=ANNOT, json={"values": {"serious": 0}})
    client.post("/tasks/b1:i000/reveal", headers=ANNOT)
    client.post("/tasks/b1:i000/flag", headers=ANNOT, json={"note": "hmm"})
    snapshot = state.workflow.snapshot()
    # simulate a restart: rebuild everything from files only
    state2 = build_state(config)
    assert state2.workflow.snapshot() == snapshot
    client2 = TestClient(create_app(state2))
    queue = client2.get("/batches/b1/adjudication-queue", headers=ADJUD).json()
    assert [t["task_id"] for t in queue["items"]] == ["b1:i000"]


def test_every_mutation_is_one_event(tmp_path):
    config, state, batch = _setup(tmp_path)
    client = TestClient(create_app(state))
    base = len(state.workflow.log.events)
    client.post("/tasks/b1:i000/judgment", headers=ANNOT, json={"values": {"serious": 0}})
    client.post("/tasks/b1:i000/reveal", headers=ANNOT)
    client.post("/tasks/b1:i000/reveal", headers=ANNOT)  # idempotent, no event
    client.post("/tasks/b1:i000/flag", headers=ANNOT, json={"note": "x"})
    assert len(state.workflow.log.events) == base + 3
    kinds = [e.kind for e in state.workflow.log.events[base:]]
    assert kinds == ["judgment_submitted", "model_revealed", "task_flagged"]


def test_load_config_precedence(tmp_path, monkeypatch):
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "port": 1111,
                "event_log": str(tmp_path / "e.jsonl"),
                "tokens": TOKENS,
            }
        ),
        encoding="utf-8",
    )
    assert load_config(config_path).port == 1111
    monkeypatch.setenv("ANNOLOOP_PORT", "2222")
    assert load_config(config_path).port == 2222
    assert load_config(config_path, overrides={"port": 3333}).port == 3333

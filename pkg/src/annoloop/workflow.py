"""Re-annotation lifecycle over an append-only event log.

Every mutation is an event; task and batch state is a pure fold over the
log, so replaying a log prefix reconstructs the exact state at that point.
Two rules are load-bearing for annotation quality and are enforced
structurally rather than by convention:

* reveal-after-judgment gating: model output is unreachable until the
  human judgment for the task is recorded (anchoring mitigation);
* initial judgments are immutable: adjudication writes final values, never
  the human ones.

Adjudication is conservative: absent an explicit decision, the annotator's
values become final. Explicit overrides require a note and must satisfy
the label schema (hard block), while schema warnings at judgment time are
non-blocking.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Corpus, LabelAssignment, _now_iso
from .errors import GatingError, WorkflowError
from .gateway import ModelJudgment
from .metrics import MetricReport, agreement_report
from .schema import LabelSchema, validate_assignment

BATCH_GROUP_DEMOGRAPHIC = ("male", "female", "child", "adult", "elderly", "parent")
BATCH_GROUP_DIET_PERSONALITY = ("meat-eater", "vegetarian", "serious")

TASK_PENDING = "pending"
TASK_JUDGED = "judged"
TASK_REVEALED = "revealed"
TASK_FLAGGED = "flagged"
TASK_AUDITED = "audited"
TASK_ADJUDICATED = "adjudicated"
TASK_FINAL = "final"

BATCH_OPEN = "open"
BATCH_ANNOTATING = "annotating"
BATCH_QC = "qc"
BATCH_FINALIZED = "finalized"

EV_BATCH_CREATED = "batch_created"
EV_JUDGMENT_SUBMITTED = "judgment_submitted"
EV_MODEL_REVEALED = "model_revealed"
EV_TASK_FLAGGED = "task_flagged"
EV_QC_STARTED = "qc_started"
EV_AUDIT_PERFORMED = "audit_performed"
EV_TASK_ADJUDICATED = "task_adjudicated"
EV_BATCH_FINALIZED = "batch_finalized"


@dataclass(frozen=True)
class WorkflowEvent:
    seq: int
    kind: str
    actor: str
    payload: dict
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "actor": self.actor,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WorkflowEvent":
        return cls(
            seq=data["seq"],
            kind=data["kind"],
            actor=data["actor"],
            payload=data["payload"],
            timestamp=data["timestamp"],
        )


class EventLog:
    """Append-only JSONL event sink, fsynced per append."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.events: list[WorkflowEvent] = []

    @property
    def next_seq(self) -> int:
        return len(self.events) + 1

    def append(self, kind: str, actor: str, payload: dict) -> WorkflowEvent:
        event = WorkflowEvent(
            seq=self.next_seq,
            kind=kind,
            actor=actor,
            payload=payload,
            timestamp=_now_iso(),
        )
        self.events.append(event)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return event

    @staticmethod
    def read_events(path: str | Path) -> list[WorkflowEvent]:
        events = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(WorkflowEvent.from_dict(json.loads(line)))
        return events


@dataclass
class TaskRecord:
    batch_id: str
    instance_id: str
    state: str = TASK_PENDING
    annotator: str | None = None
    human_values: dict[str, int] | None = None
    warnings: list[str] = field(default_factory=list)
    flags: list[dict] = field(default_factory=list)
    revealed: bool = False
    reveal_timestamp: str | None = None
    audited: bool = False
    adjudication: dict | None = None
    final_values: dict[str, int] | None = None

    @property
    def task_id(self) -> str:
        return f"{self.batch_id}:{self.instance_id}"

    @property
    def needs_adjudication(self) -> bool:
        return (
            (bool(self.flags) or self.audited)
            and self.state not in (TASK_ADJUDICATED, TASK_FINAL)
        )

    def to_dict(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "instance_id": self.instance_id,
            "state": self.state,
            "annotator": self.annotator,
            "human_values": self.human_values,
            "warnings": list(self.warnings),
            "flags": list(self.flags),
            "revealed": self.revealed,
            "reveal_timestamp": self.reveal_timestamp,
            "audited": self.audited,
            "adjudication": self.adjudication,
            "final_values": self.final_values,
        }


@dataclass
class Batch:
    batch_id: str
    label_group: tuple[str, ...]
    instance_ids: tuple[str, ...]
    state: str = BATCH_OPEN
    sample_meta: dict = field(default_factory=dict)
    language_annotators: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "label_group": list(self.label_group),
            "instance_ids": list(self.instance_ids),
            "state": self.state,
            "sample_meta": self.sample_meta,
            "language_annotators": dict(self.language_annotators),
        }


@dataclass
class FinalizeResult:
    batch_id: str
    finalized_count: int
    kappa_report: MetricReport


class Workflow:
    """Single-writer command handler plus event fold for one event log.

    ``judgments`` holds the model judgments used for reveal payloads and
    targeted audits, keyed by (instance_id, label_id). They are an input
    artifact, not event state: replay only needs the log and the corpus.
    """

    def __init__(
        self,
        corpus: Corpus,
        judgments: Iterable[ModelJudgment] = (),
        log_path: str | Path | None = None,
    ):
        self.corpus = corpus
        self.schema: LabelSchema = corpus.schema
        self.judgments: dict[tuple[str, str], ModelJudgment] = {
            (j.instance_id, j.label_id): j for j in judgments
        }
        self.log = EventLog(log_path)
        self.batches: dict[str, Batch] = {}
        self.tasks: dict[str, TaskRecord] = {}

    @classmethod
    def open(
        cls,
        log_path: str | Path,
        corpus: Corpus,
        judgments: Iterable[ModelJudgment] = (),
    ) -> "Workflow":
        """Replay an existing log (if any) and continue appending to it."""
        workflow = cls(corpus, judgments=judgments, log_path=log_path)
        if Path(log_path).exists():
            for event in EventLog.read_events(log_path):
                workflow.log.events.append(event)
                workflow._apply(event)
        return workflow

    # -- helpers -------------------------------------------------------

    def _record(self, kind: str, actor: str, payload: dict) -> WorkflowEvent:
        event = self.log.append(kind, actor, payload)
        self._apply(event)
        return event

    def task(self, task_id: str) -> TaskRecord:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise WorkflowError(f"unknown task: {task_id!r}") from None

    def batch(self, batch_id: str) -> Batch:
        try:
            return self.batches[batch_id]
        except KeyError:
            raise WorkflowError(f"unknown batch: {batch_id!r}") from None

    def batch_tasks(self, batch_id: str) -> list[TaskRecord]:
        batch = self.batch(batch_id)
        return [self.tasks[f"{batch_id}:{iid}"] for iid in batch.instance_ids]

    def adjudication_queue(self, batch_id: str) -> list[TaskRecord]:
        return [t for t in self.batch_tasks(batch_id) if t.needs_adjudication]

    def model_values(self, instance_id: str, labels: Iterable[str]) -> dict[str, int]:
        values = {}
        for label in labels:
            judgment = self.judgments.get((instance_id, label))
            if judgment is not None:
                values[label] = judgment.score
        return values

    def snapshot(self) -> str:
        """Canonical serialized state; equal strings mean equal state."""
        state = {
            "batches": {bid: b.to_dict() for bid, b in sorted(self.batches.items())},
            "tasks": {tid: t.to_dict() for tid, t in sorted(self.tasks.items())},
        }
        return json.dumps(state, sort_keys=True, ensure_ascii=False)

    # -- commands ------------------------------------------------------

    def create_batch(
        self,
        instance_ids: Iterable[str],
        label_group: Iterable[str],
        actor: str,
        batch_id: str | None = None,
        sample_meta: dict | None = None,
    ) -> Batch:
        labels = tuple(label_group)
        if not labels:
            raise WorkflowError("label_group must be non-empty")
        if len(set(labels)) != len(labels):
            raise WorkflowError("label_group has duplicate labels")
        self.schema.require_labels(labels)
        ids = tuple(instance_ids)
        if not ids:
            raise WorkflowError("batch needs at least one instance")
        if len(set(ids)) != len(ids):
            raise WorkflowError("batch instance ids must be distinct")
        for iid in ids:
            self.corpus.instance(iid)
        if batch_id is None:
            batch_id = f"batch-{len(self.batches) + 1:04d}"
        if batch_id in self.batches:
            raise WorkflowError(f"batch id already exists: {batch_id!r}")
        self._record(
            EV_BATCH_CREATED,
            actor,
            {
                "batch_id": batch_id,
                "label_group": list(labels),
                "instance_ids": list(ids),
                "sample_meta": sample_meta or {},
            },
        )
        return self.batches[batch_id]

    def submit_judgment(
        self, task_id: str, annotator: str, values: dict[str, int]
    ) -> TaskRecord:
        task = self.task(task_id)
        batch = self.batch(task.batch_id)
        if task.state != TASK_PENDING:
            raise WorkflowError(
                f"task {task_id} already judged; initial judgments are immutable"
            )
        expected = set(batch.label_group)
        given = set(values)
        if given - expected:
            raise WorkflowError(
                f"values name labels outside the batch group: {sorted(given - expected)}"
            )
        if expected - given:
            raise WorkflowError(
                f"values must cover all batch labels; missing {sorted(expected - given)}"
            )
        language = self.corpus.instance(task.instance_id).language
        claimed = batch.language_annotators.get(language)
        if claimed is not None and claimed != annotator:
            raise WorkflowError(
                f"language {language!r} in batch {batch.batch_id} is assigned to "
                f"{claimed!r}; one primary annotator per language"
            )
        warnings = [v.describe() for v in validate_assignment(values, self.schema)]
        self._record(
            EV_JUDGMENT_SUBMITTED,
            annotator,
            {
                "batch_id": task.batch_id,
                "instance_id": task.instance_id,
                "values": dict(values),
                "warnings": warnings,
                "language": language,
            },
        )
        return self.task(task_id)

    def reveal_model(self, task_id: str, actor: str) -> list[ModelJudgment]:
        """Model judgments for the task's batch labels; judgment-gated.

        Idempotent: repeat calls return the same payload without new events.
        """
        task = self.task(task_id)
        if task.state == TASK_PENDING:
            raise GatingError(
                f"task {task_id} has no human judgment yet; model output is "
                "unreachable before judgment"
            )
        if not task.revealed:
            self._record(
                EV_MODEL_REVEALED,
                actor,
                {"batch_id": task.batch_id, "instance_id": task.instance_id},
            )
        batch = self.batch(task.batch_id)
        return [
            self.judgments[(task.instance_id, label)]
            for label in batch.label_group
            if (task.instance_id, label) in self.judgments
        ]

    def flag(self, task_id: str, annotator: str, note: str) -> TaskRecord:
        task = self.task(task_id)
        if not note or not note.strip():
            raise WorkflowError("flag note must be non-empty")
        if task.state == TASK_PENDING:
            raise WorkflowError(f"task {task_id} cannot be flagged before judgment")
        if task.state in (TASK_ADJUDICATED, TASK_FINAL):
            raise WorkflowError(f"task {task_id} is already {task.state}")
        self._record(
            EV_TASK_FLAGGED,
            annotator,
            {"batch_id": task.batch_id, "instance_id": task.instance_id, "note": note},
        )
        return self.task(task_id)

    def begin_qc(self, batch_id: str, actor: str) -> Batch:
        batch = self.batch(batch_id)
        if batch.state not in (BATCH_OPEN, BATCH_ANNOTATING):
            raise WorkflowError(f"batch {batch_id} is {batch.state}, cannot enter qc")
        pending = [t.instance_id for t in self.batch_tasks(batch_id) if t.state == TASK_PENDING]
        if pending:
            raise WorkflowError(
                f"batch {batch_id} still has {len(pending)} pending tasks"
            )
        self._record(EV_QC_STARTED, actor, {"batch_id": batch_id})
        return self.batch(batch_id)

    def audit_sample(
        self,
        batch_id: str,
        fraction: float,
        targeted: bool,
        seed: int,
        actor: str,
    ) -> list[str]:
        """Uniform audit draw plus (optionally) every human-model
        disagreement task; selected tasks are marked audited."""
        batch = self.batch(batch_id)
        if not 0 < fraction <= 1:
            raise WorkflowError("fraction must be in (0, 1]")
        if batch.state != BATCH_QC:
            raise WorkflowError(f"batch {batch_id} is not in qc state")
        eligible = sorted(
            t.instance_id
            for t in self.batch_tasks(batch_id)
            if t.state not in (TASK_PENDING, TASK_FINAL)
        )
        k = math.ceil(fraction * len(eligible))
        rng = random.Random(seed)
        selected = set(rng.sample(eligible, k))
        if targeted:
            for task in self.batch_tasks(batch_id):
                human = task.human_values or {}
                model = self.model_values(task.instance_id, batch.label_group)
                if any(
                    label in model and human.get(label) != model[label]
                    for label in batch.label_group
                ):
                    selected.add(task.instance_id)
        chosen = sorted(selected)
        self._record(
            EV_AUDIT_PERFORMED,
            actor,
            {
                "batch_id": batch_id,
                "instance_ids": chosen,
                "fraction": fraction,
                "targeted": targeted,
                "seed": seed,
            },
        )
        return [f"{batch_id}:{iid}" for iid in chosen]

    def adjudicate(
        self,
        task_id: str,
        adjudicator: str,
        decision: dict[str, int] | None = None,
        note: str = "",
    ) -> TaskRecord:
        task = self.task(task_id)
        batch = self.batch(task.batch_id)
        if not task.needs_adjudication:
            raise WorkflowError(
                f"task {task_id} is not awaiting adjudication (state={task.state})"
            )
        if adjudicator == task.annotator:
            raise WorkflowError(
                f"{adjudicator!r} made the initial judgment on {task_id} and "
                "cannot adjudicate it"
            )
        if decision is None:
            final_values = dict(task.human_values or {})
        else:
            if not note or not note.strip():
                raise WorkflowError("overriding adjudication requires a note")
            unknown = set(decision) - set(batch.label_group)
            if unknown:
                raise WorkflowError(
                    f"decision names labels outside the batch group: {sorted(unknown)}"
                )
            final_values = dict(task.human_values or {})
            final_values.update(decision)
        violations = validate_assignment(final_values, self.schema)
        if violations:
            raise WorkflowError(
                f"final values for {task_id} violate the schema: "
                + "; ".join(v.describe() for v in violations)
            )
        self._record(
            EV_TASK_ADJUDICATED,
            adjudicator,
            {
                "batch_id": task.batch_id,
                "instance_id": task.instance_id,
                "decision": dict(decision) if decision is not None else None,
                "note": note,
                "final_values": final_values,
            },
        )
        return self.task(task_id)

    def finalize_batch(self, batch_id: str, actor: str) -> FinalizeResult:
        """Write final-layer assignments and report original-vs-final kappa.

        Judged tasks that were never flagged or audited auto-finalize to
        their human values; anything awaiting adjudication, or whose final
        values violate the schema, blocks the whole batch.
        """
        batch = self.batch(batch_id)
        if batch.state != BATCH_QC:
            raise WorkflowError(f"batch {batch_id} is {batch.state}, not qc")
        awaiting = [t.task_id for t in self.batch_tasks(batch_id) if t.needs_adjudication]
        if awaiting:
            raise WorkflowError(
                f"batch {batch_id} has unadjudicated tasks: {', '.join(awaiting)}"
            )
        blocking: list[str] = []
        for task in self.batch_tasks(batch_id):
            values = (
                task.final_values
                if task.final_values is not None
                else task.human_values or {}
            )
            if validate_assignment(values, self.schema):
                blocking.append(task.task_id)
        if blocking:
            raise WorkflowError(
                f"schema violations block finalization of: {', '.join(blocking)}"
            )
        self._record(EV_BATCH_FINALIZED, actor, {"batch_id": batch_id})
        report = agreement_report(
            "original", "final", self.corpus, self.schema, instance_ids=batch.instance_ids
        )
        return FinalizeResult(
            batch_id=batch_id,
            finalized_count=len(batch.instance_ids),
            kappa_report=report,
        )

    # -- event fold ----------------------------------------------------

    def _apply(self, event: WorkflowEvent) -> None:
        payload = event.payload
        kind = event.kind
        if kind == EV_BATCH_CREATED:
            batch = Batch(
                batch_id=payload["batch_id"],
                label_group=tuple(payload["label_group"]),
                instance_ids=tuple(payload["instance_ids"]),
                sample_meta=payload.get("sample_meta", {}),
            )
            self.batches[batch.batch_id] = batch
            for iid in batch.instance_ids:
                task = TaskRecord(batch_id=batch.batch_id, instance_id=iid)
                self.tasks[task.task_id] = task
        elif kind == EV_JUDGMENT_SUBMITTED:
            task = self.tasks[f"{payload['batch_id']}:{payload['instance_id']}"]
            task.human_values = {k: int(v) for k, v in payload["values"].items()}
            task.annotator = event.actor
            task.warnings = list(payload.get("warnings", []))
            task.state = TASK_JUDGED
            batch = self.batches[payload["batch_id"]]
            batch.language_annotators.setdefault(payload["language"], event.actor)
            if batch.state == BATCH_OPEN:
                batch.state = BATCH_ANNOTATING
        elif kind == EV_MODEL_REVEALED:
            task = self.tasks[f"{payload['batch_id']}:{payload['instance_id']}"]
            task.revealed = True
            task.reveal_timestamp = event.timestamp
            if task.state == TASK_JUDGED:
                task.state = TASK_REVEALED
        elif kind == EV_TASK_FLAGGED:
            task = self.tasks[f"{payload['batch_id']}:{payload['instance_id']}"]
            task.flags.append(
                {"annotator": event.actor, "note": payload["note"], "timestamp": event.timestamp}
            )
            if task.state in (TASK_JUDGED, TASK_REVEALED):
                task.state = TASK_FLAGGED
        elif kind == EV_QC_STARTED:
            self.batches[payload["batch_id"]].state = BATCH_QC
        elif kind == EV_AUDIT_PERFORMED:
            for iid in payload["instance_ids"]:
                task = self.tasks[f"{payload['batch_id']}:{iid}"]
                task.audited = True
                if task.state in (TASK_JUDGED, TASK_REVEALED):
                    task.state = TASK_AUDITED
        elif kind == EV_TASK_ADJUDICATED:
            task = self.tasks[f"{payload['batch_id']}:{payload['instance_id']}"]
            task.adjudication = {
                "adjudicator": event.actor,
                "decision": payload["decision"],
                "note": payload["note"],
                "timestamp": event.timestamp,
            }
            task.final_values = {
                k: int(v) for k, v in payload["final_values"].items()
            }
            task.state = TASK_ADJUDICATED
        elif kind == EV_BATCH_FINALIZED:
            batch = self.batches[payload["batch_id"]]
            batch.state = BATCH_FINALIZED
            for iid in batch.instance_ids:
                task = self.tasks[f"{batch.batch_id}:{iid}"]
                if task.final_values is None:
                    task.final_values = dict(task.human_values or {})
                task.state = TASK_FINAL
                provenance = (
                    task.adjudication["adjudicator"]
                    if task.adjudication is not None
                    else task.annotator or "auto"
                )
                for label, value in task.final_values.items():
                    self.corpus.add_assignment(
                        LabelAssignment(
                            instance_id=iid,
                            label_id=label,
                            value=value,
                            layer="final",
                            provenance=provenance,
                            timestamp=event.timestamp,
                        )
                    )
        else:
            raise WorkflowError(f"unknown event kind in log: {kind!r}")

"""JSONL corpus store for multilingual instances and their annotation layers.

One instance per line: ``id``, ``text``, ``language``, optional ``split``,
and label values as top-level integer fields named by label id. A missing
label field means "not annotated", which is distinct from an explicit 0 —
conflating the two would corrupt both agreement statistics and sampling.

Instance ids are caller-supplied opaque strings and are never renumbered,
so split membership survives re-ingestion. We assume ids are stable across
corpus revisions; nothing here re-keys them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusError
from .schema import LabelSchema, default_schema

LAYERS = ("original", "model", "human", "final")
SPLITS = ("dev", "test", "unsplit")

# The language set covered by the re-annotation effort; extendable per corpus.
DEFAULT_LANGUAGES = ("ja", "pt", "en", "es", "de", "fr", "it", "ko", "ru", "tr", "zh")

_RESERVED_FIELDS = {"id", "text", "language", "split"}


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class Instance:
    id: str
    text: str
    language: str
    split: str = "unsplit"

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("instance id must be non-empty")
        if not self.text:
            raise CorpusError(f"instance {self.id!r} has empty text")
        if self.split not in SPLITS:
            raise CorpusError(f"instance {self.id!r} has unknown split {self.split!r}")


@dataclass(frozen=True)
class LabelAssignment:
    instance_id: str
    label_id: str
    value: int
    layer: str
    provenance: str
    timestamp: str

    def __post_init__(self) -> None:
        if self.value not in (0, 1):
            raise CorpusError(
                f"assignment value must be 0 or 1, got {self.value!r} "
                f"({self.instance_id}/{self.label_id})"
            )
        if self.layer not in LAYERS:
            raise CorpusError(f"unknown layer {self.layer!r}")
        if not self.provenance:
            raise CorpusError("assignment provenance must be non-empty")


class Corpus:
    """In-memory handle over instances plus per-layer label assignments.

    Reads are safe to share across threads; callers serialize mutations.
    """

    def __init__(
        self,
        schema: LabelSchema | None = None,
        languages: Iterable[str] = DEFAULT_LANGUAGES,
    ):
        self.schema = schema if schema is not None else default_schema()
        self.languages = tuple(languages)
        self._instances: dict[str, Instance] = {}
        # (instance_id, label_id, layer, provenance) -> LabelAssignment
        self._assignments: dict[tuple[str, str, str, str], LabelAssignment] = {}
        # (instance_id, label_id, layer) -> [keys into _assignments]
        self._by_cell: dict[tuple[str, str, str], list[tuple[str, str, str, str]]] = {}

    def __len__(self) -> int:
        return len(self._instances)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self._instances

    @property
    def instances(self) -> list[Instance]:
        return list(self._instances.values())

    def ids(self) -> list[str]:
        return list(self._instances.keys())

    def instance(self, instance_id: str) -> Instance:
        try:
            return self._instances[instance_id]
        except KeyError:
            raise CorpusError(f"unknown instance id: {instance_id!r}") from None

    def languages_present(self) -> list[str]:
        seen = {inst.language for inst in self._instances.values()}
        ordered = [l for l in self.languages if l in seen]
        ordered.extend(sorted(seen - set(ordered)))
        return ordered

    def add_instance(self, instance: Instance) -> None:
        if instance.language not in self.languages:
            raise CorpusError(
                f"instance {instance.id!r} has language {instance.language!r} "
                f"outside the configured set"
            )
        existing = self._instances.get(instance.id)
        if existing is None:
            self._instances[instance.id] = instance
            return
        if (existing.text, existing.language) != (instance.text, instance.language):
            raise CorpusError(f"conflicting duplicate instance id: {instance.id!r}")
        if existing.split == "unsplit" and instance.split != "unsplit":
            self._instances[instance.id] = replace(existing, split=instance.split)
        elif instance.split not in ("unsplit", existing.split):
            raise CorpusError(
                f"instance {instance.id!r} re-ingested with conflicting split "
                f"{instance.split!r} (was {existing.split!r})"
            )

    def add_assignment(self, assignment: LabelAssignment) -> None:
        if assignment.instance_id not in self._instances:
            raise CorpusError(
                f"assignment references unknown instance {assignment.instance_id!r}"
            )
        if not self.schema.has_label(assignment.label_id):
            raise CorpusError(f"unknown label id: {assignment.label_id!r}")
        key = (
            assignment.instance_id,
            assignment.label_id,
            assignment.layer,
            assignment.provenance,
        )
        if key not in self._assignments:
            cell = (assignment.instance_id, assignment.label_id, assignment.layer)
            self._by_cell.setdefault(cell, []).append(key)
        self._assignments[key] = assignment

    def assignments(self, layer: str | None = None) -> Iterator[LabelAssignment]:
        for assignment in self._assignments.values():
            if layer is None or assignment.layer == layer:
                yield assignment

    def value(self, instance_id: str, label_id: str, layer: str) -> int | None:
        """Latest assigned value for one (instance, label, layer) cell."""
        keys = self._by_cell.get((instance_id, label_id, layer))
        if not keys:
            return None
        latest = max(
            (self._assignments[k] for k in keys),
            key=lambda a: (a.timestamp, a.provenance),
        )
        return latest.value

    def values_for(self, instance_id: str, layer: str) -> dict[str, int]:
        out: dict[str, int] = {}
        for label_id in self.schema.label_ids:
            value = self.value(instance_id, label_id, layer)
            if value is not None:
                out[label_id] = value
        return out

    def layer_snapshot(self, layer: str) -> dict[str, dict[str, int]]:
        """Canonical {instance_id: {label: value}} view of one layer."""
        return {iid: self.values_for(iid, layer) for iid in self._instances}

    def content_key(self, layer: str) -> list[tuple]:
        """Comparable identity of (instances, assignments) for one layer."""
        out = []
        for iid in sorted(self._instances):
            inst = self._instances[iid]
            values = tuple(sorted(self.values_for(iid, layer).items()))
            out.append((iid, inst.text, inst.language, inst.split, values))
        return out


def ingest_jsonl(
    path: str | Path,
    layer: str,
    schema: LabelSchema | None = None,
    languages: Iterable[str] = DEFAULT_LANGUAGES,
    provenance: str | None = None,
    timestamp: str | None = None,
    into: Corpus | None = None,
) -> Corpus:
    """Load a JSONL file into a (new or existing) corpus handle.

    Every label field on a line becomes one assignment in ``layer``. Errors
    carry the 1-based line number of the offending record.
    """
    path = Path(path)
    if layer not in LAYERS:
        raise CorpusError(f"unknown layer {layer!r}")
    corpus = into if into is not None else Corpus(schema=schema, languages=languages)
    provenance = provenance or f"ingest:{path.name}"
    timestamp = timestamp or _now_iso()
    seen_in_file: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})")
            if not isinstance(record, dict):
                raise CorpusError(f"{path.name}:{lineno}: line is not a JSON object")
            try:
                instance = Instance(
                    id=str(record.get("id") or _missing(record, "id")),
                    text=_require(record, "text", lineno, path.name),
                    language=_require(record, "language", lineno, path.name),
                    split=record.get("split", "unsplit"),
                )
                if instance.id in seen_in_file:
                    raise CorpusError(f"duplicate id {instance.id!r}")
                seen_in_file.add(instance.id)
                corpus.add_instance(instance)
                for field_name, raw_value in record.items():
                    if field_name in _RESERVED_FIELDS:
                        continue
                    if not corpus.schema.has_label(field_name):
                        raise CorpusError(f"unknown label id: {field_name!r}")
                    if isinstance(raw_value, bool) or raw_value not in (0, 1):
                        raise CorpusError(
                            f"label {field_name!r} has non-binary value {raw_value!r}"
                        )
                    corpus.add_assignment(
                        LabelAssignment(
                            instance_id=instance.id,
                            label_id=field_name,
                            value=int(raw_value),
                            layer=layer,
                            provenance=provenance,
                            timestamp=timestamp,
                        )
                    )
            except CorpusError as exc:
                message = str(exc)
                if not message.startswith(path.name):
                    message = f"{path.name}:{lineno}: {message}"
                raise CorpusError(message) from None
    return corpus


def _missing(record: dict, field_name: str):
    raise CorpusError(f"missing required field {field_name!r}")


def _require(record: dict, field_name: str, lineno: int, filename: str) -> str:
    value = record.get(field_name)
    if value is None or not isinstance(value, str):
        raise CorpusError(f"missing required field {field_name!r}")
    return value


def export_jsonl(corpus: Corpus, layer: str, path: str | Path) -> int:
    """Write one line per instance with that layer's label values.

    Round-trips through :func:`ingest_jsonl` losslessly at the level of
    (instances, label values). Returns the number of records written.
    """
    if layer not in LAYERS:
        raise CorpusError(f"unknown layer {layer!r}")
    path = Path(path)
    count = 0
    label_order = corpus.schema.label_ids
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot write {path}: {exc}") from None
    with fh:
        for inst in corpus.instances:
            record: dict = {"id": inst.id, "text": inst.text, "language": inst.language}
            if inst.split != "unsplit":
                record["split"] = inst.split
            values = corpus.values_for(inst.id, layer)
            for label_id in label_order:
                if label_id in values:
                    record[label_id] = values[label_id]
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def filter_corpus(
    corpus: Corpus,
    language: str | None = None,
    label: str | None = None,
    split: str | None = None,
    value: int | None = None,
    layer: str | None = None,
) -> Corpus:
    """Conjunctive subset view. ``label`` restricts to instances annotated
    for that label (in ``layer`` when given, any layer otherwise); adding
    ``value`` further restricts to that assigned value."""
    if label is not None and not corpus.schema.has_label(label):
        raise CorpusError(f"unknown label id: {label!r}")
    if value is not None and label is None:
        raise CorpusError("value filter requires a label filter")
    if split is not None and split not in SPLITS:
        raise CorpusError(f"unknown split {split!r}")
    if layer is not None and layer not in LAYERS:
        raise CorpusError(f"unknown layer {layer!r}")

    layers = (layer,) if layer is not None else LAYERS
    result = Corpus(schema=corpus.schema, languages=corpus.languages)
    for inst in corpus.instances:
        if language is not None and inst.language != language:
            continue
        if split is not None and inst.split != split:
            continue
        if label is not None:
            cell_values = [corpus.value(inst.id, label, l) for l in layers]
            present = [v for v in cell_values if v is not None]
            if not present:
                continue
            if value is not None and value not in present:
                continue
        result.add_instance(inst)
    for assignment in corpus.assignments():
        if assignment.instance_id in result:
            result.add_assignment(assignment)
    return result

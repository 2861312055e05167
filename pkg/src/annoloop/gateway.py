"""Chat prompt assembly, pluggable model backends, and response parsing.

Backends implement ``complete(messages, temperature, timeout, metadata)``
-> raw text. The deterministic stub backend is a first-class citizen: the
whole test suite runs against it with no network, and a recorded response
table replays a live run byte-for-byte.

Responses follow the marker protocol::

    RATIONALE: <free text>
    SCORE: 0 or 1

Parsing is last-marker-wins because models sometimes echo the format
inside the rationale; the final markers are the answer. Raw responses are
always kept alongside parsed judgments so output artifacts stay
inspectable after the fact.
"""

from __future__ import annotations

import json
import os
import re
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Protocol, Sequence

from .corpus import Corpus, Instance, LabelAssignment, _now_iso
from .errors import ClassificationError, ParseError, TransportError

if TYPE_CHECKING:
    from .prompts import PromptSpec

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in (ROLE_SYSTEM, ROLE_USER, ROLE_ASSISTANT):
            raise ValueError(f"unknown chat role {self.role!r}")
        if not self.content:
            raise ValueError("chat message content must be non-empty")


@dataclass(frozen=True)
class ModelJudgment:
    instance_id: str
    label_id: str
    score: int
    rationale: str
    model_id: str
    prompt_version: str
    raw_response: str

    def __post_init__(self) -> None:
        if self.score not in (0, 1):
            raise ValueError(f"score must be 0 or 1, got {self.score!r}")
        if not self.model_id or not self.prompt_version:
            raise ValueError("judgment provenance fields must be non-empty")

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "label_id": self.label_id,
            "score": self.score,
            "rationale": self.rationale,
            "model_id": self.model_id,
            "prompt_version": self.prompt_version,
            "raw_response": self.raw_response,
        }


@dataclass(frozen=True)
class BackendConfig:
    model_id: str
    endpoint: str | None = None
    credentials_env: str | None = None
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class Backend(Protocol):
    config: BackendConfig

    def complete(
        self,
        messages: Sequence[ChatMessage],
        temperature: float = 0.0,
        timeout: float | None = None,
        metadata: dict | None = None,
    ) -> str: ...


def assemble_prompt(spec: "PromptSpec", instance: Instance) -> list[ChatMessage]:
    """System message, the spec's demonstration turn pair when it has one,
    then the instance text verbatim as the final user message. Gold labels
    never enter the prompt."""
    messages = [ChatMessage(ROLE_SYSTEM, spec.system_text)]
    if spec.demo_user is not None:
        messages.append(ChatMessage(ROLE_USER, spec.demo_user))
        messages.append(ChatMessage(ROLE_ASSISTANT, spec.demo_assistant))
    messages.append(ChatMessage(ROLE_USER, instance.text))
    return messages


_SCORE_RE = re.compile(r"SCORE:", re.IGNORECASE)
_RATIONALE_RE = re.compile(r"RATIONALE:", re.IGNORECASE)


def parse_response(raw: str) -> tuple[str, int]:
    """Extract (rationale, score) from a raw response.

    The score is the integer after the last ``SCORE:`` marker (surrounding
    whitespace tolerated); the rationale is the text between the last
    ``RATIONALE:`` marker preceding it and that score marker.
    """
    score_markers = list(_SCORE_RE.finditer(raw))
    if not score_markers:
        raise ParseError("missing_score", "no SCORE marker in response")
    last_score = score_markers[-1]
    tail = raw[last_score.end():]
    value_match = re.match(r"\s*(\d+)", tail)
    if not value_match:
        raise ParseError("invalid_score", "no integer after SCORE marker")
    score = int(value_match.group(1))
    if score not in (0, 1):
        raise ParseError("invalid_score", f"score must be 0 or 1, got {score}")
    rationale_markers = [
        m for m in _RATIONALE_RE.finditer(raw) if m.end() <= last_score.start()
    ]
    if rationale_markers:
        rationale = raw[rationale_markers[-1].end():last_score.start()].strip()
    else:
        rationale = ""
    return rationale, score


def render_response(rationale: str, score: int) -> str:
    """Canonical inverse of :func:`parse_response` for marker-free rationales."""
    return f"RATIONALE: {rationale}\nSCORE: {score}"


class StubBackend:
    """Deterministic backend driven by a response table keyed by instance id.

    A table entry may be a single raw response or a list of per-attempt
    responses (the last entry repeats), which scripts parse-retry behavior.
    Instance ids in ``transport_failures`` raise :class:`TransportError`.
    """

    def __init__(
        self,
        responses: dict[str, str | list[str]] | None = None,
        default: str | None = None,
        transport_failures: Iterable[str] = (),
        config: BackendConfig | None = None,
    ):
        self.config = config or BackendConfig(model_id="stub")
        self._responses = dict(responses or {})
        self._default = default
        self._transport_failures = set(transport_failures)
        self._attempts: Counter = Counter()
        self._lock = threading.Lock()

    @classmethod
    def from_jsonl(cls, path: str | Path, **kwargs) -> "StubBackend":
        """Load a recorded response table: one ``{"instance_id", "response"}``
        (or ``"responses": [...]``) object per line."""
        responses: dict[str, str | list[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                key = record["instance_id"]
                responses[key] = record.get("responses", record.get("response"))
        return cls(responses=responses, **kwargs)

    @classmethod
    def from_judgments(cls, judgments: Iterable[ModelJudgment], **kwargs) -> "StubBackend":
        """Replay backend over the raw responses of previous judgments."""
        return cls(
            responses={j.instance_id: j.raw_response for j in judgments}, **kwargs
        )

    def complete(
        self,
        messages: Sequence[ChatMessage],
        temperature: float = 0.0,
        timeout: float | None = None,
        metadata: dict | None = None,
    ) -> str:
        instance_id = (metadata or {}).get("instance_id", "")
        with self._lock:
            attempt = self._attempts[instance_id]
            self._attempts[instance_id] += 1
        if instance_id in self._transport_failures:
            raise TransportError(f"scripted transport failure for {instance_id!r}")
        entry = self._responses.get(instance_id, self._default)
        if entry is None:
            raise TransportError(f"stub has no response for instance {instance_id!r}")
        if isinstance(entry, str):
            return entry
        return entry[min(attempt, len(entry) - 1)]


class HttpChatBackend:
    """OpenAI-compatible chat-completions backend.

    Credentials come from the environment variable named in the config and
    are never persisted. Intended for the optional live benchmark path;
    everything else runs on the stub.
    """

    DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"

    def __init__(self, config: BackendConfig):
        self.config = config

    def complete(
        self,
        messages: Sequence[ChatMessage],
        temperature: float = 0.0,
        timeout: float | None = None,
        metadata: dict | None = None,
    ) -> str:
        import httpx

        env_name = self.config.credentials_env or "OPENAI_API_KEY"
        api_key = os.environ.get(env_name)
        if not api_key:
            raise TransportError(f"environment variable {env_name} is not set")
        payload = {
            "model": self.config.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": temperature,
        }
        try:
            response = httpx.post(
                self.config.endpoint or self.DEFAULT_ENDPOINT,
                json=payload,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=timeout or self.config.timeout,
            )
            response.raise_for_status()
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except httpx.HTTPError as exc:
            raise TransportError(f"backend call failed: {exc}") from exc
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed backend response: {exc}") from exc


def classify(backend: Backend, spec: "PromptSpec", instance: Instance) -> ModelJudgment:
    """Assemble, call, parse; re-issue on protocol violations only.

    Up to ``max_retries`` additional attempts are made when the response
    fails to parse. Transport failures propagate immediately. The judgment
    records the raw response of the accepted attempt.
    """
    messages = assemble_prompt(spec, instance)
    metadata = {"instance_id": instance.id, "label_id": spec.label_id}
    attempts = backend.config.max_retries + 1
    last_raw = ""
    last_error: ParseError | None = None
    for _ in range(attempts):
        raw = backend.complete(
            messages,
            temperature=backend.config.temperature,
            timeout=backend.config.timeout,
            metadata=metadata,
        )
        last_raw = raw
        try:
            rationale, score = parse_response(raw)
        except ParseError as exc:
            last_error = exc
            continue
        return ModelJudgment(
            instance_id=instance.id,
            label_id=spec.label_id,
            score=score,
            rationale=rationale,
            model_id=backend.config.model_id,
            prompt_version=f"{spec.variant}/{spec.version}",
            raw_response=raw,
        )
    raise ClassificationError(
        f"unparseable response for {instance.id!r} after {attempts} attempts "
        f"({last_error})",
        last_response=last_raw,
        attempts=attempts,
    )


@dataclass(frozen=True)
class ClassifyFailure:
    index: int
    instance_id: str
    error_type: str
    error: str


def classify_batch(
    backend: Backend,
    spec: "PromptSpec",
    instances: Sequence[Instance],
    parallelism: int = 1,
) -> tuple[list[ModelJudgment], list[ClassifyFailure]]:
    """Classify many instances; output order equals input order.

    Per-instance failures are collected, not raised, so one bad instance
    never aborts the batch.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    results: list[ModelJudgment | None] = [None] * len(instances)
    failures: list[ClassifyFailure] = []

    def run(index: int) -> None:
        try:
            results[index] = classify(backend, spec, instances[index])
        except (ClassificationError, TransportError) as exc:
            failures.append(
                ClassifyFailure(index, instances[index].id, type(exc).__name__, str(exc))
            )

    if parallelism == 1 or len(instances) <= 1:
        for i in range(len(instances)):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(run, range(len(instances))))
    judgments = [r for r in results if r is not None]
    failures.sort(key=lambda f: f.index)
    return judgments, failures


def write_judgments_jsonl(judgments: Iterable[ModelJudgment], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for judgment in judgments:
            fh.write(json.dumps(judgment.to_dict(), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_judgments_jsonl(path: str | Path) -> list[ModelJudgment]:
    judgments = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                judgments.append(ModelJudgment(**json.loads(line)))
    return judgments


def judgments_to_layer(
    corpus: Corpus,
    judgments: Iterable[ModelJudgment],
    timestamp: str | None = None,
) -> int:
    """Materialize judgment scores as model-layer assignments."""
    timestamp = timestamp or _now_iso()
    count = 0
    for judgment in judgments:
        corpus.add_assignment(
            LabelAssignment(
                instance_id=judgment.instance_id,
                label_id=judgment.label_id,
                value=judgment.score,
                layer="model",
                provenance=judgment.model_id,
                timestamp=timestamp,
            )
        )
        count += 1
    return count

"""Versioned per-label prompt registry and LLM-assisted rationale drafting.

Prompt versions are append-only files under ``<root>/<label>/<variant>/``.
Rationale drafting is human-gated by construction: a draft produced by the
model lands in ``pending_review`` and only an explicit accept creates a new
prompt version.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .builtin_prompts import builtin_specs
from .corpus import Corpus
from .errors import RegistryError
from .gateway import Backend, ChatMessage, ROLE_SYSTEM, ROLE_USER
from .schema import LabelSchema

VARIANTS = ("full_rationale", "definition_only", "sampling_era")

DRAFT_PENDING = "pending_review"
DRAFT_ACCEPTED = "accepted"
DRAFT_REJECTED = "rejected"

META_SUMMARIZE_LABEL = "meta/summarize"

MAX_DRAFT_EXAMPLES = 50


@dataclass(frozen=True)
class PromptSpec:
    label_id: str
    variant: str
    version: str
    system_text: str
    demo_user: str | None = None
    demo_assistant: str | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise RegistryError(f"unknown prompt variant {self.variant!r}")
        if "RATIONALE" not in self.system_text or "SCORE" not in self.system_text:
            raise RegistryError(
                f"{self.label_id}/{self.variant}/{self.version}: system text must "
                "carry the RATIONALE and SCORE markers"
            )
        if (self.demo_user is None) != (self.demo_assistant is None):
            raise RegistryError(
                "demonstration user and assistant turns must be present together"
            )

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.label_id, self.variant, self.version)

    def to_dict(self) -> dict:
        data = {
            "label": self.label_id,
            "variant": self.variant,
            "version": self.version,
            "system": self.system_text,
        }
        if self.demo_user is not None:
            data["demo_user"] = self.demo_user
            data["demo_assistant"] = self.demo_assistant
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PromptSpec":
        return cls(
            label_id=data["label"],
            variant=data["variant"],
            version=data["version"],
            system_text=data["system"],
            demo_user=data.get("demo_user"),
            demo_assistant=data.get("demo_assistant"),
        )


@dataclass
class RationaleDraft:
    draft_id: str
    label_id: str
    positive_ids: list[str]
    negative_ids: list[str]
    draft_text: str
    seed: int
    status: str = DRAFT_PENDING
    reviewer: str | None = None

    def __post_init__(self) -> None:
        if len(self.positive_ids) > MAX_DRAFT_EXAMPLES:
            raise RegistryError(f"draft exceeds {MAX_DRAFT_EXAMPLES} positive examples")
        if len(self.negative_ids) > MAX_DRAFT_EXAMPLES:
            raise RegistryError(f"draft exceeds {MAX_DRAFT_EXAMPLES} negative examples")

    def to_dict(self) -> dict:
        return {
            "draft_id": self.draft_id,
            "label": self.label_id,
            "positive_ids": self.positive_ids,
            "negative_ids": self.negative_ids,
            "draft_text": self.draft_text,
            "seed": self.seed,
            "status": self.status,
            "reviewer": self.reviewer,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RationaleDraft":
        return cls(
            draft_id=data["draft_id"],
            label_id=data["label"],
            positive_ids=list(data["positive_ids"]),
            negative_ids=list(data["negative_ids"]),
            draft_text=data["draft_text"],
            seed=data["seed"],
            status=data["status"],
            reviewer=data.get("reviewer"),
        )


def _version_sort_key(version: str):
    if version.startswith("v") and version[1:].isdigit():
        return (0, int(version[1:]), version)
    return (1, 0, version)


class PromptRegistry:
    """Directory-backed registry: ``<root>/<label>/<variant>/<version>.json``.

    Existing (label, variant, version) files are never rewritten; new
    content always gets a new version.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- specs --------------------------------------------------------

    def _spec_path(self, label_id: str, variant: str, version: str) -> Path:
        return self.root / label_id / variant / f"{version}.json"

    def entries(self) -> list[tuple[str, str, str]]:
        found = []
        for path in sorted(self.root.rglob("*.json")):
            if "_drafts" in path.parts:
                continue
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
                found.append((data["label"], data["variant"], data["version"]))
            except (json.JSONDecodeError, KeyError):
                raise RegistryError(f"malformed prompt file: {path}")
        return found

    def versions(self, label_id: str, variant: str) -> list[str]:
        versions = [
            v for (l, var, v) in self.entries() if (l, var) == (label_id, variant)
        ]
        return sorted(versions, key=_version_sort_key)

    def has(self, label_id: str, variant: str, version: str) -> bool:
        return self._spec_path(label_id, variant, version).exists()

    def load(self, label_id: str, variant: str, version: str | None = None) -> PromptSpec:
        """The named version, or the highest one when omitted."""
        if version is None:
            available = self.versions(label_id, variant)
            if not available:
                raise RegistryError(
                    f"no prompt for ({label_id!r}, {variant!r}); available entries: "
                    f"{self.entries()}"
                )
            version = available[-1]
        path = self._spec_path(label_id, variant, version)
        if not path.exists():
            raise RegistryError(
                f"no prompt for ({label_id!r}, {variant!r}, {version!r}); "
                f"available entries: {self.entries()}"
            )
        return PromptSpec.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def save(self, spec: PromptSpec) -> Path:
        path = self._spec_path(spec.label_id, spec.variant, spec.version)
        if path.exists():
            raise RegistryError(
                f"prompt version already exists (append-only): {spec.key}"
            )
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(spec.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        return path

    def next_version(self, label_id: str, variant: str) -> str:
        numbers = [
            int(v[1:])
            for v in self.versions(label_id, variant)
            if v.startswith("v") and v[1:].isdigit()
        ]
        return f"v{max(numbers, default=0) + 1}"

    def resolve_judgment_prompt(self, label_id: str, prompt_version: str) -> PromptSpec:
        """Resolve a judgment's ``variant/version`` provenance string."""
        try:
            variant, version = prompt_version.split("/", 1)
        except ValueError:
            raise RegistryError(f"malformed prompt_version: {prompt_version!r}")
        return self.load(label_id, variant, version)

    # -- drafts -------------------------------------------------------

    def _draft_dir(self, label_id: str) -> Path:
        return self.root / "_drafts" / label_id

    def _draft_path(self, draft: RationaleDraft) -> Path:
        return self._draft_dir(draft.label_id) / f"{draft.draft_id}.json"

    def save_draft(self, draft: RationaleDraft) -> Path:
        path = self._draft_path(draft)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(draft.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        return path

    def load_draft(self, label_id: str, draft_id: str) -> RationaleDraft:
        path = self._draft_dir(label_id) / f"{draft_id}.json"
        if not path.exists():
            raise RegistryError(f"no draft {draft_id!r} for label {label_id!r}")
        return RationaleDraft.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def next_draft_id(self, label_id: str) -> str:
        existing = (
            len(list(self._draft_dir(label_id).glob("*.json")))
            if self._draft_dir(label_id).exists()
            else 0
        )
        return f"draft-{existing + 1:04d}"


def seed_default_prompts(registry: PromptRegistry, schema: LabelSchema) -> int:
    """Populate an empty registry with the built-in v1 prompt set."""
    count = 0
    for entry in builtin_specs(schema):
        spec = PromptSpec.from_dict(entry)
        if not registry.has(*spec.key):
            registry.save(spec)
            count += 1
    return count


def draft_rationale_summary(
    backend: Backend,
    label_id: str,
    corpus: Corpus,
    seed: int,
    registry: PromptRegistry,
    layer: str = "original",
) -> RationaleDraft:
    """Sample labeled examples and ask the model to surface recurring cues.

    Up to 50 positive and 50 negative instances are drawn uniformly under
    ``seed``. The resulting draft is stored as ``pending_review``; nothing
    is ever auto-accepted.
    """
    definition = corpus.schema.definition(label_id)
    positives = sorted(
        iid for iid in corpus.ids() if corpus.value(iid, label_id, layer) == 1
    )
    negatives = sorted(
        iid for iid in corpus.ids() if corpus.value(iid, label_id, layer) == 0
    )
    if not positives or not negatives:
        raise RegistryError(
            f"label {label_id!r} needs at least one positive and one negative "
            f"{layer}-layer instance to draft from"
        )
    rng = random.Random(seed)
    pos_sample = sorted(rng.sample(positives, min(MAX_DRAFT_EXAMPLES, len(positives))))
    neg_sample = sorted(rng.sample(negatives, min(MAX_DRAFT_EXAMPLES, len(negatives))))

    meta = registry.load(META_SUMMARIZE_LABEL, "full_rationale")
    lines = [f"Label: {label_id}", f"Current definition: {definition.definition_text}", ""]
    lines.append("Positive examples:")
    for iid in pos_sample:
        inst = corpus.instance(iid)
        lines.append(f"- [{inst.language}] {inst.text}")
    lines.append("")
    lines.append("Negative examples:")
    for iid in neg_sample:
        inst = corpus.instance(iid)
        lines.append(f"- [{inst.language}] {inst.text}")
    messages = [
        ChatMessage(ROLE_SYSTEM, meta.system_text),
        ChatMessage(ROLE_USER, "\n".join(lines)),
    ]
    draft_text = backend.complete(
        messages,
        temperature=backend.config.temperature,
        timeout=backend.config.timeout,
        metadata={"instance_id": f"rationale-draft:{label_id}"},
    )
    draft = RationaleDraft(
        draft_id=registry.next_draft_id(label_id),
        label_id=label_id,
        positive_ids=pos_sample,
        negative_ids=neg_sample,
        draft_text=draft_text,
        seed=seed,
    )
    registry.save_draft(draft)
    return draft


def accept_draft(
    registry: PromptRegistry,
    draft: RationaleDraft,
    reviewer: str,
    edited_text: str,
) -> PromptSpec:
    """Turn a reviewed draft into the next full_rationale prompt version.

    The edited text becomes the new system text and must itself carry the
    output-format markers. Prior versions are untouched.
    """
    if draft.status != DRAFT_PENDING:
        raise RegistryError(
            f"draft {draft.draft_id} is {draft.status}, not {DRAFT_PENDING}"
        )
    version = registry.next_version(draft.label_id, "full_rationale")
    spec = PromptSpec(
        label_id=draft.label_id,
        variant="full_rationale",
        version=version,
        system_text=edited_text,
    )
    registry.save(spec)
    draft.status = DRAFT_ACCEPTED
    draft.reviewer = reviewer
    registry.save_draft(draft)
    return spec


def reject_draft(
    registry: PromptRegistry, draft: RationaleDraft, reviewer: str
) -> RationaleDraft:
    if draft.status != DRAFT_PENDING:
        raise RegistryError(
            f"draft {draft.draft_id} is {draft.status}, not {DRAFT_PENDING}"
        )
    draft.status = DRAFT_REJECTED
    draft.reviewer = reviewer
    registry.save_draft(draft)
    return draft

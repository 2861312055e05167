"""Confusion partitioning, disagreement-oversampled subsets, balanced splits.

Re-annotation budgets are concentrated where a model and the existing
labels conflict: the FP/FN cells are treated as ambiguity indicators and
drawn at a configurable disagreement:agreement ratio (default 2:1, treated
as approximate). All draws are deterministic under an explicit seed, and
split assignment uses a stable id hash so later corpus additions never
perturb existing membership.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus
from .errors import CorpusError, SamplingError


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ConfusionPartition:
    """Per-label 2x2 cell membership of prediction vs. reference values.

    Instances carrying only one of the two layers for the label are
    excluded from all cells and tallied in ``uncovered``.
    """

    label_id: str
    tp: frozenset[str]
    tn: frozenset[str]
    fp: frozenset[str]
    fn: frozenset[str]
    uncovered: int

    @property
    def disagreement(self) -> frozenset[str]:
        return self.fp | self.fn

    @property
    def agreement(self) -> frozenset[str]:
        return self.tp | self.tn

    def cell_sizes(self) -> dict[str, int]:
        return {"tp": len(self.tp), "tn": len(self.tn), "fp": len(self.fp), "fn": len(self.fn)}


def confusion_partition(
    model_layer: str,
    reference_layer: str,
    label_id: str,
    corpus: Corpus,
) -> ConfusionPartition:
    if not corpus.schema.has_label(label_id):
        raise CorpusError(f"unknown label id: {label_id!r}")
    cells: dict[str, set[str]] = {"tp": set(), "tn": set(), "fp": set(), "fn": set()}
    uncovered = 0
    for iid in corpus.ids():
        pred = corpus.value(iid, label_id, model_layer)
        ref = corpus.value(iid, label_id, reference_layer)
        if pred is None and ref is None:
            continue
        if pred is None or ref is None:
            uncovered += 1
            continue
        if pred == 1 and ref == 1:
            cells["tp"].add(iid)
        elif pred == 1 and ref == 0:
            cells["fp"].add(iid)
        elif pred == 0 and ref == 1:
            cells["fn"].add(iid)
        else:
            cells["tn"].add(iid)
    return ConfusionPartition(
        label_id=label_id,
        tp=frozenset(cells["tp"]),
        tn=frozenset(cells["tn"]),
        fp=frozenset(cells["fp"]),
        fn=frozenset(cells["fn"]),
        uncovered=uncovered,
    )


@dataclass(frozen=True)
class SampleSet:
    label_id: str
    ids: tuple[str, ...]
    cell_counts: dict[str, int]
    budget: int
    ratio: float
    seed: int
    shortfall: bool

    def to_dict(self) -> dict:
        return {
            "label": self.label_id,
            "ids": list(self.ids),
            "cell_counts": dict(self.cell_counts),
            "budget": self.budget,
            "ratio": self.ratio,
            "seed": self.seed,
            "shortfall": self.shortfall,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSet":
        return cls(
            label_id=data["label"],
            ids=tuple(data["ids"]),
            cell_counts=dict(data["cell_counts"]),
            budget=data["budget"],
            ratio=data["ratio"],
            seed=data["seed"],
            shortfall=data["shortfall"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "SampleSet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def disagreement_sample(
    partition: ConfusionPartition,
    budget: int,
    ratio: float = 2.0,
    seed: int = 0,
) -> SampleSet:
    """Draw ``budget`` instance ids, oversampling the disagreement cells.

    The disagreement target is round(budget * ratio / (ratio + 1)), drawn
    from FP and FN proportionally to their pool sizes; the remainder is
    backfilled from TP and TN as evenly as the pools allow. When a target
    cannot be met the draw takes what exists and flags ``shortfall``.
    """
    if budget < 1:
        raise SamplingError("budget must be >= 1")
    if ratio <= 0:
        raise SamplingError("ratio must be > 0")

    fp_pool = sorted(partition.fp)
    fn_pool = sorted(partition.fn)
    tp_pool = sorted(partition.tp)
    tn_pool = sorted(partition.tn)

    d_target = _round_half_up(budget * ratio / (ratio + 1.0))
    d_take = min(d_target, len(fp_pool) + len(fn_pool))
    if d_take > 0:
        fp_take = _round_half_up(d_take * len(fp_pool) / (len(fp_pool) + len(fn_pool)))
        fp_take = min(fp_take, len(fp_pool))
        fn_take = min(d_take - fp_take, len(fn_pool))
        fp_take = min(d_take - fn_take, len(fp_pool))
    else:
        fp_take = fn_take = 0

    agree_target = budget - (fp_take + fn_take)
    tp_take = min(_round_half_up(agree_target / 2.0), len(tp_pool))
    tn_take = min(agree_target - tp_take, len(tn_pool))
    tp_take = min(agree_target - tn_take, len(tp_pool))

    rng = random.Random(seed)
    chosen: list[str] = []
    for pool, take in ((fp_pool, fp_take), (fn_pool, fn_take), (tp_pool, tp_take), (tn_pool, tn_take)):
        chosen.extend(rng.sample(pool, take))

    realized = fp_take + fn_take + tp_take + tn_take
    return SampleSet(
        label_id=partition.label_id,
        ids=tuple(chosen),
        cell_counts={"fp": fp_take, "fn": fn_take, "tp": tp_take, "tn": tn_take},
        budget=budget,
        ratio=ratio,
        seed=seed,
        shortfall=(d_take < d_target) or (realized < budget),
    )


def _stable_hash(seed: int, instance_id: str) -> int:
    digest = hashlib.sha256(f"{seed}|{instance_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def balanced_split(
    corpus: Corpus,
    label_id: str,
    max_neg_per_pos: float = 1.0,
    seed: int = 0,
    layer: str = "original",
) -> tuple[list[str], list[str]]:
    """Label-wise roughly balanced (dev, test) id lists.

    Positives land on a side by the parity of a stable (seed, id) hash, so
    membership is independent of corpus order and unchanged by later
    additions. Each side keeps at most ``max_neg_per_pos`` times its
    positive count in negatives, ranked by the same hash.
    """
    if not corpus.schema.has_label(label_id):
        raise CorpusError(f"unknown label id: {label_id!r}")
    if max_neg_per_pos < 0:
        raise SamplingError("max_neg_per_pos must be >= 0")
    positives = [iid for iid in corpus.ids() if corpus.value(iid, label_id, layer) == 1]
    negatives = [iid for iid in corpus.ids() if corpus.value(iid, label_id, layer) == 0]
    if len(positives) < 2:
        raise SamplingError(
            f"label {label_id!r} has {len(positives)} positives; need at least 2 to split"
        )

    dev_pos = [i for i in positives if _stable_hash(seed, i) & 1 == 0]
    test_pos = [i for i in positives if _stable_hash(seed, i) & 1 == 1]

    def pick_negatives(side_bit: int, cap: int) -> list[str]:
        pool = [i for i in negatives if _stable_hash(seed, i) & 1 == side_bit]
        pool.sort(key=lambda i: (_stable_hash(seed, i), i))
        return pool[:cap]

    dev_neg = pick_negatives(0, _round_half_up(max_neg_per_pos * len(dev_pos)))
    test_neg = pick_negatives(1, _round_half_up(max_neg_per_pos * len(test_pos)))
    return sorted(dev_pos + dev_neg), sorted(test_pos + test_neg)

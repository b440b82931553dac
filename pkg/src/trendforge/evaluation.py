"""Blind expert scoring: shuffled candidates, 0/1/2 scores, normalized aggregates."""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .ingest import Split
from .windowing import Window, rng_from, window_from_json, window_to_json

VALID_SCORES = (0, 1, 2)


class EvaluationError(Exception):
    pass


class MissingDescription(EvaluationError):
    pass


class InvalidScore(EvaluationError):
    pass


class UnknownItem(EvaluationError):
    pass


class AlreadyScored(EvaluationError):
    pass


class IncompleteScores(EvaluationError):
    pass


@dataclass(frozen=True)
class Candidate:
    model_id: str
    text: str


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    split: Split
    window: Window
    candidates: tuple[Candidate, ...]  # canonical order, sorted by model id


@dataclass(frozen=True)
class EvalSet:
    seed: int
    items: tuple[EvalItem, ...]

    def item(self, item_id: str) -> EvalItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise UnknownItem(f"no item {item_id!r}")

    def models(self) -> tuple[str, ...]:
        return tuple(c.model_id for c in self.items[0].candidates) if self.items else ()


def _rater_digest(rater_id: str) -> int:
    return int.from_bytes(hashlib.sha256(rater_id.encode("utf-8")).digest()[:8], "big")


def slot_label(position: int) -> str:
    return chr(ord("A") + position)


def presentation_order(
    eval_set: EvalSet, item_index: int, rater_id: str
) -> tuple[int, ...]:
    """Candidate permutation shown to a rater; fixed by (seed, item, rater)."""
    n = len(eval_set.items[item_index].candidates)
    rng = rng_from(eval_set.seed, item_index, _rater_digest(rater_id))
    return tuple(int(i) for i in rng.permutation(n))


def resolve_slot(eval_set: EvalSet, item_id: str, rater_id: str, slot: str) -> str:
    """Model id sitting behind a slot letter for one rater's view of one item."""
    for index, it in enumerate(eval_set.items):
        if it.item_id == item_id:
            order = presentation_order(eval_set, index, rater_id)
            position = ord(slot.upper()) - ord("A")
            if not 0 <= position < len(order):
                raise UnknownItem(f"item {item_id!r} has no slot {slot!r}")
            return it.candidates[order[position]].model_id
    raise UnknownItem(f"no item {item_id!r}")


def build_eval_set(
    windows: Sequence[Window],
    model_outputs: Mapping[str, Sequence[str]],
    seed: int,
) -> EvalSet:
    """One item per window, candidates drawn from every model's description."""
    if not windows:
        raise ValueError("no windows given")
    if not model_outputs:
        raise MissingDescription("no model outputs given")
    for model_id, texts in model_outputs.items():
        if len(texts) != len(windows):
            raise MissingDescription(
                f"model {model_id!r} has {len(texts)} descriptions for {len(windows)} windows"
            )
        for i, text in enumerate(texts):
            if not str(text).strip():
                raise MissingDescription(f"model {model_id!r} description {i} is empty")
    for w in windows:
        if w.split not in (Split.TEST, Split.HOLDOUT):
            raise ValueError(
                f"evaluation windows must be test or holdout, got {w.split.value!r}"
            )
    items = []
    model_ids = sorted(model_outputs)
    for i, window in enumerate(windows):
        candidates = tuple(
            Candidate(model_id, str(model_outputs[model_id][i])) for model_id in model_ids
        )
        items.append(
            EvalItem(
                item_id=f"item-{i:04d}",
                split=window.split,
                window=window,
                candidates=candidates,
            )
        )
    return EvalSet(seed=seed, items=tuple(items))


def eval_set_to_json(eval_set: EvalSet) -> dict:
    return {
        "seed": eval_set.seed,
        "items": [
            {
                "item_id": it.item_id,
                "split": it.split.value,
                "window": window_to_json(it.window),
                "candidates": [
                    {"model_id": c.model_id, "text": c.text} for c in it.candidates
                ],
            }
            for it in eval_set.items
        ],
    }


def eval_set_from_json(obj: dict) -> EvalSet:
    items = tuple(
        EvalItem(
            item_id=entry["item_id"],
            split=Split(entry["split"]),
            window=window_from_json(entry["window"]),
            candidates=tuple(
                Candidate(c["model_id"], c["text"]) for c in entry["candidates"]
            ),
        )
        for entry in obj["items"]
    )
    return EvalSet(seed=int(obj["seed"]), items=items)


@dataclass(frozen=True)
class ScoreRecord:
    item_id: str
    rater_id: str
    model_id: str
    score: int
    slot: str = ""
    timestamp: float = 0.0


class ScoreStore:
    """Durable score storage: append-only JSONL log plus periodic snapshots.

    Every append is flushed and fsynced before it is acknowledged, so a crash
    between two writes never loses an acknowledged record.  The log keeps
    overwritten entries, giving a built-in audit trail; state is the latest
    record per (item, rater, model).
    """

    def __init__(self, path: str | Path, snapshot_every: int = 100):
        self.path = Path(path)
        self.snapshot_path = self.path.with_suffix(self.path.suffix + ".snapshot")
        self.snapshot_every = snapshot_every
        self._lock = threading.Lock()
        self._state: dict[tuple[str, str, str], ScoreRecord] = {}
        self._appends_since_snapshot = 0
        self._replay()

    def _replay(self) -> None:
        offset = 0
        if self.snapshot_path.exists():
            snap = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            offset = int(snap["log_offset"])
            for entry in snap["records"]:
                record = self._record_from(entry)
                self._state[(record.item_id, record.rater_id, record.model_id)] = record
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                fh.seek(offset)
                for line in fh:
                    if not line.strip():
                        continue
                    record = self._record_from(json.loads(line))
                    self._state[
                        (record.item_id, record.rater_id, record.model_id)
                    ] = record

    @staticmethod
    def _record_from(entry: dict) -> ScoreRecord:
        return ScoreRecord(
            item_id=entry["item_id"],
            rater_id=entry["rater_id"],
            model_id=entry["model_id"],
            score=int(entry["score"]),
            slot=entry.get("slot", ""),
            timestamp=float(entry.get("timestamp", 0.0)),
        )

    def _append(self, record: ScoreRecord, overwrite: bool) -> None:
        entry = {
            "item_id": record.item_id,
            "rater_id": record.rater_id,
            "model_id": record.model_id,
            "score": record.score,
            "slot": record.slot,
            "timestamp": record.timestamp,
            "overwrite": overwrite,
        }
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._appends_since_snapshot += 1

    def _write_snapshot(self) -> None:
        snapshot = {
            "log_offset": self.path.stat().st_size if self.path.exists() else 0,
            "records": [
                {
                    "item_id": r.item_id,
                    "rater_id": r.rater_id,
                    "model_id": r.model_id,
                    "score": r.score,
                    "slot": r.slot,
                    "timestamp": r.timestamp,
                }
                for r in self._state.values()
            ],
        }
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(snapshot), encoding="utf-8")
        tmp.replace(self.snapshot_path)
        self._appends_since_snapshot = 0

    def record(self, record: ScoreRecord, overwrite: bool = False) -> str:
        """Persist a record; returns "recorded", "unchanged", or raises AlreadyScored."""
        if record.score not in VALID_SCORES:
            raise InvalidScore(f"score must be one of {VALID_SCORES}, got {record.score}")
        key = (record.item_id, record.rater_id, record.model_id)
        with self._lock:
            existing = self._state.get(key)
            if existing is not None and existing.score == record.score:
                return "unchanged"
            if existing is not None and not overwrite:
                raise AlreadyScored(
                    f"{key} already scored {existing.score}; overwrite not allowed"
                )
            self._append(record, overwrite=existing is not None)
            self._state[key] = record
            if self._appends_since_snapshot >= self.snapshot_every:
                self._write_snapshot()
            return "recorded"

    def get(self, item_id: str, rater_id: str, model_id: str) -> ScoreRecord | None:
        return self._state.get((item_id, rater_id, model_id))

    def records(self) -> list[ScoreRecord]:
        return list(self._state.values())

    def raters(self) -> tuple[str, ...]:
        return tuple(sorted({r.rater_id for r in self._state.values()}))


def record_score(
    eval_set: EvalSet,
    store: ScoreStore,
    item_id: str,
    rater_id: str,
    slot: str,
    score: int,
    overwrite: bool = False,
) -> str:
    """Resolve the slot to its hidden model and persist the rater's score."""
    if score not in VALID_SCORES:
        raise InvalidScore(f"score must be one of {VALID_SCORES}, got {score}")
    model_id = resolve_slot(eval_set, item_id, rater_id, slot)
    record = ScoreRecord(
        item_id=item_id,
        rater_id=rater_id,
        model_id=model_id,
        score=score,
        slot=slot.upper(),
        timestamp=time.time(),
    )
    return store.record(record, overwrite=overwrite)


def normalized_score(
    records: Iterable[ScoreRecord],
    model_id: str,
    split: Split,
    items: Sequence[EvalItem],
    raters: Sequence[str] | None = None,
) -> float:
    """Sum of scores over every (item-in-split, rater) divided by 2*R*N."""
    split_items = [it.item_id for it in items if it.split == split]
    if not split_items:
        raise IncompleteScores(f"no items in split {split.value!r}")
    by_key = {
        (r.item_id, r.rater_id): r.score
        for r in records
        if r.model_id == model_id and r.item_id in split_items
    }
    rater_ids = sorted(raters) if raters else sorted({k[1] for k in by_key})
    if not rater_ids:
        raise IncompleteScores(f"no scores recorded for model {model_id!r}")
    missing = [
        (item, rater)
        for item in split_items
        for rater in rater_ids
        if (item, rater) not in by_key
    ]
    if missing:
        raise IncompleteScores(
            f"model {model_id!r}, split {split.value!r}: "
            f"{len(missing)} unscored (item, rater) pairs, e.g. {missing[:3]}"
        )
    total = sum(by_key[(item, rater)] for item in split_items for rater in rater_ids)
    return total / (2.0 * len(rater_ids) * len(split_items))


def summary_scores(
    eval_set: EvalSet, store: ScoreStore
) -> dict[str, dict[str, float]]:
    """Normalized score per model per split; raises while coverage is incomplete."""
    records = store.records()
    raters = store.raters()
    if not raters:
        raise IncompleteScores("no scores recorded yet")
    splits = sorted({it.split for it in eval_set.items}, key=lambda s: s.value)
    out: dict[str, dict[str, float]] = {}
    for model_id in eval_set.models():
        out[model_id] = {
            split.value: normalized_score(
                records, model_id, split, eval_set.items, raters
            )
            for split in splits
        }
    return out


def progress(eval_set: EvalSet, store: ScoreStore) -> dict:
    """Per-model and per-rater completion counts (no scores revealed)."""
    records = store.records()
    expected_per_rater = sum(len(it.candidates) for it in eval_set.items)
    by_rater: dict[str, int] = {}
    by_model: dict[str, int] = {m: 0 for m in eval_set.models()}
    for r in records:
        by_rater[r.rater_id] = by_rater.get(r.rater_id, 0) + 1
        if r.model_id in by_model:
            by_model[r.model_id] += 1
    return {
        "items": len(eval_set.items),
        "expected_per_rater": expected_per_rater,
        "scored_by_rater": dict(sorted(by_rater.items())),
        "scored_by_model": dict(sorted(by_model.items())),
    }

"""Concept-log ingestion and time-slot node construction.

A concept log holds one record per wearable-camera image with the labels a
set of recognisers produced for it (scene, activity, detected objects).
Records are bucketed into fixed-width slots of each day; every occupied
slot becomes one node summarised by its modal scene, modal activity and the
objects seen in enough of its images.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Iterator, TextIO

from .errors import EmptyInput, MalformedRecord, MixedUsers, NoNodes

MINUTES_PER_DAY = 1440

NodeKey = tuple[int, int]


@dataclass(frozen=True)
class ConceptRecord:
    user_id: str
    day: date
    minute: int
    scene: str
    activity: str
    objects: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if not 0 <= self.minute < MINUTES_PER_DAY:
            raise ValueError(f"minute {self.minute} outside 00:00-23:59")
        if not self.scene or not self.activity:
            raise ValueError("scene and activity must be non-empty")
        for label, conf in self.objects:
            if not 0.0 <= conf <= 1.0:
                raise ValueError(f"confidence {conf} for {label!r} outside [0, 1]")

    @property
    def time(self) -> str:
        return f"{self.minute // 60:02d}:{self.minute % 60:02d}"

    def to_json(self) -> dict:
        return {
            "user": self.user_id,
            "day": self.day.isoformat(),
            "time": self.time,
            "scene": self.scene,
            "activity": self.activity,
            "objects": [{"label": lab, "conf": conf} for lab, conf in self.objects],
        }


@dataclass(frozen=True)
class TimeSlotNode:
    day_index: int
    slot_index: int
    scene: str
    activity: str
    objects: frozenset[str]
    image_count: int
    # minute-of-day of the first and last image in the slot
    first_minute: int
    last_minute: int

    @property
    def key(self) -> NodeKey:
        return (self.day_index, self.slot_index)

    def to_json(self) -> dict:
        return {
            "day_index": self.day_index,
            "slot_index": self.slot_index,
            "scene": self.scene,
            "activity": self.activity,
            "objects": sorted(self.objects),
            "image_count": self.image_count,
            "first_minute": self.first_minute,
            "last_minute": self.last_minute,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TimeSlotNode":
        return cls(
            day_index=int(d["day_index"]),
            slot_index=int(d["slot_index"]),
            scene=d["scene"],
            activity=d["activity"],
            objects=frozenset(d.get("objects", ())),
            image_count=int(d["image_count"]),
            first_minute=int(d.get("first_minute", 0)),
            last_minute=int(d.get("last_minute", 0)),
        )


@dataclass(frozen=True)
class IngestConfig:
    slot_minutes: int = 30
    min_images_per_slot: int = 1
    object_min_count: int = 10
    object_conf_min: float = 0.5
    frq: float = 0.5

    def __post_init__(self):
        if self.slot_minutes <= 0 or MINUTES_PER_DAY % self.slot_minutes:
            raise ValueError("slot_minutes must divide 1440")
        if self.min_images_per_slot < 1:
            raise ValueError("min_images_per_slot must be >= 1")
        if self.object_min_count < 0 or self.object_conf_min < 0 or self.frq <= 0:
            raise ValueError("thresholds must be non-negative and frq positive")

    @property
    def slots_per_day(self) -> int:
        return MINUTES_PER_DAY // self.slot_minutes


@dataclass(frozen=True)
class NodeGrid:
    """All nodes of one user, keyed by (day_index, slot_index)."""

    user_id: str
    slot_minutes: int
    days: tuple[date, ...]
    nodes: dict[NodeKey, TimeSlotNode] = field(default_factory=dict)

    def __post_init__(self):
        if list(self.days) != sorted(self.days):
            raise ValueError("days must be chronological")
        spd = self.slots_per_day
        for (i, j), node in self.nodes.items():
            if node.key != (i, j):
                raise ValueError(f"node stored under {(i, j)} has key {node.key}")
            if not (0 <= i < len(self.days) and 0 <= j < spd):
                raise ValueError(f"node {(i, j)} outside grid bounds")

    @property
    def slots_per_day(self) -> int:
        return MINUTES_PER_DAY // self.slot_minutes

    @property
    def n_days(self) -> int:
        return len(self.days)

    def keys(self) -> list[NodeKey]:
        """Node keys in row-major (day, slot) order."""
        return sorted(self.nodes)

    def ordered_nodes(self) -> list[TimeSlotNode]:
        return [self.nodes[k] for k in self.keys()]

    def __len__(self) -> int:
        return len(self.nodes)

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "slot_minutes": self.slot_minutes,
            "days": [d.isoformat() for d in self.days],
            "nodes": [n.to_json() for n in self.ordered_nodes()],
        }

    @classmethod
    def from_json(cls, d: dict) -> "NodeGrid":
        nodes = [TimeSlotNode.from_json(x) for x in d["nodes"]]
        return cls(
            user_id=d["user_id"],
            slot_minutes=int(d["slot_minutes"]),
            days=tuple(date.fromisoformat(x) for x in d["days"]),
            nodes={n.key: n for n in nodes},
        )


def _parse_time(value) -> int:
    if not isinstance(value, str):
        raise ValueError("time must be a 'HH:MM' string")
    hh, sep, mm = value.partition(":")
    if not sep or not hh.isdigit() or not mm.isdigit() or len(mm) != 2:
        raise ValueError(f"bad time {value!r}")
    h, m = int(hh), int(mm)
    if h > 23 or m > 59:
        raise ValueError(f"time {value!r} outside 00:00-23:59")
    return h * 60 + m


def parse_record(obj: dict) -> ConceptRecord:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    for name in ("user", "day", "time", "scene", "activity"):
        if name not in obj:
            raise ValueError(f"missing field {name!r}")
    for name in ("user", "scene", "activity"):
        if not isinstance(obj[name], str) or not obj[name]:
            raise ValueError(f"{name} must be a non-empty string")
    try:
        day = date.fromisoformat(obj["day"])
    except (TypeError, ValueError):
        raise ValueError(f"bad day {obj['day']!r}") from None
    objects = []
    for det in obj.get("objects", []):
        if not isinstance(det, dict) or "label" not in det or "conf" not in det:
            raise ValueError("object detections need 'label' and 'conf'")
        conf = det["conf"]
        if isinstance(conf, bool) or not isinstance(conf, (int, float)):
            raise ValueError(f"confidence {conf!r} is not a number")
        objects.append((str(det["label"]), float(conf)))
    return ConceptRecord(
        user_id=obj["user"],
        day=day,
        minute=_parse_time(obj["time"]),
        scene=obj["scene"],
        activity=obj["activity"],
        objects=tuple(objects),
    )


def parse_concept_log(stream: Iterable[str] | TextIO) -> list[ConceptRecord]:
    """Parse a JSON-lines concept log.

    Blank lines are ignored; any other line that is not a valid record
    raises :class:`MalformedRecord` carrying its 1-based line number.
    """
    records = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            records.append(parse_record(json.loads(line)))
        except (ValueError, json.JSONDecodeError) as exc:
            raise MalformedRecord(line_no, str(exc)) from None
    if not records:
        raise EmptyInput("concept log contains no records")
    return records


def write_concept_log(records: Iterable[ConceptRecord], fh: TextIO) -> None:
    for rec in records:
        fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


def _mode(labels: Iterable[str]) -> str:
    counts = Counter(labels)
    best = max(counts.values())
    return min(lab for lab, c in counts.items() if c == best)


def _summarise(recs: list[ConceptRecord], cfg: IngestConfig) -> tuple[str, str, frozenset[str]]:
    scene = _mode(r.scene for r in recs)
    activity = _mode(r.activity for r in recs)
    seen = Counter()
    for r in recs:
        # one vote per image no matter how many instances were detected
        seen.update({lab for lab, conf in r.objects if conf > cfg.object_conf_min})
    objects = frozenset(lab for lab, c in seen.items() if c > cfg.object_min_count)
    return scene, activity, objects


def build_nodes(records: list[ConceptRecord], cfg: IngestConfig | None = None) -> NodeGrid:
    cfg = cfg or IngestConfig()
    if not records:
        raise EmptyInput("no records")
    users = {r.user_id for r in records}
    if len(users) > 1:
        raise MixedUsers(f"records span users {sorted(users)}")

    days = tuple(sorted({r.day for r in records}))
    day_index = {d: i for i, d in enumerate(days)}
    buckets: dict[NodeKey, list[ConceptRecord]] = defaultdict(list)
    for r in records:
        buckets[(day_index[r.day], r.minute // cfg.slot_minutes)].append(r)

    nodes = {}
    for key, recs in buckets.items():
        if len(recs) < cfg.min_images_per_slot:
            continue
        scene, activity, objects = _summarise(recs, cfg)
        minutes = [r.minute for r in recs]
        nodes[key] = TimeSlotNode(
            day_index=key[0],
            slot_index=key[1],
            scene=scene,
            activity=activity,
            objects=objects,
            image_count=len(recs),
            first_minute=min(minutes),
            last_minute=max(minutes),
        )
    if not nodes:
        raise NoNodes(f"no slot holds at least {cfg.min_images_per_slot} images")
    return NodeGrid(
        user_id=next(iter(users)),
        slot_minutes=cfg.slot_minutes,
        days=days,
        nodes=dict(sorted(nodes.items())),
    )


def iter_grid_records(grid: NodeGrid) -> Iterator[dict]:
    """Flat per-node export rows."""
    for node in grid.ordered_nodes():
        yield node.to_json()

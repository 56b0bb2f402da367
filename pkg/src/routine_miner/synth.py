"""Seeded synthetic concept logs with planted recurring patterns.

Randomness comes from numpy's PCG64 bit generator, whose output stream is
fixed by the seed and identical across platforms. Every draw goes through a
single ``numpy.random.Generator`` in a fixed order, so a spec plus its seed
fully determines the emitted log.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import InvalidSpec
from .miner import PatternSet
from .model import ConceptRecord, NodeKey

ROUTINE_SCENES = (
    "office", "kitchen", "supermarket", "gym", "classroom", "restaurant",
    "bedroom", "library", "laboratory", "cafeteria",
)
ROUTINE_ACTIVITIES = (
    "working", "cooking", "shopping", "exercising", "attending_class",
    "eating", "sleeping", "reading", "meeting", "drinking_coffee",
)
ROUTINE_OBJECTS = (
    "laptop", "keyboard", "monitor", "mug", "oven", "sink", "cart", "bottle",
    "dumbbell", "whiteboard", "chair", "fork", "bed", "book", "microscope",
    "cup", "plate", "tv", "phone", "backpack",
)
BACKGROUND_SCENES = (
    "street", "park", "car_interior", "corridor", "bus", "living_room",
    "shop", "parking_lot", "train_station", "bathroom", "garden", "lobby",
)
BACKGROUND_ACTIVITIES = (
    "walking", "driving", "talking", "watching_tv", "cleaning", "mobile",
    "resting", "waiting", "commuting", "hygiene",
)
BACKGROUND_OBJECTS = (
    "person", "car", "bicycle", "traffic_light", "bench", "dog", "handbag",
    "umbrella", "couch", "potted_plant", "clock", "sofa", "bus_sign", "truck",
    "remote", "toothbrush", "vase", "suitcase", "bird", "kite",
)


@dataclass
class PlantedPattern:
    slots: tuple[int, int]  # inclusive slot range
    days: tuple[int, ...]
    scene: str
    activity: str
    objects: tuple[str, ...]
    images_per_slot: int = 15


@dataclass
class SynthSpec:
    n_days: int
    planted: list[PlantedPattern]
    slots_per_day: int = 48
    record_slots: tuple[int, int] = (14, 41)
    background_scenes: tuple[str, ...] = BACKGROUND_SCENES
    background_activities: tuple[str, ...] = BACKGROUND_ACTIVITIES
    background_objects: tuple[str, ...] = BACKGROUND_OBJECTS
    background_objects_per_node: tuple[int, int] = (1, 3)
    background_images_per_slot: int = 15
    distractor_rate: float = 0.3
    noise: float = 0.0
    seed: int = 0
    frq: float = 0.5
    user_id: str = "synthetic"
    start_date: str = "2020-01-06"

    @property
    def slot_minutes(self) -> int:
        return 1440 // self.slots_per_day

    def validate(self) -> None:
        if self.n_days < 1 or self.slots_per_day < 1 or 1440 % self.slots_per_day:
            raise InvalidSpec("n_days must be >= 1 and slots_per_day must divide 1440")
        if not 0.0 <= self.noise <= 1.0:
            raise InvalidSpec(f"noise {self.noise} outside [0, 1]")
        lo, hi = self.record_slots
        if not 0 <= lo <= hi < self.slots_per_day:
            raise InvalidSpec("record_slots outside the day")
        per_slot = int(self.slot_minutes * self.frq)
        if not 1 <= self.background_images_per_slot <= per_slot:
            raise InvalidSpec(f"background_images_per_slot must be in [1, {per_slot}]")
        a, b = self.background_objects_per_node
        if not 0 <= a <= b <= len(self.background_objects):
            raise InvalidSpec("bad background_objects_per_node")
        taken: set[NodeKey] = set()
        for p in self.planted:
            s0, s1 = p.slots
            if not 0 <= s0 <= s1 < self.slots_per_day:
                raise InvalidSpec(f"planted slots {p.slots} outside the grid")
            if not p.days or any(not 0 <= d < self.n_days for d in p.days):
                raise InvalidSpec(f"planted days {p.days} outside [0, {self.n_days})")
            if not 1 <= p.images_per_slot <= per_slot:
                raise InvalidSpec(f"images_per_slot must be in [1, {per_slot}]")
            if p.scene in self.background_scenes or p.activity in self.background_activities:
                raise InvalidSpec("template labels must not occur in the background pools")
            if set(p.objects) & set(self.background_objects):
                raise InvalidSpec("template objects must not occur in the background pool")
            cells = {(d, s) for d in p.days for s in range(s0, s1 + 1)}
            if cells & taken:
                raise InvalidSpec("planted patterns overlap")
            taken |= cells

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        d["planted"] = [
            PlantedPattern(
                slots=tuple(p["slots"]),
                days=tuple(p["days"]),
                scene=p["scene"],
                activity=p["activity"],
                objects=tuple(p["objects"]),
                images_per_slot=p.get("images_per_slot", 15),
            )
            for p in d.get("planted", [])
        ]
        for name in ("record_slots", "background_objects_per_node", "background_scenes",
                     "background_activities", "background_objects"):
            if name in d:
                d[name] = tuple(d[name])
        return cls(**d)


@dataclass
class GroundTruth:
    # node key -> planted pattern id (1-based), or None for background
    labels: dict[NodeKey, int | None] = field(default_factory=dict)

    def pattern_nodes(self) -> dict[int, set[NodeKey]]:
        out: dict[int, set[NodeKey]] = {}
        for k, pid in self.labels.items():
            if pid is not None:
                out.setdefault(pid, set()).add(k)
        return out

    def to_json(self) -> dict:
        return {
            "nodes": [
                {"day_index": i, "slot_index": j, "pattern": pid}
                for (i, j), pid in sorted(self.labels.items())
            ]
        }

    @classmethod
    def from_json(cls, d: dict) -> "GroundTruth":
        return cls({(int(n["day_index"]), int(n["slot_index"])): n["pattern"] for n in d["nodes"]})


def _swap(rng: np.random.Generator, label: str, pool: tuple[str, ...], noise: float) -> str:
    if noise <= 0 or rng.random() >= noise:
        return label
    choices = [x for x in pool if x != label]
    return choices[int(rng.integers(len(choices)))]


def generate(spec: SynthSpec) -> tuple[list[ConceptRecord], GroundTruth]:
    """Emit one image record per sampled frame plus the planted labelling.

    Images inside a slot are spaced ``1/frq`` minutes apart starting at the
    slot boundary. Every image of a node carries the node's labels; noise is
    drawn once per node and per label (scene, activity, each template
    object), so a noisy label is the node's modal label.
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    start = date.fromisoformat(spec.start_date)
    step = 1.0 / spec.frq

    owner: dict[NodeKey, int] = {}
    for pid, p in enumerate(spec.planted, start=1):
        for d in p.days:
            for s in range(p.slots[0], p.slots[1] + 1):
                owner[(d, s)] = pid

    lo, hi = spec.record_slots
    cells = sorted(set(owner) | {(d, s) for d in range(spec.n_days) for s in range(lo, hi + 1)})
    truth = GroundTruth()
    records = []
    for d, s in cells:
        pid = owner.get((d, s))
        if pid is not None:
            p = spec.planted[pid - 1]
            scene = _swap(rng, p.scene, spec.background_scenes, spec.noise)
            activity = _swap(rng, p.activity, spec.background_activities, spec.noise)
            objects = sorted({_swap(rng, o, spec.background_objects, spec.noise) for o in p.objects})
            n_img = p.images_per_slot
        else:
            scene = spec.background_scenes[int(rng.integers(len(spec.background_scenes)))]
            activity = spec.background_activities[int(rng.integers(len(spec.background_activities)))]
            a, b = spec.background_objects_per_node
            k = int(rng.integers(a, b + 1))
            picks = rng.choice(len(spec.background_objects), size=k, replace=False)
            objects = sorted(spec.background_objects[int(x)] for x in picks)
            n_img = spec.background_images_per_slot
        truth.labels[(d, s)] = pid

        day = start + timedelta(days=d)
        for m in range(n_img):
            minute = s * spec.slot_minutes + int(m * step)
            dets = [(o, round(float(rng.uniform(0.6, 1.0)), 3)) for o in objects]
            if rng.random() < spec.distractor_rate:
                o = spec.background_objects[int(rng.integers(len(spec.background_objects)))]
                dets.append((o, round(float(rng.uniform(0.05, 0.45)), 3)))
            records.append(ConceptRecord(spec.user_id, day, minute, scene, activity, tuple(dets)))
    return records, truth


def random_spec(
    seed: int,
    days: tuple[int, int] = (7, 21),
    n_patterns: tuple[int, int] = (2, 4),
    max_noise: float = 0.1,
) -> SynthSpec:
    """A random valid spec; patterns occupy disjoint slot ranges."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n_days = int(rng.integers(days[0], days[1] + 1))
    k = int(rng.integers(n_patterns[0], n_patterns[1] + 1))
    lo, hi = 14, 41

    # lay ranges left to right with at least two free slots between them
    lengths = [int(rng.integers(2, 5)) for _ in range(k)]
    slack = (hi - lo + 1) - sum(lengths) - 2 * (k - 1)
    cuts = np.sort(rng.integers(0, slack + 1, size=k))
    ranges, cursor, prev = [], lo, 0
    for length, c in zip(lengths, cuts):
        cursor += int(c) - prev
        prev = int(c)
        ranges.append((cursor, cursor + length - 1))
        cursor += length + 2

    scenes = rng.permutation(len(ROUTINE_SCENES))[:k]
    acts = rng.permutation(len(ROUTINE_ACTIVITIES))[:k]
    obj_perm = rng.permutation(len(ROUTINE_OBJECTS))
    planted = []
    for p in range(k):
        frac = float(rng.uniform(0.5, 1.0))
        n_on = max(3, int(round(frac * n_days)))
        on = sorted(int(x) for x in rng.choice(n_days, size=min(n_on, n_days), replace=False))
        objs = tuple(sorted(ROUTINE_OBJECTS[int(x)] for x in obj_perm[3 * p: 3 * p + int(rng.integers(2, 4))]))
        planted.append(PlantedPattern(
            slots=ranges[p],
            days=tuple(on),
            scene=ROUTINE_SCENES[int(scenes[p])],
            activity=ROUTINE_ACTIVITIES[int(acts[p])],
            objects=objs,
        ))
    return SynthSpec(
        n_days=n_days,
        planted=planted,
        noise=float(rng.uniform(0.0, max_noise)),
        seed=seed,
    )


@dataclass
class EvalReport:
    per_pattern: dict[int, dict]
    macro_f1: float

    def to_json(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "patterns": [{"planted": pid, **v} for pid, v in sorted(self.per_pattern.items())],
        }


def evaluate(found: PatternSet, truth: GroundTruth) -> EvalReport:
    """Node-level precision/recall/F1 of each planted pattern.

    Planted and found patterns are matched one-to-one, greedily by overlap
    size (ties to the lower planted id, then the lower found id).
    """
    planted = truth.pattern_nodes()
    pairs = []
    for pid, pnodes in planted.items():
        for f in found.patterns:
            ov = len(pnodes & f.nodes)
            if ov:
                pairs.append((-ov, pid, f.id))
    pairs.sort()
    match: dict[int, int] = {}
    used = set()
    for neg, pid, fid in pairs:
        if pid in match or fid in used:
            continue
        match[pid] = fid
        used.add(fid)

    by_id = {f.id: f for f in found.patterns}
    per = {}
    for pid, pnodes in sorted(planted.items()):
        fid = match.get(pid)
        if fid is None:
            per[pid] = {"found": None, "precision": 0.0, "recall": 0.0, "f1": 0.0}
            continue
        ov = len(pnodes & by_id[fid].nodes)
        prec = ov / len(by_id[fid].nodes)
        rec = ov / len(pnodes)
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per[pid] = {"found": fid, "precision": prec, "recall": rec, "f1": f1}
    macro = float(np.mean([v["f1"] for v in per.values()])) if per else 0.0
    return EvalReport(per, macro)


def dump_truth(truth: GroundTruth) -> str:
    return json.dumps(truth.to_json(), indent=2, sort_keys=True) + "\n"

import io
import json

import pytest

from routine_miner.errors import InvalidSpec
from routine_miner.miner import Pattern, PatternSet
from routine_miner.model import build_nodes, write_concept_log
from routine_miner.synth import (
    GroundTruth,
    PlantedPattern,
    SynthSpec,
    evaluate,
    generate,
    random_spec,
)

TEMPLATE = PlantedPattern((16, 19), (0, 2, 4), "office", "working", ("laptop", "mug"))


def spec(**kw):
    base = dict(n_days=5, planted=[TEMPLATE], seed=3)
    base.update(kw)
    return SynthSpec(**base)


def log_text(recs):
    buf = io.StringIO()
    write_concept_log(recs, buf)
    return buf.getvalue()


def test_zero_noise_identity():
    recs, truth = generate(spec())
    g = build_nodes(recs)
    planted = truth.pattern_nodes()[1]
    assert planted == {(d, s) for d in (0, 2, 4) for s in range(16, 20)}
    for k in planted:
        n = g.nodes[k]
        assert (n.scene, n.activity, n.objects) == ("office", "working", frozenset({"laptop", "mug"}))


def test_determinism():
    a = log_text(generate(spec())[0])
    b = log_text(generate(spec())[0])
    assert a == b
    assert a != log_text(generate(spec(seed=4))[0])


def test_full_noise_destroys_templates():
    recs, truth = generate(spec(noise=1.0))
    g = build_nodes(recs)
    for k in truth.pattern_nodes()[1]:
        n = g.nodes[k]
        assert n.scene != "office" and n.activity != "working"
        assert not n.objects & {"laptop", "mug"}


def test_truth_matches_grid():
    recs, truth = generate(random_spec(4))
    g = build_nodes(recs)
    assert set(truth.labels) == set(g.nodes)


def test_timestamps_evenly_spaced():
    recs, _ = generate(spec())
    mins = sorted(r.minute for r in recs if r.day.isoformat() == "2020-01-06" and r.minute // 30 == 16)
    assert mins == list(range(480, 510, 2))


@pytest.mark.parametrize("kw", [
    {"noise": 1.5},
    {"planted": [PlantedPattern((46, 48), (0,), "office", "working", ())]},
    {"planted": [PlantedPattern((16, 17), (9,), "office", "working", ())]},
    {"planted": [TEMPLATE, PlantedPattern((18, 20), (2,), "lab", "testing", ())]},
    {"planted": [PlantedPattern((16, 17), (0,), "street", "working", ())]},
    {"slots_per_day": 7},
])
def test_invalid_spec(kw):
    with pytest.raises(InvalidSpec):
        generate(spec(**kw))


def test_spec_json_round_trip():
    s = random_spec(7)
    assert SynthSpec.from_json(json.loads(json.dumps(s.to_json()))) == s


def test_truth_json_round_trip():
    _, truth = generate(spec())
    assert GroundTruth.from_json(json.loads(json.dumps(truth.to_json()))) == truth


def _found(*groups):
    pats = []
    for pid, nodes in enumerate(groups, start=1):
        nodes = sorted(nodes)
        pats.append(Pattern(pid, frozenset(nodes), (nodes[0], nodes[-1]), 0.0, 0, "s", "a", ()))
    return PatternSet(tuple(pats), frozenset())


class TestEvaluate:
    def truth(self):
        return GroundTruth({(d, s): 1 for d in (0, 1) for s in (3, 4)} | {(0, 9): None})

    def test_perfect(self):
        rep = evaluate(_found(self.truth().pattern_nodes()[1]), self.truth())
        assert rep.macro_f1 == 1.0 and rep.per_pattern[1]["f1"] == 1.0

    def test_empty(self):
        rep = evaluate(PatternSet((), frozenset()), self.truth())
        assert rep.macro_f1 == 0.0 and rep.per_pattern[1]["found"] is None

    def test_split_in_halves(self):
        rep = evaluate(_found({(0, 3), (0, 4)}, {(1, 3), (1, 4)}), self.truth())
        assert rep.per_pattern[1]["recall"] == 0.5
        assert rep.per_pattern[1]["found"] == 1

    def test_one_to_one(self):
        truth = GroundTruth({(0, 0): 1, (1, 0): 1, (0, 5): 2, (1, 5): 2})
        rep = evaluate(_found({(0, 0), (1, 0), (0, 5), (1, 5)}), truth)
        assert rep.per_pattern[1]["found"] == 1 and rep.per_pattern[2]["found"] is None

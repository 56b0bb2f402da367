import io
import json
import random
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from routine_miner.errors import EmptyInput, MalformedRecord, MixedUsers, NoNodes
from routine_miner.model import (
    ConceptRecord,
    IngestConfig,
    NodeGrid,
    build_nodes,
    parse_concept_log,
    write_concept_log,
)


def line(**kw):
    rec = {"user": "u1", "day": "2021-05-03", "time": "09:05", "scene": "office", "activity": "working",
           "objects": [{"label": "person", "conf": 0.9}]}
    rec.update(kw)
    return json.dumps(rec)


def rec(minute, scene="office", activity="working", objects=(("person", 0.9),), day=date(2021, 5, 3), user="u1"):
    return ConceptRecord(user, day, minute, scene, activity, tuple(objects))


class TestParse:
    def test_identity_parse(self):
        (r,) = parse_concept_log([line()])
        assert r.scene == "office" and r.activity == "working"
        assert r.objects == (("person", 0.9),)
        assert r.minute == 9 * 60 + 5 and r.day == date(2021, 5, 3)

    def test_confidence_out_of_range(self):
        with pytest.raises(MalformedRecord) as exc:
            parse_concept_log([line(), line(objects=[{"label": "cup", "conf": 1.3}])])
        assert exc.value.line_no == 2

    def test_empty_file(self):
        with pytest.raises(EmptyInput):
            parse_concept_log(io.StringIO(""))

    @pytest.mark.parametrize("bad", [
        "not json",
        line(time="24:00"),
        line(time="9:5"),
        line(scene=""),
        line(day="2021-13-01"),
        json.dumps({"user": "u1"}),
        line(objects=[{"label": "cup"}]),
        line(objects=[{"label": "cup", "conf": "high"}]),
    ])
    def test_malformed_lines(self, bad):
        with pytest.raises(MalformedRecord):
            parse_concept_log([bad])

    def test_blank_lines_skipped_and_order_kept(self):
        recs = parse_concept_log([line(time="10:00"), "", "  ", line(time="08:00")])
        assert [r.minute for r in recs] == [600, 480]

    def test_round_trip(self):
        recs = [rec(m, objects=(("cup", 0.75),)) for m in (0, 61, 1439)]
        buf = io.StringIO()
        write_concept_log(recs, buf)
        assert parse_concept_log(io.StringIO(buf.getvalue())) == recs

    def test_record_invariants(self):
        with pytest.raises(ValueError):
            rec(1440)
        with pytest.raises(ValueError):
            rec(0, scene="")


class TestBuildNodes:
    def test_direct_rule(self):
        recs = [rec(18 * 30 + k) for k in range(12)]
        g = build_nodes(recs)
        n = g.nodes[(0, 18)]
        assert (n.scene, n.activity, n.objects, n.image_count) == ("office", "working", frozenset({"person"}), 12)

    def test_object_in_exactly_ten_images_excluded(self):
        recs = [rec(k, objects=(("cup", 0.9),) if k < 10 else ()) for k in range(15)]
        assert "cup" not in build_nodes(recs).nodes[(0, 0)].objects
        recs = [rec(k, objects=(("cup", 0.9),) if k < 11 else ()) for k in range(15)]
        assert "cup" in build_nodes(recs).nodes[(0, 0)].objects

    def test_low_confidence_ignored(self):
        recs = [rec(k, objects=(("tv", 0.4),)) for k in range(20)]
        assert build_nodes(recs).nodes[(0, 0)].objects == frozenset()
        # exactly the threshold is not "greater than"
        recs = [rec(k, objects=(("tv", 0.5),)) for k in range(20)]
        assert build_nodes(recs).nodes[(0, 0)].objects == frozenset()

    def test_counts_images_not_detections(self):
        # six images with two detections each: still six images
        recs = [rec(k, objects=(("person", 0.9), ("person", 0.8))) for k in range(6)]
        g = build_nodes(recs, IngestConfig(object_min_count=10))
        assert g.nodes[(0, 0)].objects == frozenset()

    def test_modal_tie_break_lexicographic(self):
        recs = [rec(0, scene="street"), rec(1, scene="kitchen"), rec(2, scene="street"), rec(3, scene="kitchen")]
        assert build_nodes(recs).nodes[(0, 0)].scene == "kitchen"

    def test_min_images_per_slot(self):
        recs = [rec(0), rec(1), rec(40)]
        g = build_nodes(recs, IngestConfig(min_images_per_slot=2))
        assert set(g.nodes) == {(0, 0)}
        with pytest.raises(NoNodes):
            build_nodes([rec(0)], IngestConfig(min_images_per_slot=2))

    def test_mixed_users(self):
        with pytest.raises(MixedUsers):
            build_nodes([rec(0), rec(1, user="u2")])

    def test_days_indexed_by_appearance_not_gaps(self):
        recs = [rec(0, day=date(2021, 5, 10)), rec(0, day=date(2021, 5, 3))]
        g = build_nodes(recs)
        assert g.days == (date(2021, 5, 3), date(2021, 5, 10))
        assert set(g.nodes) == {(0, 0), (1, 0)}

    def test_first_last_minute(self):
        g = build_nodes([rec(65), rec(61), rec(88)])
        n = g.nodes[(0, 2)]
        assert (n.first_minute, n.last_minute) == (61, 88)

    def test_grid_json_round_trip(self):
        g = build_nodes([rec(65), rec(600, scene="x", objects=()), rec(30, day=date(2021, 5, 4))])
        assert NodeGrid.from_json(json.loads(json.dumps(g.to_json()))) == g

    def test_slot_minutes_must_divide_day(self):
        with pytest.raises(ValueError):
            IngestConfig(slot_minutes=7)


labels = st.sampled_from(["a", "b", "c"])
records = st.lists(
    st.tuples(st.integers(0, 1439), labels, labels, st.lists(st.tuples(labels, st.floats(0, 1)), max_size=3)),
    min_size=1, max_size=60,
)


@settings(max_examples=60, deadline=None)
@given(records, st.sampled_from([15, 30, 60]))
def test_slot_assignment_and_permutation_invariance(raw, slot_minutes):
    recs = [rec(m, s, a, tuple(o)) for m, s, a, o in raw]
    cfg = IngestConfig(slot_minutes=slot_minutes, object_min_count=1)
    g = build_nodes(recs, cfg)
    for n in g.nodes.values():
        assert n.first_minute // slot_minutes == n.slot_index
        assert n.last_minute // slot_minutes == n.slot_index
    shuffled = list(recs)
    random.Random(len(recs)).shuffle(shuffled)
    assert build_nodes(shuffled, cfg) == g


@settings(max_examples=60, deadline=None)
@given(records, st.integers(0, 5))
def test_raising_object_min_count_never_adds_objects(raw, low):
    recs = [rec(m, s, a, tuple(o)) for m, s, a, o in raw]
    g_lo = build_nodes(recs, IngestConfig(object_min_count=low))
    g_hi = build_nodes(recs, IngestConfig(object_min_count=low + 1))
    for k, n in g_hi.nodes.items():
        assert n.objects <= g_lo.nodes[k].objects

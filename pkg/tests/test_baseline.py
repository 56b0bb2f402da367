import json

import numpy as np
import pytest
from conftest import grid_of, node
from oracles import dbscan_ref

from routine_miner.baseline import NOISE, BaselineConfig, Vocab, baseline_patterns, dbscan, featurize
from routine_miner.errors import UnknownLabel
from routine_miner.model import build_nodes
from routine_miner.synth import PlantedPattern, SynthSpec, generate


def canonical(labels):
    """Partition of point indices, ignoring cluster ids."""
    groups = {}
    for i, c in enumerate(labels):
        if c != NOISE:
            groups.setdefault(c, set()).add(i)
    return {frozenset(g) for g in groups.values()}, {i for i, c in enumerate(labels) if c == NOISE}


class TestFeaturize:
    def vocab(self):
        return Vocab(("home", "office"), ("eating", "working"), ("cup", "laptop", "mug"))

    def test_time_component(self):
        x = featurize(node(0, 24, "office", "working", {"cup"}), self.vocab())
        assert x[-1] == 0.5
        assert len(x) == self.vocab().width

    def test_only_slot_differs(self):
        a = featurize(node(0, 3, "office", "working", {"cup", "mug"}), self.vocab())
        b = featurize(node(2, 30, "office", "working", {"cup", "mug"}), self.vocab())
        assert np.flatnonzero(a != b).tolist() == [len(a) - 1]

    def test_empty_objects(self):
        x = featurize(node(0, 0, "home", "eating"), self.vocab())
        assert np.all(x[4:7] == 0)

    def test_object_block_sums_to_one(self):
        x = featurize(node(0, 0, "home", "eating", {"cup", "mug", "laptop"}), self.vocab())
        assert x[4:7].sum() == pytest.approx(1.0)

    def test_time_weight(self):
        x = featurize(node(0, 12, "home", "eating"), self.vocab(), time_weight=4.0)
        assert x[-1] == 1.0

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            featurize(node(0, 0, "gym", "eating"), self.vocab())

    def test_constant_length_across_grid(self):
        g = build_nodes(generate(SynthSpec(n_days=3, planted=[], seed=1))[0])
        v = Vocab.from_grid(g)
        assert {len(featurize(n, v)) for n in g.nodes.values()} == {v.width}


class TestDbscan:
    def test_two_blobs(self):
        rng = np.random.default_rng(0)
        pts = np.vstack([rng.normal(0, 0.01, (5, 2)), rng.normal(10, 0.01, (5, 2))])
        lab = dbscan(pts, 0.5, 3)
        assert len(set(lab.tolist())) == 2 and NOISE not in lab
        core, parts, noise = dbscan_ref(pts, 0.5, 3)
        assert canonical(lab) == (parts, noise)

    def test_identical_points(self):
        assert dbscan(np.zeros((6, 3)), 0.1, 3).tolist() == [0] * 6

    def test_isolated_point(self):
        lab = dbscan([[0, 0], [0, 0.1], [5, 5]], 0.5, 2)
        assert lab[2] == NOISE and lab[0] == lab[1] != NOISE

    def test_empty(self):
        with pytest.raises(ValueError):
            dbscan(np.zeros((0, 2)), 0.5, 3)

    def test_against_reference_core_and_noise(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            pts = rng.uniform(0, 4, size=(int(rng.integers(5, 40)), 2))
            eps, m = float(rng.uniform(0.2, 1.0)), int(rng.integers(1, 5))
            lab = dbscan(pts, eps, m)
            core, parts, noise = dbscan_ref(pts, eps, m)
            groups, got_noise = canonical(lab)
            assert got_noise == noise
            # clusters agree on core points; border points may go either way
            assert {frozenset(g & core) for g in groups} == parts

    def test_against_sklearn_core_partition(self):
        cl = pytest.importorskip("sklearn.cluster")
        rng = np.random.default_rng(2)
        pts = rng.uniform(0, 3, size=(60, 2))
        model = cl.DBSCAN(eps=0.4, min_samples=3).fit(pts)
        lab = dbscan(pts, 0.4, 3)
        assert set(np.flatnonzero(lab == NOISE)) == set(np.flatnonzero(model.labels_ == -1))
        core = model.core_sample_indices_
        assert canonical(lab[core])[0] == canonical(model.labels_[core])[0]

    def test_order_independent(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(0, 3, size=(50, 2))
        lab = dbscan(pts, 0.45, 3)
        perm = rng.permutation(50)
        lab_p = dbscan(pts[perm], 0.45, 3)
        back = np.empty_like(lab_p)
        back[perm] = lab_p
        assert back.tolist() == lab.tolist()

    def test_monotone_coarsening(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            pts = rng.uniform(0, 3, size=(40, 2))
            prev = None
            for eps in np.linspace(0.05, 1.5, 15):
                lab = dbscan(pts, eps, 3)
                count = len(set(lab[lab != NOISE].tolist())) + int((lab == NOISE).sum())
                assert prev is None or count <= prev
                prev = count


class TestBaselinePatterns:
    def test_identical_grid(self):
        g = grid_of([node(i, 5) for i in range(4)])
        ps = baseline_patterns(g)
        assert len(ps.patterns) == 1 and ps.patterns[0].nodes == frozenset(g.nodes)
        assert ps.method == "dbscan-baseline"

    def test_json_flag(self):
        g = grid_of([node(i, 5) for i in range(4)])
        d = json.loads(baseline_patterns(g).dumps())
        assert d["method"] == "dbscan-baseline"
        assert d["params"] == {"eps": 0.5, "min_pts": 3, "time_weight": 1.0}

    def test_three_planted_groups(self):
        spec = SynthSpec(
            n_days=5,
            planted=[
                PlantedPattern((16, 17), (0, 1, 2, 3), "office", "working", ("laptop",)),
                PlantedPattern((24, 25), (0, 2, 4), "canteen", "eating", ("tray", "fork")),
                PlantedPattern((34, 35), (1, 2, 3, 4), "gym", "running", ("dumbbell",)),
            ],
            seed=9,
        )
        recs, truth = generate(spec)
        g = build_nodes(recs)
        ps = baseline_patterns(g, BaselineConfig(eps=0.1, min_pts=3))
        assert len(ps.patterns) == 3
        assert {p.nodes for p in ps.patterns} == {frozenset(v) for v in truth.pattern_nodes().values()}

    def test_config_validation(self):
        for kw in ({"eps": 0}, {"min_pts": 0}, {"time_weight": -1}):
            with pytest.raises(ValueError):
                BaselineConfig(**kw)

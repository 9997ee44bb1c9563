"""Cross-user POI graph, modularity, Louvain, and the threshold sweep."""
import itertools
import random

import pytest

from oracles import best_partition_q, naive_cosine, naive_modularity, random_fingerprint
from wifipoi.community import (
    PoiGraph,
    build_graph,
    louvain,
    modularity,
    threshold_sweep,
    write_communities_csv,
    write_edge_list,
    write_sweep_csv,
)
from wifipoi.errors import EmptyGraph, PartitionMismatch, TooFewNodes
from wifipoi.model import Fingerprint


def make(mapping):
    return Fingerprint(rssi=dict(mapping), counts={m: 1 for m in mapping})


def clique(nodes, weight=1.0):
    return [(a, b, weight) for a, b in itertools.combinations(nodes, 2)]


def random_graph(rnd, n):
    nodes = tuple(range(n))
    edges = []
    while not edges:
        edges = [
            (a, b, round(rnd.uniform(0.2, 1.0), 3))
            for a, b in itertools.combinations(nodes, 2)
            if rnd.random() < 0.5
        ]
    return PoiGraph(nodes=nodes, edges=tuple(edges))


class TestBuildGraph:
    def test_too_few_nodes(self):
        with pytest.raises(TooFewNodes):
            build_graph([make({"aa:00:00:00:00:01": -50.0})], 0.5)

    def test_threshold_one_on_distinct_fingerprints_is_edgeless(self):
        rnd = random.Random(14)
        fps = [make(random_fingerprint(rnd)) for _ in range(6)]
        graph = build_graph(fps, 1.0)
        assert graph.edges == ()
        assert len(graph.nodes) == 6

    def test_edges_equal_brute_force_filter(self):
        rnd = random.Random(15)
        dicts = [random_fingerprint(rnd) for _ in range(5)]
        graph = build_graph([make(d) for d in dicts], 0.3)
        want = {
            (i, j)
            for i, j in itertools.combinations(range(5), 2)
            if naive_cosine(dicts[i], dicts[j]) >= 0.3 - 1e-12
        }
        assert {(a, b) for a, b, _ in graph.edges} == want
        for a, b, w in graph.edges:
            assert w >= 0.3
            assert abs(w - naive_cosine(dicts[a], dicts[b])) <= 1e-12

    def test_named_nodes(self):
        rnd = random.Random(16)
        fps = [make(random_fingerprint(rnd)) for _ in range(3)]
        names = [("u1", 1), ("u1", 2), ("u2", 1)]
        graph = build_graph(fps, 0.0, names=names)
        assert graph.nodes == tuple(names)
        with pytest.raises(TooFewNodes):
            build_graph(fps, 0.5, names=names[:2])


class TestModularity:
    def test_single_community_is_zero(self):
        g = PoiGraph(nodes=(0, 1, 2), edges=((0, 1, 1.0), (1, 2, 0.5)))
        assert modularity(g, {0: 0, 1: 0, 2: 0}) == pytest.approx(0.0, abs=1e-15)

    def test_two_disjoint_cliques_split_scores_half(self):
        g = PoiGraph(nodes=tuple(range(6)), edges=tuple(clique([0, 1, 2]) + clique([3, 4, 5])))
        q = modularity(g, {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1})
        assert q == pytest.approx(0.5, abs=1e-15)

    def test_matches_pairwise_oracle_on_planted_graph(self):
        g = PoiGraph(
            nodes=tuple(range(6)),
            edges=tuple(clique([0, 1, 2], 0.9) + clique([3, 4, 5], 0.8) + [(2, 3, 0.25)]),
        )
        rnd = random.Random(17)
        for _ in range(40):
            comm = {n: rnd.randint(0, 2) for n in g.nodes}
            assert modularity(g, comm) == pytest.approx(
                naive_modularity(g.edges, comm), abs=1e-12
            )

    def test_partition_must_cover_all_nodes(self):
        g = PoiGraph(nodes=(0, 1), edges=((0, 1, 1.0),))
        with pytest.raises(PartitionMismatch):
            modularity(g, {0: 0})


class TestLouvain:
    def test_two_cliques_with_weak_bridge(self):
        g = PoiGraph(
            nodes=tuple(range(8)),
            edges=tuple(clique(range(4)) + clique(range(4, 8)) + [(0, 4, 0.1)]),
        )
        p = louvain(g)
        left = {p.communities[n] for n in range(4)}
        right = {p.communities[n] for n in range(4, 8)}
        assert len(left) == 1 and len(right) == 1 and left != right
        # by hand: m = 12.1, each clique has sigma_in = 12, sigma_tot = 12.1
        m = 12.1
        q_hand = 2 * (12 / (2 * m) - (12.1 / (2 * m)) ** 2)
        assert p.q == pytest.approx(q_hand, abs=1e-12)

    def test_single_edge_joins_both_endpoints(self):
        g = PoiGraph(nodes=(0, 1), edges=((0, 1, 0.7),))
        p = louvain(g)
        assert p.communities[0] == p.communities[1]
        assert p.q == pytest.approx(0.0, abs=1e-15)

    def test_edgeless_graph_rejected(self):
        with pytest.raises(EmptyGraph):
            louvain(PoiGraph(nodes=(0, 1), edges=()))

    def test_every_accepted_move_strictly_improves(self):
        rnd = random.Random(18)
        for _ in range(10):
            p = louvain(random_graph(rnd, rnd.randint(4, 10)))
            assert all(gain > 0 for gain in p.move_gains)

    def test_gains_sum_to_total_improvement(self):
        rnd = random.Random(19)
        for _ in range(10):
            g = random_graph(rnd, rnd.randint(4, 10))
            p = louvain(g)
            q_singleton = modularity(g, {n: i for i, n in enumerate(g.nodes)})
            assert sum(p.move_gains) == pytest.approx(p.q - q_singleton, abs=1e-9)

    def test_near_optimal_on_small_graphs(self):
        rnd = random.Random(21)
        for _ in range(10):
            g = random_graph(rnd, rnd.randint(3, 8))
            p = louvain(g)
            best = best_partition_q(list(g.nodes), list(g.edges))
            assert p.q >= 0.95 * best - 1e-12
            assert p.q <= best + 1e-12

    def test_final_q_not_below_singleton_baseline(self):
        rnd = random.Random(22)
        for _ in range(10):
            g = random_graph(rnd, rnd.randint(3, 9))
            p = louvain(g)
            assert p.q >= modularity(g, {n: i for i, n in enumerate(g.nodes)}) - 1e-12

    def test_partition_invariant_under_weight_rescaling(self):
        rnd = random.Random(23)
        for scale in (0.25, 3.0, 17.0):
            g = random_graph(rnd, 8)
            scaled = PoiGraph(
                nodes=g.nodes,
                edges=tuple((a, b, w * scale) for a, b, w in g.edges),
            )
            assert louvain(g).communities == louvain(scaled).communities

    def test_deterministic_and_seed_accepted(self):
        rnd = random.Random(24)
        g = random_graph(rnd, 9)
        assert louvain(g) == louvain(g)
        seeded = louvain(g, seed=5)
        assert set(seeded.communities) == set(g.nodes)
        assert seeded.q == pytest.approx(modularity(g, seeded.communities), abs=1e-12)


def interior_peak_fingerprints():
    """Three planted groups whose best split shifts with the threshold.

    Groups A and B are internally identical and share one bridge MAC
    (cross score ~0.22); group C coheres only at ~0.45. The sweep over
    [0.2, 0.3, 0.4, 0.5] then rises once bridges drop out and falls
    once C shatters, peaking strictly inside the list.
    """
    fps = []
    for group, own in (("a", -50.0), ("b", -50.0)):
        base = {
            f"{group}0:00:00:00:00:01": own,
            f"{group}1:00:00:00:00:02": -55.0,
            "ab:00:00:00:00:09": -40.0,
        }
        fps.extend(make(base) for _ in range(4))
    for i in range(4):
        fps.append(make({"c0:00:00:00:00:03": -50.0, f"c{i + 1}:00:00:00:00:04": -55.0}))
    return fps


class TestThresholdSweep:
    def test_four_thresholds_four_rows(self):
        table = threshold_sweep(interior_peak_fingerprints(), [0.2, 0.3, 0.4, 0.5])
        assert [t for t, _ in table] == [0.2, 0.3, 0.4, 0.5]

    def test_propagates_empty_graph_from_louvain(self):
        rnd = random.Random(25)
        fps = [make(random_fingerprint(rnd)) for _ in range(8)]
        with pytest.raises(EmptyGraph):
            threshold_sweep(fps, [0.99])

    def test_empty_threshold_list(self):
        rnd = random.Random(26)
        fps = [make(random_fingerprint(rnd)) for _ in range(4)]
        assert threshold_sweep(fps, []) == []

    def test_q_peaks_at_interior_threshold(self):
        table = threshold_sweep(interior_peak_fingerprints(), [0.2, 0.3, 0.4, 0.5])
        qs = [q for _, q in table]
        best = max(range(4), key=lambda k: qs[k])
        assert best not in (0, 3)
        assert qs[best] > qs[0] and qs[best] > qs[3]


class TestReportWriters:
    def test_communities_csv(self, tmp_path):
        fps = interior_peak_fingerprints()
        names = [(f"u{k % 3}", k) for k in range(len(fps))]
        graph = build_graph(fps, 0.4, names=names)
        partition = louvain(graph)
        out = tmp_path / "communities.csv"
        write_communities_csv(partition, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "community_id,poi_id,user"
        assert len(lines) == 1 + len(fps)
        # rows grouped by community, each row's node round-trips
        seen = [tuple(line.split(",")) for line in lines[1:]]
        assert {(u, int(p)) for _, p, u in seen} == set(names)

    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        write_sweep_csv([(0.2, 0.5), (0.3, 0.625)], out)
        assert out.read_text().splitlines() == [
            "threshold,modularity",
            "0.2,0.500000",
            "0.3,0.625000",
        ]

    def test_edge_list(self, tmp_path):
        g = PoiGraph(nodes=(("u1", 1), ("u2", 3)), edges=((("u1", 1), ("u2", 3), 0.8),))
        out = tmp_path / "edges.txt"
        write_edge_list(g, out)
        assert out.read_text().splitlines() == ["u1:1 u2:3 0.8"]

import itertools
import json
import random

import pytest

from huci.federation import (
    Federation,
    FederationConfig,
    FederationError,
    LocalNodeClient,
    NodeEntry,
)
from huci.ingest import DatasetHeader
from huci.model import TickingClock
from huci.node import Node

from conftest import make_citation, make_resource, pid


def build_node(node_id, resources, citations, license="cc0"):
    n = Node(node_id, clock=TickingClock())
    n.ingest_dataset(DatasetHeader(node_id, license), resources, citations)
    return n


def three_node_fixture():
    """Three providers with six cross-node duplicate resources."""
    a = build_node("alpha", [
        make_resource("alpha:1", title="Storia di Venezia", year=1992,
                      identifiers=[pid("doi", "10.1/venezia")]),
        make_resource("alpha:2", title="Annales", year=1950,
                      identifiers=[pid("isbn", "978-1")]),
        make_resource("alpha:3", title="Unique Alpha", year=2000),
    ], [make_citation("alpha:3", "alpha:1"),
        make_citation("alpha:3", "alpha:2")])
    b = build_node("beta", [
        make_resource("beta:1", title="Storia di Venezia", year=1992,
                      identifiers=[pid("doi", "10.1/venezia")]),
        make_resource("beta:2", title="Annales", year=1950,
                      identifiers=[pid("isbn", "978-1")]),
        make_resource("beta:3", title="Griechische Geschichte", year=1893,
                      identifiers=[pid("handle", "11/ggh")]),
    ], [make_citation("beta:1", "beta:2")])
    c = build_node("gamma", [
        make_resource("gamma:1", title="Storia di Venezia", year=1992,
                      identifiers=[pid("doi", "10.1/venezia")]),
        make_resource("gamma:2", title="Griechische Geschichte", year=1893,
                      identifiers=[pid("handle", "11/ggh")]),
        make_resource("gamma:3", title="Unique Gamma", year=1970,
                      identifiers=[pid("doi", "10.1/ug")]),
    ], [make_citation("gamma:3", "gamma:1")])
    return {"alpha": a, "beta": b, "gamma": c}


def federation_over(nodes, **kwargs):
    config = FederationConfig(
        nodes=[NodeEntry(node_id=k) for k in nodes])
    clients = {k: LocalNodeClient(n) for k, n in nodes.items()}
    return Federation(config, clients=clients, clock=TickingClock(), **kwargs)


class TestRegisterNode:
    def test_open_license_enabled(self):
        node = build_node("a", [], [], license="cc0")
        fed = Federation(FederationConfig(), clock=TickingClock())
        entry = fed.register_node("a", client=LocalNodeClient(node))
        assert entry.enabled

    def test_unspecified_license_disabled(self):
        node = build_node("a", [], [], license="unspecified")
        fed = Federation(FederationConfig(), clock=TickingClock())
        entry = fed.register_node("a", client=LocalNodeClient(node))
        assert not entry.enabled
        assert "license" in fed.node_status["a"]["error"]

    def test_duplicate_id(self):
        node = build_node("a", [], [])
        fed = Federation(FederationConfig(), clock=TickingClock())
        fed.register_node("a", client=LocalNodeClient(node))
        with pytest.raises(FederationError, match="duplicate-node-id"):
            fed.register_node("a", client=LocalNodeClient(node))


class TestHarvestFull:
    def test_counts_match_meta(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        out = fed.harvest_full("alpha")
        meta = nodes["alpha"].serve_meta()
        assert out["resources"] == meta["resource_count"]
        assert out["citations"] == meta["citation_count"]
        assert fed.cursors["alpha"] == meta["last_seq"]

    def test_malformed_dump_rejected(self):
        class BadClient:
            def meta(self):
                return {"last_seq": 1, "license": "cc0"}

            def dump_json(self):
                return {"nonsense": True}

        fed = Federation(FederationConfig(nodes=[NodeEntry("bad")]),
                         clients={"bad": BadClient()}, clock=TickingClock())
        with pytest.raises(FederationError, match="dump-invalid"):
            fed.harvest_full("bad")
        assert "bad" not in fed.cursors

    def test_seq_race_retry(self):
        """Node advances twice mid-dump, then stays stable: attempt 3 wins."""
        node = build_node("a", [make_resource("a:1", title="X")], [])

        class RacingClient(LocalNodeClient):
            def __init__(self, node):
                super().__init__(node)
                self.dumps = 0

            def dump_json(self):
                self.dumps += 1
                out = super().dump_json()
                if self.dumps <= 2:  # advance seq after the dump was taken
                    self.node.ingest_dataset(
                        DatasetHeader("a", "cc0"),
                        [make_resource(f"a:extra{self.dumps}", title="Y")], [])
                return out

        client = RacingClient(node)
        fed = Federation(FederationConfig(nodes=[NodeEntry("a")]),
                         clients={"a": client}, clock=TickingClock())
        out = fed.harvest_full("a")
        assert client.dumps == 3
        assert out["resources"] == 3  # stable dump includes both extras

    def test_seq_race_exhausted(self):
        node = build_node("a", [make_resource("a:1", title="X")], [])

        class AlwaysRacing(LocalNodeClient):
            def dump_json(self):
                out = super().dump_json()
                self.node.ingest_dataset(
                    DatasetHeader("a", "cc0"),
                    [make_resource(f"a:r{self.node.serve_meta()['last_seq']}",
                                   title="Y")], [])
                return out

        fed = Federation(FederationConfig(nodes=[NodeEntry("a")]),
                         clients={"a": AlwaysRacing(node)},
                         clock=TickingClock())
        with pytest.raises(FederationError, match="seq-race-exhausted"):
            fed.harvest_full("a")


class TestHarvestIncremental:
    def test_no_new_changes(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        fed.harvest_full("alpha")
        cursor = fed.cursors["alpha"]
        out = fed.harvest_incremental("alpha")
        assert out["changes_applied"] == 0
        assert fed.cursors["alpha"] == cursor

    def test_changes_across_pages(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        fed.harvest_full("alpha")
        cursor = fed.cursors["alpha"]
        nodes["alpha"].ingest_dataset(DatasetHeader("alpha", "cc0"), [
            make_resource("alpha:4", title="New One"),
            make_resource("alpha:5", title="New Two"),
            make_resource("alpha:6", title="New Three"),
        ], [])
        out = fed.harvest_incremental("alpha", page_size=2)
        assert out["changes_applied"] == 3
        assert fed.cursors["alpha"] == cursor + 3
        assert "alpha:6" in fed.source_resources["alpha"]

    def test_node_dying_between_pages_keeps_cursor(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        fed.harvest_full("alpha")
        cursor = fed.cursors["alpha"]
        nodes["alpha"].ingest_dataset(DatasetHeader("alpha", "cc0"), [
            make_resource("alpha:4", title="New One"),
            make_resource("alpha:5", title="New Two"),
            make_resource("alpha:6", title="New Three"),
        ], [])
        real = fed.clients["alpha"]
        calls = {"n": 0}

        class Dying:
            def changes(self, since, page_size=1000):
                calls["n"] += 1
                if calls["n"] >= 2:
                    raise FederationError("node-unreachable")
                return real.changes(since, page_size)

        fed.clients["alpha"] = Dying()
        before = dict(fed.source_resources["alpha"])
        with pytest.raises(FederationError, match="node-unreachable"):
            fed.harvest_incremental("alpha", page_size=2)
        assert fed.cursors["alpha"] == cursor
        assert fed.source_resources["alpha"] == before

    def test_incremental_equals_full(self):
        """Full harvest of final state == earlier full + incremental to head."""
        for seed in range(20):
            rng = random.Random(seed)
            nodes1 = three_node_fixture()
            nodes2 = three_node_fixture()
            fed_inc = federation_over(nodes1)
            fed_full = federation_over(nodes2)
            fed_inc.harvest_full("alpha")
            # random extra activity on both copies, identically
            for step in range(rng.randint(1, 6)):
                rs = [make_resource(f"alpha:x{step}",
                                    title=f"Extra {step}", year=1990 + step)]
                for nodes in (nodes1, nodes2):
                    nodes["alpha"].ingest_dataset(
                        DatasetHeader("alpha", "cc0"), rs, [])
                if rng.random() < 0.5:
                    for nodes in (nodes1, nodes2):
                        cids = sorted(nodes["alpha"].citations)
                        if cids:
                            nodes["alpha"].set_access_policy(
                                [cids[0]], rng.choice(["open", "restricted"]))
            fed_inc.harvest_incremental("alpha", page_size=2)
            fed_full.harvest_full("alpha")
            fed_inc.merge()
            fed_full.merge()
            assert fed_inc.export("nt") == fed_full.export("nt")
            assert fed_inc.export("json") == fed_full.export("json")


class TestMerge:
    def test_cross_node_duplicate_merges_with_provenance(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        for k in nodes:
            fed.harvest_full(k)
        index = fed.merge()
        venezia = index.resolve("doi:10.1/venezia")
        assert venezia in index.resources
        chain = index.provenance[venezia]
        assert chain[-1].activity == "merge"
        assert {"alpha", "beta", "gamma"} <= set(chain[-1].source.split(","))

    def test_merge_idempotent(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        for k in nodes:
            fed.harvest_full(k)
        fed.merge()
        first = fed.export("nt")
        fed.merge()
        assert fed.export("nt") == first

    def test_double_harvest_idempotent(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        for k in nodes:
            fed.harvest_full(k)
        fed.merge()
        first = fed.export("nt")
        for k in nodes:
            fed.harvest_full(k)
        fed.merge()
        assert fed.export("nt") == first

    def test_all_harvest_orders_identical(self):
        exports = set()
        for order in itertools.permutations(["alpha", "beta", "gamma"]):
            nodes = three_node_fixture()
            fed = federation_over(nodes)
            for k in order:
                fed.harvest_full(k)
            fed.merge()
            exports.add(fed.export("nt"))
        assert len(exports) == 1

    def test_dangling_citation_quarantined_then_resolved(self):
        a = build_node("a", [make_resource("a:1", title="X")], [])
        # hand-plant a citation to a resource the node never serves
        fed = federation_over({"a": a})
        fed.harvest_full("a")
        fed.source_citations["a"]["a:1->b:9"] = make_citation("a:1", "b:9")
        index = fed.merge()
        assert len(index.pending_citations) == 1
        assert fed.federation_status()["index"]["pending_citations"] == 1
        # the missing endpoint arrives later
        b = build_node("b", [make_resource("b:9", title="Y")], [])
        fed.config.nodes.append(NodeEntry("b"))
        fed.clients["b"] = LocalNodeClient(b)
        fed.harvest_full("b")
        index = fed.merge()
        assert index.pending_citations == []
        assert any(c.cited_id == "b:9" for c in index.citations.values())

    def test_provenance_reaches_every_contributing_node(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        for k in nodes:
            fed.harvest_full(k)
        index = fed.merge()
        contributing = {}
        for node_id, pool in fed.source_resources.items():
            for rid in pool:
                canonical = index.resolve(rid)
                contributing.setdefault(canonical, set()).add(node_id)
        for canonical, nodes_expected in contributing.items():
            chain = index.provenance[canonical]
            sources = set(chain[-1].source.split(","))
            assert nodes_expected <= sources


class TestStatusAndPersistence:
    def test_fresh_cursors_zero(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        st = fed.federation_status()
        assert all(n["cursor"] == 0 for n in st["nodes"])

    def test_cursor_after_harvest(self):
        nodes = three_node_fixture()
        fed = federation_over(nodes)
        fed.harvest_full("alpha")
        st = fed.federation_status()
        by_id = {n["node_id"]: n for n in st["nodes"]}
        assert by_id["alpha"]["cursor"] == nodes["alpha"].serve_meta()["last_seq"]

    def test_persistence_round_trip(self, tmp_path):
        nodes = three_node_fixture()
        fed = federation_over(nodes, data_dir=tmp_path)
        for k in nodes:
            fed.harvest_full(k)
        fed.merge()
        first = fed.export("nt")
        fed2 = Federation(FederationConfig(), clock=TickingClock(),
                          data_dir=tmp_path)
        fed2.merge()
        assert fed2.export("nt") == first
        assert fed2.cursors == fed.cursors

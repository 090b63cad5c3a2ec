import io

import numpy as np
import pytest

from dynppr.errors import ParseError, ValidationError
from dynppr.gallery import random_batch, random_digraph
from dynppr.graph import (Graph, IdMap, InsertedNode, PerturbationBatch,
                          apply_batch, changed_rows, load_edge_list,
                          load_graph_cache, out_neighbors_effective,
                          save_graph_cache, write_edge_list)


# -- Graph construction -------------------------------------------------------


def test_from_edges_dedups_and_sorts():
    g = Graph.from_edges([2, 0, 0, 2, 0], [1, 5, 3, 1, 3])
    assert g.node_count == 6
    assert g.edge_count == 3  # (0,3) and (2,1) duplicated
    assert np.array_equal(g.neighbors(0), [3, 5])
    assert np.array_equal(g.neighbors(2), [1])
    assert g.out_degree.tolist() == [2, 0, 1, 0, 0, 0]


def test_from_edges_num_nodes_padding():
    g = Graph.from_edges([0], [1], num_nodes=10)
    assert g.node_count == 10
    assert g.edge_count == 1
    with pytest.raises(ValidationError):
        Graph.from_edges([0, 4], [1, 2], num_nodes=3)


def test_from_edges_rejects_negative_ids():
    with pytest.raises(ValidationError):
        Graph.from_edges([0, -1], [1, 2])


def test_from_edges_empty():
    g = Graph.from_edges([], [])
    assert g.node_count == 0
    assert g.edge_count == 0


def test_csr_arrays_are_readonly(diamond):
    with pytest.raises(ValueError):
        diamond.indices[0] = 3
    with pytest.raises(ValueError):
        diamond.indptr[0] = 1


def test_edge_keys_match_sources(diamond):
    src = diamond.edge_sources()
    keys = diamond.edge_keys()
    n = diamond.node_count
    assert np.array_equal(keys, src.astype(np.int64) * n + diamond.indices)
    assert np.all(np.diff(keys) > 0)  # strictly sorted, no duplicates


def test_transition_matrix_row_stochastic(diamond):
    P = diamond.transition_matrix()
    sums = np.asarray(P.sum(axis=1)).ravel()
    assert np.allclose(sums, 1.0)
    assert P[0, 1] == 0.5 and P[0, 2] == 0.5
    # cached object comes back identical
    assert diamond.transition_matrix() is P


def test_transition_matrix_dangling_rows_zero(chain2):
    P = chain2.transition_matrix()
    assert np.asarray(P.sum(axis=1)).ravel().tolist() == [1.0, 0.0]


def test_reverse_flips_every_edge():
    g = random_digraph(60, 4.0, seed=3)
    rev = g.reverse()
    fwd = set(zip(g.edge_sources().tolist(), g.indices.tolist()))
    bwd = set(zip(rev.indices.tolist(), rev.edge_sources().tolist()))
    assert fwd == bwd
    assert g.reverse() is rev


def test_out_neighbors_effective_dangling(chain2):
    w, tgt = out_neighbors_effective(chain2, 0, source=0)
    assert w == 0.5 or w == 1.0  # degree-1 row
    assert list(tgt) == [1]
    w, tgt = out_neighbors_effective(chain2, 1, source=0)
    assert w == 1.0
    assert list(tgt) == [0]  # dangling row collapses onto the source


# -- edge-list ingestion -------------------------------------------------------


EDGES_TXT = """\
# a comment line
0 1
0\t2

3 1   # trailing comment
0 1
"""


def test_load_edge_list_from_stream():
    g = load_edge_list(io.StringIO(EDGES_TXT))
    assert g.node_count == 4
    assert g.edge_count == 3  # duplicate 0->1 collapsed
    assert g.ingest.raw_edge_count == 4
    assert g.ingest.edge_count == 3


def test_load_edge_list_path_matches_stream(tmp_path):
    p = tmp_path / "edges.txt"
    p.write_text(EDGES_TXT)
    a = load_edge_list(p)
    b = load_edge_list(io.StringIO(EDGES_TXT))
    assert a.equal_structure(b)
    assert a.ingest.raw_edge_count == b.ingest.raw_edge_count


def test_load_edge_list_empty_inputs(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("")
    assert load_edge_list(p).node_count == 0
    p.write_text("# only comments\n\n# more\n")
    assert load_edge_list(p).node_count == 0
    assert load_edge_list(io.StringIO("")).node_count == 0


def test_load_edge_list_symmetrize_and_compact():
    g = load_edge_list(io.StringIO("5 9\n9 5\n5 7\n"), compact=True)
    assert g.node_count == 3  # {5, 7, 9} remapped densely
    gs = load_edge_list(io.StringIO("5 9\n5 7\n"), symmetrize=True, compact=True)
    assert gs.edge_count == 4


def test_load_edge_list_num_nodes():
    g = load_edge_list(io.StringIO("0 1\n"), num_nodes=7)
    assert g.node_count == 7


@pytest.mark.parametrize("text,lineno", [
    ("0 1\nx 2\n", 2),
    ("0 1\n2\n", 2),
    ("0 1 2\n", 1),
    ("0 1\n\n3 -4\n", 3),
    ("0 99999999999999999999\n", 1),
])
def test_load_edge_list_parse_errors(tmp_path, text, lineno):
    with pytest.raises(ParseError) as ei:
        load_edge_list(io.StringIO(text))
    assert f"line {lineno}" in str(ei.value)
    # the chunked path parser reports the same line number
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(ParseError) as ei:
        load_edge_list(p)
    assert f"line {lineno}" in str(ei.value)


def test_write_edge_list_round_trip(tmp_path):
    g = random_digraph(40, 3.0, seed=11)
    p = tmp_path / "out.txt"
    write_edge_list(p, g, comment="regression fixture")
    back = load_edge_list(p, num_nodes=g.node_count)
    assert back.equal_structure(g)
    head = p.read_text().splitlines()[:2]
    assert head[0] == "# regression fixture"
    assert head[1] == f"# nodes {g.node_count} edges {g.edge_count}"


def test_graph_cache_round_trip(tmp_path):
    g = random_digraph(50, 4.0, seed=5)
    p = tmp_path / "g.npz"
    save_graph_cache(p, g)
    assert load_graph_cache(p).equal_structure(g)


def test_graph_cache_rejects_foreign_npz(tmp_path):
    p = tmp_path / "other.npz"
    np.savez(p, stuff=np.arange(3))
    with pytest.raises(ValidationError):
        load_graph_cache(p)


# -- id maps -------------------------------------------------------------------


def test_idmap_identity_and_queries():
    m = IdMap.identity(5)
    assert m.is_identity
    assert m.num_deleted == 0 and m.num_inserted == 0
    assert np.array_equal(m.map_old([3, 1]), [3, 1])


def test_idmap_survivors_deleted_inserted():
    # old {0,1,2,3}: delete 1, insert one new node
    m = IdMap(np.array([0, -1, 1, 2]), np.array([0, 2, 3, -1]))
    assert m.survivors_old.tolist() == [0, 2, 3]
    assert m.deleted_old.tolist() == [1]
    assert m.inserted_new.tolist() == [3]
    with pytest.raises(ValidationError):
        m.map_old([1])


def test_idmap_validation():
    with pytest.raises(ValidationError):  # survivors out of order
        IdMap(np.array([1, 0]), np.array([1, 0]))
    with pytest.raises(ValidationError):  # inconsistent round trip
        IdMap(np.array([0, 1]), np.array([1, 0]))
    with pytest.raises(ValidationError):  # insertions below a survivor
        IdMap(np.array([1]), np.array([-1, 0]))


def test_idmap_compose():
    a = IdMap(np.array([0, -1, 1]), np.array([0, 2, -1]))   # del 1, ins one
    b = IdMap(np.array([-1, 0, 1]), np.array([1, 2]))        # del new 0
    c = a.compose(b)
    assert c.old_to_new.tolist() == [-1, -1, 0]
    assert c.new_to_old.tolist() == [2, -1]
    with pytest.raises(ValidationError):
        a.compose(IdMap.identity(99))


# -- perturbation batches ------------------------------------------------------


def test_batch_canonicalization():
    b = PerturbationBatch(
        deleted_nodes=[4, 2, 4],
        inserted_edges=[(1, 2), (0, 1), (1, 2)],
        deleted_edges=[(3, 0)],
    )
    assert b.deleted_nodes.tolist() == [2, 4]
    assert b.inserted_edges.tolist() == [[0, 1], [1, 2]]
    assert not b.is_link_only
    assert PerturbationBatch(inserted_edges=[(0, 1)]).is_link_only


def test_batch_text_round_trip():
    node = InsertedNode(7, out_edges=[2, 0, 2], in_edges=[5])
    b = PerturbationBatch(
        inserted_nodes=(node,),
        deleted_nodes=[3],
        inserted_edges=[(0, 5)],
        deleted_edges=[(5, 0), (2, 2)],
    )
    back = PerturbationBatch.from_text(b.to_text())
    assert back.to_text() == b.to_text()
    assert back.inserted_nodes[0].out_edges.tolist() == [0, 2]
    assert "+1/-1 nodes" in b.summary()


def test_batch_file_round_trip(tmp_path):
    b = PerturbationBatch(inserted_edges=[(0, 1), (2, 3)])
    p = tmp_path / "batch.txt"
    b.write(p)
    assert PerturbationBatch.read(p).to_text() == b.to_text()


def test_batch_from_text_errors():
    with pytest.raises(ParseError):
        PerturbationBatch.from_text("[nonsense]\n")
    with pytest.raises(ParseError):
        PerturbationBatch.from_text("0 1\n")  # content before a section
    with pytest.raises(ParseError):
        PerturbationBatch.from_text("[insert_edges]\n0 x\n")


# -- apply_batch ---------------------------------------------------------------


def test_apply_batch_hand_worked(diamond):
    # delete node 1; add node 4 with 4->0 and 2->4; flip 0->2 off, 3->2 on
    batch = PerturbationBatch(
        inserted_nodes=(InsertedNode(4, out_edges=[0], in_edges=[2]),),
        deleted_nodes=[1],
        inserted_edges=[(3, 2)],
        deleted_edges=[(0, 2)],
    )
    new, idm = apply_batch(diamond, batch)
    assert idm.old_to_new.tolist() == [0, -1, 1, 2]
    assert idm.new_to_old.tolist() == [0, 2, 3, -1]
    # surviving old edges: 2->3, 3->0 (0->1, 1->3 die with node 1; 0->2 deleted)
    expect = {(1, 2), (2, 0), (2, 1), (3, 0), (1, 3)}
    got = set(zip(new.edge_sources().tolist(), new.indices.tolist()))
    assert got == expect


def test_apply_batch_zero_batch_is_identity(diamond):
    new, idm = apply_batch(diamond, PerturbationBatch())
    assert new.equal_structure(diamond)
    assert idm.is_identity


def test_apply_batch_validation(diamond):
    with pytest.raises(ValidationError):  # deleting a missing edge
        apply_batch(diamond, PerturbationBatch(deleted_edges=[(0, 3)]))
    with pytest.raises(ValidationError):  # duplicate insertion
        apply_batch(diamond, PerturbationBatch(inserted_edges=[(0, 1)]))
    with pytest.raises(ValidationError):  # endpoint out of range
        apply_batch(diamond, PerturbationBatch(inserted_edges=[(0, 9)]))
    with pytest.raises(ValidationError):  # touches a departing node
        apply_batch(diamond, PerturbationBatch(
            deleted_nodes=[1], inserted_edges=[(1, 2)]))
    with pytest.raises(ValidationError):  # wrong pre-id
        apply_batch(diamond, PerturbationBatch(
            inserted_nodes=(InsertedNode(9),)))
    with pytest.raises(ValidationError):  # node id out of range
        apply_batch(diamond, PerturbationBatch(deleted_nodes=[40]))


def _edge_set(g):
    return set(zip(g.edge_sources().tolist(), g.indices.tolist()))


def test_apply_batch_structural_oracle():
    """Random batches against a python set reconstruction of the new graph."""
    rng = np.random.default_rng(42)
    for _ in range(25):
        g = random_digraph(int(rng.integers(20, 120)), 4.0, seed=rng)
        batch = random_batch(g, rng,
                             n_insert=int(rng.integers(0, 4)),
                             n_delete=int(rng.integers(0, 4)),
                             n_edge_ins=int(rng.integers(0, 6)),
                             n_edge_del=int(rng.integers(0, 6)))
        new, idm = apply_batch(g, batch)
        o2n = idm.old_to_new
        expect = set()
        dead = set(batch.deleted_nodes.tolist())
        for u, v in _edge_set(g):
            if u in dead or v in dead:
                continue
            expect.add((int(o2n[u]), int(o2n[v])))
        for u, v in batch.deleted_edges.tolist():
            expect.discard((int(o2n[u]), int(o2n[v])))
        for u, v in batch.inserted_edges.tolist():
            expect.add((int(o2n[u]), int(o2n[v])))

        def slot(x):
            # old survivor id or batch-local pre-id -> new id
            if x < g.node_count:
                return int(o2n[x])
            return idm.n_new - idm.num_inserted + (x - g.node_count)

        for node in batch.inserted_nodes:
            j = slot(node.pre_id)
            for t in node.out_edges.tolist():
                expect.add((j, slot(t)))
            for s in node.in_edges.tolist():
                expect.add((slot(s), j))
        assert _edge_set(new) == expect
        assert new.node_count == idm.n_new


# -- changed_rows ---------------------------------------------------------------


def _changed_rows_brute(old, new, idm, source_old):
    """Survivors whose effective out-row differs under the id map.

    A row is represented as {new_id: weight}; a row still referencing a
    departed node has no representation in the new web and counts as
    changed.  Dangling rows collapse onto the source, which silently
    equates the two corner states {source} <-> dangling.
    """
    o2n = idm.old_to_new
    s_new = int(o2n[source_old])
    out = []
    for u in idm.survivors_old.tolist():
        d = int(old.out_degree[u])
        if d == 0:
            rep_old = {s_new: 1.0}
        else:
            rep_old = {}
            for t in old.neighbors(u).tolist():
                t2 = int(o2n[t])
                if t2 < 0:
                    rep_old = None
                    break
                rep_old[t2] = 1.0 / d
        j = int(o2n[u])
        dn = int(new.out_degree[j])
        rep_new = ({s_new: 1.0} if dn == 0 else
                   {int(t): 1.0 / dn for t in new.neighbors(j).tolist()})
        if rep_old != rep_new:
            out.append(u)
    return out


def test_changed_rows_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(40):
        g = random_digraph(int(rng.integers(10, 80)), 3.0, seed=rng)
        batch = random_batch(g, rng,
                             n_insert=int(rng.integers(0, 3)),
                             n_delete=int(rng.integers(0, 4)),
                             n_edge_ins=int(rng.integers(0, 5)),
                             n_edge_del=int(rng.integers(0, 5)))
        new, idm = apply_batch(g, batch)
        surv = idm.survivors_old
        s_old = int(surv[rng.integers(surv.size)])
        got = changed_rows(g, new, idm, s_old).tolist()
        want = _changed_rows_brute(g, new, idm, s_old)
        assert got == want


def test_changed_rows_dangling_corner_cases():
    """The two row states that LOOK different but act identically.

    A row that was exactly {source} and becomes dangling (or vice versa)
    keeps the same effective row e_source, so it must NOT be reported.
    """
    # old: 1 -> source only; new: 1 dangling
    old = Graph.from_edges([0, 1], [1, 0], num_nodes=3)
    batch = PerturbationBatch(deleted_edges=[(1, 0)])
    new, idm = apply_batch(old, batch)
    assert changed_rows(old, new, idm, source_old=0).tolist() == []
    # and the reverse: dangling row gains exactly the edge to the source
    old2 = Graph.from_edges([0], [1], num_nodes=3)
    batch2 = PerturbationBatch(inserted_edges=[(1, 0)])
    new2, idm2 = apply_batch(old2, batch2)
    assert changed_rows(old2, new2, idm2, source_old=0).tolist() == []
    # but against a different source the same flip IS a change
    assert changed_rows(old, new, idm, source_old=2).tolist() == [1]
    assert changed_rows(old2, new2, idm2, source_old=2).tolist() == [1]


def test_changed_rows_reports_weight_only_changes(diamond):
    # 0 -> {1,2} loses 2: same leading target, halved weight
    batch = PerturbationBatch(deleted_edges=[(0, 2)])
    new, idm = apply_batch(diamond, batch)
    assert 0 in changed_rows(diamond, new, idm, source_old=3).tolist()

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracnet.augtree import (AmbiguousAdjacency, InsufficientPrecision, Unsupported, boundary_words, build, graph_distances,
                             kappa_distance_check, kappa_select)
from fracnet.catalog import CATALOG_IDS, get_fractal, point_of_symbol
from fracnet.ifs import BoundaryPoint, IfsSpec, InvalidInput, Similitude, Stream
from oracles import touching_cells


@pytest.mark.parametrize("fid,levels", [("sg3", 3), ("sg2", 3), ("cantor3", 4), ("pentagasket", 2),
                                        ("cantor_x_interval", 2), ("sgN:4", 2)])
def test_catalog_adjacency_matches_point_clouds(fid, levels):
    fr = get_fractal(fid)
    for k in range(1, levels + 1):
        got = {tuple(p) for p in fr.exact_adjacency(k).tolist()}
        assert got == touching_cells(fr.spec, k)


@pytest.mark.parametrize("fid,n", [("sg3", 4), ("cantor3", 5), ("cantor_x_interval", 3), ("pentagasket", 3)])
def test_geometric_mode_matches_catalog(fid, n):
    a = build(fid, n, mode="exact-catalog")
    b = build(fid, n, mode="geometric")
    assert np.array_equal(a.horizontal, b.horizontal)


def test_level_sizes_and_parents():
    t = build("sg3", 4)
    assert [t.offsets[k + 1] - t.offsets[k] for k in range(5)] == [1, 3, 9, 27, 81]
    for v in range(1, t.n_vertices):
        assert t.word(int(t.parent[v])) == t.word(v)[:-1]
    assert t.size(2) == 13


def test_degree_bounded_in_n():
    assert build("sg3", 4).degree_bound == build("sg3", 6).degree_bound <= 7
    assert build("cantor3", 6).degree_bound == 3


def test_horizontal_edges_stay_in_level():
    t = build("pentagasket", 3)
    h = t.horizontal
    assert np.all(t.level[h[:, 0]] == t.level[h[:, 1]])
    assert np.all(h[:, 0] < h[:, 1])


@given(st.lists(st.integers(1, 3), max_size=5))
def test_vertex_id_word_round_trip(word):
    t = build("sg3", 5)
    assert t.word(t.vertex_id(word)) == tuple(word)


def test_vertex_id_rejects_unknown_words():
    t = build("sg3", 2)
    with pytest.raises(KeyError):
        t.vertex_id((1, 2, 3))
    with pytest.raises(KeyError):
        t.vertex_id((4,))


def test_unequal_ratio_tree():
    # [0, 1] tiled by [0, 0.6] and [0.6, 1]
    spec = IfsSpec((Similitude(0.6, np.eye(1), [0.0]), Similitude(0.4, np.eye(1), [0.6])))
    # 1111 and 112 are 0.0864 apart against a 0.08 threshold: too close for depth-4 clouds
    with pytest.raises(AmbiguousAdjacency):
        build(spec, 3)
    t = build(spec, 3, depth=8)
    assert t.mode == "geometric"
    for v in t.level_ids(3):
        assert t.ratio[v] <= 0.4 ** 3 * (1 + 1e-9)
        assert t.word(int(v)) == t.word(t.vertex_id(t.word(int(v))))
    # J_1 = {11, 12, 2}: consecutive tiles touch, 11 and 2 are 0.24 > gamma r apart
    assert [t.word(int(v)) for v in t.level_ids(1)] == [(1, 1), (1, 2), (2,)]
    assert sorted(map(tuple, (t.edges(1)[1] - t.offsets[1]).tolist())) == [(0, 1), (1, 2)]
    with pytest.raises(InsufficientPrecision):
        t.level_prefix((1,), 3)


def test_modes_and_inputs():
    spec = IfsSpec((Similitude(0.5, np.eye(1), [0.0]), Similitude(0.5, np.eye(1), [0.5])))
    with pytest.raises(Unsupported):
        build(spec, 2, mode="exact-catalog")
    with pytest.raises(InvalidInput):
        build("sg3", 2, mode="fast")
    with pytest.raises(InvalidInput):
        build("sg3", -1)
    assert "sg3" in CATALOG_IDS


def test_kappa_rays_follow_symbols():
    t = build("sg3", 4)
    sel = kappa_select(t, [point_of_symbol(2)])
    assert [t.word(i) for i in sel.ids[0]] == [(2,) * k for k in range(5)]


def test_kappa_tie_rules_stay_adjacent():
    t = build("sg3", 5)
    mid = BoundaryPoint("m12", (Stream((1,), (2,)),))
    lo = kappa_select(t, [mid], "lexicographic-min")
    hi = kappa_select(t, [mid], "lexicographic-max")
    assert lo.streams[0] != hi.streams[0]
    assert max(kappa_distance_check(t, lo, hi)) <= 1


def test_boundary_words_and_distances():
    names = [n for n, _ in boundary_words("sg3")]
    assert names == ["1", "2", "3"]
    t = build("sg3", 3)
    d = graph_distances(t, [0])
    assert d[0, t.vertex_id((1, 1, 1))] == 3


def test_graph_dump_shape():
    doc = build("cantor3", 2).to_json()
    assert doc["levels"] == [1, 2, 4]
    assert len(doc["vertical"]) == 6
    assert doc["horizontal"] == []
    assert doc["words"]["0"] == "ϑ"

import json
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracnet.augtree import build
from fracnet.ifs import InvalidInput
from fracnet.network import Network, energy, from_augtree
from oracles import random_network


@pytest.mark.parametrize("fid,base", [("sg3", 3), ("cantor3", 2), ("pentagasket", 5), ("cantor_x_interval", 6)])
def test_level_conductances(fid, base):
    lam = 0.15
    t = build(fid, 3)
    net = from_augtree(t, lam)
    adj = net.adjacency()
    for v in range(1, t.n_vertices):
        k = int(t.level[v])
        assert adj[v][int(t.parent[v])] == pytest.approx(t.ratio[v] ** t.spec.alpha * lam ** -k, rel=1e-12)
    for a, b in t.horizontal:
        k = int(t.level[a])
        assert adj[a][b] == pytest.approx((base * lam) ** -k, rel=1e-12)


def test_rational_weights_match_float():
    t = build("sg3", 3)
    ex = from_augtree(t, Fraction(1, 5), exact=True)
    fl = from_augtree(t, 0.2)
    assert ex.exact and not fl.exact
    assert np.allclose([float(c) for c in ex.c], fl.c, rtol=1e-14)
    assert ex.c[0] == Fraction(5, 3)
    with pytest.raises(InvalidInput):
        from_augtree(t, 0.2, exact=True)


def test_lambda_and_level_validation():
    t = build("sg3", 2)
    for lam in (0, 1, 1.5):
        with pytest.raises(InvalidInput):
            from_augtree(t, lam)
    with pytest.raises(InvalidInput):
        from_augtree(t, 0.2, level=3)
    assert from_augtree(t, 0.2, level=1).n_vertices == 4


def test_edge_validation():
    with pytest.raises(InvalidInput):
        Network.from_edges(2, [(0, 0, 1.0)])
    with pytest.raises(InvalidInput):
        Network.from_edges(2, [(0, 1, -1.0)])
    with pytest.raises(InvalidInput):
        Network.from_edges(2, [(0, 2, 1.0)])


def test_parallel_edges_merge():
    net = Network.from_edges(2, [(0, 1, Fraction(1, 2)), (1, 0, Fraction(1, 3))])
    assert net.n_edges == 1 and net.c[0] == Fraction(5, 6)


@given(st.integers(0, 10 ** 6), st.floats(-5, 5), st.floats(0.1, 4))
def test_energy_invariances(seed, shift, scale):
    rng = random.Random(seed)
    net = random_network(rng, 3, 25, exact=False)
    f = np.array([rng.uniform(-1, 1) for _ in range(net.n_vertices)])
    e = energy(net, f)
    assert e >= 0
    assert energy(net, f + shift) == pytest.approx(e, rel=1e-9, abs=1e-12)
    assert energy(net, scale * f) == pytest.approx(scale ** 2 * e, rel=1e-9, abs=1e-12)
    assert energy(net.scaled(scale), f) == pytest.approx(scale * e, rel=1e-9, abs=1e-12)


def test_energy_exact():
    net = Network.from_edges(3, [(0, 1, Fraction(2)), (1, 2, Fraction(1, 3))])
    assert energy(net, [Fraction(1), Fraction(1, 2), Fraction(0)]) == Fraction(1, 2) + Fraction(1, 12)


def test_edits():
    net = Network.from_edges(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])
    assert net.without_edge(2, 0).n_edges == 2
    with pytest.raises(InvalidInput):
        net.without_edge(0, 1).without_edge(0, 1)
    s = net.shorted(0, 1)
    assert s.adjacency()[0] == {2: 5.0}
    assert s.adjacency()[1] == {}
    assert list(net.components()) == [0, 0, 0]


@pytest.mark.parametrize("exact", [True, False])
def test_json_round_trip(exact):
    net = random_network(random.Random(3), 4, 12, exact=exact)
    back = Network.from_json(json.dumps(net.to_json()))
    assert back.exact == exact
    assert back.edge_list() == net.edge_list()

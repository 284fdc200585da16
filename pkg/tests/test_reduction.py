import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracnet.augtree import build, kappa_select
from fracnet.catalog import point_of_symbol
from fracnet.critical import level_resistance_series
from fracnet.ifs import InvalidInput
from fracnet.network import Network, from_augtree
from fracnet.reduction import (INF, PENTA_LEVEL1, cantor_resistance, closed_form_R, delta_to_y,
                               fixed_point_exists, fixed_point_problem, fixed_point_threshold, parallel,
                               pentagasket_cone_completion, pentagasket_envelope, pentagasket_rho,
                               pentagasket_step_bound, rayleigh_bounds, series, sg_envelope, y_to_delta)
from fracnet.solver import effective_resistance, schur_trace
from oracles import random_network

pos_fracs = st.fractions(min_value=Fraction(1, 100), max_value=100).filter(lambda x: x > 0)

THRESHOLDS = {"sg3": 0.2, "pentagasket": (math.sqrt(161) - 9) / 40, "cantor_x_interval": 1 / 9}


def test_series_parallel():
    assert series(1, 2, 3) == 6
    assert parallel(2, 2) == 1
    assert parallel(Fraction(1, 2), Fraction(1, 3)) == Fraction(1, 5)
    assert parallel(3, INF) == 3
    assert parallel(INF, INF) == INF
    with pytest.raises(InvalidInput):
        parallel(0, 1)
    with pytest.raises(InvalidInput):
        series(-1, 1)


def test_delta_y_known_values():
    assert delta_to_y(Fraction(1), Fraction(2), Fraction(3)) == (Fraction(1, 2), Fraction(1, 3), Fraction(1))
    assert delta_to_y(3, 3, 3) == (1, 1, 1)
    with pytest.raises(InvalidInput):
        delta_to_y(0, 1, 1)


@given(pos_fracs, pos_fracs, pos_fracs)
def test_delta_y_round_trip(a, b, c):
    assert y_to_delta(*delta_to_y(a, b, c)) == (a, b, c)
    assert delta_to_y(*y_to_delta(a, b, c)) == (a, b, c)


@given(pos_fracs, pos_fracs, pos_fracs)
def test_delta_y_matches_network_trace(rxy, ryz, rzx):
    # star with centre 3, traced onto {0, 1, 2}, gives back the triangle
    Rx, Ry, Rz = delta_to_y(rxy, ryz, rzx)
    star = Network.from_edges(4, [(0, 3, 1 / Rx), (1, 3, 1 / Ry), (2, 3, 1 / Rz)])
    tri = {(a, b): c for a, b, c in schur_trace(star, [0, 1, 2]).edge_list()}
    assert (1 / tri[(0, 1)], 1 / tri[(1, 2)], 1 / tri[(0, 2)]) == (rxy, ryz, rzx)


@pytest.mark.parametrize("fid", sorted(THRESHOLDS))
def test_fixed_point_thresholds(fid):
    assert fixed_point_threshold(fid) == pytest.approx(THRESHOLDS[fid], abs=1e-6)
    assert fixed_point_problem(fid).exact_threshold == pytest.approx(THRESHOLDS[fid], abs=1e-15)


@pytest.mark.parametrize("fid", sorted(THRESHOLDS))
def test_existence_flips_once(fid):
    lam0 = THRESHOLDS[fid]
    coarse = list(np.arange(0.01, 0.9, 0.01))
    fine = list(lam0 + np.arange(-50, 51) * 1e-4)
    grid = sorted(x for x in coarse + fine if abs(x - lam0) > 2e-5)
    flags = [fixed_point_exists(fid, float(x)).exists for x in grid]
    flips = sum(a != b for a, b in zip(flags, flags[1:]))
    assert flips == 1 and not flags[0] and flags[-1]


def test_fixed_point_is_fixed():
    res = fixed_point_exists("sg3", 0.3)
    mu = res.mu[0]
    prob = fixed_point_problem("sg3")
    assert res.exists and 0 < mu < 1
    assert prob(0.3, mu) == pytest.approx(mu, abs=1e-8)
    with pytest.raises(InvalidInput):
        fixed_point_problem("cantor3")


def test_pentagasket_rho_and_cone():
    assert pentagasket_rho(Fraction(1)) == (Fraction(3, 11), Fraction(9, 22))


def cone_network(mu):
    """x1 = 0 joined to the pentagon x11..x15 = 1..5 (unit edges, 1/mu on the pentagon)."""
    edges = [(0, k, 1) for k in range(1, 6)]
    edges += [(k, k % 5 + 1, 1 / mu) for k in range(1, 6)]
    return Network.from_edges(6, edges)


@given(pos_fracs)
def test_cone_completion_matches_trace(mu):
    traced = schur_trace(cone_network(mu), [0, 1, 3, 4])
    got = {(a, b): c for a, b, c in traced.edge_list()}
    assert got == pentagasket_cone_completion(mu)


def test_cantor_closed_form():
    assert cantor_resistance(Fraction(1, 4), 3) == Fraction(7, 4)
    assert cantor_resistance(0.25) == pytest.approx(2.0)
    with pytest.raises(InvalidInput):
        cantor_resistance(0.6)
    doc = closed_form_R("cantor3", 0.25, 5)
    assert doc["limit"] == pytest.approx(2.0) and doc["R_n"] == pytest.approx(2 * (1 - 0.5 ** 5))


def test_sg_envelope_dominates_solver():
    lam = 0.15
    vals = level_resistance_series("sg3", lam, 1, 2, 6).values
    env = sg_envelope(lam, 6)
    assert env[0] == pytest.approx(vals[0], rel=1e-12)
    assert all(v <= e + 1e-12 for v, e in zip(vals, env))


def test_pentagasket_level1_values_exact():
    t = build("pentagasket", 1)
    lam = Fraction(1, 10)
    net = from_augtree(t, lam, exact=True)
    sel = kappa_select(t, [point_of_symbol(1), point_of_symbol(2), point_of_symbol(3)])
    A1 = effective_resistance(net, [sel.ids[0][1]], [sel.ids[2][1]]).resistance
    B1 = effective_resistance(net, [sel.ids[0][1]], [sel.ids[1][1]]).resistance
    assert (A1, B1) == (PENTA_LEVEL1[0] * 5 * lam, PENTA_LEVEL1[1] * 5 * lam)


@pytest.mark.parametrize("lam", [0.05, 0.1])
def test_pentagasket_cutting_step(lam):
    A = level_resistance_series("pentagasket", lam, 1, 3, 5).values
    B = level_resistance_series("pentagasket", lam, 1, 2, 5).values
    for n in range(2, 6):
        a, b = pentagasket_step_bound(lam, A[n - 2], B[n - 2], n)
        assert A[n - 1] <= float(a) + 1e-12 and B[n - 1] <= float(b) + 1e-12
    env = pentagasket_envelope(lam, 5)
    assert len(env) == 5 and float(env[0][0]) == pytest.approx(A[0], rel=1e-12)


def test_closed_form_dispatch():
    assert closed_form_R("cantor_x_interval", 0.1)["lower_bound_1_4"] == pytest.approx(0.4)
    assert len(closed_form_R("pentagasket", 0.1, 4)["upper_bound_A"]) == 4
    with pytest.raises(InvalidInput):
        closed_form_R("sg2", 0.1)
    with pytest.raises(InvalidInput):
        closed_form_R("sg3", 1.0)


def test_rayleigh_triangle():
    tri = Network.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    cut = rayleigh_bounds(tri, ("cut", 0, 1), [0], [1])
    assert (cut.before, cut.after, cut.lawful) == (Fraction(2, 3), Fraction(2), True)
    short = rayleigh_bounds(tri, ("short", 1, 2), [0], [1])
    assert short.after == Fraction(1, 2) and short.lawful
    scale = rayleigh_bounds(tri, ("scale", Fraction(2)), [0], [1])
    assert scale.after == Fraction(1, 3) and scale.lawful
    with pytest.raises(InvalidInput):
        rayleigh_bounds(tri, ("twist",), [0], [1])


@given(st.integers(0, 10 ** 6), st.booleans())
def test_rayleigh_property(seed, exact):
    rng = random.Random(seed)
    net = random_network(rng, 3, 20, exact=exact)
    a, b = rng.sample(range(net.n_vertices), 2)
    k = rng.randrange(net.n_edges)
    assert rayleigh_bounds(net, ("cut", int(net.u[k]), int(net.v[k])), [a], [b]).lawful
    x, y = rng.sample(range(net.n_vertices), 2)
    assert rayleigh_bounds(net, ("short", x, y), [a], [b]).lawful
    t = Fraction(rng.randint(1, 9), rng.randint(1, 9)) if exact else rng.uniform(0.1, 10)
    assert rayleigh_bounds(net, ("scale", t), [a], [b]).lawful

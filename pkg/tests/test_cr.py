import math

import numpy as np
import pytest

from scar.cr import (
    cop_number,
    discounted_cr_value,
    exact_capture_times,
    extract_cr_optimal_moves,
    gamma_power_times,
    minimax_capture_times,
    t_n_max,
)
from scar.errors import CapacityError
from scar.graph import (
    complete_graph,
    cycle_graph,
    delayed_capture_graph,
    path_graph,
    petersen_graph,
    star_graph,
)
from scar.profiles import PositionalProfile
from scar.simulate import run
from scar.payoffs import GameParams
from scar.states import build_state_space


def test_p3_hand_derived_capture_time():
    # cop 1 -> 2; robber's only non-capturing option is to stay; cop 2 -> 3
    space = build_state_space(path_graph(3), 2)
    table = exact_capture_times(space)
    assert table.time_of((1, 3, 1)) == 3


def test_k2_hand_derived():
    space = build_state_space(path_graph(2), 2)
    table = exact_capture_times(space)
    assert table.time_of((1, 2, 2)) == 2  # robber must stay, then the cop steps on
    assert t_n_max(space, table) == 2


def test_c4_evader_escapes():
    space = build_state_space(cycle_graph(4), 2)
    table = exact_capture_times(space)
    for s in [(1, 3, 1), (1, 3, 2), (2, 4, 1)]:
        assert table.time_of(s) == math.inf
    assert t_n_max(space, table) == math.inf
    # exact characterization: the only pursuer wins are adjacent evaders on the
    # pursuer's own turn (one-step grabs); from everywhere else distance 2 is
    # maintained forever
    g = space.graph
    for idx in np.flatnonzero(space.is_noncapture):
        x1, x2, p = space.state_at(int(idx))
        grab = g.distance(x1, x2) == 1 and p == 1
        assert table.time_of(int(idx)) == (1 if grab else math.inf)


def test_capture_states_are_zero():
    space = build_state_space(cycle_graph(5), 3)
    table = exact_capture_times(space)
    assert (table.times[space.is_capture] == 0).all()
    assert (table.times[space.is_capture] <= 0).all()


@pytest.mark.parametrize("g,n", [
    (path_graph(2), 2), (path_graph(3), 2), (path_graph(4), 2), (path_graph(5), 2),
    (cycle_graph(4), 2), (cycle_graph(4), 3), (cycle_graph(5), 3),
    (star_graph(5), 3), (complete_graph(4), 2),
    (delayed_capture_graph(), 2), (delayed_capture_graph(), 3),
])
def test_oracle_agrees_with_attractor(g, n):
    space = build_state_space(g, n)
    assert np.array_equal(minimax_capture_times(space).times[:-1],
                          exact_capture_times(space).times[:-1])


def test_fixpoint_property():
    # re-applying the defining equations to the finished table changes nothing
    space = build_state_space(delayed_capture_graph(), 2)
    table = exact_capture_times(space)
    big = np.int64(2**62)
    t = np.where(table.times >= 0, table.times, big)
    gathered = t[space.succ]
    up = np.minimum(gathered.min(axis=1) + 1, big)
    down = np.minimum(gathered.max(axis=1) + 1, big)
    nc = space.is_noncapture
    cop_rows = nc & (space.mover < space.n_players)
    rob_rows = nc & (space.mover == space.n_players)
    assert np.array_equal(t[cop_rows], up[cop_rows])
    assert np.array_equal(t[rob_rows], down[rob_rows])


def test_cop_numbers():
    assert cop_number(path_graph(4)).value == 1
    assert cop_number(cycle_graph(4)).value == 2
    assert cop_number(petersen_graph()).value == 3
    res = cop_number(cycle_graph(5), max_cops=1)
    assert res.value is None
    assert res.finite_by_cops == {1: False}


def test_cop_number_capacity():
    with pytest.raises(CapacityError):
        cop_number(petersen_graph(), max_cops=3, state_cap=5000)


def test_discounted_duality_small():
    for g, n, gamma in ((path_graph(3), 2, 0.5), (cycle_graph(4), 2, 0.5),
                        (cycle_graph(4), 3, 0.3), (delayed_capture_graph(), 2, 0.9)):
        space = build_state_space(g, n)
        table = exact_capture_times(space)
        dv = discounted_cr_value(space, gamma)
        want = gamma_power_times(gamma, table.times)
        want[space.terminal_index] = 0.0
        assert np.abs(dv.values - want).max() <= 1e-8
    # frozen spot values
    space = build_state_space(path_graph(3), 2)
    dv = discounted_cr_value(space, 0.5)
    assert dv.values[space.index_of((1, 3, 1))] == pytest.approx(0.125, abs=1e-10)
    assert (dv.values[space.is_capture] == 1.0).all()


def test_rounds_monotone_with_extra_stacked_cop():
    # an extra pursuer stacked on the first never costs rounds (each round is
    # one move per player, so raw turn counts are not comparable across N)
    for g in (path_graph(3), path_graph(4), star_graph(4)):
        small = build_state_space(g, 2)
        big = build_state_space(g, 3)
        t2 = exact_capture_times(small)
        t3 = exact_capture_times(big)
        for x in range(1, g.vertex_count + 1):
            for y in range(1, g.vertex_count + 1):
                a = t2.time_of((x, y, 1))
                b = t3.time_of((x, x, y, 1))
                rounds_a = math.inf if a == math.inf else math.ceil(a / 2)
                rounds_b = math.inf if b == math.inf else math.ceil(b / 3)
                assert rounds_b <= rounds_a


def test_extracted_strategies_achieve_table_times():
    for g, n in ((path_graph(4), 2), (cycle_graph(5), 3), (delayed_capture_graph(), 3)):
        space = build_state_space(g, n)
        table = exact_capture_times(space)
        profile = PositionalProfile(space, extract_cr_optimal_moves(space, table))
        params = GameParams(n, 0.5, 0.25)
        nc = np.flatnonzero(space.is_noncapture)
        rng = np.random.default_rng(3)
        for idx in rng.choice(nc, size=min(60, nc.size), replace=False):
            t = table.time_of(int(idx))
            trace = run(space, params, profile, int(idx))
            if t == math.inf:
                assert trace.termination == "cycle"
            else:
                assert trace.capture_time == t


def test_gamma_power_maps_escape_to_zero():
    times = np.array([0, 3, -1], dtype=np.int64)
    out = gamma_power_times(0.5, times)
    assert out.tolist() == [1.0, 0.125, 0.0]

import random

import pytest
from hypothesis import given, settings, strategies as st

from csach.graph import INF, Graph
from csach.hierarchy import contract
from csach.query import csa_ch_many_to_many
from csach.timetable import (
    Connection,
    DownwardRankOrder,
    EarliestArrivalOrder,
    Timetable,
    TimetableFormatError,
    UpwardRankOrder,
    csa_earliest_arrival,
    dump_timetable_csv,
    gen_random_timetable,
    generalized_scan,
    load_timetable_csv,
    reconstruct_journey,
    time_expanded_oracle,
)

A, B, C = 0, 1, 2


@pytest.fixture
def tt3():
    return Timetable.from_connections([(A, B, 0, 5), (B, C, 6, 10), (A, C, 1, 20)], ["A", "B", "C"])


def brute_force(tt: Timetable, departures: dict) -> list:
    """Earliest arrival by enumerating every feasible connection chain."""
    best = [INF] * tt.stop_count
    for s, t in departures.items():
        best[s] = min(best[s], t)
    stack = [(s, t, frozenset()) for s, t in departures.items()]
    while stack:
        stop, now, used = stack.pop()
        for i, c in enumerate(tt.connections):
            if i not in used and c.dep_stop == stop and c.dep_time >= now:
                best[c.arr_stop] = min(best[c.arr_stop], c.arr_time)
                stack.append((c.arr_stop, c.arr_time, used | {i}))
    return best


def test_sorted_by_departure(tt3):
    assert [c.dep_time for c in tt3.connections] == [0, 1, 6]


def test_example_two_legs(tt3, backend):
    lab = csa_earliest_arrival(tt3, {A: 0}, {C}, backend=backend)
    assert lab[C] == 10
    assert reconstruct_journey(tt3, lab, C) == [Connection(A, B, 0, 5), Connection(B, C, 6, 10)]
    assert brute_force(tt3, {A: 0})[C] == 10


def test_late_departure_skips_early_connections(tt3, backend):
    # Both A connections leave before t=2, so C is unreachable.
    lab = csa_earliest_arrival(tt3, {A: 2}, {C}, backend=backend)
    assert lab[C] == INF == brute_force(tt3, {A: 2})[C]
    assert lab.scanned == 1
    lab = csa_earliest_arrival(tt3, {A: 1}, {C}, backend=backend)
    assert lab[C] == 20 == brute_force(tt3, {A: 1})[C]


def test_arrivals_within_departures_need_no_scan(tt3, backend):
    lab = csa_earliest_arrival(tt3, {A: 0, B: 0}, {A, B}, backend=backend)
    assert lab[A] == lab[B] == 0
    assert lab.scanned == 0


def test_break_rule_example(tt3, backend):
    with_break = csa_earliest_arrival(tt3, {A: 0}, {B}, backend=backend)
    without = csa_earliest_arrival(tt3, {A: 0}, {B}, use_break=False, backend=backend)
    assert with_break[B] == without[B] == 5
    assert with_break.scanned == 2 and without.scanned == 3


def test_break_waits_for_all_arrivals(tt3):
    lab = csa_earliest_arrival(tt3, {A: 0}, {B, C})
    assert lab[C] == 10 and lab.scanned == 3


def test_reconstruct_seeded_and_undiscovered(tt3):
    lab = csa_earliest_arrival(tt3, {B: 7}, {C})
    assert reconstruct_journey(tt3, lab, B) == []
    with pytest.raises(ValueError, match="not reached"):
        reconstruct_journey(tt3, lab, C)


def test_empty_departures(tt3):
    with pytest.raises(ValueError):
        csa_earliest_arrival(tt3, {}, {C})


def test_bad_connection():
    with pytest.raises(ValueError):
        Timetable.from_connections([(0, 1, 5, 4)])


def test_zero_transfer_time():
    tt = Timetable.from_connections([(0, 1, 0, 5), (1, 2, 5, 6)])
    assert csa_earliest_arrival(tt, {0: 0}, {2})[2] == 6


def test_time_expanded_oracle_example(tt3):
    assert time_expanded_oracle(tt3, {A: 0}) == [0, 5, 10]
    assert time_expanded_oracle(tt3, {A: 2}) == [2, INF, INF]


# ---------------------------------------------------------------------------
# generalized scan


def test_generalized_timetable_identical(tt3):
    lab = csa_earliest_arrival(tt3, {A: 0}, {C})
    gen = generalized_scan(tt3.connections, EarliestArrivalOrder(), {A: 0}, {C})
    assert gen.value == {s: t for s, t in enumerate(lab.arrival) if t < INF}
    assert {s: tt3.connections.index(c) for s, c in gen.pred.items()} == {
        s: p for s, p in enumerate(lab.pred) if p != -1}


def test_generalized_ch_forward_diamond(diamond):
    ch = contract(diamond, [0, 1, 2, 3])
    ups = [ch.arcs[i] for i in ch.scan.up_arc]
    gen = generalized_scan(ups, UpwardRankOrder(ch.ranks), {0: 0.0})
    assert gen.value == {0: 0.0, 1: 2.0, 2: 0.5, 3: 2.5}
    m = csa_ch_many_to_many(ch, [0], [3])
    assert [gen.get(v) for v in range(4)] == m.forward[0].tolist()


def test_generalized_ch_backward_diamond(diamond):
    ch = contract(diamond, [0, 1, 2, 3])
    downs = [ch.arcs[i] for i in ch.scan.down_arc]
    gen = generalized_scan(downs, DownwardRankOrder(ch.ranks), {1: 0.0})
    assert gen.value == {1: 0.0, 2: 1.0}


def test_generalized_empty():
    gen = generalized_scan([], EarliestArrivalOrder(), {3: 7}, {1})
    assert gen.value == {3: 7} and gen.pred == {} and gen.scanned == 0


def test_generalized_ch_break_is_sound():
    from csach.graph import gen_random_graph
    from csach.hierarchy import build_ch

    ch = build_ch(gen_random_graph(40, 200, 1))
    ups = [ch.arcs[i] for i in ch.scan.up_arc]
    order = UpwardRankOrder(ch.ranks)
    m = csa_ch_many_to_many(ch, [5], range(40))
    for t in range(0, 40, 7):
        cut = generalized_scan(ups, order, {5: 0.0}, {t})
        full = generalized_scan(ups, order, {5: 0.0}, {t}, use_break=False)
        assert cut.get(t) == full.get(t) == m.forward[0][t]
        assert cut.scanned <= full.scanned


# ---------------------------------------------------------------------------
# properties


timetables = st.builds(
    gen_random_timetable,
    st.integers(2, 8), st.integers(0, 14), st.integers(0, 2**32),
    horizon=st.integers(1, 60), max_duration=st.integers(1, 30),
)


@settings(max_examples=150, deadline=None)
@given(timetables, st.data())
def test_matches_brute_force_and_oracle(tt, data):
    n = tt.stop_count
    k = data.draw(st.integers(1, n))
    deps = {s: data.draw(st.integers(0, 60)) for s in random.Random(k).sample(range(n), k)}
    arrivals = data.draw(st.sets(st.integers(0, n - 1)))
    full = csa_earliest_arrival(tt, deps, (), use_break=False)
    assert full.arrival == brute_force(tt, deps) == time_expanded_oracle(tt, deps)
    cut = csa_earliest_arrival(tt, deps, arrivals)
    for s in arrivals:
        assert cut[s] == full[s]
    gen = generalized_scan(tt.connections, EarliestArrivalOrder(), deps, arrivals)
    assert [gen.get(s) for s in range(n)] == cut.arrival
    assert {s: tt.connections.index(c) for s, c in gen.pred.items()} == {
        s: p for s, p in enumerate(cut.pred) if p != -1}
    for s in range(n):
        if full[s] < INF:
            legs = reconstruct_journey(tt, full, s)
            if legs:
                assert legs[-1].arr_time == full[s]
                assert deps.get(legs[0].dep_stop, INF) <= legs[0].dep_time
            else:
                assert deps[s] == full[s]
            for x, y in zip(legs, legs[1:]):
                assert x.arr_stop == y.dep_stop and x.arr_time <= y.dep_time


@pytest.mark.parametrize("seed", range(10))
def test_random_timetables_match_oracle(seed, backend):
    tt = gen_random_timetable(30, 800, seed)
    deps = {seed % 30: 3600, (seed + 7) % 30: 5400}
    oracle = time_expanded_oracle(tt, deps)
    assert csa_earliest_arrival(tt, deps, (), backend=backend).arrival == oracle
    arrivals = range(0, 30, 3)
    cut = csa_earliest_arrival(tt, deps, arrivals, backend=backend)
    assert [cut[s] for s in arrivals] == [oracle[s] for s in arrivals]


def test_scan_is_monotone_prefix():
    tt = gen_random_timetable(20, 500, 3)
    deps = [c.dep_time for c in tt.connections]
    assert deps == sorted(deps)
    lab = csa_earliest_arrival(tt, {0: 1000}, {5})
    start = sum(1 for d in deps if d < 1000)
    scanned = deps[start:start + lab.scanned]
    assert all(d >= 1000 for d in scanned)
    assert all(d < lab[5] for d in scanned)


def test_shuffle_ties_preserves_arrivals():
    rng = random.Random(0)
    conns = [(rng.randrange(5), rng.randrange(5), t, t + rng.randrange(1, 4))
             for t in rng.choices(range(10), k=60)]
    conns = [c for c in conns if c[0] != c[1]]
    ref = Timetable.from_connections(conns, list("abcde"))
    for _ in range(20):
        rng.shuffle(conns)
        tt = Timetable.from_connections(conns, list("abcde"))
        assert csa_earliest_arrival(tt, {0: 0}, ()).arrival == csa_earliest_arrival(ref, {0: 0}, ()).arrival


# ---------------------------------------------------------------------------
# CSV


CSV = "dep_stop,arr_stop,dep_time,arr_time\nX,Y,30,40\nY,Z,10,20\nZ,X,10,15\n"


def test_csv_ids_and_sorting():
    tt = load_timetable_csv(CSV)
    assert tt.stops == ("X", "Y", "Z")
    assert tt.connections == (Connection(1, 2, 10, 20), Connection(2, 0, 10, 15), Connection(0, 1, 30, 40))


def test_csv_round_trip():
    for tt in (load_timetable_csv(CSV), gen_random_timetable(50, 2000, 1)):
        text = dump_timetable_csv(tt)
        again = load_timetable_csv(text)
        assert again.named_connections() == tt.named_connections()
        # ids follow first appearance in the dumped order, after which the format is a fixed point
        assert dump_timetable_csv(again) == text
        assert load_timetable_csv(dump_timetable_csv(again)) == again


@pytest.mark.parametrize("text, match", [
    ("a,b,c,d\n", "header"),
    ("", "header"),
    ("dep_stop,arr_stop,dep_time,arr_time\nX,Y,1\n", "line 2"),
    ("dep_stop,arr_stop,dep_time,arr_time\nX,Y,1,z\n", "integer"),
    ("dep_stop,arr_stop,dep_time,arr_time\nX,Y,5,1\n", "before"),
])
def test_csv_errors(text, match):
    with pytest.raises(TimetableFormatError, match=match):
        load_timetable_csv(text)


def test_stop_lookup():
    tt = load_timetable_csv(CSV)
    assert tt.stop_id("Z") == 2
    with pytest.raises(KeyError):
        tt.stop_id("Q")

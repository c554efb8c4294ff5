import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochperf.distributions import LogNormal, Normal
from stochperf.errors import InputError, MalformedRow, MissingCell, NoCloudMachines, NonPositiveMean, UnknownApp
from stochperf.scheduling import (
    CLOUD,
    EDGE,
    EtcMatrix,
    Machine,
    MachineState,
    Task,
    build_etc,
    mcc_assign,
    mect_assign,
    parse_task_csv,
    serialize_task_csv,
    simulate,
    tec_assign,
)
from stochperf.traces import SummaryStats


def etc_from_rows(rows, roles=None, dist=None):
    m = len(rows[0])
    roles = roles or [EDGE] * m
    apps = tuple(f"a{i}" for i in range(len(rows)))
    return EtcMatrix(apps, tuple(Machine(f"m{j}", roles[j]) for j in range(m)), rows, dist)


def idle(etc, busy=None):
    busy = busy or {}
    return [MachineState(m, busy.get(m, 0.0)) for m in etc.machine_ids]


def task(app="a0", arrival=0.0, deadline=100.0, urgent=False, tid="t"):
    return Task(tid, app, arrival, deadline, urgent)


def brute_force_mect(stream, rows):
    """Greedy reference: plain loops, first strict minimum wins."""
    avail = [0.0] * len(rows[0])
    picks = []
    for app, arrival in stream:
        best_j, best_c = None, None
        for j, delta in enumerate(rows[app]):
            c = max(arrival, avail[j]) + delta
            if best_c is None or c < best_c:
                best_j, best_c = j, c
        avail[best_j] = best_c
        picks.append(best_j)
    return picks


def random_stream(rng):
    n_m = int(rng.integers(1, 4))
    n_a = int(rng.integers(1, 3))
    rows = [tuple(float(v) for v in rng.integers(1, 6, n_m)) for _ in range(n_a)]
    n_t = int(rng.integers(1, 7))
    arrivals = np.sort(rng.integers(0, 8, n_t)).astype(float)
    stream = [(int(rng.integers(0, n_a)), float(a)) for a in arrivals]
    return rows, stream


# ----------------------------------------------------------------- examples

def test_build_etc_echo_and_missing():
    fits = {
        ("x", "p"): SummaryStats(5.0, 1.0, 4.0, 6.0, 3),
        ("x", "q"): SummaryStats(3.0, 1.0, 2.0, 4.0, 3),
        ("y", "p"): SummaryStats(7.0, 1.0, 6.0, 8.0, 3),
        ("y", "q"): SummaryStats(2.0, 1.0, 1.0, 3.0, 3),
    }
    etc = build_etc(fits, {"p": EDGE, "q": CLOUD})
    assert etc.expected_ms == ((5.0, 3.0), (7.0, 2.0))
    assert etc.dist is None
    del fits[("y", "q")]
    with pytest.raises(MissingCell):
        build_etc(fits, {"p": EDGE, "q": CLOUD})


def test_build_etc_from_distributions_keeps_dist():
    fits = {("x", "p"): Normal(5.0, 1.0), ("x", "q"): LogNormal(1.0, 0.5)}
    etc = build_etc(fits, {"p": EDGE, "q": CLOUD})
    assert etc.dist is not None
    assert etc.expected_ms[0][1] == LogNormal(1.0, 0.5).mean()
    with pytest.raises(NonPositiveMean):
        build_etc({("x", "p"): Normal(-5.0, 1.0)}, {"p": EDGE})


def test_etc_round_trip():
    etc = etc_from_rows([(5.0, 3.0)], [EDGE, CLOUD], [(Normal(5.0, 1.0), LogNormal(1.0, 0.2))])
    assert EtcMatrix.from_dict(etc.to_dict()) == etc


def test_mect_examples():
    etc = etc_from_rows([(5.0, 3.0, 7.0)])
    assert mect_assign(task(), etc, idle(etc)) == "m1"
    flat = etc_from_rows([(4.0, 4.0, 4.0)])
    assert mect_assign(task(), flat, idle(flat, {"m0": 10.0})) == "m1"
    two = etc_from_rows([(5.0, 3.0)])
    assert mect_assign(task(), two, idle(two, {"m1": 4.0})) == "m0"


def test_mcc_examples():
    etc = etc_from_rows([(6.0, 9.0, 4.0)])
    assert mcc_assign(task(deadline=10.0), etc, idle(etc)) == ("m2", 6.0)
    m, c = mcc_assign(task(deadline=1.0), etc, idle(etc))
    assert (m, c) == ("m2", -3.0)


def test_tec_routing_and_uniformity():
    etc = etc_from_rows([(1.0, 1.0, 1.0)], [EDGE, EDGE, CLOUD])
    assert tec_assign(task(urgent=False), etc, np.random.default_rng(0)) == "m2"
    first = [tec_assign(task(urgent=True), etc, np.random.default_rng(5)) for _ in range(3)]
    assert len(set(first)) == 1
    rng = np.random.default_rng(123)
    picks = [tec_assign(task(urgent=True), etc, rng) for _ in range(10_000)]
    share = picks.count("m0") / len(picks)
    assert abs(share - 0.5) <= 0.02
    with pytest.raises(NoCloudMachines):
        tec_assign(task(), etc_from_rows([(1.0,)]), rng)


def test_single_task():
    etc = etc_from_rows([(5.0,)])
    rep = simulate([task(arrival=2.0, deadline=10.0)], "mect", etc)
    (o,) = rep.per_task
    assert o.finish_ms == 7.0 and o.met_deadline and rep.miss_rate == 0.0


def test_stochastic_is_seed_deterministic():
    etc = etc_from_rows([(5.0, 8.0)], [EDGE, CLOUD], [(Normal(5.0, 1.0), LogNormal(2.0, 0.3))])
    tasks = [task(arrival=float(i), deadline=i + 9.0, urgent=i % 2 == 0, tid=str(i)) for i in range(20)]
    for policy in ("mect", "mcc", "tec"):
        a = simulate(tasks, policy, etc, seed=4, stochastic=True)
        assert a == simulate(tasks, policy, etc, seed=4, stochastic=True)
    assert simulate(tasks, "mect", etc, seed=4, stochastic=True) != simulate(tasks, "mect", etc, seed=5, stochastic=True)


def test_simulate_validation():
    etc = etc_from_rows([(5.0,)])
    with pytest.raises(InputError):
        simulate([task()], "fifo", etc)
    with pytest.raises(InputError):
        simulate([task()], "mect", etc, stochastic=True)
    with pytest.raises(InputError):
        simulate([task(arrival=5.0), task(arrival=1.0)], "mect", etc)
    with pytest.raises(UnknownApp):
        simulate([task(app="zzz")], "mect", etc)


def test_cloud_offset_only_delays_cloud_finishes():
    etc = etc_from_rows([(10.0, 1.0)], [EDGE, CLOUD])
    rep = simulate([task(deadline=5.0)], "mect", etc, cloud_offset_ms=3.0)
    assert rep.per_task[0].machine == "m1" and rep.per_task[0].finish_ms == 4.0


def test_task_csv_round_trip_and_errors():
    tasks = [task(arrival=1.5, deadline=9.0, urgent=True, tid="a"), task(arrival=2.0, tid="b")]
    assert parse_task_csv(serialize_task_csv(tasks)) == tasks
    with pytest.raises(MalformedRow):
        parse_task_csv("id,app_type,arrival_ms,deadline_ms,urgent\nx,a0,5,3,0\n")
    with pytest.raises(MalformedRow):
        parse_task_csv("id,app_type,arrival_ms,deadline_ms,urgent\nx,a0,1,3,yes\n")


# ------------------------------------------------------------- oracle/props

def test_mect_matches_brute_force_on_small_streams():
    rng = np.random.default_rng(77)
    for _ in range(200):
        rows, stream = random_stream(rng)
        etc = etc_from_rows(rows)
        tasks = [Task(str(i), f"a{a}", t, t + 1000.0) for i, (a, t) in enumerate(stream)]
        rep = simulate(tasks, "mect", etc)
        assert [int(o.machine[1:]) for o in rep.per_task] == brute_force_mect(stream, rows)


@given(st.lists(st.floats(0.1, 100.0), min_size=1, max_size=6), st.floats(0.0, 50.0))
def test_mcc_equals_mect_on_idle_machines(row, deadline_slack):
    etc = etc_from_rows([tuple(row)])
    t = task(arrival=3.0, deadline=3.0 + deadline_slack + 1e-3)
    assert mcc_assign(t, etc, idle(etc))[0] == mect_assign(t, etc, idle(etc))


@given(
    st.lists(st.floats(0.1, 100.0), min_size=1, max_size=6),
    st.lists(st.floats(0.0, 50.0), min_size=6, max_size=6),
    st.floats(0.01, 100.0),
    st.floats(0.0, 100.0),
)
def test_mect_scale_and_offset_invariance(row, busy, c, offset):
    m = len(row)
    a = etc_from_rows([tuple(row)])
    b = etc_from_rows([tuple(c * v for v in row)])
    sa = idle(a, {f"m{j}": busy[j] for j in range(m)})
    sb = idle(b, {f"m{j}": c * busy[j] + offset for j in range(m)})
    ta, tb = task(arrival=0.0), task(arrival=offset)
    assert mect_assign(ta, a, sa) == mect_assign(tb, b, sb)


stream_st = st.lists(
    st.tuples(st.integers(0, 1), st.floats(0.0, 20.0), st.floats(0.5, 30.0), st.booleans()), min_size=1, max_size=25
)


def build_tasks(spec, shift=0.0):
    spec = sorted(spec, key=lambda r: r[1])
    return [Task(str(i), f"a{a}", t, t + slack + shift, u) for i, (a, t, slack, u) in enumerate(spec)]


ETC3 = etc_from_rows([(4.0, 6.0, 2.5), (9.0, 3.0, 5.0)], [EDGE, EDGE, CLOUD])


@given(stream_st, st.sampled_from(["mect", "mcc", "tec"]), st.integers(0, 1000))
def test_conservation_and_no_overlap(spec, policy, seed):
    tasks = build_tasks(spec)
    rep = simulate(tasks, policy, ETC3, seed=seed)
    assert [o.task_id for o in rep.per_task] == [t.id for t in tasks]
    for m in ETC3.machine_ids:
        spans = sorted((o.start_ms, o.finish_ms) for o in rep.per_task if o.machine == m)
        assert all(s1[1] <= s2[0] + 1e-12 for s1, s2 in zip(spans, spans[1:]))
    assert rep.tasks_missed == sum(not o.met_deadline for o in rep.per_task)


@given(stream_st, st.sampled_from(["mect", "mcc", "tec"]))
def test_generous_deadlines_never_miss(spec, policy):
    spec = sorted(spec, key=lambda r: r[1])
    worst = max(spec[-1][1], 0.0) + sum(9.0 for _ in spec)
    tasks = [Task(str(i), f"a{a}", t, worst + 1.0, u) for i, (a, t, _, u) in enumerate(spec)]
    assert simulate(tasks, policy, ETC3).miss_rate == 0.0


@given(stream_st, st.sampled_from(["mect", "mcc", "tec"]), st.floats(0.1, 50.0), st.integers(0, 100))
def test_later_deadlines_never_increase_misses(spec, policy, delta, seed):
    a = simulate(build_tasks(spec), policy, ETC3, seed=seed)
    b = simulate(build_tasks(spec, delta), policy, ETC3, seed=seed)
    assert b.miss_rate <= a.miss_rate


def saturating_fixture():
    dist = [(Normal(10.0, 1.0), Normal(10.0, 1.0), Normal(8.0, 0.8))]
    etc = etc_from_rows([(10.0, 10.0, 8.0)], [EDGE, EDGE, CLOUD], dist)
    tasks = [Task(f"t{i}", "a0", 3.0 * i, 3.0 * i + 25.0, i % 5 != 0) for i in range(60)]
    return etc, tasks


def test_mect_beats_tec_when_edges_saturate():
    etc, tasks = saturating_fixture()
    for seed in range(50):
        mect = simulate(tasks, "mect", etc, seed=seed, stochastic=True)
        tec = simulate(tasks, "tec", etc, seed=seed, stochastic=True)
        assert mect.miss_rate <= tec.miss_rate

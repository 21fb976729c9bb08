import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasflow import flows as fl
from sasflow.paths import FractionalBrownian, SimpleRandomWalk


def test_time_domain_validation():
    assert fl.DISCRETE.discrete and not fl.CONTINUOUS.discrete
    with pytest.raises(ValueError):
        fl.DISCRETE.validate([0.5])
    with pytest.raises(ValueError):
        fl.TimeDomain("weekly")


def test_flow_metadata_is_checked():
    with pytest.raises(ValueError):
        fl.Flow(lambda t, x: x, lambda t, x: 1.0, fl.lebesgue_line(), metadata="ergodic")


@pytest.mark.parametrize("q", ["gaussian", "cauchy", "student3", "logistic"])
def test_lebesgue_importance_weights_integrate_indicator(q):
    space = fl.lebesgue_line(q)
    x = space.sample(np.random.default_rng(0), 200_000)
    w = space.density_dm_dq(x)
    est = np.mean(w * ((x[:, 0] >= -1) & (x[:, 0] < 2)))
    assert est == pytest.approx(3.0, rel=0.03)


def test_unknown_line_sampler():
    with pytest.raises(ValueError):
        fl.lebesgue_line("uniform")


def test_disjoint_union_density_accounts_for_masses():
    space = fl.disjoint_union([(fl.interval_space(0, 1), 1.0), (fl.interval_space(0, 2), 0.5)],
                              probs=[0.25, 0.75])
    assert space.total_mass == pytest.approx(2.0)
    x = space.sample(np.random.default_rng(1), 100_000)
    assert np.mean(space.density_dm_dq(x)) == pytest.approx(2.0, rel=0.01)
    with pytest.raises(ValueError):
        fl.disjoint_union([(fl.interval_space(), 1.0)], probs=[0.5])


def test_tilted_space_keeps_the_measure():
    base = fl.interval_space(0.0, 3.0)
    tilted = fl.tilted_space(base, fl.sine_score(0.0, 3.0))
    x = tilted.sample(np.random.default_rng(2), 100_000)
    # q' is not uniform ...
    assert abs(np.mean(x[:, 0] < 1.5) - 0.5) > 0.05
    # ... but importance weights still integrate m
    g = np.cos(x[:, 0]) ** 2
    exact = 1.5 + np.sin(6.0) / 4
    assert np.mean(tilted.density_dm_dq(x) * g) == pytest.approx(exact, rel=0.02)
    with pytest.raises(ValueError):
        fl.tilted_space(base, fl.sine_score(0.0, 3.0), eps=1.5)


def test_seed_parity_tilt():
    space = fl.tilted_space(fl.probability_path_space(FractionalBrownian(0.5, horizon=5)),
                            fl.seed_parity_score())
    x = space.sample(np.random.default_rng(3), 20_000)
    even = np.mod(x[:, 0], 2) == 0
    assert np.mean(even) == pytest.approx(0.75, abs=0.02)
    assert np.mean(space.density_dm_dq(x)) == pytest.approx(1.0, abs=0.02)


def test_two_sided_geometric_pmf_sums_to_one():
    pmf, draw = fl.two_sided_geometric(0.6)
    k = np.arange(-200, 201)
    assert pmf(k).sum() == pytest.approx(1.0)
    x = draw(np.random.default_rng(0), 100_000)
    assert np.mean(x == 0) == pytest.approx(pmf(0), abs=0.01)
    with pytest.raises(ValueError):
        fl.two_sided_geometric(1.0)


def _flows():
    walk = SimpleRandomWalk(horizon=256)
    bm = FractionalBrownian(0.5, horizon=200, dt=0.5)
    rot = [fl.make_rotation_flow(0.3, period=1.0), fl.make_rotation_flow(1.0, period=2.0)]
    union_space = fl.disjoint_union([(f.space, 1.0) for f in rot])
    return [
        (fl.make_translation_flow(), None),
        (fl.make_translation_flow(discrete=True), None),
        (fl.make_rotation_flow(np.sqrt(2), discrete=True), None),
        (fl.make_identity_flow(fl.interval_space()), None),
        (fl.make_path_shift_flow(walk), fl.walk_sign_cocycle(walk)),
        (fl.make_path_shift_flow(bm), None),
        (fl.make_union_flow(rot, union_space), fl.union_cocycle([fl.trivial_cocycle()] * 2, [1, 1])),
    ]


@pytest.mark.parametrize("flow,cocycle", _flows())
def test_flow_axioms_hold(flow, cocycle):
    rep = fl.check_flow_axioms(flow, 2000, np.random.default_rng(4), cocycle=cocycle)
    assert rep.ok(1e-10), rep


def test_axiom_report_flags_a_broken_flow():
    space = fl.lebesgue_line()
    bad = fl.Flow(lambda t, x: x + t[..., None] ** 2, fl._unit_rn, space)
    rep = fl.check_flow_axioms(bad, 500, 0)
    assert not rep.ok()


def test_walk_sign_cocycle_counts_negative_sites():
    walk = SimpleRandomWalk(horizon=64)
    coc = fl.walk_sign_cocycle(walk)
    x = np.array([17.0, 0.0, 0.0])
    path = walk.value(17, np.arange(0, 10))
    expected = (-1.0) ** np.sum(path[:10] < 0)
    assert coc.eval(np.array([10.0]), x[None, :])[0] == expected


def test_walk_sign_cocycle_mixed_points_match_single_point_path():
    walk = SimpleRandomWalk(horizon=64)
    coc = fl.walk_sign_cocycle(walk)
    xs = np.array([[1.0, 0.0, 0.0], [2.0, 3.0, 5.0]])
    t = np.array([7.0, -4.0])
    joint = coc.eval(t, xs)
    single = np.array([coc.eval(t[i : i + 1], xs[i : i + 1])[0] for i in range(2)])
    np.testing.assert_array_equal(joint, single)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(-1e3, 1e3), s=st.floats(-1e3, 1e3), x=st.floats(0, 0.999))
def test_rotation_group_law_property(t, s, x):
    flow = fl.make_rotation_flow(0.5 ** 0.5)
    pt = np.array([[x]])
    lhs = flow.apply(np.array([t + s]), pt)
    rhs = flow.apply(np.array([t]), flow.apply(np.array([s]), pt))
    assert flow.point_distance(lhs, rhs)[0] < 1e-9


@settings(max_examples=60, deadline=None)
@given(t=st.integers(-50, 50), s=st.integers(-50, 50), seed=st.integers(0, 2**40),
       base=st.integers(-5, 5))
def test_walk_cocycle_identity_property(t, s, seed, base):
    walk = SimpleRandomWalk(horizon=128)
    flow = fl.make_path_shift_flow(walk)
    coc = fl.walk_sign_cocycle(walk)
    x = np.array([[float(seed), float(base), 0.0]])
    ts, tt = np.array([float(s)]), np.array([float(t)])
    lhs = coc.eval(tt + ts, x)
    rhs = coc.eval(ts, x) * coc.eval(tt, flow.apply(ts, x))
    assert lhs[0] == rhs[0]

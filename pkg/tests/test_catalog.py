import numpy as np
import pytest

from sasflow.catalog import (ALTERNATIVE_Q, CATALOG, CatalogEntry, constant_kernel, get_entry,
                             list_catalog, markov_chain_kernel, walk_origin_integral,
                             walk_return_probability)
from sasflow.kernels import KernelSpec

EXPECTED_TRUTH = {
    "moving_average": "dissipative",
    "moving_average_discrete": "dissipative",
    "mixed_moving_average": "dissipative",
    "rotation": "positive",
    "rotation_discrete": "positive",
    "cyclic": "positive",
    "markov_chain": "conservative_null",
    "markov_chain_sign": "conservative_null",
    "sub_gaussian": "positive",
    "mixture": "mixed",
}


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_entry_builds_with_unit_scale(name):
    e = get_entry(name, 1.5)
    assert isinstance(e.kernel, KernelSpec)
    assert e.name == name
    if name in EXPECTED_TRUTH:
        assert e.ground_truth == EXPECTED_TRUTH[name]
    norm = e.kernel.combination_integral([1.0], [0.0])
    assert np.isfinite(norm) and norm > 0


def test_alternative_samplers_cover_the_catalog():
    assert set(ALTERNATIVE_Q) == set(CATALOG)


@pytest.mark.parametrize("name", ["moving_average", "moving_average_discrete", "rotation",
                                  "rotation_discrete", "cyclic", "markov_chain", "sub_gaussian"])
def test_alternative_sampler_keeps_the_norms(name):
    base = get_entry(name, 1.3).kernel
    alt = get_entry(name, 1.3, **ALTERNATIVE_Q[name]).kernel
    assert alt.space.q_label != base.space.q_label or name.startswith("markov")
    c, t = [1.0, -0.5], [0.0, 3.0]
    assert alt.combination_integral(c, t) == pytest.approx(base.combination_integral(c, t), rel=1e-9)


def test_unknown_entry():
    with pytest.raises(KeyError):
        get_entry("brownian_bridge", 1.5)


def test_list_catalog_rows():
    rows = list_catalog(1.2)
    assert [r["name"] for r in rows] == list(CATALOG)
    assert {r["time_domain"] for r in rows} <= {"discrete", "continuous"}


def test_ground_truth_must_agree_with_flow_metadata():
    k = get_entry("moving_average", 1.5).kernel
    with pytest.raises(ValueError):
        CatalogEntry("bad", k, "positive", "test")
    with pytest.raises(ValueError):
        CatalogEntry("bad", k, "chaotic", "test")


def test_constant_kernel():
    e = constant_kernel(1.5, value=2.0)
    assert e.kernel.combination_integral([1.0, 1.0], [0.0, 5.0]) == pytest.approx(4.0**1.5)
    assert e.kernel.combination_integral([1.0, -1.0], [0.0, 5.0]) == 0.0
    assert "constant" not in CATALOG


def test_walk_return_probability():
    np.testing.assert_allclose(walk_return_probability([0, 1, 2, 4]), [1.0, 0.0, 0.5, 0.375])


def test_walk_origin_integral_single_and_pair():
    # m(path(0) = 0) = sum_x P_x(S_0 = 0) = 1
    assert walk_origin_integral([1.0], [0.0], 1.5) == pytest.approx(1.0)
    # both times at 0 with probability p2 = 1/2
    a = 1.5
    expected = 2 * 0.5 * 1 + 0.5 * 2**a
    assert walk_origin_integral([1.0, 1.0], [0.0, 2.0], a) == pytest.approx(expected)
    # repeated times are merged
    assert walk_origin_integral([0.5, 0.5], [3.0, 3.0], a) == pytest.approx(1.0)


def test_walk_origin_integral_against_monte_carlo():
    k = markov_chain_kernel(1.5, horizon=64).kernel
    mc = k.with_f(k.f, scale_fn=None, mc_samples=4096)
    c, t = [1.0, -0.6, 0.3], [0.0, 2.0, 6.0]
    exact = k.combination_integral(c, t)
    est = mc.combination_integral(c, t)
    assert abs(est - exact) < 4 * mc.mc_standard_error(c, t)


def test_signed_walk_integral_cancels_on_average():
    a = 1.2
    plain = walk_origin_integral([1.0, 1.0], [0.0, 2.0], a)
    signed = walk_origin_integral([1.0, 1.0], [0.0, 2.0], a, signed=True)
    # on the joint visit the relative sign is a fair coin: 2^a or 0 with equal odds
    assert signed == pytest.approx(1.0 + 0.5 * 0.5 * 2**a)
    assert signed < plain


def test_increment_kernel_matches_monte_carlo():
    k = get_entry("stationary_increments_bm", 1.5, horizon=4.0).kernel
    mc = k.with_f(k.f, scale_fn=None, mc_samples=4096)
    c, t = [1.0, 1.0], [0.0, 1.5]
    exact = k.combination_integral(c, t)
    est = mc.combination_integral(c, t)
    assert abs(est - exact) < 4 * mc.mc_standard_error(c, t) + 1e-3 * exact


def test_mixture_norm_adds_parts():
    mix = get_entry("mixture", 1.5).kernel
    rot = get_entry("rotation_discrete", 1.5).kernel
    ma = get_entry("moving_average_discrete", 1.5).kernel
    c, t = [1.0, 0.4], [0.0, 3.0]
    total = rot.combination_integral(c, t) + ma.combination_integral(c, t)
    assert mix.combination_integral(c, t) == pytest.approx(total, rel=1e-9)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasflow import flows as fl
from sasflow.catalog import get_entry, moving_average
from sasflow.kernels import (KernelSpec, StepFunction, eval_kernel, kernel_norm, step_quadrature,
                             support_fraction, zero_kernel)
from sasflow.stable_core import DivergenceError


def test_step_function_basics():
    f = StepFunction([0.0, 1.0, 3.0], [2.0, -1.0])
    np.testing.assert_array_equal(f(np.array([-0.1, 0.0, 0.99, 1.0, 2.9, 3.0])),
                                  [0.0, 2.0, 2.0, -1.0, -1.0, 0.0])
    assert f.power_integral(1.5) == pytest.approx(2**1.5 + 2.0)
    assert f.support == (0.0, 3.0)
    with pytest.raises(ValueError):
        StepFunction([0.0, 0.0], [1.0])
    with pytest.raises(ValueError):
        StepFunction([0.0, 1.0], [1.0, 2.0])


def test_step_quadrature_is_exact_for_steps():
    f = StepFunction([0.0, 0.3, 1.7], [1.0, 4.0])
    nodes, w = step_quadrature(f.breaks, -1.0, 2.0)
    assert np.sum(w * np.abs(f(nodes)) ** 0.7) == pytest.approx(f.power_integral(0.7))
    n2, w2 = step_quadrature([], 0.0, np.pi, per_piece=8)
    assert np.sum(w2 * np.sin(n2)) == pytest.approx(2.0, rel=1e-8)


def test_moving_average_increment_norm():
    k = moving_average(1.5).kernel
    for t in (0.25, 0.5, 1.0, 3.0):
        assert k.combination_integral([1.0, -1.0], [t, 0.0]) == pytest.approx(2 * min(t, 1.0))


def test_kernel_norm_and_eval():
    k = moving_average(1.2).kernel
    assert float(kernel_norm(k)) == pytest.approx(1.0)
    assert eval_kernel(k, 0.5, np.array([0.0]))[()] == 1.0
    assert eval_kernel(k, 2.0, np.array([0.0]))[()] == 0.0


def test_orbit_shapes():
    k = moving_average(1.5).kernel
    times = np.arange(5.0)
    assert k.orbit(np.array([0.2]), times).shape == (5,)
    assert k.orbit(np.zeros((3, 1)), times).shape == (3, 5)


def test_discrete_kernel_rejects_fractional_times():
    k = moving_average(1.5, discrete=True).kernel
    with pytest.raises(ValueError):
        k.evaluate(0.5, np.array([0.0]))


def test_monte_carlo_fallback_agrees_with_quadrature():
    k = moving_average(1.5, f=StepFunction([0.0, 1.0, 2.5], [1.0, -0.5])).kernel
    mc = k.with_f(k.f, quadrature=None)
    exact = k.combination_integral([1.0, 2.0], [0.0, 0.7])
    est = mc.combination_integral([1.0, 2.0], [0.0, 0.7])
    assert abs(est - exact) < 4 * mc.mc_standard_error([1.0, 2.0], [0.0, 0.7])


def test_divergent_integral_is_reported():
    # |f|^alpha dm/dq grows like |x|^3.5 under a Cauchy sampler
    space = fl.lebesgue_line("cauchy")
    flow = fl.make_translation_flow(space)
    k = KernelSpec(1.5, space, flow, lambda x: np.abs(x[..., 0]), label="linear-on-R")
    with pytest.raises(DivergenceError):
        k.combination_integral([1.0], [0.0])


def test_zero_kernel():
    z = zero_kernel(moving_average(1.5).kernel)
    assert z.combination_integral([1.0], [0.0]) == 0.0
    assert np.all(z.orbit(np.array([0.5]), np.arange(3.0)) == 0)


def test_support_fraction():
    k = moving_average(1.5).kernel
    assert support_fraction(k, (-5, 5), 2000, 0) == pytest.approx(
        np.mean(np.abs(np.random.default_rng(0).standard_normal(2000)) < 100), abs=0.2)
    assert support_fraction(zero_kernel(k), (-5, 5), 100, 0) == 0.0


STATIONARY_ENTRIES = ["moving_average", "moving_average_discrete", "mixed_moving_average", "rotation",
                      "rotation_discrete", "cyclic", "markov_chain", "markov_chain_sign",
                      "stationary_increments_bm", "stationary_increments_drift", "sub_gaussian",
                      "mixture"]


@pytest.mark.parametrize("name", STATIONARY_ENTRIES)
def test_scale_norm_is_shift_invariant(name):
    k = get_entry(name, 1.5).kernel
    c = np.array([1.0, -0.7, 0.4])
    t = np.array([0.0, 1.0, 3.0])
    base = k.combination_integral(c, t)
    for h in (1.0, 5.0, 17.0):
        assert k.combination_integral(c, t + h) == pytest.approx(base, rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-3, 3), min_size=1, max_size=4),
       h=st.floats(-20, 20), alpha=st.floats(0.5, 1.9))
def test_moving_average_stationarity_property(c, h, alpha):
    k = moving_average(alpha).kernel
    t = np.arange(len(c)) * 0.37
    a = k.combination_integral(c, t)
    b = k.combination_integral(c, t + h)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-5, 5), alpha=st.floats(0.5, 1.9))
def test_norm_homogeneity_property(c, alpha):
    k = get_entry("rotation", alpha).kernel
    assert k.combination_integral([c], [0.0]) == pytest.approx(abs(c) ** alpha, rel=1e-12)

import numpy as np
import pytest

from sasflow.catalog import get_entry
from sasflow.classify import (ClassifierConfig, PointVerdict, check_weight, classify_point,
                              classify_process, component_norms, decompose, log_weight, power_weight,
                              sample_points)
from sasflow.stable_core import RngStream


def test_power_weight_range():
    assert power_weight(1.0)(np.array([0.0, 3.0])).tolist() == [1.0, 0.25]
    with pytest.raises(ValueError):
        power_weight(1.5)


@pytest.mark.parametrize("w", [power_weight(0.5), power_weight(1.0), log_weight()])
def test_shipped_weights_pass_membership_check(w):
    rep = check_weight(w)
    assert rep["monotone"] and rep["increasing"]


def test_unknown_weight_name():
    with pytest.raises(ValueError):
        ClassifierConfig(weights=("w_2",)).weight_functions()


def test_point_verdict_consistency():
    with pytest.raises(ValueError):
        PointVerdict([0.0], "maybe", "dissipative")
    with pytest.raises(AssertionError):
        PointVerdict([0.0], "positive", "dissipative")
    assert PointVerdict([0.0], "null", "undecided").summary == "undecided"


def test_moving_average_point_is_dissipative():
    k = get_entry("moving_average", 1.5).kernel
    v = classify_point(k, np.array([0.3]))
    assert v.summary == "dissipative"
    assert v.final["growth_unweighted"] <= 1e-9
    assert 0 < v.final["S_w_1"] < v.final["S_unweighted"]


def test_rotation_point_is_positive():
    k = get_entry("rotation_discrete", 1.5).kernel
    v = classify_point(k, sample_points(k.space, 1, RngStream(4))[0])
    assert (v.positive_null, v.cons_diss) == ("positive", "conservative")
    assert min(v.ratios.values()) > 0.4


def test_markov_chain_points_are_conservative_null():
    k = get_entry("markov_chain", 1.5).kernel
    pts = sample_points(k.space, 5, RngStream(3))
    verdicts = [classify_point(k, p).summary for p in pts]
    assert verdicts.count("conservative_null") >= 4


def test_recentring_moves_to_the_support():
    k = get_entry("moving_average_discrete", 1.5).kernel
    v = classify_point(k, np.array([1000.0]))
    assert v.final["centre"] == pytest.approx(-1000.0)
    raw = classify_point(k, np.array([1000.0]), ClassifierConfig(recentre=False))
    assert raw.final["centre"] == 0.0


def test_sample_points_prefix_property():
    k = get_entry("moving_average", 1.5).kernel
    a = sample_points(k.space, 3, RngStream(9))
    b = sample_points(k.space, 6, RngStream(9))
    np.testing.assert_array_equal(a, b[:3])


def test_classify_process_report():
    k = get_entry("moving_average_discrete", 1.5).kernel
    rep = classify_process(k, 20, rng=RngStream(1))
    assert rep.fractions["D"] == 1.0 and rep.half_widths["D"] == 0.0
    assert rep.majority() == "dissipative" and rep.agreement("dissipative") == 1.0
    d = rep.to_dict()
    assert d["seed"] == 1 and len(d["per_point"]) == 20
    assert "per_point" not in rep.to_dict(include_points=False)
    with pytest.raises(ValueError):
        classify_process(k, 0)


def test_threaded_classification_matches_serial():
    k = get_entry("cyclic", 1.5).kernel
    a = classify_process(k, 8, rng=5)
    b = classify_process(k, 8, ClassifierConfig(workers=3), rng=5)
    assert [v.summary for v in a.per_point] == [v.summary for v in b.per_point]


def test_decompose_mixture():
    k = get_entry("mixture", 1.5).kernel
    rep = classify_process(k, 40, rng=RngStream(2))
    comps = decompose(k, rep)
    assert set(comps) == {"dissipative", "conservative_null", "positive"}
    norms = component_norms(k, comps)
    assert norms["conservative_null"] == 0.0
    assert norms["dissipative"] + norms["positive"] == pytest.approx(2.0, rel=0.05)
    assert norms["positive"] == pytest.approx(1.0, rel=0.1)

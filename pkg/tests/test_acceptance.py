"""End-to-end acceptance: `verify --all` twice, then one test per criterion.

Criteria 1-9 are read from the first run's report; criterion 10 compares
the two reports byte for byte.
"""

import json

import pytest

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def report(verify_runs):
    proc, out = verify_runs[0]
    path = out / "report.json"
    assert path.exists(), proc.stderr
    return json.loads(path.read_text())


def _criterion(report, cid):
    for r in report["results"]["criteria"]:
        if r["id"] == cid:
            return r
    raise AssertionError(f"criterion {cid} missing from the report")


def _check(request, report, cid, show):
    res = _criterion(report, cid)
    m = res["measured"]
    request.node.user_properties.append(("criterion", cid))
    request.node.user_properties.append(("summary", f"{res['title']}: {show(m)}"))
    print(f"criterion {cid}: {'PASS' if res['passed'] else 'FAIL'} {res['title']} {show(m)}")
    assert res["passed"], json.dumps(m, indent=1)[:4000]
    return m


def test_criterion_1_sampler_chf(request, report):
    m = _check(request, report, 1, lambda m: f"max |z| = {m['max_z']:.2f} (limit 4)")
    assert m["max_z"] < 4 and m["draws"] == 10**6


def test_criterion_2_series_vs_cms(request, report):
    m = _check(request, report, 2,
               lambda m: f"KS = {m['ks_statistic']:.4f}, 1% critical {m['critical_1pct']:.4f}")
    assert m["ks_statistic"] < m["critical_1pct"] and m["paths"] == 10**4


def test_criterion_3_flow_axioms(request, report):
    m = _check(request, report, 3, lambda m: f"max residual = {m['max_residual']:.1e}")
    assert m["max_residual"] < 1e-10


def test_criterion_4_classification(request, report):
    def show(m):
        worst = min(r["agreement"] for r in m["entries"].values())
        return f"min agreement = {worst:.3f} over {len(m['entries'])} entries"

    m = _check(request, report, 4, show)
    for name, row in m["entries"].items():
        assert row["majority"] == row["ground_truth"], name
        assert row["agreement"] >= 0.9 and row["undecided"] <= 0.1, name


def test_criterion_5_representation_invariance(request, report):
    m = _check(request, report, 5, lambda m: "changed verdicts = "
               f"{sum(r['changed'] for r in m['entries'].values())} on {m['points']} points/entry")
    assert all(r["changed"] == 0 for r in m["entries"].values())


def test_criterion_6_decomposition(request, report):
    m = _check(request, report, 6, lambda m: "; ".join(
        f"{q} q: shares {r['mass_share']['positive']:.3f}/{r['mass_share']['dissipative']:.3f}"
        for q, r in m["samplers"].items()))
    assert len(m["samplers"]) == 2
    for run in m["samplers"].values():
        for comp in ("positive", "dissipative"):
            assert abs(run["mass_share"][comp] - 0.5) <= 0.1
            assert abs(run["scale_norm"][comp] - 1.0) <= 0.05


def test_criterion_7_ergodicity(request, report):
    m = _check(request, report, 7, lambda m: f"MA(M=100) {m['moving_average']['M100']:.6f}, "
               f"sub-Gaussian final {m['sub_gaussian']['final']:.5f}")
    ma, sg = m["moving_average"], m["sub_gaussian"]
    assert abs(ma["M100"] - ma["target"]) <= 1e-3 and ma["verdict"]["verdict"] == "ergodic"
    assert abs(sg["final"] - sg["target"]) <= 1e-2 and sg["verdict"]["verdict"] == "non-ergodic"


def test_criterion_8_gross(request, report):
    m = _check(request, report, 8, lambda m: "MA ratio "
               f"{m['moving_average']['ratio_4096_to_1']:.2e}, rotation min ratio "
               f"{m['rotation']['min_ratio_to_1']:.3f}")
    assert m["moving_average"]["ratio_4096_to_1"] < 1e-2 and m["rotation"]["min_ratio_to_1"] >= 0.99


def test_criterion_9_maxima(request, report):
    m = _check(request, report, 9, lambda m: f"MA ratio {m['moving_average_ratio']:.3f}, "
               f"MC ratio {m['markov_chain_ratio']:.3f}, table matches {m['joint_table_matches']}")
    assert 0.8 <= m["moving_average_ratio"] <= 1.25
    assert m["markov_chain_ratio"] < 0.6
    for name, row in m["table"].items():
        assert row["conservative_null_signature"] == (row["ground_truth"] == "conservative_null"), name


def test_criterion_10_determinism(request, verify_runs):
    (p1, a), (p2, b) = verify_runs
    first, second = (a / "report.json").read_bytes(), (b / "report.json").read_bytes()
    same = first == second
    request.node.user_properties.append(("criterion", 10))
    request.node.user_properties.append(
        ("summary", f"determinism: reports byte-identical = {same} ({len(first)} bytes)"))
    print(f"criterion 10: {'PASS' if same else 'FAIL'} determinism")
    assert p1.returncode == p2.returncode
    assert same

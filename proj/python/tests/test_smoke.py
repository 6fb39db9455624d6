import math
import os

import pytest

import modfrag

DATA = os.environ.get("MODFRAG_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))

FOUR = [[0, 10, 1, 3], [10, 0, 2, 5], [10, 10, 0, 10], [10, 10, 10, 0]]
L1 = [[0, 0, 3, 0], [0, 0, 2, 2], [1, 0, 0, 0], [0, 1, 0, 0]]
L2 = [[0, 2, 0, 3], [2, 0, 3, 0], [0, 0, 0, 0], [1, 0, 0, 0]]


def test_golden_costs():
    assert modfrag.rebalancing_cost([[0, 1], [2, 0]], [[0, 3], [5, 0]]) == pytest.approx(4.0, abs=1e-9)
    assert modfrag.rebalancing_cost(FOUR, L1) == pytest.approx(10.0, abs=1e-9)
    assert modfrag.rebalancing_cost(FOUR, L2) == pytest.approx(12.0, abs=1e-9)
    assert modfrag.net_flow(L1) == [2, 3, -4, -1]


def test_solve_duals_certify_cost():
    s = modfrag.solve(FOUR, L2)
    b = modfrag.net_flow(L2)
    assert sum(a * x for a, x in zip(s["duals"], b)) == pytest.approx(s["cost"], abs=1e-9)
    assert len(s["support"]) == 2


def test_classify_labels():
    assert modfrag.classify(FOUR, L1)["kind"] == "Resilient"
    l2 = modfrag.classify(FOUR, L2, method="simplex")
    assert l2["kind"] == "Affected"
    assert len(l2["components"]) == 2
    assert l2["max_range_width"] == pytest.approx(1.0, abs=1e-9)
    het = modfrag.classify([[0, 1], [2, 0]], [[0, 10], [10, 0]], [[0, 0.8], [0.2, 0]])
    assert het["kind"] == "LinearDivergent"
    assert het["heterogeneity_gap"] == pytest.approx(18.0, abs=1e-6)
    assert modfrag.classify(FOUR, L2, 3)["kind"] == "Affected"


def test_balanced_two_node_pof():
    est = modfrag.estimate_pof([[0, 1], [1, 0]], [[0, 8], [8, 0]], 100, trials=2000, seed=3, threads=2)
    expect = modfrag.two_node_gamma(8, 8, 1, 0.5, 100)
    assert expect == pytest.approx(2 * math.sqrt(2 * 100 * 0.25 * 16 / math.pi))
    assert abs(est["gamma_mean"] - expect) / expect < 0.05


def test_sweep_is_thread_independent():
    a = modfrag.scaling_sweep(FOUR, L2, [100, 1000, 10000], trials=200, seed=1, threads=1)
    b = modfrag.scaling_sweep(FOUR, L2, [100, 1000, 10000], trials=200, seed=1, threads=4)
    assert a["csv"] == b["csv"]
    assert a["regime_hint"] == "sqrt-growth"


def test_adversarial_matches_bruteforce():
    r = modfrag.adversarial([[0, 1], [2, 0]], [[0, 1], [1, 0]], bruteforce=True)
    assert r["bruteforce_value"] == pytest.approx(3.0)
    assert r["value"] == pytest.approx(3.0)
    assert modfrag.pof_of_split([[0, 1], [2, 0]], [[0, 1], [1, 0]], [[0, 1], [0, 0]]) == pytest.approx(3.0)


def test_bundled_corpus_survey():
    with open(os.path.join(DATA, "corpus", "two_cluster.csv")) as f:
        bundled = f.read()
    assert modfrag.two_cluster_csv(20000, 1) == bundled
    out = modfrag.survey(bundled, stations=[10, 20], windows=[60], seed=7)
    assert out["trips"] == 20000
    assert all(c["p_affected"] >= 0.9 for c in out["cells"])


def test_validation_errors():
    with pytest.raises(ValueError):
        modfrag.rebalancing_cost([[0, 1]], [[0, 1]])
    with pytest.raises(ValueError):
        modfrag.estimate_pof(FOUR, L1, 10, trials=0)

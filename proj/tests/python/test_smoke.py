import math

import pytest

import kolchin


def test_calibrate_kappa():
    a, q = kolchin.calibrate_kappa(100)
    assert q == pytest.approx(0.98)
    assert a == pytest.approx(100 / 98)
    with pytest.raises(ValueError):
        kolchin.calibrate_kappa(2)


def test_nbnb_oracle_at_two_elements():
    parts, probs = kolchin.oracle("nbnb", 2, a=1.0, q=0.5, r=1.0, p=0.5, learn=False)
    table = dict(zip(map(tuple, parts), probs))
    assert table[(0, 0)] == pytest.approx(2 / 3)
    assert table[(0, 1)] == pytest.approx(1 / 3)


def test_oracle_is_normalized():
    parts, probs = kolchin.oracle("dp", 5, theta=0.7)
    assert len(parts) == 52
    assert sum(probs) == pytest.approx(1.0)


def test_reseat_probabilities_match_crp():
    clusters, probs = kolchin.reseat_probabilities("dp", [0, 0, 1, 2], 3, theta=2.0)
    assert len(clusters) == 2
    assert probs == pytest.approx([2 / 5, 1 / 5, 2 / 5])


def test_log_prior_differences_follow_the_oracle():
    kw = dict(a=1.5, q=0.4, alpha=2.0, base_prob=0.5)
    parts, probs = kolchin.oracle("nbd", 4, **kw)
    lp = [kolchin.log_prior("nbd", list(x), **kw) for x in parts]
    assert math.exp(lp[1] - lp[0]) == pytest.approx(probs[1] / probs[0])


def test_pairwise_errors():
    e = kolchin.pairwise_errors([0, 0, 1, 1], [0, 0, 0, 1])
    assert e["true_links"] == 1
    assert e["false_negatives"] == 2
    assert e["false_positives"] == 1
    assert e["fnr"] == pytest.approx(2 / 3)
    assert e["fdr"] == pytest.approx(1 / 2)


def test_max_fraction():
    r = kolchin.max_fraction("crp", 50, 20, seed=3)
    assert r["method"] == "sequential"
    assert len(r["values"]) == 20
    assert all(0 < v <= 1 for v in r["values"])
    assert kolchin.max_fraction("crp", 50, 20, seed=3)["values"] == r["values"]


def test_fit_on_a_tiny_table():
    csv = "record_id,entity_id,name,city\n" + "".join(
        f"r{i},{i // 2},n{i // 2},c{i % 3}\n" for i in range(10)
    )
    samples = kolchin.fit(csv, "nbnb", iterations=60, burn_in=20, thin=10, seed=4)
    assert len(samples) == 4
    for s in samples:
        assert len(s["assignments"]) == 10
        assert set(s["hyper"]) >= {"r", "p"}
    with pytest.raises(KeyError):
        kolchin.fit(csv, "nbnb", iterations=5, colour=1)

import math

import pytest

import vpqlab


def test_version():
    assert vpqlab.__version__ == "0.1.0"


def test_quantile_roundtrip():
    assert vpqlab.normal_quantile(0.5) == 0.0
    assert vpqlab.normal_quantile(0.975) == pytest.approx(1.9599639845400538, abs=1e-10)
    for p in (0.01, 0.2, 0.77, 0.999):
        x = vpqlab.normal_quantile(p)
        assert 0.5 * math.erfc(-x / math.sqrt(2.0)) == pytest.approx(p, abs=1e-8)
    with pytest.raises(ValueError):
        vpqlab.normal_quantile(0.0)


def test_blom_and_anchors():
    assert vpqlab.blom_expected_max(1, 0.0, 1.0) == 0.0
    assert vpqlab.blom_c0(10) == pytest.approx(1.5466352713992302, abs=1e-12)
    assert vpqlab.absorbed_discount(0.99, 0.9) == pytest.approx(149.9873748, abs=1e-4)
    assert vpqlab.absorbed_discount(0.99, 0.5) == pytest.approx(3.88197235565, abs=1e-8)
    assert vpqlab.penalty_weight(1.0, 0.0) == 1.0
    assert vpqlab.penalty_weight(0.1, 20.0) == pytest.approx(1.0 / 3.0)


def test_expected_penalized_modes():
    raw = vpqlab.expected_penalized(10, 1.0, 0.5, 0.0, "none")
    assert raw == pytest.approx(vpqlab.blom_expected_max(10, 1.0, 0.5))
    sub = vpqlab.expected_penalized(10, 1.0, 0.5, 4.0, "p_sub")
    assert sub == pytest.approx(raw - 4.0 * 0.5)
    mul = vpqlab.expected_penalized(10, 1.0, 0.5, 4.0, "p_mul")
    assert mul == pytest.approx(raw / (1.0 + 4.0 * 0.5))
    with pytest.raises(ValueError):
        vpqlab.expected_penalized(10, 1.0, 0.5, 4.0, "clip")


def test_penalized_bootstrap_hand_case():
    qmat = [[1.0, 2.0], [1.2, 1.8], [0.8, 2.2]]
    value, argmax, sigma, w = vpqlab.penalized_bootstrap(
        qmat, [1 / 3, 1 / 3, 1 / 3], "p_mul", lambda_=5.0
    )
    assert value == pytest.approx(1.0)
    assert argmax == 1
    assert sigma == pytest.approx(0.2)
    assert w == pytest.approx(0.5)


def test_uncertainty_and_mixture():
    u = vpqlab.uncertainty([[1.0, 5.0], [3.0, 5.0]])
    assert u[0] == pytest.approx(math.sqrt(2.0))
    assert u[1] == 0.0
    alpha = vpqlab.sample_mixture(4, seed=9)
    assert len(alpha) == 4
    assert sum(alpha) == pytest.approx(1.0, abs=1e-12)
    assert all(a > 0 for a in alpha)
    assert vpqlab.sample_mixture(4, seed=9) == alpha


def test_push_item():
    assert vpqlab.push_item([0, 0, 3], 5) == [0, 3, 5]
    assert vpqlab.push_item([1, 2, 3], 4) == [2, 3, 4]
    with pytest.raises(ValueError):
        vpqlab.push_item([1, 2, 3], 0)  # padding id cannot be pushed


def test_ranking_metrics():
    lists = [[1, 2, 3], [4, 5, 6]]
    truths = [(2, "click"), (6, "click")]
    assert vpqlab.hr_at_k(lists, truths, 3, "click") == 1.0
    assert vpqlab.hr_at_k(lists, truths, 1, "click") == 0.0
    assert vpqlab.ndcg_at_k([[1, 2, 3, 4]], [(3, "purchase")], 4, "purchase") == 0.5


def test_micro_q_star():
    q = vpqlab.micro_q_star(3, seed=7, gamma=0.0)
    assert len(q) == 1 + 3 + 9
    assert all(len(row) == 3 for row in q)
    # gamma 0 collapses Q* onto the reward table: every cell is a reward
    assert all(cell in (0.0, 0.2, 1.0) for row in q for cell in row)

    q9 = vpqlab.micro_q_star(3, seed=7, gamma=0.9)
    # discounting only adds value on top of the immediate reward
    assert all(a >= b for ra, rb in zip(q9, q) for a, b in zip(ra, rb))


def test_penalty_toy_dict():
    toy = vpqlab.penalty_toy(12, 0.0, 1.0, [0.0, 2.0], seed=3)
    assert set(toy) == {"x", "u", "lambdas", "p_sub", "p_mul"}
    assert len(toy["x"]) == 12
    assert toy["x"] == sorted(toy["x"])
    assert len(toy["p_sub"]) == 2
    assert toy["p_sub"][0] == pytest.approx(toy["x"])  # lambda 0 is the identity

import numpy as np
import pytest

from riskac import SoftmaxFamily, SoftmaxPolicy, state_action_onehot

from helpers import tabular_family


def test_zero_theta_gives_uniform():
    fam = tabular_family(4, 9)
    pol = SoftmaxPolicy(fam, np.zeros(fam.dim))
    for s in range(4):
        assert np.allclose(pol.probs(s), np.full(9, 1.0 / 9), atol=1e-15)


def test_single_action_probability_one():
    fam = tabular_family(3, 1)
    pol = SoftmaxPolicy(fam, np.random.default_rng(0).normal(size=fam.dim))
    for s in range(3):
        assert pol.probs(s) == pytest.approx([1.0])
        assert pol.log_grad(s, 0) == pytest.approx(np.zeros(fam.dim))


def test_two_action_softmax_hand_value():
    # theta = (1, 0), one-hot action features: probs = (e, 1) / (e + 1)
    xi = np.zeros((1, 2, 2))
    xi[0, 0, 0] = 1.0
    xi[0, 1, 1] = 1.0
    fam = SoftmaxFamily(xi, temperature=1.0)
    p = SoftmaxPolicy(fam, np.array([1.0, 0.0])).probs(0)
    assert p == pytest.approx([0.7310585786300049, 0.2689414213699951], abs=1e-15)


def test_uniform_two_action_log_grad():
    xi = np.zeros((1, 2, 2))
    xi[0, 0, 0] = 1.0
    xi[0, 1, 1] = 1.0
    for temp in (1.0, 2.5):
        fam = SoftmaxFamily(xi, temperature=temp)
        g = SoftmaxPolicy(fam, np.zeros(2)).log_grad(0, 0)
        assert g == pytest.approx(np.array([0.5, -0.5]) / temp)


def test_log_grad_matches_finite_differences():
    rng = np.random.default_rng(3)
    fam = tabular_family(3, 4)
    theta = rng.normal(size=fam.dim)
    h = 1e-6
    for s in range(3):
        for a in range(4):
            grad = fam.log_grad(theta, s, a)
            fd = np.zeros_like(theta)
            for k in range(theta.size):
                tp, tm = theta.copy(), theta.copy()
                tp[k] += h
                tm[k] -= h
                fd[k] = (np.log(fam.probs(tp, s)[a]) - np.log(fam.probs(tm, s)[a])) / (2 * h)
            assert np.abs(grad - fd).max() < 1e-6


def test_rows_sum_to_one_and_positive():
    rng = np.random.default_rng(4)
    fam = SoftmaxFamily(rng.normal(size=(5, 3, 7)), temperature=0.7)
    theta = rng.normal(size=7) * 3
    table = fam.prob_table(theta)
    assert np.abs(table.sum(axis=1) - 1).max() < 1e-12
    assert (table > 0).all()


def test_positivity_at_extreme_parameters():
    # logit gaps far beyond the exp underflow range must still give
    # strictly positive probabilities
    fam = tabular_family(2, 3)
    theta = np.zeros(fam.dim)
    theta[0] = 1e6
    theta[1] = -1e6
    pol = SoftmaxPolicy(fam, theta)
    for s in range(2):
        p = pol.probs(s)
        assert (p > 0).all()
        assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_baseline_gradient_identity():
    # sum_a pi(i,a) grad log pi(i,a) = 0
    rng = np.random.default_rng(5)
    fam = SoftmaxFamily(rng.normal(size=(4, 5, 6)), temperature=1.3)
    for _ in range(10):
        theta = rng.normal(size=6) * 2
        probs = fam.prob_table(theta)
        glog = fam.log_grad_table(theta)
        total = np.einsum("sa,saf->sf", probs, glog)
        assert np.abs(total).max() < 1e-10


def test_theta_is_copied_and_readonly():
    fam = tabular_family(2, 2)
    theta = np.zeros(fam.dim)
    pol = SoftmaxPolicy(fam, theta)
    theta[0] = 5.0
    assert pol.probs(0) == pytest.approx([0.5, 0.5])
    with pytest.raises(ValueError):
        pol.theta[0] = 1.0


def test_feature_shape_validation():
    with pytest.raises(ValueError):
        SoftmaxFamily(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        SoftmaxFamily(np.zeros((2, 2, 2)), temperature=0.0)
    fam = tabular_family(2, 2)
    with pytest.raises(ValueError):
        SoftmaxPolicy(fam, np.zeros(3))

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT


import decimal

import numpy as np
import pytest

from adversarial_trading import EmptyDatasetError, FormatError, MissingArtifactError
from adversarial_trading.adversarial import (
    EstimatorHyperparams,
    EstimatorSigner,
    GradientSigner,
    SignEstimator,
    as_sign_vector,
    attack_curve,
    epsilon_grid,
    estimate_signs,
    estimator_agreement,
    gradient_signs,
    noise_perturb,
    perturb,
    signs_to_orders,
    train_estimator,
)
from adversarial_trading.lob import DepthSnapshot, Side
from adversarial_trading.surrogate import (
    LabeledDataset,
    LogisticSurrogate,
    is_feasible,
    predict,
    train,
)


D = decimal.Decimal


def _model(weights, bias=0.0, mean=None, scale=None):
    return LogisticSurrogate(
        weights=weights,
        bias=bias,
        mean=np.zeros(80) if mean is None else mean,
        scale=np.ones(80) if scale is None else scale,
    )


def _w():
    w = np.zeros(80)
    w[0], w[1] = 2.0, -1.0
    return w


def _book_like(rows, seed=0):
    """
    Random feasible feature vectors shaped like real books.
    """
    rng = np.random.default_rng(seed)
    X = np.empty((rows, 80))
    X[:, 0:20] = 100 - np.arange(20) * 0.5 + rng.normal(scale=0.2, size=(rows, 20))
    X[:, 20:40] = rng.integers(1, 30, size=(rows, 20))
    X[:, 40:60] = 101 + np.arange(20) * 0.5 + rng.normal(scale=0.2, size=(rows, 20))
    X[:, 60:80] = rng.integers(1, 30, size=(rows, 20))
    depth = rng.integers(5, 21, size=rows)
    for row, d in enumerate(depth):
        X[row, d:20] = -1
        X[row, 20 + d:40] = 0
    return X


def _trained(rows=1500, seed=0):
    X = _book_like(rows, seed)
    rng = np.random.default_rng(seed + 1)
    y = (X[:, 20] - X[:, 60] + rng.normal(scale=2, size=rows) > 0).astype(int)
    dataset = LabeledDataset(X, y, groups=np.arange(rows) // 50)
    train_set, test_set = dataset.split_by_group(0.8)
    return train(train_set), train_set, test_set


def test_gradient_signs_closed_form_down():
    model = _model(_w(), bias=-3.0)
    eta = gradient_signs(model, np.zeros(80))
    assert list(eta[:3]) == [1, -1, 1]
    assert np.all(eta[2:] == 1)


def test_gradient_signs_closed_form_up():
    model = _model(_w(), bias=3.0)
    eta = gradient_signs(model, np.zeros(80))
    assert list(eta[:3]) == [-1, 1, 1]


def test_gradient_signs_match_finite_differences():
    rng = np.random.default_rng(4)
    model = _model(rng.normal(size=80), bias=0.1, scale=rng.uniform(0.5, 2, size=80))
    X = rng.normal(size=(20, 80))
    h = 1e-6
    for x in X:
        classes, _ = predict(model, x)
        z = model.standardize(x)
        for k in range(80):
            e = np.zeros(80)
            e[k] = h
            derivative = (model.loss(z + e, classes) - model.loss(z - e, classes)) / (
                2 * h
            )
            if abs(derivative) > 1e-8:
                assert gradient_signs(model, x)[k] == np.sign(derivative)


def test_gradient_signs_are_plus_or_minus_sign_w():
    rng = np.random.default_rng(5)
    w = rng.normal(size=80)
    w[::7] = 0
    model = _model(w, bias=0.3)
    signs_w = np.where(w < 0, -1, 1)
    for x in rng.normal(size=(50, 80)):
        eta = gradient_signs(model, x)
        classes, _ = predict(model, x)
        expected = -signs_w if classes == 1 else signs_w
        expected = np.where(w == 0, 1, expected)
        np.testing.assert_array_equal(eta, expected)


def test_perturb_standardized_shift():
    model = _model(np.ones(80))
    X = np.full(80, 5.0)
    X[0], X[1] = 1.0, 2.0
    eta = np.ones(80, dtype=np.int8)
    eta[1] = -1
    moved = perturb(model, X, eta, 0.5)
    assert moved[0] == 1.5
    assert moved[1] == 1.5


def test_perturb_zero_epsilon():
    X = _book_like(5)
    model = _model(np.ones(80), mean=X.mean(axis=0), scale=np.full(80, 3.0))
    eta = gradient_signs(model, X)
    np.testing.assert_allclose(perturb(model, X, eta, 0.0), X, rtol=0, atol=1e-12)


def test_perturb_floors_lots():
    model = _model(np.ones(80))
    X = np.zeros(80)
    X[0:20] = 100
    X[40:60] = 101
    moved = perturb(model, X, -np.ones(80), 1.0)
    assert np.all(moved[20:40] == 0)
    assert np.all(moved[60:80] == 0)
    assert is_feasible(moved)


def test_perturb_keeps_padding():
    X = _book_like(30, seed=2)
    model = _model(np.ones(80), mean=X.mean(axis=0), scale=X.std(axis=0))
    rng = np.random.default_rng(0)
    for epsilon in (0.1, 1.0, 5.0):
        moved = noise_perturb(model, X, epsilon, rng)
        padded = X == -1
        np.testing.assert_array_equal(moved[padded], X[padded])
        assert np.all(moved[:, 20:40] >= 0)
        assert np.all(moved[:, 60:80] >= 0)


def test_perturb_is_bounded():
    X = _book_like(30, seed=3)
    model = _model(np.ones(80), mean=X.mean(axis=0), scale=X.std(axis=0) + 0.1)
    eta = gradient_signs(model, X)
    for epsilon in (0.01, 0.3, 2.0):
        moved = perturb(model, X, eta, epsilon)
        shift = np.abs(model.standardize(moved) - model.standardize(X))
        assert np.all(shift <= epsilon + 1e-9)


def test_perturb_negative_epsilon():
    with pytest.raises(ValueError):
        perturb(_model(np.ones(80)), np.zeros(80), np.ones(80), -0.1)


def test_noise_perturb_reproducible_and_full_amplitude():
    model = _model(np.ones(80))
    X = np.full(80, 10.0)
    first = noise_perturb(model, X, 0.25, np.random.default_rng(9))
    second = noise_perturb(model, X, 0.25, np.random.default_rng(9))
    np.testing.assert_array_equal(first, second)
    np.testing.assert_allclose(np.abs(first - X), 0.25)


def test_noise_perturb_is_centered():
    model = _model(np.ones(80))
    X = np.full((2000, 80), 10.0)
    moved = noise_perturb(model, X, 1.0, np.random.default_rng(1))
    assert abs(np.mean(moved - X)) < 0.01


def test_fgsm_increases_the_loss():
    model, _, test_set = _trained()
    Z = model.standardize(test_set.X)
    classes, sigma = predict(model, test_set.X)
    confident = np.abs(sigma - 0.5) > 0.05
    eta = gradient_signs(model, test_set.X)
    moved = perturb(model, test_set.X, eta, 0.05)
    before = model.loss(Z, classes)
    after = model.loss(model.standardize(moved), classes)
    assert np.all(after[confident] >= before[confident] - 1e-12)


def test_epsilon_grid():
    grid = epsilon_grid()
    assert len(grid) == 20
    assert grid[0] == pytest.approx(0.01)
    assert grid[-1] == pytest.approx(2.0)
    assert np.all(np.diff(grid) > 0)


def test_attack_curve():
    model, _, test_set = _trained()
    curve = attack_curve(
        model, test_set, [0.0] + list(epsilon_grid()), np.random.default_rng(0)
    )
    assert curve.points[0].accuracy_adversarial == 1.0
    assert curve.points[0].accuracy_noise == 1.0
    for point in curve.points:
        assert 0 <= point.accuracy_adversarial <= 1
        assert point.accuracy_adversarial <= point.accuracy_noise + 0.02
    accuracies = [p.accuracy_adversarial for p in curve.points]
    assert all(b <= a + 0.02 for a, b in zip(accuracies, accuracies[1:]))
    lines = curve.to_csv().splitlines()
    assert lines[0] == "epsilon,acc_adversarial,acc_noise"
    assert len(lines) == 22


def test_attack_curve_rejects_unsorted_grid():
    model, _, test_set = _trained(rows=300)
    with pytest.raises(ValueError):
        attack_curve(model, test_set, [0.5, 0.1], np.random.default_rng(0))


def test_attack_curve_without_correct_samples():
    model = _model(np.zeros(80), bias=5.0)
    dataset = LabeledDataset(np.zeros((4, 80)), np.zeros(4))
    with pytest.raises(EmptyDatasetError):
        attack_curve(model, dataset, [0.1], np.random.default_rng(0))


def test_estimator_memorizes_a_single_sample():
    model = _model(_w(), bias=-3.0)
    dataset = LabeledDataset(np.zeros((1, 80)), [0])
    estimator = train_estimator(model, dataset, EstimatorHyperparams(trees=5))
    np.testing.assert_array_equal(
        estimate_signs(estimator, np.zeros(80)), gradient_signs(model, np.zeros(80))
    )


def test_estimator_memorizes_training_rows():
    model, train_set, _ = _trained(rows=400)
    estimator = train_estimator(
        model, train_set, EstimatorHyperparams(trees=25, max_depth=None)
    )
    agreement = np.mean(
        estimate_signs(estimator, train_set.X) == gradient_signs(model, train_set.X)
    )
    assert agreement >= 0.99


def test_estimator_is_deterministic():
    model, train_set, test_set = _trained(rows=400)
    hyperparams = EstimatorHyperparams(trees=10, seed=3)
    first = train_estimator(model, train_set, hyperparams)
    second = train_estimator(model, train_set, hyperparams)
    np.testing.assert_array_equal(first.votes(test_set.X), second.votes(test_set.X))
    np.testing.assert_array_equal(
        estimate_signs(first, test_set.X), estimate_signs(first, test_set.X)
    )


def test_estimator_agreement_on_held_out_rows():
    model, train_set, test_set = _trained(rows=3000)
    estimator = train_estimator(model, train_set)
    agreement = estimator_agreement(estimator, model, test_set)
    assert agreement.per_coordinate.shape == (80,)
    assert agreement.mean_non_constant >= 0.90


def test_estimator_save_load(tmp_path):
    model, train_set, test_set = _trained(rows=400)
    estimator = train_estimator(model, train_set, EstimatorHyperparams(trees=7))
    path = tmp_path / "estimator.txt"
    estimator.save(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "adversarial-trading-estimator 1.0"
    assert lines[1] == "outputs 80"
    assert lines[2] == "trees 7"
    assert lines[-1] == "end"
    loaded = SignEstimator.load(path)
    assert loaded.trees == 7
    np.testing.assert_array_equal(loaded.votes(test_set.X), estimator.votes(test_set.X))


def test_estimator_load_missing(tmp_path):
    with pytest.raises(MissingArtifactError):
        SignEstimator.load(tmp_path / "estimator.txt")


@pytest.mark.parametrize(
    "text",
    [
        "something-else 1.0\n",
        "adversarial-trading-estimator 2.0\noutputs 80\ntrees 0\nend\n",
        "adversarial-trading-estimator 1.0\noutputs 40\ntrees 0\nend\n",
        "adversarial-trading-estimator 1.0\noutputs 80\ntrees 1\n"
        "tree 1\n0 leaf +-\nend\n",
        "adversarial-trading-estimator 1.0\noutputs 80\ntrees 0\n",
    ],
)
def test_estimator_load_invalid(tmp_path, text):
    path = tmp_path / "estimator.txt"
    path.write_text(text)
    with pytest.raises(FormatError):
        SignEstimator.load(path)


def test_signers():
    model = _model(_w(), bias=-3.0)
    x = np.zeros(80)
    np.testing.assert_array_equal(GradientSigner(model)(x), gradient_signs(model, x))
    estimator = train_estimator(
        model, LabeledDataset(np.zeros((1, 80)), [0]), EstimatorHyperparams(trees=3)
    )
    np.testing.assert_array_equal(
        EstimatorSigner(estimator)(x), gradient_signs(model, x)
    )


_BOOK = DepthSnapshot(
    bid_levels=((D(100), 5), (D(99), 3), (D(98), 2)),
    offer_levels=((D(101), 4), (D(102), 1), (D(103), 6)),
)


def test_signs_to_orders_bid_lots_plus():
    eta = -np.ones(80, dtype=np.int8)
    eta[20] = 1
    eta[60:80] = 1
    intent = signs_to_orders(eta, DepthSnapshot(bid_levels=((D(100), 5),)))
    assert [(q.side, q.price, q.quantity) for q in intent.quotes] == [
        (Side.BID, D(100), 1)
    ]


def test_signs_to_orders_bid_lots_minus():
    eta = np.ones(80, dtype=np.int8)
    eta[21] = -1
    intent = signs_to_orders(eta, _BOOK)
    quotes = [(q.side, q.price, q.quantity) for q in intent.quotes]
    assert (Side.OFFER, D(102), 1) in quotes


def test_signs_to_orders_offer_lots():
    eta = np.ones(80, dtype=np.int8)
    eta[60] = 1
    eta[61] = -1
    quotes = [(q.side, q.price) for q in signs_to_orders(eta, _BOOK).quotes]
    assert (Side.OFFER, D(101)) in quotes
    assert (Side.BID, D(99)) in quotes


def test_signs_to_orders_ignores_prices_and_padding():
    rng = np.random.default_rng(0)
    for _ in range(50):
        eta = np.where(rng.random(80) < 0.5, 1, -1)
        intent = signs_to_orders(eta, _BOOK, live_order_ids={9, 4})
        assert len(intent.quotes) == 6
        assert intent.cancels == (4, 9)
        flipped = eta.copy()
        flipped[0:20] *= -1
        flipped[40:60] *= -1
        assert signs_to_orders(flipped, _BOOK).quotes == intent.quotes


def test_signs_to_orders_limits():
    eta = np.ones(80, dtype=np.int8)
    deep = DepthSnapshot(
        tuple((D(100 - i), 1) for i in range(25)),
        tuple((D(101 + i), 1) for i in range(25)),
    )
    assert len(signs_to_orders(eta, deep).quotes) == 40
    assert signs_to_orders(eta, DepthSnapshot()).quotes == ()


@pytest.mark.parametrize(
    "values",
    [np.ones(79), np.zeros(80), np.full(80, 2)],
)
def test_invalid_sign_vector(values):
    with pytest.raises(ValueError):
        as_sign_vector(values)

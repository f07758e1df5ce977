# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import dataclasses
import pathlib

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from . import EmptyDatasetError, FormatError, MissingArtifactError
from .agents import Quote, QuoteIntent
from .lob import Side
from .logger import LOGGER
from .surrogate import (
    BID_LOTS,
    FEATURE_SIZE,
    LOTS_COORDINATES,
    OFFER_LOTS,
    padding_mask,
    predict,
)
from .util import Version, check_format_version


ESTIMATOR_MAGIC = "adversarial-trading-estimator"
ESTIMATOR_VERSION = Version(1, 0)


def as_sign_vector(values):
    """
    Validate and convert a sign vector: 80 coordinates, each +1 or -1.

    :rtype: numpy.ndarray
    """
    signs = np.asarray(values).astype(np.int8)
    if signs.shape[-1] != FEATURE_SIZE or not np.all(np.abs(signs) == 1):
        raise ValueError("a sign vector has 80 coordinates in {-1, +1}")
    return signs


def _signs(values):
    # zero resolves to +1
    return np.where(values < 0, -1, 1).astype(np.int8)


def gradient_signs(model, X):
    """
    Signs of the gradient of the surrogate loss with respect to the
    standardized features, taking the predicted class as the target.

    For the logistic surrogate this is `sign((sigma - f(x)) * w)`; zero
    coordinates resolve to +1.

    :param model: The surrogate
    :type model: adversarial_trading.surrogate.LogisticSurrogate
    :param X: One feature vector or a matrix of them (raw features)
    :rtype: numpy.ndarray
    """
    classes, sigma = predict(model, X)
    return _signs(np.multiply.outer(sigma - classes, model.weights))


def _check_epsilon(epsilon):
    if epsilon < 0:
        raise ValueError(f"epsilon must not be negative, got {epsilon}")


def perturb(model, X, eta, epsilon):
    """
    Move `X` by `epsilon * eta` in standardized space and map it back to
    raw features, keeping it feasible: padding coordinates are not changed
    and lots are floored at 0.

    :param model: The surrogate providing the standardization
    :param X: Raw features
    :param eta: Sign vector(s)
    :param epsilon: The L-infinity amplitude, in standardized units
    :rtype: numpy.ndarray
    """
    _check_epsilon(epsilon)
    X = np.asarray(X, dtype=float)
    moved = model.destandardize(model.standardize(X) + epsilon * np.asarray(eta))
    moved = np.where(LOTS_COORDINATES, np.maximum(moved, 0.0), moved)
    return np.where(padding_mask(X), X, moved)


def noise_perturb(model, X, epsilon, rng):
    """
    Same as `perturb`, with uniformly random signs.
    """
    X = np.asarray(X, dtype=float)
    eta = np.where(rng.random(X.shape) < 0.5, 1, -1).astype(np.int8)
    return perturb(model, X, eta, epsilon)


def epsilon_grid(minimum=0.01, maximum=2.0, points=20):
    """
    Log-spaced amplitudes for the attack curve.
    """
    return np.geomspace(minimum, maximum, points)


@dataclasses.dataclass(frozen=True)
class AttackPoint:
    epsilon: float
    accuracy_adversarial: float
    accuracy_noise: float


@dataclasses.dataclass(frozen=True)
class AttackCurve:
    """
    Accuracy of the surrogate on initially well predicted samples, under
    adversarial and noise perturbations of growing amplitude.
    """

    points: tuple
    samples: int

    def to_csv(self):
        lines = ["epsilon,acc_adversarial,acc_noise"]
        for p in self.points:
            lines.append(
                f"{p.epsilon!r},{p.accuracy_adversarial!r},{p.accuracy_noise!r}"
            )
        return "\n".join(lines) + "\n"


def attack_curve(model, dataset, epsilons, rng):
    """
    Compute the accuracy of the surrogate under FGSM and noise
    perturbations, on the samples of `dataset` it predicts correctly.

    :param model: The surrogate
    :param dataset: The samples
    :type dataset: adversarial_trading.surrogate.LabeledDataset
    :param epsilons: Strictly increasing, non negative amplitudes
    :param rng: The generator of the noise signs
    :type rng: numpy.random.Generator
    :rtype: AttackCurve
    """
    epsilons = [float(e) for e in epsilons]
    if any(b <= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be strictly increasing")
    for epsilon in epsilons:
        _check_epsilon(epsilon)
    classes, _ = predict(model, dataset.X)
    correct = dataset.subset(classes == dataset.y)
    if len(correct) == 0:
        raise EmptyDatasetError("no correctly predicted sample")
    LOGGER.info(
        "attack curve on %d correctly predicted samples out of %d",
        len(correct),
        len(dataset),
    )
    eta = gradient_signs(model, correct.X)
    points = []
    for epsilon in epsilons:
        adversarial, _ = predict(model, perturb(model, correct.X, eta, epsilon))
        noisy, _ = predict(model, noise_perturb(model, correct.X, epsilon, rng))
        point = AttackPoint(
            epsilon=epsilon,
            accuracy_adversarial=float(np.mean(adversarial == correct.y)),
            accuracy_noise=float(np.mean(noisy == correct.y)),
        )
        LOGGER.debug("%s", point)
        points.append(point)
    return AttackCurve(points=tuple(points), samples=len(correct))


@dataclasses.dataclass
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_signs: np.ndarray

    @classmethod
    def from_sklearn(cls, classifier):
        tree = classifier.tree_
        feature = np.where(tree.children_left < 0, -1, tree.feature).astype(np.int64)
        leaf_signs = np.zeros((tree.node_count, FEATURE_SIZE), dtype=np.int8)
        for k, classes in enumerate(classifier.classes_):
            best = np.argmax(tree.value[:, k, : len(classes)], axis=1)
            leaf_signs[:, k] = classes[best]
        leaf_signs[feature >= 0] = 0
        return cls(
            feature=feature,
            threshold=tree.threshold.astype(float),
            left=tree.children_left.astype(np.int64),
            right=tree.children_right.astype(np.int64),
            leaf_signs=leaf_signs,
        )

    def apply(self, X):
        # same comparison as the trees were fitted with: float32 features
        X = np.asarray(X, dtype=np.float32).astype(float)
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            feature = self.feature[node]
            rows = np.nonzero(feature >= 0)[0]
            if len(rows) == 0:
                return node
            current = node[rows]
            go_left = X[rows, feature[rows]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])


@dataclasses.dataclass(frozen=True)
class EstimatorHyperparams:
    trees: int = 50
    max_depth: int = 12
    min_samples_leaf: int = 1
    max_features: str = "sqrt"
    seed: int = 0


class SignEstimator:
    """
    Ensemble of decision trees mapping raw features to the 80 gradient
    signs; each coordinate is the majority vote of the trees, ties
    resolving to +1.
    """

    def __init__(self, trees):
        self._trees = list(trees)

    @property
    def trees(self):
        return len(self._trees)

    def votes(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros((len(X), FEATURE_SIZE), dtype=np.int64)
        for tree in self._trees:
            total += tree.leaf_signs[tree.apply(X)]
        return total

    def save(self, path):
        """
        Write the estimator as plain text.

        The grammar is documented in `docs/formats.md`.
        """
        lines = [
            f"{ESTIMATOR_MAGIC} {ESTIMATOR_VERSION}",
            f"outputs {FEATURE_SIZE}",
            f"trees {len(self._trees)}",
        ]
        for tree in self._trees:
            lines.append(f"tree {len(tree.feature)}")
            for node in range(len(tree.feature)):
                if tree.feature[node] >= 0:
                    lines.append(
                        f"{node} split {tree.feature[node]} "
                        f"{float(tree.threshold[node])!r} "
                        f"{tree.left[node]} {tree.right[node]}"
                    )
                else:
                    signs = "".join(
                        "+" if s > 0 else "-" for s in tree.leaf_signs[node]
                    )
                    lines.append(f"{node} leaf {signs}")
        lines.append("end")
        pathlib.Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        path = pathlib.Path(path)
        if not path.exists():
            raise MissingArtifactError(path)
        lines = iter(path.read_text().splitlines())
        try:
            magic, version = next(lines).split()
            if magic != ESTIMATOR_MAGIC:
                raise FormatError(f"{path}: not a sign estimator file")
            check_format_version(path, version, ESTIMATOR_VERSION)
            outputs = int(next(lines).split()[1])
            if outputs != FEATURE_SIZE:
                raise FormatError(f"{path}: {outputs} outputs, expected {FEATURE_SIZE}")
            count = int(next(lines).split()[1])
            trees = [cls._read_tree(lines) for _ in range(count)]
            if next(lines) != "end":
                raise FormatError(f"{path}: missing end marker")
        except (StopIteration, ValueError, IndexError) as e:
            raise FormatError(f"{path}: malformed estimator file ({e})") from None
        return cls(trees)

    @staticmethod
    def _read_tree(lines):
        keyword, size = next(lines).split()
        if keyword != "tree":
            raise ValueError(f"expected a tree, got {keyword!r}")
        size = int(size)
        feature = np.full(size, -1, dtype=np.int64)
        threshold = np.zeros(size)
        left = np.full(size, -1, dtype=np.int64)
        right = np.full(size, -1, dtype=np.int64)
        leaf_signs = np.zeros((size, FEATURE_SIZE), dtype=np.int8)
        for _ in range(size):
            fields = next(lines).split()
            node = int(fields[0])
            if fields[1] == "split":
                feature[node] = int(fields[2])
                threshold[node] = float(fields[3])
                left[node] = int(fields[4])
                right[node] = int(fields[5])
            elif fields[1] == "leaf" and len(fields[2]) == FEATURE_SIZE:
                leaf_signs[node] = [1 if c == "+" else -1 for c in fields[2]]
            else:
                raise ValueError(f"invalid node line {' '.join(fields)!r}")
        return _Tree(feature, threshold, left, right, leaf_signs)


def train_estimator(model, dataset, hyperparams=EstimatorHyperparams()):
    """
    Distill the gradient signs of the surrogate into a random forest.

    The targets are `gradient_signs(model, X)`; each tree is fitted on a
    bootstrap sample of the rows.

    :param model: The surrogate
    :param dataset: The rows to learn from (labels are not used)
    :type hyperparams: EstimatorHyperparams
    :rtype: SignEstimator
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot train the estimator on an empty dataset")
    targets = gradient_signs(model, dataset.X)
    rng = np.random.default_rng(hyperparams.seed)
    trees = []
    for _ in range(hyperparams.trees):
        rows = rng.integers(0, len(dataset), size=len(dataset))
        classifier = DecisionTreeClassifier(
            max_depth=hyperparams.max_depth,
            min_samples_leaf=hyperparams.min_samples_leaf,
            max_features=hyperparams.max_features,
            random_state=int(rng.integers(0, 2**31 - 1)),
        )
        classifier.fit(dataset.X[rows], targets[rows])
        trees.append(_Tree.from_sklearn(classifier))
    LOGGER.info("sign estimator: %d trees on %d rows", len(trees), len(dataset))
    return SignEstimator(trees)


def estimate_signs(estimator, X):
    """
    Predict the gradient signs of one feature vector (or a matrix of them).

    :rtype: numpy.ndarray
    """
    single = np.asarray(X).ndim == 1
    signs = _signs(estimator.votes(X))
    return signs[0] if single else signs


@dataclasses.dataclass(frozen=True)
class EstimatorAgreement:
    per_coordinate: np.ndarray
    non_constant: np.ndarray
    mean_non_constant: float


def estimator_agreement(estimator, model, dataset):
    """
    Compare the estimator with the exact gradient signs on a dataset.

    The mean is taken over the coordinates whose exact sign is not the
    same on every row.

    :rtype: EstimatorAgreement
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot measure agreement on an empty dataset")
    exact = gradient_signs(model, dataset.X)
    estimated = estimate_signs(estimator, dataset.X)
    per_coordinate = np.mean(exact == estimated, axis=0)
    non_constant = np.any(exact != exact[0], axis=0)
    if np.any(non_constant):
        mean = float(np.mean(per_coordinate[non_constant]))
    else:
        mean = float(np.mean(per_coordinate))
    return EstimatorAgreement(per_coordinate, non_constant, mean)


class GradientSigner:
    """
    Sign source of the adversarial agent using the exact surrogate gradient.
    """

    def __init__(self, model):
        self.model = model

    def __call__(self, x):
        return gradient_signs(self.model, x)


class EstimatorSigner:
    """
    Sign source of the adversarial agent using the sign estimator.
    """

    def __init__(self, estimator):
        self.estimator = estimator

    def __call__(self, x):
        return estimate_signs(self.estimator, x)


def signs_to_orders(eta, snapshot, live_order_ids=()):
    """
    Turn a sign vector into 1-lot orders.

    Price coordinates are ignored. For a bid lots coordinate at depth `d`,
    +1 adds a bid at the bid price of depth `d` and -1 an offer at the offer
    price of depth `d`; offer lots coordinates work the other way around.
    Depths missing from the book produce no order. All the live orders are
    cancelled.

    :param eta: The sign vector
    :param snapshot: The book at the start of the round
    :type snapshot: adversarial_trading.lob.DepthSnapshot
    :param live_order_ids: The orders placed in the previous rounds
    :rtype: adversarial_trading.agents.QuoteIntent
    """
    eta = as_sign_vector(eta)
    quotes = []
    for lots, towards in ((BID_LOTS, Side.BID), (OFFER_LOTS, Side.OFFER)):
        for depth, sign in enumerate(eta[lots]):
            side = towards if sign > 0 else towards.opposite
            levels = snapshot.levels(side)
            if depth < len(levels):
                quotes.append(Quote(side, levels[depth][0], 1))
    return QuoteIntent(quotes=tuple(quotes), cancels=tuple(sorted(live_order_ids)))

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import dataclasses
import pathlib

import numpy as np
import toml

from . import EmptyDatasetError, FormatError, MissingArtifactError, TrainingError
from .logger import LOGGER
from .util import Version, check_format_version


DEPTH = 20
FEATURE_SIZE = 4 * DEPTH
LAYOUT_TAG = "bid-prices:20,bid-lots:20,offer-prices:20,offer-lots:20"

BID_PRICES = slice(0, DEPTH)
BID_LOTS = slice(DEPTH, 2 * DEPTH)
OFFER_PRICES = slice(2 * DEPTH, 3 * DEPTH)
OFFER_LOTS = slice(3 * DEPTH, 4 * DEPTH)

PRICE_PADDING = -1.0
LOTS_PADDING = 0.0

PRICE_COORDINATES = np.zeros(FEATURE_SIZE, dtype=bool)
PRICE_COORDINATES[BID_PRICES] = True
PRICE_COORDINATES[OFFER_PRICES] = True
LOTS_COORDINATES = ~PRICE_COORDINATES

SURROGATE_FORMAT = "adversarial-trading-surrogate"
SURROGATE_VERSION = Version(1, 0)


def featurize(snapshot):
    """
    Build the feature vector of a book snapshot.

    The first 20 levels of each side are laid out as bid prices, bid lots,
    offer prices and offer lots; missing levels are padded with -1 for
    prices and 0 for lots, deeper levels are dropped.

    :param snapshot: The book snapshot
    :type snapshot: adversarial_trading.lob.DepthSnapshot
    :return: The 80 features
    :rtype: numpy.ndarray
    """
    x = np.empty(FEATURE_SIZE)
    x[PRICE_COORDINATES] = PRICE_PADDING
    x[LOTS_COORDINATES] = LOTS_PADDING
    for prices, lots, levels in (
        (BID_PRICES, BID_LOTS, snapshot.bid_levels),
        (OFFER_PRICES, OFFER_LOTS, snapshot.offer_levels),
    ):
        for depth, (price, quantity) in enumerate(levels[:DEPTH]):
            x[prices.start + depth] = float(price)
            x[lots.start + depth] = quantity
    return x


def padding_mask(x):
    """
    Return the coordinates of `x` that are padding: the -1 prices and
    the lots paired with them.
    """
    x = np.asarray(x)
    mask = np.zeros(x.shape, dtype=bool)
    for prices, lots in ((BID_PRICES, BID_LOTS), (OFFER_PRICES, OFFER_LOTS)):
        padded = x[..., prices] == PRICE_PADDING
        mask[..., prices] = padded
        mask[..., lots] = padded
    return mask


def is_feasible(x):
    """
    Whether `x` satisfies the feature vector invariants: lots are not
    negative, prices are positive or padding, padded prices have no lots.
    """
    x = np.asarray(x)
    if x.shape[-1] != FEATURE_SIZE:
        return False
    prices = x[..., PRICE_COORDINATES]
    lots = x[..., LOTS_COORDINATES]
    if np.any(lots < 0):
        return False
    if np.any((prices <= 0) & (prices != PRICE_PADDING)):
        return False
    return not np.any((prices == PRICE_PADDING) & (lots != 0))


def label(m_t, m_next):
    """
    Direction of the next move of the reference price: 1 for up, 0 for
    down, `None` when the price did not move (the row is skipped).
    """
    if m_next > m_t:
        return 1
    if m_next < m_t:
        return 0
    return None


@dataclasses.dataclass
class LabeledDataset:
    """
    Rows of features with their direction label, and the index of the
    simulation each row comes from.
    """

    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, FEATURE_SIZE)
        self.y = np.asarray(self.y, dtype=int).reshape(-1)
        if self.groups is None:
            self.groups = np.zeros(len(self.y), dtype=int)
        self.groups = np.asarray(self.groups, dtype=int).reshape(-1)
        if not len(self.X) == len(self.y) == len(self.groups):
            raise ValueError("features, labels and groups have different lengths")

    def __len__(self):
        return len(self.y)

    def subset(self, mask):
        return LabeledDataset(self.X[mask], self.y[mask], self.groups[mask])

    def split_by_group(self, train_fraction=0.8):
        """
        Split into train and test datasets by simulation: the first
        `train_fraction` of the simulations (in index order) go to training.
        """
        unique = np.unique(self.groups)
        n_train = int(round(train_fraction * len(unique)))
        if len(unique) > 1:
            n_train = min(max(n_train, 1), len(unique) - 1)
        train_groups = unique[:n_train]
        train_mask = np.isin(self.groups, train_groups)
        return self.subset(train_mask), self.subset(~train_mask)

    def write_csv(self, path):
        header = ",".join(["sim"] + [f"x{i}" for i in range(FEATURE_SIZE)] + ["label"])
        data = np.column_stack([self.groups, self.X, self.y])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")

    @classmethod
    def read_csv(cls, path):
        path = pathlib.Path(path)
        if not path.exists():
            raise MissingArtifactError(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != FEATURE_SIZE + 2:
            raise FormatError(f"{path}: expected {FEATURE_SIZE + 2} columns")
        return cls(X=data[:, 1:-1], y=data[:, -1], groups=data[:, 0])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def nll(z, y):
    """
    Negative log-likelihood of the logistic model for logits `z` and
    labels `y`, per sample.
    """
    return np.logaddexp(0.0, z) - y * z


@dataclasses.dataclass
class LogisticSurrogate:
    """
    Logistic regression predicting the direction of the next move.

    The weights apply to standardized features; `mean` and `scale` are the
    standardization statistics of the training split.
    """

    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        self.bias = float(self.bias)
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise TrainingError("non-finite surrogate parameters")

    def standardize(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def destandardize(self, Z):
        return np.asarray(Z, dtype=float) * self.scale + self.mean

    def logit(self, Z):
        return np.asarray(Z, dtype=float) @ self.weights + self.bias

    def loss(self, Z, y):
        """
        Per-sample loss on standardized features.
        """
        return nll(self.logit(Z), y)

    def input_gradient(self, Z, y):
        """
        Gradient of the loss with respect to the standardized features.
        """
        sigma = _sigmoid(self.logit(Z))
        return np.multiply.outer(sigma - y, self.weights)

    def save(self, path):
        document = {
            "format": SURROGATE_FORMAT,
            "version": str(SURROGATE_VERSION),
            "layout": LAYOUT_TAG,
            "bias": self.bias,
            "weights": self.weights.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "training": self.metadata,
        }
        pathlib.Path(path).write_text(toml.dumps(document))

    @classmethod
    def load(cls, path):
        path = pathlib.Path(path)
        if not path.exists():
            raise MissingArtifactError(path)
        try:
            document = toml.loads(path.read_text())
        except toml.TomlDecodeError as e:
            raise FormatError(f"{path}: {e}") from None
        if document.get("format") != SURROGATE_FORMAT:
            raise FormatError(f"{path}: not a surrogate model file")
        check_format_version(path, document.get("version"), SURROGATE_VERSION)
        if document.get("layout") != LAYOUT_TAG:
            raise FormatError(f"{path}: unsupported layout {document.get('layout')}")
        return cls(
            weights=document["weights"],
            bias=document["bias"],
            mean=document["mean"],
            scale=document["scale"],
            metadata=document.get("training", {}),
        )


@dataclasses.dataclass(frozen=True)
class SurrogateHyperparams:
    l2: float = 1.0
    tolerance: float = 1e-8
    max_iter: int = 100


def objective(params, Z, y, l2):
    """
    Training objective: summed negative log-likelihood plus the L2 penalty
    on the weights. `params` holds the weights followed by the bias.
    """
    w, b = params[:-1], params[-1]
    return float(np.sum(nll(Z @ w + b, y)) + 0.5 * l2 * (w @ w))


def objective_gradient(params, Z, y, l2):
    w, b = params[:-1], params[-1]
    residual = _sigmoid(Z @ w + b) - y
    grad = np.empty_like(params)
    grad[:-1] = Z.T @ residual + l2 * w
    grad[-1] = np.sum(residual)
    return grad


def _fit_standardization(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    constant = scale == 0
    if np.any(constant):
        LOGGER.debug("%d constant feature coordinates", int(np.sum(constant)))
    scale[constant] = 1.0
    return mean, scale


def train(dataset, hyperparams=SurrogateHyperparams()):
    """
    Fit the logistic surrogate on a dataset.

    The features are standardized with statistics of `dataset` only, then
    the objective is minimized with Newton steps and a backtracking line
    search, so the objective never increases between iterations.

    Raises `EmptyDatasetError` on an empty dataset, `TrainingError` if it
    has a single class.

    :param dataset: The training split
    :type dataset: LabeledDataset
    :type hyperparams: SurrogateHyperparams
    :rtype: LogisticSurrogate
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if len(np.unique(dataset.y)) < 2:
        raise TrainingError("the dataset has a single class")
    mean, scale = _fit_standardization(dataset.X)
    Z = (dataset.X - mean) / scale
    y = dataset.y.astype(float)
    Z1 = np.column_stack([Z, np.ones(len(Z))])
    penalty = np.full(Z1.shape[1], hyperparams.l2)
    penalty[-1] = 0.0

    params = np.zeros(Z1.shape[1])
    current = objective(params, Z, y, hyperparams.l2)
    history = [current]
    for iteration in range(1, hyperparams.max_iter + 1):
        grad = objective_gradient(params, Z, y, hyperparams.l2)
        sigma = _sigmoid(Z1 @ params)
        hessian = (Z1.T * (sigma * (1 - sigma))) @ Z1 + np.diag(penalty)
        step = np.linalg.solve(hessian + 1e-12 * np.eye(len(params)), grad)
        t = 1.0
        while True:
            candidate = params - t * step
            value = objective(candidate, Z, y, hyperparams.l2)
            if value <= current - 1e-4 * t * (grad @ step) or t < 1e-10:
                break
            t *= 0.5
        if value > current:
            break
        params = candidate
        improvement = current - value
        current = value
        history.append(current)
        LOGGER.debug("iteration %d: objective %.10g", iteration, current)
        if improvement <= hyperparams.tolerance * max(1.0, abs(current)):
            break

    LOGGER.info(
        "surrogate trained on %d rows in %d iterations, objective %.6g",
        len(dataset),
        len(history) - 1,
        current,
    )
    return LogisticSurrogate(
        weights=params[:-1],
        bias=params[-1],
        mean=mean,
        scale=scale,
        metadata={
            "l2": hyperparams.l2,
            "tolerance": hyperparams.tolerance,
            "rows": len(dataset),
            "iterations": len(history) - 1,
            "objective_history": history,
        },
    )


def predict(model, X, standardized=False):
    """
    Predict the direction of the next move.

    :param model: The surrogate
    :type model: LogisticSurrogate
    :param X: One feature vector or a matrix of them
    :param standardized: Whether `X` is already standardized
    :return: The classes (1 when the probability is at least one half)
        and the probabilities of an up move
    :rtype: tuple
    """
    Z = np.asarray(X, dtype=float) if standardized else model.standardize(X)
    sigma = _sigmoid(model.logit(Z))
    return (sigma >= 0.5).astype(int), sigma


@dataclasses.dataclass(frozen=True)
class Metrics:
    precision: float
    accuracy: float
    rows: int


def evaluate(model, dataset):
    """
    Precision of the up class and accuracy of the surrogate on a dataset.

    :rtype: Metrics
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    predicted, _ = predict(model, dataset.X)
    true_positive = int(np.sum((predicted == 1) & (dataset.y == 1)))
    false_positive = int(np.sum((predicted == 1) & (dataset.y == 0)))
    if true_positive + false_positive == 0:
        LOGGER.warning("no up prediction: precision set to 0")
        precision = 0.0
    else:
        precision = true_positive / (true_positive + false_positive)
    accuracy = float(np.mean(predicted == dataset.y))
    return Metrics(precision=precision, accuracy=accuracy, rows=len(dataset))

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT


class AdversarialTradingError(RuntimeError):
    """
    Base class for the errors raised by adversarial-trading.
    """


class ConfigError(AdversarialTradingError):
    """
    The configuration is not valid.
    """


class MissingArtifactError(ConfigError):
    """
    A required artifact (dataset, surrogate model, sign estimator) is missing.
    """

    def __init__(self, path):
        super().__init__(f"missing artifact: {path}")
        self.path = path


class OrderRejectedError(AdversarialTradingError):
    """
    The order book refused an order.
    """


class TrainingError(AdversarialTradingError):
    """
    A model cannot be trained on the given dataset.
    """


class EmptyDatasetError(AdversarialTradingError):
    """
    An operation needing samples got none.
    """


class ScaleMismatchError(AdversarialTradingError):
    """
    Statistics produced at different scales (or seeds) were compared.
    """


class FormatError(AdversarialTradingError):
    """
    A model or estimator file cannot be read.
    """

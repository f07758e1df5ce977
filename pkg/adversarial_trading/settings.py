# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import decimal
import pathlib

from dynaconf import Dynaconf, ValidationError, Validator

from . import ConfigError
from .adversarial import EstimatorHyperparams, epsilon_grid
from .agents import AgentParams
from .experiment import ExperimentConfig, Setup
from .sim import SimulationConfig
from .surrogate import SurrogateHyperparams


DEFAULT_SETTINGS_FILE = "adversarial-trading.toml"

SCALES = {
    "desk": {"batches": 2, "sims_per_batch": 100},
    "paper": {"batches": 10, "sims_per_batch": 500},
}

_NUMBER = (int, float)


def _decimal(value):
    return decimal.Decimal(str(value))


class Settings:
    """
    Configuration of the simulations, the models and the experiments.

    Values come from a flat TOML file and from environment variables
    prefixed with `ADVERSARIAL_TRADING_`; see `docs/config.md` for the keys.
    Invalid values raise `ConfigError`.
    """

    def __init__(self, config_file=None):
        if config_file is not None:
            if not pathlib.Path(config_file).exists():
                raise ConfigError(f"configuration file {config_file} not found")
            settings_files = [str(config_file)]
        else:
            settings_files = [DEFAULT_SETTINGS_FILE]
        self._settings = Dynaconf(
            envvar_prefix="ADVERSARIAL_TRADING",
            settings_files=settings_files,
        )
        self._settings.validators.register(
            Validator("seed", is_type_of=int, gte=0, default=42),
            Validator("scale", is_in=list(SCALES), default="desk"),
            Validator("setup", is_in=[s.value for s in Setup], default="baseline"),
            Validator("rounds", is_type_of=int, gte=1, default=200),
            Validator("batches", is_type_of=int, gte=1),
            Validator("sims_per_batch", is_type_of=int, gte=1),
            Validator("investors", is_type_of=int, gte=1, default=40),
            Validator("m0", is_type_of=_NUMBER, gt=0, default=100),
            Validator("window", is_type_of=int, gte=1, default=10),
            Validator("alpha", is_type_of=float, gt=0, lt=1, default=0.1),
            Validator("mm_alpha", is_type_of=float, gt=0, lt=1),
            Validator("touch_share", is_type_of=float, gte=0, lt=1, default=0.2),
            Validator("step_decay", is_type_of=float, gt=0, lte=1, default=0.05),
            Validator("overshoot", is_type_of=float, gte=0, lt=0.01, default=0.001),
            Validator("investor_min_size", is_type_of=int, gte=1, default=4),
            Validator("investor_max_size", is_type_of=int, gte=1, default=24),
            Validator("mm_size", is_type_of=int, gte=1, default=10),
            Validator("stop_loss", is_type_of=_NUMBER, lt=0, default=-50000),
            Validator("warmup", is_type_of=int, gte=0),
            Validator("book_log", is_type_of=bool, default=False),
            Validator("workers", is_type_of=int, gte=1, default=1),
            Validator("dataset_sims", is_type_of=int, gte=2, default=250),
            Validator("train_fraction", is_type_of=float, gt=0, lt=1, default=0.8),
            Validator("l2", is_type_of=_NUMBER, gte=0, default=1.0),
            Validator("tolerance", is_type_of=float, gt=0, default=1e-8),
            Validator("max_iter", is_type_of=int, gte=1, default=100),
            Validator("epsilon_min", is_type_of=float, gt=0, default=0.01),
            Validator("epsilon_max", is_type_of=_NUMBER, gt=0, default=2.0),
            Validator("epsilon_points", is_type_of=int, gte=2, default=20),
            Validator("estimator_trees", is_type_of=int, gte=1, default=50),
            Validator("estimator_max_depth", is_type_of=int, gte=1, default=12),
            Validator("estimator_min_samples_leaf", is_type_of=int, gte=1, default=1),
            Validator("estimator_seed", is_type_of=int, gte=0, default=0),
            Validator(
                "adversary_mode", is_in=["estimator", "gradient"], default="estimator"
            ),
            Validator("dataset_path", is_type_of=str, default="dataset.csv"),
            Validator("surrogate_path", is_type_of=str, default="surrogate.toml"),
            Validator("estimator_path", is_type_of=str, default="estimator.txt"),
        )
        self._validate()

    def _validate(self):
        try:
            self._settings.validators.validate()
        except ValidationError as e:
            raise ConfigError(str(e)) from None
        if self.get("investor_min_size") > self.get("investor_max_size"):
            raise ConfigError("investor_min_size is greater than investor_max_size")
        if self.get("epsilon_min") >= self.get("epsilon_max"):
            raise ConfigError("epsilon_min must be smaller than epsilon_max")

    def get(self, key, default=None):
        """
        Query for a configuration key.

        :param key: The name of the configuration key
        :type key: str
        """
        return self._settings.get(key, default)

    def set(self, key, value):
        """
        Override a configuration key, e.g. from the command line.
        """
        self._settings.set(key, value)
        self._validate()

    @property
    def batches(self):
        return self.get("batches") or SCALES[self.get("scale")]["batches"]

    @property
    def sims_per_batch(self):
        scale = SCALES[self.get("scale")]
        return self.get("sims_per_batch") or scale["sims_per_batch"]

    def path(self, key, out=None):
        """
        Return the path of an artifact; relative paths are resolved in
        `out` when specified.
        """
        path = pathlib.Path(self.get(key))
        if out is not None and not path.is_absolute():
            path = pathlib.Path(out) / path
        return path

    def agent_params(self):
        mm_alpha = self.get("mm_alpha")
        return AgentParams(
            touch_share=_decimal(self.get("touch_share")),
            step_decay=_decimal(self.get("step_decay")),
            overshoot=_decimal(self.get("overshoot")),
            investor_min_size=self.get("investor_min_size"),
            investor_max_size=self.get("investor_max_size"),
            mm_size=self.get("mm_size"),
            mm_alpha=_decimal(self.get("alpha") if mm_alpha is None else mm_alpha),
            stop_loss=_decimal(self.get("stop_loss")),
        )

    def simulation_config(self, setup=None):
        """
        Build the simulation parameters of a setup (default: the `setup`
        key).

        :rtype: adversarial_trading.sim.SimulationConfig
        """
        setup = Setup(setup or self.get("setup"))
        config = SimulationConfig(
            rounds=self.get("rounds"),
            investors=self.get("investors"),
            m0=_decimal(self.get("m0")),
            window=self.get("window"),
            alpha=_decimal(self.get("alpha")),
            warmup=self.get("warmup"),
            params=self.agent_params(),
        )
        return setup.simulation_config(config)

    def experiment_config(self, setup, out=None):
        """
        :rtype: adversarial_trading.experiment.ExperimentConfig
        """
        setup = Setup(setup)
        return ExperimentConfig(
            setup=setup,
            simulation=self.simulation_config(setup),
            sims_per_batch=self.sims_per_batch,
            batches=self.batches,
            seed=self.get("seed"),
            workers=self.get("workers"),
            adversary_mode=self.get("adversary_mode"),
            surrogate_path=str(self.path("surrogate_path", out)),
            estimator_path=str(self.path("estimator_path", out)),
        )

    def surrogate_hyperparams(self):
        return SurrogateHyperparams(
            l2=float(self.get("l2")),
            tolerance=self.get("tolerance"),
            max_iter=self.get("max_iter"),
        )

    def estimator_hyperparams(self):
        return EstimatorHyperparams(
            trees=self.get("estimator_trees"),
            max_depth=self.get("estimator_max_depth"),
            min_samples_leaf=self.get("estimator_min_samples_leaf"),
            seed=self.get("estimator_seed"),
        )

    def epsilon_grid(self):
        return epsilon_grid(
            self.get("epsilon_min"),
            float(self.get("epsilon_max")),
            self.get("epsilon_points"),
        )

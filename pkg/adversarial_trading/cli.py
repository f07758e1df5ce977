# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import argparse
import sys

import numpy as np

from . import AdversarialTradingError, ConfigError, MissingArtifactError
from .adversarial import attack_curve, estimator_agreement, train_estimator
from .experiment import (
    Setup,
    build_dataset,
    compare_setups,
    outcomes_csv,
    run_calibration,
    run_experiment,
    trajectory_export,
)
from .logger import LOGGER
from .settings import SCALES, Settings
from .sim import run_simulation
from .surrogate import LabeledDataset, LogisticSurrogate, evaluate, train
from .util import ArtifactsCollector, configure_logging


EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_MISSING_ARTIFACT = 2


def _simulate(settings, out):
    setup = settings.get("setup")
    signer = settings.experiment_config(setup, out.path).signer()
    seed = settings.get("seed")
    result = run_simulation(settings.simulation_config(setup), seed, signer=signer)
    result.write_round_log(out.file("rounds.csv"))
    out.write_text("trajectory.csv", trajectory_export(result.records))
    if settings.get("book_log"):
        result.write_book_log(out.file("books.jsonl"))
    LOGGER.info("%s simulation with seed %d: %s", setup, seed, result.summary())


def _build_dataset(settings, out):
    dataset = build_dataset(
        settings.simulation_config(Setup.BASELINE),
        settings.get("dataset_sims"),
        settings.get("seed"),
        workers=settings.get("workers"),
    )
    path = settings.path("dataset_path", out.path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset.write_csv(path)
    LOGGER.info("wrote %s", path)


def _load_splits(settings, out):
    dataset = LabeledDataset.read_csv(settings.path("dataset_path", out.path))
    return dataset.split_by_group(settings.get("train_fraction"))


def _train_surrogate(settings, out):
    train_set, test_set = _load_splits(settings, out)
    model = train(train_set, settings.surrogate_hyperparams())
    lines = ["split,rows,precision,accuracy"]
    for name, split in (("train", train_set), ("test", test_set)):
        if len(split) == 0:
            continue
        metrics = evaluate(model, split)
        LOGGER.info(
            "%s: precision %.4f, accuracy %.4f on %d rows",
            name,
            metrics.precision,
            metrics.accuracy,
            metrics.rows,
        )
        lines.append(
            f"{name},{metrics.rows},{metrics.precision!r},{metrics.accuracy!r}"
        )
    path = settings.path("surrogate_path", out.path)
    path.parent.mkdir(parents=True, exist_ok=True)
    model.save(path)
    out.write_text("surrogate_metrics.csv", "\n".join(lines) + "\n")


def _train_estimator(settings, out):
    model = LogisticSurrogate.load(settings.path("surrogate_path", out.path))
    train_set, test_set = _load_splits(settings, out)
    estimator = train_estimator(model, train_set, settings.estimator_hyperparams())
    if len(test_set):
        agreement = estimator_agreement(estimator, model, test_set)
        LOGGER.info(
            "sign agreement on the test split: %.4f", agreement.mean_non_constant
        )
    path = settings.path("estimator_path", out.path)
    path.parent.mkdir(parents=True, exist_ok=True)
    estimator.save(path)
    LOGGER.info("wrote %s", path)


def _attack_curve(settings, out):
    model = LogisticSurrogate.load(settings.path("surrogate_path", out.path))
    _, test_set = _load_splits(settings, out)
    curve = attack_curve(
        model,
        test_set,
        settings.epsilon_grid(),
        np.random.default_rng(settings.get("seed")),
    )
    out.write_text("attack_curve.csv", curve.to_csv())


def _experiment(settings, out):
    # fail on missing models before spending time on the other setups
    settings.experiment_config(Setup.ADVERSARY, out.path).signer()
    runs = [
        run_experiment(settings.experiment_config(setup, out.path)) for setup in Setup
    ]
    report = compare_setups(*(run.stats for run in runs))
    outcomes = [o for run in runs for o in run.outcomes]
    out.write_text("per_simulation.csv", outcomes_csv(outcomes))
    out.write_text("report.csv", report.to_csv())
    out.write_text("report.txt", report.to_text())
    sys.stdout.write(report.to_text())


def _calibrate(settings, out):
    report = run_calibration(
        settings.simulation_config(Setup.BASELINE),
        settings.batches * settings.sims_per_batch,
        settings.get("seed"),
        workers=settings.get("workers"),
    )
    out.write_text("calibration.csv", report.to_csv())
    for check, passed in report.checks().items():
        LOGGER.info("%s: %s", check, "yes" if passed else "no")


_COMMANDS = {
    "simulate": (_simulate, "run one simulation and write its logs"),
    "build-dataset": (_build_dataset, "build the surrogate dataset"),
    "train-surrogate": (_train_surrogate, "train the logistic surrogate"),
    "train-estimator": (_train_estimator, "train the gradient sign estimator"),
    "attack-curve": (_attack_curve, "accuracy of the surrogate under attack"),
    "experiment": (_experiment, "run the three setups and compare them"),
    "calibrate": (_calibrate, "book depth statistics of the baseline"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--scale", choices=list(SCALES), help="experiment scale")
    common.add_argument(
        "--setup", choices=[s.value for s in Setup], help="agents of the market"
    )
    common.add_argument("--verbose", action="store_true", help="debug logging")
    parser = argparse.ArgumentParser(
        prog="adversarial-trading",
        description="Agent-based order book simulations and adversarial trading.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = configure_logging(args.out, verbose=args.verbose)
    try:
        settings = Settings(args.config)
        for key in ("seed", "scale", "setup"):
            value = getattr(args, key)
            if value is not None:
                settings.set(key, value)
        command, _ = _COMMANDS[args.command]
        command(settings, ArtifactsCollector(args.out))
    except MissingArtifactError as e:
        LOGGER.error("%s", e)
        return EXIT_MISSING_ARTIFACT
    except ConfigError as e:
        LOGGER.error("configuration error: %s", e)
        return EXIT_CONFIG_ERROR
    except AdversarialTradingError as e:
        LOGGER.error("%s", e)
        return EXIT_CONFIG_ERROR
    finally:
        for handler in handlers:
            LOGGER.removeHandler(handler)
            handler.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

"""
Desk-scale checks of the whole pipeline; they take a while, so they only
run with `--run-desk`.
"""

import os

import numpy as np
import pytest

from adversarial_trading.adversarial import (
    attack_curve,
    epsilon_grid,
    estimator_agreement,
    train_estimator,
)
from adversarial_trading.experiment import (
    ExperimentConfig,
    Setup,
    build_dataset,
    compare_setups,
    run_calibration,
    run_experiment,
)
from adversarial_trading.sim import SimulationConfig
from adversarial_trading.surrogate import evaluate, train


pytestmark = pytest.mark.desk

WORKERS = os.cpu_count() or 1
SEED_GROUPS = 10


@pytest.fixture(scope="module")
def splits():
    dataset = build_dataset(SimulationConfig(), sims=270, seed=42, workers=WORKERS)
    return dataset.split_by_group(0.8)


@pytest.fixture(scope="module")
def surrogate(splits):
    train_set, _ = splits
    return train(train_set)


@pytest.fixture(scope="module")
def model_files(tmp_path_factory, surrogate, splits):
    directory = tmp_path_factory.mktemp("models")
    train_set, _ = splits
    surrogate.save(directory / "surrogate.toml")
    train_estimator(surrogate, train_set).save(directory / "estimator.txt")
    return directory


@pytest.fixture(scope="module")
def seed_groups(model_files):
    reports = []
    for seed in range(SEED_GROUPS):
        runs = [
            run_experiment(
                ExperimentConfig(
                    setup=setup,
                    simulation=setup.simulation_config(SimulationConfig()),
                    sims_per_batch=100,
                    batches=2,
                    seed=seed,
                    workers=WORKERS,
                    surrogate_path=str(model_files / "surrogate.toml"),
                    estimator_path=str(model_files / "estimator.txt"),
                )
            )
            for setup in Setup
        ]
        reports.append(compare_setups(*(run.stats for run in runs)))
    return reports


def test_surrogate_precision(splits, surrogate):
    train_set, test_set = splits
    assert len(train_set) + len(test_set) >= 50_000
    metrics = evaluate(surrogate, test_set)
    assert 0.60 <= metrics.precision <= 0.80


def test_adversarial_beats_noise(splits, surrogate):
    _, test_set = splits
    curve = attack_curve(surrogate, test_set, epsilon_grid(), np.random.default_rng(0))
    assert curve.samples >= 2000
    for point in curve.points:
        assert point.accuracy_adversarial <= point.accuracy_noise + 0.02
    accuracies = [p.accuracy_adversarial for p in curve.points]
    assert all(b <= a + 0.02 for a, b in zip(accuracies, accuracies[1:]))


def test_estimator_fidelity(splits, surrogate):
    train_set, test_set = splits
    estimator = train_estimator(surrogate, train_set)
    agreement = estimator_agreement(estimator, surrogate, test_set)
    assert agreement.mean_non_constant >= 0.90


def test_market_maker_ordering(seed_groups):
    held = 0
    for report in seed_groups:
        base_vs_noisy, noisy_vs_adv, _, _ = report.orderings
        if base_vs_noisy.relation == ">" and noisy_vs_adv.relation in (">", "="):
            held += 1
    assert held >= 8


def test_adversary_loses(seed_groups):
    for report in seed_groups:
        _, _, adversary_pnl, _ = report.orderings
        assert adversary_pnl.batches_held == adversary_pnl.batches


def test_investors_gain_from_adversary(seed_groups):
    held = sum(1 for r in seed_groups if r.orderings[3].relation == ">")
    assert held >= 8


def test_book_calibration():
    report = run_calibration(SimulationConfig(), sims=200, seed=42, workers=WORKERS)
    assert all(report.checks().values()), report.checks()


def test_experiment_is_deterministic(model_files):
    def outputs():
        return [
            run_experiment(
                ExperimentConfig(
                    setup=setup,
                    simulation=setup.simulation_config(SimulationConfig()),
                    sims_per_batch=20,
                    batches=2,
                    seed=1,
                    workers=WORKERS,
                    surrogate_path=str(model_files / "surrogate.toml"),
                    estimator_path=str(model_files / "estimator.txt"),
                )
            ).to_csv()
            for setup in Setup
        ]

    assert outputs() == outputs()

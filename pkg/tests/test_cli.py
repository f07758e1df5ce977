# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT


import pytest

from adversarial_trading.cli import (
    EXIT_CONFIG_ERROR,
    EXIT_MISSING_ARTIFACT,
    EXIT_OK,
    build_parser,
    main,
)


TINY = """\
rounds = 25
investors = 10
dataset_sims = 6
batches = 1
sims_per_batch = 2
max_iter = 50
estimator_trees = 3
epsilon_points = 3
"""


@pytest.fixture
def tiny_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    path = tmp_path / "tiny.toml"
    path.write_text(TINY)
    return path


def _run(command, config, out, *args):
    return main([command, "--config", str(config), "--out", str(out), *args])


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_parser_rejects_unknown_setup():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "--setup", "arbitrage"])


def test_simulate(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert _run("simulate", tiny_config, out, "--seed", "5") == EXIT_OK
    lines = (out / "rounds.csv").read_text().splitlines()
    assert len(lines) == 26
    assert (out / "trajectory.csv").exists()
    assert not (out / "books.jsonl").exists()
    assert (out / "adversarial-trading.log").exists()


def test_simulate_is_reproducible(tiny_config, tmp_path):
    for name, seed in (("a", "5"), ("b", "5"), ("c", "6")):
        assert _run("simulate", tiny_config, tmp_path / name, "--seed", seed) == 0
    a, b, c = ((tmp_path / n / "rounds.csv").read_text() for n in "abc")
    assert a == b
    assert a != c


def test_simulate_book_log(tiny_config, tmp_path):
    tiny_config.write_text(TINY + "book_log = true\n")
    out = tmp_path / "out"
    assert _run("simulate", tiny_config, out, "--setup", "noisy") == EXIT_OK
    assert len((out / "books.jsonl").read_text().splitlines()) == 25


def test_missing_config_file(tmp_path):
    assert _run("simulate", tmp_path / "missing.toml", tmp_path) == EXIT_CONFIG_ERROR


def test_invalid_config(tiny_config, tmp_path):
    tiny_config.write_text("rounds = 0\n")
    assert _run("simulate", tiny_config, tmp_path) == EXIT_CONFIG_ERROR


@pytest.mark.parametrize(
    "command", ["train-surrogate", "train-estimator", "attack-curve"]
)
def test_missing_artifacts(tiny_config, tmp_path, command):
    assert _run(command, tiny_config, tmp_path / "out") == EXIT_MISSING_ARTIFACT


def test_adversary_without_models(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert _run("simulate", tiny_config, out, "--setup", "adversary") == (
        EXIT_MISSING_ARTIFACT
    )


def test_experiment_without_models_fails_early(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert _run("experiment", tiny_config, out) == EXIT_MISSING_ARTIFACT
    assert not (out / "per_simulation.csv").exists()
    log = (out / "adversarial-trading.log").read_text()
    assert "baseline:" not in log


@pytest.mark.parametrize("scale", ["desk", "paper"])
def test_scale_presets(scale):
    args = build_parser().parse_args(["experiment", "--scale", scale])
    assert args.scale == scale


def test_pipeline(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    for command in (
        "build-dataset",
        "train-surrogate",
        "train-estimator",
        "attack-curve",
        "experiment",
        "calibrate",
    ):
        assert _run(command, tiny_config, out) == EXIT_OK, command
    for name in (
        "dataset.csv",
        "surrogate.toml",
        "surrogate_metrics.csv",
        "estimator.txt",
        "attack_curve.csv",
        "per_simulation.csv",
        "report.csv",
        "report.txt",
        "calibration.csv",
    ):
        assert (out / name).exists(), name
    assert len((out / "attack_curve.csv").read_text().splitlines()) == 4
    assert len((out / "per_simulation.csv").read_text().splitlines()) == 7
    assert "orderings" in capsys.readouterr().out
    assert _run("simulate", tiny_config, out, "--setup", "adversary") == EXIT_OK

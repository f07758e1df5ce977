# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT


import logging

import numpy as np
import pytest

from adversarial_trading.logger import LOGGER
from adversarial_trading.util import (
    ArtifactsCollector,
    configure_logging,
    simulation_seed,
    stream_rng,
)


def test_artifacts_collector(tmp_path):
    collector = ArtifactsCollector(tmp_path, name="run")
    assert collector.path == tmp_path / "run"
    assert not collector.path.exists()
    path = collector.write_text("report.txt", "hello\n")
    assert path == tmp_path / "run" / "report.txt"
    assert path.read_text() == "hello\n"
    assert collector.file("rounds.csv").parent.is_dir()


def test_simulation_seed_is_deterministic():
    assert simulation_seed(42, 0, 0) == simulation_seed(42, 0, 0)
    assert 0 <= simulation_seed(42, 3, 7) < 2**64


@pytest.mark.parametrize(
    "other",
    [(43, 0, 0), (42, 1, 0), (42, 0, 1)],
)
def test_simulation_seed_depends_on_all_keys(other):
    assert simulation_seed(42, 0, 0) != simulation_seed(*other)


def test_simulation_seeds_are_distinct():
    seeds = {simulation_seed(42, b, s) for b in range(10) for s in range(100)}
    assert len(seeds) == 1000


def test_stream_rng():
    first = stream_rng(7, 3).random(5)
    np.testing.assert_array_equal(first, stream_rng(7, 3).random(5))
    assert not np.array_equal(first, stream_rng(7, 4).random(5))
    assert not np.array_equal(first, stream_rng(8, 3).random(5))


def test_configure_logging(tmp_path):
    level = LOGGER.level
    handlers = configure_logging(tmp_path, verbose=True)
    try:
        assert len(handlers) == 2
        assert LOGGER.level == logging.DEBUG
        LOGGER.debug("something happened")
        handlers[1].flush()
        log = (tmp_path / "adversarial-trading.log").read_text()
        assert "something happened" in log
    finally:
        for handler in handlers:
            LOGGER.removeHandler(handler)
            handler.close()
        LOGGER.setLevel(level)


def test_configure_logging_without_file():
    level = LOGGER.level
    handlers = configure_logging()
    try:
        assert len(handlers) == 1
        assert LOGGER.level == logging.INFO
    finally:
        LOGGER.removeHandler(handlers[0])
        LOGGER.setLevel(level)

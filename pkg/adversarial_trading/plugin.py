# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import logging
import pathlib
import shutil
import tempfile

import pytest

from .experiment import Setup
from .logger import LOGGER
from .settings import Settings
from .sim import run_simulation
from .util import LOG_FORMAT, ArtifactsCollector


_MARKERS = {
    "desk": "desk-scale simulations (slow), run with --run-desk",
}


class NodeRunningData:
    """
    Temporary directory, artifacts and log file of one test, or of the
    whole session.
    """

    def __init__(self, item=None):
        self._tempdir = tempfile.TemporaryDirectory()
        self.tmp_path = pathlib.Path(self._tempdir.name)
        self.artifacts = ArtifactsCollector(
            pathlib.Path.cwd() / "artifacts", name=_artifacts_name(item)
        )
        self.logfile = self.tmp_path / "test.log"
        self.handler = logging.FileHandler(self.logfile, delay=True)
        self.handler.setFormatter(logging.Formatter(LOG_FORMAT))

    def archive_test_log(self):
        self.handler.close()
        if self.logfile.exists():
            shutil.copy2(self.logfile, self.artifacts.file(self.logfile.name))
        self._tempdir.cleanup()


def _artifacts_name(item):
    if item is None:
        return None
    parts = [item.module.__name__] if item.module else []
    if item.cls:
        parts.append(item.cls.__name__)
    parts.append(item.name)
    return str(pathlib.Path(*parts))


class PluginData:
    def __init__(self):
        self.running_data = {}
        self.global_running_data = NodeRunningData()
        self.global_running_data.handler.setLevel(logging.DEBUG)
        LOGGER.addHandler(self.global_running_data.handler)


@pytest.fixture(scope="session")
def market_settings(request):
    """
    The `Settings` of the session, read from `--market-config` if given.
    """
    return Settings(request.config.getoption("--market-config"))


@pytest.fixture(scope="session")
def simulation_config(market_settings):
    return market_settings.simulation_config(Setup.BASELINE)


@pytest.fixture(scope="session")
def baseline_result(market_settings, simulation_config):
    """
    One baseline simulation with the configured seed, shared by the
    session.
    """
    return run_simulation(simulation_config, market_settings.get("seed"))


@pytest.fixture
def artifacts(request):
    """
    The `ArtifactsCollector` of the running test, under `artifacts/`.
    """
    return pytest._adversarial_trading.running_data[request.node.nodeid].artifacts


def pytest_addoption(parser):
    group = parser.getgroup("adversarial-trading")
    group.addoption(
        "--run-desk",
        action="store_true",
        help="run the desk-scale simulation tests",
    )
    group.addoption(
        "--market-config",
        default=None,
        help="TOML configuration file of the market_settings fixture",
    )


def pytest_configure(config):
    for mark, description in _MARKERS.items():
        config.addinivalue_line("markers", f"{mark}: {description}")
    pytest._adversarial_trading = PluginData()


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-desk"):
        return
    skip_desk = pytest.mark.skip(reason="desk-scale test, use --run-desk")
    for item in items:
        if item.get_closest_marker("desk"):
            item.add_marker(skip_desk)


def pytest_runtestloop(session):
    # set the log level for our logger to the effective one set by pytest;
    # this cannot be done in pytest_configure(), as it is not set yet
    LOGGER.setLevel(logging.getLogger().getEffectiveLevel())


def pytest_runtest_protocol(item, nextitem):
    node_running_data = NodeRunningData(item)
    pytest._adversarial_trading.running_data[item.nodeid] = node_running_data
    LOGGER.removeHandler(pytest._adversarial_trading.global_running_data.handler)
    logging.getLogger().addHandler(node_running_data.handler)


def pytest_runtest_logfinish(nodeid, location):
    node_running_data = pytest._adversarial_trading.running_data.pop(nodeid)
    logging.getLogger().removeHandler(node_running_data.handler)
    node_running_data.archive_test_log()
    LOGGER.addHandler(pytest._adversarial_trading.global_running_data.handler)


def pytest_sessionfinish(session, exitstatus):
    pytest._adversarial_trading.global_running_data.archive_test_log()

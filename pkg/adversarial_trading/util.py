# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import functools
import logging
import pathlib

import numpy as np

from . import FormatError
from .logger import LOGGER


LOG_FORMAT = "%(asctime)s: %(name)s: %(funcName)s: %(levelname)s: %(message)s"

# stream ids for the per-simulation random generators; agents use their id
SHUFFLE_STREAM = 1_000_000
NOISY_STREAM = 1_000_001


@functools.total_ordering
class Version:
    """
    Version.

    A simple representation of a version number/string in the format `X`,
    or `X.Y`, or `X.Y.Z`, or in general a sequence of dot-separated numbers.
    Used to tag the model and estimator files.

    Examples:
    ```python
    >>> Version("1.2")
    Version(1.2)
    >>> Version(1, 3) >= Version("1.3")
    True
    ```
    """

    def __init__(self, *args):
        if len(args) == 1 and isinstance(args[0], str):
            parts = args[0].split(".")
            self._bits = [int(p) for p in parts]
        else:
            self._bits = [int(p) for p in args]

    @property
    def major(self):
        return self._bits[0]

    def __lt__(self, other):
        if not isinstance(other, Version):
            return False
        return self._bits < other._bits

    def __eq__(self, other):
        if not isinstance(other, Version):
            return False
        return self._bits == other._bits

    def __str__(self):
        return ".".join([str(i) for i in self._bits])

    def __repr__(self):
        return f"Version({self.__str__()})"


def check_format_version(kind, found, supported):
    """
    Check that a file written with format version `found` can be read by
    code supporting `supported`: only the major version must not be newer.

    Raises `FormatError` otherwise.
    """
    try:
        version = Version(str(found))
    except ValueError:
        raise FormatError(f"{kind}: invalid format version {found!r}") from None
    if version.major > supported.major:
        raise FormatError(
            f"{kind}: format version {version} is newer than supported {supported}"
        )
    return version


class ArtifactsCollector:
    """
    Writes the output files of a command into one directory.
    """

    def __init__(self, out, name=None):
        self._path = pathlib.Path(out)
        if name:
            self._path /= name

    @property
    def path(self):
        return self._path

    def file(self, fn):
        """
        Return the path of an output file, creating its directory.
        """
        self._path.mkdir(parents=True, exist_ok=True)
        return self._path / fn

    def write_text(self, fn, data):
        path = self.file(fn)
        path.write_text(data)
        LOGGER.info("wrote %s", path)
        return path


def configure_logging(out=None, verbose=False):
    """
    Attach the package log handlers: stderr, and `adversarial-trading.log`
    in `out` if specified.

    :return: The handlers added
    """
    LOGGER.setLevel(logging.DEBUG if verbose else logging.INFO)
    stream = logging.StreamHandler()
    stream.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    LOGGER.addHandler(stream)
    if out is None:
        return [stream]
    path = pathlib.Path(out)
    path.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path / "adversarial-trading.log", delay=True)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    LOGGER.addHandler(handler)
    return [stream, handler]


def simulation_seed(seed, batch, sim):
    """
    Derive the seed of one simulation of an experiment.

    The derivation depends only on `(seed, batch, sim)`, so the three setups
    of an experiment run their simulations on paired seeds.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(batch, sim))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def stream_rng(seed, stream):
    """
    Return the random generator of one stream of a simulation.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.default_rng(sequence)

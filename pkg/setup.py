#!/usr/bin/env python3
# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import os
import codecs
from setuptools import setup, find_packages


def read(fname):
    file_path = os.path.join(os.path.dirname(__file__), fname)
    return codecs.open(file_path, encoding="utf-8").read()


setup(
    name="adversarial-trading",
    version="0.1.0",
    license="MIT",
    description=(
        "Agent-based limit order book simulations and adversarial trading "
        "against a market maker"
    ),
    long_description=read("README.md"),
    long_description_content_type="text/markdown",
    packages=find_packages(where=".", exclude=["tests"]),
    python_requires=">=3.8",
    install_requires=[
        "dynaconf",
        "numpy",
        "pytest>=4",
        "scikit-learn",
        "sortedcontainers",
        "toml",
    ],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Framework :: Pytest",
        "Intended Audience :: Science/Research",
        "Topic :: Office/Business :: Financial :: Investment",
        "Topic :: Scientific/Engineering",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: Implementation :: CPython",
        "Operating System :: OS Independent",
        "License :: OSI Approved :: MIT License",
    ],
    entry_points={
        "console_scripts": [
            "adversarial-trading = adversarial_trading.cli:main",
        ],
        "pytest11": [
            "adversarial_trading.plugin = adversarial_trading.plugin",
        ],
    },
)

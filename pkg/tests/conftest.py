# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT


pytest_plugins = ["pytester", "adversarial_trading.plugin"]

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import logging

LOGGER = logging.getLogger("adversarial_trading")

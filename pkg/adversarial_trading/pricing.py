# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import dataclasses
import decimal

from .logger import LOGGER


DEFAULT_WINDOW = 10
DEFAULT_ALPHA = decimal.Decimal("0.10")
DEFAULT_M0 = decimal.Decimal("100")


@dataclasses.dataclass(frozen=True)
class ReferencePriceState:
    """
    Rolling state of the reference price.

    `history` holds the last `n` reference prices, oldest first; its last
    entry is the previous reference price.
    """

    history: tuple
    n: int = DEFAULT_WINDOW
    alpha: decimal.Decimal = DEFAULT_ALPHA

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"window must be at least 1, got {self.n}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.history:
            raise ValueError("empty reference price history")
        if any(m <= 0 for m in self.history):
            raise ValueError("reference prices must be positive")

    @classmethod
    def initial(cls, m0=DEFAULT_M0, n=DEFAULT_WINDOW, alpha=DEFAULT_ALPHA):
        """
        Create a state whose history is `n` copies of `m0`.
        """
        m0 = decimal.Decimal(m0)
        return cls(history=(m0,) * n, n=n, alpha=decimal.Decimal(alpha))

    @property
    def m_prev(self):
        return self.history[-1]

    @property
    def mean(self):
        return sum(self.history) / len(self.history)


def update_reference(state, best_bid, best_offer):
    """
    Compute the reference price of a trading round.

    The book mid is ignored when it is too far from the average of the
    history, and the step from the previous reference price is clamped to
    `[1 - alpha, 1 + alpha]`. When one side of the book is empty the
    previous reference price is carried.

    :param state: The current state
    :type state: ReferencePriceState
    :param best_bid: The best bid, if any
    :param best_offer: The best offer, if any
    :return: The new reference price and the rolled state
    :rtype: tuple(decimal.Decimal, ReferencePriceState)
    """
    m_prev = state.m_prev
    alpha = state.alpha
    if best_bid is None or best_offer is None:
        m_t = m_prev
    else:
        bm = (decimal.Decimal(best_bid) + decimal.Decimal(best_offer)) / 2
        if abs(bm / state.mean - 1) < alpha:
            filtered = bm
        else:
            LOGGER.debug("mid %s rejected against history mean %s", bm, state.mean)
            filtered = m_prev
        ratio = min(1 + alpha, max(1 - alpha, filtered / m_prev))
        m_t = m_prev * ratio
    history = (state.history + (m_t,))[-state.n:]
    return m_t, dataclasses.replace(state, history=history)

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import dataclasses
import decimal
import enum

import numpy as np

from .lob import Side, imbalance, to_price
from .logger import LOGGER
from .surrogate import FEATURE_SIZE


_OFFSET = decimal.Decimal("0.01")


class AgentKind(enum.Enum):
    INVESTOR = "investor"
    MARKET_MAKER = "market_maker"
    NOISY = "noisy"
    ADVERSARIAL = "adversarial"


class Bias(enum.Enum):
    BULLISH = "bullish"
    BEARISH = "bearish"


@dataclasses.dataclass(frozen=True)
class AgentParams:
    """
    Behavioural parameters shared by the agents of a simulation.

    An investor quote steps back from its most aggressive price, which is
    `overshoot` past the reference price, by a whole number of steps: none
    with probability `touch_share`, otherwise a geometric number with
    parameter `step_decay`. Each investor keeps one order size, drawn in
    `[investor_min_size, investor_max_size]` on its first quote.
    """

    touch_share: decimal.Decimal = decimal.Decimal("0.20")
    step_decay: decimal.Decimal = decimal.Decimal("0.05")
    overshoot: decimal.Decimal = decimal.Decimal("0.001")
    investor_min_size: int = 4
    investor_max_size: int = 24
    mm_size: int = 10
    mm_alpha: decimal.Decimal = decimal.Decimal("0.10")
    stop_loss: decimal.Decimal = decimal.Decimal("-50000")

    def __post_init__(self):
        if not 1 <= self.investor_min_size <= self.investor_max_size:
            raise ValueError(
                "invalid investor size range "
                f"[{self.investor_min_size}, {self.investor_max_size}]"
            )
        if self.mm_size < 1:
            raise ValueError(f"invalid market maker size {self.mm_size}")
        if not 0 <= self.touch_share < 1:
            raise ValueError(f"invalid touch share {self.touch_share}")
        if not 0 < self.step_decay <= 1:
            raise ValueError(f"invalid step decay {self.step_decay}")
        if not 0 <= self.overshoot < _OFFSET:
            raise ValueError(f"invalid overshoot {self.overshoot}")

    @property
    def step(self):
        """
        Relative size of one step back, such that quotes sit one percent
        away from the reference price on average.
        """
        mean_steps = (1 - self.touch_share) / self.step_decay
        return (_OFFSET + self.overshoot) / mean_steps


@dataclasses.dataclass
class AgentState:
    """
    State of one agent.

    Once `stopped` is set the agent holds no order and never trades again.
    `size` is the order size of an investor, unset until its first quote.
    """

    agent_id: int
    kind: AgentKind
    bias: Bias = None
    stop_loss_level: decimal.Decimal = decimal.Decimal("-50000")
    stopped: bool = False
    size: int = None
    live_order_ids: set = dataclasses.field(default_factory=set)

    def __post_init__(self):
        if (self.bias is not None) != (self.kind is AgentKind.INVESTOR):
            raise ValueError(
                f"agent {self.agent_id}: a bias is required for investors only"
            )


@dataclasses.dataclass(frozen=True)
class Quote:
    side: Side
    price: decimal.Decimal
    quantity: int


@dataclasses.dataclass(frozen=True)
class QuoteIntent:
    """
    What an agent wants to do in a trading round: the order ids to cancel,
    then the quotes to place.
    """

    quotes: tuple = ()
    cancels: tuple = ()

    def __post_init__(self):
        for quote in self.quotes:
            if quote.quantity < 1:
                raise ValueError(f"invalid quote quantity {quote.quantity}")


def build_roster(investors, market_maker=True, noisy=False, adversarial=False,
                 params=AgentParams()):
    """
    Create the agents of a simulation.

    Investors get ids `0..investors-1` with alternating biases (bullish
    first), then come the market maker, the noisy agent and the adversarial
    agent, in this order. The investor ids and biases do not depend on the
    other agents, so the same seed drives the same investors in every setup.

    :rtype: list of AgentState
    """
    roster = []
    for agent_id in range(investors):
        bias = Bias.BULLISH if agent_id % 2 == 0 else Bias.BEARISH
        roster.append(
            AgentState(
                agent_id=agent_id,
                kind=AgentKind.INVESTOR,
                bias=bias,
                stop_loss_level=params.stop_loss,
            )
        )
    extra = []
    if market_maker:
        extra.append(AgentKind.MARKET_MAKER)
    if noisy:
        extra.append(AgentKind.NOISY)
    if adversarial:
        extra.append(AgentKind.ADVERSARIAL)
    for offset, kind in enumerate(extra):
        roster.append(
            AgentState(
                agent_id=investors + offset,
                kind=kind,
                stop_loss_level=params.stop_loss,
            )
        )
    return roster


def investor_price(bias, m_t, u):
    """
    Price of an investor quote: one percent below (bullish) or above
    (bearish) the reference price, moved by the relative noise `u`.
    """
    offset = 1 - _OFFSET if bias is Bias.BULLISH else 1 + _OFFSET
    return to_price(decimal.Decimal(m_t) * offset * (1 + decimal.Decimal(u)))


def draw_steps(rng, params):
    """
    Draw how many steps an investor quote stands back from the most
    aggressive price.
    """
    if rng.random() < float(params.touch_share):
        return 0
    return int(rng.geometric(float(params.step_decay)))


def placement_noise(bias, steps, params):
    """
    Relative noise `u` of a quote standing `steps` steps back.

    Both sides use the same distance to the reference price, so a bullish
    and a bearish quote with the same number of steps mirror each other.
    """
    distance = _OFFSET + params.overshoot - steps * params.step
    if bias is Bias.BULLISH:
        return distance / (1 - _OFFSET)
    return -distance / (1 + _OFFSET)


def investor_quotes(state, m_t, rng, params=AgentParams()):
    """
    Quote of an investor: cancel everything, then one order on the side of
    the bias.

    :param state: The investor; its size is drawn on the first call
    :type state: AgentState
    :param m_t: The reference price of the round
    :param rng: The random generator of the investor
    :type rng: numpy.random.Generator
    :rtype: QuoteIntent
    """
    if state.size is None:
        state.size = int(
            rng.integers(params.investor_min_size, params.investor_max_size + 1)
        )
    u = placement_noise(state.bias, draw_steps(rng, params), params)
    side = Side.BID if state.bias is Bias.BULLISH else Side.OFFER
    return QuoteIntent(
        quotes=(Quote(side, investor_price(state.bias, m_t, u), state.size),),
        cancels=tuple(sorted(state.live_order_ids)),
    )


def market_maker_prices(best_bid, best_offer, iota, alpha):
    """
    Bid and offer of the market maker, skewed towards the imbalance sign.
    """
    skew = 1 + iota * decimal.Decimal(alpha)
    return (
        to_price(best_bid * decimal.Decimal("0.95") * skew),
        to_price(best_offer * decimal.Decimal("1.05") * skew),
    )


def market_maker_quotes(state, snapshot, params=AgentParams()):
    """
    Quotes of the market maker: cancel everything, then one bid and one
    offer of the same size around the best prices, skewed by the book
    imbalance. Nothing is quoted when a side of the book is empty.

    :param state: The market maker
    :type state: AgentState
    :param snapshot: The book at the start of the round
    :type snapshot: adversarial_trading.lob.DepthSnapshot
    :rtype: QuoteIntent
    """
    cancels = tuple(sorted(state.live_order_ids))
    if snapshot.best_bid is None or snapshot.best_offer is None:
        LOGGER.debug("market maker %s: one-sided book, not quoting", state.agent_id)
        return QuoteIntent(cancels=cancels)
    _, iota = imbalance(snapshot)
    bid, offer = market_maker_prices(
        snapshot.best_bid, snapshot.best_offer, iota, params.mm_alpha
    )
    return QuoteIntent(
        quotes=(
            Quote(Side.BID, bid, params.mm_size),
            Quote(Side.OFFER, offer, params.mm_size),
        ),
        cancels=cancels,
    )


def noisy_sign_vector(rng):
    """
    Draw a sign vector whose coordinates are independently +1 or -1 with
    probability one half.

    :rtype: numpy.ndarray
    """
    return np.where(rng.random(FEATURE_SIZE) < 0.5, 1, -1).astype(np.int8)


def apply_stop_loss(state, mark_pnl):
    """
    Stop the agent if its P&L breached its stop loss.

    :return: The cancel-all intent when the stop loss trips, `None` otherwise
    :rtype: QuoteIntent or None
    """
    if state.stopped or mark_pnl > state.stop_loss_level:
        return None
    LOGGER.info(
        "agent %s (%s) stopped at P&L %s", state.agent_id, state.kind.value, mark_pnl
    )
    intent = QuoteIntent(cancels=tuple(sorted(state.live_order_ids)))
    state.stopped = True
    state.live_order_ids.clear()
    return intent

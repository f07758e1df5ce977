# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import dataclasses
import decimal
import json
import pathlib

from . import ConfigError
from .adversarial import signs_to_orders
from .agents import (
    AgentKind,
    AgentParams,
    apply_stop_loss,
    build_roster,
    investor_quotes,
    market_maker_quotes,
    noisy_sign_vector,
)
from .lob import Order, OrderBook, Side
from .logger import LOGGER
from .pricing import (
    DEFAULT_ALPHA,
    DEFAULT_M0,
    DEFAULT_WINDOW,
    ReferencePriceState,
    update_reference,
)
from .surrogate import featurize
from .util import NOISY_STREAM, SHUFFLE_STREAM, stream_rng


_LOG_QUANTUM = decimal.Decimal("0.00000001")


@dataclasses.dataclass
class Account:
    cash: decimal.Decimal = decimal.Decimal(0)
    inventory: int = 0


class PnLLedger:
    """
    Cash and inventory of every agent.

    Trades only move cash and lots between agents, so the totals of both
    never change.
    """

    def __init__(self, agent_ids, initial_cash=decimal.Decimal(0)):
        self._initial_cash = decimal.Decimal(initial_cash)
        self._accounts = {
            agent_id: Account(cash=self._initial_cash) for agent_id in agent_ids
        }

    @property
    def agent_ids(self):
        return list(self._accounts)

    def account(self, agent_id):
        return self._accounts[agent_id]

    @property
    def total_cash(self):
        return sum((a.cash for a in self._accounts.values()), decimal.Decimal(0))

    @property
    def total_inventory(self):
        return sum(a.inventory for a in self._accounts.values())

    def mark_pnl(self, agent_id, m_t):
        """
        Mark-to-market P&L: cash plus inventory valued at `m_t`, minus the
        initial cash.
        """
        account = self._accounts[agent_id]
        return account.cash + account.inventory * m_t - self._initial_cash


def settle(ledger, trade, buyer_id, seller_id):
    """
    Move the cash and the lots of a trade between buyer and seller.

    :type ledger: PnLLedger
    :type trade: adversarial_trading.lob.Trade
    :return: The ledger
    """
    amount = trade.price * trade.quantity
    buyer = ledger.account(buyer_id)
    seller = ledger.account(seller_id)
    buyer.cash -= amount
    buyer.inventory += trade.quantity
    seller.cash += amount
    seller.inventory -= trade.quantity
    return ledger


@dataclasses.dataclass(frozen=True)
class SimulationConfig:
    """
    Parameters of one simulation.

    `warmup` is the number of initial rounds where only the investors
    quote; it defaults to the pricing window.
    """

    rounds: int = 200
    investors: int = 40
    market_maker: bool = True
    noisy: bool = False
    adversarial: bool = False
    m0: decimal.Decimal = DEFAULT_M0
    window: int = DEFAULT_WINDOW
    alpha: decimal.Decimal = DEFAULT_ALPHA
    warmup: int = None
    params: AgentParams = AgentParams()

    def validate(self):
        if self.rounds < 1:
            raise ConfigError(f"rounds must be at least 1, got {self.rounds}")
        if self.investors < 0:
            raise ConfigError(f"invalid number of investors {self.investors}")
        if self.market_maker and self.investors == 0:
            raise ConfigError("the market maker needs investors to quote around")
        if self.window < 1 or not 0 < self.alpha < 1:
            raise ConfigError(
                f"invalid pricing parameters: window {self.window}, alpha {self.alpha}"
            )
        if self.m0 <= 0:
            raise ConfigError(f"invalid initial reference price {self.m0}")
        if self.warmup is not None and self.warmup < 0:
            raise ConfigError(f"invalid warm-up {self.warmup}")

    @property
    def warmup_rounds(self):
        return self.window if self.warmup is None else self.warmup


@dataclasses.dataclass(frozen=True)
class RoundRecord:
    """
    What happened in one trading round: the book before the agents acted,
    the reference price, the trades, and the P&L of every agent marked at
    the reference price after the round.
    """

    round: int
    snapshot: object
    m_t: decimal.Decimal
    trades: tuple
    pnl: dict


class World:
    """
    The mutable state of one simulation: the book, the agents, the ledger,
    the reference price and the random generators.
    """

    def __init__(self, config, seed, signer=None):
        config.validate()
        if config.adversarial and signer is None:
            raise ConfigError("the adversarial agent needs a sign source")
        self.config = config
        self.seed = seed
        self.signer = signer
        self.book = OrderBook()
        self.agents = {
            agent.agent_id: agent
            for agent in build_roster(
                config.investors,
                market_maker=config.market_maker,
                noisy=config.noisy,
                adversarial=config.adversarial,
                params=config.params,
            )
        }
        self.ledger = PnLLedger(self.agents)
        self.pricing = ReferencePriceState.initial(
            m0=config.m0, n=config.window, alpha=config.alpha
        )
        self.rngs = {
            agent_id: stream_rng(seed, agent_id)
            for agent_id, agent in self.agents.items()
            if agent.kind is AgentKind.INVESTOR
        }
        self.noisy_rng = stream_rng(seed, NOISY_STREAM)
        self.shuffle_rng = stream_rng(seed, SHUFFLE_STREAM)
        self.round_index = 0
        self._next_order_id = 1

    def agents_of(self, kind):
        return [a for a in self.agents.values() if a.kind is kind]

    def decide(self, agent, snapshot, m_t):
        params = self.config.params
        if agent.kind is AgentKind.INVESTOR:
            return investor_quotes(agent, m_t, self.rngs[agent.agent_id], params)
        if agent.kind is AgentKind.MARKET_MAKER:
            return market_maker_quotes(agent, snapshot, params)
        if agent.kind is AgentKind.NOISY:
            eta = noisy_sign_vector(self.noisy_rng)
        else:
            eta = self.signer(featurize(snapshot))
        return signs_to_orders(eta, snapshot, agent.live_order_ids)

    def place(self, agent, quote):
        order = Order(
            order_id=self._next_order_id,
            agent_id=agent.agent_id,
            side=quote.side,
            price=quote.price,
            quantity=quote.quantity,
            round_placed=self.round_index,
        )
        self._next_order_id += 1
        trades = self.book.submit(order)
        for trade in trades:
            settle(self.ledger, trade, trade.buyer_id, trade.seller_id)
            if quote.side is Side.BID:
                resting, resting_id = trade.seller_id, trade.sell_order_id
            else:
                resting, resting_id = trade.buyer_id, trade.buy_order_id
            if resting_id not in self.book:
                self.agents[resting].live_order_ids.discard(resting_id)
        if order.order_id in self.book:
            agent.live_order_ids.add(order.order_id)
        return trades


def run_round(world):
    """
    Run one trading round.

    First every active agent decides from the book as it is and the new
    reference price; then, in an order shuffled every round, each agent
    cancels and places its orders, which match as they arrive. Finally the
    agents are marked to market and their stop losses checked.

    :type world: World
    :rtype: RoundRecord
    """
    world.round_index += 1
    t = world.round_index
    snapshot = world.book.snapshot()
    m_t, world.pricing = update_reference(
        world.pricing, snapshot.best_bid, snapshot.best_offer
    )
    warming_up = t <= world.config.warmup_rounds

    intents = {}
    for agent_id in sorted(world.agents):
        agent = world.agents[agent_id]
        if agent.stopped:
            continue
        if warming_up and agent.kind is not AgentKind.INVESTOR:
            continue
        intents[agent_id] = world.decide(agent, snapshot, m_t)

    acting = list(intents)
    trades = []
    for index in world.shuffle_rng.permutation(len(acting)):
        agent = world.agents[acting[index]]
        intent = intents[agent.agent_id]
        for order_id in intent.cancels:
            world.book.cancel(order_id)
            agent.live_order_ids.discard(order_id)
        for quote in intent.quotes:
            trades.extend(world.place(agent, quote))

    for agent in world.agents.values():
        agent.live_order_ids = {o for o in agent.live_order_ids if o in world.book}
    pnl = {agent_id: world.ledger.mark_pnl(agent_id, m_t) for agent_id in world.agents}
    for agent_id, agent in world.agents.items():
        stop = apply_stop_loss(agent, pnl[agent_id])
        if stop is not None:
            for order_id in stop.cancels:
                world.book.cancel(order_id)
    LOGGER.debug("round %d: m_t %s, %d trades", t, m_t, len(trades))
    return RoundRecord(
        round=t, snapshot=snapshot, m_t=m_t, trades=tuple(trades), pnl=pnl
    )


class SimulationResult:
    """
    The rounds of a simulation and its final ledger.
    """

    def __init__(self, config, seed, records, world):
        self.config = config
        self.seed = seed
        self.records = records
        self.ledger = world.ledger
        self.agents = world.agents

    def _ids_of(self, kind):
        return [a.agent_id for a in self.agents.values() if a.kind is kind]

    @property
    def market_maker_id(self):
        ids = self._ids_of(AgentKind.MARKET_MAKER)
        return ids[0] if ids else None

    @property
    def extra_agent_id(self):
        """
        The id of the noisy or adversarial agent, if any.
        """
        ids = self._ids_of(AgentKind.ADVERSARIAL) + self._ids_of(AgentKind.NOISY)
        return ids[0] if ids else None

    @property
    def investor_ids(self):
        return self._ids_of(AgentKind.INVESTOR)

    def pnl_series(self, agent_id):
        """
        The mark-to-market P&L of an agent after every round.
        """
        return [record.pnl[agent_id] for record in self.records]

    def final_pnl(self, agent_id):
        if agent_id is None or not self.records:
            return decimal.Decimal(0)
        return self.records[-1].pnl[agent_id]

    def investor_mean_pnl(self, record=None):
        record = record or (self.records[-1] if self.records else None)
        ids = self.investor_ids
        if record is None or not ids:
            return decimal.Decimal(0)
        return sum(record.pnl[i] for i in ids) / len(ids)

    def summary(self):
        return {
            "mm_pnl": self.final_pnl(self.market_maker_id),
            "adv_pnl": self.final_pnl(self.extra_agent_id),
            "inv_pnl_mean": self.investor_mean_pnl(),
        }

    def write_round_log(self, path):
        """
        Write the round log CSV; `adv_pnl` is the P&L of the noisy or
        adversarial agent, 0 when there is none.
        """
        mm, extra = self.market_maker_id, self.extra_agent_id
        lines = ["round,best_bid,best_offer,m_t,trades,mm_pnl,adv_pnl,inv_pnl_mean"]
        for record in self.records:
            snapshot = record.snapshot
            lines.append(
                ",".join(
                    [
                        str(record.round),
                        _fmt(snapshot.best_bid),
                        _fmt(snapshot.best_offer),
                        _fmt(record.m_t),
                        str(len(record.trades)),
                        _fmt(record.pnl[mm] if mm is not None else 0),
                        _fmt(record.pnl[extra] if extra is not None else 0),
                        _fmt(self.investor_mean_pnl(record)),
                    ]
                )
            )
        pathlib.Path(path).write_text("\n".join(lines) + "\n")

    def write_book_log(self, path):
        """
        Write the book before every round as JSON lines.
        """
        with open(path, "w") as f:
            for record in self.records:
                f.write(json.dumps(record.snapshot.to_record(record.round)) + "\n")


def _fmt(value):
    if value is None:
        return ""
    return str(decimal.Decimal(value).quantize(_LOG_QUANTUM))


def run_simulation(config, seed, signer=None):
    """
    Run a simulation.

    :param config: The simulation parameters
    :type config: SimulationConfig
    :param seed: The seed of every random generator of the simulation
    :type seed: int
    :param signer: Callable mapping the features of the book to the sign
        vector of the adversarial agent; required when the configuration
        has one
    :rtype: SimulationResult
    """
    world = World(config, seed, signer=signer)
    records = [run_round(world) for _ in range(config.rounds)]
    result = SimulationResult(config, seed, records, world)
    LOGGER.debug("simulation %s done: %s", seed, result.summary())
    return result

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import collections
import dataclasses
import decimal
import enum

from sortedcontainers import SortedDict

from . import OrderRejectedError
from .logger import LOGGER


PRICE_TICK = decimal.Decimal("0.0001")


def to_price(value):
    """
    Convert a value to a fixed-point price.

    Prices have 4 fractional digits; values are rounded half-even to the
    closest tick. Floats are converted through their shortest `repr`.

    :param value: The price to convert
    :type value: decimal.Decimal or int or float or str
    :return: The quantized price
    :rtype: decimal.Decimal
    """
    if isinstance(value, float):
        value = repr(value)
    return decimal.Decimal(value).quantize(PRICE_TICK, rounding=decimal.ROUND_HALF_EVEN)


class Side(enum.Enum):
    BID = "bid"
    OFFER = "offer"

    @property
    def opposite(self):
        return Side.OFFER if self is Side.BID else Side.BID


@dataclasses.dataclass
class Order:
    """
    A limit order.

    `residual` is the part of `quantity` not executed yet; it is managed by
    the order book.
    """

    order_id: int
    agent_id: int
    side: Side
    price: decimal.Decimal
    quantity: int
    round_placed: int = 0
    residual: int = dataclasses.field(init=False)

    def __post_init__(self):
        self.price = to_price(self.price)
        self.residual = self.quantity


@dataclasses.dataclass(frozen=True)
class Trade:
    """
    An execution between an aggressor and a resting order.

    The price is always the price of the resting order.
    """

    buy_order_id: int
    sell_order_id: int
    price: decimal.Decimal
    quantity: int
    round: int
    buyer_id: int
    seller_id: int


@dataclasses.dataclass(frozen=True)
class DepthSnapshot:
    """
    Anonymous view of the book: aggregated lots per price level.

    `bid_levels` are sorted by decreasing price, `offer_levels` by increasing
    price; both are tuples of `(price, lots)` pairs.
    """

    bid_levels: tuple = ()
    offer_levels: tuple = ()

    @property
    def best_bid(self):
        return self.bid_levels[0][0] if self.bid_levels else None

    @property
    def best_offer(self):
        return self.offer_levels[0][0] if self.offer_levels else None

    @property
    def depth_b(self):
        return len(self.bid_levels)

    @property
    def depth_o(self):
        return len(self.offer_levels)

    def levels(self, side):
        return self.bid_levels if side is Side.BID else self.offer_levels

    def to_record(self, round_index):
        """
        Return the JSON-lines record of this snapshot.

        Prices are written as strings to keep them exact.
        """
        return {
            "round": round_index,
            "bids": [[str(p), q] for p, q in self.bid_levels],
            "offers": [[str(p), q] for p, q in self.offer_levels],
        }

    @classmethod
    def from_record(cls, record):
        return cls(
            bid_levels=tuple((to_price(p), int(q)) for p, q in record["bids"]),
            offer_levels=tuple((to_price(p), int(q)) for p, q in record["offers"]),
        )


class OrderBook:
    """
    Central limit order book.

    Orders are matched with price-time priority as soon as they arrive;
    executions happen at the price of the resting order. The residual of
    an order that cannot be matched any more rests in the book.
    """

    def __init__(self):
        # bids iterate from the highest price
        self._bids = SortedDict(lambda price: -price)
        self._offers = SortedDict()
        self._orders = {}
        self._known_ids = set()

    def _ladder(self, side):
        return self._bids if side is Side.BID else self._offers

    @property
    def best_bid(self):
        return self._bids.peekitem(0)[0] if self._bids else None

    @property
    def best_offer(self):
        return self._offers.peekitem(0)[0] if self._offers else None

    def __contains__(self, order_id):
        return order_id in self._orders

    def __len__(self):
        return len(self._orders)

    def get(self, order_id):
        """
        Return the resting order with the specified id, or `None`.
        """
        return self._orders.get(order_id)

    def resting_orders(self, side):
        """
        Iterate over the resting orders of one side, in priority order.
        """
        for queue in self._ladder(side).values():
            yield from queue

    def submit(self, order):
        """
        Submit a limit order, matching it against the opposite side.

        Raises `OrderRejectedError` if the order id was already used, or the
        price or the quantity are not positive.

        :param order: The order to submit
        :type order: Order
        :return: The trades executed, in execution order
        :rtype: list of Trade
        """
        if order.order_id in self._known_ids:
            raise OrderRejectedError(f"duplicate order id {order.order_id}")
        if order.price <= 0:
            raise OrderRejectedError(
                f"order {order.order_id}: non-positive price {order.price}"
            )
        if order.quantity < 1:
            raise OrderRejectedError(
                f"order {order.order_id}: non-positive quantity {order.quantity}"
            )
        self._known_ids.add(order.order_id)

        trades = []
        opposite = self._ladder(order.side.opposite)
        while order.residual > 0 and opposite:
            best_price, queue = opposite.peekitem(0)
            if order.side is Side.BID and order.price < best_price:
                break
            if order.side is Side.OFFER and order.price > best_price:
                break
            resting = queue[0]
            quantity = min(order.residual, resting.residual)
            buy, sell = (order, resting) if order.side is Side.BID else (resting, order)
            trades.append(
                Trade(
                    buy_order_id=buy.order_id,
                    sell_order_id=sell.order_id,
                    price=resting.price,
                    quantity=quantity,
                    round=order.round_placed,
                    buyer_id=buy.agent_id,
                    seller_id=sell.agent_id,
                )
            )
            order.residual -= quantity
            resting.residual -= quantity
            if resting.residual == 0:
                queue.popleft()
                del self._orders[resting.order_id]
                if not queue:
                    del opposite[best_price]

        if order.residual > 0:
            ladder = self._ladder(order.side)
            ladder.setdefault(order.price, collections.deque()).append(order)
            self._orders[order.order_id] = order
        return trades

    def cancel(self, order_id):
        """
        Cancel a resting order.

        Cancelling an unknown (or already fully executed) order is a no-op.

        :param order_id: The id of the order to cancel
        :type order_id: int
        :return: The cancelled order, if any; its `residual` is the
            quantity removed from the book
        :rtype: Order or None
        """
        order = self._orders.pop(order_id, None)
        if order is None:
            LOGGER.debug("cancel of order %s: not in the book", order_id)
            return None
        ladder = self._ladder(order.side)
        queue = ladder[order.price]
        queue.remove(order)
        if not queue:
            del ladder[order.price]
        return order

    def snapshot(self):
        """
        Aggregate the residual quantities per price level.

        :rtype: DepthSnapshot
        """
        return DepthSnapshot(
            bid_levels=tuple(
                (price, sum(o.residual for o in queue))
                for price, queue in self._bids.items()
            ),
            offer_levels=tuple(
                (price, sum(o.residual for o in queue))
                for price, queue in self._offers.items()
            ),
        )


def imbalance(snapshot):
    """
    Compute the market imbalance of a snapshot.

    :return: total bid lots minus total offer lots, and its sign
    :rtype: tuple(int, int)
    """
    bid_lots = sum(q for _, q in snapshot.bid_levels)
    i = bid_lots - sum(q for _, q in snapshot.offer_levels)
    iota = (i > 0) - (i < 0)
    return i, iota

# SPDX-FileCopyrightText: The adversarial-trading authors
# SPDX-License-Identifier: MIT

import concurrent.futures
import dataclasses
import decimal
import enum

import numpy as np

from . import ConfigError, ScaleMismatchError
from .adversarial import EstimatorSigner, GradientSigner, SignEstimator
from .logger import LOGGER
from .sim import SimulationConfig, run_simulation
from .surrogate import DEPTH, LabeledDataset, LogisticSurrogate, featurize, label
from .util import simulation_seed


# batch key of the dataset simulations, away from the experiment batches
DATASET_BATCH = 1_000_000

_CSV_QUANTUM = decimal.Decimal("0.00000001")

# reference market maker P&L over 10 batches of 500: absolute values
# without adversary, then percentages of them
REFERENCE_TABLE = {
    "baseline": (177_000, 54_000, 39_000, 199_000),
    "noisy": (71, 95, 80, 70),
    "adversary": (67, 92, 72, 70),
}

# depth buckets of the average book quantities, 1-based and inclusive
CALIBRATION_BUCKETS = ((1, 1), (2, 2), (3, 11), (12, 16), (17, 20))
CALIBRATION_DEPTH_BAND = (12.0, 22.0)
CALIBRATION_TOP_BAND = (10.0, 30.0)


class Setup(enum.Enum):
    BASELINE = "baseline"
    NOISY = "noisy"
    ADVERSARY = "adversary"

    def simulation_config(self, base):
        """
        Return `base` with the extra agent of this setup.
        """
        return dataclasses.replace(
            base,
            market_maker=True,
            noisy=self is Setup.NOISY,
            adversarial=self is Setup.ADVERSARY,
        )


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """
    Configuration of the simulations of one setup.

    `simulation` must already carry the roster of `setup` (see
    `Setup.simulation_config`).
    """

    setup: Setup
    simulation: SimulationConfig
    sims_per_batch: int = 100
    batches: int = 2
    seed: int = 42
    workers: int = 1
    adversary_mode: str = "estimator"
    surrogate_path: str = None
    estimator_path: str = None

    def validate(self):
        if self.sims_per_batch < 1 or self.batches < 1 or self.workers < 1:
            raise ConfigError(
                "batches, simulations per batch and workers must be at least 1"
            )
        expected = self.setup.simulation_config(self.simulation)
        if expected != self.simulation:
            raise ConfigError(f"the agents do not match the {self.setup.value} setup")
        if self.adversary_mode not in ("estimator", "gradient"):
            raise ConfigError(f"unknown adversary mode {self.adversary_mode!r}")
        self.simulation.validate()

    @property
    def rounds_per_sim(self):
        return self.simulation.rounds

    @property
    def scale(self):
        """
        What must be equal for two setups to be compared.
        """
        return (
            self.batches,
            self.sims_per_batch,
            self.simulation.rounds,
            self.simulation.investors,
            self.seed,
        )

    def seeds(self):
        """
        `(batch, sim, seed)` of every simulation, in reduction order.
        """
        return [
            (batch, sim, simulation_seed(self.seed, batch, sim))
            for batch in range(self.batches)
            for sim in range(self.sims_per_batch)
        ]

    def signer(self):
        """
        Load the sign source of the adversarial agent, if the setup has one.

        Raises `MissingArtifactError` when a model file is absent.
        """
        if self.setup is not Setup.ADVERSARY:
            return None
        if self.surrogate_path is None:
            raise ConfigError("the adversary setup needs a surrogate model")
        model = LogisticSurrogate.load(self.surrogate_path)
        if self.adversary_mode == "gradient":
            return GradientSigner(model)
        if self.estimator_path is None:
            raise ConfigError("the adversary setup needs a sign estimator")
        return EstimatorSigner(SignEstimator.load(self.estimator_path))


@dataclasses.dataclass(frozen=True)
class SimulationOutcome:
    setup: str
    batch: int
    sim: int
    seed: int
    mm_pnl: decimal.Decimal
    adv_pnl: decimal.Decimal
    inv_pnl_mean: decimal.Decimal

    CSV_HEADER = "setup,batch,sim,seed,mm_pnl,adv_pnl,inv_pnl_mean"

    def to_csv(self):
        return ",".join(
            [
                self.setup,
                str(self.batch),
                str(self.sim),
                str(self.seed),
                str(decimal.Decimal(self.mm_pnl).quantize(_CSV_QUANTUM)),
                str(decimal.Decimal(self.adv_pnl).quantize(_CSV_QUANTUM)),
                str(decimal.Decimal(self.inv_pnl_mean).quantize(_CSV_QUANTUM)),
            ]
        )


def outcomes_csv(outcomes):
    lines = [SimulationOutcome.CSV_HEADER] + [o.to_csv() for o in outcomes]
    return "\n".join(lines) + "\n"


@dataclasses.dataclass(frozen=True)
class Quartiles:
    mean: float
    median: float
    q1: float
    q3: float


def describe(values):
    """
    Mean, median and quartiles; quartiles interpolate linearly between
    order statistics.

    :rtype: Quartiles
    """
    values = np.asarray([float(v) for v in values])
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    return Quartiles(
        mean=float(np.mean(values)), median=float(median), q1=float(q1), q3=float(q3)
    )


@dataclasses.dataclass(frozen=True)
class PnLStats:
    """
    P&L statistics of one setup over all its simulations, plus the
    per-batch figures used for the ordering checks.
    """

    setup: Setup
    scale: tuple
    market_maker: Quartiles
    adversary_mean: float
    investor_mean: float
    batch_mm_medians: tuple
    batch_adversary_means: tuple
    batch_investor_means: tuple

    def ratios(self, baseline):
        """
        Market maker statistics in percent of `baseline`'s; `None` where the
        baseline figure is 0.
        """
        result = {}
        for field in ("mean", "median", "q1", "q3"):
            reference = getattr(baseline.market_maker, field)
            value = getattr(self.market_maker, field)
            result[field] = None if reference == 0 else 100.0 * value / reference
        return result


def pnl_stats(setup, scale, outcomes):
    """
    Reduce the outcomes of one setup, in the order given.

    :rtype: PnLStats
    """
    batches = sorted({o.batch for o in outcomes})

    def per_batch(reducer, attribute):
        values = [
            [float(getattr(o, attribute)) for o in outcomes if o.batch == b]
            for b in batches
        ]
        return tuple(float(reducer(v)) for v in values)

    return PnLStats(
        setup=setup,
        scale=scale,
        market_maker=describe([o.mm_pnl for o in outcomes]),
        adversary_mean=float(np.mean([float(o.adv_pnl) for o in outcomes])),
        investor_mean=float(np.mean([float(o.inv_pnl_mean) for o in outcomes])),
        batch_mm_medians=per_batch(np.median, "mm_pnl"),
        batch_adversary_means=per_batch(np.mean, "adv_pnl"),
        batch_investor_means=per_batch(np.mean, "inv_pnl_mean"),
    )


_WORKER_SIGNER = None


def _init_worker(signer):
    global _WORKER_SIGNER
    _WORKER_SIGNER = signer


def _fan_out(function, tasks, workers, signer):
    """
    Run `function` over `tasks`, in worker processes if `workers > 1`;
    results come back in the order of `tasks`.
    """
    if workers <= 1:
        _init_worker(signer)
        return [function(task) for task in tasks]
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(signer,)
    ) as executor:
        chunksize = max(1, len(tasks) // (4 * workers))
        return list(executor.map(function, tasks, chunksize=chunksize))


def _simulate_task(task):
    setup, config, batch, sim, seed = task
    result = run_simulation(config, seed, signer=_WORKER_SIGNER)
    summary = result.summary()
    return SimulationOutcome(
        setup=setup.value,
        batch=batch,
        sim=sim,
        seed=seed,
        mm_pnl=summary["mm_pnl"],
        adv_pnl=summary["adv_pnl"],
        inv_pnl_mean=summary["inv_pnl_mean"],
    )


@dataclasses.dataclass(frozen=True)
class ExperimentRun:
    stats: PnLStats
    outcomes: tuple

    def to_csv(self):
        return outcomes_csv(self.outcomes)


def run_experiment(config):
    """
    Run all the simulations of one setup and reduce their P&L.

    Every simulation gets the seed derived from `(config.seed, batch, sim)`,
    so different setups with the same seed are paired.

    :type config: ExperimentConfig
    :rtype: ExperimentRun
    """
    config.validate()
    signer = config.signer()
    tasks = [
        (config.setup, config.simulation, batch, sim, seed)
        for batch, sim, seed in config.seeds()
    ]
    LOGGER.info(
        "%s: %d batches of %d simulations of %d rounds",
        config.setup.value,
        config.batches,
        config.sims_per_batch,
        config.rounds_per_sim,
    )
    outcomes = tuple(_fan_out(_simulate_task, tasks, config.workers, signer))
    stats = pnl_stats(config.setup, config.scale, outcomes)
    LOGGER.info(
        "%s: market maker median P&L %.2f, adversary mean %.2f, investor mean %.2f",
        config.setup.value,
        stats.market_maker.median,
        stats.adversary_mean,
        stats.investor_mean,
    )
    return ExperimentRun(stats=stats, outcomes=outcomes)


@dataclasses.dataclass(frozen=True)
class Ordering:
    """
    How two figures compare: `relation` is one of ">", "=", "<".
    """

    name: str
    left: float
    right: float
    batches_held: int
    batches: int

    @property
    def relation(self):
        if self.left > self.right:
            return ">"
        if self.left < self.right:
            return "<"
        return "="


@dataclasses.dataclass(frozen=True)
class ComparisonReport:
    ratios: dict
    orderings: tuple
    stats: tuple

    def to_csv(self):
        lines = ["setup,mean,median,q1,q3,mean_pct,median_pct,q1_pct,q3_pct"]
        for stats in self.stats:
            q = stats.market_maker
            pct = self.ratios[stats.setup.value]
            lines.append(
                ",".join(
                    [stats.setup.value]
                    + [f"{v:.2f}" for v in (q.mean, q.median, q.q1, q.q3)]
                    + [
                        "" if pct[k] is None else f"{pct[k]:.2f}"
                        for k in ("mean", "median", "q1", "q3")
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_text(self):
        lines = ["market maker P&L (percent of the baseline)", ""]
        lines.append(f"{'setup':<12}{'mean':>10}{'median':>10}{'q1':>10}{'q3':>10}")
        for stats in self.stats:
            pct = self.ratios[stats.setup.value]
            cells = [
                "n/a" if pct[k] is None else f"{pct[k]:.0f}%"
                for k in ("mean", "median", "q1", "q3")
            ]
            row = "".join(f"{c:>10}" for c in cells)
            lines.append(f"{stats.setup.value:<12}{row}")
        baseline = self.stats[0].market_maker
        lines.append(
            f"{'baseline':<12}"
            + "".join(
                f"{v:>10.0f}"
                for v in (baseline.mean, baseline.median, baseline.q1, baseline.q3)
            )
        )
        lines += ["", "reference (10 x 500 simulations)"]
        for setup, values in REFERENCE_TABLE.items():
            unit = "" if setup == "baseline" else "%"
            row = "".join(f"{str(v) + unit:>10}" for v in values)
            lines.append(f"{setup:<12}{row}")
        lines += ["", "orderings"]
        for o in self.orderings:
            lines.append(
                f"{o.name}: {o.left:.2f} {o.relation} {o.right:.2f} "
                f"(held in {o.batches_held}/{o.batches} batches)"
            )
        return "\n".join(lines) + "\n"


def _count(pairs, predicate):
    return sum(1 for left, right in pairs if predicate(left, right))


def compare_setups(stats_baseline, stats_noisy, stats_adversary):
    """
    Compare the market maker P&L of the three setups.

    Raises `ScaleMismatchError` if the statistics were not produced at the
    same scale with the same seed.

    :rtype: ComparisonReport
    """
    if not stats_baseline.scale == stats_noisy.scale == stats_adversary.scale:
        raise ScaleMismatchError(
            "setups run at different scales: "
            f"{stats_baseline.scale}, {stats_noisy.scale}, {stats_adversary.scale}"
        )
    ratios = {
        s.setup.value: s.ratios(stats_baseline)
        for s in (stats_baseline, stats_noisy, stats_adversary)
    }
    batches = len(stats_baseline.batch_mm_medians)
    base_vs_noisy = list(
        zip(stats_baseline.batch_mm_medians, stats_noisy.batch_mm_medians)
    )
    noisy_vs_adv = list(
        zip(stats_noisy.batch_mm_medians, stats_adversary.batch_mm_medians)
    )
    investors = list(
        zip(stats_adversary.batch_investor_means, stats_baseline.batch_investor_means)
    )
    orderings = (
        Ordering(
            "market maker median, baseline vs noisy",
            stats_baseline.market_maker.median,
            stats_noisy.market_maker.median,
            _count(base_vs_noisy, lambda a, b: a > b),
            batches,
        ),
        Ordering(
            "market maker median, noisy vs adversary",
            stats_noisy.market_maker.median,
            stats_adversary.market_maker.median,
            _count(noisy_vs_adv, lambda a, b: a >= b),
            batches,
        ),
        Ordering(
            "adversary mean P&L vs zero",
            stats_adversary.adversary_mean,
            0.0,
            _count(
                [(m, 0.0) for m in stats_adversary.batch_adversary_means],
                lambda a, b: a < b,
            ),
            batches,
        ),
        Ordering(
            "investor mean P&L, adversary vs baseline",
            stats_adversary.investor_mean,
            stats_baseline.investor_mean,
            _count(investors, lambda a, b: a > b),
            batches,
        ),
    )
    return ComparisonReport(
        ratios=ratios,
        orderings=orderings,
        stats=(stats_baseline, stats_noisy, stats_adversary),
    )


class CalibrationAccumulator:
    """
    Running sums of the depth and the level quantities of the books of
    many simulations.
    """

    def __init__(self):
        self.snapshots = 0
        self.depth_sum = np.zeros(2)
        self.quantity_sum = np.zeros((2, DEPTH))
        self.quantity_count = np.zeros((2, DEPTH), dtype=np.int64)

    def add(self, snapshot):
        self.snapshots += 1
        for side, levels in enumerate((snapshot.bid_levels, snapshot.offer_levels)):
            self.depth_sum[side] += len(levels)
            for depth, (_, quantity) in enumerate(levels[:DEPTH]):
                self.quantity_sum[side, depth] += quantity
                self.quantity_count[side, depth] += 1

    def add_result(self, result):
        """
        Add the books of a simulation, after its warm-up.
        """
        warmup = result.config.warmup_rounds
        for record in result.records:
            if record.round > warmup:
                self.add(record.snapshot)
        return self

    def merge(self, other):
        self.snapshots += other.snapshots
        self.depth_sum += other.depth_sum
        self.quantity_sum += other.quantity_sum
        self.quantity_count += other.quantity_count
        return self

    def report(self):
        n = max(self.snapshots, 1)
        average_depth = self.depth_sum / n
        with np.errstate(invalid="ignore", divide="ignore"):
            quantity = np.where(
                self.quantity_count > 0,
                self.quantity_sum / np.maximum(self.quantity_count, 1),
                0.0,
            )
        buckets = []
        for first, last in CALIBRATION_BUCKETS:
            rows = slice(first - 1, last)
            counts = self.quantity_count[:, rows].sum(axis=1)
            sums = self.quantity_sum[:, rows].sum(axis=1)
            means = tuple(float(s / c) if c else 0.0 for s, c in zip(sums, counts))
            buckets.append(((first, last), means))
        return CalibrationReport(
            snapshots=self.snapshots,
            average_depth=(float(average_depth[0]), float(average_depth[1])),
            average_quantity=quantity,
            buckets=tuple(buckets),
        )


@dataclasses.dataclass(frozen=True)
class CalibrationReport:
    """
    Average book depth per side, average quantity per depth (rows: bid,
    offer) and per depth bucket.
    """

    snapshots: int
    average_depth: tuple
    average_quantity: np.ndarray
    buckets: tuple

    @property
    def mean_depth(self):
        return sum(self.average_depth) / 2

    @property
    def top_quantity(self):
        return float(np.mean(self.average_quantity[:, 0]))

    def checks(self):
        low, high = CALIBRATION_DEPTH_BAND
        top_low, top_high = CALIBRATION_TOP_BAND
        bucket_means = [sum(q) / 2 for _, q in self.buckets]
        return {
            "average depth in band": low <= self.mean_depth <= high,
            "top quantity in band": top_low <= self.top_quantity <= top_high,
            "deepest bucket below top": bucket_means[-1] < bucket_means[0],
            "buckets weakly decreasing": all(
                b <= a for a, b in zip(bucket_means, bucket_means[1:])
            ),
        }

    def to_csv(self):
        lines = ["bucket,first_depth,last_depth,bid_quantity,offer_quantity"]
        for index, ((first, last), (bid, offer)) in enumerate(self.buckets):
            lines.append(f"{index},{first},{last},{bid:.4f},{offer:.4f}")
        lines.append(f"depth,,,{self.average_depth[0]:.4f},{self.average_depth[1]:.4f}")
        return "\n".join(lines) + "\n"


def book_calibration_report(logs):
    """
    Average depth and quantities of the books of many simulations.

    :param logs: Simulation results, or `CalibrationAccumulator`s to merge
    :rtype: CalibrationReport
    """
    total = CalibrationAccumulator()
    for log in logs:
        if isinstance(log, CalibrationAccumulator):
            total.merge(log)
        else:
            total.add_result(log)
    return total.report()


def _calibration_task(task):
    config, seed = task
    return CalibrationAccumulator().add_result(run_simulation(config, seed))


def run_calibration(config, sims, seed, workers=1):
    """
    Run `sims` baseline simulations and report their book statistics.

    :type config: SimulationConfig
    :rtype: CalibrationReport
    """
    config = Setup.BASELINE.simulation_config(config)
    tasks = [(config, simulation_seed(seed, 0, sim)) for sim in range(sims)]
    return book_calibration_report(_fan_out(_calibration_task, tasks, workers, None))


def trajectory_export(records):
    """
    CSV of the best bid and offer of every round whose book has both sides.
    """
    lines = ["round,best_bid,best_offer"]
    for record in records:
        snapshot = record.snapshot
        if snapshot.best_bid is None or snapshot.best_offer is None:
            continue
        lines.append(f"{record.round},{snapshot.best_bid},{snapshot.best_offer}")
    return "\n".join(lines) + "\n"


def dataset_rows(result, sim):
    """
    Labeled rows of one simulation: the features of the book at the start
    of each round after the warm-up, labeled with the direction of the
    next reference price move. Rounds where the price does not move are
    skipped.
    """
    rows, labels = [], []
    warmup = result.config.warmup_rounds
    for record, following in zip(result.records, result.records[1:]):
        if record.round <= warmup:
            continue
        y = label(record.m_t, following.m_t)
        if y is None:
            continue
        rows.append(featurize(record.snapshot))
        labels.append(y)
    return LabeledDataset(
        X=np.array(rows).reshape(-1, 4 * DEPTH), y=labels, groups=[sim] * len(labels)
    )


def _dataset_task(task):
    config, sim, seed = task
    return dataset_rows(run_simulation(config, seed), sim)


def build_dataset(config, sims, seed, workers=1):
    """
    Build the surrogate dataset from `sims` baseline simulations.

    :type config: SimulationConfig
    :rtype: adversarial_trading.surrogate.LabeledDataset
    """
    config = Setup.BASELINE.simulation_config(config)
    tasks = [
        (config, sim, simulation_seed(seed, DATASET_BATCH, sim)) for sim in range(sims)
    ]
    parts = _fan_out(_dataset_task, tasks, workers, None)
    dataset = LabeledDataset(
        X=np.concatenate([p.X for p in parts]),
        y=np.concatenate([p.y for p in parts]),
        groups=np.concatenate([p.groups for p in parts]),
    )
    LOGGER.info(
        "dataset: %d rows from %d simulations, %.1f%% up moves",
        len(dataset),
        sims,
        100.0 * float(np.mean(dataset.y)) if len(dataset) else 0.0,
    )
    return dataset

"""Grid search of the learner hyperparameters on a small personalization task."""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Tuple

from config.settings import STRATEGY_MOMENTUM
from models.device import Hyperparameters
from models.scenario import Scenario
from services.dataset_service import partition, subset_pool
from services.seed_service import derive_seed
from services.sim_service import (
    build_architecture,
    load_pools,
    run_controlled_on,
    scale_phases,
    train_bootstrap,
)

logger = logging.getLogger(__name__)

GRID_AXES = ("eta", "lambda", "kappa", "phi")


@dataclass(frozen=True)
class TuneResult:
    best: Hyperparameters
    best_score: float
    ranking: List[Tuple[Dict[str, float], float]]


def grid_points(grid: Dict[str, List[float]]) -> List[Dict[str, float]]:
    axes = [axis for axis in GRID_AXES if axis in grid]
    return [dict(zip(axes, values)) for values in itertools.product(*(grid[a] for a in axes))]


def _apply(hyper: Hyperparameters, point: Dict[str, float]) -> Hyperparameters:
    fields = dict(point)
    if "lambda" in fields:
        fields["lam"] = fields.pop("lambda")
    return replace(hyper, **fields)


def tune(scenario: Scenario, workers: int = 1) -> TuneResult:
    """Score every grid point by final goal accuracy of a shortened controlled run.

    Learner and neighbors are carved from the bootstrap subset only; the
    first grid point reaching the best score wins.
    """
    train_pool, test_pool = load_pools(scenario)
    arch = build_architecture(scenario, train_pool)
    split = partition(train_pool, scenario.bootstrap.fraction, [], derive_seed(scenario.seed, "partition"))
    bootstrap_pool = subset_pool(train_pool, split.bootstrap_indices)
    bootstrap = train_bootstrap(
        bootstrap_pool.samples,
        arch,
        scenario.bootstrap.epochs,
        scenario.seed,
        rate=scenario.bootstrap.rate,
        patience=scenario.bootstrap.patience,
        holdout=scenario.bootstrap.holdout,
    )
    phases = scale_phases(scenario.controlled.phases, scenario.tune.encounters)
    points = grid_points(scenario.tune.grid)
    logger.info("Tuning over %d grid points, %d encounters each", len(points), scenario.tune.encounters)

    def score(point: Dict[str, float]) -> float:
        candidate = replace(
            scenario, strategy=STRATEGY_MOMENTUM, hyper=_apply(scenario.hyper, point)
        )
        metrics = run_controlled_on(candidate, bootstrap_pool, test_pool, bootstrap, phases)
        return metrics.rows[-1]["goal_accuracy"]

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        scores = list(pool.map(score, points))

    ranking = sorted(zip(points, scores), key=lambda item: -item[1])
    best_point, best_score = ranking[0]
    logger.info("Best grid point %s with accuracy %.4f", best_point, best_score)
    return TuneResult(_apply(scenario.hyper, best_point), best_score, ranking)

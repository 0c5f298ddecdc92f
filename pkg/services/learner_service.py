"""Per-device learning: engagement gating, gradient aggregation, decay and sessions.

Every operation that changes a device returns a new DeviceState; the input
state is never touched, so a failure part-way through a session leaves the
learner's committed model exactly as it was.
"""
import logging
import math
import sys
from dataclasses import replace
from typing import Optional, Tuple

from config.settings import (
    GREEDY_WEIGHT,
    STRATEGY_FED_AVG,
    STRATEGY_GREEDY_NO_SIM,
    STRATEGY_GREEDY_SIM,
    STRATEGY_LOCAL,
    STRATEGY_MOMENTUM,
)
from models.device import DecayState, DeviceState, GammaEntry, GradientTable, SessionReport
from models.errors import DimensionError, ParameterError
from models.label_space import (
    LabelDistribution,
    LabelSet,
    label_set_of,
    restrict_to,
    similarity,
    weight,
)
from models.mlp import (
    GradientVector,
    LabeledBatch,
    ParameterVector,
    apply_step,
    average_parameters,
    l2_distance,
    loss_and_gradient,
    serialized_size_bytes,
)

logger = logging.getLogger(__name__)

_ALPHA_FLOOR = sys.float_info.min
_ALPHA_CEILING = math.nextafter(1.0, 0.0)


def _stable_sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def decay_factor(state: DecayState, current_model: ParameterVector) -> float:
    """Sigmoid of the scaled drift from the bootstrap model, as a running minimum.

    Updates `state.running_min_alpha` in place.
    """
    drift = l2_distance(state.w0, current_model)
    s = _stable_sigmoid(state.kappa * (state.phi - drift))
    s = min(max(s, _ALPHA_FLOOR), _ALPHA_CEILING)
    alpha = min(s, state.running_min_alpha)
    state.running_min_alpha = alpha
    return alpha


def should_engage(
    goal: LabelDistribution,
    neighbor_dist: LabelDistribution,
    tau: float,
    strategy: str,
) -> bool:
    if strategy == STRATEGY_LOCAL:
        return False
    if strategy in (STRATEGY_GREEDY_NO_SIM, STRATEGY_FED_AVG):
        return True
    if strategy in (STRATEGY_GREEDY_SIM, STRATEGY_MOMENTUM):
        return similarity(goal, neighbor_dist) > tau
    raise ParameterError(f"Unknown strategy '{strategy}'")


def greedy_aggregate(
    local_grad: GradientVector,
    neighbor_grad: GradientVector,
    w_local: float,
    w_neighbor: float,
) -> GradientVector:
    if len(local_grad) != len(neighbor_grad):
        raise DimensionError(
            f"Gradient lengths differ: {len(local_grad)} vs {len(neighbor_grad)}"
        )
    if w_local <= 0 or w_neighbor <= 0:
        raise ParameterError("Aggregation weights must be positive")
    mixed = w_local * local_grad.values + w_neighbor * neighbor_grad.values
    return GradientVector(mixed / (w_local + w_neighbor))


def _entry_weight(key: LabelSet, entry: GammaEntry, goal: LabelDistribution, lam: float) -> float:
    if entry.weight is not None:
        return entry.weight
    return weight(restrict_to(key), goal, lam)


def momentum_aggregate(
    local_grad: GradientVector,
    w_local: float,
    gamma: GradientTable,
    goal: LabelDistribution,
    lam: float,
) -> GradientVector:
    """Weighted mean of the local gradient and every gradient held in the table."""
    if w_local <= 0:
        raise ParameterError("Local aggregation weight must be positive")
    if len(gamma) == 0:
        return local_grad

    numerator = w_local * local_grad.values
    denominator = w_local
    for key, entry in gamma.items():
        if len(entry.gradient) != len(local_grad):
            raise DimensionError(
                f"Table entry {key} has {len(entry.gradient)} values, "
                f"local gradient has {len(local_grad)}"
            )
        w = _entry_weight(key, entry, goal, lam)
        numerator = numerator + w * entry.gradient.values
        denominator += w
    return GradientVector(numerator / denominator)


def store_gradient(
    gamma: GradientTable,
    label_set: LabelSet,
    grad: GradientVector,
    tick: int,
    weight: Optional[float] = None,
    subsume: bool = False,
) -> GradientTable:
    """Record `grad` under `label_set`, replacing any previous entry for that set.

    With `subsume`, keys strictly contained in another key are dropped.
    """
    entries = dict(gamma.entries)
    entries[label_set] = GammaEntry(grad, weight, tick)
    if subsume:
        keys = list(entries)
        entries = {
            key: entry
            for key, entry in entries.items()
            if not any(key != other and key.issubset(other) for other in keys)
        }
    return GradientTable(entries)


def session_bytes(state: DeviceState, rounds: int) -> int:
    """Model out and gradient back, per round."""
    return 2 * rounds * serialized_size_bytes(state.arch)


def run_session(
    learner: DeviceState,
    neighbor_data: LabeledBatch,
    neighbor_dist: LabelDistribution,
    rho: int,
    neighbor_id: int = -1,
    sim_time_s: float = 0.0,
) -> Tuple[DeviceState, SessionReport]:
    """Run `rho` rounds of remote gradient + aggregation and commit the result."""
    if rho < 1:
        raise ParameterError(f"A session needs at least one round, got {rho}")
    strategy = learner.strategy
    if strategy not in (STRATEGY_GREEDY_NO_SIM, STRATEGY_GREEDY_SIM, STRATEGY_MOMENTUM):
        raise ParameterError(f"Strategy '{strategy}' does not run gradient sessions")

    hyper = learner.hyper
    key = label_set_of(neighbor_dist)
    neighbor_weight = weight(neighbor_dist, learner.goal, hyper.lam)
    local_weight = weight(learner.data_dist, learner.goal, hyper.lam)

    decay = replace(learner.decay)
    gamma = learner.gamma
    working = learner.model
    report = SessionReport(
        learner_id=learner.device_id,
        neighbor_id=neighbor_id,
        strategy=strategy,
        rounds=rho,
        similarity=similarity(learner.goal, neighbor_dist),
        sim_time_s=sim_time_s,
    )

    for r in range(rho):
        _, neighbor_grad = loss_and_gradient(working, learner.arch, neighbor_data)
        gamma = store_gradient(
            gamma, key, neighbor_grad, learner.clock + r,
            weight=neighbor_weight, subsume=hyper.subsume,
        )
        local_loss, local_grad = loss_and_gradient(working, learner.arch, learner.local_data)
        if strategy == STRATEGY_MOMENTUM:
            update = momentum_aggregate(local_grad, local_weight, gamma, learner.goal, hyper.lam)
        else:
            update = greedy_aggregate(local_grad, neighbor_grad, GREEDY_WEIGHT, GREEDY_WEIGHT)
        alpha = decay_factor(decay, working)
        working = apply_step(working, update, hyper.eta * alpha)
        report.alphas.append(alpha)
        report.loss_trace.append(local_loss)

    report.bytes_sent = session_bytes(learner, rho)
    logger.debug(
        "Device %d learned from %d (%s): %d rounds, sim=%.3f, alpha=%.4f",
        learner.device_id, neighbor_id, key, rho, report.similarity, decay.running_min_alpha,
    )
    committed = replace(
        learner, model=working, gamma=gamma, decay=decay, clock=learner.clock + rho
    )
    return committed, report


def run_local_round(learner: DeviceState) -> DeviceState:
    """One full-batch step on the device's own data."""
    decay = replace(learner.decay)
    _, grad = loss_and_gradient(learner.model, learner.arch, learner.local_data)
    alpha = decay_factor(decay, learner.model)
    model = apply_step(learner.model, grad, learner.hyper.eta * alpha)
    return replace(learner, model=model, decay=decay, clock=learner.clock + 1)


def pairwise_fed_avg_session(
    a: DeviceState,
    b: DeviceState,
    rounds: int,
    sim_time_s: float = 0.0,
) -> Tuple[DeviceState, DeviceState, SessionReport]:
    """Federated averaging between two devices starting from the mean of their models."""
    if a.arch != b.arch or len(a.model) != len(b.model):
        raise DimensionError(
            f"Architectures differ: {a.arch.describe()} vs {b.arch.describe()}"
        )
    if rounds < 0:
        raise ParameterError(f"rounds must be non-negative, got {rounds}")

    decay_a = replace(a.decay)
    decay_b = replace(b.decay)
    shared = average_parameters([a.model, b.model])
    report = SessionReport(
        learner_id=a.device_id,
        neighbor_id=b.device_id,
        strategy=STRATEGY_FED_AVG,
        rounds=rounds,
        similarity=similarity(a.goal, b.data_dist),
        sim_time_s=sim_time_s,
    )

    for _ in range(rounds):
        loss_a, grad_a = loss_and_gradient(shared, a.arch, a.local_data)
        _, grad_b = loss_and_gradient(shared, b.arch, b.local_data)
        alpha_a = decay_factor(decay_a, shared)
        alpha_b = decay_factor(decay_b, shared)
        step_a = apply_step(shared, grad_a, a.hyper.eta * alpha_a)
        step_b = apply_step(shared, grad_b, b.hyper.eta * alpha_b)
        shared = average_parameters([step_a, step_b])
        report.alphas.append(alpha_a)
        report.loss_trace.append(loss_a)

    report.bytes_sent = session_bytes(a, rounds)
    new_a = replace(a, model=shared, decay=decay_a, clock=a.clock + rounds)
    new_b = replace(b, model=shared, decay=decay_b, clock=b.clock + rounds)
    return new_a, new_b, report

"""Run orchestration: bootstrap training, encounter streams, sessions and evaluation."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import (
    BOOTSTRAP_HOLDOUT,
    BOOTSTRAP_PATIENCE,
    BOOTSTRAP_RATE,
    STRATEGY_FED_AVG,
    STRATEGY_LOCAL,
    STRATEGY_MOMENTUM,
)
from models.device import DeviceState, SessionReport, make_device
from models.errors import CapacityError, EmptyDataError, ParameterError
from models.label_space import LabelDistribution, label_set_of
from models.mlp import (
    LabeledBatch,
    MlpArchitecture,
    ParameterVector,
    apply_step,
    forward,
    init_parameters,
    loss_and_gradient,
    predict,
    serialized_size_bytes,
)
from models.scenario import DATASET_IDX, KIND_MOBILITY, PhaseSpec, Scenario
from services.dataset_service import (
    DataPool,
    GoalTestSet,
    build_goal_test_set,
    load_idx,
    partition,
    synth_train_test,
)
from services.learner_service import (
    pairwise_fed_avg_session,
    run_local_round,
    run_session,
    should_engage,
)
from services.linktime_service import (
    ComputeProfile,
    LinkProfile,
    compute_profile,
    feasible_rounds,
    link_profile,
    session_time_bound,
    t_agg_for,
    t_send,
)
from services.mobility_service import (
    Arena,
    Encounter,
    LevyParams,
    Trajectory,
    contact_duration,
    detect_encounters,
    generate_trajectories,
)
from services.seed_service import derive_seed, stream

logger = logging.getLogger(__name__)

MOBILITY_LOCAL_CADENCE_NOTE = (
    "devices without a session in an evaluation interval run one local round "
    "before that interval's evaluation"
)


@dataclass(frozen=True)
class ScheduledEncounter:
    neighbor_dist: LabelDistribution
    duration_s: float
    phase: int
    fixed: bool


@dataclass(frozen=True)
class EncounterSchedule:
    encounters: Tuple[ScheduledEncounter, ...]

    def __post_init__(self):
        if not self.encounters:
            raise ParameterError("An encounter schedule needs at least one encounter")
        if any(e.duration_s <= 0 for e in self.encounters):
            raise ParameterError("Encounter durations must be positive")

    def __len__(self) -> int:
        return len(self.encounters)

    def __iter__(self):
        return iter(self.encounters)

    def __getitem__(self, index: int) -> ScheduledEncounter:
        return self.encounters[index]


@dataclass
class RunMetrics:
    kind: str
    rows: List[dict] = field(default_factory=list)
    sessions: List[SessionReport] = field(default_factory=list)
    encounters: List[Encounter] = field(default_factory=list)
    trajectories: List[Trajectory] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def total_bytes(self) -> int:
        return sum(row["bytes_sent"] for row in self.rows)

    @property
    def engaged_sessions(self) -> int:
        return len(self.sessions)


# ---------------------------------------------------------------------------
# Setup helpers
# ---------------------------------------------------------------------------

def load_pools(scenario: Scenario) -> Tuple[DataPool, DataPool]:
    spec = scenario.dataset
    if spec.kind == DATASET_IDX:
        train = load_idx(spec.resolve("train_images"), spec.resolve("train_labels"), spec.num_labels)
        test = load_idx(spec.resolve("test_images"), spec.resolve("test_labels"), spec.num_labels)
        return train, test
    return synth_train_test(
        spec.num_labels,
        spec.per_label,
        spec.test_per_label,
        spec.input_dim,
        spec.spread,
        derive_seed(scenario.seed, "dataset"),
    )


def build_architecture(scenario: Scenario, pool: DataPool) -> MlpArchitecture:
    return MlpArchitecture(
        input_dim=pool.input_dim,
        hidden_dims=tuple(scenario.hidden_dims),
        output_dim=pool.num_labels,
    )


def resolve_profiles(scenario: Scenario) -> Tuple[LinkProfile, ComputeProfile]:
    link_overrides = {
        k: v for k, v in (
            ("datarate_bps", scenario.link.datarate_bps),
            ("t_send_override", scenario.link.t_send_override),
        ) if v is not None
    }
    compute_overrides = {
        k: v for k, v in (
            ("t_train", scenario.compute.t_train),
            ("t_agg_worst_case", scenario.compute.t_agg_worst_case),
        ) if v is not None
    }
    return (
        link_profile(scenario.link.profile, **link_overrides),
        compute_profile(scenario.compute.profile, **compute_overrides),
    )


def _fit(
    params: ParameterVector,
    arch: MlpArchitecture,
    batch: LabeledBatch,
    epochs: int,
    rate: float,
) -> ParameterVector:
    for _ in range(epochs):
        _, grad = loss_and_gradient(params, arch, batch)
        params = apply_step(params, grad, rate)
    return params


def train_bootstrap(
    batch: LabeledBatch,
    arch: MlpArchitecture,
    epochs: int,
    seed: int,
    rate: float = BOOTSTRAP_RATE,
    patience: int = BOOTSTRAP_PATIENCE,
    holdout: float = BOOTSTRAP_HOLDOUT,
) -> ParameterVector:
    """Full-batch training that stops once held-out loss has risen `patience` epochs in a row.

    Returns the parameters with the lowest held-out loss seen.
    """
    if len(batch) == 0:
        raise EmptyDataError("Bootstrap set is empty")
    params = init_parameters(arch, derive_seed(seed, "init"))
    if epochs == 0:
        return params

    order = stream(seed, "bootstrap").permutation(len(batch))
    n_held = int(round(holdout * len(batch)))
    if n_held == 0 or n_held == len(batch):
        logger.warning("Bootstrap set too small for a held-out slice; training without early stop")
        return _fit(params, arch, batch, epochs, rate)
    held = batch.subset(order[:n_held])
    train = batch.subset(order[n_held:])

    best, best_loss = params, forward(params, arch, held)[1]
    previous, rises = best_loss, 0
    for epoch in range(epochs):
        _, grad = loss_and_gradient(params, arch, train)
        params = apply_step(params, grad, rate)
        loss = forward(params, arch, held)[1]
        if loss < best_loss:
            best, best_loss = params, loss
        rises = rises + 1 if loss > previous else 0
        previous = loss
        if rises >= patience:
            logger.info("Bootstrap stopped early after %d epochs", epoch + 1)
            break
    logger.info("Bootstrap trained: held-out loss %.4f", best_loss)
    return best


def evaluate(device: DeviceState, test_set: GoalTestSet) -> float:
    """Top-1 accuracy on the device's goal test set."""
    if len(test_set) == 0:
        raise ParameterError("Goal test set is empty")
    predicted = predict(device.model, device.arch, test_set.batch.inputs)
    return float(np.mean(predicted == test_set.batch.labels))


def _row(device: DeviceState, sim_time_s: float, encounter_idx: int, accuracy: float,
         bytes_sent: int, engaged: bool) -> dict:
    return {
        "sim_time_s": float(sim_time_s),
        "encounter_idx": int(encounter_idx),
        "device_id": device.device_id,
        "strategy": device.strategy,
        "goal_accuracy": accuracy,
        "alpha": device.decay.running_min_alpha,
        "gamma_size": len(device.gamma),
        "bytes_sent": int(bytes_sent),
        "engaged": bool(engaged),
    }


# ---------------------------------------------------------------------------
# Controlled scenario
# ---------------------------------------------------------------------------

def build_controlled_schedule(
    phases: Sequence[PhaseSpec],
    seed: int,
    min_duration_s: float,
    num_labels: int = 10,
) -> EncounterSchedule:
    """Scripted neighbor distributions per phase.

    In each phase exactly `fixed_fraction` of the positions (chosen at random)
    see only the phase's fixed labels; the rest see `random_labels` labels
    drawn afresh from the whole label space. Durations lie in
    [min_duration_s, 2 * min_duration_s) so every session fits.
    """
    if not phases:
        raise ParameterError("A controlled schedule needs at least one phase")
    if min_duration_s <= 0:
        raise ParameterError(f"minimum duration must be positive, got {min_duration_s}")
    rng = stream(seed, "schedule")
    encounters = []
    for number, phase in enumerate(phases):
        n_fixed = int(round(phase.fixed_fraction * phase.encounters))
        fixed_positions = set(rng.choice(phase.encounters, size=n_fixed, replace=False).tolist())
        fixed_dist = LabelDistribution.uniform(phase.fixed_labels, num_labels)
        for position in range(phase.encounters):
            fixed = position in fixed_positions
            if fixed:
                dist = fixed_dist
            else:
                labels = rng.choice(num_labels, size=phase.random_labels, replace=False)
                dist = LabelDistribution.uniform(sorted(labels.tolist()), num_labels)
            duration = min_duration_s * rng.uniform(1.0, 2.0)
            encounters.append(ScheduledEncounter(dist, float(duration), number, fixed))
    logger.info("Built controlled schedule of %d encounters", len(encounters))
    return EncounterSchedule(tuple(encounters))


def scale_phases(phases: Sequence[PhaseSpec], total: int) -> Tuple[PhaseSpec, ...]:
    """Shrink a phase list to `total` encounters, keeping each phase's share."""
    weights = np.array([p.encounters for p in phases], dtype=np.float64)
    exact = weights / weights.sum() * total
    counts = np.floor(exact).astype(int)
    order = sorted(range(len(phases)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: total - counts.sum()]:
        counts[i] += 1
    return tuple(replace(p, encounters=int(c)) for p, c in zip(phases, counts) if c > 0)


def run_controlled(scenario: Scenario, workers: int = 1) -> RunMetrics:
    """One learner working through the scripted encounter schedule.

    Encounters are sequential for a single learner, so ``workers`` only keeps
    the signature in line with ``run_mobility``.
    """
    train_pool, test_pool = load_pools(scenario)
    return run_controlled_on(scenario, train_pool, test_pool)


def run_controlled_on(
    scenario: Scenario,
    train_pool: DataPool,
    test_pool: DataPool,
    bootstrap: Optional[ParameterVector] = None,
    phases: Optional[Sequence[PhaseSpec]] = None,
) -> RunMetrics:
    spec = scenario.controlled
    num_labels = train_pool.num_labels
    arch = build_architecture(scenario, train_pool)
    hyper = scenario.hyper
    strategy = scenario.strategy
    link, compute = resolve_profiles(scenario)
    send_s = t_send(serialized_size_bytes(arch), link)

    phases = phases or spec.phases
    # feasibility charges len(gamma) + 1, which never exceeds the encounter count
    min_duration = session_time_bound(hyper.rho, send_s, compute, sum(p.encounters for p in phases))
    schedule = build_controlled_schedule(phases, scenario.seed, min_duration, num_labels)

    learner_dist = LabelDistribution.uniform(spec.learner_labels, num_labels)
    goal = LabelDistribution.uniform(spec.goal_labels, num_labels)
    fraction = 0.0 if bootstrap is not None else scenario.bootstrap.fraction
    device_specs = [(learner_dist, spec.local_size)]
    device_specs += [(e.neighbor_dist, spec.neighbor_size) for e in schedule]
    try:
        split = partition(train_pool, fraction, device_specs, derive_seed(scenario.seed, "partition"))
    except CapacityError as err:
        if err.owner:
            raise err.at_encounter(err.owner)
        raise

    samples = train_pool.samples
    if bootstrap is None:
        bootstrap = train_bootstrap(
            samples.subset(split.bootstrap_indices),
            arch,
            scenario.bootstrap.epochs,
            scenario.seed,
            rate=scenario.bootstrap.rate,
            patience=scenario.bootstrap.patience,
            holdout=scenario.bootstrap.holdout,
        )
    learner = make_device(
        0, arch, bootstrap, samples.subset(split.device_indices[0]),
        learner_dist, goal, strategy, hyper,
    )
    test_set = build_goal_test_set(test_pool, goal, spec.test_size, derive_seed(scenario.seed, "goals"))

    metrics = RunMetrics(kind="controlled")
    sim_time = 0.0
    for index, encounter in enumerate(schedule, start=1):
        sim_time += encounter.duration_s
        neighbor_data = samples.subset(split.device_indices[index])
        report = None

        if strategy == STRATEGY_FED_AVG:
            rounds = feasible_rounds(encounter.duration_s, send_s, compute.t_train, 0.0, hyper.rho)
            if rounds > 0:
                neighbor = make_device(
                    index, arch, bootstrap, neighbor_data, encounter.neighbor_dist,
                    encounter.neighbor_dist, STRATEGY_FED_AVG, hyper,
                )
                learner, _, report = pairwise_fed_avg_session(learner, neighbor, rounds, sim_time)
        elif should_engage(goal, encounter.neighbor_dist, hyper.tau, strategy):
            t_agg = t_agg_for(len(learner.gamma) + 1, compute) if strategy == STRATEGY_MOMENTUM else 0.0
            rounds = feasible_rounds(encounter.duration_s, send_s, compute.t_train, t_agg, hyper.rho)
            if rounds > 0:
                learner, report = run_session(
                    learner, neighbor_data, encounter.neighbor_dist, rounds,
                    neighbor_id=index, sim_time_s=sim_time,
                )

        if report is None:
            learner = run_local_round(learner)
        else:
            metrics.sessions.append(report)
        accuracy = evaluate(learner, test_set)
        metrics.rows.append(_row(
            learner, sim_time, index, accuracy,
            report.bytes_sent if report else 0, report is not None,
        ))
        logger.debug("Encounter %d: engaged=%s accuracy=%.4f", index, report is not None, accuracy)

    logger.info(
        "Controlled run (%s) finished: final accuracy %.4f, %d sessions",
        strategy, metrics.rows[-1]["goal_accuracy"], len(metrics.sessions),
    )
    return metrics


# ---------------------------------------------------------------------------
# Mobility scenario
# ---------------------------------------------------------------------------

def region_labels(region: int, num_labels: int) -> Tuple[int, int]:
    return (2 * region) % num_labels, (2 * region + 1) % num_labels


def draw_goal_labels(region: int, extra: int, num_labels: int, rng: np.random.Generator) -> Tuple[int, ...]:
    own = set(region_labels(region, num_labels))
    others = [label for label in range(num_labels) if label not in own]
    if extra > len(others):
        raise ParameterError(f"Cannot draw {extra} extra goal labels from {len(others)} remaining")
    chosen = rng.choice(others, size=extra, replace=False).tolist()
    return tuple(sorted(own | set(chosen)))


@dataclass
class _Exchange:
    """Outcome of one encounter, applied to the device table in encounter order."""

    a: DeviceState
    b: DeviceState
    reports: List[SessionReport]
    engaged: Tuple[bool, bool]


def _learn_from(
    learner: DeviceState,
    neighbor: DeviceState,
    duration_s: float,
    send_s: float,
    compute: ComputeProfile,
    sim_time: float,
) -> Tuple[DeviceState, Optional[SessionReport]]:
    if learner.strategy in (STRATEGY_LOCAL, STRATEGY_FED_AVG):
        return learner, None
    if not should_engage(learner.goal, neighbor.data_dist, learner.hyper.tau, learner.strategy):
        return learner, None
    t_agg = t_agg_for(len(learner.gamma) + 1, compute) if learner.strategy == STRATEGY_MOMENTUM else 0.0
    rounds = feasible_rounds(
        duration_s, send_s, compute.t_train, t_agg, learner.hyper.rho, split_both_ways=True
    )
    if rounds == 0:
        return learner, None
    return run_session(
        learner, neighbor.local_data, neighbor.data_dist, rounds,
        neighbor_id=neighbor.device_id, sim_time_s=sim_time,
    )


def _exchange(
    a: DeviceState,
    b: DeviceState,
    duration_s: float,
    send_s: float,
    compute: ComputeProfile,
    sim_time: float,
) -> _Exchange:
    if a.strategy == STRATEGY_FED_AVG and b.strategy == STRATEGY_FED_AVG:
        rounds = feasible_rounds(duration_s, send_s, compute.t_train, 0.0, a.hyper.rho)
        if rounds == 0:
            return _Exchange(a, b, [], (False, False))
        new_a, new_b, report = pairwise_fed_avg_session(a, b, rounds, sim_time)
        return _Exchange(new_a, new_b, [report], (True, True))

    new_a, report_a = _learn_from(a, b, duration_s, send_s, compute, sim_time)
    new_b, report_b = _learn_from(b, a, duration_s, send_s, compute, sim_time)
    reports = [r for r in (report_a, report_b) if r is not None]
    return _Exchange(new_a, new_b, reports, (report_a is not None, report_b is not None))


def _waves(encounters: Sequence[Encounter]) -> List[List[Encounter]]:
    """Split consecutive encounters into runs whose device pairs are disjoint."""
    waves, current, busy = [], [], set()
    for encounter in encounters:
        pair = {encounter.device_a, encounter.device_b}
        if busy & pair:
            waves.append(current)
            current, busy = [], set()
        current.append(encounter)
        busy |= pair
    if current:
        waves.append(current)
    return waves


def run_mobility(scenario: Scenario, workers: int = 1) -> RunMetrics:
    """Levy-walk devices learning from each other whenever they come within range."""
    spec = scenario.mobility
    hyper = scenario.hyper
    train_pool, test_pool = load_pools(scenario)
    num_labels = train_pool.num_labels
    arch = build_architecture(scenario, train_pool)
    link, compute = resolve_profiles(scenario)
    send_s = t_send(serialized_size_bytes(arch), link)

    arena = Arena(spec.arena_side, spec.comm_range, spec.tick_s)
    levy = LevyParams(
        spec.flight_exponent, spec.flight_cap, spec.pause_exponent, spec.pause_cap, spec.speed
    )
    trajectories = generate_trajectories(
        arena, levy, spec.devices_per_region, spec.episodes, spec.episode_ticks, scenario.seed
    )
    encounters = detect_encounters(trajectories, arena)

    goals_rng = stream(scenario.seed, "goals")
    dists, goals, strategies = [], [], []
    for trajectory in trajectories:
        region = trajectory.anchor_region
        dists.append(LabelDistribution.uniform(region_labels(region, num_labels), num_labels))
        goal_labels = draw_goal_labels(region, spec.goal_extra_labels, num_labels, goals_rng)
        goals.append(LabelDistribution.uniform(goal_labels, num_labels))
        strategies.append(spec.strategy_overrides.get(trajectory.device_id, scenario.strategy))

    split = partition(
        train_pool,
        scenario.bootstrap.fraction,
        [(dist, spec.local_size) for dist in dists],
        derive_seed(scenario.seed, "partition"),
    )
    samples = train_pool.samples
    bootstrap = train_bootstrap(
        samples.subset(split.bootstrap_indices),
        arch,
        scenario.bootstrap.epochs,
        scenario.seed,
        rate=scenario.bootstrap.rate,
        patience=scenario.bootstrap.patience,
        holdout=scenario.bootstrap.holdout,
    )

    devices: Dict[int, DeviceState] = {}
    test_sets: Dict[int, GoalTestSet] = {}
    for i, trajectory in enumerate(trajectories):
        device_id = trajectory.device_id
        devices[device_id] = make_device(
            device_id, arch, bootstrap, samples.subset(split.device_indices[i]),
            dists[i], goals[i], strategies[i], hyper,
        )
        test_sets[device_id] = build_goal_test_set(
            test_pool, goals[i], spec.test_size, derive_seed(scenario.seed, f"goals/{device_id}")
        )

    metrics = RunMetrics(
        kind="mobility",
        encounters=encounters,
        trajectories=trajectories,
        notes=[MOBILITY_LOCAL_CADENCE_NOTE],
    )
    total_s = spec.episodes * spec.episode_ticks * spec.tick_s
    n_evals = int(np.ceil(total_s / spec.eval_interval_s - 1e-9))
    boundaries = [min((k + 1) * spec.eval_interval_s, total_s) for k in range(n_evals)]
    ids = sorted(devices)

    encounter_counts = {i: 0 for i in ids}
    cursor = 0
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for boundary in boundaries:
            batch = []
            while cursor < len(encounters) and encounters[cursor].start_tick * spec.tick_s < boundary:
                batch.append(encounters[cursor])
                cursor += 1

            interval_bytes = {i: 0 for i in ids}
            interval_engaged = {i: False for i in ids}
            for wave in _waves(batch):
                jobs = [
                    pool.submit(
                        _exchange,
                        devices[e.device_a],
                        devices[e.device_b],
                        contact_duration(e, arena),
                        send_s,
                        compute,
                        e.start_tick * spec.tick_s,
                    )
                    for e in wave
                ]
                for encounter, job in zip(wave, jobs):
                    outcome = job.result()
                    devices[encounter.device_a] = outcome.a
                    devices[encounter.device_b] = outcome.b
                    encounter_counts[encounter.device_a] += 1
                    encounter_counts[encounter.device_b] += 1
                    for report in outcome.reports:
                        interval_bytes[report.learner_id] += report.bytes_sent
                        metrics.sessions.append(report)
                    interval_engaged[encounter.device_a] |= outcome.engaged[0]
                    interval_engaged[encounter.device_b] |= outcome.engaged[1]

            idle = [i for i in ids if not interval_engaged[i]]
            for device_id, state in zip(idle, pool.map(run_local_round, [devices[i] for i in idle])):
                devices[device_id] = state

            accuracies = list(pool.map(lambda i: evaluate(devices[i], test_sets[i]), ids))
            for device_id, accuracy in zip(ids, accuracies):
                metrics.rows.append(_row(
                    devices[device_id], boundary, encounter_counts[device_id], accuracy,
                    interval_bytes[device_id], interval_engaged[device_id],
                ))
            logger.debug(
                "t=%.0fs: %d encounters, mean accuracy %.4f",
                boundary, len(batch), float(np.mean(accuracies)),
            )

    logger.info(
        "Mobility run finished: %d devices, %d encounters, %d sessions",
        len(ids), len(encounters), len(metrics.sessions),
    )
    return metrics


def run_scenario(scenario: Scenario, workers: int = 1) -> RunMetrics:
    if scenario.kind == KIND_MOBILITY:
        return run_mobility(scenario, workers)
    return run_controlled(scenario, workers)


# ---------------------------------------------------------------------------
# Label-overlap sweep
# ---------------------------------------------------------------------------

def run_overlap_sweep(scenario: Scenario) -> List[dict]:
    """Federated-averaging rounds a learner needs to gain `target_gain` accuracy,
    as the partner's labels slide away from the learner's goal.
    """
    spec = scenario.sweep
    train_pool, test_pool = load_pools(scenario)
    num_labels = train_pool.num_labels
    arch = build_architecture(scenario, train_pool)
    width = num_labels // 2
    goal = LabelDistribution.uniform(range(width), num_labels)
    rate = scenario.bootstrap.rate

    rows = []
    for offset in range(spec.max_offset + 1):
        partner = LabelDistribution.uniform(
            [(offset + k) % num_labels for k in range(width)], num_labels
        )
        for repeat in range(spec.repeats):
            seed = derive_seed(scenario.seed, f"sweep/{offset}/{repeat}")
            split = partition(
                train_pool, 0.0, [(goal, spec.client_size), (partner, spec.client_size)], seed
            )
            data_a = train_pool.samples.subset(split.device_indices[0])
            data_b = train_pool.samples.subset(split.device_indices[1])
            init = init_parameters(arch, seed)
            a = make_device(0, arch, _fit(init, arch, data_a, spec.pretrain_epochs, rate),
                            data_a, goal, goal, STRATEGY_FED_AVG, scenario.hyper)
            b = make_device(1, arch, _fit(init, arch, data_b, spec.pretrain_epochs, rate),
                            data_b, partner, partner, STRATEGY_FED_AVG, scenario.hyper)
            test_set = build_goal_test_set(test_pool, goal, spec.test_size, seed)

            base = evaluate(a, test_set)
            a, b, _ = pairwise_fed_avg_session(a, b, 0)
            accuracy = evaluate(a, test_set)
            needed: Optional[int] = 0 if accuracy >= base + spec.target_gain else None
            rounds = 0
            while needed is None and rounds < spec.max_rounds:
                a, b, _ = pairwise_fed_avg_session(a, b, 1)
                rounds += 1
                accuracy = evaluate(a, test_set)
                if accuracy >= base + spec.target_gain:
                    needed = rounds
            rows.append({
                "offset": offset,
                "repeat": repeat,
                "rounds_needed": needed,
                "base_accuracy": base,
                "final_accuracy": accuracy,
            })
            logger.debug("offset %d repeat %d: rounds needed %s", offset, repeat, needed)
    return rows


def label_set_summary(schedule: EncounterSchedule) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for encounter in schedule:
        key = str(label_set_of(encounter.neighbor_dist))
        counts[key] = counts.get(key, 0) + 1
    return counts

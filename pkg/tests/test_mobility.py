"""Levy-walk mobility and proximity encounters.

Groups:
  - truncated Levy sampling
  - arena geometry
  - trajectories
  - encounter detection against a brute-force scan
"""
import numpy as np
import pytest

from models.errors import DimensionError, ParameterError
from services.mobility_service import (
    NUM_REGIONS,
    Arena,
    Encounter,
    LevyParams,
    Trajectory,
    contact_duration,
    detect_encounters,
    encounters_to_dataframe,
    generate_trajectories,
    sample_truncated_levy,
    trajectories_to_dataframe,
    truncated_levy_median,
)


# ---------------------------------------------------------------------------
# Truncated Levy
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("exponent,cap", [(1.5, 500.0), (0.8, 600.0), (2.0, 50.0)])
def test_levy_samples_stay_below_cap(exponent, cap):
    draws = sample_truncated_levy(exponent, cap, np.random.default_rng(0), size=100_000)
    assert draws.max() < cap
    assert draws.min() >= cap / 1000 * (1 - 1e-12)


@pytest.mark.parametrize("exponent,cap", [(1.5, 500.0), (1.0, 600.0)])
def test_levy_median_matches_inverse_cdf(exponent, cap):
    draws = sample_truncated_levy(exponent, cap, np.random.default_rng(1), size=100_000)
    analytic = truncated_levy_median(exponent, cap)
    assert abs(np.median(draws) - analytic) / analytic < 0.02


def test_levy_mean_matches_truncated_pareto_mean():
    cap = 1.0
    lmin = cap / 1000
    draws = sample_truncated_levy(2.0, cap, np.random.default_rng(3), size=200_000)
    # exponent 2 on [lmin, cap): mean is 2 * lmin * cap / (lmin + cap)
    analytic = 2 * lmin * cap / (lmin + cap)
    assert abs(draws.mean() - analytic) / analytic < 0.02


def test_levy_scalar_draw():
    value = sample_truncated_levy(1.5, 10.0, np.random.default_rng(2))
    assert isinstance(value, float)


def test_levy_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        sample_truncated_levy(2.5, 10.0, np.random.default_rng(0))
    with pytest.raises(ParameterError):
        LevyParams(speed=0.0)


# ---------------------------------------------------------------------------
# Arena
# ---------------------------------------------------------------------------

def test_regions_are_row_major():
    arena = Arena(side=900.0, comm_range=50.0)
    assert arena.region_bounds(0) == (0.0, 0.0, 300.0, 300.0)
    assert arena.region_bounds(5) == (600.0, 300.0, 900.0, 600.0)
    assert arena.region_of(650.0, 350.0) == 5
    assert arena.region_of(900.0, 900.0) == NUM_REGIONS - 1


def test_comm_range_must_be_below_region_side():
    with pytest.raises(ParameterError):
        Arena(side=300.0, comm_range=100.0)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def walks():
    arena = Arena(side=600.0, comm_range=40.0)
    params = LevyParams(flight_cap=300.0, pause_cap=120.0)
    return arena, generate_trajectories(arena, params, 2, 3, 400, seed=7)


def test_trajectory_shape_and_bounds(walks):
    arena, trajectories = walks
    assert [t.device_id for t in trajectories] == list(range(18))
    for t in trajectories:
        assert t.positions.shape == (1200, 2)
        assert t.positions.min() >= 0.0 and t.positions.max() <= arena.side
        assert arena.region_of(*t.home) == t.anchor_region == t.device_id // 2


def test_episodes_start_and_end_at_home(walks):
    _, trajectories = walks
    for t in trajectories:
        for episode in range(3):
            start, end = episode * 400, (episode + 1) * 400 - 1
            assert np.allclose(t.positions[start], t.home)
            assert np.allclose(t.positions[end], t.home)


def test_steps_never_exceed_speed(walks):
    arena, trajectories = walks
    speed = LevyParams().speed
    for t in trajectories:
        steps = np.linalg.norm(np.diff(t.positions, axis=0), axis=1)
        assert steps.max() <= speed * arena.tick_s + 1e-6


def test_trajectories_are_seeded():
    arena = Arena(side=600.0, comm_range=40.0)
    params = LevyParams(flight_cap=300.0, pause_cap=120.0)
    a = generate_trajectories(arena, params, 1, 1, 300, seed=3)
    b = generate_trajectories(arena, params, 1, 1, 300, seed=3)
    c = generate_trajectories(arena, params, 1, 1, 300, seed=4)
    assert all(np.array_equal(x.positions, y.positions) for x, y in zip(a, b))
    assert not all(np.array_equal(x.positions, y.positions) for x, y in zip(a, c))


def test_trajectory_dataframe_columns(walks):
    _, trajectories = walks
    df = trajectories_to_dataframe(trajectories[:2])
    assert list(df.columns) == ["tick", "deviceId", "x", "y"]
    assert len(df) == 2 * 1200


# ---------------------------------------------------------------------------
# Encounters
# ---------------------------------------------------------------------------

def _brute_force(trajectories, comm_range):
    found = []
    for i, a in enumerate(trajectories):
        for b in trajectories[i + 1:]:
            start = None
            for tick in range(len(a)):
                near = np.hypot(*(a.positions[tick] - b.positions[tick])) <= comm_range
                if near and start is None:
                    start = tick
                elif not near and start is not None:
                    found.append((a.device_id, b.device_id, start, tick - start))
                    start = None
            if start is not None:
                found.append((a.device_id, b.device_id, start, len(a) - start))
    return sorted(found, key=lambda e: (e[2], e[0], e[1]))


def test_encounters_match_brute_force_scan():
    rng = np.random.default_rng(42)
    arena = Arena(side=300.0, comm_range=30.0)
    trajectories = []
    for device_id in range(5):
        steps = rng.normal(0.0, 4.0, size=(2000, 2))
        positions = np.clip(150.0 + np.cumsum(steps, axis=0), 0.0, 300.0)
        trajectories.append(Trajectory(device_id, positions, 4, (150.0, 150.0)))

    detected = detect_encounters(trajectories, arena)
    expected = _brute_force(trajectories, arena.comm_range)
    assert len(expected) > 0
    assert [(e.device_a, e.device_b, e.start_tick, e.duration_ticks) for e in detected] == expected


def test_static_pair_is_one_encounter():
    arena = Arena(side=300.0, comm_range=30.0)
    near = Trajectory(0, np.tile([10.0, 10.0], (50, 1)), 0, (10.0, 10.0))
    close = Trajectory(1, np.tile([30.0, 10.0], (50, 1)), 0, (30.0, 10.0))
    far = Trajectory(2, np.tile([200.0, 200.0], (50, 1)), 8, (200.0, 200.0))
    encounters = detect_encounters([far, close, near], arena)
    assert encounters == [Encounter(0, 1, 0, 50)]
    assert encounters[0].end_tick == 50
    assert contact_duration(encounters[0], arena) == 50.0


def test_contact_duration_matches_trajectory_replay():
    arena = Arena(side=300.0, comm_range=40.0)
    params = LevyParams(flight_cap=150.0, pause_cap=60.0)
    trajectories = generate_trajectories(arena, params, 2, 1, 800, seed=5)
    by_id = {t.device_id: t.positions for t in trajectories}
    encounters = detect_encounters(trajectories, arena)
    assert encounters

    for e in encounters:
        gaps = np.linalg.norm(by_id[e.device_a] - by_id[e.device_b], axis=1)
        in_range = int((gaps[e.start_tick:e.end_tick] <= arena.comm_range).sum())
        assert in_range == e.duration_ticks
        if e.start_tick > 0:
            assert gaps[e.start_tick - 1] > arena.comm_range
        if e.end_tick < len(gaps):
            assert gaps[e.end_tick] > arena.comm_range
        assert contact_duration(e, arena) == in_range * arena.tick_s


def test_encounters_need_equal_lengths():
    arena = Arena(side=300.0, comm_range=30.0)
    with pytest.raises(DimensionError):
        detect_encounters([
            Trajectory(0, np.zeros((5, 2)), 0, (0.0, 0.0)),
            Trajectory(1, np.zeros((6, 2)), 0, (0.0, 0.0)),
        ], arena)


def test_encounter_dataframe_columns():
    df = encounters_to_dataframe([Encounter(0, 3, 12, 40)])
    assert list(df.columns) == ["deviceA", "deviceB", "startTick", "durationTicks"]
    assert df.iloc[0].tolist() == [0, 3, 12, 40]

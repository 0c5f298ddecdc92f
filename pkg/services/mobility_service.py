"""Levy-walk mobility in a square arena, proximity encounters and their dumps."""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import pandas as pd

from config.settings import (
    ARENA_SIDE,
    COMM_RANGE,
    FLIGHT_CAP,
    FLIGHT_EXPONENT,
    LEVY_MIN_RATIO,
    PAUSE_CAP,
    PAUSE_EXPONENT,
    SPEED,
    TICK_SECONDS,
)
from models.errors import DimensionError, ParameterError
from services.seed_service import stream

logger = logging.getLogger(__name__)

GRID = 3
NUM_REGIONS = GRID * GRID


@dataclass(frozen=True)
class LevyParams:
    flight_exponent: float = FLIGHT_EXPONENT
    flight_cap: float = FLIGHT_CAP
    pause_exponent: float = PAUSE_EXPONENT
    pause_cap: float = PAUSE_CAP
    speed: float = SPEED

    def __post_init__(self):
        for name in ("flight_exponent", "pause_exponent"):
            value = getattr(self, name)
            if not 0 < value <= 2:
                raise ParameterError(f"{name} must lie in (0, 2], got {value}")
        if self.flight_cap <= 0 or self.pause_cap <= 0:
            raise ParameterError("flight and pause caps must be positive")
        if self.speed <= 0:
            raise ParameterError(f"speed must be positive, got {self.speed}")


@dataclass(frozen=True)
class Arena:
    side: float = ARENA_SIDE
    comm_range: float = COMM_RANGE
    tick_s: float = TICK_SECONDS

    def __post_init__(self):
        if self.side <= 0 or self.tick_s <= 0:
            raise ParameterError("arena side and tick must be positive")
        if not 0 < self.comm_range < self.region_side:
            raise ParameterError(
                f"comm range {self.comm_range} must be positive and below the region side {self.region_side}"
            )

    @property
    def region_side(self) -> float:
        return self.side / GRID

    def region_bounds(self, region: int) -> Tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of a region; ids run row-major from the origin corner."""
        if not 0 <= region < NUM_REGIONS:
            raise ParameterError(f"region must lie in [0, {NUM_REGIONS}), got {region}")
        row, col = divmod(region, GRID)
        s = self.region_side
        return col * s, row * s, (col + 1) * s, (row + 1) * s

    def region_of(self, x: float, y: float) -> int:
        col = min(int(x // self.region_side), GRID - 1)
        row = min(int(y // self.region_side), GRID - 1)
        return row * GRID + col


@dataclass
class Trajectory:
    device_id: int
    positions: np.ndarray
    anchor_region: int
    home: Tuple[float, float]

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class Encounter:
    device_a: int
    device_b: int
    start_tick: int
    duration_ticks: int

    @property
    def end_tick(self) -> int:
        return self.start_tick + self.duration_ticks


def sample_truncated_levy(exponent: float, cap: float, rng: np.random.Generator, size=None):
    """Power-law draws on [cap / 1000, cap) by inverting the truncated CDF."""
    if not 0 < exponent <= 2:
        raise ParameterError(f"exponent must lie in (0, 2], got {exponent}")
    if cap <= 0:
        raise ParameterError(f"cap must be positive, got {cap}")
    lmin = cap / LEVY_MIN_RATIO
    lo = lmin ** -exponent
    hi = cap ** -exponent
    u = rng.random(size)
    draws = (lo - u * (lo - hi)) ** (-1.0 / exponent)
    draws = np.minimum(draws, np.nextafter(cap, 0.0))
    if size is None:
        return float(draws)
    return draws


def truncated_levy_median(exponent: float, cap: float) -> float:
    lmin = cap / LEVY_MIN_RATIO
    lo = lmin ** -exponent
    hi = cap ** -exponent
    return (lo - 0.5 * (lo - hi)) ** (-1.0 / exponent)


def _reflect(values: np.ndarray, side: float) -> np.ndarray:
    folded = np.mod(values, 2 * side)
    return np.where(folded > side, 2 * side - folded, folded)


def _straight_line(start: np.ndarray, end: np.ndarray, steps: int) -> np.ndarray:
    """Positions after each of `steps` ticks moving from start to end."""
    fractions = np.arange(1, steps + 1, dtype=np.float64)[:, None] / steps
    return start + fractions * (end - start)


def _ticks_for(distance: float, speed: float, tick_s: float) -> int:
    return max(1, int(np.ceil(distance / (speed * tick_s))))


def _walk_episode(
    home: np.ndarray,
    arena: Arena,
    params: LevyParams,
    episode_ticks: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One episode that starts and ends at home.

    A flight is only taken when the pause, the flight and the return flight all
    fit in the ticks left, so the closing return flight always fits.
    """
    track = [home.copy()]
    position = home.copy()

    while len(track) < episode_ticks:
        remaining = episode_ticks - len(track)
        pause = _ticks_for(
            sample_truncated_levy(params.pause_exponent, params.pause_cap, rng), 1.0, arena.tick_s
        )
        length = sample_truncated_levy(params.flight_exponent, params.flight_cap, rng)
        heading = rng.uniform(0.0, 2 * np.pi)

        target = position + length * np.array([np.cos(heading), np.sin(heading)])
        flight = _ticks_for(length, params.speed, arena.tick_s)
        path = _straight_line(position, target, flight)
        path = np.column_stack([_reflect(path[:, 0], arena.side), _reflect(path[:, 1], arena.side)])
        end = path[-1]

        back = _ticks_for(float(np.linalg.norm(end - home)), params.speed, arena.tick_s)
        if pause + flight + back > remaining:
            break
        track.extend([position.copy()] * pause)
        track.extend(path)
        position = end

    distance = float(np.linalg.norm(position - home))
    if distance > 0:
        track.extend(_straight_line(position, home, _ticks_for(distance, params.speed, arena.tick_s)))
    remaining = episode_ticks - len(track)
    if remaining > 0:
        track.extend([home.copy()] * remaining)
    return np.asarray(track, dtype=np.float64)


def generate_trajectories(
    arena: Arena,
    params: LevyParams,
    devices_per_region: int,
    episodes: int,
    episode_ticks: int,
    seed: int,
) -> List[Trajectory]:
    """Per-device Levy walks; device ids run region-major, five per region by default."""
    if devices_per_region < 1:
        raise ParameterError(f"devices per region must be at least 1, got {devices_per_region}")
    if episodes < 1 or episode_ticks < 2:
        raise ParameterError("need at least one episode of two ticks")

    trajectories = []
    for region in range(NUM_REGIONS):
        x0, y0, x1, y1 = arena.region_bounds(region)
        for slot in range(devices_per_region):
            device_id = region * devices_per_region + slot
            rng = stream(seed, f"mobility/{device_id}")
            home = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
            chunks = [_walk_episode(home, arena, params, episode_ticks, rng) for _ in range(episodes)]
            trajectories.append(Trajectory(
                device_id=device_id,
                positions=np.concatenate(chunks),
                anchor_region=region,
                home=(float(home[0]), float(home[1])),
            ))
    logger.info(
        "Generated %d trajectories of %d ticks", len(trajectories), episodes * episode_ticks
    )
    return trajectories


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """(start, length) of each maximal run of True values."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return [(int(s), int(e - s)) for s, e in zip(edges[::2], edges[1::2])]


def detect_encounters(trajectories: List[Trajectory], arena: Arena) -> List[Encounter]:
    """Maximal in-range intervals for every unordered pair of devices."""
    if not trajectories:
        return []
    length = len(trajectories[0])
    if any(len(t) != length for t in trajectories):
        raise DimensionError("trajectories must all have the same number of ticks")

    ordered = sorted(trajectories, key=lambda t: t.device_id)
    encounters = []
    for i, first in enumerate(ordered):
        for second in ordered[i + 1:]:
            gaps = np.linalg.norm(first.positions - second.positions, axis=1)
            for start, duration in _runs(gaps <= arena.comm_range):
                encounters.append(Encounter(first.device_id, second.device_id, start, duration))

    encounters.sort(key=lambda e: (e.start_tick, min(e.device_a, e.device_b), max(e.device_a, e.device_b)))
    logger.info("Detected %d encounters among %d devices", len(encounters), len(ordered))
    return encounters


def contact_duration(encounter: Encounter, arena: Arena) -> float:
    """Predicted contact time in seconds; the oracle is exact."""
    return encounter.duration_ticks * arena.tick_s


def trajectories_to_dataframe(trajectories: List[Trajectory]) -> pd.DataFrame:
    frames = []
    for trajectory in trajectories:
        ticks = np.arange(len(trajectory))
        frames.append(pd.DataFrame({
            "tick": ticks,
            "deviceId": trajectory.device_id,
            "x": trajectory.positions[:, 0],
            "y": trajectory.positions[:, 1],
        }))
    if not frames:
        return pd.DataFrame(columns=["tick", "deviceId", "x", "y"])
    return pd.concat(frames, ignore_index=True)


def encounters_to_dataframe(encounters: List[Encounter]) -> pd.DataFrame:
    return pd.DataFrame(
        [(e.device_a, e.device_b, e.start_tick, e.duration_ticks) for e in encounters],
        columns=["deviceA", "deviceB", "startTick", "durationTicks"],
    )


def write_trajectories_csv(trajectories: List[Trajectory], path) -> None:
    trajectories_to_dataframe(trajectories).to_csv(path, index=False)


def write_encounters_csv(encounters: List[Encounter], path) -> None:
    encounters_to_dataframe(encounters).to_csv(path, index=False)

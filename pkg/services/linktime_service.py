"""Wall-clock cost of a gradient session and its feasibility against contact time."""
import math
from dataclasses import dataclass
from typing import List, Optional

from config.settings import (
    CIFAR_PARAM_COUNT,
    COMPUTE_PROFILES,
    DEFAULT_RHO,
    GAMMA_WORST_CASE_SIZE,
    LINK_PROFILES,
    TIMING_TABLE,
    TIMING_TABLE_LINKS,
)
from models.errors import ParameterError
from models.mlp import MlpArchitecture, serialized_size_bytes, serialized_size_for_count

_EPSILON = 1e-9


@dataclass(frozen=True)
class LinkProfile:
    name: str
    datarate_bps: float
    t_send_override: Optional[float] = None

    def __post_init__(self):
        if self.datarate_bps <= 0:
            raise ParameterError(f"Link '{self.name}' datarate must be positive")
        if self.t_send_override is not None and self.t_send_override < 0:
            raise ParameterError(f"Link '{self.name}' t_send override must be non-negative")


@dataclass(frozen=True)
class ComputeProfile:
    name: str
    t_train: float
    t_agg_worst_case: float

    def __post_init__(self):
        if self.t_train < 0 or self.t_agg_worst_case < 0:
            raise ParameterError(f"Compute profile '{self.name}' times must be non-negative")


@dataclass(frozen=True)
class TimingRow:
    name: str
    t_send: float
    t_train: float
    t_agg: float
    rho: int
    t_enc: float
    derived_t_send: Optional[float] = None


def link_profile(name: str, **overrides) -> LinkProfile:
    if name not in LINK_PROFILES:
        raise ParameterError(f"Unknown link profile '{name}'. Must be one of: {sorted(LINK_PROFILES)}")
    fields = {**LINK_PROFILES[name], **overrides}
    return LinkProfile(name=name, **fields)


def compute_profile(name: str, **overrides) -> ComputeProfile:
    if name not in COMPUTE_PROFILES:
        raise ParameterError(
            f"Unknown compute profile '{name}'. Must be one of: {sorted(COMPUTE_PROFILES)}"
        )
    fields = {**COMPUTE_PROFILES[name], **overrides}
    return ComputeProfile(name=name, **fields)


def t_send(model_bytes: int, link: LinkProfile) -> float:
    """Seconds to push one serialized model (or gradient) over the link."""
    if link.t_send_override is not None:
        return link.t_send_override
    if model_bytes <= 0:
        raise ParameterError(f"model size must be positive, got {model_bytes}")
    return model_bytes * 8 / link.datarate_bps


def encounter_time(rho: int, t_send_s: float, t_train: float, t_agg: float) -> float:
    if rho < 1:
        raise ParameterError(f"rho must be at least 1, got {rho}")
    if min(t_send_s, t_train, t_agg) < 0:
        raise ParameterError("time components must be non-negative")
    return rho * (2 * t_send_s + 2 * t_train + t_agg)


def t_agg_for(gamma_size: int, compute: ComputeProfile) -> float:
    """Aggregation time, linear in the number of stored gradients."""
    return compute.t_agg_worst_case * gamma_size / GAMMA_WORST_CASE_SIZE


def session_time_bound(rho: int, t_send_s: float, compute: ComputeProfile, max_table: int) -> float:
    """Encounter time that fits rho rounds for any gradient table up to `max_table` entries.

    Never below the reference worst case of GAMMA_WORST_CASE_SIZE entries.
    """
    table = max(int(max_table), GAMMA_WORST_CASE_SIZE)
    return encounter_time(rho, t_send_s, compute.t_train, t_agg_for(table, compute))


def feasible_rounds(
    duration_s: float,
    t_send_s: float,
    t_train: float,
    t_agg: float,
    rho_max: int,
    split_both_ways: bool = False,
) -> int:
    """Largest rho <= rho_max whose session fits in the contact; 0 if none does."""
    if duration_s < 0 or min(t_send_s, t_train, t_agg) < 0:
        raise ParameterError("durations and time components must be non-negative")
    budget = duration_s / 2 if split_both_ways else duration_s
    per_round = 2 * t_send_s + 2 * t_train + t_agg
    if per_round == 0:
        return rho_max
    return max(0, min(rho_max, math.floor(budget / per_round + _EPSILON)))


def _profile_model_bytes(compute_name: str) -> int:
    if compute_name.startswith("cifar10"):
        return serialized_size_for_count(CIFAR_PARAM_COUNT)
    return serialized_size_bytes(MlpArchitecture())


def timing_table(rho: int = DEFAULT_RHO, derived: bool = False) -> List[TimingRow]:
    """Required encounter durations for the built-in dataset/link pairs at worst-case table size.

    The literal t_send constants drive t_enc; with `derived` each row also
    carries the t_send computed from the model size and link datarate.
    """
    rows = []
    for name, compute_name, literal_t_send in TIMING_TABLE:
        compute = compute_profile(compute_name)
        derived_t_send = None
        if derived:
            derived_t_send = t_send(
                _profile_model_bytes(compute_name), link_profile(TIMING_TABLE_LINKS[name])
            )
        rows.append(TimingRow(
            name=name,
            t_send=literal_t_send,
            t_train=compute.t_train,
            t_agg=compute.t_agg_worst_case,
            rho=rho,
            t_enc=encounter_time(rho, literal_t_send, compute.t_train, compute.t_agg_worst_case),
            derived_t_send=derived_t_send,
        ))
    return rows

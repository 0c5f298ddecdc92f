from dataclasses import asdict, dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from config.settings import (
    DEFAULT_ETA,
    DEFAULT_KAPPA,
    DEFAULT_LAMBDA,
    DEFAULT_PHI,
    DEFAULT_RHO,
    DEFAULT_TAU,
    STRATEGIES,
)
from models.errors import ParameterError
from models.label_space import LabelDistribution, LabelSet
from models.mlp import GradientVector, LabeledBatch, MlpArchitecture, ParameterVector


@dataclass(frozen=True)
class Hyperparameters:
    eta: float = DEFAULT_ETA
    lam: float = DEFAULT_LAMBDA
    kappa: float = DEFAULT_KAPPA
    phi: float = DEFAULT_PHI
    tau: float = DEFAULT_TAU
    rho: int = DEFAULT_RHO
    subsume: bool = False

    def __post_init__(self):
        if self.eta < 0:
            raise ParameterError(f"eta must be non-negative, got {self.eta}")
        if self.lam <= 0 or self.kappa <= 0 or self.phi <= 0:
            raise ParameterError("lambda, kappa and phi must be positive")
        if self.rho < 1:
            raise ParameterError(f"rho must be at least 1, got {self.rho}")


@dataclass(frozen=True)
class GammaEntry:
    gradient: GradientVector
    weight: Optional[float]
    last_updated: int


@dataclass(frozen=True)
class GradientTable:
    """Maps a neighbor's label set to the most recent gradient learned on it."""

    entries: Dict[LabelSet, GammaEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: LabelSet) -> bool:
        return key in self.entries

    def __getitem__(self, key: LabelSet) -> GammaEntry:
        return self.entries[key]

    def items(self) -> Iterator[Tuple[LabelSet, GammaEntry]]:
        return iter(sorted(self.entries.items(), key=lambda kv: kv[0].labels))


@dataclass
class DecayState:
    w0: ParameterVector
    kappa: float = DEFAULT_KAPPA
    phi: float = DEFAULT_PHI
    running_min_alpha: float = 1.0

    def __post_init__(self):
        if self.kappa <= 0 or self.phi <= 0:
            raise ParameterError("kappa and phi must be positive")
        if not 0 < self.running_min_alpha <= 1:
            raise ParameterError("running minimum alpha must lie in (0, 1]")


@dataclass
class DeviceState:
    device_id: int
    arch: MlpArchitecture
    model: ParameterVector
    local_data: LabeledBatch
    data_dist: LabelDistribution
    goal: LabelDistribution
    decay: DecayState
    strategy: str
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    gamma: GradientTable = field(default_factory=GradientTable)
    clock: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ParameterError(
                f"Unknown strategy '{self.strategy}'. Must be one of: {STRATEGIES}"
            )


@dataclass
class SessionReport:
    learner_id: int
    neighbor_id: int
    strategy: str
    rounds: int
    similarity: float
    alphas: List[float] = field(default_factory=list)
    loss_trace: List[float] = field(default_factory=list)
    bytes_sent: int = 0
    sim_time_s: float = 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        return {
            "learnerId": data["learner_id"],
            "neighborId": data["neighbor_id"],
            "strategy": data["strategy"],
            "rounds": data["rounds"],
            "similarity": data["similarity"],
            "alphas": data["alphas"],
            "lossTrace": data["loss_trace"],
            "bytesSent": data["bytes_sent"],
            "simTimeS": data["sim_time_s"],
        }


def make_device(
    device_id: int,
    arch: MlpArchitecture,
    bootstrap: ParameterVector,
    local_data: LabeledBatch,
    data_dist: LabelDistribution,
    goal: LabelDistribution,
    strategy: str,
    hyper: Hyperparameters,
) -> DeviceState:
    """A fresh device holding the bootstrap model, whose snapshot anchors the decay."""
    return DeviceState(
        device_id=device_id,
        arch=arch,
        model=bootstrap,
        local_data=local_data,
        data_dist=data_dist,
        goal=goal,
        decay=DecayState(w0=bootstrap, kappa=hyper.kappa, phi=hyper.phi),
        strategy=strategy,
        hyper=hyper,
    )

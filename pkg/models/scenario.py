import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from config.settings import (
    ARENA_SIDE,
    BOOTSTRAP_EPOCHS,
    BOOTSTRAP_FRACTION,
    BOOTSTRAP_HOLDOUT,
    BOOTSTRAP_PATIENCE,
    BOOTSTRAP_RATE,
    COMM_RANGE,
    COMPUTE_PROFILES,
    DATA_DIR,
    DEFAULT_COMPUTE,
    DEFAULT_HIDDEN_DIMS,
    DEFAULT_LINK,
    DEVICES_PER_REGION,
    EPISODE_TICKS,
    EPISODES,
    FLIGHT_CAP,
    FLIGHT_EXPONENT,
    GOAL_EXTRA_LABELS,
    GOAL_TEST_SIZE,
    LINK_PROFILES,
    LOCAL_SET_SIZE,
    MOBILITY_EVAL_INTERVAL_S,
    NUM_LABELS,
    PAUSE_CAP,
    PAUSE_EXPONENT,
    SCHEMA_VERSION,
    SPEED,
    STRATEGIES,
    STRATEGY_MOMENTUM,
    SYNTH_INPUT_DIM,
    SYNTH_PER_LABEL,
    SYNTH_SPREAD,
    SYNTH_TEST_PER_LABEL,
    TICK_SECONDS,
    TUNE_ENCOUNTERS,
    TUNE_GRID,
)
from models.device import Hyperparameters
from models.errors import ConfigError

KIND_CONTROLLED = "controlled"
KIND_MOBILITY = "mobility"
VALID_KINDS = {KIND_CONTROLLED, KIND_MOBILITY}
DATASET_SYNTHETIC = "synthetic"
DATASET_IDX = "idx"
VALID_DATASETS = {DATASET_SYNTHETIC, DATASET_IDX}
IDX_FIELDS = ("train_images", "train_labels", "test_images", "test_labels")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = DATASET_SYNTHETIC
    num_labels: int = NUM_LABELS
    per_label: int = SYNTH_PER_LABEL
    test_per_label: int = SYNTH_TEST_PER_LABEL
    input_dim: int = SYNTH_INPUT_DIM
    spread: float = SYNTH_SPREAD
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""

    def resolve(self, name: str) -> Path:
        """Relative IDX paths are taken against OPPFL_DATA_DIR."""
        path = Path(getattr(self, name))
        if path.is_absolute():
            return path
        return Path(os.getenv("OPPFL_DATA_DIR", DATA_DIR)) / path


@dataclass(frozen=True)
class BootstrapSpec:
    fraction: float = BOOTSTRAP_FRACTION
    epochs: int = BOOTSTRAP_EPOCHS
    rate: float = BOOTSTRAP_RATE
    patience: int = BOOTSTRAP_PATIENCE
    holdout: float = BOOTSTRAP_HOLDOUT


@dataclass(frozen=True)
class LinkSpec:
    profile: str = DEFAULT_LINK
    datarate_bps: Optional[float] = None
    t_send_override: Optional[float] = None


@dataclass(frozen=True)
class ComputeSpec:
    profile: str = DEFAULT_COMPUTE
    t_train: Optional[float] = None
    t_agg_worst_case: Optional[float] = None


@dataclass(frozen=True)
class PhaseSpec:
    encounters: int
    fixed_labels: Tuple[int, ...]
    fixed_fraction: float = 0.5
    random_labels: int = 3


DEFAULT_PHASES = (
    PhaseSpec(100, (2, 3)),
    PhaseSpec(100, (3, 4, 5)),
    PhaseSpec(100, (4, 5, 6)),
)


@dataclass(frozen=True)
class ControlledSpec:
    learner_labels: Tuple[int, ...] = (0, 1)
    goal_labels: Tuple[int, ...] = (0, 1, 2, 3, 4)
    local_size: int = LOCAL_SET_SIZE
    neighbor_size: int = LOCAL_SET_SIZE
    test_size: int = GOAL_TEST_SIZE
    phases: Tuple[PhaseSpec, ...] = DEFAULT_PHASES


@dataclass(frozen=True)
class MobilitySpec:
    arena_side: float = ARENA_SIDE
    comm_range: float = COMM_RANGE
    tick_s: float = TICK_SECONDS
    speed: float = SPEED
    flight_exponent: float = FLIGHT_EXPONENT
    flight_cap: float = FLIGHT_CAP
    pause_exponent: float = PAUSE_EXPONENT
    pause_cap: float = PAUSE_CAP
    devices_per_region: int = DEVICES_PER_REGION
    episodes: int = EPISODES
    episode_ticks: int = EPISODE_TICKS
    eval_interval_s: float = MOBILITY_EVAL_INTERVAL_S
    goal_extra_labels: int = GOAL_EXTRA_LABELS
    local_size: int = LOCAL_SET_SIZE
    test_size: int = GOAL_TEST_SIZE
    dump_trajectories: bool = False
    strategy_overrides: Dict[int, str] = field(default_factory=dict)


@dataclass(frozen=True)
class TuneSpec:
    grid: Dict[str, List[float]] = field(default_factory=lambda: {k: list(v) for k, v in TUNE_GRID.items()})
    encounters: int = TUNE_ENCOUNTERS


@dataclass(frozen=True)
class SweepSpec:
    max_offset: int = 5
    repeats: int = 7
    client_size: int = 600
    pretrain_epochs: int = 5
    max_rounds: int = 50
    target_gain: float = 0.02
    test_size: int = GOAL_TEST_SIZE


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    seed: int = 0
    strategy: str = STRATEGY_MOMENTUM
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    hidden_dims: Tuple[int, ...] = DEFAULT_HIDDEN_DIMS
    bootstrap: BootstrapSpec = field(default_factory=BootstrapSpec)
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    link: LinkSpec = field(default_factory=LinkSpec)
    compute: ComputeSpec = field(default_factory=ComputeSpec)
    controlled: ControlledSpec = field(default_factory=ControlledSpec)
    mobility: MobilitySpec = field(default_factory=MobilitySpec)
    tune: TuneSpec = field(default_factory=TuneSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    out_dir: Path
    workers: int = 1
    verbosity: int = 0


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

# Allowed keys per section, mapped to (kind, minimum, maximum). Kinds:
# "int", "float", "bool", "str", "labels", "ints", "grid", "phases", "overrides".
_SECTIONS: Dict[str, Dict[str, tuple]] = {
    "dataset": {
        "kind": ("str", None, None),
        "num_labels": ("int", 2, 256),
        "per_label": ("int", 1, None),
        "test_per_label": ("int", 1, None),
        "input_dim": ("int", 1, None),
        "spread": ("float", 0, None),
        "train_images": ("str", None, None),
        "train_labels": ("str", None, None),
        "test_images": ("str", None, None),
        "test_labels": ("str", None, None),
    },
    "model": {
        "hidden_dims": ("ints", 1, None),
    },
    "bootstrap": {
        "fraction": ("float", 0, 0.999),
        "epochs": ("int", 0, None),
        "rate": ("float", 0, None),
        "patience": ("int", 1, None),
        "holdout": ("float", 0.001, 0.999),
    },
    "hyper": {
        "eta": ("float", 0, None),
        "lambda": ("float", 1e-12, None),
        "kappa": ("float", 1e-12, None),
        "phi": ("float", 1e-12, None),
        "tau": ("float", 0, 1),
        "rho": ("int", 1, None),
        "subsume": ("bool", None, None),
    },
    "link": {
        "profile": ("str", None, None),
        "datarate_bps": ("float", 1e-12, None),
        "t_send_override": ("float", 0, None),
    },
    "compute": {
        "profile": ("str", None, None),
        "t_train": ("float", 0, None),
        "t_agg_worst_case": ("float", 0, None),
    },
    "controlled": {
        "learner_labels": ("labels", None, None),
        "goal_labels": ("labels", None, None),
        "local_size": ("int", 1, None),
        "neighbor_size": ("int", 1, None),
        "test_size": ("int", 1, None),
        "phases": ("phases", None, None),
    },
    "mobility": {
        "arena_side": ("float", 1e-12, None),
        "comm_range": ("float", 1e-12, None),
        "tick_s": ("float", 1e-12, None),
        "speed": ("float", 1e-12, None),
        "flight_exponent": ("float", 1e-12, 2),
        "flight_cap": ("float", 1e-12, None),
        "pause_exponent": ("float", 1e-12, 2),
        "pause_cap": ("float", 1e-12, None),
        "devices_per_region": ("int", 1, None),
        "episodes": ("int", 1, None),
        "episode_ticks": ("int", 2, None),
        "eval_interval_s": ("float", 1e-12, None),
        "goal_extra_labels": ("int", 0, None),
        "local_size": ("int", 1, None),
        "test_size": ("int", 1, None),
        "dump_trajectories": ("bool", None, None),
        "strategy_overrides": ("overrides", None, None),
    },
    "tune": {
        "grid": ("grid", None, None),
        "encounters": ("int", 1, None),
    },
    "sweep": {
        "max_offset": ("int", 0, None),
        "repeats": ("int", 1, None),
        "client_size": ("int", 1, None),
        "pretrain_epochs": ("int", 0, None),
        "max_rounds": ("int", 1, None),
        "target_gain": ("float", 0, 1),
        "test_size": ("int", 1, None),
    },
}

_TOP_LEVEL = {"schema_version", "name", "kind", "seed", "strategy"} | set(_SECTIONS)
_PHASE_KEYS = {"encounters", "fixed_labels", "fixed_fraction", "random_labels"}
_TUNE_KEYS = {"eta", "lambda", "kappa", "phi"}


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_range(path: str, value, minimum, maximum) -> List[str]:
    if minimum is not None and value < minimum:
        return [f"{path}: {value} is below the minimum {minimum}"]
    if maximum is not None and value > maximum:
        return [f"{path}: {value} is above the maximum {maximum}"]
    return []


def _check_labels(path: str, value, num_labels: int) -> List[str]:
    if not isinstance(value, list) or not value or not all(_is_int(v) for v in value):
        return [f"{path}: must be a non-empty list of integer labels"]
    errors = []
    bad = [v for v in value if not 0 <= v < num_labels]
    if bad:
        errors.append(f"{path}: labels {bad} outside the label space [0, {num_labels})")
    if len(set(value)) != len(value):
        errors.append(f"{path}: labels must be distinct")
    return errors


def _check_phases(path: str, value, num_labels: int) -> List[str]:
    if not isinstance(value, list) or not value:
        return [f"{path}: must be a non-empty list of phases"]
    errors = []
    for i, phase in enumerate(value):
        where = f"{path}[{i}]"
        if not isinstance(phase, dict):
            errors.append(f"{where}: must be an object")
            continue
        for key in sorted(set(phase) - _PHASE_KEYS):
            errors.append(f"{where}.{key}: unknown key")
        if not _is_int(phase.get("encounters")) or phase.get("encounters", 0) < 1:
            errors.append(f"{where}.encounters: must be a positive integer")
        errors.extend(_check_labels(f"{where}.fixed_labels", phase.get("fixed_labels"), num_labels))
        fraction = phase.get("fixed_fraction", 0.5)
        if not _is_number(fraction) or not 0 <= fraction <= 1:
            errors.append(f"{where}.fixed_fraction: must lie in [0, 1]")
        random_labels = phase.get("random_labels", 3)
        if not _is_int(random_labels) or not 1 <= random_labels <= num_labels:
            errors.append(f"{where}.random_labels: must lie in [1, {num_labels}]")
    return errors


def _check_value(path: str, kind: str, value, minimum, maximum, num_labels: int) -> List[str]:
    if kind == "int":
        if not _is_int(value):
            return [f"{path}: expected an integer, got {value!r}"]
        return _check_range(path, value, minimum, maximum)
    if kind == "float":
        if not _is_number(value):
            return [f"{path}: expected a number, got {value!r}"]
        return _check_range(path, value, minimum, maximum)
    if kind == "bool":
        return [] if isinstance(value, bool) else [f"{path}: expected true or false, got {value!r}"]
    if kind == "str":
        return [] if isinstance(value, str) else [f"{path}: expected a string, got {value!r}"]
    if kind == "ints":
        if not isinstance(value, list) or not value or not all(_is_int(v) and v >= minimum for v in value):
            return [f"{path}: must be a non-empty list of positive integers"]
        return []
    if kind == "labels":
        return _check_labels(path, value, num_labels)
    if kind == "phases":
        return _check_phases(path, value, num_labels)
    if kind == "grid":
        if not isinstance(value, dict):
            return [f"{path}: must be an object of value lists"]
        errors = [f"{path}.{k}: unknown grid axis" for k in sorted(set(value) - _TUNE_KEYS)]
        for axis, values in value.items():
            if not isinstance(values, list) or not values or not all(_is_number(v) and v > 0 for v in values):
                errors.append(f"{path}.{axis}: must be a non-empty list of positive numbers")
        return errors
    if kind == "overrides":
        if not isinstance(value, dict):
            return [f"{path}: must map device ids to strategies"]
        errors = []
        for device, strategy in value.items():
            if not str(device).isdigit():
                errors.append(f"{path}.{device}: device id must be a non-negative integer")
            if strategy not in STRATEGIES:
                errors.append(f"{path}.{device}: unknown strategy '{strategy}'")
        return errors
    raise AssertionError(kind)


def validate_config(data: dict) -> List[str]:
    """Validate a scenario document. Returns a list of error messages naming dotted fields."""
    if not isinstance(data, dict):
        return ["<root>: a scenario must be a JSON object"]
    errors = []

    for key in sorted(set(data) - _TOP_LEVEL):
        errors.append(f"{key}: unknown key")

    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    if not isinstance(data.get("name"), str) or not data.get("name"):
        errors.append("name: missing required field")
    if data.get("kind") not in VALID_KINDS:
        errors.append(f"kind: invalid kind {data.get('kind')!r}. Must be one of: {sorted(VALID_KINDS)}")
    if "seed" in data and (not _is_int(data["seed"]) or data["seed"] < 0):
        errors.append(f"seed: must be a non-negative integer, got {data['seed']!r}")
    if data.get("strategy", STRATEGY_MOMENTUM) not in STRATEGIES:
        errors.append(f"strategy: unknown strategy {data.get('strategy')!r}. Must be one of: {STRATEGIES}")

    dataset = data.get("dataset", {})
    num_labels = dataset.get("num_labels", NUM_LABELS) if isinstance(dataset, dict) else NUM_LABELS
    if not _is_int(num_labels) or num_labels < 2:
        num_labels = NUM_LABELS

    for section, schema in _SECTIONS.items():
        if section not in data:
            continue
        body = data[section]
        if not isinstance(body, dict):
            errors.append(f"{section}: must be an object")
            continue
        for key, value in body.items():
            path = f"{section}.{key}"
            if key not in schema:
                errors.append(f"{path}: unknown key")
                continue
            kind, minimum, maximum = schema[key]
            if value is None and key in ("datarate_bps", "t_send_override", "t_train", "t_agg_worst_case"):
                continue
            errors.extend(_check_value(path, kind, value, minimum, maximum, num_labels))

    if isinstance(dataset, dict):
        errors.extend(_check_dataset(dataset))
    link = data.get("link", {})
    if isinstance(link, dict) and link.get("profile", DEFAULT_LINK) not in LINK_PROFILES:
        errors.append(f"link.profile: unknown link profile {link.get('profile')!r}")
    compute = data.get("compute", {})
    if isinstance(compute, dict) and compute.get("profile", DEFAULT_COMPUTE) not in COMPUTE_PROFILES:
        errors.append(f"compute.profile: unknown compute profile {compute.get('profile')!r}")
    mobility = data.get("mobility", {})
    if isinstance(mobility, dict) and not errors:
        side = mobility.get("arena_side", ARENA_SIDE)
        if mobility.get("comm_range", COMM_RANGE) >= side / 3:
            errors.append("mobility.comm_range: must be smaller than a region side (arena_side / 3)")
    return errors


def _check_dataset(dataset: dict) -> List[str]:
    errors = []
    kind = dataset.get("kind", DATASET_SYNTHETIC)
    if kind not in VALID_DATASETS:
        return [f"dataset.kind: invalid dataset kind {kind!r}. Must be one of: {sorted(VALID_DATASETS)}"]
    if kind == DATASET_IDX:
        spec = DatasetSpec(**{k: str(v) for k, v in dataset.items() if k in IDX_FIELDS})
        for name in IDX_FIELDS:
            if not dataset.get(name):
                errors.append(f"dataset.{name}: required for idx datasets")
            elif not isinstance(dataset[name], str):
                errors.append(f"dataset.{name}: expected a path string")
            elif not spec.resolve(name).exists():
                errors.append(f"dataset.{name}: file not found: {spec.resolve(name)}")
    return errors


# ---------------------------------------------------------------------------
# Conversion
# ---------------------------------------------------------------------------

def _phase_from_dict(data: dict) -> PhaseSpec:
    return PhaseSpec(
        encounters=data["encounters"],
        fixed_labels=tuple(data["fixed_labels"]),
        fixed_fraction=data.get("fixed_fraction", 0.5),
        random_labels=data.get("random_labels", 3),
    )


def dict_to_scenario(data: dict) -> Scenario:
    """Convert a validated scenario dict into a Scenario, filling defaults from settings."""
    hyper = dict(data.get("hyper", {}))
    if "lambda" in hyper:
        hyper["lam"] = hyper.pop("lambda")

    controlled = dict(data.get("controlled", {}))
    for key in ("learner_labels", "goal_labels"):
        if key in controlled:
            controlled[key] = tuple(controlled[key])
    if "phases" in controlled:
        controlled["phases"] = tuple(_phase_from_dict(p) for p in controlled["phases"])

    mobility = dict(data.get("mobility", {}))
    if "strategy_overrides" in mobility:
        mobility["strategy_overrides"] = {int(k): v for k, v in mobility["strategy_overrides"].items()}

    tune = dict(data.get("tune", {}))
    if "grid" in tune:
        tune["grid"] = {**{k: list(v) for k, v in TUNE_GRID.items()}, **tune["grid"]}

    model = data.get("model", {})
    return Scenario(
        name=data.get("name", ""),
        kind=data.get("kind", KIND_CONTROLLED),
        seed=data.get("seed", 0),
        strategy=data.get("strategy", STRATEGY_MOMENTUM),
        dataset=DatasetSpec(**data.get("dataset", {})),
        hidden_dims=tuple(model.get("hidden_dims", DEFAULT_HIDDEN_DIMS)),
        bootstrap=BootstrapSpec(**data.get("bootstrap", {})),
        hyper=Hyperparameters(**hyper),
        link=LinkSpec(**data.get("link", {})),
        compute=ComputeSpec(**data.get("compute", {})),
        controlled=ControlledSpec(**controlled),
        mobility=MobilitySpec(**mobility),
        tune=TuneSpec(**tune),
        sweep=SweepSpec(**data.get("sweep", {})),
    )


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def scenario_to_dict(scenario: Scenario) -> dict:
    """Inverse of dict_to_scenario; the result validates and re-parses to an equal Scenario."""
    hyper = asdict(scenario.hyper)
    hyper["lambda"] = hyper.pop("lam")
    return {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "kind": scenario.kind,
        "seed": scenario.seed,
        "strategy": scenario.strategy,
        "dataset": _plain(asdict(scenario.dataset)),
        "model": {"hidden_dims": list(scenario.hidden_dims)},
        "bootstrap": _plain(asdict(scenario.bootstrap)),
        "hyper": hyper,
        "link": _plain(asdict(scenario.link)),
        "compute": _plain(asdict(scenario.compute)),
        "controlled": _plain(asdict(scenario.controlled)),
        "mobility": _plain(asdict(scenario.mobility)),
        "tune": _plain(asdict(scenario.tune)),
        "sweep": _plain(asdict(scenario.sweep)),
    }


def hyper_to_fragment(hyper: Hyperparameters) -> dict:
    data = asdict(hyper)
    data["lambda"] = data.pop("lam")
    return {"hyper": data}


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    """Apply `key=value` overrides (dotted keys, JSON values with a plain-string fallback)."""
    result = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"Override '{item}' is not of the form key=value", field=item)
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        target = result
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Cannot override inside non-object '{part}'", field=key)
            target = node
        target[parts[-1]] = _parse_value(raw.strip())
    return result


def _line_of(text: str, dotted: str) -> Optional[int]:
    """Best-effort 1-based line of the innermost key of a dotted field in the JSON text."""
    leaf = dotted.split(":")[0].split(".")[-1].split("[")[0]
    needle = f'"{leaf}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def load_config(path, overrides: Sequence[str] = ()) -> Scenario:
    """Read, override, validate and convert a scenario file; raises ConfigError on any problem."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"Cannot read scenario file {path}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"Invalid JSON in {path}: {err.msg}", line=err.lineno) from err

    data = apply_overrides(data, overrides)
    errors = validate_config(data)
    if errors:
        first = errors[0]
        field_name = first.split(":")[0]
        raise ConfigError(
            f"{len(errors)} problem(s) in {path}: {first}",
            field=field_name,
            line=_line_of(text, field_name),
            errors=errors,
        )
    try:
        return dict_to_scenario(data)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"Invalid scenario {path}: {err}") from err


def scenario_hash(scenario: Scenario) -> str:
    canonical = json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

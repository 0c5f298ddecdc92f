import os


def get_setting(key: str, default: str = "") -> str:
    """Retrieve a setting from a local .env file or the environment."""
    from dotenv import load_dotenv
    load_dotenv()
    return os.getenv(key, default)


# Environment
DATA_DIR = get_setting("OPPFL_DATA_DIR", "data")
RUNS_DIR = get_setting("OPPFL_RUNS_DIR", "runs")
LOG_LEVEL = get_setting("OPPFL_LOG_LEVEL", "WARNING")

# Scenario schema
SCHEMA_VERSION = 1
NUM_LABELS = 10

# Strategies
STRATEGY_LOCAL = "local"
STRATEGY_FED_AVG = "pairwise-fed-avg"
STRATEGY_GREEDY_NO_SIM = "greedy-no-sim"
STRATEGY_GREEDY_SIM = "greedy-sim"
STRATEGY_MOMENTUM = "opportunistic-momentum"

STRATEGIES = (
    STRATEGY_LOCAL,
    STRATEGY_FED_AVG,
    STRATEGY_GREEDY_NO_SIM,
    STRATEGY_GREEDY_SIM,
    STRATEGY_MOMENTUM,
)

# Learner hyperparameters
DEFAULT_ETA = 0.05
DEFAULT_LAMBDA = 1.0
DEFAULT_KAPPA = 2.0
DEFAULT_PHI = 1.0
DEFAULT_TAU = 0.2
DEFAULT_RHO = 6
GREEDY_WEIGHT = 0.5
GAMMA_WORST_CASE_SIZE = 32

# Model
DEFAULT_INPUT_DIM = 784
DEFAULT_HIDDEN_DIMS = (200, 200)
BYTES_PER_PARAM = 4
CIFAR_PARAM_COUNT = 1_250_858

# Bootstrap training
BOOTSTRAP_FRACTION = 0.1
BOOTSTRAP_EPOCHS = 200
BOOTSTRAP_RATE = 0.5
BOOTSTRAP_PATIENCE = 3
BOOTSTRAP_HOLDOUT = 0.1

# Datasets
LOCAL_SET_SIZE = 80
GOAL_TEST_SIZE = 500
SYNTH_PER_LABEL = 2500
SYNTH_TEST_PER_LABEL = 400
SYNTH_INPUT_DIM = 16
SYNTH_SPREAD = 0.12

# Mobility
ARENA_SIDE = 1000.0
COMM_RANGE = 50.0
TICK_SECONDS = 1.0
SPEED = 1.5
FLIGHT_EXPONENT = 1.5
FLIGHT_CAP = 500.0
PAUSE_EXPONENT = 1.5
PAUSE_CAP = 600.0
DEVICES_PER_REGION = 5
EPISODES = 10
EPISODE_TICKS = 3600
LEVY_MIN_RATIO = 1000.0
GOAL_EXTRA_LABELS = 3

# Evaluation cadence
MOBILITY_EVAL_INTERVAL_S = 300.0

# Link and compute profiles (literal t_send values reproduce the timing table)
LINK_PROFILES = {
    "wifi-direct": {"datarate_bps": 250e6},
    "bluetooth": {"datarate_bps": 2e6},
    "sim-1mbps": {"datarate_bps": 1e6},
}

COMPUTE_PROFILES = {
    "mnist-rpi4": {"t_train": 1.543, "t_agg_worst_case": 0.064},
    "cifar10-rpi4": {"t_train": 5.740, "t_agg_worst_case": 0.448},
}

DEFAULT_LINK = "sim-1mbps"
DEFAULT_COMPUTE = "mnist-rpi4"

TIMING_TABLE = (
    ("MNIST_WIFI", "mnist-rpi4", 0.020),
    ("MNIST_Bluetooth", "mnist-rpi4", 3.05),
    ("CIFAR-10_WIFI", "cifar10-rpi4", 0.153),
    ("CIFAR-10_Bluetooth", "cifar10-rpi4", 19.1),
)

TIMING_TABLE_LINKS = {
    "MNIST_WIFI": "wifi-direct",
    "MNIST_Bluetooth": "bluetooth",
    "CIFAR-10_WIFI": "wifi-direct",
    "CIFAR-10_Bluetooth": "bluetooth",
}

# Tuning grid
TUNE_GRID = {
    "eta": [0.01, 0.05, 0.1],
    "lambda": [0.5, 1.0, 2.0],
    "kappa": [1.0, 2.0],
    "phi": [0.5, 1.0],
}
TUNE_ENCOUNTERS = 30

# Metrics output
METRICS_COLUMNS = [
    "sim_time_s",
    "encounter_idx",
    "device_id",
    "strategy",
    "goal_accuracy",
    "alpha",
    "gamma_size",
    "bytes_sent",
    "engaged",
]

# App metadata
APP_TITLE = "Opportunistic FL Run Browser"
APP_ICON = "\U0001f4e1"
APP_LAYOUT = "wide"

"""
Configuration and settings for the PD-MPC flood-control engine
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).parent.parent.parent
SRC_DIR = BASE_DIR / "src"
LOG_DIR = BASE_DIR / "logs"
OUTPUT_DIR = BASE_DIR / "output"

# Default run configuration file (YAML); empty means built-in defaults
DEFAULT_CONFIG_PATH = os.getenv("PDMPC_CONFIG", "")

# Run registry (SQLAlchemy URL); empty disables recording
RUN_DATABASE_URL = os.getenv("RUN_DATABASE_URL", "")

# Logging configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE = Path(os.getenv("LOG_FILE")) if os.getenv("LOG_FILE") else None
LOG_MAX_SIZE = 10 * 1024 * 1024  # 10MB
LOG_BACKUP_COUNT = 5

# Performance settings
WORKER_THREADS = int(os.getenv("WORKER_THREADS", "1"))

# Reservoir defaults (multipurpose dam, 1-hour steps)
DEFAULT_FWL = 80.0  # m
DEFAULT_NHWL = 76.5  # m
DEFAULT_LWL = 60.0  # m
DEFAULT_SPILLWAY_CREST = 64.5  # m
DEFAULT_MO_TURB = 264.0  # m3/s
DEFAULT_MO_SPILL = 11680.0  # m3/s
DEFAULT_DT = 3600.0  # seconds per step

# Synthetic stage-storage curve; only the FWL anchor is published
DEFAULT_CURVE_POINTS = (
    (60.0, 0.30e9),
    (64.5, 0.55e9),
    (76.5, 1.24e9),
    (80.0, 1.49e9),
)

# Forecast noise
DEFAULT_FORECAST_A = 0.05
DEFAULT_FORECAST_B = 0.03
DEFAULT_FORECAST_C = 0.1
DEFAULT_FORECAST_WINDOW = 3

# Genetic algorithm
DEFAULT_GA_POPULATION = 12
DEFAULT_GA_GENERATIONS = 20
DEFAULT_GA_TOURNAMENT_SIZE = 3
DEFAULT_GA_CROSSOVER_PROB = 0.9
DEFAULT_GA_MUTATION_PROB = 0.1
DEFAULT_GA_ELITISM = 2
DEFAULT_GA_STALL_GENERATIONS = 3  # stop after this many generations without improvement; 0 runs them all

# Operator's highest-allowed levels searched by the GA
DEFAULT_SH_LEVELS = (78.5, 79.0, 79.5)
FIXED_SH_LEVEL = 79.0

# Evaluator
DEFAULT_EVALUATOR_WEIGHTS = (5.0, 1.0, 2.0, 2.0, 5.0, 3.0, 1.0, 1.0)
DEFAULT_LARGE_VALUE = 1000.0
DEFAULT_W_SU = 1.0
DEFAULT_W_SL = 2.0
DEFAULT_W_SH = 20.0
DEFAULT_S_U_LEVEL = DEFAULT_NHWL
DEFAULT_S_L_LEVEL = 76.0
ZERO_SPILL_THRESHOLD = 1e-6  # m3/s
J4_EMPHASIS_FACTORS = {"default": 1.0, "higher": 4.0, "lower": 0.25}

# Run defaults
DEFAULT_HORIZON = 6
DEFAULT_SEED = 42
DEFAULT_INITIAL_LEVEL = DEFAULT_NHWL
DEFAULT_INITIAL_TURB = 150.0  # m3/s
DEFAULT_INITIAL_SPILL = 0.0  # m3/s
DEFAULT_CHANGE_TOL = 1.0  # m3/s

# Linear programming
DEFAULT_FEAS_TOL = 1e-7
DEFAULT_OPT_TOL = 1e-8
DEFAULT_FWS_SOFT_PENALTY = 1e6
LP_STORAGE_SCALE = 1e6  # storages enter the LP in hm3
VALUE_ZERO_CLAMP = 1e-9

# Sweep presentation
SWEEP_SATURATION_MARKER = 99.0

# Environment-specific overrides
if os.getenv("ENVIRONMENT") == "production":
    LOG_LEVEL = "WARNING"
    WORKER_THREADS = max(WORKER_THREADS, 4)
elif os.getenv("ENVIRONMENT") == "development":
    LOG_LEVEL = "DEBUG"
elif os.getenv("ENVIRONMENT") == "testing":
    LOG_LEVEL = "DEBUG"
    OUTPUT_DIR = BASE_DIR / "test_output"
    LOG_DIR = BASE_DIR / "test_logs"

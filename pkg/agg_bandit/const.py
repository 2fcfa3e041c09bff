import os

from python_base_toolkit.utils.date_time import get_current_date_time_str

LOG_FORMAT = os.getenv("AGG_BANDIT_LOG_FORMAT", "%(asctime)s | %(levelname)s | %(message)s")
LOG_FILE = os.getenv("AGG_BANDIT_LOG_FILE", "false").lower() == "true"
LOG_FILE_PATH = os.getenv("AGG_BANDIT_LOG_FILE_PATH", None)
CURRENT_DATE_TIME_STR = get_current_date_time_str()

# Dense p x p inverse is kept only up to this many network parameters.
EXACT_MODE_MAX_PARAMS = int(os.getenv("AGG_BANDIT_EXACT_MODE_MAX_PARAMS", "20000"))
DIVERGENCE_FACTOR = float(os.getenv("AGG_BANDIT_DIVERGENCE_FACTOR", "1e6"))
RUN_SLOW_TESTS = os.getenv("AGG_BANDIT_RUN_SLOW", "false").lower() == "true"

CONTEXT_NORM_TOL = 1e-9
GMF_CONSTANT = 0.01

CSV_HEADER = ("t", "arm_id", "group", "point", "width", "reward", "regret", "cum_regret", "loss")
SUMMARY_HEADER = ("grid_point", "seed", "final_cum_regret", "status")

DEFAULT_GRID: dict[str, list[float]] = {
    "gamma": [1e-1, 1e-2, 1e-3],
    "eta": [1e-2, 1e-3, 1e-4],
}

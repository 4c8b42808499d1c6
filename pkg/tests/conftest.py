import numpy as np
import pytest

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = []

# cut-down configs: seconds per subcommand, statistics too thin for the checks
SMALL_CONFIGS = {
    "simulate": {"sim": {"horizon": 0.5, "replicas": 2}},
    "averaging_sweep": {"sim": {"replicas": 200, "steps_per_epsilon": 16},
                        "grids": {"epsilon": [0.1, 0.05], "checkpoints": [0.5]},
                        "options": {"effective_dt": 0.005, "check_tau": 0.5}},
    "stationary_measure": {"sim": {"replicas": 4, "horizon": 60.0},
                           "grids": {"epsilon": [0.1, 0.05]}, "options": {"batch_length": 2.0}},
    "flow_vs_lambda": {"sim": {"replicas": 4, "horizon": 60.0, "epsilon": 0.05},
                       "grids": {"lambda": [0.1]}, "options": {"batch_length": 2.0}},
    "conductivity": {"grids": {"pairs": [[1.0, 1.0]]},
                     "options": {"replicas": 20, "ou_horizon": 100.0}},
    "green_kubo": {"sim": {"replicas": 4, "horizon": 60.0, "epsilon": 0.05, "lambda": 0.01},
                   "grids": {"N": [2]}},
    "fourier": {"sim": {"replicas": 4, "horizon": 60.0, "epsilon": 0.05}, "grids": {"N": [2]},
                "options": {"batch_length": 2.0}},
    "validate": {"options": {"n_states": 100, "n_samples": 10000}},
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

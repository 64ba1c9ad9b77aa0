import subprocess
import sys

import pytest

PINNED_CONFIG = """
plan.subcarriers = 32
plan.bandwidth_hz = 0.7e9, 1.4e9
users.count = 2, 4
seeds = 2
allocator = jspa, maxch
power_rule = waterfill, equal
optimizer.max_iterations = 25
metrics.beam_grid_points = 65
metrics.beam_stride = 4
metrics.footprint_samples = 3
metrics.footprint_grid_points = 49
"""


@pytest.fixture(scope="session")
def run_output(tmp_path_factory):
    """Pinned-seed output of the simulator CLI (its external interface)."""
    out = tmp_path_factory.mktemp("csv")
    cfg = out / "pinned.cfg"
    cfg.write_text(PINNED_CONFIG)
    for args in (
        ["run", "--config", str(cfg), "--seed", "7", "--out", str(out), "--jobs", "1"],
        ["bench", "--m-values", "16", "32", "--n-values", "16", "--runs", "1",
         "--iterations", "2", "--out", str(out)],
    ):
        proc = subprocess.run(
            [sys.executable, "-m", "rainbowbf", *args], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr
    return out

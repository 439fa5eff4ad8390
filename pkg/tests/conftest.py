import numpy as np
import pytest

from obimarket.config import SimConfig


@pytest.fixture
def small_cfg():
    """A few-thousand-step market with every horizon scaled down."""
    return SimConfig(
        t_e=4_000, t_c=600, t_l=300, tau_max=300, warmup=600, n_normal=99,
    ).with_(
        execution__kind="OAA", execution__interval=40, execution__start=1_500,
        scenario__window_start=1_500, scenario__window_end=2_500,
        scenario__spoof_cycle=300, scenario__spoof_count=60,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES):
            terminalreporter.write_line(line)

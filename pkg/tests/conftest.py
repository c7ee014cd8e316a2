"""
Session fixtures shared by the ewachain tests.

  - spread: a p=4 instance whose pi is spread over several states, with every proposal
    rule reachable (T_hat = {0}, the full set lies outside the core).
  - golden_config / golden_runner: the packaged golden experiment, run once per session.
"""
import dataclasses

import pytest

from ewachain.experiment import STAGES, ExperimentRunner
from ewachain.run_ewachain import golden_config as packaged_golden_config
from tests.helpers import gaussian_design, make_config, make_instance


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long sampling runs (deselect with -m \"not slow\")")


@pytest.fixture(scope="session")
def spread():
    inst = make_instance(gaussian_design(16, 4, seed=3), [0], 1.0, noise_seed=5)
    cfg = make_config(inst, T_hat=[0], D=0.5, nu=0.5)
    return inst, cfg


@pytest.fixture(scope="session")
def golden_config():
    return dataclasses.replace(packaged_golden_config(), steps=20000)


@pytest.fixture(scope="session")
def golden_runner(golden_config):
    runner = ExperimentRunner(golden_config, 42, STAGES)
    runner.run()
    return runner

import math

import pytest

from nvloop import magnetics, rf_network

DRIVE_FREQUENCY = 2.55e9
OMEGA = 2.0 * math.pi * DRIVE_FREQUENCY


@pytest.fixture(scope="session")
def device():
    return magnetics.LoopGeometry.default()


@pytest.fixture(scope="session")
def frame():
    return magnetics.NVFrame()


@pytest.fixture(scope="session")
def calibrated_standoff(device, frame):
    return magnetics.calibrate_standoff(device, frame)


@pytest.fixture(scope="session")
def tuned_chain():
    return rf_network.DriveChain()


@pytest.fixture(scope="session")
def tuned_current(tuned_chain):
    return rf_network.optimal_phase(OMEGA, tuned_chain).loop_current_amplitude


@pytest.fixture(scope="session")
def calibrated_map(device, frame, calibrated_standoff, tuned_current):
    plane = magnetics.EvalPlane(standoff_height=calibrated_standoff)
    return magnetics.f1_map(device, plane, frame, tuned_current)

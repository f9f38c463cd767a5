import numpy as np
import pytest

from switch_verdict.certkit import SubsystemFamily, build_certificate_set
from switch_verdict.sigkit import periodic_from_cycle

A_ROT1 = np.array([[-0.2, -0.4], [3.0, -0.2]])
A_ROT2 = np.array([[-0.2, -3.0], [0.4, -0.2]])

A_MIX = {
    1: np.array([[-0.1857, -0.7565], [-0.0707, -0.6500]]),
    2: np.array([[-0.3509, -0.2683], [-0.3523, -0.5491]]),
    3: np.array([[0.1734, -0.6091], [0.8314, -0.1966]]),
    4: np.array([[0.6294, 0.8116], [-0.7460, 0.8268]]),
}
MIX_EDGES = [(1, 2), (1, 3), (2, 1), (2, 4), (3, 1), (3, 4), (4, 2), (4, 3)]
MIX_CYCLE = [(1, 10), (2, 10), (4, 30), (3, 30), (1, 10), (3, 30), (4, 30), (2, 10)]

ALTERNATE = [(1, 10), (2, 10)]


@pytest.fixture(scope="session")
def rot_family():
    return SubsystemFamily(2, {1: A_ROT1, 2: A_ROT2}, frozenset({(1, 2), (2, 1)}))


@pytest.fixture(scope="session")
def rot_certs(rot_family):
    return build_certificate_set(rot_family)


@pytest.fixture(scope="session")
def mix_family():
    return SubsystemFamily(2, dict(A_MIX), frozenset(MIX_EDGES))


@pytest.fixture(scope="session")
def mix_certs(mix_family):
    return build_certificate_set(mix_family)


@pytest.fixture(scope="session")
def prime_family():
    return SubsystemFamily(2, {1: A_MIX[2], 2: A_MIX[4]}, frozenset({(1, 2), (2, 1)}))


@pytest.fixture(scope="session")
def prime_certs(prime_family):
    return build_certificate_set(prime_family)


@pytest.fixture(scope="session")
def alternating(rot_family):
    return periodic_from_cycle(ALTERNATE, rot_family)


@pytest.fixture(scope="session")
def mix_periodic(mix_family):
    return periodic_from_cycle(MIX_CYCLE, mix_family)

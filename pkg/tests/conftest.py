import pytest

from pipematch import attach_noise, build_circuit, build_graph, enumerate_errors
from pipematch.sim import SensitivityModel


class Setup:
    """Circuit, channels, sensitivity model, error table and graph bundle."""

    def __init__(self, family, distance, rounds, p):
        self.family = family
        self.distance = distance
        self.rounds = rounds
        self.p = p
        self.circuit = build_circuit(family, distance, rounds)
        self.channels = attach_noise(self.circuit, p)
        self.model = SensitivityModel(self.circuit)
        self.table = enumerate_errors(self.circuit, self.channels, self.model)
        self.graph = build_graph(self.circuit, self.channels, self.model, self.table)

    @property
    def coords(self):
        return self.model.detectors.coords


_CACHE = {}


def get_setup(family, distance=3, rounds=3, p=0.01):
    key = (family, distance, rounds, p)
    if key not in _CACHE:
        _CACHE[key] = Setup(*key)
    return _CACHE[key]


@pytest.fixture(scope="session")
def unrotated3():
    return get_setup("unrotated")


@pytest.fixture(scope="session")
def toric3():
    return get_setup("toric")


@pytest.fixture(scope="session")
def rotated3():
    return get_setup("rotated")


@pytest.fixture(scope="session", params=["toric", "unrotated", "rotated"])
def any_family(request):
    return get_setup(request.param)

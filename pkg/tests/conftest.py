import numpy as np
import pytest

from nucavity import catalog
from nucavity.ensemble import build_sites
from nucavity.fields import resonant_angles


@pytest.fixture(scope="session")
def single_layer():
    return catalog.single_layer_cavity()


@pytest.fixture(scope="session")
def single_layer_phi0(single_layer):
    res = resonant_angles(single_layer, phi_range=(1e-3, 5e-3), count=1)
    assert res.found_all
    return res.angles[0]


@pytest.fixture(scope="session")
def single_layer_site(single_layer):
    (site,) = build_sites(single_layer, h_max=1.0)
    return site


@pytest.fixture(scope="session")
def eit_positions():
    return catalog.two_layer_positions("node-antinode")


@pytest.fixture(scope="session")
def eit_stack(eit_positions):
    return catalog.two_layer_cavity("node-antinode", positions=eit_positions)


@pytest.fixture(scope="session")
def inverted_positions(eit_positions):
    z_n, z_a = eit_positions
    return (z_a, round(2 * z_a - z_n, 3))


@pytest.fixture(scope="session")
def inverted_stack(inverted_positions):
    return catalog.two_layer_cavity("antinode-node", positions=inverted_positions)


@pytest.fixture(scope="session")
def eit_phi3(eit_stack):
    res = resonant_angles(eit_stack, phi_range=(1e-3, 6e-3), count=3)
    assert res.found_all
    return res.angles[2]


@pytest.fixture(scope="session")
def inverted_phi3(inverted_stack):
    res = resonant_angles(inverted_stack, phi_range=(1e-3, 6e-3), count=3)
    assert res.found_all
    return res.angles[2]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240813)

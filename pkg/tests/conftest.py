import numpy as np
import pytest

import nfclab as nl


@pytest.fixture(scope="session")
def los_scene():
    return nl.load_preset("los_lab")


@pytest.fixture(scope="session")
def olos_scene():
    return nl.load_preset("olos_baffle")


@pytest.fixture(scope="session")
def los_cfr(los_scene):
    return nl.synthesize_cfr(los_scene)


@pytest.fixture(scope="session")
def olos_cfr(olos_scene):
    return nl.synthesize_cfr(olos_scene)


@pytest.fixture(scope="session")
def los_stats(los_cfr, los_scene):
    return nl.compute_stats(los_cfr, los_scene)


@pytest.fixture(scope="session")
def olos_stats(olos_cfr, olos_scene):
    return nl.compute_stats(olos_cfr, olos_scene)


@pytest.fixture(scope="session")
def shadow_nu(olos_scene):
    """Center-frequency Fresnel parameter of every element's direct path."""
    lam_c = olos_scene.sweep.lambda_center
    out = []
    for n in range(1, olos_scene.array.n_elements + 1):
        path = nl.los_path(olos_scene, n)
        out.append(path.edge_factors[0] / np.sqrt(lam_c) if path.edge_factors else -np.inf)
    return np.array(out)

import numpy as np
import pytest

from rudin_lab.groups import cyclic_group, family_G, from_matrices, trivial_group

FLIP = np.diag([-1.0, 1.0]).astype(complex)
SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


@pytest.fixture(scope="session")
def trivial():
    return trivial_group()


@pytest.fixture(scope="session")
def flip_group():
    """<diag(-1, 1)>, the smallest nontrivial reflection group."""
    return from_matrices([FLIP], label="flip")


@pytest.fixture(scope="session")
def g212():
    return family_G(2, 1)


@pytest.fixture(scope="session")
def g222():
    return family_G(2, 2)


@pytest.fixture(scope="session")
def cyc3():
    return cyclic_group(3)


@pytest.fixture(scope="session")
def cyc4():
    return cyclic_group(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_ball(rng, n, radius=0.9):
    x = rng.standard_normal((n, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = radius * rng.random(n) ** 0.25
    return (x[:, :2] + 1j * x[:, 2:]) * r[:, None]

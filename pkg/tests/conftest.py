import pytest

from bvlgcy.weights import ADMISSIBLE, OrbifoldSpec


@pytest.fixture(scope="session")
def s3111():
    return OrbifoldSpec("quartic", (3, 1, 1, 1))


@pytest.fixture(scope="session")
def s5221():
    return OrbifoldSpec("quartic", (5, 2, 2, 1))


def all_specs():
    return [OrbifoldSpec(c, w) for w in ADMISSIBLE for c in ("quartic", "cubic-sextic")]

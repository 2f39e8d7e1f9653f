import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def frob(X):
    return float(np.linalg.norm(X))


@pytest.fixture
def pd_pair():
    from qjensen.hermitian import random_pd

    return random_pd(3, 0.2, 5.0, 11), random_pd(3, 0.2, 5.0, 12)

import os
import sys
import logging

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from gaussian_core import beam_splitter, from_noise_levels, rotate, tensor_product  # noqa: E402
from presets import lab_parameters  # noqa: E402


@pytest.fixture
def lab():
    return lab_parameters()


@pytest.fixture
def restore_logging():
    """setup_logging заменяет обработчики корневого логгера"""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, n_modes=None, mixers=None):
    """Произведение случайных смешанных одномодовых состояний, перемешанное BS и фазами"""
    n = n_modes or int(rng.integers(1, 5))
    modes = []
    for _ in range(n):
        r_minus = rng.uniform(0.1, 1.0)
        r_plus = (1.0 + rng.uniform(0.0, 2.0)) / r_minus
        modes.append(from_noise_levels(r_minus, r_plus, rng.uniform(0, 2 * np.pi)))
    state = tensor_product(*modes)
    for _ in range(mixers if mixers is not None else 2 * n):
        if n > 1:
            i, j = rng.choice(n, size=2, replace=False)
            state = beam_splitter(state, int(i), int(j), rng.uniform(0, 1))
        state = rotate(state, int(rng.integers(0, n)), rng.uniform(-np.pi, np.pi))
    return state

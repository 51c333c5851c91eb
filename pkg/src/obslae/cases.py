"""Built-in demonstration problems (also shipped as text files under data/)."""
from __future__ import annotations

import math

import numpy as np

from .ilc import LtiPlant

# Rank 3, neither full row nor full column rank; trace(G G^T) = 232.
DEMO_G = np.array([
    [1.0, 3.0, 5.0, 7.0, 2.0],
    [2.0, 4.0, 6.0, 1.0, 5.0],
    [1.0, 2.0, 5.0, 3.0, 3.0],
    [1.0, 2.0, 1.0, -2.0, 2.0],
])
DEMO_Y_SOLVABLE = np.array([1.0, 0.0, 2.0, -2.0])
DEMO_Y_UNSOLVABLE = np.array([1.0, 1.0, 2.0, 2.0])
DEMO_SIGMA = 1.0 / 120.0
DEMO_U0 = np.array([1.0, 1.0, 0.0, 0.0, 0.0])
DEMO_EPSILON = 1e-5
DEMO_LEAST_SQUARES_RESIDUAL = 1351.0 / 780.0

TRACKING_HORIZON = 30
TRACKING_F0 = np.array([[2.0, 1.0], [1.0, 1.0]])
TRACKING_U0 = np.array([5.0, 1.0])


def tracking_plant(horizon: int = TRACKING_HORIZON) -> LtiPlant:
    """Unstable 3-state plant whose first Markov parameter [[1,-1],[2,-2]] has rank one."""
    a = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    b = np.array([[1.0, -1.0], [2.0, -2.0], [0.0, 0.0]])
    c = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, -1.0]])
    v = np.array([[2.0 * math.sin(0.2 * t + 1.0) - 1.0, 2.0 * math.sin(0.2 * t)] for t in range(horizon + 1)])
    return LtiPlant(a, b, c, np.array([1.0, 0.0, 0.0]), horizon, v=v)


def tracking_reference(horizon: int = TRACKING_HORIZON, r: int = 1) -> np.ndarray:
    """y_d(t) = [2 sin(0.2 t + 1), 2 sin(0.2 t)] for t = r..r+N-1."""
    return np.array([[2.0 * math.sin(0.2 * t + 1.0), 2.0 * math.sin(0.2 * t)] for t in range(r, r + horizon)])


def tracking_u0(horizon: int = TRACKING_HORIZON) -> np.ndarray:
    return np.tile(TRACKING_U0, (horizon, 1))

"""Independent reference computations shared by the tests.

Nothing here imports the package: each oracle re-derives its discretization
from scratch so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import numpy as np


def interval_nodes(n: int, length: float = np.pi) -> tuple[np.ndarray, float]:
    h = length / (n + 1)
    return h * np.arange(1, n + 1), h


def neg_second_difference(n: int, h: float) -> np.ndarray:
    return (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2


def scalar_symmetric_solve(t: float, n: int, u0: np.ndarray, tol: float = 1e-11, max_iter: int = 60) -> np.ndarray:
    """Newton for ``-u'' = 3 t u - (int u) u`` on (0, pi), zero boundary values.

    This is the u = v reduction of the symmetric system with A = (2, 1, 1, 2),
    K = 1 and f = |t|, g = |s|; quadrature is the node sum times h.
    """
    x, h = interval_nodes(n)
    L = neg_second_difference(n, h)
    u = np.array(u0, dtype=float)
    for _ in range(max_iter):
        mass = h * np.sum(u)
        F = L @ u - 3 * t * u + mass * u
        if np.max(np.abs(F)) <= tol:
            return u
        J = L - 3 * t * np.eye(n) + mass * np.eye(n) + h * np.outer(u, np.ones(n))
        u = u - np.linalg.solve(J, F)
    raise RuntimeError("scalar oracle did not converge")


def scalar_symmetric_branch_amplitude(t: float, n: int) -> float:
    """Max of the positive scalar solution via a start on the analytic branch."""
    x, _ = interval_nodes(n)
    guess = max((3 * t - 1) / 2, 1e-3) * np.sin(x)
    return float(np.max(scalar_symmetric_solve(t, n, guess)))


def discrete_lambda1(n: int, length: float = np.pi) -> float:
    h = length / (n + 1)
    return 4 / h**2 * np.sin(np.pi * h / (2 * length)) ** 2

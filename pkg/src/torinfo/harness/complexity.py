"""Area model for the cost of the three-tier hybrid periodic search.

For uniform data on ``[0, 2pi)^D`` a query escalates to the shifted tree when
it lies within ``eps`` of a wall (the border area) and to the linear scan
when it is also near a wall of the shifted frame (the naive area).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

C_KNN = 7.0 / 15.0


def avg_knn_distance(k: float, N: int, D: int, c: float = C_KNN) -> float:
    """Mean max-norm distance to the k-th neighbour for N uniform points on
    a torus of side 2pi: ``c (k (2pi)^D / N)^(1/D)``.

    ``k`` may be any positive real so that limits in ``k`` can be taken.
    """
    if not (0 < k < N):
        raise ValueError(f"need 0 < k < N, got k={k}, N={N}")
    if D < 1:
        raise ValueError(f"D must be positive, got {D}")
    return c * (k * (2 * math.pi) ** D / N) ** (1.0 / D)


@dataclass(frozen=True)
class ComplexityModel:
    D: int
    k: float
    N: int
    c: float = C_KNN

    def __post_init__(self):
        if self.D not in (2, 3):
            raise ValueError(f"the cost model covers D in {{2, 3}}, got {self.D}")

    @property
    def eps(self) -> float:
        return avg_knn_distance(self.k, self.N, self.D, self.c)

    @property
    def area_total(self) -> float:
        return (2 * math.pi) ** self.D

    @property
    def area_inner(self) -> float:
        return max(2 * math.pi - 2 * self.eps, 0.0) ** self.D

    @property
    def area_border(self) -> float:
        return self.area_total - self.area_inner

    @property
    def area_naive(self) -> float:
        # D 2^D eps^D: boxes of half-width eps around the wall midpoints
        return min(self.D * 2 ** self.D * self.eps ** self.D, self.area_border)

    @property
    def alpha(self) -> float:
        return self.area_border / self.area_total

    @property
    def beta(self) -> float:
        return self.area_naive / self.area_total

    def cost(self) -> float:
        """``N log2 N + alpha N log2 N + beta N^2``."""
        n, lg = self.N, math.log2(self.N)
        return n * lg + self.alpha * n * lg + self.beta * n * n

    def cost_expanded(self) -> float:
        """Closed-form expansion of :meth:`cost` in N, k and c."""
        n, k, c, lg = self.N, self.k, self.c, math.log2(self.N)
        if self.D == 2:
            return ((n + 4 * c * math.sqrt(k * n) - 4 * c * c * k) * lg
                    + 8 * c * c * k * n)
        return ((n + 6 * c * k ** (1 / 3) * n ** (2 / 3)
                 - 12 * c * c * k ** (2 / 3) * n ** (1 / 3) + 8 * c ** 3 * k) * lg
                + 24 * c ** 3 * k * n)


def hybrid_cost_model(N: int, k: int, D: int):
    """``(alpha, beta, predicted_cost)`` for uniform data."""
    m = ComplexityModel(D=D, k=k, N=N)
    return m.alpha, m.beta, m.cost()

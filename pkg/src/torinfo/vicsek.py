"""Standard Vicsek model on a periodic square, plus record extraction.

Headings update to the circular mean of the headings of every particle
within ``r_int`` (self included, minimum-image distances) plus uniform noise
on ``[-eta/2, eta/2]``; positions advance by ``s`` along the old heading.
All particles update synchronously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numba as nb
import numpy as np

from .space import TWO_PI, PeriodicSpace, PointCloud


@dataclass(frozen=True)
class VicsekConfig:
    M: int = 1000
    rho: float = 0.25
    s: float = 0.1
    eta: float = 1.0
    tau: int = 5000
    r_int: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.M) < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0 <= self.eta <= TWO_PI:
            raise ValueError(f"eta must lie in [0, 2pi], got {self.eta}")
        if int(self.tau) < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if not self.r_int > 0:
            raise ValueError(f"r_int must be positive, got {self.r_int}")

    @property
    def L(self) -> float:
        return math.sqrt(self.M / self.rho)


@dataclass
class VicsekState:
    positions: np.ndarray
    headings: np.ndarray
    t: int = 0


def _wrap(values, period):
    out = np.mod(values, period)
    out[out >= period] = 0.0
    return out


def circular_mean(angles) -> float:
    """Mean direction ``atan2(sum sin, sum cos)`` in ``[0, 2pi)``.

    Computed relative to the first angle so that identical inputs come back
    unchanged, bit for bit.
    """
    a = np.asarray(angles, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("circular mean of no angles")
    rel = a - a[0]
    mean = a[0] + math.atan2(np.sin(rel).sum(), np.cos(rel).sum())
    return float(_wrap(np.array([mean]), TWO_PI)[0])


@nb.njit(cache=True)
def _cell_lists(pos, L, ncell):
    n = pos.shape[0]
    head = np.full(ncell * ncell, -1, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    size = L / ncell
    for i in range(n):
        cx = min(int(pos[i, 0] / size), ncell - 1)
        cy = min(int(pos[i, 1] / size), ncell - 1)
        c = cx * ncell + cy
        nxt[i] = head[c]
        head[c] = i
    return head, nxt


@nb.njit(cache=True)
def _close(pos, i, j, L, r2):
    dx = abs(pos[i, 0] - pos[j, 0])
    dx = min(dx, L - dx)
    dy = abs(pos[i, 1] - pos[j, 1])
    dy = min(dy, L - dy)
    return dx * dx + dy * dy <= r2


@nb.njit(cache=True)
def _pairs(pos, L, r, count_only, out_i, out_j):
    """Ordered pairs ``(i, j)``, ``i != j``, within ``r`` (minimum image)."""
    n = pos.shape[0]
    r2 = r * r
    ncell = int(L / r)
    m = 0
    if ncell < 3:
        for i in range(n):
            for j in range(n):
                if i != j and _close(pos, i, j, L, r2):
                    if not count_only:
                        out_i[m] = i
                        out_j[m] = j
                    m += 1
        return m
    head, nxt = _cell_lists(pos, L, ncell)
    size = L / ncell
    for i in range(n):
        cx = min(int(pos[i, 0] / size), ncell - 1)
        cy = min(int(pos[i, 1] / size), ncell - 1)
        for ox in range(-1, 2):
            for oy in range(-1, 2):
                c = ((cx + ox) % ncell) * ncell + (cy + oy) % ncell
                j = head[c]
                while j >= 0:
                    if j != i and _close(pos, i, j, L, r2):
                        if not count_only:
                            out_i[m] = i
                            out_j[m] = j
                        m += 1
                    j = nxt[j]
    return m


def neighbour_pairs(positions: np.ndarray, L: float, r_int: float = 1.0):
    """Ordered interacting pairs as two index arrays, sorted by ``i``."""
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    dummy = np.empty(0, dtype=np.int64)
    m = _pairs(pos, L, r_int, True, dummy, dummy)
    ii = np.empty(m, dtype=np.int64)
    jj = np.empty(m, dtype=np.int64)
    _pairs(pos, L, r_int, False, ii, jj)
    order = np.lexsort((jj, ii))
    return ii[order], jj[order]


def consensus_headings(positions, headings, L, r_int=1.0, pairs=None):
    """Self-inclusive circular mean of neighbour headings for every particle.

    Sums are taken relative to each particle's own heading, so a particle
    whose neighbours all share its heading keeps it exactly.
    """
    ii, jj = neighbour_pairs(positions, L, r_int) if pairs is None else pairs
    rel = headings[jj] - headings[ii]
    n = headings.shape[0]
    s = np.bincount(ii, weights=np.sin(rel), minlength=n)
    c = 1.0 + np.bincount(ii, weights=np.cos(rel), minlength=n)
    return _wrap(headings + np.arctan2(s, c), TWO_PI)


def initial_state(config: VicsekConfig, rng: np.random.Generator,
                  aligned: Optional[float] = None) -> VicsekState:
    """Uniform positions; uniform headings, or all equal to ``aligned``."""
    L = config.L
    pos = _wrap(rng.random((config.M, 2)) * L, L)
    if aligned is None:
        head = _wrap(rng.random(config.M) * TWO_PI, TWO_PI)
    else:
        head = _wrap(np.full(config.M, float(aligned)), TWO_PI)
    return VicsekState(pos, head, 0)


def step(state: VicsekState, config: VicsekConfig,
         rng: Optional[np.random.Generator] = None, pairs=None) -> VicsekState:
    """One synchronous update; noise drawn from ``rng``."""
    L = config.L
    if rng is None:
        rng = np.random.default_rng(config.seed + state.t)
    mean = consensus_headings(state.positions, state.headings, L, config.r_int, pairs)
    noise = rng.uniform(-0.5 * config.eta, 0.5 * config.eta, config.M)
    headings = _wrap(mean + noise, TWO_PI)
    v = np.column_stack([np.cos(state.headings), np.sin(state.headings)])
    positions = _wrap(state.positions + config.s * v, L)
    return VicsekState(positions, headings, state.t + 1)


def order_parameter(state_or_headings) -> float:
    """Magnitude of the mean unit heading vector, in ``[0, 1]``."""
    h = getattr(state_or_headings, "headings", state_or_headings)
    h = np.asarray(h, dtype=np.float64)
    if h.size == 0:
        raise ValueError("order parameter of an empty flock")
    # rotate so the first heading is 0; keeps a fully aligned flock at exactly 1
    rel = h - h[0]
    phi = math.hypot(math.fsum(np.cos(rel)), math.fsum(np.sin(rel))) / h.size
    return min(phi, 1.0)


@dataclass
class Trajectory:
    """Stored consecutive states of one run."""

    config: VicsekConfig
    positions: np.ndarray  # (T, M, 2)
    headings: np.ndarray  # (T, M)
    order: np.ndarray = field(default=None)  # (T,)

    @property
    def n_states(self) -> int:
        return self.headings.shape[0]

    def state(self, t: int) -> VicsekState:
        return VicsekState(self.positions[t], self.headings[t], t)


def simulate(config: VicsekConfig, aligned: Optional[float] = None,
             store_positions: bool = True) -> Trajectory:
    """Run ``tau`` steps from a seeded random start; stores ``tau + 1`` states."""
    rng = np.random.default_rng(config.seed)
    state = initial_state(config, rng, aligned)
    T, M = config.tau + 1, config.M
    positions = np.empty((T, M, 2)) if store_positions else None
    headings = np.empty((T, M))
    order = np.empty(T)
    for t in range(T):
        if store_positions:
            positions[t] = state.positions
        headings[t] = state.headings
        order[t] = order_parameter(state)
        if t + 1 < T:
            state = step(state, config, rng)
    return Trajectory(config, positions, headings, order)


@dataclass
class RecordExtract:
    """Heading records; every column is periodic with period 2pi.

    ``mi``: ``(theta_i(t), theta_j(t))``; ``te``: ``(theta_i(t+1),
    theta_i(t), theta_j(t))``; ``gte``: ``(theta_i(t+1), theta_i(t),
    consensus_i(t))``.
    """

    mi: np.ndarray
    te: np.ndarray
    gte: np.ndarray

    @property
    def n_interactions(self) -> int:
        """Number of interacting ordered pairs over all transitions (TE records)."""
        return int(self.te.shape[0])

    def cloud(self, metric: str) -> PointCloud:
        data = getattr(self, metric.lower())
        return PointCloud(data, PeriodicSpace.torus(data.shape[1]))


def extract_records(trajectory: Trajectory) -> RecordExtract:
    """Pairwise and consensus records from consecutive stored states.

    A transition record at ``t`` uses states ``t`` and ``t + 1``; MI records
    come from every stored state including the last.
    """
    if trajectory.positions is None:
        raise ValueError("trajectory was simulated without positions")
    T = trajectory.n_states
    if T < 2:
        raise ValueError("need at least two consecutive states")
    cfg = trajectory.config
    L = cfg.L
    mi: List[np.ndarray] = []
    te: List[np.ndarray] = []
    gte: List[np.ndarray] = []
    H = trajectory.headings
    for t in range(T):
        ii, jj = neighbour_pairs(trajectory.positions[t], L, cfg.r_int)
        h = H[t]
        mi.append(np.column_stack([h[ii], h[jj]]))
        if t + 1 < T:
            nxt = H[t + 1]
            te.append(np.column_stack([nxt[ii], h[ii], h[jj]]))
            cons = consensus_headings(trajectory.positions[t], h, L,
                                      cfg.r_int, (ii, jj))
            gte.append(np.column_stack([nxt, h, cons]))
    return RecordExtract(np.vstack(mi), np.vstack(te), np.vstack(gte))


def interaction_count(config: VicsekConfig) -> int:
    """N_I of a fresh run without materialising records."""
    traj = simulate(config)
    total = 0
    for t in range(traj.n_states - 1):
        ii, _ = neighbour_pairs(traj.positions[t], config.L, config.r_int)
        total += ii.size
    return total


def sweep_order(etas: Sequence[float], base: VicsekConfig, burn_in: int = 0) -> np.ndarray:
    """Time-averaged order parameter for each noise width."""
    out = []
    for eta in etas:
        cfg = VicsekConfig(base.M, base.rho, base.s, float(eta), base.tau,
                           base.r_int, base.seed)
        traj = simulate(cfg, store_positions=False)
        out.append(float(np.mean(traj.order[burn_in:])))
    return np.array(out)

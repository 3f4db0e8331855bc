"""Uniform time grids on [0, T], sampled vector-valued signals, and the
interval-to-line extension / restriction operators.

Line objects live on a periodization window [-T, 2T) identified with a
circle of circumference 3T, so that discrete Fourier analysis of
compactly supported extensions is exact.  The embedded copy of [0, T]
sits in the middle third of the window.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, GridAlignmentError, ShapeError

__all__ = [
    "Grid",
    "Signal",
    "ExtendedSignal",
    "zero_extend",
    "q_extend",
    "restrict",
    "read_signal_csv",
    "write_signal_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid t_k = k*h on [0, T] with h = T/(n-1).

    Dyadic analysis (extensions, frequency decompositions) additionally
    requires ``n`` to be a power of two with n >= 16; use
    :meth:`require_dyadic` at entry points that rely on it.  Restricted
    segments produced by :func:`restrict` carry relaxed grids.
    """

    T: float
    n: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"horizon T must be positive and finite, got {self.T}")
        if self.n < 2:
            raise DomainError(f"grid needs at least 2 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return self.T / (self.n - 1)

    @property
    def is_dyadic(self) -> bool:
        return self.n >= 16 and (self.n & (self.n - 1)) == 0

    def require_dyadic(self) -> None:
        if not self.is_dyadic:
            raise DomainError(
                f"dyadic analysis needs a power-of-two node count >= 16, got n={self.n}"
            )

    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def time_at(self, k: int) -> float:
        return k * self.h

    def index_of(self, t: float) -> int:
        """Node index of a grid-aligned time; GridAlignmentError otherwise."""
        k = int(round(t / self.h))
        if abs(k * self.h - t) > 1e-9 * max(self.T, 1.0):
            raise GridAlignmentError(
                f"t={t!r} is not grid-aligned (h={self.h!r}); round to a node first"
            )
        return k


def _as_values(values, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != n:
        raise ShapeError(f"expected {n} nodes, got value array of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0][0])
        raise DomainError(f"non-finite sample at node {bad}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Signal:
    """Samples of a function [0, T] -> R^d on a uniform grid.

    ``values`` has shape (n, d).  The node-0 value is the trace u(0)
    used as initial datum.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values, self.grid.n))

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def flat(self) -> np.ndarray:
        """1-D view of the samples; only for scalar-valued signals."""
        if self.d != 1:
            raise ShapeError(f"flat view needs d=1, signal has d={self.d}")
        return self.values[:, 0]

    def value_at_start(self) -> np.ndarray:
        return np.array(self.values[0])

    def with_values(self, values) -> "Signal":
        return Signal(self.grid, values)


def window_shape(grid: Grid) -> tuple[int, int]:
    """(node count, origin index) of the periodization window of a grid."""
    m = 3 * (grid.n - 1)
    return m, grid.n - 1


@dataclass(frozen=True)
class ExtendedSignal:
    """Samples of a function on the periodization circle [-T, 2T).

    ``origin`` is the index of tau = 0; the embedded interval [0, T]
    occupies indices origin .. origin + n - 1.
    """

    base_grid: Grid
    values: np.ndarray
    origin: int = field(default=-1)

    def __post_init__(self):
        m, origin = window_shape(self.base_grid)
        if self.origin == -1:
            object.__setattr__(self, "origin", origin)
        elif self.origin != origin:
            raise ShapeError(f"origin must be {origin} for this grid, got {self.origin}")
        object.__setattr__(self, "values", _as_values(self.values, m))

    @property
    def h(self) -> float:
        return self.base_grid.h

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def circumference(self) -> float:
        return self.m * self.h

    def times(self) -> np.ndarray:
        return (np.arange(self.m) - self.origin) * self.h

    def interval_values(self) -> np.ndarray:
        """Samples over the embedded closed interval [0, T]."""
        return self.values[self.origin : self.origin + self.base_grid.n]

    @classmethod
    def from_window_values(cls, grid: Grid, values) -> "ExtendedSignal":
        return cls(grid, values)

    @classmethod
    def zeros(cls, grid: Grid, d: int = 1) -> "ExtendedSignal":
        m, _ = window_shape(grid)
        return cls(grid, np.zeros((m, d)))


def _check_cut(u: Signal, t: float) -> int:
    u.grid.require_dyadic()
    if not (t > 0 and t <= u.grid.T + 1e-12 * u.grid.T):
        raise DomainError(f"cut time must satisfy 0 < t <= T={u.grid.T}, got {t}")
    return u.grid.index_of(t)


def zero_extend(u: Signal, t: float) -> ExtendedSignal:
    """Extension of u|[0, t) by zero to the periodization window.

    The restriction back to [0, t) reproduces the samples exactly.
    """
    k = _check_cut(u, t)
    m, origin = window_shape(u.grid)
    vals = np.zeros((m, u.d))
    vals[origin : origin + k] = u.values[:k]
    return ExtendedSignal(u.grid, vals)


@lru_cache(maxsize=32)
def _theta_profile(T: float, n: int) -> np.ndarray:
    """Window cutoff bump: 1 on [-T/2, 3T/2], smoothly 0 at the window edges.

    Built from the C-infinity transition x -> f(x)/(f(x)+f(1-x)) with
    f(x) = exp(-1/x), so the profile wraps smoothly on the circle.
    """
    grid = Grid(T, n)
    m, origin = window_shape(grid)
    tau = (np.arange(m) - origin) * grid.h

    def transition(x):
        x = np.clip(x, 1e-12, 1.0 - 1e-12)
        f = np.exp(-1.0 / x)
        return f / (f + np.exp(-1.0 / (1.0 - x)))

    theta = np.ones(m)
    left = tau < -T / 2
    theta[left] = transition((tau[left] + T) / (T / 2))
    right = tau > 1.5 * T
    theta[right] = transition((2 * T - tau[right]) / (T / 2))
    theta.flags.writeable = False
    return theta


def theta_cutoff(grid: Grid) -> np.ndarray:
    return _theta_profile(grid.T, grid.n)


def q_extend(u: Signal, t: float) -> ExtendedSignal:
    """Smooth continuation extension of u|[0, t).

    The value at tau is theta(tau) * (u(0) + integral of the
    zero-extended discrete derivative over ]0, tau[).  Inside [0, t)
    the cumulative telescopes and the samples of u are reproduced
    exactly; beyond t the extension plateaus at u(t) before the cutoff
    takes it to zero.
    """
    k = _check_cut(u, t)
    m, origin = window_shape(u.grid)
    h = u.grid.h
    du = np.zeros((m, u.d))
    du[origin : origin + k] = (u.values[1 : k + 1] - u.values[:k]) / h
    bracket = np.zeros((m, u.d))
    bracket[1:] = h * np.cumsum(du[:-1], axis=0)
    theta = theta_cutoff(u.grid)
    return ExtendedSignal(u.grid, theta[:, None] * (bracket + u.values[0]))


def restrict(u: ExtendedSignal, a: float, b: float) -> Signal:
    """Samples of u on [a, b), re-indexed to start at a.

    The output grid is relaxed (its node count is whatever the segment
    dictates); it is meant for sample comparison and serialization, not
    for further dyadic analysis.
    """
    grid = u.base_grid
    ka, kb = grid.index_of(a), grid.index_of(b)
    if not (0 <= ka < kb <= grid.n - 1):
        raise DomainError(f"restriction bounds must satisfy 0 <= a < b <= T, got [{a}, {b})")
    if kb - ka < 2:
        raise DomainError("restriction segment needs at least two nodes")
    seg = u.values[u.origin + ka : u.origin + kb]
    return Signal(Grid((kb - ka - 1) * grid.h, kb - ka), seg)


def write_signal_csv(u: Signal, path: str | Path) -> None:
    """CSV with header t, x0, x1, ... at full (round-trip) precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{i}" for i in range(u.d)])
        for k, t in enumerate(u.grid.times()):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in u.values[k]])


def read_signal_csv(path: str | Path) -> Signal:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "t":
        raise DomainError(f"{path}: expected header starting with 't'")
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    if data.shape[0] < 2:
        raise DomainError(f"{path}: need at least two sample rows")
    t = data[:, 0]
    if abs(t[0]) > 1e-12:
        raise DomainError(f"{path}: time column must start at 0, got {t[0]}")
    steps = np.diff(t)
    if steps.min() <= 0 or (steps.max() - steps.min()) > 1e-9 * max(t[-1], 1.0):
        raise DomainError(f"{path}: time column must be uniformly spaced")
    return Signal(Grid(float(t[-1]), data.shape[0]), data[:, 1:])

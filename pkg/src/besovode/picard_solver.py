"""Windowed fixed-point solver for u' = H(u), u(0) = u0.

The differential problem is recast as u = u0 + integral of H(u); the
map u -> u0 + cumulative(H(u)) is iterated on a window whose length is
chosen so the map contracts (measured on probe pairs), and the window
is restarted from its endpoint value until the horizon is covered.
Causality of H makes the restart sound: the frozen past determines the
memory part of H on later windows.

Two cumulative rules back the integral step: trapezoid for
continuous-representative right-hand sides, and the pairing-form
(left-rectangle) cumulative for operators that declare a rough output
class.  The latter is the closed form the near-diagonal duality pairing
reduces to on sharp dyadic bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, WindowUnderflowError
from .grid_signal import Grid, Signal
from .rhs_operators import RhsOperator

__all__ = [
    "SolverConfig",
    "WindowRecord",
    "SolveReport",
    "integral_step",
    "picard_map",
    "select_window",
    "solve",
    "residual",
]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the windowed fixed-point iteration.

    ``tol`` is the sup-norm stopping tolerance of the fixed-point
    iteration (a computable surrogate for the smoothness-norm
    contraction, which dominates it).  Window selection accepts a
    window once the measured contraction over ``probe_pairs`` random
    pairs inside the trust ball is at most ``target_contraction``,
    halving by ``window_shrink`` otherwise, down to ``min_window``
    (defaults to 8 grid cells).
    """

    tol: float = 1e-10
    max_iter: int = 80
    target_contraction: float = 0.5
    window_shrink: float = 0.5
    min_window: float | None = None
    ball_radius: float = math.inf
    alpha: float = 0.25
    eta: float = 0.75
    p: float = 2.0
    q: float = 2.0
    seed: int = 0
    probe_pairs: int = 20

    def __post_init__(self):
        if not (self.tol > 0):
            raise DomainError(f"tol must be positive, got {self.tol}")
        if not (0.0 < self.alpha < self.eta < 1.0):
            raise DomainError(
                f"indices must satisfy 0 < alpha < eta < 1, got alpha={self.alpha}, eta={self.eta}"
            )
        if not (0.0 < self.target_contraction < 1.0):
            raise DomainError("target_contraction must lie in (0, 1)")
        if not (0.0 < self.window_shrink < 1.0):
            raise DomainError("window_shrink must lie in (0, 1)")

    def min_window_nodes(self, grid: Grid) -> int:
        if self.min_window is None:
            return 8
        nodes = int(round(self.min_window / grid.h))
        if nodes < 4:
            raise DomainError(f"min_window must be at least 4 grid cells, got {self.min_window}")
        return nodes


@dataclass(frozen=True)
class WindowRecord:
    t_start: float
    t_end: float
    iterations: int
    contraction_estimate: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "iterations": self.iterations,
            "contraction_estimate": self.contraction_estimate,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class SolveReport:
    solution: Signal
    windows: tuple[WindowRecord, ...]
    status: str  # converged | window_underflow | max_iter | operator_error
    reached_time: float
    warnings: tuple[str, ...] = field(default_factory=tuple)
    detail: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self, solution_csv: str | None = None) -> dict:
        doc = {
            "status": self.status,
            "reached_time": self.reached_time,
            "windows": [w.to_dict() for w in self.windows],
            "warnings": list(self.warnings),
        }
        if self.detail:
            doc["detail"] = self.detail
        if solution_csv is not None:
            doc["solution_csv"] = solution_csv
        return doc


def _cumulative(phi: np.ndarray, h: float, rough: bool) -> np.ndarray:
    """Cumulative quadrature from the first node; exact zero at node 0."""
    out = np.zeros_like(phi)
    if rough:
        out[1:] = h * np.cumsum(phi[:-1], axis=0)
    else:
        out[1:] = h * np.cumsum(0.5 * (phi[1:] + phi[:-1]), axis=0)
    return out


def integral_step(phi: Signal, u0: np.ndarray, rough: bool = False) -> Signal:
    """Solution of u' = phi, u(0) = u0, as a cumulative quadrature.

    ``rough`` selects the pairing-form (left rectangle) cumulative used
    for negative-smoothness right-hand sides; the default is the
    trapezoid rule.  u(0) = u0 holds exactly either way.
    """
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    return phi.with_values(u0[None, :] + _cumulative(phi.values, phi.grid.h, rough))


def picard_map(op: RhsOperator, u: Signal, u0: np.ndarray) -> Signal:
    """One fixed-point update: integrate H(u) from the initial datum."""
    return integral_step(op.apply(u), u0, rough=op.rough_output)


def residual(op: RhsOperator, u: Signal, u0: np.ndarray) -> float:
    """Sup-norm distance of u from its own fixed-point update."""
    v = picard_map(op, u, u0)
    return float(np.max(np.abs(v.values - u.values)))


class _WindowWorkspace:
    """Embeds window iterates into full-horizon signals for a causal H."""

    def __init__(self, op: RhsOperator, grid: Grid, full: np.ndarray, k0: int, k1: int):
        self.op = op
        self.grid = grid
        self.full = full
        self.k0 = k0
        self.k1 = k1

    def map(self, window_values: np.ndarray, u0_local: np.ndarray) -> np.ndarray:
        vals = self.full.copy()
        vals[self.k0 : self.k1 + 1] = window_values
        vals[self.k1 + 1 :] = window_values[-1]  # constant continuation; causal H ignores it
        phi = self.op.apply(Signal(self.grid, vals)).values
        seg = phi[self.k0 : self.k1 + 1]
        cum = _cumulative(seg, self.grid.h, self.op.rough_output)
        return u0_local[None, :] + cum


def _probe_field(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    """Smooth random window perturbation with a constant component."""
    x = np.linspace(0.0, 1.0, m)
    out = np.zeros((m, d))
    for j in range(d):
        c = rng.standard_normal(4)
        out[:, j] = (
            c[0]
            + c[1] * np.sin(np.pi * x)
            + c[2] * np.cos(0.5 * np.pi * x)
            + 0.5 * c[3] * np.sin(2.0 * np.pi * x)
        )
    sup = np.max(np.abs(out))
    return out / max(sup, 1e-30)


def _measure_contraction(
    ws: _WindowWorkspace,
    u0_local: np.ndarray,
    amp: float,
    pairs: int,
    rng: np.random.Generator,
) -> float:
    m = ws.k1 - ws.k0 + 1
    d = u0_local.shape[0]
    worst = 0.0
    for _ in range(pairs):
        du = amp * _probe_field(rng, m, d)
        dv = amp * _probe_field(rng, m, d)
        su = ws.map(u0_local[None, :] + du, u0_local)
        sv = ws.map(u0_local[None, :] + dv, u0_local)
        denom = float(np.max(np.abs(du - dv)))
        if denom < 1e-14:
            continue
        worst = max(worst, float(np.max(np.abs(su - sv))) / denom)
    return worst


def _probe_amplitude(cfg: SolverConfig, u0_local: np.ndarray) -> float:
    if math.isfinite(cfg.ball_radius):
        return 0.5 * cfg.ball_radius
    return max(1.0, float(np.max(np.abs(u0_local))))


def _select_window_nodes(
    op: RhsOperator,
    grid: Grid,
    full: np.ndarray,
    k0: int,
    u0_local: np.ndarray,
    cfg: SolverConfig,
    rng: np.random.Generator,
) -> tuple[int, float]:
    """Largest window (in nodes) on which the update map contracts."""
    remaining = grid.n - 1 - k0
    min_nodes = min(cfg.min_window_nodes(grid), remaining)
    nodes = remaining
    amp = _probe_amplitude(cfg, u0_local)
    while True:
        ws = _WindowWorkspace(op, grid, full, k0, k0 + nodes)
        measured = _measure_contraction(ws, u0_local, amp, cfg.probe_pairs, rng)
        if measured <= cfg.target_contraction * (1.0 + 1e-9):
            return nodes, measured
        if nodes <= min_nodes:
            raise WindowUnderflowError(
                f"no contraction at the minimum window ({nodes} cells, measured "
                f"{measured:.3g} > target {cfg.target_contraction}); the trust ball or "
                "the Lipschitz structure of the operator is violated"
            )
        nodes = max(min_nodes, int(math.floor(nodes * cfg.window_shrink)))


def select_window(
    op: RhsOperator,
    u0: np.ndarray,
    cfg: SolverConfig,
    grid: Grid,
) -> float:
    """Contraction window length t0 from the start of the horizon."""
    grid.require_dyadic()
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    full = np.tile(u0, (grid.n, 1))
    rng = np.random.default_rng([cfg.seed, 0])
    nodes, _ = _select_window_nodes(op, grid, full, 0, u0, cfg, rng)
    return nodes * grid.h


def _clip_to_ball(values: np.ndarray, center: np.ndarray, radius: float) -> tuple[np.ndarray, bool]:
    if not math.isfinite(radius):
        return values, False
    delta = values - center[None, :]
    mag = np.sqrt(np.sum(delta * delta, axis=1))
    over = mag > radius
    if not np.any(over):
        return values, False
    scale = np.ones_like(mag)
    scale[over] = radius / mag[over]
    return center[None, :] + delta * scale[:, None], True


def solve(
    op: RhsOperator,
    u0,
    cfg: SolverConfig,
    grid: Grid,
    initial_iterate: Signal | None = None,
) -> SolveReport:
    """March the fixed-point construction across [0, T].

    Each window starts from the endpoint value of the previous one as
    its initial datum; the first iterate per window is that constant
    (or the corresponding slice of ``initial_iterate`` when given).
    Iterates leaving the trust ball are clipped radially and a warning
    recorded.  Partial progress is reported on failure.
    """
    if not op.causal:
        raise DomainError("solve requires a causal operator")
    grid.require_dyadic()
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    full = np.tile(u0, (grid.n, 1))
    windows: list[WindowRecord] = []
    warnings: list[str] = []
    k0 = 0
    u0_local = u0.copy()
    status = "converged"
    detail = ""
    window_index = 0
    while k0 < grid.n - 1:
        rng = np.random.default_rng([cfg.seed, window_index])
        try:
            nodes, measured = _select_window_nodes(op, grid, full, k0, u0_local, cfg, rng)
        except WindowUnderflowError as err:
            status, detail = "window_underflow", str(err)
            break
        except (DomainError, FloatingPointError, ValueError) as err:
            status, detail = "operator_error", str(err)
            break
        k1 = k0 + nodes
        ws = _WindowWorkspace(op, grid, full, k0, k1)
        if initial_iterate is not None:
            window_values = initial_iterate.values[k0 : k1 + 1].copy()
            window_values[0] = u0_local
        else:
            window_values = np.tile(u0_local, (nodes + 1, 1))
        iterations = 0
        converged = False
        clipped_any = False
        try:
            while iterations < cfg.max_iter:
                updated = ws.map(window_values, u0_local)
                updated, clipped = _clip_to_ball(updated, u0_local, cfg.ball_radius)
                clipped_any = clipped_any or clipped
                step = float(np.max(np.abs(updated - window_values)))
                window_values = updated
                iterations += 1
                if step <= cfg.tol:
                    converged = True
                    break
        except (DomainError, FloatingPointError, ValueError) as err:
            status, detail = "operator_error", str(err)
            break
        if clipped_any:
            warnings.append(
                f"window [{grid.time_at(k0)}, {grid.time_at(k1)}]: iterates clipped to the trust ball"
            )
        final_residual = float(np.max(np.abs(ws.map(window_values, u0_local) - window_values)))
        windows.append(
            WindowRecord(
                t_start=grid.time_at(k0),
                t_end=grid.time_at(k1),
                iterations=iterations,
                contraction_estimate=measured,
                residual=final_residual,
            )
        )
        full[k0 : k1 + 1] = window_values
        if k1 < grid.n - 1:
            full[k1 + 1 :] = window_values[-1]
        if not converged:
            status, detail = "max_iter", (
                f"window [{grid.time_at(k0)}, {grid.time_at(k1)}] did not reach "
                f"tol={cfg.tol} in {cfg.max_iter} iterations"
            )
            break
        u0_local = window_values[-1].copy()
        k0 = k1
        window_index += 1
    reached = grid.time_at(k0) if status != "converged" else grid.T
    solution = Signal(grid, full)
    return SolveReport(
        solution=solution,
        windows=tuple(windows),
        status=status,
        reached_time=reached,
        warnings=tuple(warnings),
        detail=detail,
    )

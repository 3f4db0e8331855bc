"""Right-hand-side operators u' = H(u) and their contract.

Every shipped operator is causal: the output on [0, t) is an exact
(bit-for-bit) function of the input samples on [0, t).  Pointwise value
paths are used throughout — they coincide with the frequency-split
product wherever both are defined, and they preserve causality exactly.
Norm-level diagnostics (empirical Lipschitz constants) go through the
dyadic machinery instead.

Operator metadata carries the regularity bookkeeping: the Lipschitz
gap (alpha, eta), the integrability pair (p, q) the bookkeeping is done
in, a trust radius for locally Lipschitz maps, and a roughness flag
that tells the solver to integrate outputs with the pairing-form
cumulative rather than the trapezoid rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError, ShapeError
from .fractional_ops import FractionalOrder, caputo, riemann_liouville
from .grid_signal import Grid, Signal
from .littlewood_paley import BesovIndex, besov_norm_interval, validate_product_indices

__all__ = [
    "RhsOperator",
    "composition_operator",
    "fractional_product_operator",
    "VolterraKernel",
    "volterra_operator",
    "series_operator",
    "probe_lipschitz",
    "perturb_after",
]


@dataclass(frozen=True)
class RhsOperator:
    """Abstract right-hand side H with Lipschitz/causality metadata.

    ``gap`` = (alpha, eta) with 0 < alpha < eta < 1: the operator is
    Lipschitz from smoothness 1/p + alpha into -1/p' + eta, so it loses
    strictly less than one derivative and integration wins it back.
    """

    name: str
    apply_fn: Callable[[Signal], Signal]
    gap: tuple[float, float] = (0.25, 0.75)
    lipschitz_bound: float | None = None
    causal: bool = True
    base_point: np.ndarray | None = None
    trust_radius: float = math.inf
    p: float = 2.0
    q: float = 2.0
    rough_output: bool = False

    def __post_init__(self):
        alpha, eta = self.gap
        if not (0.0 < alpha < eta < 1.0):
            raise DomainError(f"gap must satisfy 0 < alpha < eta < 1, got {self.gap}")

    def apply(self, u: Signal) -> Signal:
        return self.apply_fn(u)


def _validated_map(f: Callable[[np.ndarray], np.ndarray], n: int, d: int):
    def apply_map(values: np.ndarray) -> np.ndarray:
        out = np.asarray(f(values), dtype=float)
        if out.shape == (n,) and d == 1:
            out = out[:, None]
        if out.shape != (n, d):
            raise ShapeError(f"map returned shape {out.shape}, expected ({n}, {d})")
        if not np.all(np.isfinite(out)):
            bad = int(np.argwhere(~np.isfinite(out))[0][0])
            raise DomainError(f"map produced a non-finite value at node {bad}")
        return out

    return apply_map


def composition_operator(
    f: Callable[[np.ndarray], np.ndarray],
    lip_f: float,
    gap: tuple[float, float] = (0.25, 0.75),
    p: float = 2.0,
    q: float = 2.0,
    trust_radius: float = math.inf,
    base_point: np.ndarray | None = None,
    name: str = "composition",
) -> RhsOperator:
    """Node-wise composition H(u) = f(u) for a Lipschitz map f.

    ``f`` receives the full (n, d) sample array and must return the same
    shape (for d = 1 a flat (n,) return is accepted).
    """

    def apply(u: Signal) -> Signal:
        return u.with_values(_validated_map(f, u.grid.n, u.d)(u.values))

    return RhsOperator(
        name=name,
        apply_fn=apply,
        gap=gap,
        lipschitz_bound=float(lip_f),
        base_point=base_point,
        trust_radius=trust_radius,
        p=p,
        q=q,
    )


def fractional_product_operator(
    A: Callable[[np.ndarray], np.ndarray],
    order: FractionalOrder,
    kind: str = "caputo",
    gap: tuple[float, float] = (0.25, 0.75),
    name: str | None = None,
) -> RhsOperator:
    """H(u) = A(u) * (fractional derivative of u), node-wise matrix product.

    ``kind`` selects the memory-type derivative ("caputo", admissible
    for every 0 < beta < 1) or the unreduced one ("riemann_liouville",
    which inside a solve requires every beta < 1/2).  ``A`` maps the
    (n, d) sample array to (n, d, d) matrices; for d = 1 a flat (n,)
    return is accepted.  The output lives in a negative smoothness
    class, so the solver integrates it with the pairing-form cumulative.
    """
    if kind not in ("caputo", "riemann_liouville"):
        raise DomainError(f"kind must be 'caputo' or 'riemann_liouville', got {kind!r}")
    if kind == "riemann_liouville":
        order.require_halved()
    derivative = caputo if kind == "caputo" else riemann_liouville

    def apply(u: Signal) -> Signal:
        du = derivative(u, order)
        mats = np.asarray(A(u.values), dtype=float)
        if mats.shape == (u.grid.n,) and u.d == 1:
            mats = mats[:, None, None]
        if mats.shape != (u.grid.n, u.d, u.d):
            raise ShapeError(
                f"A returned shape {mats.shape}, expected ({u.grid.n}, {u.d}, {u.d})"
            )
        return u.with_values(np.einsum("nij,nj->ni", mats, du.values))

    return RhsOperator(
        name=name or f"fractional_{kind}",
        apply_fn=apply,
        gap=gap,
        p=math.inf,
        q=math.inf,
        rough_output=True,
    )


class VolterraKernel:
    """Kernel kappa(s, t) on the triangle s <= t, in one of two forms.

    Smooth form: a callable (or tabulated) kernel sampled at the grid
    nodes and integrated with trapezoid weights in s.  Rough form: for
    each t-node a sampled representative of the kernel's action, paired
    against u with the pairing-form (left rectangle) weights.
    """

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray], rough: bool = False):
        self._fn = fn
        self.rough = rough
        self._cache: dict[tuple[float, int], np.ndarray] = {}

    @classmethod
    def from_function(cls, fn) -> "VolterraKernel":
        return cls(fn, rough=False)

    @classmethod
    def from_rough_family(cls, representative: Callable[[float], np.ndarray]) -> "VolterraKernel":
        """``representative(t)`` returns kernel samples over the s-grid."""

        def fn(s: np.ndarray, t: np.ndarray) -> np.ndarray:
            raise DomainError("rough kernels are sampled per t-node")

        kernel = cls(fn, rough=True)
        kernel._representative = representative
        return kernel

    @classmethod
    def from_table(cls, s: np.ndarray, t: np.ndarray, value: np.ndarray) -> "VolterraKernel":
        """Exact triangle table; every needed (s_j, t_k) pair must appear."""
        table = {}
        for si, ti, vi in zip(s, t, value):
            table[(float(si), float(ti))] = float(vi)

        def fn(ss: np.ndarray, tt: np.ndarray) -> np.ndarray:
            out = np.empty_like(ss)
            for idx in np.ndindex(ss.shape):
                key = (float(ss[idx]), float(tt[idx]))
                hit = table.get(key)
                if hit is None:
                    raise DomainError(
                        f"kernel table has no entry at (s, t) = {key}; "
                        "tables must cover every grid node pair"
                    )
                out[idx] = hit
            return out

        return cls(fn, rough=False)

    @classmethod
    def from_csv(cls, path: str | Path) -> "VolterraKernel":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 3:
            raise DomainError(f"{path}: expected three columns s, t, value")
        return cls.from_table(data[:, 0], data[:, 1], data[:, 2])

    def weight_matrix(self, grid: Grid) -> np.ndarray:
        """Lower-triangular quadrature matrix W with apply(u) = W u."""
        key = (grid.T, grid.n)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        n, h = grid.n, grid.h
        times = grid.times()
        if self.rough:
            w = np.zeros((n, n))
            for k in range(1, n):
                rep = np.asarray(self._representative(times[k]), dtype=float)
                if rep.shape != (n,):
                    raise ShapeError(f"representative must have shape ({n},), got {rep.shape}")
                w[k, :k] = h * rep[:k]  # pairing-form weights over [0, t_k)
        else:
            ss, tt = np.meshgrid(times, times, indexing="xy")
            values = np.asarray(self._fn(ss, tt), dtype=float)
            if values.shape != (n, n):
                raise ShapeError(f"kernel evaluation returned {values.shape}, expected ({n}, {n})")
            if not np.all(np.isfinite(np.tril(values.T))):
                rows, cols = np.where(~np.isfinite(values))
                raise DomainError(
                    f"kernel is non-finite at (s, t) = ({times[rows[0]]}, {times[cols[0]]})"
                )
            w = np.zeros((n, n))
            for k in range(1, n):
                w[k, : k + 1] = h * values[: k + 1, k]
                w[k, 0] *= 0.5
                w[k, k] *= 0.5
        w.flags.writeable = False
        self._cache[key] = w
        return w


def volterra_operator(
    kernel: VolterraKernel,
    gap: tuple[float, float] = (0.25, 0.75),
    p: float = 2.0,
    q: float = 2.0,
    name: str = "volterra",
) -> RhsOperator:
    """Memory operator H(u)(t) = int_0^t u(s) kappa(s, t) ds.

    Causal by kernel support; the triangular quadrature keeps each
    output node an exact function of the input samples before it.
    """

    def apply(u: Signal) -> Signal:
        w = kernel.weight_matrix(u.grid)
        return u.with_values(w @ u.values)

    return RhsOperator(
        name=name,
        apply_fn=apply,
        gap=gap,
        p=p,
        q=q,
        rough_output=kernel.rough,
    )


def series_operator(
    terms: list[tuple[Callable[[np.ndarray], np.ndarray], float, Signal]],
    psi_index: BesovIndex,
    input_index: BesovIndex,
    name: str = "series",
) -> RhsOperator:
    """Finite sum H(u) = sum_j f_j(u) * psi_j with rough coefficients psi_j.

    ``terms`` is a list of (f_j, lip_j, psi_j).  The index pair is
    validated against the rough-product admissibility once, at
    construction; the value path is the node-wise product (identical to
    the frequency-split product on sampled data).  The assembled
    Lipschitz bound is the finite sum of lip_j * ||psi_j|| in the
    coefficient norm.
    """
    validate_product_indices(psi_index, input_index)
    bound = 0.0
    for _, lip, psi in terms:
        bound += float(lip) * besov_norm_interval(psi, psi.grid.T, psi_index)

    def apply(u: Signal) -> Signal:
        out = np.zeros_like(u.values)
        for f, _, psi in terms:
            if psi.grid != u.grid:
                raise ShapeError("series coefficients must live on the input grid")
            fu = _validated_map(f, u.grid.n, u.d)(u.values)
            out = out + fu * (psi.values if psi.d > 1 else psi.values[:, :1])
        return u.with_values(out)

    return RhsOperator(
        name=name,
        apply_fn=apply,
        gap=(0.25, 0.75),
        lipschitz_bound=bound if terms else 0.0,
        p=psi_index.p,
        q=psi_index.q,
        rough_output=psi_index.s < 0,
    )


def perturb_after(u: Signal, t: float, delta: np.ndarray) -> Signal:
    """u with ``delta`` added on the nodes at and after the cut time."""
    k = u.grid.index_of(t)
    vals = u.values.copy()
    vals[k:] += delta
    return u.with_values(vals)


def _low_frequency_probe(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Smooth probe concentrated in the first dyadic octaves."""
    x = np.linspace(0.0, 1.0, n)
    out = np.zeros((n, d))
    for j in range(d):
        c = rng.standard_normal(4)
        out[:, j] = c[0] + c[1] * np.sin(np.pi * x) + c[2] * np.cos(np.pi * x) + c[3] * np.sin(
            2.0 * np.pi * x
        )
    sup = np.max(np.abs(out))
    return out / max(sup, 1e-30)


def probe_lipschitz(
    op: RhsOperator,
    grid: Grid,
    samples: int,
    radius: float,
    u0: np.ndarray | None = None,
    seed: int = 0,
) -> float:
    """Empirical Lipschitz ratio of H between its bookkeeping norms.

    Samples pairs in the ball of the given radius around the base point
    and maximizes ||H(u) - H(v)|| at smoothness -1/p' + eta over
    ||u - v|| at smoothness 1/p + alpha, both as interval norms on the
    full horizon.
    """
    if samples < 2:
        raise DomainError(f"need at least 2 samples, got {samples}")
    alpha, eta = op.gap
    p, q = op.p, op.q
    # output norm index: -1/p' + eta; input norm index: 1/p + alpha
    p_conj = BesovIndex(0.0, p, q).p_conjugate
    idx_out = BesovIndex(-(0.0 if math.isinf(p_conj) else 1.0 / p_conj) + eta, p, q)
    idx_in = BesovIndex((0.0 if math.isinf(p) else 1.0 / p) + alpha, p, q)
    if u0 is None:
        u0 = op.base_point if op.base_point is not None else np.zeros(1)
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    d = u0.shape[0]
    rng = np.random.default_rng(seed)
    amp = radius if math.isfinite(radius) else 1.0
    best = 0.0
    for _ in range(samples):
        du = amp * _low_frequency_probe(rng, grid.n, d)
        dv = amp * _low_frequency_probe(rng, grid.n, d)
        u = Signal(grid, u0[None, :] + du)
        v = Signal(grid, u0[None, :] + dv)
        diff_in = Signal(grid, u.values - v.values)
        denom = besov_norm_interval(diff_in, grid.T, idx_in)
        if denom < 1e-14:
            continue
        hu, hv = op.apply(u), op.apply(v)
        diff_out = Signal(grid, hu.values - hv.values)
        best = max(best, besov_norm_interval(diff_out, grid.T, idx_out) / denom)
    return best

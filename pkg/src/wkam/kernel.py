"""One-step action kernels and min-plus linear algebra on torus grids.

A kernel stores ``c(x, y)``, the cost of moving from node ``x`` to node ``y``
in one time step.  Banded kernels keep, for every source node, the costs to
the ``prod(2 b_i + 1)`` nodes within ``b_i`` nodes along each axis; dense
kernels keep the full ``N x N`` matrix with ``+inf`` for forbidden moves.

The discrete Lax-Oleinik operator of a negative kernel is
``(T u)(y) = min_x u(x) + c(x, y)``; for a positive kernel it is
``(T u)(x) = -min_y (-u(y) + c(y, x))``.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .model import TorusGrid
from .transform import LagrangianTable, reverse_lagrangian

__all__ = [
    "ActionKernel",
    "BandOverflowError",
    "build_kernel",
    "dense_kernel",
    "identity_kernel",
    "minplus_apply",
    "minplus_argmin",
    "lax_oleinik",
    "minplus_product",
    "minplus_power",
    "commutation_residual",
    "set_threads",
]

_THREADS = 1


def set_threads(n: int) -> int:
    """Worker threads used by the min-plus routines (0 picks ``os.cpu_count``).

    Min and + are exact in every evaluation order used here, so results do
    not depend on the thread count.
    """
    global _THREADS
    import os

    _THREADS = (os.cpu_count() or 1) if n == 0 else max(1, int(n))
    return _THREADS


class BandOverflowError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ActionKernel:
    """Min-plus matrix of one discrete time step (or a product of steps).

    Attributes
    ----------
    grid : TorusGrid
    tau : float or tuple
        Time step; products record the factors' steps as a tuple.
    costs : ndarray
        Banded: shape ``(N, m)`` indexed by source node and offset.
        Dense: shape ``(N, N)`` indexed by (source, target).
    band : tuple of int or None
        Per-axis band radius, ``None`` for dense kernels.
    direction : {"negative", "positive"}
    """

    grid: TorusGrid
    tau: object
    costs: np.ndarray
    band: tuple = None
    direction: str = "negative"
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in ("negative", "positive"):
            raise ValueError("direction must be 'negative' or 'positive'")
        if self.band is not None:
            b = tuple(int(v) for v in self.band)
            if any(2 * bi >= n for bi, n in zip(b, self.grid.shape)):
                raise BandOverflowError("band must stay below half the grid")
            object.__setattr__(self, "band", b)
        self.costs.setflags(write=False)

    @property
    def is_dense(self) -> bool:
        return self.band is None

    @property
    def step(self) -> float:
        """Total time represented by the kernel."""
        return float(np.sum(self.tau))

    @cached_property
    def offsets(self) -> np.ndarray:
        """Offset vectors of a banded kernel, shape ``(m, dim)``."""
        axes = [np.arange(-b, b + 1) for b in self.band]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, -1).reshape(-1, self.grid.dim)

    @cached_property
    def neighbours(self) -> np.ndarray:
        """``neighbours[x, j]`` = flat index of ``x + offsets[j]``."""
        return _shifted_index(self.grid, self.offsets)

    @cached_property
    def _gather(self):
        """Target-major view: sources and costs into each target node."""
        if self.is_dense:
            return None
        src = _shifted_index(self.grid, -self.offsets)  # y - o_j
        ct = self.costs[src, np.arange(self.offsets.shape[0])[None, :]]
        return src, ct

    def dense(self) -> np.ndarray:
        if self.is_dense:
            return np.asarray(self.costs)
        n = self.grid.size
        out = np.full((n, n), np.inf)
        rows = np.repeat(np.arange(n), self.offsets.shape[0])
        np.minimum.at(out, (rows, self.neighbours.ravel()), self.costs.ravel())
        return out

    def with_costs(self, costs, band="same", **changes) -> "ActionKernel":
        kw = dict(grid=self.grid, tau=self.tau, costs=costs,
                  band=self.band if band == "same" else band,
                  direction=self.direction, label=self.label, meta=dict(self.meta))
        kw.update(changes)
        return ActionKernel(**kw)


def _shifted_index(grid: TorusGrid, offsets: np.ndarray) -> np.ndarray:
    coords = np.indices(grid.shape).reshape(grid.dim, -1).T  # (N, d)
    shifted = (coords[:, None, :] + offsets[None, :, :]) % np.array(grid.shape)
    return np.ravel_multi_index(tuple(np.moveaxis(shifted, -1, 0)), grid.shape)


def dense_kernel(costs, tau: float = 1.0, direction: str = "negative",
                 grid: TorusGrid = None, label: str = "dense") -> ActionKernel:
    """Wrap an explicit ``(N, N)`` cost matrix (``+inf`` = no edge)."""
    costs = np.array(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise ValueError("dense costs must be square")
    grid = grid or TorusGrid((costs.shape[0],))
    if grid.size != costs.shape[0]:
        raise ValueError("grid size does not match the cost matrix")
    return ActionKernel(grid, tau, costs, None, direction, label)


def identity_kernel(grid: TorusGrid, tau: float = 1.0) -> ActionKernel:
    """Zero on the diagonal, ``+inf`` elsewhere (banded, radius 0)."""
    return ActionKernel(grid, tau, np.zeros((grid.size, 1)), (0,) * grid.dim,
                        label="identity")


def build_kernel(L: LagrangianTable, tau: float, direction: str = "negative",
                 band=None) -> ActionKernel:
    """One-step kernel ``c(x, y) = tau * L(mid(x, y), disp(x, y) / tau)``.

    ``disp`` is the minimal torus displacement, ``mid`` the torus midpoint
    (a node of the table's refined x-grid); ``L`` is interpolated
    multilinearly in v.  A positive kernel is built from ``L(x, -v)``.

    The band is ``floor(V_max tau / spacing)`` per axis, reduced (with a
    warning) to stay below half the grid.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    table = reverse_lagrangian(L) if direction == "positive" else L
    grid = L.grid
    if band is None:
        band = []
        for n in grid.shape:
            b = int(np.floor(L.v_window * tau * n * (1 + 1e-12)))
            cap = (n - 1) // 2
            if b > cap:
                warnings.warn(f"band {b} exceeds half the grid; reduced to {cap}",
                              stacklevel=2)
                b = cap
            band.append(b)
    band = tuple(int(b) for b in np.broadcast_to(band, (grid.dim,)))
    if L.x_refine % 2:
        raise ValueError("x_refine must be even so that midpoints are nodes")
    if min(band) == 0:
        raise ValueError("tau too small for grid")
    for b, n in zip(band, grid.shape):
        if b / n / tau > L.v_window * (1 + 1e-12):
            raise ValueError("band exceeds the velocity window")

    offs = np.stack(np.meshgrid(*[np.arange(-b, b + 1) for b in band], indexing="ij"),
                    -1).reshape(-1, grid.dim)
    r = L.x_refine
    fine_shape = np.array(grid.shape) * r
    src = np.indices(grid.shape).reshape(grid.dim, -1).T  # (N, d)
    vals = table.values.reshape(tuple(fine_shape) + (-1,))
    vflat_shape = table.values.shape[grid.dim:]
    costs = np.empty((grid.size, offs.shape[0]))
    for j, o in enumerate(offs):
        # midpoint x + o/2 on the refined grid is r*x + r*o/2
        mid = (r * src + (r * o) // 2) % fine_shape
        mid_flat = np.ravel_multi_index(tuple(mid.T), tuple(fine_shape))
        v = o / np.array(grid.shape) / tau
        acc = np.zeros(grid.size)
        for idx, w in table.velocity_stencil(v):
            vi = np.ravel_multi_index(idx, vflat_shape)
            acc = acc + w * vals.reshape(-1, int(np.prod(vflat_shape)))[mid_flat, vi]
        costs[:, j] = tau * acc
    return ActionKernel(grid, float(tau), costs, band, direction, L.label,
                        meta={"v_window": L.v_window})


# ---------------------------------------------------------------- operators


def _split(n: int, parts: int) -> list:
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _parallel(fn, n: int):
    chunks = _split(n, _THREADS)
    if len(chunks) == 1:
        return [fn(*chunks[0])]
    with ThreadPoolExecutor(len(chunks)) as ex:
        return list(ex.map(lambda ab: fn(*ab), chunks))


def minplus_apply(K: ActionKernel, u) -> np.ndarray:
    """``out(y) = min_x u(x) + c(x, y)`` over the kernel's support."""
    u = np.asarray(u, dtype=float)
    shape = u.shape
    uf = u.reshape(-1)
    if uf.size != K.grid.size:
        raise ValueError("function does not live on the kernel's grid")
    if K.is_dense:
        C = K.costs
        parts = _parallel(lambda a, b: (uf[:, None] + C[:, a:b]).min(axis=0), uf.size)
    else:
        src, ct = K._gather
        parts = _parallel(lambda a, b: (uf[src[a:b]] + ct[a:b]).min(axis=1), uf.size)
    return np.concatenate(parts).reshape(shape)


def minplus_argmin(K: ActionKernel, u) -> np.ndarray:
    """Source node attaining ``minplus_apply``; ties go to the smallest index."""
    uf = np.asarray(u, dtype=float).reshape(-1)
    if K.is_dense:
        vals = uf[:, None] + K.costs
        best = vals.min(axis=0)
        idx = np.broadcast_to(np.arange(uf.size)[:, None], vals.shape)
        return np.where(vals == best[None, :], idx, uf.size).min(axis=0)
    src, ct = K._gather
    vals = uf[src] + ct
    best = vals.min(axis=1)
    return np.where(vals == best[:, None], src, uf.size).min(axis=1)


def lax_oleinik(K: ActionKernel, u) -> np.ndarray:
    """One step of the semigroup driven by ``K`` (sign-aware)."""
    if K.direction == "positive":
        return -minplus_apply(K, -np.asarray(u, dtype=float))
    return minplus_apply(K, u)


def _combined_band(K1: ActionKernel, K2: ActionKernel):
    if K1.is_dense or K2.is_dense:
        return None
    b = tuple(a + c for a, c in zip(K1.band, K2.band))
    if any(2 * bi >= n for bi, n in zip(b, K1.grid.shape)):
        return None
    return b


def minplus_product(K1: ActionKernel, K2: ActionKernel, allow_dense: bool = False) -> ActionKernel:
    """``c(x, z) = min_y c1(x, y) + c2(y, z)``: first K1, then K2.

    Consequently ``minplus_apply(product(K1, K2), u)`` equals
    ``minplus_apply(K2, minplus_apply(K1, u))``.

    Raises
    ------
    BandOverflowError
        If the combined band reaches half the grid and ``allow_dense`` is
        false.
    """
    if K1.grid != K2.grid:
        raise ValueError("kernels live on different grids")
    taus = tuple(np.atleast_1d(K1.tau)) + tuple(np.atleast_1d(K2.tau))
    band = _combined_band(K1, K2)
    if band is None and not (K1.is_dense or K2.is_dense or allow_dense):
        raise BandOverflowError("refine grid or shorten horizon")
    label = f"({K1.label})*({K2.label})"
    if band is not None:
        costs = _banded_product(K1, K2, band)
    else:
        costs = _dense_product(K1, K2)
    return ActionKernel(K1.grid, taus, costs, band, K1.direction, label, dict(K1.meta))


def _banded_product(K1: ActionKernel, K2: ActionKernel, band: tuple) -> np.ndarray:
    shape = tuple(2 * b + 1 for b in band)
    n = K1.grid.size
    o2 = K2.offsets
    base = np.array(band)
    out = np.full((n, int(np.prod(shape))), np.inf)
    nb1 = K1.neighbours
    c2 = K2.costs
    for j1, o1 in enumerate(K1.offsets):
        idx = np.ravel_multi_index(tuple((o1 + o2 + base).T), shape)
        cand = K1.costs[:, j1, None] + c2[nb1[:, j1]]
        out[:, idx] = np.minimum(out[:, idx], cand)
    return out


def _dense_product(K1: ActionKernel, K2: ActionKernel) -> np.ndarray:
    n = K1.grid.size
    if not K2.is_dense:
        A = K1.dense()
        src, ct = K2._gather

        def block(a, b):
            res = np.full((n, b - a), np.inf)
            for j in range(src.shape[1]):
                np.minimum(res, A[:, src[a:b, j]] + ct[None, a:b, j], out=res)
            return res

        return np.concatenate(_parallel(block, n), axis=1)
    B = K2.costs
    if not K1.is_dense:
        nb, c1 = K1.neighbours, K1.costs

        def block(a, b):
            res = np.full((b - a, n), np.inf)
            for j in range(nb.shape[1]):
                np.minimum(res, c1[a:b, j, None] + B[nb[a:b, j]], out=res)
            return res

        return np.concatenate(_parallel(block, n), axis=0)
    A = K1.costs
    rows = max(1, (1 << 22) // (n * n))

    def block(a, b):
        res = np.empty((b - a, n))
        for s in range(a, b, rows):
            e = min(b, s + rows)
            res[s - a:e - a] = (A[s:e, :, None] + B[None, :, :]).min(axis=1)
        return res

    return np.concatenate(_parallel(block, n), axis=0)


def minplus_power(K: ActionKernel, k: int) -> ActionKernel:
    """k-fold product ``K * K * ... * K``, switching to dense storage once
    the band would reach half the grid."""
    if k < 1:
        raise ValueError("k must be at least 1")
    out = K
    for _ in range(k - 1):
        out = minplus_product(out, K, allow_dense=True)
    return out


def commutation_residual(KG: ActionKernel, KH: ActionKernel) -> float:
    """Entrywise sup of ``|KG*KH - KH*KG|`` over commonly finite entries.

    Returns ``inf`` when the two products have different support.
    """
    a = minplus_product(KG, KH, allow_dense=True)
    b = minplus_product(KH, KG, allow_dense=True)
    if a.is_dense != b.is_dense:
        A, B = a.dense(), b.dense()
    else:
        A, B = a.costs, b.costs
    fa, fb = np.isfinite(A), np.isfinite(B)
    if not np.array_equal(fa, fb):
        return float("inf")
    if not fa.any():
        return 0.0
    return float(np.abs(A[fa] - B[fa]).max())

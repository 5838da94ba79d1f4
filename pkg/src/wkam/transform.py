"""Discrete Legendre-Fenchel transforms between Hamiltonians and Lagrangians."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .model import HamiltonianModel, TorusGrid, symmetric_nodes

__all__ = [
    "LagrangianTable",
    "MomentumWindowError",
    "legendre",
    "reverse_lagrangian",
    "biconjugate_check",
]

# elements per chunk of the (x, v, p) maximisation
_CHUNK = 1 << 22


class MomentumWindowError(ValueError):
    """A Legendre maximiser landed on the boundary of the momentum box."""

    def __init__(self, x, v, label=""):
        self.x = np.asarray(x)
        self.v = np.asarray(v)
        super().__init__(
            f"momentum window too small for {label or 'model'}: "
            f"boundary maximiser at x={np.round(self.x, 6).tolist()}, "
            f"v={np.round(self.v, 6).tolist()}")


@dataclass(frozen=True, eq=False)
class LagrangianTable:
    """Tabulated Lagrangian ``L(x, v)``.

    The x-nodes are those of ``grid`` refined ``x_refine`` times, so that the
    torus midpoint of any two nodes of ``grid`` is itself a table node.

    Attributes
    ----------
    grid : TorusGrid
        The base grid that action kernels are built on.
    v_nodes : list of ndarray
        Mirror-symmetric velocity nodes per axis.
    values : ndarray
        Shape ``fine_shape + (n_v,) * dim``.
    argmax_p : ndarray
        Maximising momentum per entry, shape ``values.shape + (dim,)``.
    """

    grid: TorusGrid
    v_nodes: list
    values: np.ndarray
    argmax_p: np.ndarray
    label: str = ""
    x_refine: int = 2

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def fine_grid(self) -> TorusGrid:
        return self.grid.refine(self.x_refine)

    @property
    def v_window(self) -> float:
        return float(self.v_nodes[0][-1])

    def velocity_stencil(self, v) -> list:
        """Multilinear interpolation stencil for one velocity vector.

        Returns a list of ``(index_tuple, weight)`` pairs over the v-axes.
        Exact node hits produce a single entry with weight 1.
        """
        per_axis = []
        for nodes, vi in zip(self.v_nodes, np.atleast_1d(v)):
            n = len(nodes)
            w = nodes[-1]
            if abs(vi) > w * (1 + 1e-12):
                raise ValueError(f"velocity {vi} outside the table window {w}")
            # work with |v| and mirror, so v and -v get identical weights
            a = abs(float(vi))
            pos = (a + w) * (n - 1) / (2 * w)
            i = int(np.clip(np.floor(pos), 0, n - 2))
            frac = pos - i
            if nodes[i] == a or frac == 0.0:
                st = [(i, 1.0)]
            elif nodes[i + 1] == a or frac == 1.0:
                st = [(i + 1, 1.0)]
            else:
                st = [(i, 1.0 - frac), (i + 1, frac)]
            if vi < 0:
                st = [(n - 1 - j, wt) for j, wt in st]
            per_axis.append(st)
        out = []
        for combo in product(*per_axis):
            idx = tuple(c[0] for c in combo)
            wt = float(np.prod([c[1] for c in combo]))
            out.append((idx, wt))
        return out


def _product_points(axes: list) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, len(axes))


def legendre(H: HamiltonianModel, grid: TorusGrid, n_p: int = 513, n_v: int = 513,
             force: bool = False, x_refine: int = 2) -> LagrangianTable:
    """Lagrangian ``L(x, v) = max_p p.v - H(x, p)`` by exhaustive search.

    The maximum runs over the ``n_p`` momentum nodes per axis of the model's
    momentum box, for ``n_v`` velocity nodes per axis on ``[-V_max, V_max]``.
    A maximiser on the face of the momentum box is an error, never clamped.

    Raises
    ------
    MomentumWindowError
        If any maximiser lies on the boundary of the momentum box.
    NonTonelliError
        If the model failed validation and ``force`` is false.
    """
    H.require_tonelli(force)
    if n_p < 16 or n_v < 16:
        raise ValueError("n_p and n_v must be at least 16 per axis")
    d = H.dim
    if grid.dim != d:
        raise ValueError("grid and model dimension differ")
    fine = grid.refine(x_refine)
    xs = fine.coords().reshape(-1, d)

    p_axes = H.momentum_nodes(n_p)
    v_axes = [symmetric_nodes(H.v_window, n_v) for _ in range(d)]
    P = _product_points(p_axes)
    Vv = _product_points(v_axes)
    pv = Vv @ P.T  # (NV, NP)
    n_vel, n_mom = pv.shape

    values = np.empty((xs.shape[0], n_vel))
    arg = np.empty((xs.shape[0], n_vel), dtype=np.int64)
    step = max(1, _CHUNK // (n_vel * n_mom))
    for start in range(0, xs.shape[0], step):
        xc = xs[start:start + step]
        hx = H(xc[:, None, :], P[None, :, :])  # (cx, NP)
        obj = pv[None, :, :] - hx[:, None, :]
        k = np.argmax(obj, axis=2)
        arg[start:start + step] = k
        values[start:start + step] = np.take_along_axis(obj, k[..., None], axis=2)[..., 0]
    if not np.all(np.isfinite(values)):
        raise ValueError(f"non-finite Lagrangian values for {H.label}")

    sub = np.stack(np.unravel_index(arg, (n_p,) * d), axis=-1)
    edge = np.any((sub == 0) | (sub == n_p - 1), axis=-1)
    if edge.any():
        i, j = np.argwhere(edge)[0]
        raise MomentumWindowError(xs[i], Vv[j], H.label)

    vshape = (n_v,) * d
    return LagrangianTable(
        grid=grid,
        v_nodes=v_axes,
        values=values.reshape(fine.shape + vshape),
        argmax_p=P[arg].reshape(fine.shape + vshape + (d,)),
        label=H.label,
        x_refine=x_refine,
    )


def reverse_lagrangian(L: LagrangianTable) -> LagrangianTable:
    """``L_hat(x, v) = L(x, -v)``, an exact permutation of the table."""
    for nodes in L.v_nodes:
        if not np.array_equal(nodes, -nodes[::-1]):
            raise ValueError("velocity nodes are not symmetric about 0")
    d = L.dim
    v_axes = tuple(range(L.values.ndim - d, L.values.ndim))
    vals = np.flip(L.values, axis=v_axes)
    arg = -np.flip(L.argmax_p, axis=v_axes)
    return LagrangianTable(L.grid, L.v_nodes, vals, arg, f"reversed({L.label})", L.x_refine)


def biconjugate_check(H: HamiltonianModel, L: LagrangianTable, n_samples: int = 33) -> float:
    """``sup |H(x,p) - max_v (p.v - L(x,v))|`` over the table's x-nodes and
    momenta in the inner half of the momentum box."""
    d = L.dim
    xs = L.fine_grid.coords().reshape(-1, d)
    p_axes = [c + symmetric_nodes(H.p_window / 2, n_samples) for c in H.p_center]
    P = _product_points(p_axes)
    Vv = _product_points(L.v_nodes)
    pv = P @ Vv.T  # (NP, NV)
    lv = L.values.reshape(xs.shape[0], -1)
    worst = 0.0
    step = max(1, _CHUNK // pv.size)
    for start in range(0, xs.shape[0], step):
        lc = lv[start:start + step]
        hstar = (pv[None, :, :] - lc[:, None, :]).max(axis=2)
        h = H(xs[start:start + step, None, :], P[None, :, :])
        worst = max(worst, float(np.abs(h - hstar).max()))
    return worst

"""Peierls barriers, Aubry sets and the alpha function over cohomology.

Barriers are limits of ``K^k + k tau alpha`` for the min-plus kernel ``K``.
Projected Aubry sets are thresholded zero sets (of the barrier diagonal or of
``u_minus - u_plus`` for computed pairs).  Alpha tables carry the critical
value of ``H(x, p + c)`` along a line of cohomology classes together with the
flats detected on it.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernel as _kernel
from .kernel import ActionKernel, build_kernel, dense_kernel, minplus_product
from .model import HamiltonianModel, TorusGrid, shift_cohomology
from .transform import legendre
from .weakkam import KARP_MAX_NODES, critical_value_karp, solve_weak_kam

__all__ = [
    "BarrierMatrix",
    "AubrySetApprox",
    "AlphaTable",
    "FlatComparison",
    "peierls_barrier",
    "pairs_lower_bound",
    "aubry_from_peierls",
    "aubry_from_pairs",
    "mather_alpha",
    "detect_flats",
    "flat_tolerance",
    "compare_flats",
    "hausdorff_nodes",
]

DENSE_MAX_NODES = 4096


@dataclass(frozen=True, eq=False)
class BarrierMatrix:
    """Discrete Peierls barrier ``h[x, y]`` on all node pairs.

    ``horizon`` is the number of steps ``k`` at which ``K^k + k tau alpha``
    was declared converged; ``converged`` is false when ``k_max`` ran out.
    """

    grid: TorusGrid
    h: np.ndarray
    alpha_used: float
    horizon: int
    converged: bool = True
    tol: float = 1e-9
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.h).reshape(self.grid.shape)


@dataclass(frozen=True, eq=False)
class AubrySetApprox:
    """Projected Aubry set as a node mask.

    ``approximation`` states which way a finite computation errs: the
    intersection over finitely many pairs contains the true set ("outer"),
    a barrier threshold is a neighbourhood of it ("threshold").
    ``union`` (pairs only) is the matching approximation of the projected
    Mañé set.
    """

    mask: np.ndarray
    epsilon: float
    source: str
    approximation: str = "threshold"
    per_pair: list = field(default_factory=list, repr=False)
    union: np.ndarray = None
    flagged: bool = False

    @property
    def nodes(self) -> np.ndarray:
        return np.flatnonzero(self.mask.reshape(-1))


@dataclass(frozen=True, eq=False)
class AlphaTable:
    """Critical values ``alpha(c)`` on a line of cohomology classes.

    ``alpha`` is ``nan`` where the per-class solve failed; ``errors`` maps
    those indices to the failure message.  ``flats`` lists index arrays of
    maximal runs where alpha varies by at most ``tol_flat``.
    """

    c_nodes: np.ndarray
    alpha: np.ndarray
    flats: list
    tol_flat: float
    errors: dict = field(default_factory=dict)
    label: str = ""

    @property
    def positions(self) -> np.ndarray:
        """Signed arclength parameter of ``c_nodes`` along their line."""
        c = self.c_nodes
        if c.shape[0] < 2:
            return np.zeros(c.shape[0])
        d = c[-1] - c[0]
        d = d / np.linalg.norm(d)
        return c @ d

    def flat_extent(self, flat) -> tuple:
        """``(lo, hi)`` of a flat, each end placed halfway between the last
        node inside and the first node outside (or at the node itself on the
        border of the table)."""
        t = self.positions
        i, j = int(flat[0]), int(flat[-1])
        lo = t[i] if i == 0 else 0.5 * (t[i] + t[i - 1])
        hi = t[j] if j == len(t) - 1 else 0.5 * (t[j] + t[j + 1])
        return float(lo), float(hi)

    def flat_containing(self, c: float = 0.0):
        for f in self.flats:
            lo, hi = self.flat_extent(f)
            if lo <= c <= hi:
                return f
        return None

    def half_width(self, flat) -> float:
        lo, hi = self.flat_extent(flat)
        return 0.5 * (hi - lo)


@dataclass(frozen=True)
class FlatComparison:
    """Per-flat outcome of checking A's flats on B."""

    flats: list
    defects: list
    passed_each: list
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.flats) and all(self.passed_each)


# ------------------------------------------------------------------ barrier


def _as_dense(K: ActionKernel, shift: float) -> ActionKernel:
    return dense_kernel(K.dense() + shift, tau=K.step, direction=K.direction,
                        grid=K.grid, label=K.label)


def _sup_diff(A: np.ndarray, B: np.ndarray) -> float:
    fa, fb = np.isfinite(A), np.isfinite(B)
    if not np.array_equal(fa, fb):
        return float("inf")
    if not fa.any():
        return 0.0
    return float(np.abs(A[fa] - B[fa]).max())


def peierls_barrier(K: ActionKernel, alpha: float, tol: float = 1e-9, k_max: int = 1 << 16,
                    window: int = 10) -> BarrierMatrix:
    """Limit of ``B_k = K^k + k tau alpha``.

    Horizons are doubled by min-plus squaring until two consecutive squares
    agree within ``tol``; the candidate ``B_k`` is then confirmed against
    ``B_{k+m}``, ``m = 1..window``, built by single-step products.

    Raises
    ------
    ValueError
        If the grid is too large for dense storage.
    """
    n = K.grid.size
    if n > DENSE_MAX_NODES:
        raise ValueError(f"{n} nodes exceeds the dense barrier limit {DENSE_MAX_NODES}")
    one = _as_dense(K, K.step * alpha)
    B, k = one, 1
    converged = False
    deltas = []
    while 2 * k <= k_max:
        B2 = minplus_product(B, B)
        d = _sup_diff(B2.costs, B.costs)
        deltas.append((2 * k, d))
        B, k = B2, 2 * k
        if d < tol:
            # confirm on the full window of single steps
            cur = B
            ok = True
            for _ in range(window):
                cur = minplus_product(cur, one)
                if _sup_diff(cur.costs, B.costs) >= tol:
                    ok = False
                    break
            if ok:
                converged = True
                break
    diag = {"square_deltas": deltas}
    if not converged:
        diag["hint"] = "no convergence by k_max; re-run with the Karp critical value"
        warnings.warn(f"Peierls iteration not converged by k_max={k_max}", stacklevel=2)
    return BarrierMatrix(K.grid, np.array(B.costs), float(alpha), k, converged, tol, diag)


def pairs_lower_bound(pairs) -> np.ndarray:
    """``max`` over computed pairs of ``u_minus(y) - u_plus(x)``, as an
    ``(N, N)`` array indexed ``[x, y]``; bounded above by the barrier."""
    out = None
    for p in pairs:
        um = p.u_minus.limit.reshape(-1)
        up = p.u_plus.limit.reshape(-1)
        cur = um[None, :] - up[:, None]
        out = cur if out is None else np.maximum(out, cur)
    return out


def _default_eps(grid: TorusGrid, tol: float) -> float:
    return 5.0 * max(tol, max(grid.spacing) ** 2)


def aubry_from_peierls(B: BarrierMatrix, eps: float = None) -> AubrySetApprox:
    """Nodes with ``h(x, x) <= eps``; default ``eps = 5 max(tol, spacing^2)``.

    Raises
    ------
    ValueError
        If no node passes the threshold.
    """
    if eps is None:
        eps = _default_eps(B.grid, B.tol)
    mask = B.diagonal <= eps
    if not mask.any():
        raise ValueError("threshold too small or alpha wrong")
    return AubrySetApprox(mask, float(eps), "peierls", "threshold")


def aubry_from_pairs(pairs, eps: float = None) -> AubrySetApprox:
    """Intersection over pairs of ``{u_minus - u_plus <= eps}``.

    Each gap is re-anchored so its minimum is 0.  An empty intersection is
    returned flagged, with the per-pair masks kept for diagnosis.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no pairs given")
    if len(pairs) < 3:
        warnings.warn("fewer than 3 pairs: the intersection is a coarse outer bound",
                      stacklevel=2)
    grid_shape = pairs[0].u_minus.u.shape
    if eps is None:
        eps = 5.0 * max(1e-9, (1.0 / max(grid_shape)) ** 2)
    masks = []
    for p in pairs:
        gap = p.gap
        masks.append((gap - gap.min()) <= eps)
    inter = np.logical_and.reduce(masks)
    union = np.logical_or.reduce(masks)
    return AubrySetApprox(inter, float(eps), "pairs", "outer", masks, union,
                          flagged=not inter.any())


def hausdorff_nodes(a, b) -> float:
    """Hausdorff distance between two node masks, in node units, measured
    with the torus (wrap-around) Euclidean metric on node indices."""
    a = np.asarray(a, bool)
    b = np.asarray(b, bool)
    if a.shape != b.shape:
        raise ValueError("masks live on different grids")
    if not a.any() and not b.any():
        return 0.0
    if not a.any() or not b.any():
        return float("inf")
    shape = np.array(a.shape)
    pa = np.argwhere(a)
    pb = np.argwhere(b)
    d = np.abs(pa[:, None, :] - pb[None, :, :])
    d = np.minimum(d, shape - d)
    dist = np.sqrt((d.astype(float) ** 2).sum(-1))
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


# -------------------------------------------------------------- alpha table


def _alpha_one(H, c, grid, tau, n_p, n_v, method):
    Hc = shift_cohomology(H, c)
    K = build_kernel(legendre(Hc, grid, n_p, n_v), tau)
    if method == "karp" or (method == "auto" and grid.size <= KARP_MAX_NODES):
        return critical_value_karp(K)
    res = solve_weak_kam(K, np.zeros(grid.shape), tol=1e-11)
    if not res.converged:
        raise RuntimeError(f"power iteration not converged at c={c}")
    return res.alpha


def mather_alpha(H: HamiltonianModel, c_nodes, grid: TorusGrid, tau: float,
                 n_p: int = 513, n_v: int = 513, method: str = "auto",
                 tol_flat: float = None, workers: int = 1) -> AlphaTable:
    """Critical value of ``H(x, p + c)`` for each class in ``c_nodes``.

    ``c_nodes`` is an ordered sequence of classes on a line of ``R^d``
    (scalars in 1D).  Failures are recorded and leave ``nan`` in the table.
    ``workers`` solves classes concurrently; the result does not depend on it.
    """
    c = np.asarray(c_nodes, dtype=float)
    c = c.reshape(-1, H.dim)
    alpha = np.full(c.shape[0], np.nan)
    errors = {}
    saved = _kernel._THREADS

    def job(i):
        try:
            return i, _alpha_one(H, c[i], grid, tau, n_p, n_v, method), None
        except Exception as exc:  # recorded per class, not raised
            return i, np.nan, f"{type(exc).__name__}: {exc}"

    try:
        if workers > 1:
            _kernel.set_threads(1)
            with ThreadPoolExecutor(workers) as ex:
                results = list(ex.map(job, range(c.shape[0])))
        else:
            results = [job(i) for i in range(c.shape[0])]
    finally:
        _kernel._THREADS = saved
    for i, a, err in results:
        alpha[i] = a
        if err is not None:
            errors[i] = err
    if tol_flat is None:
        tol_flat = flat_tolerance(alpha)
    flats = detect_flats(alpha, tol_flat)
    return AlphaTable(c, alpha, flats, float(tol_flat), errors, H.label)


def _maximal_runs(alpha: np.ndarray, tol: float, min_nodes: int) -> list:
    """Maximal index windows of finite entries with ``max - min <= tol``."""
    n = len(alpha)
    runs = []
    i = 0
    while i < n:
        if not np.isfinite(alpha[i]):
            i += 1
            continue
        j = i
        while j + 1 < n and np.isfinite(alpha[j + 1]):
            seg = alpha[i:j + 2]
            if seg.max() - seg.min() > tol:
                break
            j += 1
        if not runs or j > runs[-1][1]:
            runs.append((i, j))
        i += 1
    return [np.arange(a, b + 1) for a, b in runs if b - a + 1 >= min_nodes]


def flat_tolerance(alpha) -> float:
    """``max(1e-3 osc(alpha), 5 * noise)``.

    ``noise`` is the median of ``|diff alpha|`` inside the runs found at the
    floor tolerance, i.e. the jitter of plateaus rather than their slopes.
    """
    a = np.asarray(alpha, dtype=float)
    fin = a[np.isfinite(a)]
    if fin.size < 2:
        return 0.0
    floor = 1e-3 * float(fin.max() - fin.min())
    steps = []
    for run in _maximal_runs(a, floor, 3):
        steps.extend(np.abs(np.diff(a[run])).tolist())
    noise = float(np.median(steps)) if steps else 0.0
    return max(floor, 5.0 * noise)


def detect_flats(alpha, tol_flat: float, min_nodes: int = 3) -> list:
    """Maximal runs of at least ``min_nodes`` classes on which alpha is
    constant within ``tol_flat``; missing entries break runs."""
    return _maximal_runs(np.asarray(alpha, dtype=float), tol_flat, min_nodes)


def compare_flats(A: AlphaTable, B: AlphaTable, tol: float = None) -> FlatComparison:
    """Check that every flat of ``A`` is a flat of ``B``.

    The defect of a flat is ``max - min`` of B's alpha over the same nodes;
    it passes when the defect is at most ``tol`` (default: B's flat
    tolerance).
    """
    if A.c_nodes.shape != B.c_nodes.shape or not np.allclose(A.c_nodes, B.c_nodes):
        raise ValueError("alpha tables use different cohomology nodes")
    tol = B.tol_flat if tol is None else tol
    defects, ok = [], []
    for f in A.flats:
        vals = B.alpha[f]
        if not np.all(np.isfinite(vals)):
            defects.append(float("inf"))
            ok.append(False)
            continue
        d = float(vals.max() - vals.min())
        defects.append(d)
        ok.append(d <= tol)
    return FlatComparison([np.asarray(f) for f in A.flats], defects, ok, float(tol))

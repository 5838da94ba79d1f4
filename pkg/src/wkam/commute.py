"""Verification suite for a pair of Hamiltonians ``(G, H)``.

Every quantity below vanishes in the continuum when ``{G, H} = 0``.  Each is
measured along a refinement ladder and turned into a verdict by its
empirical decay order, because a single discretization cannot separate
discretization error from genuine non-commutation.

Kernel-level comparisons use a fixed physical horizon ``s`` (``s / tau``
steps per level).  At one step the commutator of any two kernels shrinks
with ``tau``, so only a fixed horizon tells the two cases apart.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kernel import ActionKernel, build_kernel, commutation_residual, lax_oleinik, minplus_power
from .model import HamiltonianModel, TorusGrid, poisson_bracket
from .structures import (aubry_from_peierls, compare_flats, hausdorff_nodes, mather_alpha,
                         peierls_barrier)
from .transform import legendre
from .weakkam import _iterate_to_limit, solve_weak_kam

__all__ = [
    "PairTolerances",
    "LevelResult",
    "PairReport",
    "run_pair_suite",
    "semigroup_commutation_on_function",
    "empirical_order",
    "verdict",
    "bracket_sup",
    "DEFAULT_LADDER",
]

DEFAULT_LADDER = ((64, 0.1), (128, 0.05), (256, 0.025))
ORDER_MIN = 0.8
THEOREMS = ("commutation", "solutions", "pairing", "barrier", "aubry", "flats")


@dataclass(frozen=True)
class PairTolerances:
    """Absolute tolerances for the final-level residuals.

    ``solver`` is the fixed-point tolerance of every weak KAM solve; a
    residual that stays below ``solver_floor`` at every level counts as
    exactly zero.
    """

    kernel: float = 1e-2
    cross: float = 1e-2
    repair: float = 1e-2
    peierls: float = 1e-2
    aubry_nodes: float = 2.0
    tol_flat: float = None
    solver: float = 1e-10
    solver_floor: float = 1e-9
    max_iter: int = 200000


@dataclass(frozen=True)
class LevelResult:
    n: int
    tau: float
    steps: int
    alpha_G: float
    alpha_H: float
    kernel_residual: float
    cross_GH: float
    cross_HG: float
    repair_gap: float
    peierls_gap: float
    aubry_hausdorff: float
    converged: bool


@dataclass(frozen=True, eq=False)
class PairReport:
    """Recorded numbers and the verdicts derived from them.

    ``verdicts`` maps each theorem name to ``pass``, ``fail`` or
    ``inconclusive``; :meth:`recompute_verdicts` rebuilds them from the
    stored numbers alone.
    """

    label_G: str
    label_H: str
    horizon: float
    bracket_sup: float
    levels: list
    flats_report: object
    tolerances: PairTolerances
    verdicts: dict
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def kernel_residuals(self) -> list:
        return [(lv.n, lv.tau, lv.kernel_residual) for lv in self.levels]

    @property
    def wkam_cross_residuals(self) -> dict:
        return {"G->H": [lv.cross_GH for lv in self.levels],
                "H->G": [lv.cross_HG for lv in self.levels]}

    @property
    def aubry_hausdorff(self) -> float:
        return self.levels[-1].aubry_hausdorff

    @property
    def peierls_gap(self) -> float:
        return self.levels[-1].peierls_gap

    def series(self, name: str) -> list:
        if name == "cross":
            return [max(lv.cross_GH, lv.cross_HG) for lv in self.levels]
        return [getattr(lv, name) for lv in self.levels]

    def recompute_verdicts(self) -> dict:
        return _verdicts(self.levels, self.flats_report, self.tolerances,
                         self.diagnostics.get("nonconverged", False))

    def summary_lines(self) -> list:
        """Machine-readable ``key=value`` lines."""
        out = [f"G={self.label_G}", f"H={self.label_H}", f"horizon={self.horizon:.10g}",
               f"bracket_sup={self.bracket_sup:.10g}",
               f"order_min={ORDER_MIN}"]
        for i, lv in enumerate(self.levels):
            for k, v in lv.__dict__.items():
                out.append(f"level{i}.{k}={v:.10g}" if isinstance(v, float) else f"level{i}.{k}={v}")
        for key in ("kernel_residual", "cross", "repair_gap", "peierls_gap"):
            out.append(f"order.{key}={empirical_order(self._ns(), self.series(key)):.6g}")
        if self.flats_report is not None:
            out.append(f"flats.count={len(self.flats_report.flats)}")
            out.append("flats.defects=" + ",".join(f"{d:.6g}" for d in self.flats_report.defects))
        for k, v in self.verdicts.items():
            out.append(f"verdict.{k}={v}")
        return out

    def _ns(self):
        return [lv.n for lv in self.levels]

    def text(self) -> str:
        rows = [f"pair {self.label_G} / {self.label_H}",
                f"  sup |{{G,H}}| = {self.bracket_sup:.4g}; horizon s = {self.horizon:g}",
                "  n      tau      kernel     cross      repair     peierls    aubry(nodes)"]
        for lv in self.levels:
            rows.append(f"  {lv.n:<6d} {lv.tau:<8g} {lv.kernel_residual:<10.3e} "
                        f"{max(lv.cross_GH, lv.cross_HG):<10.3e} {lv.repair_gap:<10.3e} "
                        f"{lv.peierls_gap:<10.3e} {lv.aubry_hausdorff:g}")
        rows.append(f"  pass rule: order >= {ORDER_MIN} and final < tol "
                    "(artifact convention); fail: no decay and final > 10 tol")
        for k, v in self.verdicts.items():
            rows.append(f"  {k:<12s} {v}")
        return "\n".join(rows)


def empirical_order(ns, values) -> float:
    """Least-squares slope of ``-log(value)`` against ``log(n)``.

    Returns ``inf`` when every value is zero and ``nan`` when zeros and
    non-zeros are mixed.
    """
    v = np.asarray(values, dtype=float)
    n = np.asarray(ns, dtype=float)
    if np.all(v == 0):
        return float("inf")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        return float("nan")
    slope = np.polyfit(np.log(n), np.log(v), 1)[0]
    return float(-slope)


def verdict(ns, values, tol: float, floor: float = 0.0) -> str:
    """pass / fail / inconclusive for one residual series.

    pass: every value is within ``floor`` (identically zero up to solver
    accuracy), or the order is at least ``ORDER_MIN`` with the final value
    below ``tol``.  fail: order below ``ORDER_MIN`` with the final value above
    ``10 tol``.
    """
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return "inconclusive"
    if np.all(v <= floor):
        return "pass"
    order = empirical_order(ns, np.maximum(v, floor) if floor > 0 else v)
    if np.isfinite(order) and order >= ORDER_MIN and v[-1] < tol:
        return "pass"
    if (not np.isfinite(order) or order < ORDER_MIN) and v[-1] > 10 * tol:
        return "fail"
    return "inconclusive"


def _verdicts(levels, flats_report, tol: PairTolerances, nonconverged: bool) -> dict:
    ns = [lv.n for lv in levels]
    out = {
        "commutation": verdict(ns, [lv.kernel_residual for lv in levels], tol.kernel,
                               tol.solver_floor),
        "solutions": verdict(ns, [max(lv.cross_GH, lv.cross_HG) for lv in levels], tol.cross,
                             tol.solver_floor),
        "pairing": verdict(ns, [lv.repair_gap for lv in levels], tol.repair,
                           2 * tol.solver_floor),
        "barrier": verdict(ns, [lv.peierls_gap for lv in levels], tol.peierls,
                           tol.solver_floor),
    }
    h = levels[-1].aubry_hausdorff
    out["aubry"] = "pass" if h <= tol.aubry_nodes else "fail"
    if flats_report is None:
        out["flats"] = "inconclusive"
    elif not flats_report.flats:
        out["flats"] = "inconclusive"
    else:
        out["flats"] = "pass" if flats_report.passed else "fail"
    if nonconverged:
        for k in ("solutions", "pairing", "barrier", "aubry"):
            out[k] = "inconclusive"
    return out


def bracket_sup(G: HamiltonianModel, H: HamiltonianModel, samples: int = 16) -> float:
    """``sup |{G, H}|`` over a product grid of base points and momenta in
    the inner half of the momentum box."""
    d = G.dim
    xs = TorusGrid.regular(samples, d).coords().reshape(-1, d)
    w = 0.5 * min(G.p_window, H.p_window)
    ax = np.linspace(-w, w, samples)
    ps = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), -1).reshape(-1, d)
    X = np.repeat(xs, len(ps), axis=0)
    P = np.tile(ps, (len(xs), 1))
    return float(np.abs(poisson_bracket(G, H, (X, P))).max())


def semigroup_commutation_on_function(K_G: ActionKernel, K_H: ActionKernel, u,
                                      s_steps: int, t_steps: int) -> float:
    """``|| T_G^s T_H^t u - T_H^t T_G^s u ||_inf`` (operators applied right
    to left, one kernel step at a time)."""
    u = np.asarray(u, dtype=float)
    if s_steps < 0 or t_steps < 0:
        raise ValueError("step counts must be non-negative")
    a = u
    for _ in range(t_steps):
        a = lax_oleinik(K_H, a)
    for _ in range(s_steps):
        a = lax_oleinik(K_G, a)
    b = u
    for _ in range(s_steps):
        b = lax_oleinik(K_G, b)
    for _ in range(t_steps):
        b = lax_oleinik(K_H, b)
    return float(np.abs(a - b).max())


def _sup_gap(A, B) -> float:
    fa, fb = np.isfinite(A), np.isfinite(B)
    if not np.array_equal(fa, fb):
        return float("inf")
    return float(np.abs(A[fa] - B[fa]).max()) if fa.any() else 0.0


def _apply_steps(K, u, k):
    for _ in range(k):
        u = lax_oleinik(K, u)
    return u


def _run_level(G, H, n, tau, horizon, tol: PairTolerances, n_p, n_v):
    grid = TorusGrid.regular(n, G.dim)
    LG, LH = legendre(G, grid, n_p, n_v), legendre(H, grid, n_p, n_v)
    KG, KH = build_kernel(LG, tau), build_kernel(LH, tau)
    KHp = build_kernel(LH, tau, "positive")
    k = max(1, int(round(horizon / tau)))
    s = k * tau

    kern = commutation_residual(minplus_power(KG, k), minplus_power(KH, k))

    zero = np.zeros(grid.shape)
    uG = solve_weak_kam(KG, zero, tol.solver, tol.max_iter)
    uH = solve_weak_kam(KH, zero, tol.solver, tol.max_iter)
    ok = uG.converged and uH.converged
    aG, aH = uG.alpha, uH.alpha
    cross_gh = float(np.abs(_apply_steps(KH, uG.u, k) + s * aH - uG.u).max())
    cross_hg = float(np.abs(_apply_steps(KG, uH.u, k) + s * aG - uH.u).max())

    # pair u_G^- with the positive semigroup of H, then come back with T_H^-
    up, _, ok1 = _iterate_to_limit(KHp, uG.u, aH, tol.solver, tol.max_iter)
    back, _, ok2 = _iterate_to_limit(KH, up, aH, tol.solver, tol.max_iter)
    repair = float(np.abs(back - uG.u).max())
    ok = ok and ok1 and ok2

    BG = peierls_barrier(KG, aG, tol.solver_floor)
    BH = peierls_barrier(KH, aH, tol.solver_floor)
    ok = ok and BG.converged and BH.converged
    gap = _sup_gap(BG.h, BH.h)
    try:
        haus = hausdorff_nodes(aubry_from_peierls(BG).mask, aubry_from_peierls(BH).mask)
    except ValueError:
        haus = float("inf")
    return LevelResult(n, tau, k, aG, aH, kern, cross_gh, cross_hg, repair, gap, haus, ok)


def run_pair_suite(G: HamiltonianModel, H: HamiltonianModel, ladder=DEFAULT_LADDER,
                   tolerances: PairTolerances = None, horizon: float = None,
                   c_nodes=None, flat_level: int = -1, n_p: int = 513, n_v: int = 513,
                   workers: int = 1) -> PairReport:
    """Refinement study of the commutation identities for ``(G, H)``.

    Parameters
    ----------
    ladder : sequence of (n, tau)
        At least three levels with ``n`` doubling.
    horizon : float, optional
        Physical time of the kernel comparisons; defaults to the first
        level's ``tau``.
    c_nodes : array_like, optional
        Cohomology classes for the shared-flat check, run at ladder level
        ``flat_level``.  Without them the flats verdict is inconclusive.
    workers : int
        Levels run concurrently; results are identical for any value.
    """
    tol = tolerances or PairTolerances()
    ladder = [(int(n), float(t)) for n, t in ladder]
    if len(ladder) < 3:
        raise ValueError("ladder needs at least 3 levels")
    if any(b[0] != 2 * a[0] for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder levels must double n")
    for M in (G, H):
        M.require_tonelli()
    if G.dim != H.dim:
        raise ValueError("models have different dimensions")
    horizon = ladder[0][1] if horizon is None else float(horizon)

    def job(level):
        return _run_level(G, H, level[0], level[1], horizon, tol, n_p, n_v)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            levels = list(ex.map(job, ladder))
    else:
        levels = [job(lv) for lv in ladder]

    flats = None
    diag = {"nonconverged": not all(lv.converged for lv in levels)}
    if c_nodes is not None:
        n, tau = ladder[flat_level]
        grid = TorusGrid.regular(n, G.dim)
        AG = mather_alpha(G, c_nodes, grid, tau, n_p, n_v, workers=workers)
        AH = mather_alpha(H, c_nodes, grid, tau, n_p, n_v, workers=workers,
                          tol_flat=tol.tol_flat)
        flats = compare_flats(AG, AH)
        diag["alpha_G"] = AG
        diag["alpha_H"] = AH
    report = PairReport(G.label, H.label, horizon, bracket_sup(G, H), levels, flats, tol,
                        {}, diag)
    object.__setattr__(report, "verdicts", report.recompute_verdicts())
    return report

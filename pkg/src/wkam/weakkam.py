"""Critical values, weak KAM solutions and subsolutions of discrete
Lax-Oleinik operators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import ActionKernel, lax_oleinik, minplus_apply

__all__ = [
    "WeakKamResult",
    "PairedSolutions",
    "KarpTooLargeError",
    "critical_value_karp",
    "critical_value",
    "solve_weak_kam",
    "pair_solutions",
    "check_subsolution",
    "project_subsolution",
    "cone_seed",
]

KARP_MAX_NODES = 4096


class KarpTooLargeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeakKamResult:
    """Normalised fixed point of a discrete Lax-Oleinik operator.

    ``u`` vanishes at ``anchor``.  ``level`` is the constant such that
    ``u + level`` is the limit of ``T^k u0 + k tau alpha`` (negative) or
    ``T^k u0 - k tau alpha`` (positive), so pairs built from one seed keep
    their relative position.
    """

    u: np.ndarray
    alpha: float
    direction: str
    iterations: int
    residual: float
    anchor: int = 0
    level: float = 0.0
    converged: bool = True
    history: list = field(default_factory=list, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def limit(self) -> np.ndarray:
        return self.u + self.level


@dataclass(frozen=True, eq=False)
class PairedSolutions:
    u_minus: WeakKamResult
    u_plus: WeakKamResult
    seed_label: str = ""
    seed_is_subsolution: bool = True
    repair_gap: float = 0.0
    consistent: bool = True

    @property
    def gap(self) -> np.ndarray:
        """``u_minus - u_plus`` on the limits; non-negative for true pairs."""
        return self.u_minus.limit - self.u_plus.limit


def critical_value_karp(K: ActionKernel) -> float:
    """Exact critical value ``-mu / tau`` from Karp's minimum cycle mean.

    ``D_k(v)`` is the cheapest k-edge walk ending at v from any start, and
    ``mu = min_v max_k (D_N(v) - D_k(v)) / (N - k)``.
    """
    n = K.grid.size
    if n > KARP_MAX_NODES:
        raise KarpTooLargeError(f"{n} nodes exceeds the Karp oracle limit {KARP_MAX_NODES}")
    D = np.empty((n + 1, n))
    D[0] = 0.0
    for k in range(1, n + 1):
        D[k] = minplus_apply(K, D[k - 1])
    k = np.arange(n)[:, None]
    with np.errstate(invalid="ignore"):
        ratios = (D[n][None, :] - D[:n]) / (n - k)
    ratios = np.where(np.isfinite(D[:n]), ratios, -np.inf)
    worst = ratios.max(axis=0)
    worst = worst[np.isfinite(D[n])]
    if worst.size == 0:
        raise ValueError("kernel has no cycles")
    mu = float(worst.min())
    return -mu / K.step


def critical_value(K: ActionKernel, tol: float = 1e-12, max_iter: int = 200000) -> float:
    """Karp on grids within the oracle limit, power iteration beyond it."""
    if K.grid.size <= KARP_MAX_NODES:
        return critical_value_karp(K)
    res = solve_weak_kam(K, np.zeros(K.grid.shape), tol, max_iter)
    return res.alpha


def solve_weak_kam(K: ActionKernel, u0, tol: float = 1e-10, max_iter: int = 100000,
                   anchor: int = 0, window: int = 10) -> WeakKamResult:
    """Normalised power iteration ``u <- T u - (T u)[anchor]``.

    Stops once successive normalised iterates differ by less than ``tol``
    and the last ``window`` shifts agree within ``tol``.  The critical value
    is ``-shift / tau`` (negative kernels) or ``+shift / tau`` (positive).

    ``history`` rows are ``(iteration, shift, sup_defect, span)`` where
    ``span`` is the oscillation of the raw increment ``T u - u``; the span
    never increases because the operator is monotone and commutes with
    constants.
    """
    u0 = np.asarray(u0, dtype=float)
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial function must be finite")
    flat0 = u0.reshape(-1)
    u = flat0 - flat0[anchor]
    tau = K.step
    shifts = []
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = lax_oleinik(K, u.reshape(u0.shape)).reshape(-1)
        raw = w - u
        shift = float(w[anchor])
        w = w - shift
        diff = float(np.abs(w - u).max())
        span = float(raw.max() - raw.min())
        shifts.append(shift)
        history.append((it, shift, diff, span))
        u = w
        if diff < tol and len(shifts) >= window:
            recent = shifts[-window:]
            if max(recent) - min(recent) < tol:
                converged = True
                break
    sign = -1.0 if K.direction == "negative" else 1.0
    if converged:
        s = shifts[-1]
    else:
        s = float(np.mean(shifts[-min(len(shifts), 200):]))
    alpha = sign * s / tau
    level = float(flat0[anchor] + np.sum(np.asarray(shifts) - s))
    out = lax_oleinik(K, u.reshape(u0.shape)).reshape(-1)
    residual = float(np.abs(out - s - u).max())
    diagnostics = {}
    if not converged:
        tail = np.asarray(shifts[-50:])
        diagnostics = {"shift_min": float(tail.min()), "shift_max": float(tail.max()),
                       "last_defect": history[-1][2]}
    return WeakKamResult(u.reshape(u0.shape), alpha, K.direction, it, residual,
                         anchor, level, converged, history, diagnostics)


def _iterate_to_limit(K: ActionKernel, u, alpha: float, tol: float, max_iter: int):
    """Limit of ``T^k u + k tau alpha`` (sign-aware) without renormalising."""
    c = K.step * alpha * (1.0 if K.direction == "negative" else -1.0)
    u = np.asarray(u, dtype=float)
    for it in range(1, max_iter + 1):
        w = lax_oleinik(K, u) + c
        if np.abs(w - u).max() < tol:
            return w, it, True
        u = w
    return u, max_iter, False


def pair_solutions(K_minus: ActionKernel, K_plus: ActionKernel, seed, tol: float = 1e-10,
                   max_iter: int = 100000, seed_label: str = "", alpha: float = None,
                   subsolution_tol: float = None) -> PairedSolutions:
    """Negative and positive limits of one seed, with the re-pairing check.

    ``u_minus`` and ``u_plus`` come from the two semigroups started at
    ``seed``.  The pair is consistent when iterating the negative semigroup
    from ``u_plus`` returns ``u_minus`` within ``2 tol``.
    """
    seed = np.asarray(seed, dtype=float)
    um = solve_weak_kam(K_minus, seed, tol, max_iter)
    up = solve_weak_kam(K_plus, seed, tol, max_iter)
    a = um.alpha if alpha is None else alpha
    viol = check_subsolution(seed, K_minus, a)
    is_sub = viol <= (subsolution_tol if subsolution_tol is not None else max(tol, 1e-9))
    back, _, ok = _iterate_to_limit(K_minus, up.limit, a, tol, max_iter)
    gap = float(np.abs(back - um.limit).max())
    consistent = ok and gap <= 2 * tol
    return PairedSolutions(um, up, seed_label, bool(is_sub), gap, bool(consistent))


def check_subsolution(u, K: ActionKernel, alpha: float) -> float:
    """Largest violation of the one-step subsolution inequality.

    Negative kernels test ``u <= T u + tau alpha``, positive kernels
    ``u >= T u - tau alpha``; both encode ``u(y) - u(x) <= c(x, y) + tau alpha``.
    """
    u = np.asarray(u, dtype=float)
    tu = lax_oleinik(K, u)
    ta = K.step * alpha
    if K.direction == "negative":
        v = u - (tu + ta)
    else:
        v = (tu - ta) - u
    return float(max(0.0, v.max()))


def project_subsolution(u, K: ActionKernel, alpha: float, tol: float = 1e-12,
                        max_iter: int = 100000) -> np.ndarray:
    """Largest discrete ``(alpha, K)``-subsolution below ``u``, i.e.
    ``inf_k T^k u + k tau alpha`` for a negative kernel.

    Iterates ``w <- min(w, T w + tau alpha)`` until no entry drops by more
    than ``tol``; the tolerance absorbs round-off in ``alpha``, which would
    otherwise let a critical cycle creep downwards forever.
    """
    if K.direction != "negative":
        raise ValueError("project with the negative kernel")
    w = np.asarray(u, dtype=float).copy()
    ta = K.step * alpha
    for _ in range(max_iter):
        nxt = np.minimum(w, minplus_apply(K, w) + ta)
        drop = float((w - nxt).max())
        w = nxt
        if drop <= tol:
            return w
    raise RuntimeError("subsolution projection did not settle")


def cone_seed(grid, x0, slope: float) -> np.ndarray:
    """``slope * dist_T(., x0)`` on the grid nodes."""
    from .model import torus_distance

    return slope * torus_distance(grid, x0)

"""Alternating positive/negative Lax-Oleinik smoothing of subsolutions.

One round maps ``u`` to ``T+_d (T-_e u + e alpha) - d alpha`` with ``d < e``
(times measured in units of the kernel step):
the inf-convolution removes convex kinks, the shorter sup-convolution that
follows removes concave ones, and both preserve the subsolution property.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .kernel import ActionKernel, build_kernel, lax_oleinik
from .transform import LagrangianTable
from .weakkam import check_subsolution

__all__ = [
    "RegularizationSchedule",
    "NotSubsolutionError",
    "lasry_lions",
    "lasry_lions_round",
    "round_kernels",
    "smoothness_profile",
]


class NotSubsolutionError(ValueError):
    pass


@dataclass(frozen=True)
class RegularizationSchedule:
    """Non-increasing step counts, one per round, in units of the kernel step.

    ``max_total`` bounds the sum of the schedule.
    """

    steps: tuple
    max_total: int = 10000

    def __post_init__(self):
        s = tuple(int(v) for v in self.steps)
        if not s or min(s) < 1:
            raise ValueError("every round needs at least one step")
        if any(b > a for a, b in zip(s, s[1:])):
            raise ValueError("schedule must be non-increasing")
        if sum(s) > self.max_total:
            raise ValueError(f"schedule total {sum(s)} exceeds {self.max_total}")
        object.__setattr__(self, "steps", s)

    @property
    def rounds(self) -> int:
        return len(self.steps)

    def epsilons(self, tau: float) -> np.ndarray:
        return tau * np.asarray(self.steps, dtype=float)

    @classmethod
    def geometric(cls, rounds: int = 6, first: int = 10) -> "RegularizationSchedule":
        """``e_k = first * 2^-(k-1)`` steps, rounded, at least 1."""
        steps = [max(1, int(round(first * 0.5 ** k))) for k in range(rounds)]
        return cls(tuple(steps))


def _steps(K: ActionKernel, u, k: int, alpha: float):
    for _ in range(k):
        u = lax_oleinik(K, u) + K.step * alpha
    return u


def lasry_lions_round(u, K_minus: ActionKernel, K_plus: ActionKernel, alpha: float,
                      minus_steps: int = 1, plus_steps: int = 1) -> np.ndarray:
    """``T+^d (T-^e u + e s alpha) - d s alpha`` with ``e = minus_steps``,
    ``d = plus_steps`` and ``s`` the common kernel step.

    With ``d = e`` the round is an opening and returns convex kinks
    unchanged, so ``d`` is normally about ``e / 2``.
    """
    if K_minus.direction != "negative" or K_plus.direction != "positive":
        raise ValueError("need a negative and a positive kernel")
    if plus_steps * K_plus.step > minus_steps * K_minus.step * (1 + 1e-12):
        raise ValueError("positive time must not exceed the negative time")
    w = _steps(K_minus, np.asarray(u, dtype=float), minus_steps, alpha)
    return _steps(K_plus, w, plus_steps, -alpha)


def _plus_steps(e: int, ratio: float) -> int:
    return max(1, int(np.ceil(ratio * e - 1e-9)))


def round_kernels(L: LagrangianTable, tau: float, schedule: RegularizationSchedule,
                  plus_ratio: float = 0.5) -> dict:
    """One-step kernel pairs keyed by step count ``e``: negative at
    ``e tau``, positive at ``plus_ratio e tau``."""
    if not 0 < plus_ratio <= 1:
        raise ValueError("plus_ratio must lie in (0, 1]")
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for e in sorted(set(schedule.steps)):
            out[e] = (build_kernel(L, e * tau, "negative"),
                      build_kernel(L, plus_ratio * e * tau, "positive"))
    return out


def lasry_lions(u0, K_minus: ActionKernel, K_plus: ActionKernel, alpha: float,
                schedule: RegularizationSchedule = None, checks=None, tol: float = 1e-9,
                anchor: int = None, plus_ratio: float = 0.5, table: LagrangianTable = None,
                kernels: dict = None) -> np.ndarray:
    """Apply the schedule of alternating rounds to a common subsolution.

    By default round ``k`` composes base steps: ``e_k`` of ``K_minus``, then
    ``ceil(plus_ratio e_k)`` of ``K_plus``.  Monotonicity then preserves every
    discrete subsolution inequality of the base kernels exactly, but the
    curvature of the output cannot drop below about ``1 / tau`` because composed
    steps only reach quantized velocities.

    If ``table`` is given, round ``k`` instead applies single kernels built
    from it at steps ``e_k tau`` and ``plus_ratio e_k tau``.  Curvature then
    scales like ``1 / (e_k tau)``, at the price of the one-long-step
    quadrature error in the subsolution inequalities (zero when the
    Hamiltonian does not depend on ``x``).

    Parameters
    ----------
    u0 : ndarray
        Seed.  It must satisfy ``check_subsolution(u0, K, a) <= 10 tol`` for
        every ``(K, a)`` in ``checks`` (by default ``[(K_minus, alpha)]``).
    schedule : RegularizationSchedule, optional
        Defaults to six rounds of 10, 5, 2, 1, 1, 1 steps.
    anchor : int, optional
        If given, the output is shifted to agree with ``u0`` at this node.
    kernels : dict, optional
        Precomputed :func:`round_kernels` for the ``table`` variant.

    Raises
    ------
    NotSubsolutionError
        If the seed violates any of the subsolution inequalities.
    """
    schedule = schedule or RegularizationSchedule.geometric()
    u0 = np.asarray(u0, dtype=float)
    if K_plus.step != K_minus.step:
        raise ValueError("base kernels use different steps")
    for K, a in (checks if checks is not None else [(K_minus, alpha)]):
        v = check_subsolution(u0, K, a)
        if v > 10 * tol:
            raise NotSubsolutionError(
                f"seed violates the subsolution inequality for {K.label or 'kernel'} by {v:.3g}")
    if table is not None and kernels is None:
        kernels = round_kernels(table, K_minus.step, schedule, plus_ratio)
    u = u0
    for e in schedule.steps:
        if kernels is not None:
            Km, Kp = kernels[e]
            u = lasry_lions_round(u, Km, Kp, alpha)
        else:
            u = lasry_lions_round(u, K_minus, K_plus, alpha, e, _plus_steps(e, plus_ratio))
    if anchor is not None:
        u = u - u.reshape(-1)[anchor] + u0.reshape(-1)[anchor]
    return u


def smoothness_profile(u, spacing=None) -> tuple:
    """``(lip, semi_cc, semi_cv)`` from periodic finite differences.

    ``lip`` is the largest ``|first difference| / h``.  ``semi_cc`` is the
    largest positive centred second difference over ``h^2`` (upper curvature
    bound) and ``semi_cv`` the magnitude of the most negative one (lower
    bound).  A convex kink therefore shows up in ``semi_cc`` and a concave
    kink in ``semi_cv``, each of size ``2 / h``.  Maxima run over all axes.
    """
    u = np.asarray(u, dtype=float)
    if spacing is None:
        spacing = tuple(1.0 / n for n in u.shape)
    spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (u.ndim,))
    lip = semi_cc = semi_cv = 0.0
    for ax, h in enumerate(spacing):
        d1 = (np.roll(u, -1, axis=ax) - u) / h
        d2 = (np.roll(u, -1, axis=ax) - 2 * u + np.roll(u, 1, axis=ax)) / h ** 2
        lip = max(lip, float(np.abs(d1).max()))
        semi_cc = max(semi_cc, float(max(0.0, d2.max())))
        semi_cv = max(semi_cv, float(max(0.0, -d2.min())))
    return lip, semi_cc, semi_cv

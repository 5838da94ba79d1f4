"""Torus grids and Tonelli Hamiltonian models.

Hamiltonians are stored as vectorised evaluators ``H(x, p)`` where ``x`` and
``p`` are arrays whose last axis has length ``dim``.  The constructors in this
module accept friendlier callables (``V(x)`` in 1D, ``V(x1, x2)`` in 2D) and
lift them to that convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "TorusGrid",
    "HamiltonianModel",
    "ValidationReport",
    "NonTonelliError",
    "make_mechanical",
    "make_momentum_only",
    "compose_convex",
    "shift_cohomology",
    "validate_tonelli",
    "poisson_bracket",
    "fourier_interpolant",
    "torus_distance",
]

HESSIAN_STEP = 1e-4
BRACKET_STEP = 1e-5


class NonTonelliError(ValueError):
    """Raised when a model fails validation and the caller did not force it."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the flat torus ``[0, 1)^d``.

    Parameters
    ----------
    n_per_dim : tuple of int
        Number of nodes along each axis.
    """

    n_per_dim: tuple

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.n_per_dim))
        if len(n) not in (1, 2):
            raise ValueError("only 1D and 2D tori are supported")
        if any(k < 2 for k in n):
            raise ValueError("need at least 2 nodes per axis")
        object.__setattr__(self, "n_per_dim", n)

    @classmethod
    def regular(cls, n: int, dim: int = 1) -> "TorusGrid":
        return cls((n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.n_per_dim)

    @property
    def shape(self) -> tuple:
        return self.n_per_dim

    @property
    def size(self) -> int:
        return int(np.prod(self.n_per_dim))

    @property
    def spacing(self) -> tuple:
        return tuple(1.0 / k for k in self.n_per_dim)

    def axis_nodes(self, axis: int) -> np.ndarray:
        return np.arange(self.n_per_dim[axis]) / self.n_per_dim[axis]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        axes = [self.axis_nodes(i) for i in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def refine(self, factor: int = 2) -> "TorusGrid":
        return TorusGrid(tuple(k * factor for k in self.n_per_dim))

    def displacement(self, x, y) -> np.ndarray:
        """Minimal displacement ``y - x`` per axis, in ``(-1/2, 1/2]``."""
        d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        d = d - np.round(d)
        return np.where(d <= -0.5, d + 1.0, d)


def torus_distance(grid: TorusGrid, x0) -> np.ndarray:
    """Flat-torus distance from every node of ``grid`` to the point ``x0``."""
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (grid.dim,))
    d = grid.displacement(x0, grid.coords())
    return np.sqrt((d ** 2).sum(axis=-1))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_tonelli`.

    ``a_star`` samples the boundedness function ``R -> sup{H(x,p), |p| <= R}``
    on the same x-nodes used for the other checks.
    """

    min_hessian_eig: float
    superlinear: bool
    min_ratio_increment: float
    finite: bool
    samples: int
    reasons: tuple = ()
    _model: Optional["HamiltonianModel"] = field(default=None, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return not self.reasons

    def a_star(self, radius: float, n_p: int = 65) -> float:
        h = self._model
        xs = _sample_x(h.dim, self.samples)
        r = np.linspace(-radius, radius, n_p)
        if h.dim == 1:
            pts = r[:, None]
        else:
            pp = np.stack(np.meshgrid(r, r, indexing="ij"), -1).reshape(-1, 2)
            pts = pp[np.linalg.norm(pp, axis=1) <= radius * (1 + 1e-12)]
        pts = pts + h.p_center
        vals = h(xs[:, None, :], pts[None, :, :])
        return float(vals.max())


@dataclass(frozen=True)
class HamiltonianModel:
    """A Hamiltonian ``H(x, p)`` on ``T^d x R^d`` with its working windows.

    Attributes
    ----------
    evaluator : callable
        ``evaluator(x, p)`` with ``x``, ``p`` broadcastable arrays whose last
        axis is ``dim``; returns an array of the broadcast leading shape.
    p_window : float
        Half-width of the momentum box used for conjugation.
    v_window : float
        Half-width of the velocity box used for action kernels.
    p_center : ndarray
        Centre of the momentum box (non-zero for cohomology-shifted models).
    """

    evaluator: Callable
    p_window: float
    v_window: float
    label: str
    dim: int = 1
    p_center: np.ndarray = None
    report: Optional[ValidationReport] = field(default=None, compare=False)

    def __post_init__(self):
        if self.p_window <= 0 or self.v_window <= 0:
            raise ValueError("windows must be positive")
        c = np.zeros(self.dim) if self.p_center is None else np.asarray(self.p_center, float)
        object.__setattr__(self, "p_center", c.reshape(self.dim))

    def __call__(self, x, p) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.dim == 1:
            if x.ndim == 0 or x.shape[-1:] != (1,):
                x = x[..., None]
            if p.ndim == 0 or p.shape[-1:] != (1,):
                p = p[..., None]
        return np.asarray(self.evaluator(x, p), dtype=float)

    @property
    def is_tonelli(self) -> bool:
        return self.report is not None and self.report.passed

    def require_tonelli(self, force: bool = False) -> None:
        if force or self.is_tonelli:
            return
        reasons = self.report.reasons if self.report is not None else ("not validated",)
        raise NonTonelliError(f"{self.label}: non-Tonelli model ({'; '.join(reasons)})")

    def momentum_nodes(self, n_p: int) -> list:
        """Symmetric momentum nodes per axis (exactly symmetric about the
        box centre; the centre itself is a node when ``n_p`` is odd)."""
        base = symmetric_nodes(self.p_window, n_p)
        return [base + c for c in self.p_center]


def symmetric_nodes(half_width: float, count: int) -> np.ndarray:
    """``count`` uniform nodes on ``[-w, w]`` with exact mirror symmetry."""
    k = 2 * np.arange(count) - (count - 1)
    return half_width * k / (count - 1)


def _lift(fn: Callable, dim: int) -> Callable:
    """Turn ``f(q1, ..., qd)`` into a function of an array with trailing axis d."""
    return lambda q: fn(*(q[..., i] for i in range(dim)))


def fourier_interpolant(samples) -> Callable:
    """Trigonometric interpolant of periodic samples on a uniform grid.

    Returns a callable with the 1D/2D convention of :func:`make_mechanical`.
    Taking the real part of the full DFT sum keeps the interpolant real and
    smooth, and exact at the sample nodes.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim not in (1, 2):
        raise ValueError("potential samples must be 1D or 2D")
    if not np.all(np.isfinite(samples)):
        raise ValueError("non-finite potential sample")
    coef = np.fft.fftn(samples) / samples.size
    freqs = [np.fft.fftfreq(n, 1.0 / n) for n in samples.shape]

    def interp(*xs):
        waves = [np.exp(2j * np.pi * np.asarray(x, float)[..., None] * k)
                 for x, k in zip(xs, freqs)]
        if samples.ndim == 1:
            out = waves[0] @ coef
        else:
            out = np.einsum("...i,ij,...j->...", waves[0], coef, waves[1])
        return out.real

    return interp


def _potential_stats(v_lifted: Callable, dim: int) -> tuple:
    n = 512 if dim == 1 else 96
    g = TorusGrid.regular(n, dim).coords()
    vals = np.asarray(v_lifted(g), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite potential sample")
    return float(vals.min()), float(vals.max())


def make_mechanical(V, kinetic_scale: float = 1.0, dim: int = 1, label: str = None,
                    p_window: float = None, v_window: float = None,
                    validate: bool = True) -> HamiltonianModel:
    """Mechanical Hamiltonian ``kinetic_scale * |p|^2 / 2 + V(x)``.

    Parameters
    ----------
    V : callable or array_like
        Periodic potential ``V(x)`` (1D) or ``V(x1, x2)`` (2D), or samples on
        a uniform grid, interpolated trigonometrically.
    kinetic_scale : float
        Positive factor in front of the kinetic term.
    p_window, v_window : float, optional
        Override the default windows.  By default the velocity window is
        ``3 (1 + sqrt(2 osc V))`` and the momentum window is 1.25 times the
        momentum needed to reach that velocity.
    """
    if kinetic_scale <= 0:
        raise ValueError("kinetic_scale must be positive")
    if not callable(V):
        samples = np.asarray(V, dtype=float)
        dim = samples.ndim
        V = fourier_interpolant(samples)
    v_lift = _lift(V, dim)
    vmin, vmax = _potential_stats(v_lift, dim)
    osc = vmax - vmin
    if v_window is None:
        v_window = 3.0 * (1.0 + np.sqrt(2.0 * osc))
    if p_window is None:
        p_window = 1.25 * v_window / kinetic_scale
    k = float(kinetic_scale)

    def evaluator(x, p):
        return 0.5 * k * (p ** 2).sum(axis=-1) + v_lift(x)

    label = label or f"mechanical(scale={k:g})"
    model = HamiltonianModel(evaluator, float(p_window), float(v_window), label, dim)
    return _validated(model) if validate else model


def make_momentum_only(h: Callable, dim: int = 1, label: str = None,
                       p_window: float = 3.0, v_window: float = None,
                       validate: bool = True) -> HamiltonianModel:
    """Integrable Hamiltonian ``H(x, p) = h(p)``.

    The default velocity window is 0.8 times the smallest speed ``|dh/dp|``
    reached on the faces of the momentum box, so every velocity in the window
    has an interior Legendre maximiser.
    """
    h_lift = _lift(h, dim)

    def evaluator(x, p):
        p = np.asarray(p, float)
        shape = np.broadcast_shapes(np.shape(x)[:-1], p.shape[:-1])
        return np.broadcast_to(h_lift(p), shape)

    if v_window is None:
        step = 1e-6 * p_window
        speeds = []
        for axis in range(dim):
            for sgn in (-1.0, 1.0):
                e = np.zeros(dim)
                e[axis] = 1.0
                face = sgn * p_window * e
                d = (h_lift(face + step * e) - h_lift(face - step * e)) / (2 * step)
                speeds.append(abs(float(d)))
        v_window = 0.8 * min(speeds)
    label = label or "momentum-only"
    model = HamiltonianModel(evaluator, float(p_window), float(v_window), label, dim)
    return _validated(model) if validate else model


def compose_convex(H: HamiltonianModel, phi: Callable, label: str = None,
                   samples: int = 32, validate: bool = True) -> HamiltonianModel:
    """``G = phi o H`` for increasing convex ``phi``; Poisson-commutes with H.

    ``phi' > 0`` and ``phi'' >= 0`` are checked by centred differences on the
    range of ``H`` sampled over the validation grid.
    """
    xs = _sample_x(H.dim, samples)
    ps = _sample_p(H, samples)
    vals = H(xs[:, None, :], ps[None, :, :]).ravel()
    lo, hi = float(vals.min()), float(vals.max())
    hs = np.linspace(lo, hi, 257)
    step = 1e-4 * max(1.0, hi - lo)
    d1 = (phi(hs + step) - phi(hs - step)) / (2 * step)
    d2 = (phi(hs + step) - 2 * phi(hs) + phi(hs - step)) / step ** 2
    if not np.all(d1 > 0):
        raise ValueError(f"compose_convex: phi' <= 0 on sampled range [{lo:.4g}, {hi:.4g}]")
    if not np.all(d2 >= -1e-6 * max(1.0, np.abs(d1).max())):
        raise ValueError(f"compose_convex: phi'' < 0 on sampled range [{lo:.4g}, {hi:.4g}]")
    inner = H.evaluator

    def evaluator(x, p):
        return phi(inner(x, p))

    model = HamiltonianModel(evaluator, H.p_window, H.v_window,
                             label or f"composed({H.label})", H.dim, H.p_center)
    return _validated(model) if validate else model


def shift_cohomology(H: HamiltonianModel, c, validate: bool = True) -> HamiltonianModel:
    """``H_c(x, p) = H(x, p + c)`` for the closed form ``c . dx``.

    The momentum box is recentred at ``p_center - c`` so that ``H_c`` is
    sampled at exactly the momenta where ``H`` was.
    """
    c = np.asarray(c, dtype=float).reshape(H.dim)
    if not np.all(np.isfinite(c)):
        raise ValueError("cohomology class must be finite")
    inner = H.evaluator

    def evaluator(x, p):
        return inner(x, np.asarray(p, float) + c)

    label = f"{H.label}[c={','.join(f'{v:g}' for v in c)}]"
    model = HamiltonianModel(evaluator, H.p_window, H.v_window, label, H.dim,
                             H.p_center - c)
    return _validated(model) if validate else model


def _sample_x(dim: int, samples: int) -> np.ndarray:
    return TorusGrid.regular(samples, dim).coords().reshape(-1, dim)


def _sample_p(H: HamiltonianModel, samples: int) -> np.ndarray:
    r = symmetric_nodes(H.p_window, samples)
    if H.dim == 1:
        pts = r[:, None]
    else:
        pts = np.stack(np.meshgrid(r, r, indexing="ij"), -1).reshape(-1, 2)
    return pts + H.p_center


def _fiber_hessian(H: HamiltonianModel, x: np.ndarray, p: np.ndarray, step: float) -> np.ndarray:
    """Centred-difference fibre Hessians, shape ``(..., dim, dim)``."""
    d = H.dim
    hess = np.empty(np.broadcast_shapes(x.shape[:-1], p.shape[:-1]) + (d, d))
    h0 = H(x, p)
    eye = np.eye(d)
    for i in range(d):
        ei = step * eye[i]
        hess[..., i, i] = (H(x, p + ei) - 2 * h0 + H(x, p - ei)) / step ** 2
        for j in range(i + 1, d):
            ej = step * eye[j]
            hij = (H(x, p + ei + ej) - H(x, p + ei - ej)
                   - H(x, p - ei + ej) + H(x, p - ei - ej)) / (4 * step ** 2)
            hess[..., i, j] = hess[..., j, i] = hij
    return hess


def validate_tonelli(H: HamiltonianModel, samples: int = 16) -> ValidationReport:
    """Sampled checks of the Tonelli conditions.

    (a) the minimum eigenvalue of the finite-difference fibre Hessian must be
    positive; (b) ``H(x, c + r e) / r`` must increase in ``r`` over the outer
    half of the momentum box along every sampled ray ``e``; (c) ``H`` must be
    finite, so that ``A*(R)`` is finite for every sampled radius.
    """
    if samples < 8:
        raise ValueError("need at least 8 samples per axis")
    xs = _sample_x(H.dim, samples)
    ps = _sample_p(H, samples)
    reasons = []

    vals = H(xs[:, None, :], ps[None, :, :])
    finite = bool(np.all(np.isfinite(vals)))
    if not finite:
        reasons.append("non-finite values in the momentum window")

    hess = _fiber_hessian(H, xs[:, None, :], ps[None, :, :], HESSIAN_STEP)
    eig = np.linalg.eigvalsh(hess).min() if finite else -np.inf
    if not eig > 0:
        reasons.append(f"fibre Hessian not positive definite (min eig {eig:.3g})")

    if H.dim == 1:
        rays = np.array([[1.0], [-1.0]])
    else:
        ang = np.linspace(0, 2 * np.pi, 4 * samples, endpoint=False)
        rays = np.stack([np.cos(ang), np.sin(ang)], -1)
    radii = np.linspace(0.5, 1.0, samples) * H.p_window
    pr = H.p_center + radii[None, :, None] * rays[:, None, :]
    ratio = H(xs[:, None, None, :], pr[None]) / radii[None, None, :]
    incr = np.diff(ratio, axis=-1)
    min_incr = float(incr.min()) if finite else -np.inf
    superlinear = min_incr > 0
    if not superlinear:
        reasons.append("H/|p| not increasing along rays")

    report = ValidationReport(float(eig), bool(superlinear), min_incr, finite,
                              samples, tuple(reasons))
    object.__setattr__(report, "_model", H)
    return report


def _validated(model: HamiltonianModel, samples: int = 16) -> HamiltonianModel:
    report = validate_tonelli(model, samples)
    out = replace(model, report=report)
    object.__setattr__(report, "_model", out)
    return out


def poisson_bracket(G: HamiltonianModel, H: HamiltonianModel, pt: Sequence,
                    h_fd: float = BRACKET_STEP) -> float:
    """Canonical bracket ``sum_i dG/dx_i dH/dp_i - dG/dp_i dH/dx_i``.

    ``pt`` is ``(x, p)``; derivatives are centred differences with step
    ``h_fd``.  The same stencils are used for both arguments, so swapping
    ``G`` and ``H`` flips the sign exactly.  Batches of points (shape
    ``(m, dim)``) return an array of ``m`` values.
    """
    if h_fd <= 0:
        raise ValueError("h_fd must be positive")
    x, p = pt
    x = np.atleast_1d(np.asarray(x, float))
    p = np.atleast_1d(np.asarray(p, float))
    d = G.dim
    total = 0.0
    for i in range(d):
        e = np.zeros(d)
        e[i] = h_fd
        gx = (G(x + e, p) - G(x - e, p)) / (2 * h_fd)
        gp = (G(x, p + e) - G(x, p - e)) / (2 * h_fd)
        hx = (H(x + e, p) - H(x - e, p)) / (2 * h_fd)
        hp = (H(x, p + e) - H(x, p - e)) / (2 * h_fd)
        total = total + (gx * hp - gp * hx)
    total = np.asarray(total, dtype=float)
    return float(total.reshape(-1)[0]) if total.size == 1 else total

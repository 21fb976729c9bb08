"""Stationary kernels f_t = a_t (dm o phi_t / dm)^(1/alpha) f o phi_t.

A :class:`KernelSpec` bundles the measure space, flow, cocycle and base
function.  Its L^alpha integrals use, in order of preference, a closed form
(``scale_fn``), deterministic breakpoint quadrature (``quadrature``) or
importance-sampled Monte Carlo against the space's sampler q.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .flows import Cocycle, Flow, MeasureSpace, TimeDomain, trivial_cocycle
from .stable_core import (
    DivergenceError,
    RngStream,
    StableScale,
    as_generator,
    check_alpha,
    scale_of_combination,
)


class StepFunction:
    """Piecewise constant function: ``values[j]`` on ``[breaks[j], breaks[j+1])``.

    Zero outside ``[breaks[0], breaks[-1])``.
    """

    def __init__(self, breaks, values):
        self.breaks = np.asarray(breaks, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.breaks.ndim != 1 or self.breaks.size != self.values.size + 1:
            raise ValueError("need len(breaks) == len(values) + 1")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("breaks must be strictly increasing")

    @classmethod
    def indicator(cls, lo: float, hi: float, height: float = 1.0) -> "StepFunction":
        return cls([lo, hi], [height])

    @property
    def support(self):
        return float(self.breaks[0]), float(self.breaks[-1])

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        j = np.searchsorted(self.breaks, y, side="right") - 1
        inside = (j >= 0) & (j < self.values.size)
        return np.where(inside, self.values[np.clip(j, 0, self.values.size - 1)], 0.0)

    def power_integral(self, alpha: float) -> float:
        return float(np.sum(np.abs(self.values) ** alpha * np.diff(self.breaks)))

    def scaled(self, c: float) -> "StepFunction":
        return StepFunction(self.breaks, c * self.values)

    def __repr__(self):
        return f"StepFunction({self.breaks.tolist()}, {self.values.tolist()})"


def step_quadrature(cuts, lo: float, hi: float, per_piece: int = 1):
    """Nodes and weights integrating piecewise-smooth functions on [lo, hi).

    ``cuts`` are the discontinuities; with ``per_piece=1`` the rule is the
    midpoint rule on each piece, exact for step integrands.  Larger values
    use Gauss-Legendre nodes on every piece.
    """
    pts = np.unique(np.clip(np.concatenate([[lo, hi], np.ravel(cuts)]), lo, hi))
    a, b = pts[:-1], pts[1:]
    keep = b - a > 0
    a, b = a[keep], b[keep]
    if per_piece == 1:
        return 0.5 * (a + b), b - a
    gx, gw = np.polynomial.legendre.leggauss(per_piece)
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * gx[None, :]
    weights = half[:, None] * gw[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass
class KernelSpec:
    """A stationary SαS representation (E, m, phi_t, a_t, f)."""

    alpha: float
    space: MeasureSpace
    flow: Flow
    f: Callable
    cocycle: Cocycle = field(default_factory=trivial_cocycle)
    label: str = ""
    quadrature: Optional[Callable] = None
    scale_fn: Optional[Callable] = None
    mc_samples: int = 2**16
    mc_seed: int = 20240917
    mc_rtol: float = 1e-3
    quad_rtol: float = 1e-6
    window_sampler: Optional[Callable] = None
    direct_simulator: Optional[Callable] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = check_alpha(self.alpha)
        self._mc_cache = None

    @property
    def time_domain(self) -> TimeDomain:
        return self.flow.time_domain

    @property
    def dim(self) -> int:
        return self.space.dim

    def with_f(self, f, label=None, **changes) -> "KernelSpec":
        out = replace(self, f=f, label=label or self.label, **changes)
        out._mc_cache = None
        return out

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, t, x) -> np.ndarray:
        """f_t(x), broadcasting t against the leading axes of x."""
        t = self.time_domain.validate(t)
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            x = x[..., None]
        moved = self.flow.apply(t, x)
        base = np.asarray(self.f(moved), dtype=float)
        rn = self.flow.rn_derivative(t, x)
        sign = self.cocycle.eval(t, x)
        return sign * rn ** (1.0 / self.alpha) * base

    def orbit(self, x, times) -> np.ndarray:
        """f_t(x) for t in ``times``: shape (T,) for one point, (n, T) for n."""
        x = np.asarray(x, dtype=float)
        times = np.asarray(times, dtype=float)
        if x.ndim == 1:
            return self.evaluate(times, np.broadcast_to(x, times.shape + x.shape))
        return self.evaluate(times[None, :], x[:, None, :])

    # -- L^alpha calculus ---------------------------------------------------

    def _mc_points(self):
        if self._mc_cache is None:
            gen = RngStream(self.mc_seed, 0xC0FFEE).generator()
            pts = self.space.sample(gen, self.mc_samples)
            self._mc_cache = (pts, self.space.density_dm_dq(pts))
        return self._mc_cache

    def combination_integral(self, c, t) -> float:
        """int |sum_i c_i f_{t_i}|^alpha dm."""
        c = np.asarray(c, dtype=float)
        t = self.time_domain.validate(t)
        if not np.any(c):
            return 0.0
        if self.scale_fn is not None:
            return float(self.scale_fn(c, t))
        if self.quadrature is not None:
            pts, w = self.quadrature(t)
            vals = np.abs(self.orbit(pts, t) @ c) ** self.alpha
            return float(np.sum(w * vals))
        pts, dens = self._mc_points()
        vals = np.abs(self.orbit(pts, t) @ c) ** self.alpha * dens
        return _checked_mean(vals, self.label)

    def mc_standard_error(self, c, t) -> float:
        """Monte Carlo standard error of :meth:`combination_integral` (0 if exact)."""
        if self.scale_fn is not None or self.quadrature is not None:
            return 0.0
        pts, dens = self._mc_points()
        vals = np.abs(self.orbit(pts, np.asarray(t, float)) @ np.asarray(c, float)) ** self.alpha * dens
        return float(vals.std(ddof=1) / np.sqrt(vals.size))

    def describe(self) -> dict:
        return {
            "label": self.label,
            "alpha": self.alpha,
            "time_domain": self.time_domain.kind,
            "flow": self.flow.label,
            "flow_metadata": self.flow.metadata,
            "cocycle": self.cocycle.label,
            **self.space.describe(),
            **self.info,
        }


def _checked_mean(vals: np.ndarray, label: str) -> float:
    if not np.all(np.isfinite(vals)):
        raise DivergenceError(f"{label}: non-finite integrand values", [])
    n = vals.size
    sizes = [n >> k for k in range(8, -1, -1) if n >> k >= 16]
    csum = np.cumsum(vals)
    trace = [(int(s), float(csum[s - 1] / s)) for s in sizes]
    total = float(csum[-1] / n)
    if total > 0:
        # a single draw carrying most of the mass signals an infinite integral
        top = float(vals.max() / csum[-1])
        if top > 0.5:
            raise DivergenceError(f"{label}: L^alpha integral does not settle", trace)
    return total


def eval_kernel(kernel: KernelSpec, t, x):
    """a_t(x) (rn(t, x))^(1/alpha) f(phi_t x)."""
    return kernel.evaluate(t, x)


def kernel_norm(kernel: KernelSpec, t=0.0) -> StableScale:
    """(int |f_t|^alpha dm)^(1/alpha)."""
    return scale_of_combination(kernel, [(1.0, t)])


def support_fraction(kernel: KernelSpec, time_window, samples: int, rng,
                     n_times: int = 401) -> float:
    """q-fraction of points whose orbit over the window leaves zero.

    One-sided surrogate for full support: it can flag missing support but
    cannot certify equality modulo null sets.
    """
    lo, hi = time_window
    if kernel.time_domain.discrete:
        times = np.arange(int(np.ceil(lo)), int(np.floor(hi)) + 1, dtype=float)
    else:
        times = np.linspace(lo, hi, n_times)
    gen = as_generator(rng)
    pts = kernel.space.sample(gen, samples)
    hit = np.zeros(samples, dtype=bool)
    for start in range(0, times.size, 64):
        block = times[start : start + 64]
        hit |= np.any(np.abs(kernel.orbit(pts, block)) > 0, axis=1)
    return float(hit.mean())


def zero_kernel(kernel: KernelSpec, label: str = "zero") -> KernelSpec:
    def f(x):
        return np.zeros(np.shape(x)[:-1])

    return kernel.with_f(f, label=label, scale_fn=lambda c, t: 0.0,
                         window_sampler=None, direct_simulator=None)

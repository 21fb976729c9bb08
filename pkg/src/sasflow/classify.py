"""Positive/null and conservative/dissipative classification of orbits.

The statistic for a point x and weight w is the partial integral

    S_w(H; x) = int_{|t| <= H} w(t) |f_t(x)|^alpha lambda(dt),

which needs nothing beyond the kernel itself, so verdicts do not depend on
the sampler q used to pick the points.  Divergence is judged from how the
mass of S_w is spread over dyadic horizon blocks: for a positive orbit the
last block [H/2^j, H] keeps carrying a fixed share, for a null orbit and a
summable weight it dries up.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .flows import MeasureSpace
from .kernels import KernelSpec, zero_kernel
from .stable_core import RngStream

PN_LABELS = ("positive", "null", "undecided")
CD_LABELS = ("conservative", "dissipative", "undecided")


@dataclass(frozen=True)
class WeightFunction:
    """Nonnegative weight, nonincreasing in |t|, with divergent half-line mass."""

    fn: Callable
    label: str

    def eval(self, t) -> np.ndarray:
        return np.asarray(self.fn(np.abs(np.asarray(t, dtype=float))), dtype=float)

    def __call__(self, t):
        return self.eval(t)


def power_weight(p: float) -> WeightFunction:
    if not (0.0 < p <= 1.0):
        raise ValueError("w_p belongs to the weight class only for 0 < p <= 1")
    return WeightFunction(lambda t: (1.0 + t) ** (-p), f"w_{p:g}")


def log_weight() -> WeightFunction:
    return WeightFunction(lambda t: 1.0 / ((1.0 + t) * np.log(np.e + t)), "w_log")


def unit_weight() -> WeightFunction:
    return WeightFunction(lambda t: np.ones_like(t), "w_1")


SHIPPED_WEIGHTS = {
    "w_0.5": power_weight(0.5),
    "w_0.75": power_weight(0.75),
    "w_1": power_weight(1.0),
    "w_log": log_weight(),
}


def default_weights() -> list:
    # w_log diverges like log log H: indistinguishable from a summable weight
    # at any affordable horizon, so it is available but not used by default
    return [SHIPPED_WEIGHTS[k] for k in ("w_0.5", "w_0.75", "w_1")]


def check_weight(w: WeightFunction, checkpoints=(1e3, 1e6), n: int = 4001) -> dict:
    """Numerical membership check: monotone in |t|, growing half-line mass."""
    grid = np.concatenate([[0.0], np.geomspace(1e-3, max(checkpoints), n)])
    vals = w.eval(grid)
    monotone = bool(np.all(vals >= 0) and np.all(np.diff(vals) <= 1e-15))
    mids = 0.5 * (grid[1:] + grid[:-1])
    cum = np.concatenate([[0.0], np.cumsum(w.eval(mids) * np.diff(grid))])
    partial = [float(np.interp(T, grid, cum)) for T in checkpoints]
    growing = all(b > a for a, b in zip(partial, partial[1:]))
    return {"label": w.label, "monotone": monotone, "partial_integrals": partial,
            "increasing": growing}


@dataclass
class ClassifierConfig:
    """Horizons and thresholds for point verdicts.

    ``block`` is j: the tail block is [H/2^j, H] and the ratio compares its
    weighted mass with everything inside H/2^j.  ``cd_block`` plays the same
    role for the unweighted (Hopf) sum.
    """

    horizon_discrete: int = 2**16
    horizon_continuous: float = 1e4
    dt: float = 0.05
    block: int = 6
    rho_null: float = 0.3
    rho_pos: float = 0.4
    cd_block: int = 10
    diss_tol: float = 1e-9
    cons_tol: float = 1e-3
    weights: tuple = ("w_0.5", "w_0.75", "w_1")
    recentre: bool = True
    min_radius_fraction: float = 0.5
    workers: int = 1

    def weight_functions(self) -> list:
        try:
            return [SHIPPED_WEIGHTS[k] for k in self.weights]
        except KeyError as err:
            raise ValueError(f"unknown weight {err.args[0]!r}; known {sorted(SHIPPED_WEIGHTS)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = list(self.weights)
        return d


def _time_grid(kernel: KernelSpec, H: float, dt: float):
    """Symmetric grid on [-H, H] and quadrature weights (trapezoid in continuous time)."""
    if kernel.time_domain.discrete:
        n = int(H)
        t = np.arange(-n, n + 1, dtype=float)
        return t, np.ones(t.size), 1.0
    n = int(round(H / dt))
    t = np.arange(-n, n + 1) * dt
    q = np.full(t.size, dt)
    q[0] = q[-1] = dt / 2
    return t, q, dt


def _orbit_power(kernel: KernelSpec, x, times, chunk: int = 2**16) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty(times.size)
    for s in range(0, times.size, chunk):
        out[s : s + chunk] = np.abs(kernel.orbit(x, times[s : s + chunk])) ** kernel.alpha
    return out


def _cumulative_by_radius(t, contrib, steps):
    """S(h) for h = steps[k] grid steps: sum of contrib over |index| <= h."""
    n = (t.size - 1) // 2
    pos = contrib[n:]
    neg = contrib[n::-1]
    c = np.cumsum(pos) + np.cumsum(neg) - contrib[n]
    return c[np.asarray(steps, dtype=np.int64)]


@lru_cache(maxsize=64)
def _weight_grid(w: WeightFunction, n: int, step: float) -> np.ndarray:
    # every centred orbit of radius n sees the same grid, so reuse it across points
    vals = w.eval(np.arange(-n, n + 1) * step)
    vals.flags.writeable = False
    return vals


def _dyadic_steps(n: int, block: int) -> np.ndarray:
    ks = np.arange(int(math.floor(math.log2(max(n, 1)))) + 1)
    steps = np.unique(np.concatenate([n // 2 ** ks, [n]]))
    return steps[steps >= 1]


def weighted_trajectory_sums(kernel: KernelSpec, x, w: WeightFunction, horizons, dt: float = 0.05):
    """Partial sums S_H = sum/int over |t| <= H of w(t)|f_t(x)|^alpha, per horizon.

    Continuous time uses the trapezoidal rule on a grid of step ``dt``; the
    end-point half weights keep S_H nondecreasing in H.
    """
    horizons = np.asarray(horizons, dtype=float)
    if np.any(np.diff(horizons) < 0):
        raise ValueError("horizons must be increasing")
    H = float(horizons[-1])
    t, q, step = _time_grid(kernel, H, dt)
    powers = _orbit_power(kernel, x, t)
    n = (t.size - 1) // 2
    out = []
    for h in horizons:
        m = int(round(h / step))
        lo, hi = n - m, n + m + 1
        qq = q[lo:hi].copy()
        if not kernel.time_domain.discrete and m > 0:
            qq[0] = qq[-1] = step / 2
        out.append((float(h), float(np.sum(w.eval(t[lo:hi]) * powers[lo:hi] * qq))))
    return out


@dataclass
class PointVerdict:
    point: list
    positive_null: str
    cons_diss: str
    partial_sums: list = field(default_factory=list)
    ratios: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.positive_null not in PN_LABELS or self.cons_diss not in CD_LABELS:
            raise ValueError("invalid verdict label")
        if self.cons_diss == "dissipative" and self.positive_null != "null":
            raise AssertionError("a dissipative verdict must be null")

    @property
    def summary(self) -> str:
        if self.cons_diss == "dissipative":
            return "dissipative"
        if self.cons_diss == "conservative" and self.positive_null == "null":
            return "conservative_null"
        if self.positive_null == "positive":
            return "positive"
        return "undecided"


def classify_point(kernel: KernelSpec, x, config: Optional[ClassifierConfig] = None) -> PointVerdict:
    cfg = config or ClassifierConfig()
    disc = kernel.time_domain.discrete
    H = cfg.horizon_discrete if disc else cfg.horizon_continuous
    t, q, step = _time_grid(kernel, H, cfg.dt)
    powers = _orbit_power(kernel, x, t) * q
    n_full = (t.size - 1) // 2
    # P and N are flow invariant, so x may be replaced by phi_c(x); centring
    # at the first visit of the support removes the start-up transient
    centre = n_full
    if cfg.recentre:
        nz = np.flatnonzero(powers > 0)
        if nz.size:
            centre = int(nz[np.argmin(np.abs(nz - n_full))])
    n = min(centre, t.size - 1 - centre)
    t = np.arange(-n, n + 1) * step
    powers = powers[centre - n : centre + n + 1]
    steps = _dyadic_steps(n, cfg.block)
    weights = cfg.weight_functions()

    S0 = _cumulative_by_radius(t, powers, steps)
    sums = {w.label: _cumulative_by_radius(t, _weight_grid(w, n, step) * powers, steps)
            for w in weights}
    table = [(float(s * step), {k: float(v[i]) for k, v in sums.items()}, float(S0[i]))
             for i, s in enumerate(steps)]

    def at(arr, m):
        return float(arr[np.searchsorted(steps, m)])

    # conservative / dissipative from the unweighted sum
    total0 = float(S0[-1])
    inner0 = at(S0, max(n >> cfg.cd_block, 1))
    growth = (total0 - inner0) / total0 if total0 > 0 else float("nan")
    if total0 <= 0:
        cd = "undecided"
    elif growth <= cfg.diss_tol:
        cd = "dissipative"
    elif growth >= cfg.cons_tol:
        cd = "conservative"
    else:
        cd = "undecided"

    ratios = {}
    mid = max(n >> cfg.block, 1)
    for label, arr in sums.items():
        total, inner = float(arr[-1]), at(arr, mid)
        if total <= 0:
            ratios[label] = float("nan")
        elif inner <= 0:
            ratios[label] = float("inf")
        else:
            ratios[label] = (total - inner) / inner
    finite = [r for r in ratios.values() if not math.isnan(r)]
    short = n < cfg.min_radius_fraction * n_full
    if short and cd != "dissipative":
        cd = "undecided"
    if cd == "dissipative":
        pn = "null"
    elif short:
        pn = "undecided"
    elif not finite:
        pn = "undecided"
    elif min(finite) <= cfg.rho_null:
        pn = "null"
    elif len(finite) == len(ratios) and min(finite) >= cfg.rho_pos:
        pn = "positive"
    else:
        pn = "undecided"
    final = {"S_unweighted": total0, "growth_unweighted": growth,
             "centre": float((centre - n_full) * step), "radius": float(n * step),
             **{f"S_{k}": float(v[-1]) for k, v in sums.items()}}
    return PointVerdict(np.asarray(x, dtype=float).tolist(), pn, cd, table, ratios, final)


def _halfwidth(p: float, n: int, z: float = 1.96) -> float:
    return float(z * math.sqrt(max(p * (1.0 - p), 0.0) / n)) if n else float("nan")


@dataclass
class ClassificationReport:
    kernel_label: str
    n_points: int
    fractions: dict
    half_widths: dict
    undecided_fraction: float
    per_point: list
    config: dict
    seed: Optional[int] = None

    def majority(self) -> str:
        counts = {}
        for v in self.per_point:
            counts[v.summary] = counts.get(v.summary, 0) + 1
        return max(sorted(counts), key=lambda k: counts[k])

    def agreement(self, truth: str) -> float:
        return float(np.mean([v.summary == truth for v in self.per_point]))

    def to_dict(self, include_points: bool = True) -> dict:
        d = {
            "kernel": self.kernel_label,
            "n_points": self.n_points,
            "fractions": self.fractions,
            "half_widths": self.half_widths,
            "undecided_fraction": self.undecided_fraction,
            "majority": self.majority(),
            "config": self.config,
            "seed": self.seed,
        }
        if include_points:
            d["per_point"] = [
                {"point": v.point, "positive_null": v.positive_null, "cons_diss": v.cons_diss,
                 "ratios": v.ratios, "final": v.final}
                for v in self.per_point
            ]
        return d


def sample_points(space: MeasureSpace, n_points: int, rng) -> np.ndarray:
    """One point per sub-stream so point i does not depend on n_points."""
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    return np.vstack([space.sample(stream.substream(i).generator(), 1) for i in range(n_points)])


def summarize(verdicts, kernel_label: str, config: dict, seed=None) -> ClassificationReport:
    n = len(verdicts)
    pn = np.array([v.positive_null for v in verdicts])
    cd = np.array([v.cons_diss for v in verdicts])
    fr = {
        "P": float(np.mean(pn == "positive")),
        "N": float(np.mean(pn == "null")),
        "C": float(np.mean(cd == "conservative")),
        "D": float(np.mean(cd == "dissipative")),
        "CN": float(np.mean((cd == "conservative") & (pn == "null"))),
        "undecided_pn": float(np.mean(pn == "undecided")),
        "undecided_cd": float(np.mean(cd == "undecided")),
    }
    hw = {k: _halfwidth(v, n) for k, v in fr.items()}
    undecided = float(np.mean([v.summary == "undecided" for v in verdicts]))
    return ClassificationReport(kernel_label, n, fr, hw, undecided, list(verdicts), config, seed)


def classify_points(kernel: KernelSpec, points, config: Optional[ClassifierConfig] = None) -> list:
    cfg = config or ClassifierConfig()
    points = np.asarray(points, dtype=float)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(lambda p: classify_point(kernel, p, cfg), points))
    return [classify_point(kernel, p, cfg) for p in points]


def classify_process(kernel: KernelSpec, n_points: int, config: Optional[ClassifierConfig] = None,
                     rng=0) -> ClassificationReport:
    """Classify ``n_points`` draws from q; fractions are q-mass estimates."""
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    cfg = config or ClassifierConfig()
    pts = sample_points(kernel.space, n_points, rng)
    verdicts = classify_points(kernel, pts, cfg)
    seed = rng.seed if isinstance(rng, RngStream) else int(rng)
    return summarize(verdicts, kernel.label, cfg.to_dict(), seed)


# -- decomposition --------------------------------------------------------------


class _VerdictCache:
    """Point -> verdict class with memoization; points are orbit-tagged by bytes."""

    def __init__(self, kernel: KernelSpec, cfg: ClassifierConfig):
        self.kernel = kernel
        self.cfg = cfg
        self.store = {}

    def classes(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, pts.shape[-1])
        out = np.empty(flat.shape[0], dtype=object)
        for i, p in enumerate(flat):
            key = p.tobytes()
            if key not in self.store:
                self.store[key] = classify_point(self.kernel, p, self.cfg).summary
            out[i] = self.store[key]
        return out.reshape(pts.shape[:-1])


COMPONENTS = ("dissipative", "conservative_null", "positive")


def _restricted_space(space: MeasureSpace, member: Callable, mass: float, label: str) -> MeasureSpace:
    """q conditioned on a class (rejection sampling), dm/dq rescaled by q(class)."""

    def sampler(gen, n):
        got = []
        count = 0
        tries = 0
        while count < n:
            batch = space.sample(gen, max(2 * (n - count), 16))
            keep = batch[member(batch)]
            got.append(keep)
            count += keep.shape[0]
            tries += 1
            if tries > 10_000:
                raise RuntimeError(f"class {label} has no q-mass to sample from")
        return np.concatenate(got)[:n]

    def density(x):
        return space.density_dm_dq(x) * mass

    out = MeasureSpace(f"{space.label} | {label}", space.dim, sampler, density,
                       space.total_mass, f"{space.q_label} | {label}")
    for attr in ("model", "components", "masses", "probs"):
        if hasattr(space, attr):
            setattr(out, attr, getattr(space, attr))
    return out


def decompose(kernel: KernelSpec, report: ClassificationReport,
              config: Optional[ClassifierConfig] = None) -> dict:
    """Split f by point verdict into (dissipative, conservative null, positive).

    Components with no estimated mass become explicit zero kernels.
    Undecided points belong to no component.
    """
    cfg = config or ClassifierConfig(**{k: (tuple(v) if k == "weights" else v)
                                        for k, v in report.config.items()})
    cache = _VerdictCache(kernel, cfg)
    mass = {
        "dissipative": report.fractions["D"],
        "conservative_null": report.fractions["CN"],
        "positive": report.fractions["P"],
    }
    out = {}
    for comp in COMPONENTS:
        if mass[comp] <= 0:
            out[comp] = zero_kernel(kernel, label=f"{kernel.label}[{comp}]")
            continue

        def f(x, comp=comp):
            base = np.asarray(kernel.f(x), dtype=float)
            return np.where(cache.classes(x) == comp, base, 0.0)

        def member(pts, comp=comp):
            return cache.classes(pts) == comp

        space = _restricted_space(kernel.space, member, mass[comp], comp)
        # keep the original point set for quadrature; class indicators do the split
        out[comp] = kernel.with_f(f, label=f"{kernel.label}[{comp}]", space=space,
                                  scale_fn=None, window_sampler=None, direct_simulator=None)
    return out


def component_norms(kernel: KernelSpec, components: dict, t: float = 0.0) -> dict:
    """||X^c(t)||_alpha^alpha for each component, via the kernel's quadrature if any."""
    return {name: float(k.combination_integral([1.0], [t])) for name, k in components.items()}

"""Sample paths of SαS integrals by truncated LePage series.

    X(t) ~ c_alpha^(1/alpha) sum_{i <= N} eps_i Gamma_i^(-1/alpha) (dm/dq(U_i))^(1/alpha) f_t(U_i)

with fair signs eps_i, unit-rate Poisson arrivals Gamma_i and U_i ~ q.
Terms are drawn in fixed-size chunks so that a run with N terms is a prefix
of any run with more terms on the same stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .kernels import KernelSpec
from .paths import ar1_gaussian, circulant_gaussian, embedding_lags
from .stable_core import RngStream, as_generator, check_alpha, sample_positive_stable, series_constant

CHUNK = 1024


@dataclass
class SeriesConfig:
    n_terms: int = 10_000
    use_window_sampler: bool = True

    def __post_init__(self):
        if self.n_terms < 100:
            raise ValueError("n_terms must be at least 100")

    def constant(self, alpha: float) -> float:
        return series_constant(alpha)


@dataclass
class PathSample:
    """Simulated values; ``values`` is (T,) for one path or (n_paths, T)."""

    times: np.ndarray
    values: np.ndarray
    truncation: np.ndarray
    seed: dict = field(default_factory=dict)
    method: str = "series"
    last_term: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "values": np.asarray(self.values).tolist(),
                "truncation": np.asarray(self.truncation).tolist(), "seed": self.seed,
                "method": self.method}


def _stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, np.random.Generator):
        raise TypeError("pass an RngStream or int seed so paths can be split into sub-streams")
    return RngStream(int(rng))


def _arrivals(gen, n, start):
    return start + np.cumsum(gen.standard_exponential(n))


def _tail_sd(alpha, const, gamma_n, rms):
    """Standard deviation of the discarded series tail (Gaussian approximation)."""
    return const ** (1 / alpha) * np.sqrt(alpha / (2 - alpha)) * gamma_n ** (0.5 - 1 / alpha) * rms


def _dense_path(kernel: KernelSpec, times, n_terms, gen, const):
    a = kernel.alpha
    acc = np.zeros(times.size)
    rms = np.zeros(times.size)
    gamma = 0.0
    done = 0
    last = np.zeros(times.size)
    while done < n_terms:
        pts = kernel.space.sample(gen, CHUNK)
        g = _arrivals(gen, CHUNK, gamma)
        eps = np.where(gen.random(CHUNK) < 0.5, -1.0, 1.0)
        take = min(CHUNK, n_terms - done)
        h = kernel.space.density_dm_dq(pts[:take]) ** (1 / a)
        ft = kernel.orbit(pts[:take], times) * h[:, None]
        if not np.all(np.isfinite(ft)):
            i, j = np.argwhere(~np.isfinite(ft))[0]
            raise FloatingPointError(
                f"non-finite kernel value at t={times[j]:g}, U={pts[i].tolist()}"
            )
        coef = eps[:take] * g[:take] ** (-1 / a)
        acc += coef @ ft
        if done == 0:
            # the first chunk fixes the rms, so refinement only moves Gamma_N
            rms = np.sqrt(np.mean(ft**2, axis=0))
        last = np.abs(coef[-1] * ft[-1])
        gamma = g[take - 1]
        done += take
    c = const ** (1 / a)
    return c * acc, _tail_sd(a, const, gamma, rms) * 3.0, c * last


def _window_path(kernel: KernelSpec, n, n_terms, gen, const):
    """Series over times 0..n-1 using the kernel's sparse window sampler."""
    a = kernel.alpha
    acc = np.zeros(n)
    gamma = 0.0
    done = 0
    total = rms = None
    while done < n_terms:
        take = min(CHUNK, n_terms - done)
        total, rows, cols, vals = kernel.window_sampler(n, CHUNK, gen)
        g = _arrivals(gen, CHUNK, gamma)
        eps = np.where(gen.random(CHUNK) < 0.5, -1.0, 1.0)
        if done == 0:
            # pooled over the window: per-time counts are too sparse
            rms = np.sqrt(np.sum(vals**2) / (CHUNK * n)) * total ** (1 / a)
        keep = rows < take
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        coef = eps[:take] * g[:take] ** (-1 / a)
        acc += np.bincount(cols, weights=coef[rows] * vals, minlength=n)
        gamma = g[take - 1]
        done += take
    c = (const * total) ** (1 / a)
    return c * acc, np.full(n, _tail_sd(a, const, gamma, rms) * 3.0)


def _is_window(kernel, times) -> bool:
    return (kernel.window_sampler is not None and times.size > 0
            and np.array_equal(times, np.arange(times.size)))


def simulate_series(kernel: KernelSpec, times, cfg: Optional[SeriesConfig] = None, rng=0,
                    n_paths: int = 1) -> PathSample:
    """Joint realization(s) of X on ``times`` from one (eps, Gamma, U) sequence per path.

    ``truncation`` is three standard deviations of the discarded tail, with
    the per-term rms taken from the first chunk of terms, so it decreases
    like Gamma_N^(1/2 - 1/alpha) on refinement.
    """
    cfg = cfg or SeriesConfig()
    times = kernel.time_domain.validate(np.atleast_1d(np.asarray(times, dtype=float)))
    stream = _stream(rng)
    const = cfg.constant(kernel.alpha)
    window = cfg.use_window_sampler and _is_window(kernel, times)
    vals = np.empty((n_paths, times.size))
    trunc = np.empty((n_paths, times.size))
    last = np.empty((n_paths, times.size)) if not window else None
    for p in range(n_paths):
        gen = stream.substream(p).generator()
        if window:
            vals[p], trunc[p] = _window_path(kernel, times.size, cfg.n_terms, gen, const)
        else:
            vals[p], trunc[p], last[p] = _dense_path(kernel, times, cfg.n_terms, gen, const)
    seed = {"seed": stream.seed, "stream_id": stream.stream_id, "path": list(stream.path),
            "n_terms": cfg.n_terms, "n_paths": n_paths}
    method = "series-window" if window else "series"
    if n_paths == 1:
        return PathSample(times, vals[0], trunc[0], seed, method, None if last is None else last[0])
    return PathSample(times, vals, trunc.max(axis=0), seed, method, last)


def _gaussian_paths(r: Callable, times: np.ndarray, gen, n_paths: int) -> np.ndarray:
    d = np.diff(times)
    if times.size > 2 and np.allclose(d, d[0], rtol=0, atol=1e-12 * max(1.0, abs(d[0]))):
        rate = getattr(r, "ou_rate", None)
        if rate is not None:
            return ar1_gaussian(np.exp(-rate * d[0]), times.size, gen, batch=n_paths)
        acov = np.asarray(r(np.arange(embedding_lags(times.size)) * d[0]), dtype=float)
        return circulant_gaussian(acov, gen, batch=n_paths, n_out=times.size)
    cov = np.asarray(r(np.abs(times[:, None] - times[None, :])), dtype=float)
    lam, vec = np.linalg.eigh(cov)
    if lam.min() < -1e-8 * max(lam.max(), 1e-300):
        raise ValueError("covariance r is not positive semidefinite on these times")
    root = vec * np.sqrt(np.clip(lam, 0, None))
    return gen.standard_normal((n_paths, times.size)) @ root.T


def simulate_substable(alpha: float, beta: float, r: Callable, times, rng, w_override=None,
                       n_paths: int = 1) -> PathSample:
    """X(t) = c W^(1/beta) B(t) with W positive (alpha/beta)-stable.

    B is Gaussian with covariance r for beta = 2 and V^(1/2) G(t) with V
    positive (beta/2)-stable otherwise.  c = (2/r(0))^(1/2) makes
    ||X(0)||_alpha = 1 in both cases.
    """
    alpha = check_alpha(alpha)
    if not (alpha < beta <= 2.0):
        raise ValueError("need alpha < beta <= 2")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    r0 = float(np.asarray(r(np.array([0.0])))[0])
    if r0 <= 0:
        raise ValueError("r(0) must be positive")
    gen = as_generator(rng)
    g = _gaussian_paths(r, times, gen, n_paths)
    if w_override is None:
        w = sample_positive_stable(alpha / beta, gen, size=n_paths)
    else:
        w = np.full(n_paths, float(w_override))
    if beta < 2.0:
        g = g * np.sqrt(sample_positive_stable(beta / 2.0, gen, size=n_paths))[:, None]
    c = np.sqrt(2.0 / r0)
    vals = c * w[:, None] ** (1.0 / beta) * g
    seed = {"rng": repr(rng) if not isinstance(rng, (int, np.integer)) else int(rng),
            "beta": beta, "w_override": w_override}
    zero = np.zeros(times.size)
    if n_paths == 1:
        return PathSample(times, vals[0], zero, seed, "sub-stable")
    return PathSample(times, vals, zero, seed, "sub-stable")

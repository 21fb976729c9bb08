"""On-demand trajectory models for path-space flows.

A trajectory is identified by an integer seed and generated once over the
symmetric window ``[-horizon, horizon]``; later queries read from a small
per-model LRU cache.  Values off the grid are linearly interpolated for
continuous-time models.
"""

from __future__ import annotations

import threading
from collections import OrderedDict

import numpy as np
from scipy.fft import next_fast_len
from scipy.signal import lfilter

_PATH_TAG = 0x5A5F


def _path_rng(seed: int, tag: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_PATH_TAG, tag))
    return np.random.Generator(np.random.PCG64(ss))


def embedding_lags(n: int) -> int:
    """Number of lags to pass to :func:`circulant_gaussian` for ``n`` outputs.

    Padding makes the embedding length 5-smooth; 2(n-1) itself can have
    large prime factors and a very slow FFT.
    """
    return 1 if n <= 1 else next_fast_len(n - 1) + 1


def circulant_gaussian(acov: np.ndarray, rng: np.random.Generator, tol: float = 1e-8,
                       batch: int | None = None, n_out: int | None = None):
    """Exact stationary Gaussian sequence with autocovariance ``acov``.

    Circulant embedding (Davies-Harte / Dietrich-Newsam) of all given lags;
    the first ``n_out`` values (default: all) are returned.  Raises ValueError
    when the embedding is not nonnegative definite.  With ``batch`` the
    result has shape (batch, n_out).
    """
    acov = np.asarray(acov, dtype=float)
    n = acov.size if n_out is None else int(n_out)
    if n > acov.size:
        raise ValueError("n_out exceeds the number of lags")
    rows = 1 if batch is None else int(batch)
    if acov.size == 1:
        out = rng.standard_normal((rows, 1)) * np.sqrt(max(acov[0], 0.0))
        return out[0] if batch is None else out
    row = np.concatenate([acov, acov[-2:0:-1]])
    m = row.size
    lam = np.fft.fft(row).real
    scale = max(np.abs(lam).max(), 1e-300)
    if lam.min() < -tol * scale:
        raise ValueError(
            "covariance is not positive semidefinite on this grid "
            f"(min circulant eigenvalue {lam.min():.3e})"
        )
    root = np.sqrt(np.clip(lam, 0.0, None) / m)
    out = np.empty((rows, n))
    step = max(1, 2**22 // m)
    for s in range(0, rows, step):
        k = min(step, rows - s)
        z = rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
        out[s : s + k] = np.fft.fft(root * z, axis=1).real[:, :n]
    return out[0] if batch is None else out


class PathModel:
    """Base class: bilateral trajectories on a fixed window."""

    name = "path"
    discrete = False
    tag = 0
    ground_truth = "unknown"

    def __init__(self, horizon: float, dt: float = 1.0, cache_size: int = 8):
        self.horizon = float(horizon)
        self.dt = 1.0 if self.discrete else float(dt)
        self.n_half = int(round(self.horizon / self.dt))
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = cache_size
        self._lock = threading.Lock()

    @property
    def grid(self) -> np.ndarray:
        return np.arange(-self.n_half, self.n_half + 1) * self.dt

    def _generate(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def trajectory(self, seed: int) -> np.ndarray:
        seed = int(seed)
        with self._lock:
            cached = self._cache.get(seed)
            if cached is not None:
                self._cache.move_to_end(seed)
                return cached
        values = self._generate(_path_rng(seed, self.tag))
        values.setflags(write=False)
        with self._lock:
            self._cache[seed] = values
            while len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        return values

    def value(self, seed, times) -> np.ndarray:
        """Trajectory value at ``times`` for one seed (vectorized over times)."""
        traj = self.trajectory(seed)
        pos = np.asarray(times, dtype=float) / self.dt + self.n_half
        if np.any(pos < -1e-9) or np.any(pos > 2 * self.n_half + 1e-9):
            raise ValueError(
                f"{self.name}: query outside the generated window +-{self.horizon}"
            )
        if self.discrete:
            return traj[np.rint(pos).astype(np.int64)].astype(float)
        lo = np.clip(np.floor(pos).astype(np.int64), 0, 2 * self.n_half - 1)
        frac = pos - lo
        return traj[lo] * (1.0 - frac) + traj[lo + 1] * frac

    def values(self, seeds, times) -> np.ndarray:
        """Vectorized lookup for arrays of seeds and times of equal shape."""
        seeds = np.asarray(seeds)
        times = np.asarray(times, dtype=float)
        seeds, times = np.broadcast_arrays(seeds, times)
        out = np.empty(seeds.shape, dtype=float)
        flat_s = seeds.ravel()
        flat_t = times.ravel()
        flat_o = out.reshape(-1)
        for s in np.unique(flat_s):
            mask = flat_s == s
            flat_o[mask] = self.value(s, flat_t[mask])
        return out

    def covariance(self, times) -> np.ndarray:
        raise NotImplementedError(f"{self.name} has no Gaussian covariance")

    def sample_grid(self, n: int, gen: np.random.Generator, batch: int = 1) -> np.ndarray:
        """(batch, n) fresh paths on times 0, 1, ..., n-1 (not tied to a seed)."""
        raise NotImplementedError(f"{self.name} cannot sample unit grids")

    def mean(self, times) -> np.ndarray:
        return np.zeros(np.shape(times))

    def describe(self) -> dict:
        return {"model": self.name, "horizon": self.horizon, "dt": self.dt}


class SimpleRandomWalk(PathModel):
    """Simple symmetric walk on Z, bilateral, with W(0) = 0."""

    name = "null_recurrent_walk"
    discrete = True
    tag = 1
    ground_truth = "conservative_null"

    def __init__(self, horizon: int = 2**17, cache_size: int = 8):
        super().__init__(horizon, 1.0, cache_size)

    def _generate(self, rng):
        n = self.n_half
        steps = rng.integers(0, 2, size=(2, n), dtype=np.int8) * 2 - 1
        fwd = np.cumsum(steps[0], dtype=np.int64)
        bwd = np.cumsum(steps[1], dtype=np.int64)
        return np.concatenate([bwd[::-1], [0], fwd]).astype(np.int64)


class FractionalBrownian(PathModel):
    """Two-sided fBm with Y(0) = 0 on a grid; H = 1/2 is Brownian motion."""

    tag = 2
    ground_truth = "conservative_null"

    def __init__(self, hurst: float = 0.5, horizon: float = 1e4, dt: float = 0.05,
                 cache_size: int = 4):
        if not (0.0 < hurst < 1.0):
            raise ValueError("Hurst index must lie in (0, 1)")
        self.hurst = float(hurst)
        super().__init__(horizon, dt, cache_size)
        self.name = "brownian_motion" if self.hurst == 0.5 else f"fbm({self.hurst:g})"

    def _generate(self, rng):
        n = 2 * self.n_half
        if self.hurst == 0.5:
            incr = rng.standard_normal(n) * np.sqrt(self.dt)
        else:
            incr = circulant_gaussian(self._fgn_acov(embedding_lags(n)), rng, n_out=n)
            incr = incr * self.dt**self.hurst
        path = np.concatenate([[0.0], np.cumsum(incr)])
        return path - path[self.n_half]

    def _fgn_acov(self, m):
        k = np.arange(m, dtype=float)
        h2 = 2.0 * self.hurst
        return 0.5 * (np.abs(k + 1) ** h2 - 2 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)

    def sample_grid(self, n, gen, batch=1):
        if self.hurst == 0.5:
            incr = gen.standard_normal((batch, n - 1))
        else:
            incr = circulant_gaussian(self._fgn_acov(embedding_lags(n - 1)), gen, batch=batch,
                                      n_out=n - 1)
        return np.concatenate([np.zeros((batch, 1)), np.cumsum(incr, axis=1)], axis=1)

    def covariance(self, times):
        t = np.asarray(times, dtype=float)
        h2 = 2.0 * self.hurst
        a = np.abs(t)[:, None] ** h2
        b = np.abs(t)[None, :] ** h2
        return 0.5 * (a + b - np.abs(t[:, None] - t[None, :]) ** h2)

    def describe(self):
        return {**super().describe(), "hurst": self.hurst}


class DriftedBrownian(FractionalBrownian):
    """Y(t) = drift * t + B(t); |Y(t)| -> infinity almost surely."""

    tag = 3
    ground_truth = "dissipative"

    def __init__(self, drift: float = 1.0, horizon: float = 1e4, dt: float = 0.05,
                 cache_size: int = 4):
        if drift == 0:
            raise ValueError("drift must be nonzero")
        self.drift = float(drift)
        super().__init__(0.5, horizon, dt, cache_size)
        self.name = f"drift_brownian({self.drift:g})"

    def _generate(self, rng):
        return super()._generate(rng) + self.drift * self.grid

    def mean(self, times):
        return self.drift * np.asarray(times, dtype=float)

    def sample_grid(self, n, gen, batch=1):
        return super().sample_grid(n, gen, batch) + self.drift * np.arange(n)

    def describe(self):
        return {**super().describe(), "drift": self.drift}


class StationaryGaussian(PathModel):
    """Centered stationary Gaussian process with covariance r(t)."""

    tag = 4
    ground_truth = "positive"

    def __init__(self, r, horizon: float = 1e4, dt: float = 0.05, label: str = "r",
                 cache_size: int = 4):
        self.r = r
        super().__init__(horizon, dt, cache_size)
        self.name = f"stationary_gaussian({label})"
        self.r_label = label

    def _generate(self, rng):
        n = 2 * self.n_half + 1
        rate = getattr(self.r, "ou_rate", None)
        if rate is not None:
            return ar1_gaussian(np.exp(-rate * self.dt), n, rng)
        lags = np.arange(embedding_lags(n)) * self.dt
        return circulant_gaussian(np.asarray(self.r(lags), dtype=float), rng, n_out=n)

    def covariance(self, times):
        t = np.asarray(times, dtype=float)
        return np.asarray(self.r(np.abs(t[:, None] - t[None, :])), dtype=float)

    def sample_grid(self, n, gen, batch=1):
        rate = getattr(self.r, "ou_rate", None)
        if rate is not None:
            return ar1_gaussian(np.exp(-rate), n, gen, batch=batch)
        acov = np.asarray(self.r(np.arange(embedding_lags(n), dtype=float)), dtype=float)
        return circulant_gaussian(acov, gen, batch=batch, n_out=n)

    def describe(self):
        return {**super().describe(), "r": self.r_label}


class ZeroPath(PathModel):
    """Degenerate stationary model Y identically 0."""

    name = "zero"
    tag = 5
    ground_truth = "positive"

    def _generate(self, rng):
        return np.zeros(2 * self.n_half + 1)

    def covariance(self, times):
        t = np.asarray(times, dtype=float)
        return np.zeros((t.size, t.size))

    def sample_grid(self, n, gen, batch=1):
        return np.zeros((batch, n))


def exp_covariance(rate: float = 1.0):
    def r(t):
        return np.exp(-rate * np.abs(t))

    # marks the Ornstein-Uhlenbeck case, which has an exact AR(1) sampler
    r.ou_rate = float(rate)
    return r


def ar1_gaussian(rho: float, n: int, rng: np.random.Generator, batch: int | None = None):
    """Stationary AR(1) with unit variance and lag-one correlation ``rho``."""
    rows = 1 if batch is None else int(batch)
    eps = rng.standard_normal((rows, n))
    eps[:, 1:] *= np.sqrt(1.0 - rho * rho)
    out = lfilter([1.0], [1.0, -rho], eps, axis=1)
    return out[0] if batch is None else out


def make_path_model(descriptor, **kw) -> PathModel:
    """Build a trajectory model from a descriptor.

    Accepted: ``"null_recurrent_walk"``, ``"brownian_motion"``,
    ``("fbm", H)``, ``("stationary_gaussian", r)``, ``("drift_brownian", mu)``,
    ``"zero"`` or a ready :class:`PathModel`.
    """
    if isinstance(descriptor, PathModel):
        return descriptor
    if isinstance(descriptor, str):
        name, arg = descriptor, None
    else:
        name, arg = descriptor
    if name == "null_recurrent_walk":
        return SimpleRandomWalk(**kw)
    if name == "brownian_motion":
        return FractionalBrownian(0.5, **kw)
    if name == "fbm":
        return FractionalBrownian(float(arg), **kw)
    if name == "drift_brownian":
        return DriftedBrownian(1.0 if arg is None else float(arg), **kw)
    if name == "stationary_gaussian":
        r = exp_covariance() if arg is None else arg
        label = "exp(-|t|)" if arg is None else getattr(arg, "__name__", "r")
        return StationaryGaussian(r, label=label, **kw)
    if name == "zero":
        return ZeroPath(kw.pop("horizon", 1e4), kw.pop("dt", 0.05), **kw)
    raise ValueError(f"unknown trajectory model {descriptor!r}")

"""Ergodicity, Gross-type mixing averages and partial-maxima scaling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import KernelSpec
from .simulate import SeriesConfig, simulate_series
from .stable_core import RngStream, as_generator


# -- ergodicity functional ---------------------------------------------------------


def _continuous_nodes(M_grid, dt: float, fine_until: float, coarse: float) -> np.ndarray:
    # step dt up to fine_until, then coarse up to 10*fine_until, then 4*coarse
    top = float(max(M_grid))
    edges = [0.0, fine_until, 10 * fine_until, top]
    steps = [dt, coarse, 4 * coarse]
    parts = [np.arange(a, min(b, top), h) for a, b, h in zip(edges, edges[1:], steps) if a < top]
    return np.unique(np.concatenate(parts + [np.asarray(M_grid, dtype=float), [0.0, top]]))


# irrational coarse step: rational steps alias with periodic integrands
GOLDEN_STEP = 0.25 / ((1 + 5**0.5) / 2)


def ergodicity_functional(kernel: KernelSpec, M_grid, dt: float = 0.01, fine_until: float = 10.0,
                          coarse: float = GOLDEN_STEP) -> list:
    """Cesaro averages of exp{2||X(0)||^alpha - ||X(t) - X(0)||^alpha} from exact norms.

    Continuous time: trapezoidal rule, step ``dt`` on [0, fine_until],
    ``coarse`` up to 10 * fine_until and 4 * coarse beyond.  Discrete time: (1/M) sum_{j < M}.
    """
    M_grid = sorted(float(m) for m in M_grid)
    n0 = kernel.combination_integral([1.0], [0.0])
    if kernel.time_domain.discrete:
        top = int(max(M_grid))
        vals = np.empty(top)
        for j in range(top):
            d = kernel.combination_integral([1.0, -1.0], [float(j), 0.0]) if j else 0.0
            vals[j] = np.exp(2.0 * n0 - d)
        csum = np.cumsum(vals)
        return [(int(M), float(csum[int(M) - 1] / M)) for M in M_grid]
    nodes = _continuous_nodes(M_grid, dt, fine_until, coarse)
    vals = np.array([
        np.exp(2.0 * n0 - (kernel.combination_integral([1.0, -1.0], [t, 0.0]) if t > 0 else 0.0))
        for t in nodes
    ])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(nodes))])
    return [(M, float(cum[np.searchsorted(nodes, M)] / M)) for M in M_grid]


def ergodicity_verdict(seq, tol: float = 0.05, drift_tol: float = 0.01) -> dict:
    """ergodic iff the last average is within ``tol`` of 1 and the last quarter is flat."""
    Ms = np.array([m for m, _ in seq], dtype=float)
    vs = np.array([v for _, v in seq])
    final = float(vs[-1])
    ref = float(np.interp(0.75 * Ms[-1], Ms, vs)) if Ms.size > 1 else final
    drift = abs(final - ref)
    ergodic = abs(final - 1.0) <= tol and drift < drift_tol
    return {"verdict": "ergodic" if ergodic else "non-ergodic", "final": final,
            "last_quarter_drift": drift, "margin": tol - abs(final - 1.0)}


# -- Gross criterion ----------------------------------------------------------------


def gross_criterion(kernel: KernelSpec, K=(0.5, 2.0), eps: float = 0.1, n_grid=(1, 16, 256, 4096),
                    samples: int = 20_000, rng=0, chunk: int = 256) -> list:
    """(1/n) sum_{j<n} m(|f_0|^alpha in K, |f_j|^alpha > eps) by importance sampling.

    Points are drawn from q; only those with |f_0|^alpha in K are followed,
    and m of the conditioning set is estimated on the same sample so every
    value lies in [0, m(conditioning set)].
    """
    lo, hi = K
    if not lo > 0:
        raise ValueError("K must be bounded away from zero")
    n_grid = sorted(int(n) for n in n_grid)
    gen = as_generator(rng)
    pts = kernel.space.sample(gen, samples)
    dens = kernel.space.density_dm_dq(pts)
    f0 = np.abs(kernel.orbit(pts, np.array([0.0]))[:, 0]) ** kernel.alpha
    inK = (f0 >= lo) & (f0 <= hi)
    if not np.any(inK):
        raise ValueError("the conditioning set {|f_0|^alpha in K} has no sampled mass")
    sub, w = pts[inK], dens[inK] / samples
    top = n_grid[-1]
    per_j = np.zeros(top)
    times = np.arange(top, dtype=float)
    for s in range(0, sub.shape[0], chunk):
        block = np.abs(kernel.orbit(sub[s : s + chunk], times)) ** kernel.alpha > eps
        per_j += w[s : s + chunk] @ block
    csum = np.cumsum(per_j)
    mass = float(np.sum(w))
    return [(n, float(csum[n - 1] / n)) for n in n_grid], mass


# -- partial maxima --------------------------------------------------------------------


def _max_paths(kernel: KernelSpec, n: int, reps: int, cfg: SeriesConfig, stream: RngStream):
    times = np.arange(n, dtype=float)
    if kernel.direct_simulator is not None:
        # contract: direct_simulator(times, rng, n_paths=...) -> PathSample
        ps = kernel.direct_simulator(times, stream.generator(), n_paths=reps)
    else:
        ps = simulate_series(kernel, times, cfg, stream, n_paths=reps)
    return np.abs(np.atleast_2d(ps.values)).max(axis=1)


def maxima_scaling(kernel: KernelSpec, n_grid=(2**10, 2**12, 2**14, 2**16), replications: int = 200,
                   cfg: Optional[SeriesConfig] = None, rng=0) -> list:
    """Rows (n, median, q25, q75) of n^(-1/alpha) max_{j<n} |X_j| over replications.

    Continuous-time kernels are sampled at the integer times 0..n-1.
    """
    cfg = cfg or SeriesConfig(n_terms=2048)
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    rows = []
    for i, n in enumerate(sorted(int(n) for n in n_grid)):
        m = _max_paths(kernel, n, replications, cfg, stream.substream(i)) * n ** (-1.0 / kernel.alpha)
        q25, med, q75 = np.quantile(m, [0.25, 0.5, 0.75])
        rows.append((n, float(med), float(q25), float(q75)))
    return rows


def maxima_verdict(table, decay: float = -0.1, flat: float = 0.05) -> dict:
    n = np.array([r[0] for r in table], dtype=float)
    med = np.array([r[1] for r in table])
    slope = float(np.polyfit(np.log(n), np.log(np.maximum(med, 1e-300)), 1)[0])
    if slope < decay:
        v = "decaying"
    elif abs(slope) < flat:
        v = "stable"
    else:
        v = "undecided"
    return {"verdict": v, "slope": slope, "ratio_last_first": float(med[-1] / med[0])}


# -- report ------------------------------------------------------------------------------


@dataclass
class DiagnosticsReport:
    kernel_label: str
    ergodicity_cesaro: list = field(default_factory=list)
    gross_averages: list = field(default_factory=list)
    gross_mass: Optional[float] = None
    maxima_table: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    def __post_init__(self):
        for _, v in self.ergodicity_cesaro:
            if v < 0:
                raise ValueError("negative Cesaro average")

    @property
    def conservative_null_signature(self) -> Optional[bool]:
        erg = self.verdicts.get("ergodicity", {}).get("verdict")
        mx = self.verdicts.get("maxima", {}).get("verdict")
        if erg is None or mx is None:
            return None
        return erg == "ergodic" and mx == "decaying"

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel_label,
            "ergodicity_cesaro": [[m, v] for m, v in self.ergodicity_cesaro],
            "gross_averages": [[n, v] for n, v in self.gross_averages],
            "gross_mass": self.gross_mass,
            "maxima_table": [list(r) for r in self.maxima_table],
            "verdicts": self.verdicts,
            "conservative_null_signature": self.conservative_null_signature,
        }


def default_M_grid(kernel: KernelSpec) -> list:
    if kernel.time_domain.discrete:
        return [2**k for k in range(4, 17, 2)]
    return [10.0, 100.0, 1000.0, 5000.0, 10000.0]


def diagnose(kernel: KernelSpec, M_grid=None, maxima_grid=None, replications: int = 200,
             cfg: Optional[SeriesConfig] = None, rng=0, gross: bool = True,
             maxima: bool = True) -> DiagnosticsReport:
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    rep = DiagnosticsReport(kernel.label)
    rep.ergodicity_cesaro = ergodicity_functional(kernel, M_grid or default_M_grid(kernel))
    rep.verdicts["ergodicity"] = ergodicity_verdict(rep.ergodicity_cesaro)
    if gross and kernel.time_domain.discrete:
        rep.gross_averages, rep.gross_mass = gross_criterion(kernel, rng=stream.substream(1))
        first = rep.gross_averages[0][1]
        rep.verdicts["gross"] = {
            "decay_ratio": rep.gross_averages[-1][1] / first if first > 0 else float("nan")}
    if maxima:
        rep.maxima_table = maxima_scaling(kernel, maxima_grid or (2**10, 2**12, 2**14, 2**16),
                                          replications, cfg, stream.substream(2))
        rep.verdicts["maxima"] = maxima_verdict(rep.maxima_table)
    return rep

"""Measure spaces, nonsingular flows and cocycles.

Points are float arrays of shape ``(..., d)``; every flow, cocycle and
density broadcasts over the leading axes, and times broadcast against
``x.shape[:-1]``.  Path-space points carry ``(seed, ..., offset)`` rather
than materialized trajectories.

Ground-truth ``metadata`` on a flow is a testing convenience: the underlying
theory only identifies components modulo null sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .paths import PathModel, make_path_model
from .stable_core import as_generator

FLOW_KINDS = ("dissipative", "conservative_null", "positive", "unknown")

_SEED_RANGE = 2**53


@dataclass(frozen=True)
class TimeDomain:
    kind: str = "continuous"

    def __post_init__(self):
        if self.kind not in ("discrete", "continuous"):
            raise ValueError(f"time domain must be discrete or continuous, not {self.kind}")

    @property
    def discrete(self) -> bool:
        return self.kind == "discrete"

    def validate(self, t):
        t = np.asarray(t, dtype=float)
        if self.discrete and not np.all(t == np.round(t)):
            raise ValueError("discrete time domain requires integer times")
        return t


DISCRETE = TimeDomain("discrete")
CONTINUOUS = TimeDomain("continuous")


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != dim:
        x = x[..., None]
    return x


@dataclass
class MeasureSpace:
    """A sigma-finite space seen through an equivalent probability sampler q.

    ``sample(gen, n)`` draws ``(n, dim)`` points from q and
    ``density_dm_dq(x)`` returns dm/dq at those points.
    """

    label: str
    dim: int
    sampler: Callable
    density: Callable
    total_mass: float = np.inf
    q_label: str = ""

    def sample(self, rng, n: int) -> np.ndarray:
        return np.asarray(self.sampler(as_generator(rng), int(n)), dtype=float).reshape(n, self.dim)

    def density_dm_dq(self, x) -> np.ndarray:
        return np.asarray(self.density(_as_points(x, self.dim)), dtype=float)

    def describe(self) -> dict:
        return {"space": self.label, "q": self.q_label, "total_mass": self.total_mass}


def lebesgue_line(q: str = "gaussian", q_scale: float = 1.0) -> MeasureSpace:
    """Lebesgue measure on R with an equivalent sampler (Gaussian by default)."""
    dist = {
        "gaussian": stats.norm(scale=q_scale),
        "cauchy": stats.cauchy(scale=q_scale),
        "student3": stats.t(df=3, scale=q_scale),
        "logistic": stats.logistic(scale=q_scale),
    }.get(q)
    if dist is None:
        raise ValueError(f"unknown sampler {q!r} for the real line")

    def sampler(gen, n):
        return dist.rvs(size=n, random_state=gen)[:, None]

    def density(x):
        return 1.0 / dist.pdf(x[..., 0])

    return MeasureSpace("R, Lebesgue", 1, sampler, density, np.inf, f"{q}({q_scale:g})")


def interval_space(lo: float = 0.0, hi: float = 1.0) -> MeasureSpace:
    """Lebesgue measure on [lo, hi) with the uniform sampler."""
    length = float(hi - lo)

    def sampler(gen, n):
        return gen.uniform(lo, hi, size=(n, 1))

    def density(x):
        return np.full(x.shape[:-1], length)

    return MeasureSpace(f"[{lo:g},{hi:g}), Lebesgue", 1, sampler, density, length, "uniform")


def unit_circle() -> MeasureSpace:
    return interval_space(0.0, 1.0)


def disjoint_union(parts, probs=None, label: str = "") -> MeasureSpace:
    """Disjoint union of spaces, component k carrying ``mass_k * m_k``.

    ``parts`` is a sequence of ``(space, mass_factor)``.  Points are
    ``(k, inner coords...)`` padded to a common width.  ``probs`` is the
    q-probability of each component (default: equal).
    """
    spaces = [p[0] for p in parts]
    masses = np.array([float(p[1]) for p in parts])
    k = len(spaces)
    probs = np.full(k, 1.0 / k) if probs is None else np.asarray(probs, dtype=float)
    if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("component probabilities must be positive and sum to 1")
    dim = 1 + max(s.dim for s in spaces)

    def sampler(gen, n):
        comp = gen.choice(k, size=n, p=probs)
        out = np.zeros((n, dim))
        out[:, 0] = comp
        for j, s in enumerate(spaces):
            idx = np.flatnonzero(comp == j)
            if idx.size:
                out[idx, 1 : 1 + s.dim] = s.sample(gen, idx.size)
        return out

    def density(x):
        comp = np.rint(x[..., 0]).astype(int)
        out = np.empty(x.shape[:-1])
        for j, s in enumerate(spaces):
            mask = comp == j
            if np.any(mask):
                out[mask] = masses[j] / probs[j] * s.density_dm_dq(x[mask][:, 1 : 1 + s.dim])
        return out

    total = float(np.sum([m * s.total_mass for s, m in zip(spaces, masses)]))
    name = label or " + ".join(s.label for s in spaces)
    q_label = ",".join(s.q_label for s in spaces) + f"; probs={np.round(probs, 6).tolist()}"
    space = MeasureSpace(name, dim, sampler, density, total, q_label)
    space.components = spaces
    space.masses = masses
    space.probs = probs
    return space


def tilted_space(space: MeasureSpace, score: Callable, eps: float = 0.5,
                 label: str = "tilted") -> MeasureSpace:
    """Same m, sampled from q' = (1 + eps * score) q by rejection.

    ``score`` must satisfy |score| <= 1 and E_q[score] = 0, so q' is an
    equivalent probability and dm/dq' = (dm/dq) / (1 + eps * score).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")

    def sampler(gen, n):
        got, have = [], 0
        while have < n:
            x = space.sample(gen, 2 * (n - have) + 8)
            keep = gen.random(x.shape[0]) * (1.0 + eps) < 1.0 + eps * score(x)
            got.append(x[keep])
            have += int(keep.sum())
        return np.concatenate(got)[:n]

    def density(x):
        return space.density_dm_dq(x) / (1.0 + eps * score(x))

    out = MeasureSpace(space.label, space.dim, sampler, density, space.total_mass,
                       f"{label}[{space.q_label}]")
    for attr in ("model", "components", "masses", "probs"):
        if hasattr(space, attr):
            setattr(out, attr, getattr(space, attr))
    return out


def sine_score(lo: float, hi: float, col: int = 0) -> Callable:
    """sin(2 pi (x - lo) / (hi - lo)): zero mean under the uniform law on [lo, hi)."""
    return lambda x: np.sin(2 * np.pi * (x[..., col] - lo) / (hi - lo))


def seed_parity_score(col: int = 0) -> Callable:
    """+1 on even trajectory seeds, -1 on odd ones; zero mean under uniform seeds."""
    return lambda x: np.where(np.mod(x[..., col], 2) == 0, 1.0, -1.0)


def two_sided_geometric(rho: float):
    """q over Z with q(x) proportional to rho^|x|."""
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    norm = (1.0 - rho) / (1.0 + rho)

    def pmf(x):
        return norm * rho ** np.abs(x)

    def draw(gen, n):
        nonzero = gen.random(n) >= norm
        mag = gen.geometric(1.0 - rho, size=n)
        sign = np.where(gen.random(n) < 0.5, -1, 1)
        return np.where(nonzero, sign * mag, 0)

    return pmf, draw


def walk_path_space(model: PathModel, rho: float = 0.8) -> MeasureSpace:
    """m = sum_x P_x over bilateral walk paths; points (seed, base, offset)."""
    pmf, draw = two_sided_geometric(rho)

    def sampler(gen, n):
        seeds = gen.integers(0, _SEED_RANGE, size=n)
        return np.column_stack([seeds, draw(gen, n), np.zeros(n)])

    def density(x):
        return 1.0 / pmf(x[..., 1])

    space = MeasureSpace(
        f"{model.name} paths x Z, counting", 3, sampler, density, np.inf,
        f"two-sided geometric({rho:g})",
    )
    space.model = model
    return space


def increment_path_space(model: PathModel, q: str = "gaussian") -> MeasureSpace:
    """m = P_1 x Lebesgue on (paths, z); points (seed, z, offset)."""
    line = lebesgue_line(q)

    def sampler(gen, n):
        seeds = gen.integers(0, _SEED_RANGE, size=n)
        return np.column_stack([seeds, line.sample(gen, n)[:, 0], np.zeros(n)])

    def density(x):
        return line.density_dm_dq(x[..., 1:2])

    space = MeasureSpace(
        f"{model.name} paths x R", 3, sampler, density, np.inf, f"P1 x {line.q_label}"
    )
    space.model = model
    return space


def probability_path_space(model: PathModel) -> MeasureSpace:
    """Probability control measure on paths; points (seed, offset)."""

    def sampler(gen, n):
        return np.column_stack([gen.integers(0, _SEED_RANGE, size=n), np.zeros(n)])

    def density(x):
        return np.ones(x.shape[:-1])

    space = MeasureSpace(f"{model.name} paths, P'", 2, sampler, density, 1.0, "P'")
    space.model = model
    return space


@dataclass
class Flow:
    """A measurable nonsingular flow (phi_t) with its Radon-Nikodym factor."""

    apply_fn: Callable
    rn_fn: Callable
    space: MeasureSpace
    time_domain: TimeDomain = CONTINUOUS
    metadata: str = "unknown"
    invariant_probability: bool = False
    label: str = ""
    distance: Optional[Callable] = None

    def __post_init__(self):
        if self.metadata not in FLOW_KINDS:
            raise ValueError(f"flow metadata must be one of {FLOW_KINDS}")

    def apply(self, t, x) -> np.ndarray:
        x = _as_points(x, self.space.dim)
        t = np.asarray(t, dtype=float)
        return self.apply_fn(t, x)

    def rn_derivative(self, t, x) -> np.ndarray:
        x = _as_points(x, self.space.dim)
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.rn_fn(t, x), np.broadcast_shapes(t.shape, x.shape[:-1]))

    def point_distance(self, x, y) -> np.ndarray:
        if self.distance is not None:
            return self.distance(x, y)
        return np.max(np.abs(np.asarray(x) - np.asarray(y)), axis=-1)


def _unit_rn(t, x):
    return np.ones(np.broadcast_shapes(np.shape(t), x.shape[:-1]))


def make_translation_flow(space: Optional[MeasureSpace] = None, discrete: bool = False) -> Flow:
    """x -> x + t on R with Lebesgue measure (measure preserving)."""
    space = space or lebesgue_line()

    def apply(t, x):
        return x + t[..., None]

    return Flow(apply, _unit_rn, space, DISCRETE if discrete else CONTINUOUS,
                "dissipative", False, "translation")


def _circular_distance(period):
    def distance(x, y):
        d = np.abs(np.asarray(x) - np.asarray(y)) % period
        return np.max(np.minimum(d, period - d), axis=-1)

    return distance


def make_rotation_flow(angle_rate: float, discrete: bool = False, period: float = 1.0) -> Flow:
    """x -> x + t * angle_rate (mod period) on [0, period), Lebesgue measure."""
    if angle_rate == 0:
        raise ValueError("rotation rate must be nonzero")
    rate = float(angle_rate)
    period = float(period)

    def apply(t, x):
        return np.mod(x + rate * t[..., None], period)

    space = unit_circle() if period == 1.0 else interval_space(0.0, period)
    return Flow(apply, _unit_rn, space, DISCRETE if discrete else CONTINUOUS,
                "positive", True, f"rotation({rate:g} mod {period:g})",
                _circular_distance(period))


def make_identity_flow(space: MeasureSpace, discrete: bool = False,
                       metadata: str = "positive") -> Flow:
    def apply(t, x):
        return np.broadcast_to(x, np.broadcast_shapes(t.shape, x.shape[:-1]) + x.shape[-1:]).copy()

    return Flow(apply, _unit_rn, space, DISCRETE if discrete else CONTINUOUS,
                metadata, np.isfinite(space.total_mass), "identity")


def make_path_shift_flow(trajectory_model, space: Optional[MeasureSpace] = None, **model_kw) -> Flow:
    """Left shift on path space; the offset coordinate (last) advances by t.

    The default space depends on the model: a walk gets the counting
    invariant measure over starting sites, stationary-increment models get
    P_1 x Lebesgue in a vertical coordinate, stationary models get P'.
    """
    model = make_path_model(trajectory_model, **model_kw)
    if space is None:
        if model.discrete:
            space = walk_path_space(model)
        elif model.ground_truth == "positive" and model.name != "zero":
            space = probability_path_space(model)
        else:
            space = increment_path_space(model)

    def apply(t, x):
        out = np.array(np.broadcast_to(x, np.broadcast_shapes(t.shape, x.shape[:-1]) + x.shape[-1:]))
        out[..., -1] = out[..., -1] + t
        return out

    flow = Flow(apply, _unit_rn, space, DISCRETE if model.discrete else CONTINUOUS,
                model.ground_truth, np.isfinite(space.total_mass), f"shift[{model.name}]")
    flow.model = model
    return flow


def make_union_flow(flows, space: MeasureSpace, metadata: str = "unknown") -> Flow:
    """Act on each component of a disjoint union with its own flow."""
    domains = {f.time_domain.kind for f in flows}
    if len(domains) != 1:
        raise ValueError("all component flows must share one time domain")

    def _split(t, x, fn, scalar):
        comp = np.rint(x[..., 0]).astype(int)
        shape = np.broadcast_shapes(t.shape, x.shape[:-1])
        tb = np.broadcast_to(t, shape)
        xb = np.broadcast_to(x, shape + x.shape[-1:])
        cb = np.broadcast_to(comp, shape)
        out = np.zeros(shape) if scalar else np.array(xb)
        if cb.size and np.all(cb == cb.flat[0]):
            # single component (the usual orbit query): no masking
            f = flows[int(cb.flat[0])]
            d = f.space.dim
            res = fn(f, tb.reshape(-1), xb.reshape(-1, xb.shape[-1])[:, 1 : 1 + d])
            if scalar:
                return np.asarray(res, dtype=float).reshape(shape)
            out[..., 1 : 1 + d] = np.asarray(res).reshape(shape + (d,))
            return out
        for j, f in enumerate(flows):
            mask = cb == j
            if not np.any(mask):
                continue
            d = f.space.dim
            res = fn(f, tb[mask], xb[mask][:, 1 : 1 + d])
            if scalar:
                out[mask] = res
            else:
                sub = out[mask]
                sub[:, 1 : 1 + d] = res
                out[mask] = sub
        return out

    def apply(t, x):
        return _split(t, x, lambda f, tt, xx: f.apply(tt, xx), False)

    def rn(t, x):
        return _split(t, x, lambda f, tt, xx: f.rn_derivative(tt, xx), True)

    def distance(x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        comp = np.rint(x[..., 0]).astype(int)
        out = np.abs(x[..., 0] - y[..., 0])
        for j, f in enumerate(flows):
            mask = comp == j
            if np.any(mask):
                d = f.space.dim
                out[mask] = np.maximum(
                    out[mask], f.point_distance(x[mask][:, 1 : 1 + d], y[mask][:, 1 : 1 + d])
                )
        return out

    inv = all(f.invariant_probability for f in flows)
    flow = Flow(apply, rn, space, flows[0].time_domain, metadata, inv,
                "union(" + ", ".join(f.label for f in flows) + ")", distance)
    flow.components = list(flows)
    return flow


@dataclass
class Cocycle:
    """{-1, +1}-valued cocycle a_t(x) for a flow."""

    eval_fn: Callable
    label: str = "trivial"

    def eval(self, t, x) -> np.ndarray:
        return self.eval_fn(np.asarray(t, dtype=float), np.asarray(x, dtype=float))


def trivial_cocycle() -> Cocycle:
    return Cocycle(lambda t, x: np.ones(np.broadcast_shapes(t.shape, x.shape[:-1])), "trivial")


def walk_sign_cocycle(model: PathModel) -> Cocycle:
    """a_t = (-1)^(number of j in [0, t) with path(j) < 0), oriented for t < 0."""

    def ev(t, x):
        shape = np.broadcast_shapes(t.shape, x.shape[:-1])
        tb = np.broadcast_to(t, shape).ravel()
        xb = np.broadcast_to(x, shape + x.shape[-1:]).reshape(-1, x.shape[-1])
        out = np.ones(tb.size)
        if xb.shape[0] and np.all(xb == xb[0]):
            keys, inverse = xb[:1], np.zeros(xb.shape[0], dtype=np.int64)
        else:
            keys, inverse = np.unique(xb, axis=0, return_inverse=True)
            inverse = np.asarray(inverse).ravel()
        for k, (seed, base, off) in enumerate(keys):
            idx = np.flatnonzero(inverse == k)
            ends = off + tb[idx]
            lo = int(min(off, ends.min()))
            hi = int(max(off, ends.max()))
            steps = np.arange(lo, hi + 1)
            neg = (base + model.value(seed, steps) < 0).astype(np.int64)
            # count[j] = number of negative sites in [lo, lo + j)
            count = np.concatenate([[0], np.cumsum(neg)])
            parity = (count[(ends - lo).astype(np.int64)] - count[int(off - lo)]) % 2
            out[idx] = np.where(parity == 1, -1.0, 1.0)
        return out.reshape(shape)

    return Cocycle(ev, "walk-sign")


def union_cocycle(cocycles, dims) -> Cocycle:
    """Cocycle on a disjoint union acting componentwise."""

    def ev(t, x):
        shape = np.broadcast_shapes(t.shape, x.shape[:-1])
        tb = np.broadcast_to(t, shape)
        xb = np.broadcast_to(x, shape + x.shape[-1:])
        comp = np.rint(xb[..., 0]).astype(int)
        if comp.size and np.all(comp == comp.flat[0]):
            j = int(comp.flat[0])
            sub = xb.reshape(-1, xb.shape[-1])[:, 1 : 1 + dims[j]]
            return np.asarray(cocycles[j].eval(tb.reshape(-1), sub), dtype=float).reshape(shape)
        out = np.ones(shape)
        for j, (c, d) in enumerate(zip(cocycles, dims)):
            mask = comp == j
            if np.any(mask):
                out[mask] = c.eval(tb[mask], xb[mask][:, 1 : 1 + d])
        return out

    labels = {c.label for c in cocycles}
    return Cocycle(ev, labels.pop() if len(labels) == 1 else "union")


@dataclass
class AxiomReport:
    samples: int
    identity: float
    group_law: float
    chain_rule: float
    cocycle: float
    extras: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.identity, self.group_law, self.chain_rule, self.cocycle)

    def ok(self, tol: float = 1e-10) -> bool:
        return self.max_residual < tol


def _random_times(gen, n, discrete, span):
    if discrete:
        return gen.integers(-span, span + 1, size=n).astype(float)
    return gen.uniform(-span, span, size=n)


def check_flow_axioms(flow: Flow, samples: int, rng, cocycle: Optional[Cocycle] = None,
                      span: float = 50.0) -> AxiomReport:
    """Residuals of identity, group law, RN chain rule and cocycle identity.

    Failures are reported, never raised.
    """
    gen = as_generator(rng)
    x = flow.space.sample(gen, samples)
    disc = flow.time_domain.discrete
    t = _random_times(gen, samples, disc, span)
    s = _random_times(gen, samples, disc, span)
    zero = np.zeros(samples)

    identity = float(np.max(flow.point_distance(flow.apply(zero, x), x)))
    xs = flow.apply(s, x)
    group = float(np.max(flow.point_distance(flow.apply(t + s, x), flow.apply(t, xs))))
    lhs = flow.rn_derivative(t + s, x)
    rhs = flow.rn_derivative(t, xs) * flow.rn_derivative(s, x)
    chain = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)))
    coc = 0.0
    if cocycle is not None:
        c0 = np.max(np.abs(cocycle.eval(zero, x) - 1.0))
        cl = cocycle.eval(t + s, x)
        cr = cocycle.eval(s, x) * cocycle.eval(t, xs)
        coc = float(max(c0, np.max(np.abs(cl - cr))))
    return AxiomReport(samples, identity, group, chain, coc)

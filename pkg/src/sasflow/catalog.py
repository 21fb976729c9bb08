"""Example processes with declared ground truth.

Every constructor returns a :class:`CatalogEntry` whose kernel carries the
cheapest exact integration strategy available for it and, where one
exists, a window sampler for series simulation on the integer times
0..n-1 (used for long paths and partial maxima).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats
from scipy.special import gammaln

from . import flows as fl
from .kernels import KernelSpec, StepFunction, step_quadrature
from .paths import PathModel, SimpleRandomWalk, StationaryGaussian, exp_covariance, make_path_model
from .stable_core import abs_moment_gaussian, check_alpha, sample_positive_stable

GROUND_TRUTHS = ("dissipative", "conservative_null", "positive", "mixed")


@dataclass
class CatalogEntry:
    name: str
    kernel: KernelSpec
    ground_truth: str
    provenance: str
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ground_truth not in GROUND_TRUTHS:
            raise ValueError(f"unknown ground truth {self.ground_truth!r}")
        meta = self.kernel.flow.metadata
        if self.ground_truth != "mixed" and meta != "unknown" and meta != self.ground_truth:
            raise ValueError(
                f"{self.name}: ground truth {self.ground_truth} disagrees with flow metadata {meta}"
            )

    def describe(self) -> dict:
        return {"name": self.name, "ground_truth": self.ground_truth,
                "provenance": self.provenance, **self.kernel.describe()}


def _as_step(f, default=(0.0, 1.0)):
    if f is None:
        return StepFunction.indicator(*default)
    if isinstance(f, StepFunction):
        return f
    raise TypeError("base functions must be StepFunction instances")


# -- translation / moving averages ------------------------------------------------


def _ma_window_sampler(atoms):
    """Window sampler for sum_k nu_k * Leb with step functions f_k (translation).

    Returns, for times 0..n-1, the total mass of points whose orbit meets the
    window and sparse (point, time, value) triples for ``n_points`` draws.
    """

    def sampler(n, n_points, gen):
        spans = []
        for nu, f in atoms:
            a, b = f.support
            spans.append((a - (n - 1), b, nu))
        masses = np.array([nu * (b - a) for a, b, nu in spans])
        total = float(masses.sum())
        comp = gen.choice(len(atoms), size=n_points, p=masses / total)
        rows, cols, vals = [], [], []
        for k, (nu, f) in enumerate(atoms):
            idx = np.flatnonzero(comp == k)
            if idx.size == 0:
                continue
            lo, hi, _ = spans[k]
            u = gen.uniform(lo, hi, size=idx.size)
            a, b = f.support
            j_lo = np.maximum(np.ceil(a - u), 0).astype(np.int64)
            j_hi = np.minimum(np.ceil(b - u) - 1, n - 1).astype(np.int64)
            count = np.maximum(j_hi - j_lo + 1, 0)
            pt = np.repeat(idx, count)
            start = np.repeat(j_lo, count)
            within = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
            j = start + within
            v = f(np.repeat(u, count) + j)
            keep = v != 0
            rows.append(pt[keep])
            cols.append(j[keep])
            vals.append(v[keep])
        return total, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    return sampler


def _line_quadrature(f: StepFunction, sign: float = 1.0):
    """Exact rule for combinations of f(x + t_i) over R."""

    def quad(times):
        a, b = f.support
        cuts = (f.breaks[None, :] - np.asarray(times)[:, None]).ravel()
        nodes, w = step_quadrature(cuts, a - np.max(times), b - np.min(times))
        return nodes[:, None], w

    return quad


def moving_average(alpha: float, f: Optional[StepFunction] = None, discrete: bool = False,
                   q: str = "gaussian", q_scale: float = 1.0) -> CatalogEntry:
    """X(t) = int f(x + t) M(dx): translation flow on R, Lebesgue control."""
    f = _as_step(f)
    space = fl.lebesgue_line(q, q_scale)
    flow = fl.make_translation_flow(space, discrete=discrete)
    kernel = KernelSpec(
        alpha, space, flow, lambda x: f(x[..., 0]),
        label="moving_average" + ("_discrete" if discrete else ""),
        quadrature=_line_quadrature(f),
        window_sampler=_ma_window_sampler([(1.0, f)]),
        info={"f": repr(f)},
    )
    return CatalogEntry(kernel.label, kernel, "dissipative",
                        "mixed moving average, single atom (dissipative component form)")


def mixed_moving_average(alpha: float, atoms=None, discrete: bool = False,
                         q: str = "gaussian") -> CatalogEntry:
    """int_W int_R f(v, x - t) M(dv, dx) with a finite atomic mixing measure nu.

    ``atoms`` is a list of ``(nu_weight, StepFunction)``.
    """
    atoms = atoms or [(1.0, StepFunction.indicator(0, 1)), (0.5, StepFunction.indicator(0, 2))]
    atoms = [(float(nu), _as_step(f)) for nu, f in atoms]
    lines = [fl.lebesgue_line(q) for _ in atoms]
    space = fl.disjoint_union([(s, nu) for s, (nu, _) in zip(lines, atoms)],
                              label="W x R, nu x Leb")
    flows = [fl.make_translation_flow(s, discrete=discrete) for s in lines]
    flow = fl.make_union_flow(flows, space, metadata="dissipative")

    def f(x):
        comp = np.rint(x[..., 0]).astype(int)
        out = np.zeros(x.shape[:-1])
        for k, (_, g) in enumerate(atoms):
            mask = comp == k
            out[mask] = g(x[..., 1][mask])
        return out

    def quad(times):
        nodes, weights = [], []
        for k, (nu, g) in enumerate(atoms):
            n1, w1 = _line_quadrature(g)(times)
            nodes.append(np.column_stack([np.full(n1.shape[0], k), n1[:, 0]]))
            weights.append(nu * w1)
        return np.concatenate(nodes), np.concatenate(weights)

    kernel = KernelSpec(alpha, space, flow, f, label="mixed_moving_average",
                        quadrature=quad,
                        window_sampler=_ma_window_sampler(atoms),
                        info={"atoms": [(nu, repr(g)) for nu, g in atoms]})
    return CatalogEntry(kernel.label, kernel, "dissipative",
                        "mixed moving average over a two-atom mixing space")


# -- cyclic flows and rotations ---------------------------------------------------


@dataclass
class CyclicAtom:
    period: float
    speed: float
    sign: int = 1
    g: Optional[StepFunction] = None
    weight: float = 1.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period q(z) must be positive")
        if self.speed == 0:
            raise ValueError("speed s(z) must be nonzero")
        if self.sign not in (-1, 1):
            raise ValueError("b(z) must be +1 or -1")
        self.g = _as_step(self.g, (0.0, self.period))
        lo, hi = self.g.support
        if lo < 0 or hi > self.period + 1e-12:
            raise ValueError("g(z, .) must live on [0, q(z))")
        if not np.any(self.g.values != 0):
            raise ValueError("g(z, .) vanishes identically: full support fails")


def _cyclic_cocycle(atom: CyclicAtom) -> fl.Cocycle:
    if atom.sign == 1:
        return fl.trivial_cocycle()

    def ev(t, x):
        k = np.floor((x[..., 0] + atom.speed * t) / atom.period)
        return np.where(np.mod(k, 2) == 1, -1.0, 1.0)

    return fl.Cocycle(ev, "b^[v+st]_q")


def cyclic_kernel(alpha: float, atoms=None, discrete: bool = False,
                  label: str = "cyclic", q: str = "uniform") -> CatalogEntry:
    """Cyclic-flow kernel b(z)^[v+s t]_q g(z, {v + s t}_q) on U_z [0, q(z)).

    ``q="tilted"`` samples each circle from a sine-tilted density and the
    atoms with unequal probabilities; m is unchanged.
    """
    atoms = atoms or [CyclicAtom(1.0, 1.0)]
    atoms = [a if isinstance(a, CyclicAtom) else CyclicAtom(**a) for a in atoms]
    parts = [fl.make_rotation_flow(a.speed, discrete=discrete, period=a.period) for a in atoms]
    if q == "uniform":
        inner, probs = [p.space for p in parts], None
    elif q == "tilted":
        inner = [fl.tilted_space(p.space, fl.sine_score(0.0, a.period)) for p, a in zip(parts, atoms)]
        probs = np.arange(1, len(atoms) + 1, dtype=float)
        probs = probs / probs.sum()
    else:
        raise ValueError(f"unknown sampler {q!r}; use 'uniform' or 'tilted'")
    space = fl.disjoint_union([(s, a.weight) for s, a in zip(inner, atoms)], probs,
                              label="U_z [0, q(z)), sigma x Leb")
    flow = fl.make_union_flow(parts, space, metadata="positive")
    flow.invariant_probability = True
    cocycle = fl.union_cocycle([_cyclic_cocycle(a) for a in atoms], [1] * len(atoms))

    def f(x):
        comp = np.rint(x[..., 0]).astype(int)
        out = np.zeros(x.shape[:-1])
        for k, a in enumerate(atoms):
            mask = comp == k
            out[mask] = a.g(x[..., 1][mask])
        return out

    def quad(times):
        times = np.asarray(times)
        nodes, weights = [], []
        for k, a in enumerate(atoms):
            shifts = a.speed * times
            cuts = np.mod(np.concatenate([a.g.breaks[None, :], [[0.0]] * np.ones((1, 1))], axis=1)
                          - shifts[:, None], a.period).ravel()
            n1, w1 = step_quadrature(cuts, 0.0, a.period)
            nodes.append(np.column_stack([np.full(n1.size, k), n1]))
            weights.append(a.weight * w1)
        return np.concatenate(nodes), np.concatenate(weights)

    kernel = KernelSpec(alpha, space, flow, f, cocycle=cocycle, label=label, quadrature=quad,
                        info={"atoms": [vars(a) | {"g": repr(a.g)} for a in atoms]})
    return CatalogEntry(label, kernel, "positive", "cyclic flow representation (positive flow)")


def rotation(alpha: float, rate: float = 0.5, f: Optional[StepFunction] = None,
             discrete: bool = False, q: str = "uniform") -> CatalogEntry:
    """Circle rotation with the uniform invariant probability."""
    rate = float(rate)
    entry = cyclic_kernel(alpha, [CyclicAtom(1.0, rate, 1, f or StepFunction([0.0, 1.0], [1.0]))],
                          discrete=discrete,
                          label="rotation" + ("_discrete" if discrete else ""), q=q)
    entry.provenance = "circle rotation, finite invariant measure (positive flow)"
    return entry


# -- Markov chain on path space ---------------------------------------------------


def walk_return_probability(g) -> np.ndarray:
    """P(S_g = 0) for the simple symmetric walk."""
    g = np.abs(np.asarray(g, dtype=float))
    out = np.zeros(g.shape)
    even = np.mod(g, 2) == 0
    ge = g[even]
    out[even] = np.exp(gammaln(ge + 1) - 2 * gammaln(ge / 2 + 1) - ge * np.log(2.0))
    return out


def walk_no_return_survival(n: int) -> np.ndarray:
    """s[k] = P(first return time > k), k = 0..n."""
    k = np.arange(n + 1)
    return walk_return_probability(2 * (k // 2))


def walk_origin_integral(c, t, alpha: float, height: float = 1.0, signed: bool = False,
                         max_times: int = 16) -> float:
    """int |sum_i c_i a_{t_i} h 1{path(t_i) = 0}|^alpha dm, m = sum_x P_x.

    Inclusion-exclusion over the set of times at which the path sits at 0.
    With ``signed`` the sign cocycle is used: between two distinct visits to
    0 the relative sign is a fair coin, independent across gaps.
    """
    ut, inv = np.unique(np.asarray(t, dtype=float), return_inverse=True)
    cc = np.bincount(np.asarray(inv).ravel(), weights=np.asarray(c, dtype=float), minlength=ut.size)
    k = ut.size
    if k > max_times:
        raise ValueError(f"exact walk integral limited to {max_times} distinct times")
    n_sets = 1 << k
    all_in = np.zeros(n_sets)
    csum = np.zeros(n_sets)
    for mask in range(1, n_sets):
        idx = [i for i in range(k) if mask >> i & 1]
        all_in[mask] = np.prod(walk_return_probability(np.diff(ut[idx]))) if len(idx) > 1 else 1.0
        csum[mask] = cc[idx].sum()
    exact = all_in.copy()
    for i in range(k):
        bit = 1 << i
        for mask in range(n_sets):
            if not mask & bit:
                exact[mask] -= exact[mask | bit]
    if signed:
        if k > 10:
            raise ValueError("signed exact walk integral limited to 10 distinct times")
        vals = np.zeros(n_sets)
        for mask in range(1, n_sets):
            idx = [i for i in range(k) if mask >> i & 1]
            signs = _sign_patterns(len(idx))
            vals[mask] = np.mean(np.abs(signs @ cc[idx]) ** alpha)
        return float(np.sum(abs(height) ** alpha * vals[1:] * exact[1:]))
    # the empty set has infinite measure but zero integrand
    return float(np.sum(np.abs(height * csum[1:]) ** alpha * exact[1:]))


def _sign_patterns(j: int) -> np.ndarray:
    """All sign vectors of length j with first entry +1."""
    if j == 1:
        return np.ones((1, 1))
    bits = (np.arange(1 << (j - 1))[:, None] >> np.arange(j - 1)[None, :]) & 1
    return np.column_stack([np.ones(bits.shape[0]), 1 - 2 * bits])


def _walk_window_sampler(height: float, signed: bool):
    """Paths meeting 0 during [0, n), parametrized by first visit + renewals."""

    def sampler(n, n_points, gen):
        surv = walk_no_return_survival(n)
        w = surv[:n]
        total = float(w.sum())
        cdf = np.cumsum(w) / total
        first = np.minimum(np.searchsorted(cdf, gen.random(n_points), side="right"), n - 1)
        sign = np.ones(n_points)
        if signed:
            negative = gen.random(n_points) < 0.5
            sign[negative & (first % 2 == 1)] = -1.0
        neg_surv = -surv
        rows, cols, vals = [], [], []
        current = first.astype(np.int64)
        active = np.arange(n_points)
        while active.size:
            rows.append(active)
            cols.append(current[active])
            vals.append(height * sign[active])
            u = gen.random(active.size)
            tau = np.searchsorted(neg_surv, -u, side="left")
            if signed:
                flip = gen.random(active.size) < 0.5
                sign[active[flip]] *= -1.0
            current[active] = current[active] + tau
            active = active[current[active] < n]
        return total, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    return sampler


def markov_chain_kernel(alpha: float, height: float = 1.0, cocycle: str = "trivial",
                        rho: float = 0.8, horizon: int = 2**17) -> CatalogEntry:
    """Simple symmetric walk path space, f = h * 1{path(0) = 0}."""
    model = SimpleRandomWalk(horizon=horizon)
    space = fl.walk_path_space(model, rho)
    flow = fl.make_path_shift_flow(model, space)
    signed = cocycle == "sign"
    coc = fl.walk_sign_cocycle(model) if signed else fl.trivial_cocycle()

    def f(x):
        pos = x[..., 1] + model.values(x[..., 0], x[..., 2])
        return np.where(pos == 0, height, 0.0)

    def scale_fn(c, t):
        return walk_origin_integral(c, t, alpha, height, signed)

    name = "markov_chain" + ("_sign" if signed else "")
    kernel = KernelSpec(alpha, space, flow, f, cocycle=coc, label=name, scale_fn=scale_fn,
                        window_sampler=_walk_window_sampler(height, signed),
                        info={"chain": "simple symmetric walk on Z", "rho": rho})
    return CatalogEntry(name, kernel, "conservative_null",
                        "null-recurrent Markov chain path space, left shift")


# -- stationary increments ---------------------------------------------------------


def _pair_profile(phi: StepFunction, c1: float, c2: float, alpha: float):
    """d -> int |c1 phi(u) + c2 phi(u + d)|^alpha du (piecewise linear in d)."""

    def g(d):
        a, b = phi.support
        cuts = np.concatenate([phi.breaks, phi.breaks - d])
        nodes, w = step_quadrature(cuts, min(a, a - d), max(b, b - d))
        return float(np.sum(w * np.abs(c1 * phi(nodes) + c2 * phi(nodes + d)) ** alpha))

    return g


def _gaussian_mean_piecewise_linear(g, kinks, mu: float, sd: float) -> float:
    """E g(D), D ~ N(mu, sd^2), for g linear between ``kinks`` and constant outside."""
    k = np.asarray(kinks, dtype=float)
    gk = np.array([g(x) for x in k])
    z = (k - mu) / sd
    cdf = stats.norm.cdf(z)
    pdf = stats.norm.pdf(z)
    total = gk[0] * cdf[0] + gk[-1] * (1.0 - cdf[-1])
    slope = np.diff(gk) / np.diff(k)
    mass = np.diff(cdf)
    # E[D 1{k_i < D < k_i+1}] = mu * mass + sd * (pdf_i - pdf_i+1)
    first = mu * mass + sd * (pdf[:-1] - pdf[1:])
    total += np.sum(gk[:-1] * mass + slope * (first - k[:-1] * mass))
    return float(total)


def _increment_integral(model: PathModel, phi: StepFunction, alpha: float, qmc_points: int = 2**12):
    base = phi.power_integral(alpha)
    kinks = np.unique((phi.breaks[:, None] - phi.breaks[None, :]).ravel())

    def scale_fn(c, t):
        ut, inv = np.unique(np.asarray(t, dtype=float), return_inverse=True)
        cc = np.bincount(np.asarray(inv).ravel(), weights=c, minlength=ut.size)
        if ut.size == 1:
            return abs(cc[0]) ** alpha * base
        mu = model.mean(ut)
        cov = model.covariance(ut)
        # differences relative to the first time
        A = np.eye(ut.size)[1:] - np.eye(ut.size)[:1]
        dmu = A @ mu
        dcov = A @ cov @ A.T
        if ut.size == 2:
            g = _pair_profile(phi, cc[0], cc[1], alpha)
            v = float(dcov[0, 0])
            if v <= 1e-300:
                return g(float(dmu[0]))
            return _gaussian_mean_piecewise_linear(g, kinks, float(dmu[0]), np.sqrt(v))
        evals, evecs = np.linalg.eigh(dcov)
        root = evecs * np.sqrt(np.clip(evals, 0, None))
        sob = stats.qmc.Sobol(ut.size - 1, scramble=True, seed=12345)
        z = stats.norm.ppf(np.clip(sob.random(qmc_points), 1e-12, 1 - 1e-12))
        diffs = dmu + z @ root.T
        a, b = phi.support
        acc = 0.0
        for d in diffs:
            shifts = np.concatenate([[0.0], d])
            cuts = (phi.breaks[None, :] - shifts[:, None]).ravel()
            nodes, w = step_quadrature(cuts, a - shifts.max(), b - shifts.min())
            vals = phi(nodes[:, None] + shifts[None, :]) @ cc
            acc += np.sum(w * np.abs(vals) ** alpha)
        return acc / qmc_points

    return scale_fn


def _increment_window_sampler(model: PathModel, phi: StepFunction, alpha: float):
    """Series points for times 0..n-1: Y from P_1, z uniform on the reachable band.

    The band [a - max Y, b - min Y) holds every z with phi(Y(t) + z) != 0
    for some t; dm/dq is its length, folded into the returned values.
    """
    a, b = phi.support

    def sampler(n, n_points, gen):
        y = model.sample_grid(n, gen, n_points)
        lo = a - y.max(axis=1)
        hi = b - y.min(axis=1)
        z = lo + (hi - lo) * gen.random(n_points)
        vals = phi(y + z[:, None])
        rows, cols = np.nonzero(vals)
        scale = (hi - lo) ** (1.0 / alpha)
        return 1.0, rows, cols, vals[rows, cols] * scale[rows]

    return sampler


_INCREMENT_TRUTH = {
    "brownian_motion": "conservative_null",
    "fbm": "conservative_null",
    "drift_brownian": "dissipative",
    "stationary_gaussian": "positive",
    "zero": "positive",
}


def stationary_increment_kernel(alpha: float, y_model="brownian_motion",
                                varphi: Optional[StepFunction] = None, q: str = "gaussian",
                                horizon: float = 1e4, dt: float = 0.05,
                                name: Optional[str] = None) -> CatalogEntry:
    """X(t) = int int varphi(Y(t, w) + z) M(dw, dz), m = P_1 x Leb."""
    varphi = _as_step(varphi)
    model = make_path_model(y_model, horizon=horizon, dt=dt)
    family = model.name.split("(")[0]
    truth = _INCREMENT_TRUTH.get(family)
    if truth is None:
        raise ValueError(f"unsupported Y model {y_model!r}")
    space = fl.increment_path_space(model, q)
    flow = fl.make_path_shift_flow(model, space)
    flow.metadata = truth

    def f(x):
        return varphi(model.values(x[..., 0], x[..., 2]) + x[..., 1])

    label = name or f"stationary_increments[{model.name}]"
    kernel = KernelSpec(alpha, space, flow, f, label=label,
                        scale_fn=_increment_integral(model, varphi, alpha),
                        window_sampler=_increment_window_sampler(model, varphi, alpha),
                        info={"varphi": repr(varphi), **model.describe()})
    prov = {
        "conservative_null": "stationary-increment construction, |Y(t)| -> inf in probability",
        "dissipative": "stationary-increment construction, |Y(t)| -> inf almost surely",
        "positive": "stationary-increment construction with stationary Y",
    }[truth]
    return CatalogEntry(label, kernel, truth, prov)


# -- doubly stationary / sub-stable -------------------------------------------------


def _positive_stable_moment(p: float, index: float) -> float:
    """E W^p for E exp(-sW) = exp(-s^index), p < index."""
    from scipy.special import gamma

    return float(gamma(1.0 - p / index) / gamma(1.0 - p))


def doubly_stationary_kernel(alpha: float, r: Callable = None, beta: float = 2.0,
                             horizon: float = 1e4, dt: float = 0.05,
                             r_label: str = "exp(-|t|)", name: str = "sub_gaussian",
                             q: str = "P") -> CatalogEntry:
    """int B(t) dM' over a probability space, B stationary (sub-)Gaussian.

    For beta < 2, B(t) = V^(1/2) G(t) with V positive (beta/2)-stable, which
    is a stationary symmetric beta-stable process.  f is normalized so that
    ||X(0)||_alpha = 1.
    """
    alpha = check_alpha(alpha)
    if not (alpha < beta <= 2.0):
        raise ValueError("need alpha < beta <= 2")
    r = r or exp_covariance()
    model = StationaryGaussian(r, horizon=horizon, dt=dt, label=r_label)
    space = fl.probability_path_space(model)
    flow = fl.make_path_shift_flow(model, space)
    if q == "tilted":
        space = fl.tilted_space(space, fl.seed_parity_score())
    elif q != "P":
        raise ValueError(f"unknown sampler {q!r}; use 'P' or 'tilted'")
    r0 = float(r(np.array([0.0]))[0])
    if r0 <= 0:
        raise ValueError("r(0) must be positive")
    moment = abs_moment_gaussian(alpha) * r0 ** (alpha / 2)
    if beta < 2.0:
        moment *= _positive_stable_moment(alpha / 2, beta / 2)
    kappa = moment ** (-1.0 / alpha)

    def mixing(seeds):
        if beta == 2.0:
            return np.ones(np.shape(seeds))
        out = np.empty(np.shape(seeds))
        for i, s in np.ndenumerate(seeds):
            ss = np.random.SeedSequence(entropy=int(s), spawn_key=(0xBE7A,))
            out[i] = sample_positive_stable(beta / 2, np.random.default_rng(ss)) ** 0.5
        return out

    def f(x):
        return kappa * mixing(x[..., 0]) * model.values(x[..., 0], x[..., 1])

    def scale_fn(c, t):
        cov = model.covariance(np.asarray(t, dtype=float))
        v = max(float(c @ cov @ c), 0.0)
        return (v / r0) ** (alpha / 2)

    def direct(times, rng, w_override=None, n_paths=1):
        from .simulate import simulate_substable

        return simulate_substable(alpha, beta, r, times, rng, w_override=w_override,
                                  n_paths=n_paths)

    kernel = KernelSpec(alpha, space, flow, f, label=name, scale_fn=scale_fn,
                        direct_simulator=direct,
                        info={"beta": beta, "r": r_label, "kappa": kappa})
    return CatalogEntry(name, kernel, "positive",
                        "doubly stationary / sub-stable representation (positive flow)")


def sub_stable_entry(alpha: float, beta: float = 2.0, r: Callable = None, **kw) -> CatalogEntry:
    name = kw.pop("name", "sub_gaussian" if beta == 2.0 else f"sub_stable({beta:g})")
    return doubly_stationary_kernel(alpha, r, beta, name=name, **kw)


# -- unions ------------------------------------------------------------------------


def union_entry(entries, probs=None, name: str = "mixture") -> CatalogEntry:
    """Disjoint union of catalog kernels (independent sum of processes)."""
    kernels = [e.kernel for e in entries]
    alpha = kernels[0].alpha
    if any(k.alpha != alpha for k in kernels):
        raise ValueError("all components must share alpha")
    dims = [k.dim for k in kernels]
    space = fl.disjoint_union([(k.space, 1.0) for k in kernels], probs, label="union")
    flow = fl.make_union_flow([k.flow for k in kernels], space)
    cocycle = fl.union_cocycle([k.cocycle for k in kernels], dims)

    def f(x):
        comp = np.rint(x[..., 0]).astype(int)
        out = np.zeros(x.shape[:-1])
        for j, k in enumerate(kernels):
            mask = comp == j
            if np.any(mask):
                out[mask] = k.f(x[mask][:, 1 : 1 + k.dim])
        return out

    quad = None
    if all(k.quadrature is not None for k in kernels):
        width = space.dim

        def quad(times):
            nodes, weights = [], []
            for j, k in enumerate(kernels):
                n1, w1 = k.quadrature(times)
                block = np.zeros((n1.shape[0], width))
                block[:, 0] = j
                block[:, 1 : 1 + k.dim] = n1
                nodes.append(block)
                weights.append(w1)
            return np.concatenate(nodes), np.concatenate(weights)

    # disjoint supports: norms add; components built by decompose drop this
    # and fall back to the quadrature
    def scale_fn(c, t):
        return sum(k.combination_integral(c, t) for k in kernels)

    kernel = KernelSpec(alpha, space, flow, f, cocycle=cocycle, label=name, quadrature=quad,
                        scale_fn=scale_fn,
                        info={"components": [k.label for k in kernels]})
    return CatalogEntry(name, kernel, "mixed", "disjoint union of catalog components",
                        notes={"component_truths": [e.ground_truth for e in entries],
                               "component_norms_alpha": [k.combination_integral([1.0], [0.0])
                                                         for k in kernels]})


def mixture_rotation_translation(alpha: float, discrete: bool = True, q: str = "gaussian",
                                 probs=None) -> CatalogEntry:
    """50/50 union of a rotation (positive) and a moving average (dissipative)."""
    parts = [rotation(alpha, 2 ** -0.5, discrete=discrete),
             moving_average(alpha, discrete=discrete, q=q)]
    return union_entry(parts, probs, name="mixture_rotation_translation")


def constant_kernel(alpha: float, value: float = 1.0, discrete: bool = False) -> CatalogEntry:
    """f_t = value on [0, 1) under the identity flow, so X(t) = X(0) for all t."""
    space = fl.interval_space(0.0, 1.0)
    flow = fl.make_identity_flow(space, discrete=discrete)
    value = float(value)

    def f(x):
        return np.full(x.shape[:-1], value)

    def scale_fn(c, t):
        return abs(float(np.sum(c)) * value) ** alpha

    kernel = KernelSpec(alpha, space, flow, f, label="constant", scale_fn=scale_fn,
                        info={"value": value})
    return CatalogEntry("constant", kernel, "positive", "identity flow on a probability space")


# -- registry -----------------------------------------------------------------------

CATALOG: dict = {
    "moving_average": lambda a, **kw: moving_average(a, **kw),
    "moving_average_discrete": lambda a, **kw: moving_average(a, discrete=True, **kw),
    "mixed_moving_average": lambda a, **kw: mixed_moving_average(a, **kw),
    "rotation": lambda a, **kw: rotation(a, **kw),
    "rotation_discrete": lambda a, **kw: rotation(a, 2 ** -0.5, discrete=True, **kw),
    "cyclic": lambda a, **kw: cyclic_kernel(a, [CyclicAtom(1.0, 1.0, -1),
                                                CyclicAtom(2.0, np.sqrt(2.0), 1,
                                                           StepFunction([0, 0.5, 2.0], [1.0, 0.5]),
                                                           0.5)], **kw),
    "markov_chain": lambda a, **kw: markov_chain_kernel(a, **kw),
    "markov_chain_sign": lambda a, **kw: markov_chain_kernel(a, cocycle="sign", **kw),
    "stationary_increments_bm": lambda a, **kw: stationary_increment_kernel(
        a, "brownian_motion", name="stationary_increments_bm", **kw),
    "stationary_increments_fbm": lambda a, **kw: stationary_increment_kernel(
        a, ("fbm", kw.pop("hurst", 0.7)), name="stationary_increments_fbm", **kw),
    "stationary_increments_drift": lambda a, **kw: stationary_increment_kernel(
        a, ("drift_brownian", kw.pop("drift", 1.0)), name="stationary_increments_drift", **kw),
    "stationary_increments_stationary": lambda a, **kw: stationary_increment_kernel(
        a, "stationary_gaussian", name="stationary_increments_stationary", **kw),
    "sub_gaussian": lambda a, **kw: sub_stable_entry(a, 2.0, **kw),
    "mixture": lambda a, **kw: mixture_rotation_translation(a, **kw),
}


# an equivalent sampler for every entry, used by representation-invariance checks
ALTERNATIVE_Q: dict = {
    "moving_average": {"q": "cauchy"},
    "moving_average_discrete": {"q": "student3"},
    "mixed_moving_average": {"q": "logistic"},
    "rotation": {"q": "tilted"},
    "rotation_discrete": {"q": "tilted"},
    "cyclic": {"q": "tilted"},
    "markov_chain": {"rho": 0.5},
    "markov_chain_sign": {"rho": 0.5},
    "stationary_increments_bm": {"q": "cauchy"},
    "stationary_increments_fbm": {"q": "cauchy"},
    "stationary_increments_drift": {"q": "cauchy"},
    "stationary_increments_stationary": {"q": "cauchy"},
    "sub_gaussian": {"q": "tilted"},
    "mixture": {"q": "cauchy", "probs": [0.3, 0.7]},
}


def get_entry(name: str, alpha: float, **kw) -> CatalogEntry:
    try:
        ctor = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {sorted(CATALOG)}") from None
    entry = ctor(alpha, **kw)
    entry.name = name
    return entry


def list_catalog(alpha: float = 1.5) -> list:
    rows = []
    for name in CATALOG:
        e = get_entry(name, alpha)
        rows.append({"name": name, "ground_truth": e.ground_truth, "provenance": e.provenance,
                     "time_domain": e.kernel.time_domain.kind})
    return rows

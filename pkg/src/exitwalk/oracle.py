"""Independent ground-truth machinery and statistical test helpers.

Exit-side probabilities come from the scale function (s' proportional to
exp(-2 * integral of the drift)), mean exit times from the Green-function
representation of 0.5 u'' + mu0 u' = -1 with absorbing boundary conditions,
both by nested adaptive Simpson quadrature.  Scale integrands are evaluated
with a running max-shift in log space because exp(-2A) spans hundreds of
orders of magnitude on wide intervals, and every piece of the Green formula
is an integral of a positive integrand, so nothing is obtained by differencing
near-equal scale values.  An Euler-Maruyama scheme with its documented
O(sqrt(dt)) boundary bias serves as a cross-check of a different kind, and
small Kolmogorov-Smirnov / z-score / chi-square helpers back the
distributional assertions used throughout the test suite.
"""

from __future__ import annotations

import bisect
import math

import numpy as np

from .errors import ConvergenceError
from .model import DiffusionModel, lamperti_forward
from .quadrature import QuadratureResult, adaptive_simpson  # noqa: F401  (re-export)
from .rng import RandomStream

_PROBES = 257
_MAX_EXPONENT = 700.0


def _integrate_rel(f, lo: float, hi: float, rel: float) -> float:
    """Adaptive Simpson with tolerance scaled to the integrand's probed magnitude."""
    if lo == hi:
        return 0.0
    n = 65
    step = (hi - lo) / (n - 1)
    peak = max(abs(f(lo + i * step)) for i in range(n))
    tol = max(peak * abs(hi - lo) * rel, 1e-320)
    return adaptive_simpson(f, lo, hi, tol).value


class _Cumulative:
    """Incremental antiderivative of f from a floating anchor.

    Each new query integrates from the nearest previously-resolved point, so
    repeated nearby evaluations (as adaptive outer quadratures produce) stay
    cheap and quadrature error does not accumulate over long spans.
    """

    def __init__(self, f, rel: float = 1e-13):
        self.f = f
        self.rel = rel
        self.keys: list[float] = []
        self.vals: list[float] = []

    def __call__(self, y: float) -> float:
        keys = self.keys
        if not keys:
            keys.append(y)
            self.vals.append(0.0)
            return 0.0
        i = bisect.bisect_left(keys, y)
        if i < len(keys) and keys[i] == y:
            return self.vals[i]
        if i == 0:
            j = 0
        elif i == len(keys):
            j = i - 1
        else:
            j = i if keys[i] - y < y - keys[i - 1] else i - 1
        base_y, base_v = keys[j], self.vals[j]
        if base_y == y:
            return base_v
        # segments are short (nearest anchor), so two endpoint probes set the scale
        peak = max(abs(self.f(base_y)), abs(self.f(y)), 1e-300)
        tol = max(peak * abs(y - base_y) * self.rel, 1e-320)
        val = base_v + adaptive_simpson(self.f, base_y, y, tol).value
        if len(keys) < 1 << 18:
            keys.insert(i, y)
            self.vals.insert(i, val)
        return val


def _log_scale_derivative(model: DiffusionModel, use_transform: bool):
    """h with s'(y) = exp(h(y)), in transformed or original coordinates."""
    if use_transform:
        anti = model.mu0_antiderivative
        return lambda y: -2.0 * anti(y)

    drift = model.drift
    diff = model.diffusion

    def ratio(y: float) -> float:
        s = diff(y)
        return drift(y) / (s * s)

    cum = _Cumulative(ratio)
    return lambda y: -2.0 * cum(y)


def _max_shift(h, lo: float, hi: float) -> float:
    step = (hi - lo) / (_PROBES - 1)
    return max(h(lo + i * step) for i in range(_PROBES))


def exit_probability(
    model: DiffusionModel,
    x: float,
    a: float,
    b: float,
    *,
    use_transform: bool = True,
    rel: float = 1e-11,
) -> float:
    """P(the diffusion from x leaves (a, b) at b), by scale-function quadrature."""
    if not (a < x < b):
        raise ValueError(f"need a < x < b, got a={a!r}, x={x!r}, b={b!r}")
    if use_transform:
        lo, mid, hi = (lamperti_forward(model, v) for v in (a, x, b))
    else:
        lo, mid, hi = a, x, b
    h = _log_scale_derivative(model, use_transform)
    c = _max_shift(h, lo, hi)
    f = lambda y: math.exp(h(y) - c)
    i0 = _integrate_rel(f, lo, mid, rel)
    i1 = _integrate_rel(f, mid, hi, rel)
    return i0 / (i0 + i1)


def mean_exit_time(
    model: DiffusionModel,
    x: float,
    a: float,
    b: float,
    *,
    use_transform: bool = True,
    rel: float = 1e-10,
) -> float:
    """E[first exit time of (a, b) from x], by the Green-function double integral.

    With P0, P1 the scale masses left/right of x and J1, J2 the nested
    speed-measure integrals against the inner scale masses,

        u = 2 (P1*J1 + P0*J2) / (P0 + P1).
    """
    if not (a < x < b):
        raise ValueError(f"need a < x < b, got a={a!r}, x={x!r}, b={b!r}")
    if use_transform:
        lo, mid, hi = (lamperti_forward(model, v) for v in (a, x, b))
    else:
        lo, mid, hi = a, x, b
    h = _log_scale_derivative(model, use_transform)
    c = _max_shift(h, lo, hi)

    if use_transform:
        speed_log = lambda y: -h(y) + c
    else:
        diff = model.diffusion

        def speed_log(y: float) -> float:
            s = diff(y)
            return -h(y) + c - math.log(s * s)

    step = (hi - lo) / (_PROBES - 1)
    peak = max(speed_log(lo + i * step) for i in range(_PROBES))
    if peak > _MAX_EXPONENT:
        raise ConvergenceError(f"speed measure overflows (max exponent {peak:.1f}); interval too wide")

    scale = lambda y: math.exp(h(y) - c)
    speed = lambda y: math.exp(speed_log(y))
    inner_rel = rel * 1e-2

    p0 = _integrate_rel(scale, lo, mid, inner_rel)
    p1 = _integrate_rel(scale, mid, hi, inner_rel)

    def j1_integrand(y: float) -> float:
        return _integrate_rel(scale, lo, y, inner_rel) * speed(y)

    def j2_integrand(y: float) -> float:
        return _integrate_rel(scale, y, hi, inner_rel) * speed(y)

    j1 = _integrate_rel(j1_integrand, lo, mid, rel)
    j2 = _integrate_rel(j2_integrand, mid, hi, rel)
    return 2.0 * (p1 * j1 + p0 * j2) / (p0 + p1)


# ---------------------------------------------------------------------------
# Euler-Maruyama reference scheme (biased; cross-check only)
# ---------------------------------------------------------------------------


def euler_exit(rng: RandomStream, model: DiffusionModel, x: float, a: float, b: float, dt: float):
    """One Euler path until the first grid point outside [a, b].

    Carries the usual O(sqrt(dt)) boundary-detection bias; the exit location
    is reported as the crossed endpoint.
    """
    if dt <= 0.0:
        raise ValueError(f"need dt > 0, got {dt!r}")
    drift = model.drift
    diff = model.diffusion
    sq = math.sqrt(dt)
    pos = x
    steps = 0
    while True:
        pos = pos + drift(pos) * dt + diff(pos) * sq * rng.normal()
        steps += 1
        if pos < a:
            return steps * dt, a
        if pos > b:
            return steps * dt, b


def euler_exit_batch(
    rng: RandomStream,
    model: DiffusionModel,
    x: float,
    a: float,
    b: float,
    dt: float,
    n: int,
    t_max: float = math.inf,
):
    """Vectorised Euler paths; paths alive at t_max get time t_max, location nan."""
    if dt <= 0.0:
        raise ValueError(f"need dt > 0, got {dt!r}")
    drift = model.drift_vec if model.drift_vec is not None else np.vectorize(model.drift)
    diff = model.diffusion_vec if model.diffusion_vec is not None else np.vectorize(model.diffusion)
    sq = math.sqrt(dt)
    pos = np.full(n, float(x))
    alive = np.arange(n)
    times = np.full(n, float(t_max))
    locs = np.full(n, math.nan)
    step = 0
    max_steps = math.inf if math.isinf(t_max) else int(math.ceil(t_max / dt - 1e-12))
    while alive.size and step < max_steps:
        step += 1
        pos = pos + drift(pos) * dt + diff(pos) * sq * rng.normal_array(alive.size)
        below = pos < a
        gone = below | (pos > b)
        if gone.any():
            idx = alive[gone]
            times[idx] = step * dt
            locs[idx] = np.where(below[gone], a, b)
            keep = ~gone
            alive = alive[keep]
            pos = pos[keep]
    return times, locs


# ---------------------------------------------------------------------------
# statistical helpers
# ---------------------------------------------------------------------------


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic survival function of the Kolmogorov statistic."""
    if lam <= 0.0:
        return 1.0
    s = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        s += term if k % 2 == 1 else -term
        if term < 1e-18:
            break
    return min(max(2.0 * s, 0.0), 1.0)


def ks_2sample(sample_a, sample_b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value (with the small-sample factor)."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise ValueError("samples must be nonempty")
    allv = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, allv, side="right") / na
    cdf_b = np.searchsorted(b, allv, side="right") / nb
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(na * nb / (na + nb))
    return d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


def ks_1sample(sample, cdf) -> tuple[float, float]:
    """One-sample KS distance to a CDF callable, with asymptotic p-value."""
    xs = np.sort(np.asarray(sample, dtype=float))
    n = len(xs)
    if n == 0:
        raise ValueError("sample must be nonempty")
    f = np.array([cdf(v) for v in xs])
    lo = np.max(np.abs(f - np.arange(0, n) / n))
    hi = np.max(np.abs(f - np.arange(1, n + 1) / n))
    d = float(max(lo, hi))
    en = math.sqrt(n)
    return d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample critical distance sqrt(-ln(alpha/2)/2) / sqrt(n)."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def binomial_z(successes: int, n: int, p0: float) -> float:
    """Exact-variance z-score of a success count against probability p0."""
    if n <= 0:
        raise ValueError("need n > 0")
    var = p0 * (1.0 - p0)
    if var == 0.0:
        return 0.0 if successes == round(n * p0) else math.inf
    return (successes / n - p0) / math.sqrt(var / n)


def _regularized_gamma_q(s: float, x: float) -> float:
    """Q(s, x) = Gamma(s, x)/Gamma(s) by lower series / Lentz continued fraction."""
    if x < 0.0 or s <= 0.0:
        raise ValueError("need x >= 0 and s > 0")
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        term = 1.0 / s
        total = term
        k = s
        for _ in range(10_000):
            k += 1.0
            term *= x / k
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        p = total * math.exp(-x + s * math.log(x) - math.lgamma(s))
        return min(max(1.0 - p, 0.0), 1.0)
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for i in range(1, 10_000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    q = f * math.exp(-x + s * math.log(x) - math.lgamma(s))
    return min(max(q, 0.0), 1.0)


def chi_square_test(observed, probs) -> tuple[float, float]:
    """Pearson chi-square of observed counts against cell probabilities."""
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(probs, dtype=float)
    if obs.shape != p.shape or obs.ndim != 1:
        raise ValueError("observed and probs must be 1-d and matched")
    n = obs.sum()
    exp = n * p
    if np.any(exp <= 0.0):
        raise ValueError("all expected counts must be positive")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    return stat, _regularized_gamma_q(dof / 2.0, stat / 2.0)

"""Capacity of the uniformly quantized channel.

Closed forms for the wrapping quantizer (any noise, and uniform noise),
Blahut-Arimoto for fixed input supports, a multi-start point/probability
search for the saturation quantizer, and the lattice-input lower bound
that relates the two modes under weak gaussian noise.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .info import entropy, mutual_information, row_entropies, _xlog2x, TINY
from .quantizer import (
    GaussianNoise,
    InputDistribution,
    Mode,
    QuantizerSpec,
    TransitionMatrix,
    UniformNoise,
    _prob_table,
    norm_interval,
    norm_sf,
    transition_matrix,
)

TAU_DEFAULT = 0.64
TAIL_TOLERANCE = 1e-3
INV_PHI = (math.sqrt(5) - 1) / 2


class Method(enum.Enum):
    CLOSED_FORM_WRAPPING = "closed_form_wrapping"
    CLOSED_FORM_UNIFORM_NOISE = "closed_form_uniform_noise"
    BLAHUT_ARIMOTO = "blahut_arimoto"
    SATURATION_SEARCH = "saturation_search"
    SATURATION_LOWER_BOUND = "saturation_lower_bound"


@dataclass(frozen=True)
class CapacityResult:
    capacity_bits: float
    input: InputDistribution
    method: Method
    levels: int
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (-1e-12 <= self.capacity_bits <= math.log2(self.levels) + 1e-9):
            raise ValueError(f"capacity {self.capacity_bits!r} outside [0, log2 {self.levels}]")

    @property
    def converged(self) -> bool:
        return self.diagnostics.get("converged", True)


@dataclass(frozen=True)
class WeakNoiseCheck:
    ratio: float
    tail: float
    is_weak: bool
    tau: float = TAU_DEFAULT
    tail_tolerance: float = TAIL_TOLERANCE


def golden_section_min(f, a: float, b: float, tol: float, max_iter: int = 200):
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    The endpoints are evaluated too and win ties, smaller ``x`` first.
    """
    fa, fb = f(a), f(b)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    lo, hi = a, b
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    xm, fm = (x1, f1) if f1 <= f2 else (x2, f2)
    best = min([(fa, 0, a), (fm, 1, xm), (fb, 2, b)])
    return best[2], best[0]


# -- wrapping quantizer ------------------------------------------------------

def _require(spec: QuantizerSpec, mode: Mode):
    if spec.mode is not mode:
        raise ValueError(f"expected a {mode.value} quantizer, got {spec.mode.value}")


def _g(spec, noise, w) -> np.ndarray:
    return row_entropies(_prob_table(spec, noise, w))


def conditional_entropy_profile(spec: QuantizerSpec, noise, grid: int = 4096):
    """``(w, g(w))`` on an even grid over ``[0, p]``, g = H(yhat | x = w)."""
    _require(spec, Mode.WRAPPING)
    if grid < 2:
        raise ValueError("grid must be >= 2")
    w = np.linspace(0.0, spec.resolution, grid)
    return w, _g(spec, noise, w)


def minimize_conditional_entropy(spec: QuantizerSpec, noise, grid: int = 4096,
                                 tie_tol: float = 1e-12):
    """Global minimiser ``u0 in [0, p]`` of g and the value ``g(u0)``."""
    w, g = conditional_entropy_profile(spec, noise, grid)
    j = int(np.flatnonzero(g <= g.min() + tie_tol)[0])
    lo, hi = w[max(j - 1, 0)], w[min(j + 1, grid - 1)]

    def f(x):
        return float(_g(spec, noise, x))

    x, fx = golden_section_min(f, lo, hi, 1e-10 * spec.resolution)
    if fx > g[j] or (fx > g[j] - tie_tol and w[j] <= x):
        x, fx = w[j], float(g[j])
    return float(x), float(fx)


def wrapping_capacity(spec: QuantizerSpec, noise, grid: int = 4096) -> CapacityResult:
    """log2 N - min g, achieved by N equiprobable points spaced p apart."""
    _require(spec, Mode.WRAPPING)
    u0, g0 = minimize_conditional_entropy(spec, noise, grid)
    pts = u0 + spec.outputs
    n = spec.levels
    inp = InputDistribution.for_quantizer(spec, pts, np.full(n, 1.0 / n))
    cap = max(0.0, math.log2(n) - g0)
    return CapacityResult(cap, inp, Method.CLOSED_FORM_WRAPPING, n,
                          {"u0": u0, "g_u0": g0, "grid": grid})


def uniform_noise_entropy(alpha: float) -> float:
    """Entropy of the best-aligned output spread of uniform noise of width alpha*p."""
    if alpha <= 1:
        return 0.0
    whole = math.floor(alpha)
    probs = [1.0 / alpha] * whole
    rem = (alpha - whole) / alpha
    if rem > 0:
        probs.append(rem)
    probs = np.asarray(probs)
    return entropy(probs / probs.sum())


def uniform_noise_capacity(spec: QuantizerSpec, alpha: float) -> CapacityResult:
    """Closed-form capacity under noise uniform on ``[-alpha*p/2, alpha*p/2]``.

    The optimal inputs are the output lattice shifted so that one edge of
    the noise support sits on a decision boundary: ``+/-(alpha-1)*p/2``.
    """
    _require(spec, Mode.WRAPPING)
    n, p = spec.levels, spec.resolution
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha > n:
        raise ValueError(f"alpha={alpha} > N={n} is not supported")
    shift = 0.0 if alpha <= 1 else 0.5 * (alpha - 1) * p
    h_v = uniform_noise_entropy(alpha)
    inp = InputDistribution.for_quantizer(spec, spec.outputs + shift, np.full(n, 1.0 / n))
    alt = np.mod(spec.outputs - shift, spec.period)
    return CapacityResult(max(0.0, math.log2(n) - h_v), inp,
                          Method.CLOSED_FORM_UNIFORM_NOISE, n,
                          {"alpha": alpha, "H_v": h_v, "shift": shift,
                           "alternative_points": alt.tolist()})


# -- Blahut-Arimoto ----------------------------------------------------------

def _divergences(rows: np.ndarray, q: np.ndarray, neg_h=None, support=None) -> np.ndarray:
    """D(W_j || qW) in bits for every row j."""
    if neg_h is None:
        neg_h = _xlog2x(rows).sum(axis=1)
        support = np.where(rows > TINY, rows, 0.0)
    logr = np.log2(np.maximum(q @ rows, TINY))
    return neg_h - support @ logr


def blahut_arimoto(tm, tol: float = 1e-9, max_iters: int = 100_000, q0=None) -> CapacityResult:
    """Capacity of a finite channel over its fixed input support.

    Stops once ``max_j D(W_j||r) - I(q) < tol``; the bracket contains the
    capacity. Non-convergence is reported in ``diagnostics['converged']``.
    """
    if not isinstance(tm, TransitionMatrix):
        tm = TransitionMatrix.from_rows(tm)
    if not tol > 0:
        raise ValueError("tol must be positive")
    rows = tm.rows
    m = rows.shape[0]
    q = np.full(m, 1.0 / m) if q0 is None else np.asarray(q0, float) / np.sum(q0)
    neg_h = _xlog2x(rows).sum(axis=1)
    support = np.where(rows > TINY, rows, 0.0)
    lower_seq = []
    converged = False
    lower = upper = 0.0
    for it in range(1, max_iters + 1):
        d = _divergences(rows, q, neg_h, support)
        lower = float(q @ d)
        upper = float(d.max())
        lower_seq.append(lower)
        if upper - lower < tol:
            converged = True
            break
        q = q * np.exp2(d - upper)
        q /= q.sum()
    q = q / q.sum()
    mi = mutual_information(rows, q)
    return CapacityResult(mi, InputDistribution(tm.inputs, q), Method.BLAHUT_ARIMOTO,
                          rows.shape[1],
                          {"iterations": it, "upper_bits": upper, "lower_bits": lower,
                           "bracket": upper - lower, "converged": converged,
                           "lower_sequence": lower_seq})


# -- saturation quantizer ----------------------------------------------------

def weak_noise_check(spec: QuantizerSpec, noise: GaussianNoise, tau: float = TAU_DEFAULT,
                     tail_tolerance: float = TAIL_TOLERANCE) -> WeakNoiseCheck:
    if not isinstance(noise, GaussianNoise):
        raise TypeError("the weak-noise conditions are defined for gaussian noise")
    ratio = noise.sigma / spec.resolution
    tail = float(2 * norm_sf(1.5 * spec.resolution / noise.sigma))
    return WeakNoiseCheck(ratio, tail, ratio <= tau and tail <= tail_tolerance,
                          tau, tail_tolerance)


def saturation_lower_bound(spec: QuantizerSpec, noise: GaussianNoise) -> CapacityResult:
    """Mutual information of the equiprobable lattice input under saturation,
    assuming noise never moves the output by more than one level."""
    _require(spec, Mode.SATURATION)
    check = weak_noise_check(spec, noise)
    if not check.is_weak:
        warnings.warn(f"noise is not weak (sigma/p={check.ratio:.3g}, tail={check.tail:.3g})",
                      stacklevel=2)
    n = spec.levels
    inner = float(norm_interval(-0.5 * spec.resolution / noise.sigma,
                                0.5 * spec.resolution / noise.sigma))
    half_out = 0.5 * (1.0 - inner)
    h_v = entropy(np.array([inner, half_out, half_out]))
    h_u = entropy(np.array([inner + half_out, half_out]))
    cap = math.log2(n) - (n - 2) / n * h_v - 2 / n * h_u
    inp = InputDistribution.for_quantizer(spec, spec.outputs, np.full(n, 1.0 / n))
    return CapacityResult(max(0.0, cap), inp, Method.SATURATION_LOWER_BOUND, n,
                          {"H_v": h_v, "H_u": h_u, "weak": check})


def _mi_rows(rows, q):
    out = q @ rows
    return float(-_xlog2x(out).sum() - q @ row_entropies(rows))


def _refine_points(spec, noise, x, q, lo, hi, tol):
    """One sweep of per-point golden-section moves that never lowers I."""
    rows = _prob_table(spec, noise, x)
    p = spec.resolution
    for j in np.flatnonzero(q > 1e-12):
        others = q @ rows - q[j] * rows[j]
        h_others = q @ row_entropies(rows) - q[j] * row_entropies(rows[j])

        def neg_mi(t, j=j, others=others, h_others=h_others):
            r = _prob_table(spec, noise, t)
            out = others + q[j] * r
            return float(_xlog2x(out).sum() + h_others + q[j] * row_entropies(r))

        a, b = max(lo, x[j] - p / 2), min(hi, x[j] + p / 2)
        cur = neg_mi(x[j])
        t, ft = golden_section_min(neg_mi, a, b, tol)
        if ft < cur:
            x[j] = t
            rows[j] = _prob_table(spec, noise, t)
    return x, rows


def _search_once(spec, noise, x, q, lo, hi, tol, max_sweeps, ba_iters):
    rows = _prob_table(spec, noise, x)
    best = -1.0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        ba = blahut_arimoto(TransitionMatrix(x, rows), tol=1e-12, max_iters=ba_iters, q0=q)
        q = ba.input.q
        x, rows = _refine_points(spec, noise, x, q, lo, hi, 1e-7 * spec.resolution)
        mi = _mi_rows(rows, q)
        if mi - best < tol:
            best = max(best, mi)
            break
        best = mi
    return best, x, q, sweeps


def _merge_points(x, q, tol) -> InputDistribution:
    """Drop massless points and pool mass points closer than ``tol``."""
    keep = q > 1e-12
    order = np.argsort(x[keep])
    xs, qs = x[keep][order], q[keep][order]
    px, pq = [xs[0]], [qs[0]]
    for xi, qi in zip(xs[1:], qs[1:]):
        if xi - px[-1] < tol:
            px[-1] = (px[-1] * pq[-1] + xi * qi) / (pq[-1] + qi)
            pq[-1] += qi
        else:
            px.append(xi)
            pq.append(qi)
    pq = np.asarray(pq)
    return InputDistribution(px, pq / pq.sum())


def saturation_capacity_search(spec: QuantizerSpec, noise, max_points: int | None = None,
                               restarts: int = 32, seed: int = 0, guard: float = 0.0,
                               tol: float = 1e-9,
                               max_sweeps: int = 200, ba_iters: int = 2000,
                               jitter: float = 0.25) -> CapacityResult:
    """Best mutual information found over inputs confined to the output range.

    Inputs live in ``[-guard*p, (N-1)*p + guard*p]``; ``guard=0`` is the
    full-scale range of the quantizer, ``guard=0.5`` reaches the outer edges
    of the end cells (beyond which saturation makes every input equivalent).
    Restart 0 starts from the equiprobable output lattice; later restarts
    use ``max_points`` lattice-plus-jitter points. This is a lower bound on
    the saturation capacity (no global optimality guarantee).
    """
    _require(spec, Mode.SATURATION)
    n, p = spec.levels, spec.resolution
    m = n + 1 if max_points is None else int(max_points)
    if m < 1:
        raise ValueError("max_points must be >= 1")
    if not 0.0 <= guard <= 0.5:
        raise ValueError("guard must lie in [0, 0.5]")
    lo, hi = -guard * p, (n - 1 + guard) * p
    children = np.random.SeedSequence(seed).spawn(max(restarts, 1))
    results = []
    for r in range(max(restarts, 1)):
        rng = np.random.Generator(np.random.Philox(children[r]))
        if r == 0:
            x0 = spec.outputs[:m] if m <= n else np.concatenate(
                [spec.outputs, rng.uniform(lo, hi, m - n)])
        else:
            base = np.linspace(0.0, (n - 1) * p, m) if m != n else spec.outputs
            x0 = base + rng.uniform(-jitter * p, jitter * p, m)
        x0 = np.clip(np.sort(x0), lo, hi)
        q0 = np.full(m, 1.0 / m)
        if r == 0 and m > n:
            q0[n:] = 1e-9
            q0 /= q0.sum()
        value, x, q, sweeps = _search_once(spec, noise, x0, q0, lo, hi, tol,
                                               max_sweeps, ba_iters)
        results.append((value, r, x, q, sweeps))
    value, r, x, q, sweeps = max(results, key=lambda t: (t[0], -t[1]))
    inp = _merge_points(x, q, 1e-6 * p)
    return CapacityResult(min(max(0.0, value), math.log2(n)), inp, Method.SATURATION_SEARCH, n,
                          {"seed": seed, "restarts": restarts, "best_restart": r,
                           "sweeps": sweeps, "max_points": m, "support": (lo, hi),
                           "lower_bound_estimate": True,
                           "restart_values": [t[0] for t in results]})


# -- threshold of the conditional-entropy minimiser --------------------------

def _u0_is_half(n_levels: int, ratio: float, grid: int) -> bool:
    spec = QuantizerSpec(n_levels, 1.0, Mode.WRAPPING)
    u0, _ = minimize_conditional_entropy(spec, GaussianNoise(ratio), grid)
    return min(u0, 1.0 - u0) >= 0.25


def estimate_tau(n_levels: int, samples: int = 4096, bracket=(0.3, 1.0),
                 precision: float = 1e-4) -> float:
    """sigma/p at which the minimiser of H(yhat | x = w) jumps from 0 to p/2."""
    if n_levels < 2:
        raise ValueError("need N >= 2")
    lo, hi = bracket
    if _u0_is_half(n_levels, lo, samples) or not _u0_is_half(n_levels, hi, samples):
        raise RuntimeError(f"no u0 jump detected for sigma/p in [{lo}, {hi}]")
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        if _u0_is_half(n_levels, mid, samples):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)

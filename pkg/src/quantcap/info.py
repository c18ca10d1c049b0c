"""Discrete entropy / mutual information (bits) and KL divergence between
continuous densities by adaptive Simpson quadrature."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quantizer import TransitionMatrix

TINY = 1e-300


class QuadratureError(RuntimeError):
    pass


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    safe = np.where(p > TINY, p, 1.0)
    return np.where(p > TINY, p * np.log2(safe), 0.0)


def _check_dist(probs) -> np.ndarray:
    q = np.asarray(probs, dtype=float)
    if q.ndim != 1 or q.size == 0 or np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
        raise ValueError("expected a probability vector summing to 1")
    return q


def entropy(probs) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    q = _check_dist(probs)
    return max(0.0, float(-_xlog2x(q).sum()))


def row_entropies(rows) -> np.ndarray:
    return -_xlog2x(rows).sum(axis=-1)


def _rows(tm) -> np.ndarray:
    return tm.rows if isinstance(tm, TransitionMatrix) else np.asarray(tm, dtype=float)


def conditional_entropy(tm, input_probs) -> float:
    rows = _rows(tm)
    q = _check_dist(input_probs)
    if q.size != rows.shape[0]:
        raise ValueError(f"{q.size} input probabilities for {rows.shape[0]} rows")
    return float(q @ row_entropies(rows))


def mutual_information(tm, input_probs) -> float:
    rows = _rows(tm)
    q = _check_dist(input_probs)
    if q.size != rows.shape[0]:
        raise ValueError(f"{q.size} input probabilities for {rows.shape[0]} rows")
    out = q @ rows
    mi = -_xlog2x(out).sum() - q @ row_entropies(rows)
    return max(0.0, float(mi))


@dataclass(frozen=True)
class Density:
    """A pdf with a support hint ``[lo, hi]`` holding all but ~1e-12 of its mass.

    ``breakpoints`` are optional interior points where the pdf changes
    rapidly; quadrature starts with a panel edge at each of them.
    """

    pdf: Callable[[float], float]
    lo: float
    hi: float
    breakpoints: tuple = field(default=())

    def mass(self, tol: float = 1e-10) -> float:
        return adaptive_simpson(self.pdf, self.lo, self.hi, tol, self.breakpoints)


def gaussian_density(variance: float) -> Density:
    s = math.sqrt(variance)
    c = 1.0 / math.sqrt(2 * math.pi * variance)
    return Density(lambda t: c * math.exp(-0.5 * (t / s) ** 2), -12 * s, 12 * s)


def uniform_density(variance: float) -> Density:
    a = math.sqrt(3 * variance)
    return Density(lambda t: 1.0 / (2 * a) if -a <= t <= a else 0.0, -a, a)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-8,
                     breakpoints=(), max_depth: int = 60, panels: int = 16) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    The interval is cut at ``breakpoints`` and into ``panels`` equal pieces
    before adaptive refinement; each panel gets a share of ``tol``
    proportional to its width.
    """
    if not b > a:
        raise ValueError("need b > a")
    edges = set(np.linspace(a, b, panels + 1).tolist())
    edges.update(x for x in breakpoints if a < x < b)
    edges = sorted(edges)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _simpson_panel(f, lo, hi, tol * (hi - lo) / (b - a), max_depth)
    return total


def _simpson_panel(f, a, b, tol, max_depth):
    fa, fb, m = f(a), f(b), 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15 * eps or b - a <= 4 * np.finfo(float).eps * max(1.0, abs(m)):
            total += left + right + delta / 15
        elif depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge near x={m!r}")
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2, depth + 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2, depth + 1))
    return total


def kl_divergence(p: Density, q: Density, tol: float = 1e-8) -> float:
    """D(p || q) in bits, integrated over p's support hint."""

    def integrand(t):
        pt = float(p.pdf(t))
        if pt <= TINY:
            return 0.0
        qt = float(q.pdf(t))
        if qt <= 0.0:
            raise ValueError(f"q vanishes at t={t!r} inside p's support")
        return pt * math.log2(pt / qt)

    if p.hi <= q.lo or q.hi <= p.lo:
        raise ValueError("densities have non-overlapping supports")
    return adaptive_simpson(integrand, p.lo, p.hi, tol, p.breakpoints)

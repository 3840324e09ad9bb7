"""Quadrature rules: Beta-weighted Gauss-Jacobi nodes and diffuse-part rules.

Endpoint singularities of Beta weights (parameters below one) are always
absorbed into the weight function, never sampled pointwise, so integrands
stay smooth and fixed-order rules converge geometrically.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

DIFFUSE_ORDER = 256  # fixed order for y-integrals over the diffuse part

_cache_lock = threading.Lock()
_rule_cache: dict[tuple, "QuadratureRule"] = {}
_legendre_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for the normalized Beta(a, b) weight on (0, 1).

    Exact for polynomials of degree <= 2*order - 1; weights sum to one.
    """

    a: float
    b: float
    order: int
    nodes: np.ndarray
    weights: np.ndarray


def jacobi_rule(a: float, b: float, m: int) -> QuadratureRule:
    """Gauss-Jacobi rule of order m for the Beta(a, b) density on (0, 1).

    Rules are cached per (a, b, m); the cache is safe for concurrent
    readers (writes happen under a lock, entries are immutable).
    """
    a, b, m = float(a), float(b), int(m)
    if not (a > 0 and b > 0):
        raise ValueError(f"Beta weight parameters must be positive, got ({a}, {b})")
    if m < 1:
        raise ValueError(f"rule order must be >= 1, got {m}")
    key = (a, b, m)
    rule = _rule_cache.get(key)
    if rule is None:
        # scipy weight on [-1,1] is (1-x)^alpha (1+x)^beta; u = (1+x)/2 maps
        # u^(a-1) to beta=a-1 and (1-u)^(b-1) to alpha=b-1
        x, w = sp.roots_jacobi(m, b - 1.0, a - 1.0)
        nodes = 0.5 * (x + 1.0)
        weights = w / np.sum(w)
        nodes.flags.writeable = False
        weights.flags.writeable = False
        rule = QuadratureRule(a, b, m, nodes, weights)
        with _cache_lock:
            _rule_cache.setdefault(key, rule)
    return rule


def _legendre01(m: int) -> tuple[np.ndarray, np.ndarray]:
    got = _legendre_cache.get(m)
    if got is None:
        x, w = np.polynomial.legendre.leggauss(m)
        got = (0.5 * (x + 1.0), 0.5 * w)
        with _cache_lock:
            _legendre_cache.setdefault(m, got)
    return got


def _beta_segment(a: float, b: float, lo: float, hi: float, m: int):
    """Nodes/weights for the Beta(a, b) density restricted to [lo, hi].

    Segments touching an endpoint of (0, 1) fold that endpoint's power
    singularity into a one-sided Jacobi weight; interior segments use
    Gauss-Legendre with the (there smooth) density as integrand factor.
    """
    lognorm = sp.betaln(a, b)
    if lo == 0.0 and hi == 1.0:
        rule = jacobi_rule(a, b, m)
        return rule.nodes, rule.weights.copy()
    if lo == 0.0:
        # y = hi * t: hi^a * t^(a-1) * (1 - hi*t)^(b-1)
        x, w = sp.roots_jacobi(m, 0.0, a - 1.0)
        t = 0.5 * (x + 1.0)
        ys = hi * t
        ws = (hi**a) * (2.0**-a) * w * (1.0 - ys) ** (b - 1.0) * np.exp(-lognorm)
        return ys, ws
    if hi == 1.0:
        # y = 1 - (1-lo) * t: (1-lo)^b * t^(b-1) * y^(a-1)
        x, w = sp.roots_jacobi(m, 0.0, b - 1.0)
        t = 0.5 * (x + 1.0)
        ys = 1.0 - (1.0 - lo) * t
        ws = ((1.0 - lo) ** b) * (2.0**-b) * w * ys ** (a - 1.0) * np.exp(-lognorm)
        return ys, ws
    t, w = _legendre01(m)
    ys = lo + (hi - lo) * t
    ws = (hi - lo) * w * ys ** (a - 1.0) * (1.0 - ys) ** (b - 1.0) * np.exp(-lognorm)
    return ys, ws


def diffuse_rule(base, cuts: tuple[float, ...] = (), m: int = DIFFUSE_ORDER):
    """Nodes/weights integrating against the diffuse density of ``base``.

    ``cuts`` lists integrand discontinuities; the natural interval is split
    there so each segment sees a smooth integrand. The weights sum to one
    (the rule represents the normalized diffuse density only; the caller
    applies the diffuse component weight).
    """
    diffuse = base.diffuse
    if diffuse is None:
        raise ValueError("base measure has no diffuse component")
    lo, hi = diffuse.support
    pts = [lo] + sorted({c for c in cuts if lo < c < hi}) + [hi]
    ys_all, ws_all = [], []
    for s0, s1 in zip(pts, pts[1:]):
        if diffuse.family == "uniform":
            t, w = _legendre01(m)
            ys_all.append(s0 + (s1 - s0) * t)
            ws_all.append(w * (s1 - s0) / (hi - lo))
        else:
            ys, ws = _beta_segment(diffuse.a, diffuse.b, s0, s1, m)
            ys_all.append(ys)
            ws_all.append(ws)
    return np.concatenate(ys_all), np.concatenate(ws_all)

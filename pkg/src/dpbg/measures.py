"""Base measures, shapes, functionals, realized measures and partitions.

These are the value types shared by the samplers, the deterministic
transforms and the verification harness. Everything here is immutable
after construction and safe to share between threads.

Supported base measures are finite mixtures of one optional diffuse
family (Uniform(a, b), or Beta(a, b) on [0, 1]) and finitely many atoms.
Functionals are bounded by construction, which makes the log-integrability
requirement for linear functionals automatic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import special as sp

__all__ = [
    "ATOL",
    "BaseMeasure",
    "Diffuse",
    "Functional",
    "ObservationSet",
    "Partition",
    "RandomMeasureRealization",
    "ShapeMeasure",
    "base_from_spec",
    "base_to_spec",
    "functional_eval",
    "g_from_spec",
    "g_to_spec",
    "integrability_value",
    "posterior_shape",
]

ATOL = 1e-12


# ---------------------------------------------------------------------------
# base measures
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Diffuse:
    """A named diffuse family: ``uniform`` on (a, b) or ``beta`` on (0, 1)."""

    family: str
    a: float
    b: float

    def __post_init__(self):
        if self.family not in ("uniform", "beta"):
            raise ValueError(f"unknown diffuse family {self.family!r}")
        if self.family == "uniform":
            if not self.a < self.b:
                raise ValueError(f"uniform needs a < b, got ({self.a}, {self.b})")
        else:
            if not (self.a > 0 and self.b > 0):
                raise ValueError(f"beta parameters must be positive, got ({self.a}, {self.b})")

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.b) if self.family == "uniform" else (0.0, 1.0)

    def quantile(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family == "uniform":
            return self.a + (self.b - self.a) * t
        if self.a == 0.5 and self.b == 0.5:
            # arcsine law has a closed-form inverse CDF
            return np.sin(0.5 * np.pi * t) ** 2
        return sp.betaincinv(self.a, self.b, t)


@dataclass(frozen=True)
class BaseMeasure:
    """A probability measure: optional weighted diffuse part plus atoms.

    Invariants enforced at construction: the diffuse weight plus the atom
    probabilities sum to one (within 1e-12), atom locations are pairwise
    distinct, and atom probabilities are strictly positive. Atom locations
    are compared bitwise; ties between atoms only ever arise from literal
    reuse of the same float, never from rounding coincidence.
    """

    diffuse: Diffuse | None = None
    diffuse_weight: float = 0.0
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "atoms", tuple((float(x), float(p)) for x, p in self.atoms)
        )
        if self.diffuse is None and self.diffuse_weight != 0.0:
            raise ValueError("diffuse_weight given without a diffuse family")
        if self.diffuse is not None and not 0.0 <= self.diffuse_weight <= 1.0:
            raise ValueError(f"diffuse weight must lie in [0, 1], got {self.diffuse_weight}")
        probs = [p for _, p in self.atoms]
        if any(p <= 0 for p in probs):
            raise ValueError("atom probabilities must be strictly positive")
        locs = [x for x, _ in self.atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be pairwise distinct")
        total = self.diffuse_weight + sum(probs)
        if abs(total - 1.0) > ATOL:
            raise ValueError(f"diffuse weight + atom probabilities = {total}, expected 1")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def uniform(a: float = 0.0, b: float = 1.0) -> "BaseMeasure":
        return BaseMeasure(Diffuse("uniform", a, b), 1.0, ())

    @staticmethod
    def beta(a: float, b: float) -> "BaseMeasure":
        return BaseMeasure(Diffuse("beta", a, b), 1.0, ())

    @staticmethod
    def arcsine() -> "BaseMeasure":
        return BaseMeasure.beta(0.5, 0.5)

    @staticmethod
    def from_atoms(atoms: Iterable[tuple[float, float]]) -> "BaseMeasure":
        return BaseMeasure(None, 0.0, tuple(atoms))

    @staticmethod
    def point(x: float) -> "BaseMeasure":
        return BaseMeasure.from_atoms([(x, 1.0)])

    # -- queries -----------------------------------------------------------
    @property
    def is_diffuse(self) -> bool:
        return self.diffuse is not None and not self.atoms and self.diffuse_weight == 1.0

    def atom_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.atoms:
            return np.empty(0), np.empty(0)
        locs, probs = zip(*self.atoms)
        return np.asarray(locs, dtype=float), np.asarray(probs, dtype=float)

    def support_bounds(self) -> tuple[float, float]:
        los, his = [], []
        if self.diffuse is not None and self.diffuse_weight > 0:
            lo, hi = self.diffuse.support
            los.append(lo)
            his.append(hi)
        for x, _ in self.atoms:
            los.append(x)
            his.append(x)
        return min(los), max(his)

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Map iid Uniform(0,1) draws to draws from this measure.

        The unit interval is split as [0, w_c) for the diffuse component
        (inverse CDF on the rescaled coordinate) followed by one slot per
        atom, so a single uniform yields one draw.
        """
        u = np.asarray(u, dtype=float)
        wc = self.diffuse_weight
        if not self.atoms:
            return self.diffuse.quantile(u)
        locs, probs = self.atom_arrays()
        edges = wc + np.cumsum(probs)
        idx = np.minimum(np.searchsorted(edges, u, side="right"), len(locs) - 1)
        out = locs[idx]
        if self.diffuse is not None and wc > 0:
            mask = u < wc
            if np.any(mask):
                out = np.where(mask, self.diffuse.quantile(np.minimum(u / wc, 1.0)), out)
        return out


@dataclass(frozen=True)
class ShapeMeasure:
    """Total mass ``theta`` times a base probability measure."""

    theta: float
    base: BaseMeasure

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"total mass must be positive, got {self.theta}")


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Functional:
    """A bounded real map with a declared finite range [g_lo, g_hi].

    Kinds: ``identity``, ``indicator`` (closed interval), ``affine``
    (g(y) = a*y + b), ``polynomial`` (coefficients low order first),
    ``table`` (right-continuous step function) and ``combo`` (a linear
    combination of other functionals, used for joint functionals).

    ``breakpoints`` lists the discontinuities inside the support; the
    quadrature code splits integration intervals there.
    """

    kind: str
    params: tuple = ()
    g_lo: float = 0.0
    g_hi: float = 1.0
    breakpoints: tuple[float, ...] = ()
    terms: tuple = ()

    def __post_init__(self):
        if not (math.isfinite(self.g_lo) and math.isfinite(self.g_hi)):
            raise ValueError("declared range must be finite")
        if self.g_lo > self.g_hi:
            raise ValueError(f"empty range [{self.g_lo}, {self.g_hi}]")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def identity(lo: float = 0.0, hi: float = 1.0) -> "Functional":
        return Functional("identity", (), float(lo), float(hi))

    @staticmethod
    def indicator(lo: float, hi: float) -> "Functional":
        if lo > hi:
            raise ValueError("indicator interval is empty")
        return Functional("indicator", (float(lo), float(hi)), 0.0, 1.0, (float(lo), float(hi)))

    @staticmethod
    def affine(a: float, b: float, y_lo: float = 0.0, y_hi: float = 1.0) -> "Functional":
        vals = (a * y_lo + b, a * y_hi + b)
        return Functional("affine", (float(a), float(b)), min(vals), max(vals))

    @staticmethod
    def constant(c: float) -> "Functional":
        return Functional("affine", (0.0, float(c)), float(c), float(c))

    @staticmethod
    def polynomial(coeffs: Sequence[float], y_lo: float = 0.0, y_hi: float = 1.0) -> "Functional":
        coeffs = tuple(float(c) for c in coeffs)
        poly = np.polynomial.Polynomial(coeffs)
        cand = [y_lo, y_hi]
        if len(coeffs) > 2:
            for r in poly.deriv().roots():
                if abs(r.imag) < 1e-9 and y_lo < r.real < y_hi:
                    cand.append(float(r.real))
        vals = poly(np.asarray(cand))
        return Functional("polynomial", coeffs, float(vals.min()), float(vals.max()))

    @staticmethod
    def table(breakpoints: Sequence[float], values: Sequence[float]) -> "Functional":
        bps = tuple(float(b) for b in breakpoints)
        vals = tuple(float(v) for v in values)
        if len(vals) != len(bps) + 1:
            raise ValueError("table needs len(values) == len(breakpoints) + 1")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("table breakpoints must be strictly increasing")
        return Functional("table", (bps, vals), min(vals), max(vals), bps)

    @staticmethod
    def combo(terms: Sequence[tuple[float, "Functional"]]) -> "Functional":
        terms = tuple((float(c), g) for c, g in terms)
        if not terms:
            raise ValueError("combo needs at least one term")
        lo = hi = 0.0
        bps: list[float] = []
        for c, g in terms:
            vals = (c * g.g_lo, c * g.g_hi)
            lo += min(vals)
            hi += max(vals)
            bps.extend(g.breakpoints)
        return Functional("combo", (), lo, hi, tuple(sorted(set(bps))), terms)

    # -- evaluation --------------------------------------------------------
    def eval(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        if self.kind == "identity":
            return ys
        if self.kind == "indicator":
            lo, hi = self.params
            return ((ys >= lo) & (ys <= hi)).astype(float)
        if self.kind == "affine":
            a, b = self.params
            return a * ys + b
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(ys, np.asarray(self.params))
        if self.kind == "table":
            bps, vals = self.params
            idx = np.searchsorted(np.asarray(bps), ys, side="right")
            return np.asarray(vals)[idx]
        if self.kind == "combo":
            out = np.zeros_like(ys, dtype=float)
            for c, g in self.terms:
                out += c * g.eval(ys)
            return out
        raise ValueError(f"unknown functional kind {self.kind!r}")

    def __call__(self, y: float) -> float:
        return float(self.eval(np.asarray([y]))[0])

    def zeros(self, lo: float, hi: float) -> tuple[float, ...]:
        """Sign-change points of g inside (lo, hi), where |g| has kinks."""
        if self.kind in ("indicator", "table"):
            return ()
        if self.kind == "identity":
            return (0.0,) if lo < 0.0 < hi else ()
        if self.kind == "affine":
            a, b = self.params
            if a == 0.0:
                return ()
            r = -b / a
            return (r,) if lo < r < hi else ()
        if self.kind == "polynomial":
            roots = np.polynomial.Polynomial(np.asarray(self.params)).roots()
            return tuple(
                sorted(float(r.real) for r in roots if abs(r.imag) < 1e-9 and lo < r.real < hi)
            )
        # generic scan for combos: bracket sign changes, then bisect
        grid = np.linspace(lo, hi, 513)
        vals = self.eval(grid)
        out = []
        for i in range(len(grid) - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0.0:
                out.append(float(grid[i]))
            elif a * b < 0:
                x0, x1 = grid[i], grid[i + 1]
                for _ in range(80):
                    mid = 0.5 * (x0 + x1)
                    if self(mid) * a <= 0:
                        x1 = mid
                    else:
                        x0 = mid
                out.append(0.5 * (x0 + x1))
        return tuple(r for r in out if lo < r < hi)

    def log_bound(self) -> float:
        """log(1 + max(|g_lo|, |g_hi|)), a uniform bound for log(1 + |g|)."""
        return math.log1p(max(abs(self.g_lo), abs(self.g_hi)))


def min_one_plus(g: Functional, s: float) -> float:
    """Lower bound of 1 + s*g(y) over the declared range of g."""
    return 1.0 + min(s * g.g_lo, s * g.g_hi)


# ---------------------------------------------------------------------------
# realized random measures
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RandomMeasureRealization:
    """A finite atomic realization of a random measure.

    For normalized realizations the weights sum to one up to the recorded
    truncation bound; otherwise ``total_mass`` matches the weight sum to
    relative rounding error.
    """

    locations: np.ndarray
    weights: np.ndarray
    total_mass: float
    normalized: bool
    truncation_bound: float = 0.0

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", w)
        if locs.shape != w.shape or locs.ndim != 1:
            raise ValueError("locations and weights must be matching 1-d arrays")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if self.truncation_bound < 0 or self.total_mass < 0:
            raise ValueError("total_mass and truncation_bound must be nonnegative")
        s = float(w.sum())
        if self.normalized:
            if abs(s - 1.0) > self.truncation_bound + ATOL:
                raise ValueError(f"normalized weights sum to {s}")
        else:
            if abs(s - self.total_mass) > ATOL * max(1.0, abs(self.total_mass)):
                raise ValueError(f"total_mass {self.total_mass} != weight sum {s}")

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def normalize(self) -> "RandomMeasureRealization":
        if self.normalized:
            return self
        return RandomMeasureRealization(
            self.locations, self.weights / self.total_mass, 1.0, True, self.truncation_bound
        )


def functional_eval(m: RandomMeasureRealization, g: Functional) -> float:
    """Evaluate the linear functional m(g) = sum_i w_i g(x_i)."""
    return float(np.dot(m.weights, g.eval(m.locations)))


# ---------------------------------------------------------------------------
# partitions and observation sets
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Partition:
    """A set partition of {1, ..., n}, cells ordered by first appearance."""

    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        cells = tuple(tuple(sorted(int(i) for i in c)) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        seen: list[int] = []
        for c in cells:
            if not c:
                raise ValueError("empty cell")
            seen.extend(c)
        n = len(seen)
        if sorted(seen) != list(range(1, n + 1)):
            raise ValueError("cells must disjointly cover {1..n}")

    @property
    def n(self) -> int:
        return sum(len(c) for c in self.cells)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cells)

    @staticmethod
    def from_labels(labels: Sequence[int]) -> "Partition":
        """Build from per-item cell labels (labels in order of appearance)."""
        cells: dict[int, list[int]] = {}
        for i, lab in enumerate(labels, start=1):
            cells.setdefault(int(lab), []).append(i)
        return Partition(tuple(tuple(c) for _, c in sorted(cells.items())))


@dataclass(frozen=True)
class ObservationSet:
    """Observed values with their induced (value-equality) partition."""

    values: tuple[float, ...]
    uniques: tuple[float, ...] = field(default=())
    partition: Partition = field(default=Partition(()))

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        uniques, partition = _induced(values)
        if self.uniques and tuple(self.uniques) != uniques:
            raise ValueError("uniques inconsistent with values")
        if self.partition.cells and self.partition != partition:
            raise ValueError("partition inconsistent with values")
        object.__setattr__(self, "uniques", uniques)
        object.__setattr__(self, "partition", partition)

    @staticmethod
    def from_values(values: Iterable[float]) -> "ObservationSet":
        return ObservationSet(tuple(values))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def counts(self) -> tuple[int, ...]:
        return self.partition.sizes


def _induced(values: tuple[float, ...]) -> tuple[tuple[float, ...], Partition]:
    order: dict[float, int] = {}
    labels = []
    for v in values:
        if v not in order:
            order[v] = len(order)
        labels.append(order[v])
    uniques = tuple(order.keys())
    part = Partition.from_labels(labels) if values else Partition(())
    return uniques, part


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------
def posterior_shape(shape: ShapeMeasure, obs: ObservationSet) -> ShapeMeasure:
    """Update a shape by observations: total mass theta + n, base mixed with
    one atom per distinct observed value.

    Observation atoms falling on existing atom locations (bitwise equal)
    are merged by adding probabilities.
    """
    n = obs.n
    if n == 0:
        return shape
    theta_new = shape.theta + n
    masses: dict[float, float] = {x: shape.theta * p for x, p in shape.base.atoms}
    for v, c in zip(obs.uniques, obs.counts):
        masses[v] = masses.get(v, 0.0) + c
    atoms = tuple((x, m / theta_new) for x, m in masses.items())
    weight = shape.base.diffuse_weight * (shape.theta / theta_new)
    if shape.base.diffuse is None or weight == 0.0:
        base = BaseMeasure(None, 0.0, atoms)
    else:
        base = BaseMeasure(shape.base.diffuse, weight, atoms)
    return ShapeMeasure(theta_new, base)


def integrability_value(shape: ShapeMeasure, g: Functional) -> float:
    """The log-moment integral of |g| under theta*H.

    Finite for every functional here since g is bounded by construction;
    the value never exceeds theta * log(1 + max(|g_lo|, |g_hi|)).
    """
    from . import _quad  # deferred: _quad imports nothing from here at runtime

    base = shape.base
    total = 0.0
    locs, probs = base.atom_arrays()
    if locs.size:
        total += float(np.dot(probs, np.log1p(np.abs(g.eval(locs)))))
    if base.diffuse is not None and base.diffuse_weight > 0:
        lo, hi = base.diffuse.support
        cuts = tuple(g.breakpoints) + g.zeros(lo, hi)
        ys, ws = _quad.diffuse_rule(base, cuts)
        total += base.diffuse_weight * float(np.dot(ws, np.log1p(np.abs(g.eval(ys)))))
    return shape.theta * total


# ---------------------------------------------------------------------------
# config specs (shared with the CLI)
# ---------------------------------------------------------------------------
def base_from_spec(spec: dict) -> BaseMeasure:
    """Build a BaseMeasure from its JSON description.

    Schema: ``{"diffuse": {"family": "uniform"|"beta", "a": .., "b": ..},
    "weight": w, "atoms": [[loc, prob], ...]}``; any part may be omitted.
    """
    if not isinstance(spec, dict):
        raise ValueError("base spec must be an object")
    diffuse = None
    weight = 0.0
    if "diffuse" in spec and spec["diffuse"] is not None:
        d = spec["diffuse"]
        diffuse = Diffuse(d["family"], float(d.get("a", 0.0)), float(d.get("b", 1.0)))
        weight = float(spec.get("weight", 1.0))
    atoms = tuple((float(x), float(p)) for x, p in spec.get("atoms", ()))
    return BaseMeasure(diffuse, weight, atoms)


def base_to_spec(base: BaseMeasure) -> dict:
    spec: dict = {}
    if base.diffuse is not None:
        spec["diffuse"] = {
            "family": base.diffuse.family,
            "a": base.diffuse.a,
            "b": base.diffuse.b,
        }
        spec["weight"] = base.diffuse_weight
    if base.atoms:
        spec["atoms"] = [[x, p] for x, p in base.atoms]
    return spec


def g_from_spec(spec: dict, base: BaseMeasure | None = None) -> Functional:
    """Build a Functional from its JSON description.

    For kinds whose range depends on the support (identity, affine,
    polynomial) the range is taken from ``spec["range"]`` when present,
    else derived from the support bounds of ``base``.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("functional spec must be an object with a 'kind'")
    kind = spec["kind"]

    def support() -> tuple[float, float]:
        if "range" in spec:
            lo, hi = spec["range"]
            return float(lo), float(hi)
        if base is None:
            raise ValueError(f"functional kind {kind!r} needs a 'range' or a base measure")
        return base.support_bounds()

    if kind == "identity":
        return Functional.identity(*support())
    if kind == "indicator":
        return Functional.indicator(float(spec["lo"]), float(spec["hi"]))
    if kind == "affine":
        lo, hi = support()
        return Functional.affine(float(spec["a"]), float(spec["b"]), lo, hi)
    if kind == "constant":
        return Functional.constant(float(spec["c"]))
    if kind == "polynomial":
        lo, hi = support()
        return Functional.polynomial([float(c) for c in spec["coeffs"]], lo, hi)
    if kind == "table":
        return Functional.table(spec["breakpoints"], spec["values"])
    if kind == "combo":
        return Functional.combo(
            [(float(c), g_from_spec(sub, base)) for c, sub in spec["terms"]]
        )
    raise ValueError(f"unknown functional kind {kind!r}")


def g_to_spec(g: Functional) -> dict:
    if g.kind == "identity":
        return {"kind": "identity", "range": [g.g_lo, g.g_hi]}
    if g.kind == "indicator":
        return {"kind": "indicator", "lo": g.params[0], "hi": g.params[1]}
    if g.kind == "affine":
        return {"kind": "affine", "a": g.params[0], "b": g.params[1], "range": [g.g_lo, g.g_hi]}
    if g.kind == "polynomial":
        return {"kind": "polynomial", "coeffs": list(g.params), "range": [g.g_lo, g.g_hi]}
    if g.kind == "table":
        return {"kind": "table", "breakpoints": list(g.params[0]), "values": list(g.params[1])}
    if g.kind == "combo":
        return {"kind": "combo", "terms": [[c, g_to_spec(sub)] for c, sub in g.terms]}
    raise ValueError(f"unknown functional kind {g.kind!r}")

"""Norming functions in L_{p/(p-2)} and the weights they induce.

For a basis (x_n) in L_p and a non-negative g in the unit ball of
L_{p/(p-2)}, the induced weights are w_n = (int g x_n^2)^{1/2}.  Taking the
supremum over g of the trivial-partition norm with these weights recovers
the square-function norm; :func:`optimal_g` is the function attaining it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .norms import (
    BasisSequence,
    Family,
    Partition,
    PWPair,
    Weights,
    as_coefficients,
    ell_p_norm,
)
from .stepfn import DyadicSet, StepFunction, cond_expect, lp_norm

EPS_CLAMP = 1e-30
NORM_TOL = 1e-10


@dataclass(frozen=True)
class NormingFunction:
    g: StepFunction
    q: float

    def __post_init__(self):
        if not self.q >= 1:
            raise ValueError(f"dual exponent must be >= 1, got {self.q}")
        if np.any(self.g.values < 0):
            raise ValueError("norming function must be non-negative")
        if self.norm > 1 + NORM_TOL:
            raise ValueError(f"norming function has norm {self.norm} > 1")

    @property
    def norm(self) -> float:
        return lp_norm(self.g, self.q)

    def to_json(self) -> dict:
        return {**self.g.to_json(), "q": self.q}

    @classmethod
    def from_json(cls, obj: dict) -> "NormingFunction":
        return cls(StepFunction.from_json(obj), float(obj["q"]))


def weights_from_g(g: NormingFunction, basis: BasisSequence) -> Weights:
    """Weights (int g x_n^2)^{1/2} for every basis element.

    Zero integrals are clamped up to ``EPS_CLAMP`` so the result stays in
    (0, 1]; the clamped indices are recorded on the returned weights.
    Values above 1 by at most the normalization tolerance are rounded to 1.
    """
    m = max(g.g.level, basis.level)
    w2 = _squares_at(basis, m) @ _values_at(g.g, m) * 2.0 ** (-m)
    if np.any(w2 < 0):
        raise RuntimeError("negative integral of g x_n^2")
    w = np.sqrt(w2)
    if np.any(w > 1 + NORM_TOL):
        raise ValueError("induced weight exceeds 1; is the basis L_p-normalized?")
    w = np.minimum(w, 1.0)
    clamped = tuple(int(j) for j in np.flatnonzero(w < EPS_CLAMP))
    w = np.maximum(w, EPS_CLAMP)
    return Weights(w, clamped)


def _values_at(f: StepFunction, m: int) -> np.ndarray:
    return np.repeat(f.values, 2 ** (m - f.level))


def _squares_at(basis: BasisSequence, m: int) -> np.ndarray:
    if m == basis.level:
        return basis.squares
    return np.repeat(basis.squares, 2 ** (m - basis.level), axis=1)


def optimal_g(a, basis: BasisSequence) -> NormingFunction:
    """Hölder maximizer of int g f over the unit sphere, f = sum a_n^2 x_n^2."""
    a = as_coefficients(a)
    scale = np.max(np.abs(a))
    f = basis.square_sum(a / scale if scale else a)
    if not np.any(f.values):
        raise ValueError("degenerate coefficient vector")
    p = basis.p
    fnorm = lp_norm(f, p / 2)
    values = (f.values / fnorm) ** ((p - 2) / 2)
    return NormingFunction(StepFunction(f.level, values), basis.q)


def _check_dual_vector(c, q: float) -> np.ndarray:
    c = as_coefficients(c)
    if np.any(c < 0):
        raise ValueError("c must be non-negative")
    norm = ell_p_norm(c, q)
    if abs(norm - 1) > NORM_TOL:
        raise ValueError(f"c must have l_{q:g} norm 1, got {norm}")
    return c


def maxc_g(c, basis: BasisSequence) -> NormingFunction:
    """g = max_n c_n |x_n|^{p-2} for a non-negative c on the unit sphere of l_{p/(p-2)}."""
    c = _check_dual_vector(c, basis.q)
    if c.size != len(basis):
        raise ValueError("dimension mismatch between c and basis")
    powers = np.abs(basis.matrix) ** (basis.p - 2)
    g = (c[:, None] * powers).max(axis=0)
    return NormingFunction(StepFunction(basis.level, g), basis.q)


def maxc_argmax(c, basis: BasisSequence) -> np.ndarray:
    """Smallest index attaining the max at each grid cell (the tie-broken selector)."""
    c = as_coefficients(c)
    powers = np.abs(basis.matrix) ** (basis.p - 2)
    return np.argmax(c[:, None] * powers, axis=0)


def reduce_g(g: NormingFunction, sets: Sequence[DyadicSet]) -> NormingFunction:
    return NormingFunction(cond_expect(g.g, sets), g.q)


def build_family(gs: Sequence[NormingFunction], basis: BasisSequence,
                 include_discrete: bool = False) -> Family:
    """One trivial-partition pair per g, optionally with the discrete pair (P_D, 1)."""
    if not gs:
        raise ValueError("need at least one norming function")
    n = len(basis)
    trivial = Partition.trivial(n)
    pairs = [PWPair(trivial, weights_from_g(g, basis)) for g in gs]
    if include_discrete:
        pairs.append(discrete_pair(n))
    return Family(tuple(pairs))


def discrete_pair(n: int) -> PWPair:
    return PWPair(Partition.discrete(n), Weights.ones(n))


def sample_g(rng: np.random.Generator, level: int, q: float, count: int = 1,
             distribution: str = "chi2") -> list[NormingFunction]:
    """Random elements of the unit sphere of the non-negative cone of L_q.

    Values are drawn i.i.d. (``chi2``: squared standard normals, ``uniform``,
    or ``exponential``) on a level-``level`` grid, then normalized.
    """
    out = []
    for _ in range(count):
        n = 2**level
        if distribution == "chi2":
            v = rng.standard_normal(n) ** 2
        elif distribution == "uniform":
            v = rng.random(n)
        elif distribution == "exponential":
            v = rng.exponential(size=n)
        else:
            raise ValueError(f"unknown distribution {distribution!r}")
        f = StepFunction(level, v)
        norm = lp_norm(f, q)
        if norm == 0:
            f = StepFunction.constant(1.0, level)
            norm = 1.0
        out.append(NormingFunction(StepFunction(level, f.values / norm), q))
    return out


def dual_optimal_c(a, p: float) -> np.ndarray:
    """Maximizer of sum a_n^2 c_n over c >= 0 with ||c||_{p/(p-2)} = 1.

    The maximizer is proportional to |a_n|^{p-2} and the maximum is
    (sum |a_n|^p)^{2/p}.
    """
    a = as_coefficients(a)
    if not np.any(a):
        raise ValueError("degenerate coefficient vector")
    q = p / (p - 2)
    c = (np.abs(a) / np.max(np.abs(a))) ** (p - 2)
    return c / ell_p_norm(c, q)


def dual_value(a, c) -> float:
    """(sum a_n^2 c_n)^{1/2}."""
    a = as_coefficients(a)
    return float(np.sum(a * a * np.asarray(c)) ** 0.5)


def _box_points(dim: int, lo: np.ndarray, hi: np.ndarray, h: float) -> np.ndarray:
    axes = [np.arange(lo[i], hi[i] + h / 2, h) for i in range(dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def brute_force_dual_max(a, p: float, step: float = 1e-3, max_points: int = 2_000_000,
                         refine_to: float | None = None) -> tuple[float, np.ndarray]:
    """Grid search for max (sum a_n^2 c_n)^{1/2} on the non-negative l_{p/(p-2)} sphere.

    The coordinates other than the one with the largest |a_n| run over a
    grid of spacing ``step`` in [0, 1]; the remaining coordinate is solved
    from the sphere equation.  When the full grid exceeds ``max_points`` the
    search runs coarse-to-fine, shrinking a window around the incumbent until
    the spacing reaches ``step``.  With ``refine_to`` the same local search
    keeps going below ``step`` down to that spacing.
    """
    a = as_coefficients(a)
    n = a.size
    q = p / (p - 2)
    if n == 1:
        return float(abs(a[0])), np.ones(1)
    a2 = a * a
    last = int(np.argmax(a2))
    free = [i for i in range(n) if i != last]

    def best_of(pts):
        rest = 1 - np.sum(pts**q, axis=1)
        pts, rest = pts[rest >= 0], rest[rest >= 0]
        vals = pts @ a2[free] + rest ** (1 / q) * a2[last]
        i = int(np.argmax(vals))
        return float(vals[i]), pts[i]

    dim = n - 1
    h = step
    if (round(1 / step) + 1) ** dim > max_points:
        h = 1 / int(max_points ** (1 / dim) - 1)
    val, best = best_of(_box_points(dim, np.zeros(dim), np.ones(dim), h))
    floor = step if refine_to is None else min(step, refine_to)
    while h > floor:
        h_next = max(h / 8, floor)
        lo = np.clip(best - 2 * h, 0, 1)
        hi = np.clip(best + 2 * h, 0, 1)
        v, cand = best_of(_box_points(dim, lo, hi, h_next))
        if v > val:
            val, best = v, cand
        h = h_next
    c = np.empty(n)
    c[free] = best
    c[last] = max(1 - np.sum(best**q), 0.0) ** (1 / q)
    return val**0.5, c

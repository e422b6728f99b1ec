"""Basis sequences on the dyadic grid and the Haar closed-form weights.

Haar functions are indexed by (n, k): ``h_{0,0}`` is the constant 1 and for
n >= 1, 0 <= k < 2**(n-1), ``h_{n,k}`` is ``2**((n-1)/p)`` on the left half
of ``[k 2**(1-n), (k+1) 2**(1-n))`` and minus that on the right half.
Flattened Haar coefficient vectors use the order (0,0), (1,0), (2,0), (2,1),
(3,0), ..., i.e. index ``2**(n-1) + k`` for n >= 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .duality import NORM_TOL, NormingFunction, optimal_g
from .norms import BasisSequence, as_coefficients, ell_p_norm
from .stepfn import DyadicSet, StepFunction, check_disjoint, lp_norm, support


def _as_sets(intervals) -> list[DyadicSet]:
    out = []
    for s in intervals:
        if isinstance(s, DyadicSet):
            out.append(s)
        else:
            level, k = s
            out.append(DyadicSet.interval(level, k))
    return out


def disjoint_indicators(intervals: Sequence, p: float) -> BasisSequence:
    """Normalized indicators lambda(A_n)^{-1/p} 1_{A_n} of disjoint dyadic sets.

    ``intervals`` holds :class:`DyadicSet` objects or ``(level, k)`` pairs.
    """
    sets = _as_sets(intervals)
    check_disjoint(sets)
    fns = [s.indicator() * s.measure ** (-1 / p) for s in sets]
    return BasisSequence(tuple(fns), p, frozenset({"disjoint_supports", "normalized"}))


def disjointly_supported(fns: Sequence[StepFunction], p: float) -> BasisSequence:
    """Rescale disjointly supported non-zero functions to unit L_p norm."""
    fns = list(fns)
    for n, f in enumerate(fns):
        if not np.any(f.values):
            raise ValueError(f"function {n} is identically zero")
    check_disjoint([support(f) for f in fns])
    scaled = [f * (1 / lp_norm(f, p)) for f in fns]
    return BasisSequence(tuple(scaled), p, frozenset({"disjoint_supports", "normalized"}))


def norming_companions(basis: BasisSequence) -> list[NormingFunction]:
    """For each x_k, the norm-one non-negative y_k in L_{p/(p-2)} norming x_k^2."""
    out = []
    for k in range(len(basis)):
        e = np.zeros(len(basis))
        e[k] = 1.0
        out.append(optimal_g(e, basis))
    return out


def rademacher(j: int) -> StepFunction:
    """r_j = +1 where the j-th binary digit of t is 0, -1 where it is 1."""
    if j < 1:
        raise ValueError("Rademacher index must be >= 1")
    return StepFunction(j, np.tile([1.0, -1.0], 2 ** (j - 1)))


def rademacher_basis(n: int, p: float) -> BasisSequence:
    return BasisSequence(tuple(rademacher(j) for j in range(1, n + 1)), p,
                         frozenset({"independent", "normalized", "rademacher"}))


def indicator_rademacher_grid(intervals: Sequence, J: int, p: float) -> BasisSequence:
    """x_{n,j} = lambda(A_n)^{-1/p} 1_{A_n} r_j flattened n-major; groups hold the rows."""
    if J < 1:
        raise ValueError("J must be >= 1")
    base = disjoint_indicators(intervals, p)
    fns, groups, labels = [], [], []
    for n, x in enumerate(base.functions):
        row = []
        for j in range(1, J + 1):
            row.append(len(fns))
            fns.append(x * rademacher(j))
            labels.append((n + 1, j))
        groups.append(tuple(row))
    return BasisSequence(tuple(fns), p, frozenset({"normalized"}), tuple(groups), tuple(labels))


def independent_digit_functions(blocks: Sequence[Sequence[int]], values: Sequence[Sequence[float]],
                                p: float) -> BasisSequence:
    """Functions of disjoint blocks of binary digits, each normalized in L_p.

    Block ``blocks[n]`` lists 1-based digit positions (d_1, ..., d_r) and
    ``values[n]`` has length ``2**r``; entry ``sum_i bit_i 2**(r-1-i)`` is the
    value where digit d_i of t equals bit_i.  Functions of disjoint digit
    blocks are stochastically independent under Lebesgue measure.
    """
    if len(blocks) != len(values):
        raise ValueError("need one value table per block")
    seen: set[int] = set()
    for b in blocks:
        if not b:
            raise ValueError("empty digit block")
        for d in b:
            if d < 1:
                raise ValueError("digit positions are 1-based")
            if d in seen:
                raise ValueError("digit blocks overlap")
            seen.add(d)
    level = max(seen)
    cells = np.arange(2**level)
    fns = []
    for b, table in zip(blocks, values):
        table = as_coefficients(table)
        if table.size != 2 ** len(b):
            raise ValueError(f"block {list(b)} needs {2 ** len(b)} values, got {table.size}")
        key = np.zeros(2**level, dtype=int)
        for d in b:
            key = 2 * key + ((cells >> (level - d)) & 1)
        f = StepFunction(level, table[key])
        if not np.any(f.values):
            raise ValueError("digit function is identically zero")
        fns.append(f * (1 / lp_norm(f, p)))
    return BasisSequence(tuple(fns), p, frozenset({"independent", "normalized"}))


@dataclass(frozen=True)
class HaarIndex:
    n: int
    k: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("Haar level must be >= 0")
        if self.n == 0 and self.k != 0:
            raise ValueError("h_{0,k} exists only for k = 0")
        if self.n >= 1 and not 0 <= self.k < 2 ** (self.n - 1):
            raise ValueError(f"k must lie in [0, {2 ** (self.n - 1) - 1}] at level {self.n}")

    @property
    def flat(self) -> int:
        return 0 if self.n == 0 else 2 ** (self.n - 1) + self.k

    @classmethod
    def from_flat(cls, i: int) -> "HaarIndex":
        if i == 0:
            return cls(0, 0)
        n = int(i).bit_length()
        return cls(n, i - 2 ** (n - 1))


def haar_indices(max_level: int) -> list[HaarIndex]:
    return [HaarIndex.from_flat(i) for i in range(2**max_level)]


def haar(idx: HaarIndex, p: float) -> StepFunction:
    if not isinstance(idx, HaarIndex):
        idx = HaarIndex(*idx)
    if idx.n == 0:
        return StepFunction.constant(1.0)
    n, k = idx.n, idx.k
    values = np.zeros(2**n)
    height = 2 ** ((n - 1) / p)
    values[2 * k] = height
    values[2 * k + 1] = -height
    return StepFunction(n, values)


def haar_basis(max_level: int, p: float) -> BasisSequence:
    """All Haar functions with n <= max_level (2**max_level of them), flat order."""
    idx = haar_indices(max_level)
    return BasisSequence(tuple(haar(i, p) for i in idx), p, frozenset({"haar", "normalized"}),
                         labels=tuple((i.n, i.k) for i in idx))


@dataclass(frozen=True, eq=False)
class HaarG:
    """Coefficients b_{n,k}, k < 2**(n-1), of a level-(n-1) norming function."""

    n: int
    b: np.ndarray
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("HaarG needs n >= 1")
        if not self.p > 2:
            raise ValueError("HaarG needs p > 2")
        b = np.array(self.b, dtype=float).reshape(-1)
        if b.size != 2 ** (self.n - 1):
            raise ValueError(f"b must have length {2 ** (self.n - 1)}")
        if not np.all(np.isfinite(b)) or np.any(b < 0):
            raise ValueError("b must be finite and non-negative")
        norm = ell_p_norm(b, self.q)
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"b must have l_{self.q:g} norm 1, got {norm}")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def q(self) -> float:
        return self.p / (self.p - 2)


def haar_weight_closed_form(hg: HaarG, m: int, l: int) -> float:
    """int g h_{m,l}^2 for g = haar_g(hg), by the three closed-form cases."""
    HaarIndex(m, l)
    n, b, p = hg.n, hg.b, hg.p
    if m == 0:
        return float(sum(b[k] * 2 ** (2 * (1 - n) / p) for k in range(2 ** (n - 1))))
    if m <= n:
        lo, hi = l * 2 ** (n - m), (l + 1) * 2 ** (n - m)
        return float(sum(b[k] * 2 ** (2 * (m - n) / p) for k in range(lo, hi)))
    k = l // 2 ** (m - n)
    return float(b[k] * 2 ** ((n - m) * (p - 2) / p))


def haar_g(hg: HaarG) -> NormingFunction:
    n, p = hg.n, hg.p
    values = hg.b * 2 ** ((n - 1) * (p - 2) / p)
    return NormingFunction(StepFunction(n - 1, values), hg.q)


@lru_cache(maxsize=256)
def haar_contribution_matrix(n: int, max_level: int, p: float, include_tail: bool = True) -> np.ndarray:
    """Matrix T with T[i, k] = int (b_k-part of g) h_i^2 per unit b_k, i in flat Haar order.

    For any b, ``T @ b`` is the closed-form weight table of HaarG(n, b, p).
    With ``include_tail=False`` the rows with m > n are zero.
    """
    rows = 2**max_level
    cols = 2 ** (n - 1)
    T = np.zeros((rows, cols))
    T[0, :] = 2 ** (2 * (1 - n) / p)
    for m in range(1, max_level + 1):
        for l in range(2 ** (m - 1)):
            i = 2 ** (m - 1) + l
            if m <= n:
                span = 2 ** (n - m)
                T[i, l * span:(l + 1) * span] = 2 ** (2 * (m - n) / p)
            elif include_tail:
                T[i, l // 2 ** (m - n)] = 2 ** ((n - m) * (p - 2) / p)
    T.setflags(write=False)
    return T


def haar_optimal_b(a, n: int, p: float, include_tail: bool = True) -> HaarG:
    """The b maximizing the closed-form functional sum_i a_i^2 (T b)_i at level n."""
    a = as_coefficients(a)
    max_level = int(a.size).bit_length() - 1
    if 2**max_level != a.size:
        raise ValueError("Haar coefficient vector length must be a power of two")
    C = (a * a) @ haar_contribution_matrix(n, max_level, p, include_tail)
    q = p / (p - 2)
    if not np.any(C):
        b = np.full(C.size, C.size ** (-1 / q))
    else:
        b = C ** ((p - 2) / 2)
        b = b / ell_p_norm(b, q)
    return HaarG(n, b, p)


def haar_truncated_norm(a, hg_family: Sequence[HaarG], p: float) -> tuple[float, float]:
    """(full, truncated) sups over the family of (sum a_i^2 int g h_i^2)^{1/2}.

    ``a`` is a flat Haar coefficient vector of length ``2**M``; the truncated
    value drops the terms with m > n for each g.
    """
    if not hg_family:
        raise ValueError("empty HaarG family")
    a = as_coefficients(a)
    max_level = int(a.size).bit_length() - 1
    if 2**max_level != a.size:
        raise ValueError("Haar coefficient vector length must be a power of two")
    a2 = a * a
    full = trunc = 0.0
    for hg in hg_family:
        if hg.p != p:
            raise ValueError("HaarG exponent does not match p")
        full = max(full, float(a2 @ haar_contribution_matrix(hg.n, max_level, p, True) @ hg.b))
        trunc = max(trunc, float(a2 @ haar_contribution_matrix(hg.n, max_level, p, False) @ hg.b))
    return full**0.5, trunc**0.5


def basis_from_descriptor(desc: dict, p: float | None = None) -> BasisSequence:
    """Build a basis from its JSON descriptor, e.g. ``{"kind": "haar", "max_level": 4, "p": 4}``.

    Kinds: rademacher (n), haar (max_level), indicators (intervals as
    [level, k] pairs), disjoint (functions), grid (intervals, J), digits
    (blocks, values), functions (arbitrary step functions, normalized).
    A ``p`` in the descriptor takes precedence over the argument.
    """
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValueError('basis descriptor needs a "kind"')
    p = desc.get("p", p)
    if p is None:
        raise ValueError("basis descriptor has no p and none was given")
    p = float(p)
    kind = desc["kind"]
    try:
        if kind == "rademacher":
            return rademacher_basis(int(desc["n"]), p)
        if kind == "haar":
            return haar_basis(int(desc["max_level"]), p)
        if kind == "indicators":
            return disjoint_indicators([tuple(iv) for iv in desc["intervals"]], p)
        if kind == "disjoint":
            return disjointly_supported([StepFunction.from_json(f) for f in desc["functions"]], p)
        if kind == "grid":
            return indicator_rademacher_grid([tuple(iv) for iv in desc["intervals"]], int(desc["J"]), p)
        if kind == "digits":
            return independent_digit_functions(desc["blocks"], desc["values"], p)
        if kind == "functions":
            fns = [StepFunction.from_json(f) for f in desc["functions"]]
            if not all(np.any(f.values) for f in fns):
                raise ValueError("basis function is identically zero")
            return BasisSequence(tuple(f * (1 / lp_norm(f, p)) for f in fns), p, frozenset({"normalized"}))
    except KeyError as exc:
        raise ValueError(f"basis descriptor of kind {kind!r} is missing {exc}") from None
    raise ValueError(f"unknown basis kind {kind!r}")

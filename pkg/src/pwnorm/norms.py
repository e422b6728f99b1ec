"""Partition-and-weight norms and the reference norms they are compared with.

Coefficient vectors are plain 1-D numpy arrays.  Partition blocks hold
0-based indices internally; the JSON form uses 1-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .stepfn import StepFunction, align, lp_norm

TAGS = frozenset({"disjoint_supports", "independent", "haar", "normalized", "rademacher"})
NORMALIZATION_TOL = 1e-10


def as_coefficients(a) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size < 1:
        raise ValueError("coefficient vector must be non-empty")
    if not np.all(np.isfinite(a)):
        raise ValueError("coefficients must be finite")
    return a


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 2:
        raise ValueError(f"partition-weight norms need p > 2, got {p}")
    return p


@dataclass(frozen=True)
class Partition:
    size: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(j) for j in b)) for b in self.blocks)
        seen: set[int] = set()
        for b in blocks:
            if not b:
                raise ValueError("partition has an empty block")
            for j in b:
                if j in seen:
                    raise ValueError(f"index {j} appears in two blocks")
                seen.add(j)
        if seen != set(range(self.size)):
            raise ValueError(f"blocks do not cover exactly 0..{self.size - 1}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls(n, (tuple(range(n)),))

    @classmethod
    def discrete(cls, n: int) -> "Partition":
        return cls(n, tuple((j,) for j in range(n)))

    def to_json(self) -> dict:
        return {"blocks": [[j + 1 for j in b] for b in self.blocks]}

    @classmethod
    def from_json(cls, obj: dict, size: int | None = None) -> "Partition":
        blocks = [[int(j) - 1 for j in b] for b in obj["blocks"]]
        if size is None:
            size = sum(len(b) for b in blocks)
        return cls(size, blocks)


@dataclass(frozen=True, eq=False)
class Weights:
    """Weight vector with entries in (0, 1].

    ``clamped`` lists indices whose constructed value was raised to the clamp
    floor (see :func:`pwnorm.duality.weights_from_g`).
    """

    w: np.ndarray
    clamped: tuple[int, ...] = ()

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if w.size < 1:
            raise ValueError("weights must be non-empty")
        if not np.all(np.isfinite(w)) or np.any(w <= 0) or np.any(w > 1):
            raise ValueError("weights must lie in (0, 1]")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size

    @classmethod
    def ones(cls, n: int) -> "Weights":
        return cls(np.ones(n))

    def to_json(self) -> dict:
        return {"w": self.w.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Weights":
        return cls(obj["w"])


@dataclass(frozen=True)
class PWPair:
    partition: Partition
    weights: Weights

    def __post_init__(self):
        if self.partition.size != len(self.weights):
            raise ValueError("dimension mismatch between partition and weights")

    @property
    def size(self) -> int:
        return self.partition.size

    def to_json(self) -> dict:
        return {**self.partition.to_json(), **self.weights.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "PWPair":
        weights = Weights.from_json(obj)
        return cls(Partition.from_json(obj, size=len(weights)), weights)


@dataclass(frozen=True)
class Family:
    pairs: tuple[PWPair, ...]

    def __post_init__(self):
        pairs = tuple(self.pairs)
        if not pairs:
            raise ValueError("family must contain at least one pair")
        if len({pair.size for pair in pairs}) != 1:
            raise ValueError("dimension mismatch between family pairs")
        object.__setattr__(self, "pairs", pairs)

    @property
    def size(self) -> int:
        return self.pairs[0].size

    def __len__(self):
        return len(self.pairs)

    def extended(self, more: Sequence[PWPair]) -> "Family":
        return Family(self.pairs + tuple(more))

    def to_json(self) -> dict:
        return {"pairs": [pair.to_json() for pair in self.pairs]}

    @classmethod
    def from_json(cls, obj: dict) -> "Family":
        return cls(tuple(PWPair.from_json(o) for o in obj["pairs"]))


@dataclass(frozen=True, eq=False)
class BasisSequence:
    """Finite sequence of step functions used as a basis in L_p.

    ``groups`` optionally records a block structure on the indices (the
    doubly indexed grid); ``labels`` names each element for reports.
    """

    functions: tuple[StepFunction, ...]
    p: float
    tags: frozenset = frozenset()
    groups: tuple[tuple[int, ...], ...] | None = None
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        fns = tuple(self.functions)
        if not fns:
            raise ValueError("basis must contain at least one function")
        tags = frozenset(self.tags)
        unknown = tags - TAGS
        if unknown:
            raise ValueError(f"unknown basis tags {sorted(unknown)}")
        object.__setattr__(self, "functions", fns)
        object.__setattr__(self, "tags", tags)
        object.__setattr__(self, "p", _check_p(self.p))
        if self.groups is not None:
            groups = tuple(tuple(g) for g in self.groups)
            Partition(len(fns), groups)
            object.__setattr__(self, "groups", groups)
        if "normalized" in tags:
            for n, x in enumerate(fns):
                if abs(lp_norm(x, self.p) - 1.0) > NORMALIZATION_TOL:
                    raise ValueError(f"basis element {n} is not L_p-normalized")
        if "disjoint_supports" in tags:
            nonzero = self.matrix != 0
            if np.any(nonzero.sum(axis=0) > 1):
                raise ValueError("basis tagged disjoint_supports has overlapping supports")

    def __len__(self):
        return len(self.functions)

    @property
    def q(self) -> float:
        """Dual exponent p/(p-2) hosting the norming functions."""
        return self.p / (self.p - 2)

    @property
    def level(self) -> int:
        return max(f.level for f in self.functions)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Values of all elements at the common level, shape (N, 2**level)."""
        _, rows = align(*self.functions)
        out = np.vstack(rows)
        out.setflags(write=False)
        return out

    @cached_property
    def squares(self) -> np.ndarray:
        out = self.matrix**2
        out.setflags(write=False)
        return out

    def combination(self, a) -> StepFunction:
        a = _check_dim(a, self)
        return StepFunction(self.level, a @ self.matrix)

    def square_sum(self, a) -> StepFunction:
        """The step function sum_n a_n^2 x_n^2."""
        a = _check_dim(a, self)
        return StepFunction(self.level, (a * a) @ self.squares)


def _check_dim(a, basis: BasisSequence) -> np.ndarray:
    a = as_coefficients(a)
    if a.size != len(basis):
        raise ValueError(f"dimension mismatch: {a.size} coefficients for {len(basis)} basis elements")
    return a


def pw_norm(a, pair: PWPair, p: float) -> float:
    p = _check_p(p)
    a = as_coefficients(a)
    if a.size != pair.size:
        raise ValueError(f"dimension mismatch: {a.size} coefficients, pair over {pair.size}")
    aw = a * pair.weights.w
    scale = np.max(np.abs(aw))
    if scale == 0:
        return 0.0
    aw2 = (aw / scale) ** 2
    inner = np.array([aw2[list(b)].sum() for b in pair.partition.blocks])
    return float(scale * np.sum(inner ** (p / 2)) ** (1 / p))


def family_norms(a, fam: Family, p: float) -> np.ndarray:
    """Per-pair values of :func:`pw_norm`, in family order."""
    return np.array([pw_norm(a, pair, p) for pair in fam.pairs])


def family_norm(a, fam: Family, p: float) -> float:
    if not isinstance(fam, Family) or not fam.pairs:
        raise ValueError("family must be non-empty")
    return float(family_norms(a, fam, p).max())


def ell_p_norm(a, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"ell_p_norm needs p >= 1, got {p}")
    a = np.abs(as_coefficients(a))
    scale = a.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((a / scale) ** p) ** (1 / p))


def mixed_norm(groups: Sequence, p: float) -> float:
    """The (sum l_2)_{l_p} norm of a list of coefficient blocks.

    Like the other sequence norms here, entries are rescaled by the largest
    magnitude first so tiny or huge inputs neither underflow nor overflow.
    """
    p = _check_p(p)
    if len(groups) == 0:
        raise ValueError("mixed_norm needs at least one group")
    groups = [as_coefficients(g) for g in groups]
    scale = max(np.max(np.abs(g)) for g in groups)
    if scale == 0:
        return 0.0
    inner = np.array([np.sum((g / scale) ** 2) for g in groups])
    return float(scale * np.sum(inner ** (p / 2)) ** (1 / p))


def _scaled(a, basis: BasisSequence) -> tuple[float, np.ndarray]:
    a = _check_dim(a, basis)
    scale = float(np.max(np.abs(a)))
    return scale, (a / scale if scale else a)


def square_function_norm(a, basis: BasisSequence) -> float:
    """(int (sum a_n^2 x_n^2)^{p/2})^{1/p}, by exact step-function integration."""
    scale, a = _scaled(a, basis)
    return scale * lp_norm(basis.square_sum(a), basis.p / 2) ** 0.5 if scale else 0.0


def expansion_norm(a, basis: BasisSequence) -> float:
    scale, a = _scaled(a, basis)
    return scale * lp_norm(basis.combination(a), basis.p) if scale else 0.0

"""Dyadic step functions on [0, 1).

A :class:`StepFunction` at level ``m`` is constant on each of the ``2**m``
half-open intervals ``[k 2**-m, (k+1) 2**-m)``.  Every integral of such a
function is a finite sum, so integrals and L_p norms here are exact up to
floating point rounding.  Binary operations align grids implicitly.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_MAX_LEVEL = 20


def max_level() -> int:
    """Grid-size cap, overridable with the ``PWNORM_MAX_LEVEL`` environment variable."""
    raw = os.environ.get("PWNORM_MAX_LEVEL")
    if raw is None:
        return DEFAULT_MAX_LEVEL
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"PWNORM_MAX_LEVEL must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError("PWNORM_MAX_LEVEL must be non-negative")
    return value


def _check_level(level: int) -> None:
    cap = max_level()
    if level > cap:
        raise ValueError(f"level {level} exceeds the maximum supported level {cap}")


@dataclass(frozen=True, eq=False)
class StepFunction:
    level: int
    values: np.ndarray

    def __post_init__(self):
        level = int(self.level)
        if level < 0:
            raise ValueError("level must be non-negative")
        _check_level(level)
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != 2**level:
            raise ValueError(
                f"level {level} needs {2**level} values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("step function values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, c: float, level: int = 0) -> "StepFunction":
        return cls(level, np.full(2**level, float(c)))

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        m = max(self.level, other.level)
        return bool(np.array_equal(refine(self, m).values, refine(other, m).values))

    __hash__ = None

    def __repr__(self):
        return f"StepFunction(level={self.level}, values={self.values.tolist()!r})"

    def __add__(self, other):
        return pointwise("add", self, _as_step(other))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            return pointwise("mul", self, other)
        return StepFunction(self.level, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return StepFunction(self.level, -self.values)

    def __sub__(self, other):
        return pointwise("add", self, -_as_step(other))

    def to_json(self) -> dict:
        return {"level": self.level, "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        if not isinstance(obj, dict) or "level" not in obj or "values" not in obj:
            raise ValueError('step function JSON needs "level" and "values"')
        return cls(int(obj["level"]), obj["values"])


def _as_step(x) -> StepFunction:
    if isinstance(x, StepFunction):
        return x
    return StepFunction.constant(float(x))


def refine(f: StepFunction, m: int) -> StepFunction:
    if m < f.level:
        raise ValueError("cannot coarsen by refine")
    if m == f.level:
        return f
    _check_level(m)
    return StepFunction(m, np.repeat(f.values, 2 ** (m - f.level)))


def align(*fs: StepFunction) -> tuple[int, list[np.ndarray]]:
    """Common level of ``fs`` and their value vectors refined to it."""
    m = max(f.level for f in fs)
    return m, [refine(f, m).values for f in fs]


_OPS = {"add": np.add, "mul": np.multiply, "max": np.maximum}


def pointwise(op: str, f: StepFunction, h: StepFunction) -> StepFunction:
    try:
        ufunc = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown pointwise op {op!r}; expected one of {sorted(_OPS)}") from None
    m, (fv, hv) = align(f, h)
    return StepFunction(m, ufunc(fv, hv))


def abs_pow(f: StepFunction, alpha: float) -> StepFunction:
    if not alpha > 0:
        raise ValueError("abs_pow needs a positive exponent")
    return StepFunction(f.level, np.abs(f.values) ** alpha)


def integral(f: StepFunction) -> float:
    return float(np.sum(f.values)) * 2.0 ** (-f.level)


def lp_norm(f: StepFunction, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    return integral(abs_pow(f, p)) ** (1.0 / p)


@dataclass(frozen=True)
class DyadicSet:
    """Finite union of level-``level`` dyadic intervals, given by their indices."""

    level: int
    indices: tuple[int, ...]

    def __post_init__(self):
        level = int(self.level)
        if level < 0:
            raise ValueError("level must be non-negative")
        idx = tuple(sorted({int(k) for k in self.indices}))
        if idx and (idx[0] < 0 or idx[-1] >= 2**level):
            raise ValueError(f"interval index out of range for level {level}")
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def interval(cls, level: int, k: int) -> "DyadicSet":
        return cls(level, (k,))

    @property
    def measure(self) -> float:
        return len(self.indices) * 2.0 ** (-self.level)

    def mask(self, m: int) -> np.ndarray:
        """Boolean membership of the level-``m`` intervals, ``m >= level``."""
        if m < self.level:
            raise ValueError("cannot coarsen a dyadic set")
        base = np.zeros(2**self.level, dtype=bool)
        base[list(self.indices)] = True
        return np.repeat(base, 2 ** (m - self.level))

    def indicator(self) -> StepFunction:
        return StepFunction(self.level, self.mask(self.level).astype(float))


def support(f: StepFunction) -> DyadicSet:
    return DyadicSet(f.level, tuple(np.flatnonzero(f.values != 0)))


def check_disjoint(sets: Sequence[DyadicSet]) -> int:
    """Validate ``sets`` as non-empty and pairwise disjoint; returns their common level."""
    if not sets:
        raise ValueError("need at least one set")
    m = max(s.level for s in sets)
    count = np.zeros(2**m, dtype=int)
    for s in sets:
        if not s.indices:
            raise ValueError("empty set in list")
        count += s.mask(m)
    if np.any(count > 1):
        raise ValueError("sets overlap")
    return m


def cond_expect(f: StepFunction, sets: Iterable[DyadicSet]) -> StepFunction:
    """Conditional expectation onto the sigma-algebra generated by ``sets``.

    Constant on each set (its average of ``f``) and zero off their union.
    """
    sets = list(sets)
    m = max(check_disjoint(sets), f.level)
    fv = refine(f, m).values
    out = np.zeros(2**m)
    for s in sets:
        mask = s.mask(m)
        out[mask] = fv[mask].mean()
    return StepFunction(m, out)

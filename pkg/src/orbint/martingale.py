"""Conditional expectations onto orbit sigma-fields, on discretised circle and cylinder spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.stats import hypergeom

from .actions import ActionSystem, Arc
from .errors import DomainError, PointNotInRegion, UnsupportedLevel


# ---------------------------------------------------------------- circle


@dataclass(frozen=True)
class OrbitPartition:
    """Orbits of ``Z/2^n Z`` inside a dyadic arc, on the grid ``(i + offset) / 2^resolution``.

    Grid index ``i`` and ``i + 2^(resolution - n)`` lie in the same orbit, so the
    block of ``i`` is ``i mod 2^(resolution - n)``, restricted to the arc.  All
    bookkeeping is integer arithmetic.
    """

    level: int
    resolution: int
    start: int  # first grid index of the arc
    stop: int  # one past the last
    offset: float = 0.5

    def __post_init__(self):
        if not 0 <= self.level <= self.resolution:
            raise DomainError("level must not exceed the grid resolution")
        if not 0 <= self.start < self.stop <= 2**self.resolution:
            raise DomainError("arc must be a non-empty run of grid cells inside [0, 1)")
        if not 0 <= self.offset < 1:
            raise DomainError("grid offset must lie in [0, 1)")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop, dtype=np.int64)

    @property
    def points(self) -> np.ndarray:
        return (self.indices + self.offset) / 2.0**self.resolution

    @property
    def cell_weight(self) -> float:
        return 2.0**-self.resolution

    @property
    def block_of(self) -> np.ndarray:
        return self.indices % 2 ** (self.resolution - self.level)

    @property
    def blocks(self) -> list:
        ids = self.block_of
        return [self.indices[ids == b] for b in np.unique(ids)]

    def locate(self, x) -> int:
        """Grid index of ``x``; raises :class:`PointNotInRegion` off the grid or outside the arc."""
        y = float(x) * 2.0**self.resolution - self.offset
        i = int(round(y))
        if y != i or not self.start <= i < self.stop:
            raise PointNotInRegion(f"{x} is not a grid point of the partition region")
        return i

    def refine_level(self, level: int) -> "OrbitPartition":
        return OrbitPartition(level, self.resolution, self.start, self.stop, self.offset)


def torus_partition(level: int, resolution: int, region: Arc = Arc(0.0, 1.0),
                    offset: float = 0.5) -> OrbitPartition:
    """Partition of the grid points of a dyadic arc into ``Z/2^level Z`` orbit pieces."""
    scale = 2**resolution
    a = region.start * scale
    b = (region.start + region.length) * scale
    if a != int(a) or b != int(b) or b > scale:
        raise DomainError("arc endpoints must be grid points inside [0, 1]")
    return OrbitPartition(level, resolution, int(a), int(b), offset)


def block_average(partition: OrbitPartition, values: np.ndarray) -> np.ndarray:
    """Replace each grid value by the mean over its block (cells carry equal weight).

    Block sums are correctly rounded and block sizes are powers of two, so
    averaging an already block-constant array returns it unchanged.
    """
    values = np.asarray(values)
    ids = partition.block_of
    order = np.argsort(ids, kind="stable")
    bounds = np.flatnonzero(np.diff(ids[order])) + 1
    means = []
    for chunk in np.split(values[order], bounds):
        if np.iscomplexobj(chunk):
            means.append(complex(math.fsum(chunk.real), math.fsum(chunk.imag)) / len(chunk))
        else:
            means.append(math.fsum(chunk) / len(chunk))
    sizes = np.diff(np.concatenate(([0], bounds, [len(ids)])))
    out = np.empty(len(ids), dtype=complex if np.iscomplexobj(values) else float)
    out[order] = np.repeat(np.array(means), sizes)
    return out


# ---------------------------------------------------------------- cylinder


@dataclass(frozen=True)
class SymmetricCylinderFunction:
    """A function of the number of ones among the first ``m`` coordinates."""

    m: int
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.shape != (self.m + 1,):
            raise DomainError("table needs one entry per count 0..m")
        object.__setattr__(self, "table", t)

    def __call__(self, words) -> np.ndarray:
        w = np.atleast_2d(np.asarray(words))
        return self.table[w[:, : self.m].sum(axis=1)]


def first_coordinate() -> SymmetricCylinderFunction:
    return SymmetricCylinderFunction(1, np.array([0.0, 1.0]))


def symmetric_expectation(f: SymmetricCylinderFunction, n: int) -> SymmetricCylinderFunction:
    """``E_n f``: average of ``f`` over permutations of the first ``n`` coordinates.

    Given ``s`` ones among the first ``n`` coordinates, the count among the first
    ``m`` is hypergeometric.
    """
    if n < f.m:
        raise UnsupportedLevel(f"level {n} does not act on all {f.m} coordinates of f")
    s = np.arange(n + 1)[:, None]
    k = np.arange(f.m + 1)[None, :]
    pmf = hypergeom.pmf(k, n, s, f.m)
    return SymmetricCylinderFunction(n, pmf @ f.table)


@dataclass(frozen=True)
class CylinderPartition:
    """Blocks of ``Sym(n)`` acting on binary words: same count of ones in the first ``n``
    coordinates and the same remaining coordinates."""

    level: int
    length: int
    p: float

    def key(self, word) -> tuple:
        w = np.asarray(word)
        return int(w[: self.level].sum()), tuple(int(v) for v in w[self.level :])

    def block(self, word, limit: int = 200_000) -> np.ndarray:
        ones, tail = self.key(word)
        n = self.level
        if math.comb(n, ones) > limit:
            raise UnsupportedLevel("block too large to enumerate")
        out = []
        for pos in combinations(range(n), ones):
            w = np.zeros(self.length, dtype=np.int8)
            w[list(pos)] = 1
            w[n:] = tail
            out.append(w)
        return np.array(out)


def orbit_conditional_expectation(partition, f, x):
    """Average of ``f`` over the block of ``x``, weighted by the measure.

    Circle partitions take a grid point; cylinder partitions take a binary word
    (blocks there have equal weights because counts of ones agree).
    """
    if isinstance(partition, OrbitPartition):
        i = partition.locate(x)
        b = i % 2 ** (partition.resolution - partition.level)
        idx = partition.indices
        members = idx[(idx % 2 ** (partition.resolution - partition.level)) == b]
        pts = (members + partition.offset) / 2.0**partition.resolution
        vals = np.asarray(f(pts[:, None]))
        if np.iscomplexobj(vals):
            return complex(math.fsum(vals.real) / len(vals), math.fsum(vals.imag) / len(vals))
        return math.fsum(vals) / len(vals)
    if isinstance(partition, CylinderPartition):
        word = np.asarray(x)
        if word.shape != (partition.length,) or not np.all((word == 0) | (word == 1)):
            raise PointNotInRegion("point is not a binary word of the stored length")
        if isinstance(f, SymmetricCylinderFunction) and partition.level >= f.m:
            return float(symmetric_expectation(f, partition.level)(word[None, :])[0])
        vals = np.asarray(f(partition.block(word)), dtype=float)
        return math.fsum(vals) / len(vals)
    raise DomainError("unknown partition type")


# ---------------------------------------------------------------- reversed martingale check


@dataclass
class MartingaleReport:
    tower_residual: float
    levels: list
    values: np.ndarray  # (sample, levels)
    limit: float
    final_deviation: np.ndarray
    within_fraction: float
    passed: bool
    median_deviation: np.ndarray = field(default=None)


def torus_martingale_check(f, levels: Sequence[int], resolution: int, sample: int = 1000,
                           seed: int = 0, tol: float = 1e-10, limit=None,
                           region: Arc = Arc(0.0, 1.0), band: float = 1e-12,
                           required_fraction: float = 1.0) -> MartingaleReport:
    """Tower property and limit check for ``Z/2^n Z`` orbit partitions of a dyadic arc.

    ``limit`` defaults to the mean of ``f`` (the limit over the whole circle).
    """
    levels = list(levels)
    base = torus_partition(levels[0], resolution, region)
    vals = np.asarray(f(base.points[:, None]))
    rng = np.random.default_rng(seed)
    pick = rng.integers(0, len(base.indices), sample)
    cond = {n: block_average(base.refine_level(n), vals) for n in levels}
    tower = 0.0
    for n, m in zip(levels, levels[1:]):
        twice = block_average(base.refine_level(m), cond[n])
        tower = max(tower, float(np.max(np.abs(twice - cond[m])[pick])))
    lim = f.mean if limit is None else limit
    traj = np.stack([cond[n][pick] for n in levels], axis=1)
    dev = np.abs(traj[:, -1] - lim)
    frac = float(np.mean(dev <= band))
    med = np.median(np.abs(traj - lim), axis=0)
    return MartingaleReport(tower, levels, traj, lim, dev, frac,
                            tower <= tol and frac >= required_fraction, med)


def cylinder_martingale_check(system: ActionSystem, f: SymmetricCylinderFunction, levels: Sequence[int],
                              sample: int = 1000, seed: int = 0, tol: float = 1e-10,
                              limit: float = None, band: float = None,
                              required_fraction: float = 0.99) -> MartingaleReport:
    """Tower property and law-of-large-numbers limit on the exchangeable cylinder.

    ``limit`` defaults to the mean of ``f`` under the product measure and ``band``
    to four binomial standard errors at the last level.
    """
    levels = list(levels)
    p = system.space.p
    words = system.space.sample(sample, seed)
    tables = {n: symmetric_expectation(f, n) for n in levels}
    tower = 0.0
    for n, m in zip(levels, levels[1:]):
        twice = symmetric_expectation(tables[n], m)
        tower = max(tower, float(np.max(np.abs(twice.table - tables[m].table))))
        tower = max(tower, float(np.max(np.abs(twice(words) - tables[m](words)))))
    if limit is None:
        k = np.arange(f.m + 1)
        limit = float(np.sum(f.table * _binom_pmf(k, f.m, p)))
    if band is None:
        var = float(np.sum((f.table - limit) ** 2 * _binom_pmf(np.arange(f.m + 1), f.m, p)))
        band = 4.0 * math.sqrt(var / levels[-1])
    traj = np.stack([tables[n](words) for n in levels], axis=1)
    dev = np.abs(traj[:, -1] - limit)
    frac = float(np.mean(dev <= band))
    med = np.median(np.abs(traj - limit), axis=0)
    return MartingaleReport(tower, levels, traj, limit, dev, frac,
                            tower <= tol and frac >= required_fraction, med)


def _binom_pmf(k, m, p):
    return np.array([math.comb(m, int(i)) * p**i * (1 - p) ** (m - i) for i in np.atleast_1d(k)])


def reversed_martingale_check(system: ActionSystem, f, levels: Sequence[int], **kw) -> MartingaleReport:
    """Dispatch to the circle or cylinder check according to the system's space."""
    if system.space.kind == "cylinder":
        return cylinder_martingale_check(system, f, levels, **kw)
    if system.space.kind == "torus" and system.space.dim == 1:
        return torus_martingale_check(f, levels, **kw)
    raise UnsupportedLevel("martingale checks need compact levels on the circle or the cylinder")

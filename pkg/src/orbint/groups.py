"""Concrete locally compact groups, their subgroup ladders and modular functions.

The instance family is closed: tori, Euclidean spaces, finite cyclic subgroups of
the circle, scaled lattices, finite symmetric groups inside the group of finitary
permutations, and the ``ax + b`` group with its discrete-scale subgroups.

Coordinates are stored as plain tuples on :class:`GroupElement`; the vectorised
helpers (``compose_arrays``, ``ModularFn.on_coords``) work on ``(K, d)`` arrays.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, MismatchedGroups, TruncationTooSmall, UnsupportedLevel

TORUS = "torus"
LINE = "line"
CYCLIC = "cyclic"
LATTICE = "lattice"
SYM = "sym"
SYM_INF = "sym_inf"
AFFINE = "affine"
AFFINE_LEVEL = "affine_level"

_NAMES = {
    TORUS: "Torus",
    LINE: "RealLine",
    CYCLIC: "FiniteCyclic",
    LATTICE: "ScaledLattice",
    SYM: "SymFinite",
    SYM_INF: "SymInfinite",
    AFFINE: "Affine",
    AFFINE_LEVEL: "AffineScaleLevel",
}

# snapping tolerance (relative to the level spacing) used when building elements
_SNAP = 1e-9


@dataclass(frozen=True)
class GroupId:
    kind: str
    dim: int = 1
    param: Union[int, float, None] = None

    def __post_init__(self):
        if self.kind not in _NAMES:
            raise DomainError(f"unknown group kind {self.kind!r}")

    def __str__(self):
        if self.kind in (TORUS, LINE):
            return f"{_NAMES[self.kind]}({self.dim})"
        if self.kind == LATTICE:
            return f"{_NAMES[self.kind]}({self.param!r}, dim={self.dim})"
        if self.kind in (SYM_INF, AFFINE):
            return _NAMES[self.kind]
        return f"{_NAMES[self.kind]}({self.param})"

    @property
    def ambient(self) -> "GroupId":
        if self.kind == CYCLIC:
            return torus(1)
        if self.kind == LATTICE:
            return real_line(self.dim)
        if self.kind == SYM:
            return sym_infinite()
        if self.kind == AFFINE_LEVEL:
            return affine()
        return self

    @property
    def is_ambient(self) -> bool:
        return self.ambient == self

    @property
    def is_discrete(self) -> bool:
        return self.kind in (CYCLIC, LATTICE, SYM, SYM_INF)

    @property
    def is_compact(self) -> bool:
        return self.kind in (TORUS, CYCLIC, SYM)

    @property
    def is_unimodular(self) -> bool:
        return self.kind not in (AFFINE, AFFINE_LEVEL)

    @property
    def is_permutation(self) -> bool:
        return self.kind in (SYM, SYM_INF)

    @property
    def coord_dim(self) -> int:
        if self.kind in (AFFINE, AFFINE_LEVEL):
            return 2
        if self.kind == SYM:
            return int(self.param)
        if self.kind == SYM_INF:
            return 0  # variable length words
        return self.dim


def torus(d: int = 1) -> GroupId:
    return GroupId(TORUS, d)


def real_line(d: int = 1) -> GroupId:
    return GroupId(LINE, d)


def cyclic(n: int) -> GroupId:
    if int(n) != n or n < 1:
        raise DomainError(f"cyclic order must be a positive integer, got {n!r}")
    return GroupId(CYCLIC, 1, int(n))


def scaled_lattice(step: float, dim: int = 1) -> GroupId:
    if not step > 0:
        raise DomainError("lattice step must be positive")
    return GroupId(LATTICE, dim, float(step))


def sym(n: int) -> GroupId:
    if int(n) != n or n < 1:
        raise DomainError(f"symmetric group degree must be a positive integer, got {n!r}")
    return GroupId(SYM, 1, int(n))


def sym_infinite() -> GroupId:
    return GroupId(SYM_INF, 1)


def affine() -> GroupId:
    return GroupId(AFFINE, 1)


def affine_level(m: int) -> GroupId:
    if int(m) != m or m < 0:
        raise DomainError("affine scale level must be a non-negative integer")
    return GroupId(AFFINE_LEVEL, 1, int(m))


def is_subgroup(h: GroupId, g: GroupId) -> bool:
    """True when every element of ``h`` is an element of ``g``."""
    if h == g:
        return True
    if h.ambient != g.ambient:
        return False
    if g.is_ambient:
        return True
    if h.is_ambient:
        return False
    if h.kind == CYCLIC:
        return g.param % h.param == 0
    if h.kind == LATTICE:
        ratio = Fraction(h.param) / Fraction(g.param)
        return ratio.denominator == 1
    if h.kind in (SYM, AFFINE_LEVEL):
        return h.param <= g.param
    return False


# ---------------------------------------------------------------- elements


def _mod1(x: float) -> float:
    r = x - math.floor(x)
    return 0.0 if r >= 1.0 else r


def _cyclic_index(x: float, n: int) -> int:
    return int(round(x * n)) % n


def _lattice_index(x: float, step: float) -> int:
    return int(round(x / step))


def _scale_index(a: float, m: int) -> int:
    return int(round(math.log2(a) * 2**m))


def scale_from_index(k: int, m: int) -> float:
    return 2.0 ** (k / 2**m)


def _is_permutation(word: Sequence[int]) -> bool:
    return sorted(word) == list(range(len(word)))


@dataclass(frozen=True)
class GroupElement:
    group: GroupId
    coords: tuple

    def __post_init__(self):
        if not is_member(self.group, self.coords):
            raise DomainError(f"{self.coords!r} is not an element of {self.group}")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


def is_member(group: GroupId, coords: Sequence) -> bool:
    """Exact membership test on canonical coordinates."""
    coords = tuple(coords)
    kind = group.kind
    if kind in (SYM, SYM_INF):
        if not all(isinstance(c, (int, np.integer)) for c in coords):
            return False
        if not _is_permutation(coords):
            return False
        if kind == SYM:
            return len(coords) == group.param
        return len(coords) == 0 or coords[-1] != len(coords) - 1
    if len(coords) != group.coord_dim:
        return False
    if not all(math.isfinite(float(c)) for c in coords):
        return False
    if kind == TORUS:
        return all(0.0 <= c < 1.0 for c in coords)
    if kind == LINE:
        return True
    if kind == CYCLIC:
        n = group.param
        x = coords[0]
        return 0.0 <= x < 1.0 and _cyclic_index(x, n) / n == x
    if kind == LATTICE:
        step = group.param
        return all(_lattice_index(c, step) * step == c for c in coords)
    if kind == AFFINE:
        return coords[0] > 0
    if kind == AFFINE_LEVEL:
        a = coords[0]
        return a > 0 and scale_from_index(_scale_index(a, group.param), group.param) == a
    return False


def element(group: GroupId, coords) -> GroupElement:
    """Build an element, reducing coordinates to the canonical domain.

    Discrete-level coordinates within a relative ``1e-9`` of a level point are
    snapped onto it; anything further away raises :class:`DomainError`.
    """
    if np.isscalar(coords):
        coords = (coords,)
    coords = tuple(coords)
    kind = group.kind
    if kind == TORUS:
        coords = tuple(_mod1(float(c)) for c in coords)
    elif kind == LINE:
        coords = tuple(float(c) for c in coords)
    elif kind == CYCLIC:
        n = group.param
        x = float(coords[0])
        if abs(x * n - round(x * n)) > _SNAP * max(n, 1):
            raise DomainError(f"{x} is not in {group}")
        coords = (_cyclic_index(x, n) / n,)
    elif kind == LATTICE:
        step = group.param
        out = []
        for c in coords:
            k = _lattice_index(float(c), step)
            if abs(float(c) - k * step) > _SNAP * step:
                raise DomainError(f"{c} is not in {group}")
            out.append(k * step)
        coords = tuple(out)
    elif kind == AFFINE:
        a, b = (float(c) for c in coords)
        if not a > 0:
            raise DomainError("affine elements need a > 0")
        coords = (a, b)
    elif kind == AFFINE_LEVEL:
        a, b = (float(c) for c in coords)
        if not a > 0:
            raise DomainError("affine elements need a > 0")
        m = group.param
        k = _scale_index(a, m)
        if abs(math.log2(a) * 2**m - k) > _SNAP * 2**m:
            raise DomainError(f"scale {a} is not in {group}")
        coords = (scale_from_index(k, m), b)
    elif kind == SYM:
        word = [int(c) for c in coords]
        if not _is_permutation(word) or len(word) > group.param:
            raise DomainError(f"{coords} is not a permutation in {group}")
        coords = tuple(word + list(range(len(word), group.param)))
    elif kind == SYM_INF:
        word = [int(c) for c in coords]
        if not _is_permutation(word):
            raise DomainError(f"{coords} is not a permutation word")
        while word and word[-1] == len(word) - 1:
            word.pop()
        coords = tuple(word)
    return GroupElement(group, coords)


def from_index(group: GroupId, k, b: float = 0.0) -> GroupElement:
    """Element of a discrete level given by its integer index (vector for lattices)."""
    if group.kind == CYCLIC:
        return GroupElement(group, ((int(k) % group.param) / group.param,))
    if group.kind == LATTICE:
        ks = (k,) if np.isscalar(k) else tuple(k)
        return GroupElement(group, tuple(int(i) * group.param for i in ks))
    if group.kind == AFFINE_LEVEL:
        return GroupElement(group, (scale_from_index(int(k), group.param), float(b)))
    raise DomainError(f"{group} has no integer indexing")


def perm_from_cycles(n: int, *cycles: Sequence[int], base: int = 1) -> GroupElement:
    """Permutation of ``sym(n)`` from cycle notation (1-based by default)."""
    word = list(range(n))
    for cyc in cycles:
        cyc = [c - base for c in cyc]
        for i, c in enumerate(cyc):
            word[c] = cyc[(i + 1) % len(cyc)]
    return element(sym(n), word)


def identity(group: GroupId) -> GroupElement:
    if group.kind == SYM:
        return GroupElement(group, tuple(range(group.param)))
    if group.kind == SYM_INF:
        return GroupElement(group, ())
    if group.kind in (AFFINE, AFFINE_LEVEL):
        return GroupElement(group, (1.0, 0.0))
    return GroupElement(group, (0.0,) * group.coord_dim)


def _product_group(g: GroupId, h: GroupId) -> GroupId:
    if g == h or is_subgroup(h, g):
        return g
    if is_subgroup(g, h):
        return h
    if g.ambient == h.ambient:
        if g.kind == SYM and h.kind == SYM:
            return sym(max(g.param, h.param))
        return g.ambient
    raise MismatchedGroups(f"cannot compose elements of {g} and {h}")


def _compose_words(p: Sequence[int], q: Sequence[int]) -> list:
    # (p o q)(i) = p[q[i]] on the union of the supports
    n = max(len(p), len(q))
    p = list(p) + list(range(len(p), n))
    q = list(q) + list(range(len(q), n))
    return [p[q[i]] for i in range(n)]


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group product ``g h``; the affine law is ``(a,b)(a',b') = (aa', ab'+b)``."""
    target = _product_group(g.group, h.group)
    kind = target.kind
    if kind == CYCLIC:
        n = target.param
        k = _cyclic_index(g.coords[0], n) + _cyclic_index(h.coords[0], n)
        return from_index(target, k)
    if kind == TORUS:
        return GroupElement(target, tuple(_mod1(x + y) for x, y in zip(g.coords, h.coords)))
    if kind == LATTICE:
        s = target.param
        ks = [_lattice_index(x, s) + _lattice_index(y, s) for x, y in zip(g.coords, h.coords)]
        return from_index(target, ks)
    if kind == LINE:
        return GroupElement(target, tuple(x + y for x, y in zip(g.coords, h.coords)))
    if kind in (AFFINE, AFFINE_LEVEL):
        (a, b), (c, d) = g.coords, h.coords
        if kind == AFFINE_LEVEL:
            m = target.param
            scale = scale_from_index(_scale_index(a, m) + _scale_index(c, m), m)
        else:
            scale = a * c
        return GroupElement(target, (scale, a * d + b))
    if kind in (SYM, SYM_INF):
        return element(target, _compose_words(g.coords, h.coords))
    raise MismatchedGroups(str(target))


def inverse(g: GroupElement) -> GroupElement:
    group = g.group
    kind = group.kind
    if kind == CYCLIC:
        return from_index(group, -_cyclic_index(g.coords[0], group.param))
    if kind == TORUS:
        return GroupElement(group, tuple(_mod1(-x) for x in g.coords))
    if kind == LATTICE:
        return from_index(group, [-_lattice_index(x, group.param) for x in g.coords])
    if kind == LINE:
        return GroupElement(group, tuple(-x for x in g.coords))
    if kind == AFFINE:
        a, b = g.coords
        return GroupElement(group, (1.0 / a, -b / a))
    if kind == AFFINE_LEVEL:
        a, b = g.coords
        m = group.param
        return GroupElement(group, (scale_from_index(-_scale_index(a, m), m), -b / a))
    word = g.coords
    inv = [0] * len(word)
    for i, w in enumerate(word):
        inv[w] = i
    return element(group, inv)


def compose_arrays(group: GroupId, left, right) -> np.ndarray:
    """Vectorised product for real-coordinate groups; broadcasts ``(K, d)`` arrays."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    kind = group.ambient.kind
    if kind == TORUS:
        out = left + right
        out -= np.floor(out)
        out[out >= 1.0] = 0.0
        return out
    if kind == LINE:
        return left + right
    if kind == AFFINE:
        a, b = left[..., 0], left[..., 1]
        c, d = right[..., 0], right[..., 1]
        return np.stack(np.broadcast_arrays(a * c, a * d + b), axis=-1)
    raise MismatchedGroups(f"no array law for {group}")


def inverse_arrays(group: GroupId, coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    kind = group.ambient.kind
    if kind == TORUS:
        out = -coords
        out -= np.floor(out)
        out[out >= 1.0] = 0.0
        return out
    if kind == LINE:
        return -coords
    if kind == AFFINE:
        a, b = coords[..., 0], coords[..., 1]
        return np.stack([1.0 / a, -b / a], axis=-1)
    raise MismatchedGroups(f"no array law for {group}")


# ---------------------------------------------------------------- modular functions


@dataclass(frozen=True)
class ModularFn:
    """Modular function of an ambient group; ``1/a`` on the affine group."""

    group: GroupId

    def __call__(self, g: GroupElement) -> float:
        if g.group.ambient != self.group.ambient:
            raise MismatchedGroups(f"{g.group} is not inside {self.group}")
        if self.group.ambient.kind == AFFINE:
            return 1.0 / g.coords[0]
        return 1.0

    def on_coords(self, coords) -> np.ndarray:
        coords = np.asarray(coords)
        if self.group.ambient.kind == AFFINE:
            return 1.0 / coords[..., 0]
        return np.ones(coords.shape[:-1] if coords.ndim > 1 else coords.shape[:1])


def modular_function(group: GroupId) -> ModularFn:
    return ModularFn(group.ambient)


# ---------------------------------------------------------------- chains


@dataclass(frozen=True)
class GroupChain:
    """An ambient group with an ordered ladder of closed subgroups.

    ``levels[i]`` is level ``start + i``.  With ``nested=False`` the ladder is
    just a schedule of subgroups (e.g. all of ``Z/nZ`` for ``n = 1..N``), which
    is what full-sequence Riemann sums need.
    """

    ambient: GroupId
    levels: tuple
    start: int = 0
    nested: bool = True
    mc_verified: bool = False

    def __post_init__(self):
        if not self.ambient.is_ambient:
            raise DomainError(f"{self.ambient} is not an ambient group")
        object.__setattr__(self, "levels", tuple(self.levels))
        for lev in self.levels:
            if not is_subgroup(lev, self.ambient):
                raise DomainError(f"{lev} is not a subgroup of {self.ambient}")
        if self.nested:
            for lo, hi in zip(self.levels, self.levels[1:]):
                if not is_subgroup(lo, hi):
                    raise DomainError(f"levels not increasing: {lo} is not inside {hi}")

    @property
    def modular(self) -> ModularFn:
        return modular_function(self.ambient)

    @property
    def indices(self) -> range:
        return range(self.start, self.start + len(self.levels))

    def level(self, n) -> GroupId:
        if isinstance(n, GroupId):
            if not is_subgroup(n, self.ambient):
                raise UnsupportedLevel(f"{n} is not a subgroup of {self.ambient}")
            return n
        if n == "ambient":
            return self.ambient
        i = int(n) - self.start
        if not 0 <= i < len(self.levels):
            raise UnsupportedLevel(f"level {n} outside {self.indices}")
        return self.levels[i]

    def with_mc(self, verified: bool = True) -> "GroupChain":
        return replace(self, mc_verified=verified)


def dyadic_torus_chain(k_max: int, k_min: int = 0) -> GroupChain:
    """``Z/2^k Z`` inside the circle for ``k = k_min..k_max``."""
    return GroupChain(torus(1), tuple(cyclic(2**k) for k in range(k_min, k_max + 1)), start=k_min)


def cyclic_schedule(n_max: int, n_min: int = 1) -> GroupChain:
    """Every ``Z/nZ`` for ``n = n_min..n_max``; not nested."""
    return GroupChain(torus(1), tuple(cyclic(n) for n in range(n_min, n_max + 1)),
                      start=n_min, nested=False)


def dyadic_line_chain(n_max: int, n_min: int = 0, dim: int = 1) -> GroupChain:
    """``2^-n Z^d`` inside ``R^d``."""
    return GroupChain(real_line(dim),
                      tuple(scaled_lattice(2.0**-n, dim) for n in range(n_min, n_max + 1)),
                      start=n_min)


def sym_chain(n_max: int, n_min: int = 1) -> GroupChain:
    return GroupChain(sym_infinite(), tuple(sym(n) for n in range(n_min, n_max + 1)), start=n_min)


def affine_chain(m_max: int, m_min: int = 0) -> GroupChain:
    """``{(2^(k/2^m), b)}`` inside the affine group; MC holds with ``Delta(a,b) = 1/a``."""
    return GroupChain(affine(), tuple(affine_level(m) for m in range(m_min, m_max + 1)), start=m_min)


# ---------------------------------------------------------------- truncation and atoms


@dataclass(frozen=True)
class TruncationPolicy:
    """Caller-supplied window for non-compact coordinates.

    ``bounds`` holds one ``(lo, hi)`` pair per non-compact coordinate, in natural
    coordinates (for the affine group: ``(a_lo, a_hi), (b_lo, b_hi)``).
    ``cells`` fixes the number of midpoint cells per continuous axis; otherwise
    ``cells_per_unit`` times the axis length is used.
    """

    bounds: tuple = ()
    tol: float = 0.05
    cells_per_unit: int = 2**14
    cells: Union[tuple, None] = None

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        for lo, hi in bounds:
            if not hi > lo:
                raise DomainError(f"empty truncation window ({lo}, {hi})")
        if not 0 < self.tol < 0.5:
            raise DomainError("doubling tolerance must lie in (0, 0.5)")
        object.__setattr__(self, "bounds", bounds)
        if self.cells is not None:
            object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))

    def doubled(self, log_first: bool = False) -> "TruncationPolicy":
        """Window doubled about its centre (in log scale for a multiplicative axis)."""
        out = []
        for i, (lo, hi) in enumerate(self.bounds):
            if log_first and i == 0:
                llo, lhi = math.log(lo), math.log(hi)
                mid, half = (llo + lhi) / 2, (lhi - llo)
                out.append((math.exp(mid - half), math.exp(mid + half)))
            else:
                mid, half = (lo + hi) / 2, (hi - lo)
                out.append((mid - half, mid + half))
        cells = None if self.cells is None else tuple(2 * c for c in self.cells)
        return replace(self, bounds=tuple(out), cells=cells)

    def axis_cells(self, i: int, length: float) -> int:
        if self.cells is not None:
            return self.cells[i]
        return max(1, int(math.ceil(length * self.cells_per_unit - 1e-9)))

    def covers(self, lo: Sequence[float], hi: Sequence[float]) -> bool:
        return all(wlo <= a and b <= whi for (wlo, whi), a, b in zip(self.bounds, lo, hi))


@dataclass(frozen=True)
class Atoms:
    """Weighted finite sample of a level: coordinates ``(K, d)`` and weights ``(K,)``."""

    group: GroupId
    coords: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def elements(self) -> list:
        if self.group.is_permutation:
            return [element(self.group, row) for row in self.coords]
        return [element(self.group, row) for row in self.coords]

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)


def midpoint_grid(lo: float, hi: float, n: int):
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h, h


def _require_trunc(group, trunc, naxes):
    if trunc is None or len(trunc.bounds) < naxes:
        raise TruncationTooSmall(f"{group} is not compact: a truncation window is required")


def enumerate_level(chain: GroupChain, level, trunc: TruncationPolicy = None,
                    support=None) -> Atoms:
    """All elements of a level inside the truncation window, with Fell-normalised weights.

    ``level`` is a chain index, a :class:`GroupId` or ``"ambient"`` (in which case a
    midpoint quadrature of the ambient right Haar measure is returned).  ``support``
    is an optional ``(lo, hi)`` box of group coordinates the window must contain.
    """
    from .measures import fell_haar

    group = chain.level(level)
    haar = fell_haar(chain, level)
    kind = group.kind

    if support is not None and not group.is_compact:
        _require_trunc(group, trunc, len(support[0]))
        if not trunc.covers(*support):
            raise TruncationTooSmall(
                f"window {trunc.bounds} does not contain the required support {support}")

    if kind == CYCLIC:
        n = group.param
        return Atoms(group, (np.arange(n) / n)[:, None], np.full(n, haar.atom_weight))

    if kind == SYM:
        n = group.param
        if n > 9:
            raise UnsupportedLevel(f"{group} has {math.factorial(n)} elements; too many to list")
        words = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
        return Atoms(group, words, np.full(len(words), haar.atom_weight))

    if kind == LATTICE:
        _require_trunc(group, trunc, group.dim)
        step = group.param
        axes = []
        for lo, hi in trunc.bounds[: group.dim]:
            ks = np.arange(math.ceil(lo / step - 1e-12), math.floor(hi / step + 1e-12) + 1)
            axes.append(ks * step)
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=-1)
        return Atoms(group, coords, np.full(len(coords), haar.atom_weight))

    if kind == AFFINE_LEVEL:
        _require_trunc(group, trunc, 2)
        m = group.param
        (alo, ahi), (blo, bhi) = trunc.bounds[:2]
        if not alo > 0:
            raise DomainError("affine scale window must be positive")
        ks = np.arange(math.ceil(math.log2(alo) * 2**m - 1e-9),
                       math.floor(math.log2(ahi) * 2**m + 1e-9) + 1)
        bs, hb = midpoint_grid(blo, bhi, trunc.axis_cells(1, bhi - blo))
        K, B = np.meshgrid(2.0 ** (ks / 2**m), bs, indexing="ij")
        coords = np.stack([K.ravel(), B.ravel()], axis=-1)
        return Atoms(group, coords, np.full(len(coords), haar.atom_weight * hb))

    if kind == TORUS:
        if trunc is None:
            raise TruncationTooSmall("ambient torus quadrature needs a cell count")
        axes, w = [], haar.norm_constant
        for i in range(group.dim):
            pts, h = midpoint_grid(0.0, 1.0, trunc.axis_cells(i, 1.0))
            axes.append(pts)
            w *= h
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=-1)
        return Atoms(group, coords, np.full(len(coords), w))

    if kind == LINE:
        _require_trunc(group, trunc, group.dim)
        axes, w = [], haar.norm_constant
        for i, (lo, hi) in enumerate(trunc.bounds[: group.dim]):
            pts, h = midpoint_grid(lo, hi, trunc.axis_cells(i, hi - lo))
            axes.append(pts)
            w *= h
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=-1)
        return Atoms(group, coords, np.full(len(coords), w))

    if kind == AFFINE:
        _require_trunc(group, trunc, 2)
        (alo, ahi), (blo, bhi) = trunc.bounds[:2]
        llo, lhi = math.log(alo), math.log(ahi)
        al, ha = midpoint_grid(llo, lhi, trunc.axis_cells(0, lhi - llo))
        bs, hb = midpoint_grid(blo, bhi, trunc.axis_cells(1, bhi - blo))
        A, B = np.meshgrid(np.exp(al), bs, indexing="ij")
        coords = np.stack([A.ravel(), B.ravel()], axis=-1)
        # right Haar a^-1 da db is d(log a) db in the log chart
        return Atoms(group, coords, np.full(len(coords), haar.norm_constant * ha * hb))

    raise UnsupportedLevel(f"cannot enumerate {group}")


def level_points_are_dense(chain: GroupChain, level) -> float:
    """Largest gap of the level atoms on the circle (torus chains only)."""
    atoms = enumerate_level(chain, level)
    pts = np.sort(atoms.coords[:, 0])
    gaps = np.diff(np.concatenate([pts, [pts[0] + 1.0]]))
    return float(gaps.max())

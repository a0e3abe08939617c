"""Measured G-spaces, action evaluation, hitting measures and integrability certificates."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from . import groups as G
from .errors import DomainError, MismatchedGroups, QuadratureFailure, TruncationTooSmall
from .measures import Bump

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------- exact reals


@dataclass(frozen=True)
class ExactReal:
    """The number ``q + r * sqrt(2)`` with rational ``q`` and ``r``."""

    q: Fraction = Fraction(0)
    r: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "q", Fraction(self.q))
        object.__setattr__(self, "r", Fraction(self.r))

    @property
    def is_rational(self) -> bool:
        return self.r == 0

    def __float__(self):
        return float(self.q) + float(self.r) * SQRT2

    def __add__(self, other):
        other = as_exact(other)
        return ExactReal(self.q + other.q, self.r + other.r)

    def __neg__(self):
        return ExactReal(-self.q, -self.r)

    def __sub__(self, other):
        return self + (-as_exact(other))


def as_exact(x) -> ExactReal:
    if isinstance(x, ExactReal):
        return x
    return ExactReal(Fraction(x), Fraction(0))


# ---------------------------------------------------------------- regions


def _as_points(points, dim: int) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1, 1)
    elif p.ndim == 1:
        p = p[:, None] if dim == 1 else p[None, :]
    return p


@dataclass(frozen=True)
class Box:
    """Product box, half-open ``[lo, hi)`` unless ``closed`` is set."""

    lo: tuple
    hi: tuple
    closed: bool = False

    def __post_init__(self):
        lo = (self.lo,) if np.isscalar(self.lo) else tuple(self.lo)
        hi = (self.hi,) if np.isscalar(self.hi) else tuple(self.hi)
        if len(lo) != len(hi) or any(not b > a for a, b in zip(lo, hi)):
            raise DomainError(f"bad box {lo}..{hi}")
        object.__setattr__(self, "lo", tuple(float(x) for x in lo))
        object.__setattr__(self, "hi", tuple(float(x) for x in hi))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, points) -> np.ndarray:
        p = _as_points(points, self.dim)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        upper = p <= hi if self.closed else p < hi
        return np.all((p >= lo) & upper, axis=1)

    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))


@dataclass(frozen=True)
class Arc:
    """Half-open arc ``[start, start + length)`` of the circle."""

    start: float
    length: float

    def __post_init__(self):
        if not 0 < self.length <= 1:
            raise DomainError("arc length must lie in (0, 1]")

    dim = 1

    def contains(self, points) -> np.ndarray:
        p = _as_points(points, 1)[:, 0]
        d = p - self.start
        d = d - np.floor(d)
        return d < self.length

    def volume(self) -> float:
        return float(self.length)


@dataclass(frozen=True)
class RationalSet:
    """``(Q intersect [lo, hi]) + shift``, a Lebesgue-null set with exact membership.

    Floats are dyadic rationals, so membership of a float point is decided exactly
    with :class:`fractions.Fraction`; an irrational shift admits no float point.
    """

    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)
    shift: ExactReal = ExactReal()

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        object.__setattr__(self, "shift", as_exact(self.shift))

    dim = 1

    def contains_exact(self, value) -> bool:
        v = as_exact(value) - self.shift
        return v.is_rational and self.lo <= v.q <= self.hi

    def contains(self, points) -> np.ndarray:
        p = _as_points(points, 1)[:, 0]
        if not self.shift.is_rational:
            return np.zeros(len(p), dtype=bool)
        return np.array([self.contains_exact(Fraction(float(v))) for v in p], dtype=bool)

    def volume(self) -> float:
        return 0.0

    def translated(self, s) -> "RationalSet":
        return RationalSet(self.lo, self.hi, self.shift + as_exact(s))


@dataclass(frozen=True)
class CylinderSet:
    """Binary sequences with prescribed values at finitely many coordinates."""

    fixed: tuple  # ((index, bit), ...)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points))
        ok = np.ones(len(p), dtype=bool)
        for i, b in self.fixed:
            ok &= p[:, i] == b
        return ok


@dataclass(frozen=True)
class Union_:
    """Finite union of pairwise disjoint regions."""

    parts: tuple

    def contains(self, points) -> np.ndarray:
        out = None
        for r in self.parts:
            c = r.contains(points)
            out = c if out is None else out | c
        return out

    def volume(self) -> float:
        return sum(r.volume() for r in self.parts)


# ---------------------------------------------------------------- spaces


@dataclass(frozen=True)
class MeasuredSpace:
    """A measure space carrying an action.

    ``kind`` is ``"torus"``, ``"line"``, ``"cylinder"`` or ``"group"`` (a group
    acting on itself, with right Haar measure).  ``exhaustion`` lists regions of
    finite measure whose union is the space.  Points are ``(d,)`` arrays.
    """

    kind: str
    dim: int
    exhaustion: tuple
    group: Union[G.GroupId, None] = None
    p: float = 0.5
    length: int = 0
    sampling_region: object = None

    @property
    def chart(self) -> str:
        if self.kind == "torus":
            return "periodic"
        if self.kind == "group" and self.group.ambient.kind == G.AFFINE:
            return "log-scale"
        return "linear"

    @property
    def is_probability(self) -> bool:
        return self.kind in ("torus", "cylinder")

    def measure(self, region) -> float:
        """``mu(region)``; boxes on the affine group are in ``(a, b)`` coordinates."""
        if self.kind == "cylinder":
            if isinstance(region, CylinderSet):
                ones = sum(b for _, b in region.fixed)
                return self.p**ones * (1 - self.p) ** (len(region.fixed) - ones)
            raise DomainError("cylinder spaces measure cylinder sets only")
        if self.kind == "group" and self.group.kind == G.AFFINE and isinstance(region, Box):
            (alo, blo), (ahi, bhi) = region.lo, region.hi
            return math.log(ahi / alo) * (bhi - blo)
        return region.volume()

    def contains(self, points) -> np.ndarray:
        if self.kind == "torus":
            p = _as_points(points, self.dim)
            return np.all((p >= 0) & (p < 1), axis=1)
        if self.kind == "group" and self.group.kind == G.AFFINE:
            p = _as_points(points, 2)
            return p[:, 0] > 0
        if self.kind == "cylinder":
            p = np.atleast_2d(np.asarray(points))
            return np.all((p == 0) | (p == 1), axis=1)
        return np.all(np.isfinite(_as_points(points, self.dim)), axis=1)

    def _draw(self, rng: np.random.Generator, region) -> np.ndarray:
        if self.kind == "cylinder":
            return (rng.random(self.length) < self.p).astype(np.int8)
        if self.kind == "torus":
            return rng.random(self.dim)
        box = region if region is not None else self.sampling_region
        if box is None:
            raise DomainError("infinite measure: pass a sampling region")
        lo, hi = np.asarray(box.lo), np.asarray(box.hi)
        if self.kind == "group" and self.group.kind == G.AFFINE:
            la, lb = math.log(lo[0]), math.log(hi[0])
            return np.array([math.exp(rng.uniform(la, lb)), rng.uniform(lo[1], hi[1])])
        return lo + (hi - lo) * rng.random(len(lo))

    def sample(self, n: int, seed: int, region=None,
               exclude: Union[Callable, None] = None) -> np.ndarray:
        """``n`` points drawn from ``mu`` (normalised on ``region`` when ``mu`` is infinite).

        Each point has its own child stream of ``SeedSequence(seed)``, so the i-th
        point does not depend on how many points are drawn or in which order.
        ``exclude`` rejects points of an exceptional null set.
        """
        children = np.random.SeedSequence(seed).spawn(n)
        out = []
        for child in children:
            rng = np.random.default_rng(child)
            while True:
                x = self._draw(rng, region)
                if exclude is None or not exclude(x):
                    break
            out.append(x)
        if not out:
            return np.empty((0, self.length if self.kind == "cylinder" else self.dim))
        return np.array(out)


def dyadic_exception(bits: int = 30) -> Callable:
    """Exceptional set of points with a coordinate in ``2^-bits Z``."""
    scale = float(2**bits)

    def exclude(x):
        x = np.atleast_1d(x) * scale
        return bool(np.any(x == np.floor(x)))

    return exclude


# ---------------------------------------------------------------- systems


@dataclass(frozen=True)
class ActionSystem:
    """A chain of groups acting on a measured space.

    ``act_coords(t, x)`` maps group coordinates ``(K, dg)`` and points ``(K, d)``
    (broadcasting) to points.  ``chart_action(t)`` returns per-axis
    ``(scale, shift)`` arrays with ``chart(t x) = scale * chart(x) + shift``; it
    enables separable quadrature and is ``None`` when the action is not of that form.
    """

    name: str
    chain: G.GroupChain
    space: MeasuredSpace
    act_coords: Callable
    chart_action: Union[Callable, None] = None
    invariance_checked: bool = False
    negative_control: bool = False


def act(system: ActionSystem, g: G.GroupElement, x) -> np.ndarray:
    """The point ``g x``."""
    if g.group.ambient != system.chain.ambient:
        raise MismatchedGroups(f"{g.group} does not act in {system.name}")
    if system.space.kind == "cylinder":
        x = np.asarray(x)
        if not system.space.contains(x[None, :])[0]:
            raise DomainError("point is not a binary word")
        return permute_word(g.coords, x)
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if not system.space.contains(x)[0]:
        raise DomainError(f"{x[0]} is not a point of {system.name}")
    t = np.asarray(g.coords, dtype=float).reshape(1, -1)
    return system.act_coords(t, x)[0]


def permute_word(sigma: Sequence[int], x: np.ndarray) -> np.ndarray:
    """Left action on sequences: ``(sigma x)_i = x_{sigma^-1(i)}``."""
    sigma = np.asarray(sigma, dtype=np.int64)
    if len(sigma) > x.shape[-1]:
        raise DomainError("permutation moves coordinates beyond the stored word")
    out = np.array(x, copy=True)
    out[..., sigma] = x[..., : len(sigma)]
    return out


def _torus_act(t, x):
    y = np.asarray(t, dtype=float) + np.asarray(x, dtype=float)
    y -= np.floor(y)
    y[y >= 1.0] = 0.0
    return y


def _line_act(t, x):
    return np.asarray(t, dtype=float) + np.asarray(x, dtype=float)


def _translation_chart(t):
    t = np.asarray(t, dtype=float)
    return np.ones_like(t), t


def _affine_self_act(t, x):
    return G.compose_arrays(G.affine(), t, x)


def _affine_self_chart(t):
    # chart (log a, b): (log a_t + log a_x, a_t b_x + b_t)
    t = np.asarray(t, dtype=float)
    scale = np.stack([np.ones(len(t)), t[:, 0]], axis=-1)
    shift = np.stack([np.log(t[:, 0]), t[:, 1]], axis=-1)
    return scale, shift


def _affine_line_act(t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    return t[..., :1] * x + t[..., 1:2]


def _affine_line_chart(t):
    t = np.asarray(t, dtype=float)
    return t[:, :1], t[:, 1:2]


def torus_rotation(k_max: int = 14, schedule: str = "dyadic", k_min: int = 0) -> ActionSystem:
    """Rotations of the circle by ``Z/nZ``; ``schedule="all"`` uses every ``n`` up to ``k_max``."""
    if schedule == "dyadic":
        chain = G.dyadic_torus_chain(k_max, k_min)
    elif schedule == "all":
        chain = G.cyclic_schedule(k_max, max(k_min, 1))
    else:
        raise DomainError(f"unknown schedule {schedule!r}")
    space = MeasuredSpace("torus", 1, (Arc(0.0, 1.0),))
    return ActionSystem(f"torus-rotation-{schedule}", chain, space, _torus_act,
                        _translation_chart, invariance_checked=True)


def torus2_lattice(n_max: int = 8, n_min: int = 0) -> ActionSystem:
    """``2^-n Z^2`` (inside ``R^2``) translating the 2-torus."""
    chain = G.dyadic_line_chain(n_max, n_min, dim=2)
    space = MeasuredSpace("torus", 2, (Box((0, 0), (1, 1)),))
    return ActionSystem("torus2-lattice", chain, space, _torus_act, _translation_chart,
                        invariance_checked=True)


def line_translation(n_max: int = 12, n_min: int = 0, dim: int = 1, k_max: int = 8) -> ActionSystem:
    """``2^-n Z^d`` translating ``R^d`` with Lebesgue measure."""
    chain = G.dyadic_line_chain(n_max, n_min, dim)
    cover = tuple(Box((-k,) * dim, (k,) * dim) for k in range(1, k_max + 1))
    space = MeasuredSpace("line", dim, cover, sampling_region=cover[0])
    return ActionSystem("line-translation", chain, space, _line_act, _translation_chart,
                        invariance_checked=True)


def affine_self(m_max: int = 6, m_min: int = 0) -> ActionSystem:
    """The affine group acting on itself by left translation, with right Haar measure."""
    chain = G.affine_chain(m_max, m_min).with_mc(True)
    cover = tuple(Box((math.exp(-k), -k), (math.exp(k), k)) for k in range(1, 9))
    space = MeasuredSpace("group", 2, cover, group=G.affine(), sampling_region=cover[0])
    return ActionSystem("affine-self", chain, space, _affine_self_act, _affine_self_chart,
                        invariance_checked=True)


def affine_line(m_max: int = 6) -> ActionSystem:
    """``x -> a x + b`` on the real line.

    Lebesgue measure is relatively invariant here, but hitting measures of bounded
    sets are infinite, so this system is kept as a negative control.
    """
    chain = G.affine_chain(m_max).with_mc(True)
    cover = tuple(Box((-k,), (k,)) for k in range(1, 9))
    space = MeasuredSpace("line", 1, cover, sampling_region=cover[0])
    return ActionSystem("affine-line", chain, space, _affine_line_act, _affine_line_chart,
                        negative_control=True)


def cylinder_exchangeable(p: float = 0.3, n_max: int = 256, length: int = None) -> ActionSystem:
    """Finitary permutations acting on ``{0,1}^N`` with Bernoulli(p) product measure.

    Points are stored as words of ``length`` coordinates (default ``n_max``).
    """
    if not 0 < p < 1:
        raise DomainError("Bernoulli parameter must lie in (0, 1)")
    length = n_max if length is None else length
    chain = G.sym_chain(n_max)
    space = MeasuredSpace("cylinder", 1, (CylinderSet(()),), p=p, length=length)

    def _act(t, x):
        t = np.atleast_2d(np.asarray(t, dtype=np.int64))
        x = np.atleast_2d(np.asarray(x))
        k = max(len(t), len(x))
        out = np.array(np.broadcast_to(x, (k, x.shape[1])))
        n = t.shape[1]
        # (sigma x)_j = x_{sigma^-1(j)}
        inv = np.argsort(t, axis=1)
        head = np.broadcast_to(x[:, :n], (k, n))
        out[:, :n] = np.take_along_axis(head, np.broadcast_to(inv, (k, n)), axis=1)
        return out

    return ActionSystem("cylinder-exchangeable", chain, space, _act, invariance_checked=True)


# ---------------------------------------------------------------- quadrature over the space


def space_window(system: ActionSystem, box=None):
    """Chart-coordinate window for quadrature over the space."""
    sp = system.space
    if sp.kind == "torus":
        return [(0.0, 1.0)] * sp.dim
    if box is None:
        raise TruncationTooSmall("a window is required on a non-compact space")
    lo, hi = list(box[0]), list(box[1])
    if sp.chart == "log-scale":
        lo[0], hi[0] = math.log(lo[0]), math.log(hi[0])
    return list(zip(lo, hi))


def _chart_to_coords(space: MeasuredSpace, z: np.ndarray) -> np.ndarray:
    if space.chart == "log-scale":
        z = z.copy()
        z[:, 0] = np.exp(z[:, 0])
    return z


def orbit_space_integrals(system: ActionSystem, g, t_coords: np.ndarray, window, cells) -> np.ndarray:
    """``[integral of g(t x) d mu(x) for t in t_coords]`` by midpoint quadrature.

    ``window`` is a list of chart intervals, ``cells`` the cells per axis.  For a
    :class:`Bump` in the space chart and an action of chart-affine form the
    integral factorises into one-dimensional sums.
    """
    sp = system.space
    t_coords = np.atleast_2d(np.asarray(t_coords, dtype=float))
    grids = [G.midpoint_grid(lo, hi, n) for (lo, hi), n in zip(window, cells)]
    separable = (isinstance(g, Bump) and system.chart_action is not None
                 and g.chart == sp.chart)
    if separable:
        scale, shift = system.chart_action(t_coords)
        out = np.ones(len(t_coords))
        for i, (pts, h) in enumerate(grids):
            z = scale[:, i : i + 1] * pts[None, :] + shift[:, i : i + 1]
            out *= g.axis_values(i, z).sum(axis=1) * h
        return out
    mesh = np.meshgrid(*[p for p, _ in grids], indexing="ij")
    z = np.stack([m.ravel() for m in mesh], axis=-1)
    x = _chart_to_coords(sp, z)
    w = math.prod(h for _, h in grids)
    out = np.empty(len(t_coords))
    for k, t in enumerate(t_coords):
        vals = g(system.act_coords(t[None, :], x))
        out[k] = vals.sum() * w
    return out


def space_integral(system: ActionSystem, g, window, cells) -> float:
    """``mu(g)``: exact for bumps in the space chart, midpoint quadrature otherwise."""
    if isinstance(g, Bump) and (g.chart == system.space.chart or
                                (system.space.kind == "torus" and _bump_inside_unit(g))):
        return g.chart_integral
    ident = np.asarray(G.identity(system.chain.ambient).coords, dtype=float)
    return float(orbit_space_integrals(system, g, ident[None, :], window, cells)[0])


def _bump_inside_unit(g: Bump) -> bool:
    return all(0 <= c - r and c + r <= 1 for c, r in zip(g.center, g.radius))


@dataclass
class InvarianceCheck:
    passed: bool
    max_residual: float
    residuals: np.ndarray


def relative_invariance_report(system: ActionSystem, sample_elems: Sequence, panel: Sequence,
                               window=None, cells=None, tol: float = 1e-6) -> InvarianceCheck:
    """Residuals ``|integral f(s x) d mu(x) - Delta(s) mu(f)|`` for sampled ``s`` and ``f``.

    ``window`` (chart intervals) must contain ``s^-1 supp f`` for every ``s``.
    """
    win = space_window(system) if window is None else window
    if cells is None:
        cells = [max(1, int(round((hi - lo) * 2**12))) for lo, hi in win]
    modular = system.chain.modular
    res = np.zeros((len(sample_elems), len(panel)))
    t = np.array([s.coords for s in sample_elems], dtype=float)
    for j, f in enumerate(panel):
        base = space_integral(system, f, win, cells)
        moved = orbit_space_integrals(system, f, t, win, cells)
        delta = np.array([modular(s) for s in sample_elems])
        res[:, j] = np.abs(moved - delta * base)
    if not np.all(np.isfinite(res)):
        raise QuadratureFailure("non-finite invariance residual")
    mx = float(res.max()) if res.size else 0.0
    return InvarianceCheck(mx <= tol, mx, res)


# ---------------------------------------------------------------- crucial identity


@dataclass(frozen=True)
class ProductTerm:
    """``f(x, t) = g(x) h(t)``; sums of these are the test functions on ``X x G``."""

    g: object
    h: object


@dataclass
class CrucialIdentityReport:
    three_values: tuple
    max_pairwise_gap: float
    passed: bool
    resolution: int


def _box_corners(lo, hi):
    return np.array(list(itertools.product(*zip(lo, hi))), dtype=float)


def _inverse_image_window(system: ActionSystem, g_support, h_support) -> list:
    """Chart box containing ``t^-1 supp g`` for every ``t`` in ``supp h``."""
    sp = system.space
    if sp.kind == "torus":
        return [(0.0, 1.0)] * sp.dim  # translates wrap around, so take the whole torus
    glo, ghi = g_support
    tl = _box_corners(*h_support)
    xl = _box_corners(glo, ghi)
    tinv = G.inverse_arrays(system.chain.ambient, tl)
    pts = system.act_coords(tinv[:, None, :], xl[None, :, :]).reshape(-1, xl.shape[1])
    z = pts.copy()
    if sp.chart == "log-scale":
        z[:, 0] = np.log(z[:, 0])
        glo = (math.log(glo[0]),) + tuple(glo[1:])
        ghi = (math.log(ghi[0]),) + tuple(ghi[1:])
    lo = np.minimum(z.min(axis=0), glo)
    hi = np.maximum(z.max(axis=0), ghi)
    return list(zip(lo, hi))


def _group_chart_window(group: G.GroupId, support) -> list:
    lo, hi = list(support[0]), list(support[1])
    if group.kind == G.AFFINE:
        lo[0], hi[0] = math.log(lo[0]), math.log(hi[0])
    return list(zip(lo, hi))


def _group_grid(group: G.GroupId, window, n: int):
    """Midpoint grid on the ambient group with right Haar weights."""
    axes = [G.midpoint_grid(lo, hi, n) for lo, hi in window]
    mesh = np.meshgrid(*[a for a, _ in axes], indexing="ij")
    z = np.stack([m.ravel() for m in mesh], axis=-1)
    if group.kind == G.AFFINE:
        z[:, 0] = np.exp(z[:, 0])
    return z, math.prod(h for _, h in axes)


def crucial_identity_report(system: ActionSystem, f: Sequence[ProductTerm], resolution: int = 2**14,
                            tol: float = 1e-4) -> CrucialIdentityReport:
    """Evaluate the three ambient integrals

    ``I1 = int f(t x, t) d mu d rho``, ``I2 = int f(x, t) d mu d lambda`` and
    ``I3 = int f(x, t^-1) d mu d rho`` with ``lambda = Delta rho``.

    ``resolution`` is the number of midpoint cells of each two-dimensional grid
    (on the group and on the space); windows are the tight boxes around the
    supports involved, so no mass is truncated.
    """
    group = system.chain.ambient
    modular = system.chain.modular
    d_g = len(G.identity(group).coords)
    n_axis = int(round(resolution ** (1.0 / d_g)))
    if n_axis**d_g != resolution:
        raise DomainError("resolution must be a perfect power of the group dimension")
    vals = [0.0, 0.0, 0.0]
    for term in f:
        g, h = term.g, term.h
        hs = getattr(h, "support", None)
        gs = getattr(g, "support", None)
        if hs is None or gs is None:
            raise TruncationTooSmall("product terms need declared supports")
        t_win = _group_chart_window(group, hs)
        t, wt = _group_grid(group, t_win, n_axis)
        x_win = _inverse_image_window(system, gs, hs)
        d_x = len(x_win)
        nx = int(round(resolution ** (1.0 / d_x)))
        x_cells = [nx] * d_x
        hv = h(t)
        inner = orbit_space_integrals(system, g, t, x_win, x_cells)
        vals[0] += math.fsum(hv * inner) * wt
        mu_g = float(orbit_space_integrals(system, g, np.asarray(G.identity(group).coords, dtype=float)[None, :],
                                           _space_support_window(system, gs), x_cells)[0])
        vals[1] += mu_g * math.fsum(hv * modular.on_coords(t)) * wt
        # rho(h o inv): integrate h(t^-1) over a grid covering the inverted support
        inv_support = _inverted_support(group, hs)
        ti, wti = _group_grid(group, _group_chart_window(group, inv_support), n_axis)
        vals[2] += mu_g * math.fsum(h(G.inverse_arrays(group, ti))) * wti
    if not all(math.isfinite(v) for v in vals):
        raise QuadratureFailure("non-finite crucial-identity integral")
    gaps = [abs(vals[0] - vals[1]), abs(vals[0] - vals[2]), abs(vals[1] - vals[2])]
    gap = max(gaps)
    return CrucialIdentityReport(tuple(vals), gap, gap <= tol, resolution)


def _space_support_window(system, support):
    lo, hi = list(support[0]), list(support[1])
    if system.space.chart == "log-scale":
        lo[0], hi[0] = math.log(lo[0]), math.log(hi[0])
    return list(zip(lo, hi))


def _inverted_support(group: G.GroupId, support):
    if group.kind == G.TORUS:
        return (0.0,) * group.dim, (1.0,) * group.dim
    corners = _box_corners(*support)
    inv = G.inverse_arrays(group, corners)
    return tuple(inv.min(axis=0)), tuple(inv.max(axis=0))


# ---------------------------------------------------------------- hitting measures


@dataclass(frozen=True)
class HittingValue:
    value: float
    infinite: bool = False

    def __float__(self):
        return math.inf if self.infinite else self.value


def _hits_on_atoms(system: ActionSystem, atoms: G.Atoms, B, x) -> float:
    x = np.asarray(x)
    pts = system.act_coords(atoms.coords, x[None, :])
    inside = B.contains(pts)
    return math.fsum(atoms.weights[inside])


def hitting_measure(system: ActionSystem, level, B, x, trunc: G.TruncationPolicy = None) -> HittingValue:
    """``rho_n({t in G_n : t x in B})`` (or with ambient ``rho`` when ``level == "ambient"``).

    On non-compact groups the value is recomputed with the window doubled twice;
    if it keeps growing by more than ``1 + trunc.tol`` both times it is reported
    as infinite.
    """
    chain = system.chain
    group = chain.level(level)
    if group.is_compact:
        atoms = G.enumerate_level(chain, level, trunc if trunc else G.TruncationPolicy((), cells_per_unit=2**14))
        return HittingValue(_hits_on_atoms(system, atoms, B, x))
    exact = _exact_translation_hit(system, group, B)
    if exact is not None:
        return HittingValue(exact)
    if trunc is None:
        raise TruncationTooSmall(f"{group} is not compact: a truncation window is required")
    log_first = group.ambient.kind == G.AFFINE
    values = []
    policy = trunc
    for _ in range(3):
        values.append(_hits_on_atoms(system, G.enumerate_level(chain, level, policy), B, x))
        policy = policy.doubled(log_first=log_first)
    v1, v2, v3 = values
    growing = v2 > (1 + trunc.tol) * v1 and v3 > (1 + trunc.tol) * v2
    if growing:
        return HittingValue(v3, infinite=True)
    return HittingValue(v3)


def _exact_translation_hit(system, group, B):
    """Ambient hitting measure for translations of Euclidean space: the volume of ``B``."""
    if group.kind == G.LINE and system.space.kind == "line" and isinstance(B, (Box, RationalSet)):
        return B.volume()
    return None


@dataclass
class IntegrabilityCertificate:
    finite_fraction: list
    passed: bool
    values: np.ndarray


def integrability_certificate(system: ActionSystem, cover: Sequence = None, sample_size: int = 100,
                              seed: int = 0, trunc: G.TruncationPolicy = None) -> IntegrabilityCertificate:
    """Ambient hitting measures of each cover region at ``mu``-sampled points.

    Passes when every sampled hitting measure is finite.
    """
    cover = system.space.exhaustion if cover is None else cover
    pts = system.space.sample(sample_size, seed)
    vals = np.zeros((len(pts), len(cover)))
    for i, x in enumerate(pts):
        for k, B in enumerate(cover):
            vals[i, k] = float(hitting_measure(system, "ambient", B, x, trunc))
    frac = [float(np.mean(np.isfinite(vals[:, k]))) for k in range(len(cover))]
    return IntegrabilityCertificate(frac, all(f == 1.0 for f in frac), vals)


@dataclass(frozen=True)
class HittingBound:
    region_index: int
    bound: float
    scope: str = "per-level"

    def covers(self, observed) -> bool:
        return bool(np.all(np.asarray(observed) <= self.bound))


def observed_hitting_sup(system: ActionSystem, levels: Sequence, B, points,
                         trunc: G.TruncationPolicy = None) -> float:
    """Largest level hitting measure of ``B`` over the given levels and points."""
    best = 0.0
    for n in levels:
        atoms = G.enumerate_level(system.chain, n, trunc)
        for x in points:
            best = max(best, _hits_on_atoms(system, atoms, B, x))
    return best

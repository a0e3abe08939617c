"""Averaging operators along the orbits of a chain of subgroups."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import groups as G
from .actions import ActionSystem, Box, RationalSet, as_exact
from .parallel import ordered_map, worker_count
from .errors import (DomainError, EmptyIntersection, NotAFundamentalDomain, SingularHit,
                     TruncationTooSmall, ZeroHitting)

_CHUNK = 2**22  # max points x atoms evaluated at once


# ---------------------------------------------------------------- integrands


class Integrand:
    """A function on the space, evaluated on ``(P, d)`` point arrays.

    ``mean`` is the exact integral against the space measure when known.
    """

    mean: Union[complex, float, None] = None
    nonnegative: bool = False
    integrable: bool = True
    is_complex: bool = False

    def __call__(self, points) -> np.ndarray:
        raise NotImplementedError

    def __add__(self, other):
        return Combination(((1.0, self), (1.0, other)))

    def __rmul__(self, c):
        return Combination(((c, self),))

    def __sub__(self, other):
        return Combination(((1.0, self), (-1.0, other)))


def _pts(points, dim=None) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 0:
        return p.reshape(1, 1)
    if p.ndim == 1:
        return p[:, None] if (dim or 1) == 1 else p[None, :]
    return p


@dataclass(frozen=True, eq=False)
class Character(Integrand):
    """``e_m(x) = exp(2 pi i m . x)`` on a torus."""

    m: tuple

    def __post_init__(self):
        m = (self.m,) if np.isscalar(self.m) else tuple(self.m)
        object.__setattr__(self, "m", tuple(int(k) for k in m))

    is_complex = True

    @property
    def mean(self):
        return 1.0 + 0j if not any(self.m) else 0j

    def __call__(self, points):
        p = _pts(points, len(self.m))
        phase = p @ np.asarray(self.m, dtype=float)
        return np.exp(2j * np.pi * phase)


@dataclass(frozen=True, eq=False)
class TrigPolynomial(Integrand):
    """``sum_k c_k e_k`` with integer frequency rows ``freqs`` and complex ``coefs``."""

    freqs: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.freqs, dtype=np.int64))
        c = np.asarray(self.coefs, dtype=complex).ravel()
        if len(f) != len(c):
            raise DomainError("one coefficient per frequency")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "coefs", c)

    is_complex = True

    @property
    def mean(self):
        zero = np.all(self.freqs == 0, axis=1)
        return complex(self.coefs[zero].sum())

    def __call__(self, points):
        p = _pts(points, self.freqs.shape[1])
        phase = p @ self.freqs.T.astype(float)
        return np.exp(2j * np.pi * phase) @ self.coefs

    def aliased(self, step: int, x) -> complex:
        """Lattice-average prediction: the terms with every frequency divisible by ``step``."""
        keep = np.all(self.freqs % step == 0, axis=1)
        x = np.asarray(x, dtype=float)
        return complex(np.sum(self.coefs[keep] * np.exp(2j * np.pi * (self.freqs[keep] @ x))))


@dataclass(frozen=True, eq=False)
class Indicator(Integrand):
    """Indicator of a region; ``volume`` gives the exact mean."""

    region: object
    nonnegative = True

    @property
    def mean(self):
        return self.region.volume()

    def __call__(self, points):
        return self.region.contains(points).astype(float)


@dataclass(frozen=True, eq=False)
class PowerSingularity(Integrand):
    """``x^-delta`` for ``0 < x < 1`` and ``0`` elsewhere; ``+inf`` at ``x = 0``.

    On the circle (coordinates in ``[0, 1)``) this is the usual ``x^-delta``.
    """

    delta: float = 0.75
    nonnegative = True

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise DomainError("exponent must lie in (0, 1) for integrability")

    @property
    def mean(self):
        return 1.0 / (1.0 - self.delta)

    def __call__(self, points):
        x = _pts(points)[:, 0]
        inside = (x >= 0) & (x < 1)
        with np.errstate(divide="ignore"):
            return np.where(inside, np.where(inside, x, 1.0) ** -self.delta, 0.0)


@dataclass(frozen=True, eq=False)
class Projection(Integrand):
    """Coordinate ``x_i`` of a binary sequence."""

    index: int = 0
    nonnegative = True

    def __call__(self, points):
        return np.atleast_2d(np.asarray(points))[:, self.index].astype(float)


@dataclass(frozen=True, eq=False)
class Function(Integrand):
    """Any vectorised callable with optional metadata."""

    fn: Callable
    mean: Union[float, complex, None] = None
    nonnegative: bool = False
    is_complex: bool = False
    name: str = "f"

    def __call__(self, points):
        return np.asarray(self.fn(points))


@dataclass(frozen=True, eq=False)
class Constant(Integrand):
    c: float = 1.0

    @property
    def nonnegative(self):
        return self.c >= 0

    @property
    def mean(self):
        return self.c

    def __call__(self, points):
        return np.full(len(np.atleast_2d(np.asarray(points))), float(self.c))


@dataclass(frozen=True, eq=False)
class Combination(Integrand):
    terms: tuple

    @property
    def is_complex(self):
        return any(f.is_complex or isinstance(c, complex) for c, f in self.terms)

    @property
    def nonnegative(self):
        return all(f.nonnegative and np.isreal(c) and c >= 0 for c, f in self.terms)

    @property
    def mean(self):
        means = [f.mean for _, f in self.terms]
        if any(m is None for m in means):
            return None
        return sum(c * m for (c, _), m in zip(self.terms, means))

    def __call__(self, points):
        out = 0
        for c, f in self.terms:
            out = out + c * f(points)
        return out


def check_integrability(system: ActionSystem, f: Integrand, cells: int = 2**14) -> bool:
    """Midpoint quadrature of ``|f|`` on each region of the space's exhaustion is finite."""
    for region in system.space.exhaustion:
        lo, hi = getattr(region, "lo", (0.0,)), getattr(region, "hi", (1.0,))
        if hasattr(region, "start"):
            lo, hi = (region.start,), (region.start + region.length,)
        axes = [G.midpoint_grid(a, b, cells if len(lo) == 1 else 256) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*[a for a, _ in axes], indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        if system.space.kind == "torus":
            pts = pts - np.floor(pts)
        val = np.sum(np.abs(f(pts))) * math.prod(h for _, h in axes)
        if not math.isfinite(val):
            return False
    return True


# ---------------------------------------------------------------- core sums


def _weighted_rows(vals: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row sums of ``vals * w``.

    Numpy's pairwise summation keeps the error to a few ulps, and each row's
    result does not depend on how points are chunked.
    """
    return (vals * w[None, :]).sum(axis=1)


def _orbit_values(system: ActionSystem, atoms: G.Atoms, f, points: np.ndarray) -> np.ndarray:
    """``f(t x)`` for every point (rows) and atom (columns)."""
    P, K = len(points), len(atoms)
    t = atoms.coords
    moved = system.act_coords(t[None, :, :], points[:, None, :])
    flat = moved.reshape(P * K, moved.shape[-1])
    return np.asarray(f(flat)).reshape(P, K)


def _as_point_rows(system: ActionSystem, x) -> tuple:
    if system.space.kind == "cylinder":
        arr = np.asarray(x)
        single = arr.ndim == 1
        return np.atleast_2d(arr), single
    dim = system.space.dim
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 0 or (arr.ndim == 1 and (dim > 1 or arr.size == 1) and arr.size == dim)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, dim) if single else arr.reshape(-1, 1)
    return arr, single


def _sum_over_atoms(system, atoms, f, points, skip_singular, mask_fn=None):
    K = max(len(atoms), 1)
    rows = max(1, _CHUNK // K)
    out = []
    for start in range(0, len(points), rows):
        chunk = points[start : start + rows]
        vals = _orbit_values(system, atoms, f, chunk)
        if mask_fn is not None:
            vals = vals * mask_fn(chunk)
        bad = ~np.isfinite(vals)
        res = _weighted_rows(np.where(bad, 0.0, vals), atoms.weights)
        if bad.any():
            rows_bad = bad.any(axis=1)
            if not skip_singular:
                i = int(np.argmax(rows_bad)) + start
                raise SingularHit(f"orbit of point {i} hits a singularity of the integrand")
            res = res.astype(complex if np.iscomplexobj(res) else float)
            res[rows_bad] = np.nan
        out.append(res)
    return np.concatenate(out) if out else np.empty(0)


def orbital_integral(system: ActionSystem, level, f: Integrand, x, trunc: G.TruncationPolicy = None,
                     skip_singular: bool = False):
    """``sum_t w_t f(t x)`` over the atoms of a level.

    ``x`` may be one point or a ``(P, d)`` array of points.  On the circle with
    level ``Z/nZ`` this is the Riemann sum ``(1/n) sum_j f(x + j/n)``.  With
    ``skip_singular`` a point whose orbit hits a singularity gets ``nan``
    instead of raising :class:`SingularHit`.
    """
    points, single = _as_point_rows(system, x)
    support = getattr(f, "support", None)
    atoms = G.enumerate_level(system.chain, level, trunc, support=None)
    if support is not None and trunc is not None and not system.chain.level(level).is_compact:
        _check_orbit_window(system, trunc, support, points)
    res = _sum_over_atoms(system, atoms, f, points, skip_singular)
    return res[0] if single else res


def _check_orbit_window(system, trunc, support, points):
    """The window must contain ``{t : t x in supp f}`` (translations only)."""
    if system.chain.ambient.kind != G.LINE:
        return
    lo, hi = np.asarray(support[0]), np.asarray(support[1])
    need_lo = (lo[None, :] - points).min(axis=0)
    need_hi = (hi[None, :] - points).max(axis=0)
    if not trunc.covers(need_lo, need_hi):
        raise TruncationTooSmall("window does not contain every t with t x in the support")


def ambient_orbital_integral(system: ActionSystem, f: Integrand, x, trunc: G.TruncationPolicy = None):
    """``integral f(t x) d rho(t)`` over the ambient group.

    For translations of a torus or Euclidean space this equals the mean of ``f``
    and is returned exactly when that mean is known; otherwise a midpoint
    quadrature over the window in ``trunc`` is used.
    """
    points, single = _as_point_rows(system, x)
    amb = system.chain.ambient
    if amb.kind in (G.TORUS, G.LINE) and f.mean is not None:
        res = np.full(len(points), f.mean, dtype=complex if f.is_complex else float)
        return res[0] if single else res
    if trunc is None:
        raise TruncationTooSmall("ambient quadrature needs a truncation policy")
    atoms = G.enumerate_level(system.chain, "ambient", trunc)
    res = _sum_over_atoms(system, atoms, f, points, False)
    return res[0] if single else res


# ---------------------------------------------------------------- closed form on the circle


_BERNOULLI = ((2, 1.0 / 6.0), (4, -1.0 / 30.0), (6, 1.0 / 42.0), (8, -1.0 / 30.0))
_DIRECT_TERMS = 32


def _falling(delta: float, m: int) -> float:
    """Coefficient of ``y^(-delta-m)`` in the m-th derivative of ``y^-delta``."""
    c = 1.0
    for i in range(m):
        c *= -delta - i
    return c


def _power_sum(u: np.ndarray, n: np.ndarray, delta: float) -> np.ndarray:
    """``sum_{j=0}^{n-1} (j + u)^-delta`` for broadcast arrays ``u`` in (0, 1) and ``n``."""
    u, n = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(n, dtype=np.int64))
    out = np.zeros(u.shape)
    head = np.minimum(n, _DIRECT_TERMS)
    for j in range(_DIRECT_TERMS):
        out += np.where(j < head, (j + u) ** -delta, 0.0)
    tail = n > _DIRECT_TERMS
    if np.any(tail):
        a = _DIRECT_TERMS + u[tail]
        b = (n[tail] - 1) + u[tail]
        one = 1.0 - delta
        s = (b**one - a**one) / one + 0.5 * (a**-delta + b**-delta)
        for k, bk in _BERNOULLI:
            c = bk / math.factorial(k) * _falling(delta, k - 1)
            s += c * (b ** (-delta - k + 1) - a ** (-delta - k + 1))
        out[tail] += s
    return out


def riemann_power_sums(delta: float, ns: Sequence[int], xs) -> np.ndarray:
    """``R_n f(x)`` for ``f(x) = x^-delta`` on the circle, as a ``(len(xs), len(ns))`` array.

    Uses ``R_n f(x) = n^(delta-1) sum_{j<n} (j + u)^-delta`` with ``u = frac(n x)``,
    summing the first terms directly and the rest by Euler-Maclaurin with
    corrections through the eighth derivative.  Points with ``n x`` an integer
    hit the singularity and give ``inf``.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ns = np.asarray(ns, dtype=np.int64).ravel()
    nx = np.multiply.outer(xs, ns.astype(float))
    u = nx - np.floor(nx)
    out = np.full(u.shape, np.inf)
    ok = u > 0
    nn = np.broadcast_to(ns[None, :], u.shape)
    out[ok] = _power_sum(u[ok], nn[ok], delta) * nn[ok].astype(float) ** (delta - 1.0)
    return out


# ---------------------------------------------------------------- local, restricted, maximal


def ratio_average(system: ActionSystem, level, f: Integrand, B, x, trunc: G.TruncationPolicy = None):
    """``(integral of f(tx) 1_B(tx) d rho_n) / rho_n({t : t x in B})`` for ``x`` in ``B``."""
    points, single = _as_point_rows(system, x)
    if not np.all(B.contains(points)):
        raise DomainError("ratio averages are defined for points of B")
    atoms = G.enumerate_level(system.chain, level, trunc)
    num = np.empty(len(points), dtype=complex if f.is_complex else float)
    den = np.empty(len(points))
    for i, p in enumerate(points):
        moved = system.act_coords(atoms.coords, p[None, :])
        inside = B.contains(moved)
        w = atoms.weights[inside]
        den[i] = math.fsum(w)
        if den[i] == 0:
            raise ZeroHitting(f"no level element carries point {i} into B")
        vals = np.asarray(f(moved[inside]))
        num[i] = _weighted_rows(vals[None, :], w)[0]
    res = num / den
    return res[0] if single else res


def _in_translate(system: ActionSystem, E, s: G.GroupElement, tcoords: np.ndarray) -> np.ndarray:
    """Mask of atoms ``t`` lying in ``E s``."""
    group = system.chain.ambient
    if isinstance(E, RationalSet):
        if group.kind != G.LINE:
            raise DomainError("rational sets live in the real line")
        shift = s if not isinstance(s, G.GroupElement) else as_exact(s.coords[0])
        return E.translated(shift).contains(tcoords)
    sinv = np.asarray(G.inverse(s).coords, dtype=float)[None, :]
    return E.contains(G.compose_arrays(group, tcoords, sinv))


def restricted_average(system: ActionSystem, level, f: Integrand, E, s, x,
                       trunc: G.TruncationPolicy = None):
    """Orbital sum over the atoms of a level that lie in ``E s``.

    ``s`` is a group element, or an :class:`ExactReal` shift for rational sets.
    """
    points, single = _as_point_rows(system, x)
    atoms = G.enumerate_level(system.chain, level, trunc)
    keep = _in_translate(system, E, s, atoms.coords)
    sub = G.Atoms(atoms.group, atoms.coords[keep], atoms.weights[keep])
    if len(sub) == 0:
        res = np.zeros(len(points), dtype=complex if f.is_complex else float)
    else:
        res = _sum_over_atoms(system, sub, f, points, False)
    return res[0] if single else res


def ambient_restricted_average(system: ActionSystem, f: Integrand, E, s, x,
                               trunc: G.TruncationPolicy = None):
    """``integral over E s of f(t x) d rho(t)``; zero for null sets such as rational sets."""
    points, single = _as_point_rows(system, x)
    if E.volume() == 0:
        res = np.zeros(len(points))
        return res[0] if single else res
    atoms = G.enumerate_level(system.chain, "ambient", trunc)
    keep = _in_translate(system, E, s, atoms.coords)
    sub = G.Atoms(atoms.group, atoms.coords[keep], atoms.weights[keep])
    res = _sum_over_atoms(system, sub, f, points, False)
    return res[0] if single else res


def maximal_function(system: ActionSystem, f: Integrand, x, level_cap: int, first_level: int = None,
                     trunc: G.TruncationPolicy = None, skip_singular: bool = False):
    """``max`` of the orbital integrals of ``f >= 0`` over levels ``first_level..level_cap``."""
    if not f.nonnegative:
        raise DomainError("the maximal function is defined for nonnegative integrands")
    first = system.chain.start if first_level is None else first_level
    best = None
    for n in range(first, level_cap + 1):
        v = np.real(orbital_integral(system, n, f, x, trunc, skip_singular))
        best = v if best is None else np.fmax(best, v)
    return best


# ---------------------------------------------------------------- lattices and fundamental domains


def fundamental_reduce(chain: G.GroupChain, t: G.GroupElement, D: Box, base_level: int = None):
    """The unique ``g`` in the base lattice with ``g t`` in the half-open box ``D``.

    Returns ``(g, g t)``.  Raises :class:`NotAFundamentalDomain` when the search
    window around ``t`` finds no such ``g`` or more than one.
    """
    base = chain.level(chain.start if base_level is None else base_level)
    if base.kind != G.LATTICE:
        raise NotAFundamentalDomain("reduction is implemented for lattice bases")
    step = base.param
    tc = np.asarray(t.coords, dtype=float)
    lo = np.asarray(D.lo)
    guess = np.floor((lo - tc) / step).astype(np.int64)
    found = []
    for offs in np.ndindex(*(4,) * len(tc)):
        k = guess + np.asarray(offs) - 1
        moved = tc + k * step
        if D.contains(moved[None, :])[0]:
            found.append(k)
    if len(found) != 1:
        raise NotAFundamentalDomain(f"{len(found)} reducing elements for {t.coords} in {D}")
    g = G.from_index(base, found[0])
    return g, G.compose(g, t)


def lattice_points_in(chain: G.GroupChain, level, D: Box) -> G.Atoms:
    """The finite set ``G_n`` intersected with the box ``D``."""
    trunc = G.TruncationPolicy(tuple(zip(D.lo, D.hi)))
    atoms = G.enumerate_level(chain, level, trunc)
    keep = D.contains(atoms.coords)
    return G.Atoms(atoms.group, atoms.coords[keep], atoms.weights[keep])


def lattice_average(system: ActionSystem, level, f: Integrand, D: Box, x, check_invariance: bool = True,
                    tol: float = 1e-9, seed: int = 0):
    """Equal-weight average of ``f(t x)`` over ``G_n`` intersected with ``D``.

    ``f`` must be invariant under the base lattice; a spot check at a few random
    lattice elements and points guards this when ``check_invariance`` is set.
    """
    points, single = _as_point_rows(system, x)
    chain = system.chain
    pts = lattice_points_in(chain, level, D)
    if len(pts) == 0:
        raise EmptyIntersection(f"level {level} has no point in {D}")
    if check_invariance:
        _spot_check_invariance(system, f, tol, seed)
    eq = G.Atoms(pts.group, pts.coords, np.full(len(pts), 1.0 / len(pts)))
    res = _sum_over_atoms(system, eq, f, points, False)
    return res[0] if single else res


def _spot_check_invariance(system, f, tol, seed):
    rng = np.random.default_rng(seed)
    base = system.chain.level(system.chain.start)
    d = system.space.dim
    xs = rng.random((8, d))
    for _ in range(4):
        g = G.from_index(base, rng.integers(-3, 4, base.dim))
        moved = system.act_coords(np.asarray(g.coords, dtype=float)[None, :], xs)
        if np.max(np.abs(f(moved) - f(xs))) > tol:
            raise DomainError("integrand is not invariant under the base lattice")


# ---------------------------------------------------------------- product space


def product_average(system: ActionSystem, level, f: Callable, s: G.GroupElement, x,
                    trunc: G.TruncationPolicy = None):
    """``sum_t w_t f(t s, t x)`` for ``f`` defined on group coordinates times points."""
    points, single = _as_point_rows(system, x)
    atoms = G.enumerate_level(system.chain, level, trunc)
    group = system.chain.ambient
    sc = np.asarray(s.coords, dtype=float)[None, :]
    ts = G.compose_arrays(group, atoms.coords, sc)
    out = []
    for p in points:
        tx = system.act_coords(atoms.coords, p[None, :])
        vals = np.asarray(f(ts, tx))
        out.append(_weighted_rows(vals[None, :], atoms.weights)[0])
    res = np.array(out)
    return res[0] if single else res


# ---------------------------------------------------------------- trajectories


@dataclass
class Trajectory:
    point: np.ndarray
    levels: list
    values: np.ndarray
    reference: Union[float, complex]
    reference_source: str
    tail_deviation: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.tail_deviation is None:
            self.tail_deviation = tail_deviations(self.values, self.reference)


def tail_deviations(values, reference) -> np.ndarray:
    """``sup_{m >= n} |a_m - ref|`` along the last axis (non-increasing by construction)."""
    dev = np.abs(np.asarray(values) - reference)
    dev = np.where(np.isnan(dev), np.inf, dev)
    return np.maximum.accumulate(dev[..., ::-1], axis=-1)[..., ::-1]


def level_values(system: ActionSystem, f: Integrand, points, levels: Sequence, trunc=None,
                 skip_singular: bool = False) -> np.ndarray:
    """Orbital integrals at every point (rows) and level (columns)."""
    pts, _ = _as_point_rows(system, points)
    workers = worker_count()
    chunks = np.array_split(np.arange(len(pts)), max(1, min(workers, len(pts))))

    def run(idx):
        cols = [np.atleast_1d(orbital_integral(system, n, f, pts[idx], trunc, skip_singular))
                for n in levels]
        return np.stack(cols, axis=1)

    return np.concatenate(ordered_map(run, chunks), axis=0)


def resolve_reference(system: ActionSystem, f: Integrand, x, reference, trunc=None):
    if reference == "ambient":
        return ambient_orbital_integral(system, f, x, trunc), "ambient"
    return reference, "explicit"


def trajectory(system: ActionSystem, f: Integrand, x, levels: Sequence, reference="ambient",
               trunc: G.TruncationPolicy = None, skip_singular: bool = False) -> Trajectory:
    """Orbital integrals of ``f`` at ``x`` along ``levels`` with tail deviations from the reference.

    An explicit numeric ``reference`` takes precedence over the ambient integral.
    """
    levels = list(levels)
    if not levels:
        raise DomainError("empty level schedule")
    ref, source = resolve_reference(system, f, x, reference, trunc)
    vals = level_values(system, f, x, levels, trunc, skip_singular)[0]
    return Trajectory(np.asarray(x), levels, vals, ref, source)

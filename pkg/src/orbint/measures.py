"""Right Haar measures on chain levels, Fell normalisation and modular-condition checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gammaln

from . import groups as G
from .errors import QuadratureFailure, TruncationTooSmall, UnsupportedLevel

LN2 = math.log(2.0)


@dataclass(frozen=True)
class HaarSpec:
    """Right Haar data of one level.

    Discrete levels carry ``atom_weight``; ambient groups carry a ``density`` name
    relative to the coordinate chart used by :func:`groups.enumerate_level`.
    ``AffineScaleLevel`` carries both: atoms in the scale index crossed with ``db``.
    """

    group: G.GroupId
    level: Union[int, str]
    norm_constant: float
    atom_weight: Union[float, None] = None
    density: Union[str, None] = None
    side: str = "right"

    @property
    def continuous_factor(self) -> bool:
        return self.group.kind == G.AFFINE_LEVEL


def fell_haar(chain: G.GroupChain, level, scale: float = 1.0) -> HaarSpec:
    """Fell-normalised right Haar measure of a level.

    ``scale`` rescales the ambient reference measure; every level weight scales with it.
    """
    if not scale > 0:
        raise UnsupportedLevel("Haar scale must be positive")
    group = chain.level(level)
    kind = group.kind
    lev = "ambient" if group.is_ambient else level
    if kind == G.TORUS:
        return HaarSpec(group, lev, scale, density="probability")
    if kind == G.LINE:
        return HaarSpec(group, lev, scale, density="lebesgue")
    if kind == G.AFFINE:
        return HaarSpec(group, lev, scale, density="a^-1 da db")
    if kind == G.SYM_INF:
        return HaarSpec(group, lev, scale, atom_weight=scale, density="counting")
    if kind == G.CYCLIC:
        return HaarSpec(group, lev, scale, atom_weight=scale / group.param)
    if kind == G.LATTICE:
        return HaarSpec(group, lev, scale, atom_weight=scale * group.param**group.dim)
    if kind == G.SYM:
        return HaarSpec(group, lev, scale, atom_weight=scale)
    if kind == G.AFFINE_LEVEL:
        return HaarSpec(group, lev, scale, atom_weight=scale * LN2 / 2**group.param)
    raise UnsupportedLevel(str(group))


# ---------------------------------------------------------------- test functions


def _bump_mass(order: int) -> float:
    """Integral of (1 - s^2)^k over [-1, 1]."""
    return math.exp(0.5 * math.log(math.pi) + gammaln(order + 1) - gammaln(order + 1.5))


@dataclass(frozen=True)
class Bump:
    """Tensor product of ``(1 - s^2)^order`` profiles with exact support.

    ``chart`` says how group coordinates map to the flat chart where the profile
    lives: ``"linear"`` (identity), ``"periodic"`` (distance taken mod 1) or
    ``"log-scale"`` (first coordinate replaced by its logarithm, as on the affine
    group).  ``order >= 2`` gives a C^1 function.
    """

    center: tuple
    radius: tuple
    order: int = 2
    chart: str = "linear"

    def __post_init__(self):
        c = (self.center,) if np.isscalar(self.center) else tuple(self.center)
        r = (self.radius,) if np.isscalar(self.radius) else tuple(self.radius)
        if len(r) == 1 and len(c) > 1:
            r = r * len(c)
        if len(c) != len(r) or any(not x > 0 for x in r):
            raise ValueError("bump needs one positive radius per coordinate")
        if self.chart == "periodic" and any(x > 0.5 for x in r):
            raise ValueError("periodic bump radius must not exceed 1/2")
        if self.chart not in ("linear", "periodic", "log-scale"):
            raise ValueError(f"unknown chart {self.chart!r}")
        object.__setattr__(self, "center", tuple(float(x) for x in c))
        object.__setattr__(self, "radius", tuple(float(x) for x in r))

    @property
    def dim(self) -> int:
        return len(self.center)

    def to_chart(self, coords) -> np.ndarray:
        z = np.asarray(coords, dtype=float)
        if z.ndim == 1:
            z = z[:, None] if self.dim == 1 else z[None, :]
        if self.chart == "log-scale":
            z = z.copy()
            z[:, 0] = np.log(z[:, 0])
        return z

    def profile(self, s) -> np.ndarray:
        """One-dimensional profile on the normalised coordinate ``s``."""
        s = np.asarray(s, dtype=float)
        return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** self.order, 0.0)

    def axis_values(self, i: int, chart_values) -> np.ndarray:
        d = np.asarray(chart_values, dtype=float) - self.center[i]
        if self.chart == "periodic":
            d = d - np.round(d)
        return self.profile(d / self.radius[i])

    def __call__(self, coords) -> np.ndarray:
        z = self.to_chart(coords)
        out = np.ones(len(z))
        for i in range(self.dim):
            out *= self.axis_values(i, z[:, i])
        return out

    @property
    def chart_integral(self) -> float:
        """Exact integral against Lebesgue measure in the chart."""
        return math.prod(r * _bump_mass(self.order) for r in self.radius)

    @property
    def support(self):
        lo = [c - r for c, r in zip(self.center, self.radius)]
        hi = [c + r for c, r in zip(self.center, self.radius)]
        if self.chart == "log-scale":
            lo[0], hi[0] = math.exp(lo[0]), math.exp(hi[0])
        return tuple(lo), tuple(hi)


@dataclass(frozen=True)
class FunctionOnGroup:
    """Arbitrary vectorised function of group coordinates, with optional metadata."""

    fn: Callable
    exact_integral: Union[float, None] = None
    support: Union[tuple, None] = None
    name: str = "f"

    def __call__(self, coords) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(coords)), dtype=float)


def haar_integral(chain: G.GroupChain, phi, trunc: G.TruncationPolicy = None, scale: float = 1.0) -> float:
    """Ambient right Haar integral ``rho(phi)``; exact for bumps, quadrature otherwise."""
    amb = chain.ambient
    if isinstance(phi, Bump):
        chart_ok = {
            G.TORUS: "periodic", G.LINE: "linear", G.AFFINE: "log-scale",
        }.get(amb.kind)
        if chart_ok == phi.chart or (amb.kind == G.TORUS and _inside_unit(phi)):
            return scale * phi.chart_integral
    if isinstance(phi, FunctionOnGroup) and phi.exact_integral is not None:
        return scale * phi.exact_integral
    if amb.kind == G.SYM_INF:
        raise UnsupportedLevel("no ambient quadrature on the finitary permutation group")
    atoms = G.enumerate_level(chain, "ambient", trunc)
    return scale * level_sum(atoms, phi)


def _inside_unit(phi: Bump) -> bool:
    return all(0.0 <= c - r and c + r <= 1.0 for c, r in zip(phi.center, phi.radius))


def level_sum(atoms: G.Atoms, phi, coords=None) -> float:
    vals = phi(atoms.coords if coords is None else coords)
    terms = vals * atoms.weights
    if not np.all(np.isfinite(terms)):
        raise QuadratureFailure("non-finite value in level sum")
    return math.fsum(terms)


def level_integral(chain: G.GroupChain, level, phi, trunc: G.TruncationPolicy = None,
                   scale: float = 1.0) -> float:
    """``rho_n(phi)`` as a weighted sum over the enumerated level."""
    support = getattr(phi, "support", None)
    atoms = G.enumerate_level(chain, level, trunc, support=support)
    return scale * level_sum(atoms, phi)


# ---------------------------------------------------------------- Fell convergence


@dataclass
class FellReport:
    levels: list
    deviations: np.ndarray  # (levels, panel)
    max_deviation: np.ndarray  # per level
    tail_ok: bool
    passed: bool
    reference: list = field(default_factory=list)


def fell_convergence_report(chain: G.GroupChain, levels: Sequence[int], panel: Sequence,
                            trunc: G.TruncationPolicy = None, tol: float = 1e-6,
                            slack: float = 2.0, floor: float = 1e-14) -> FellReport:
    """Deviations ``|rho_n(phi) - rho(phi)|`` along the chain.

    ``tail_ok`` asks that the max deviation never grows by more than ``slack``
    between consecutive levels once it is above ``floor``; ``passed`` asks that
    the deviation at the last level is at most ``tol``.
    """
    if not panel:
        raise ValueError("empty test-function panel")
    levels = list(levels)
    ref = [haar_integral(chain, phi, trunc) for phi in panel]
    dev = np.empty((len(levels), len(panel)))
    for i, n in enumerate(levels):
        for j, phi in enumerate(panel):
            dev[i, j] = abs(level_integral(chain, n, phi, trunc) - ref[j])
    if not np.all(np.isfinite(dev)):
        raise QuadratureFailure("non-finite Fell deviation")
    mx = dev.max(axis=1)
    tail_ok = all(b <= slack * max(a, floor) for a, b in zip(mx, mx[1:]))
    return FellReport(levels, dev, mx, tail_ok, bool(mx[-1] <= tol), ref)


# ---------------------------------------------------------------- translations inside a level


def translate_atoms(group: G.GroupId, coords: np.ndarray, h: G.GroupElement, side: str) -> np.ndarray:
    """Coordinates of ``h t`` (side="left") or ``t h`` (side="right") for level atoms ``t``.

    Discrete coordinates are combined through integer indices so a translate of the
    atom set reproduces the atom coordinates bit for bit.
    """
    kind = group.kind
    if kind == G.CYCLIC:
        n = group.param
        j = np.rint(coords[:, 0] * n).astype(np.int64)
        k = int(round(h.coords[0] * n))
        return (((j + k) % n) / n)[:, None]
    if kind == G.LATTICE:
        s = group.param
        j = np.rint(coords / s).astype(np.int64)
        k = np.rint(np.asarray(h.coords) / s).astype(np.int64)
        return (j + k) * s
    if kind == G.SYM:
        words = np.asarray(coords, dtype=np.int64)
        hw = np.asarray(G.element(group, h.coords).coords, dtype=np.int64)
        # (p o q)[i] = p[q[i]]
        return hw[words] if side == "left" else words[:, hw]
    if kind == G.AFFINE_LEVEL:
        m = group.param
        kt = np.rint(np.log2(coords[:, 0]) * 2**m).astype(np.int64)
        kh = int(round(math.log2(h.coords[0]) * 2**m))
        a_new = 2.0 ** ((kt + kh) / 2**m)
        ah, bh = h.coords
        if side == "left":
            b_new = ah * coords[:, 1] + bh
        else:
            b_new = coords[:, 0] * bh + coords[:, 1]
        return np.stack([a_new, b_new], axis=-1)
    hc = np.asarray(h.coords, dtype=float)[None, :]
    if side == "left":
        return G.compose_arrays(group, hc, coords)
    return G.compose_arrays(group, coords, hc)


def sample_translators(group: G.GroupId, count: int, rng: np.random.Generator,
                       index_range: int = 4, b_range: float = 0.5) -> list:
    """Random elements of a level, kept near the identity so supports stay in view."""
    out = []
    for _ in range(count):
        if group.kind == G.CYCLIC:
            out.append(G.from_index(group, int(rng.integers(group.param))))
        elif group.kind == G.LATTICE:
            out.append(G.from_index(group, rng.integers(-index_range, index_range + 1, group.dim)))
        elif group.kind == G.SYM:
            out.append(G.element(group, rng.permutation(group.param)))
        elif group.kind == G.AFFINE_LEVEL:
            out.append(G.from_index(group, int(rng.integers(-index_range, index_range + 1)),
                                    float(rng.uniform(-b_range, b_range))))
        elif group.kind == G.TORUS:
            out.append(G.element(group, rng.random(group.dim)))
        elif group.kind == G.LINE:
            out.append(G.element(group, rng.uniform(-b_range, b_range, group.dim)))
        elif group.kind == G.AFFINE:
            out.append(G.element(group, (math.exp(rng.uniform(-0.5, 0.5)), rng.uniform(-b_range, b_range))))
        else:
            raise UnsupportedLevel(str(group))
    return out


@dataclass
class InvarianceReport:
    passed: bool
    max_residual: float
    residuals: np.ndarray


def _translated_support(group, h, support, side):
    """Box containing the support of ``t -> phi(h t)`` (left) or ``phi(t h)`` (right)."""
    if support is None:
        return None
    lo, hi = (np.asarray(x, dtype=float) for x in support)
    hinv = G.inverse(h)
    kind = group.ambient.kind
    if kind in (G.LINE,):
        shift = np.asarray(hinv.coords)
        return tuple(lo + shift), tuple(hi + shift)
    if kind == G.AFFINE:
        a, b = hinv.coords
        if side == "left":
            # h^-1 (x, y) = (a x, a y + b)
            return (a * lo[0], a * lo[1] + b), (a * hi[0], a * hi[1] + b)
        # (x, y) h^-1 = (a x, x b + y)
        ys = [lo[1] + lo[0] * b, lo[1] + hi[0] * b, hi[1] + lo[0] * b, hi[1] + hi[0] * b]
        return (a * lo[0], min(ys)), (a * hi[0], max(ys))
    return None


def _invariance_residuals(chain, level, panel, translators, trunc, side, weight_fn):
    group = chain.level(level)
    atoms = G.enumerate_level(chain, level, trunc)
    w = atoms.weights * weight_fn(atoms.coords)
    res = np.zeros((len(translators), len(panel)))
    for j, phi in enumerate(panel):
        support = getattr(phi, "support", None)
        if support is not None and not group.is_compact and trunc is not None:
            if not trunc.covers(*support):
                raise TruncationTooSmall(f"window misses the support of {phi}")
        base = math.fsum(phi(atoms.coords) * w)
        for i, h in enumerate(translators):
            if support is not None and not group.is_compact and trunc is not None:
                box = _translated_support(group, h, support, side)
                if box is not None and not trunc.covers(*box):
                    raise TruncationTooSmall(f"window misses the translated support {box}")
            moved = translate_atoms(group, atoms.coords, h, side)
            val = math.fsum(phi(moved) * w)
            res[i, j] = abs(val - base)
    if not np.all(np.isfinite(res)):
        raise QuadratureFailure("non-finite invariance residual")
    return res


def right_invariance_report(chain: G.GroupChain, level, panel: Sequence, translators=None,
                            trunc: G.TruncationPolicy = None, tol: float = 1e-6,
                            n_translators: int = 5, seed: int = 0) -> InvarianceReport:
    """``|sum phi(t h) d rho_n(t) - sum phi(t) d rho_n(t)|`` over sampled ``h``."""
    group = chain.level(level)
    if translators is None:
        translators = sample_translators(group, n_translators, np.random.default_rng(seed))
    res = _invariance_residuals(chain, level, panel, translators, trunc, "right",
                                lambda c: np.ones(len(c)))
    mx = float(res.max()) if res.size else 0.0
    return InvarianceReport(mx <= tol, mx, res)


def modular_condition_report(chain: G.GroupChain, level, panel: Sequence, translators=None,
                             trunc: G.TruncationPolicy = None, tol: float = 1e-4,
                             n_translators: int = 5, seed: int = 0) -> InvarianceReport:
    """Check that ``Delta * rho_n`` is left invariant on the level.

    Residuals are ``|sum phi(h t) Delta(t) rho_n(t) - sum phi(t) Delta(t) rho_n(t)|``
    for level elements ``h``.
    """
    group = chain.level(level)
    if translators is None:
        translators = sample_translators(group, n_translators, np.random.default_rng(seed))
    modular = chain.modular
    res = _invariance_residuals(chain, level, panel, translators, trunc, "left", modular.on_coords)
    mx = float(res.max()) if res.size else 0.0
    return InvarianceReport(mx <= tol, mx, res)

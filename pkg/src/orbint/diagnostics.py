"""Sample-based convergence and divergence verdicts, and the maximal-inequality audit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import groups as G
from .actions import ActionSystem, observed_hitting_sup
from .averaging import (Character, Integrand, PowerSingularity, TrigPolynomial, level_values,
                        maximal_function, resolve_reference, riemann_power_sums, tail_deviations)
from .errors import DomainError, SingularHit

DIVERGENCE_LABEL = "consistent with a.e. divergence"
NO_DIVERGENCE_LABEL = "no divergence evidence"

# irrational cell offset for audit grids, keeps grid points off dyadic rationals
_GRID_OFFSET = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ConvergenceVerdict:
    sample_size: int
    levels: list
    converged_fraction: float
    median_deviation: np.ndarray
    p95_deviation: np.ndarray
    passed: bool
    points: np.ndarray = field(repr=False, default=None)
    values: np.ndarray = field(repr=False, default=None)
    reference: object = None


def ae_limit_estimate(system: ActionSystem, f: Integrand, levels: Sequence, sample_size: int = 1000,
                      tol: float = 1e-6, seed: int = 0, trunc: G.TruncationPolicy = None,
                      fail_quota: float = 0.0, reference="ambient", exclude: Callable = None,
                      skip_singular: bool = False, points=None) -> ConvergenceVerdict:
    """Trajectories at ``sample_size`` seeded points against their limits.

    A point counts as converged when its tail deviation at the last level is at
    most ``tol``; the verdict passes when the converged fraction is at least
    ``1 - fail_quota``.  Per-level median and 95th percentile deviations are the
    plain (not tail) deviations ``|a_n - ref|``.
    """
    levels = list(levels)
    if system.negative_control:
        raise DomainError(f"{system.name} fails the integrability certificate")
    pts = system.space.sample(sample_size, seed, exclude=exclude) if points is None else np.asarray(points)
    if pts.ndim == 1:
        pts = pts[:, None]
    vals = level_values(system, f, pts, levels, trunc, skip_singular)
    if isinstance(reference, str):
        ref, _ = resolve_reference(system, f, pts, reference, trunc)
        ref = np.asarray(ref)[:, None]
    else:
        ref = reference
    dev = np.abs(vals - ref)
    dev = np.where(np.isnan(dev), np.inf, dev)
    tail = tail_deviations(vals, ref)
    frac = float(np.mean(tail[:, -1] <= tol))
    finite = np.where(np.isfinite(dev), dev, np.nan)
    med = np.nanmedian(finite, axis=0)
    p95 = np.nanpercentile(finite, 95, axis=0)
    return ConvergenceVerdict(len(pts), levels, frac, med, p95, frac >= 1.0 - fail_quota, pts, vals, ref)


# ---------------------------------------------------------------- divergence


def geometric_checkpoints(n_max: int, ratio: float = 10.0, first: int = 10) -> list:
    out, n = [], first
    while n < n_max:
        out.append(int(n))
        n *= ratio
    out.append(int(n_max))
    return sorted(set(out))


@dataclass
class DivergenceReport:
    checkpoints: list
    running_max: np.ndarray  # (points, checkpoints)
    growth_ratios: np.ndarray  # (points, checkpoints - 1)
    reference: float
    factor: float
    exceed_fraction: float
    flagged: bool
    label: str


def _circle_sums(f: Integrand, ns: np.ndarray, xs: np.ndarray, skip_singular: bool) -> np.ndarray:
    """Riemann sums for every ``n`` in ``ns`` at every point, using closed forms when possible."""
    if isinstance(f, PowerSingularity):
        out = riemann_power_sums(f.delta, ns, xs)
        if not skip_singular and not np.all(np.isfinite(out)):
            raise SingularHit("a Riemann-sum node hits the singularity")
        return np.where(np.isfinite(out), out, np.nan)
    if isinstance(f, (Character, TrigPolynomial)):
        tp = f if isinstance(f, TrigPolynomial) else TrigPolynomial(np.array([f.m]), np.array([1.0]))
        k = tp.freqs[:, 0]
        keep = (k[None, :] % ns[:, None]) == 0  # (ns, terms)
        waves = np.exp(2j * np.pi * np.outer(xs, k)) * tp.coefs[None, :]  # (points, terms)
        return waves @ keep.T.astype(complex)
    raise NotImplementedError


def divergence_gap(system: ActionSystem, f: Integrand, n_max: int, x_sample, reference: float,
                   factor: float, checkpoints: Sequence[int] = None, skip_singular: bool = False,
                   quota: float = 0.5) -> DivergenceReport:
    """Running maxima of the full-schedule Riemann sums ``R_n f(x)``, ``n = 1..n_max``.

    The flag is raised when, at the last checkpoint, the running maximum exceeds
    ``factor * reference`` at a fraction ``>= quota`` of the points.
    """
    if not getattr(f, "nonnegative", False) and not isinstance(f, (Character, TrigPolynomial)):
        raise DomainError("divergence probing needs a nonnegative integrand")
    xs = np.asarray(x_sample, dtype=float).reshape(-1)
    ns = np.arange(1, n_max + 1)
    cps = geometric_checkpoints(n_max) if checkpoints is None else sorted(checkpoints)
    try:
        sums = np.real(_circle_sums(f, ns, xs, skip_singular))
    except NotImplementedError:
        sums = np.real(level_values(system, f, xs, ns, skip_singular=skip_singular))
    running = np.fmax.accumulate(sums, axis=1)
    rm = running[:, [c - 1 for c in cps]]
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = rm[:, 1:] / rm[:, :-1]
    valid = ~np.isnan(rm[:, -1])
    exceed = float(np.mean(rm[valid, -1] > factor * reference)) if valid.any() else 0.0
    flagged = exceed >= quota
    return DivergenceReport(cps, rm, growth, reference, factor, exceed, flagged,
                            DIVERGENCE_LABEL if flagged else NO_DIVERGENCE_LABEL)


# ---------------------------------------------------------------- maximal inequality


@dataclass
class AuditRow:
    alpha: float
    lhs: float
    rhs: float
    passed: bool


@dataclass
class AuditReport:
    rows: list
    passed: bool
    bound: float
    observed_hitting: float


def audit_grid(window: Sequence[tuple], cells: Sequence[int]):
    """Cell points (offset off the dyadics) and cell volume for a box window."""
    axes = []
    vol = 1.0
    for (lo, hi), n in zip(window, cells):
        h = (hi - lo) / n
        axes.append(lo + (np.arange(n) + _GRID_OFFSET) * h)
        vol *= h
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1), vol


def maximal_inequality_audit(system: ActionSystem, f: Integrand, region, bound: float,
                             alphas: Sequence[float], level_cap: int, first_level: int = None,
                             window: Sequence[tuple] = None, cells: Sequence[int] = None,
                             trunc: G.TruncationPolicy = None, tol: float = 1e-3,
                             maximal: Callable = None, hitting_points: int = 64) -> AuditReport:
    """Check ``alpha mu(Q_alpha & X_k) <= c_k integral over Q_alpha of f`` on a grid.

    ``Q_alpha = {f* > alpha}`` with ``f*`` the maximum of the orbital integrals
    over levels ``first_level..level_cap``.  ``window`` must contain both the
    region ``X_k`` and the support of ``f``.  The bound ``c_k`` is first checked
    against hitting measures of ``X_k`` observed at grid points.  ``maximal``
    replaces the computed ``f*`` (used to test that the audit can fail).
    """
    first = system.chain.start if first_level is None else first_level
    if window is None:
        window = [(0.0, 1.0)] * system.space.dim
    if cells is None:
        cells = [2**12] * len(window)
    pts, vol = audit_grid(window, cells)
    probe = pts[:: max(1, len(pts) // hitting_points)]
    seen = observed_hitting_sup(system, range(first, level_cap + 1), region, probe, trunc)
    if seen > bound * (1 + 1e-12):
        raise DomainError(f"hitting bound {bound} is below an observed hitting measure {seen}")
    fvals = np.real(np.asarray(f(pts), dtype=complex if f.is_complex else float))
    if maximal is None:
        fstar = maximal_function(system, f, pts, level_cap, first, trunc)
    else:
        fstar = np.asarray(maximal(pts))
    in_region = region.contains(pts)
    rows = []
    for a in alphas:
        q = fstar > a
        lhs = a * vol * float(np.count_nonzero(q & in_region))
        rhs = bound * vol * math.fsum(fvals[q])
        rows.append(AuditRow(float(a), lhs, rhs, lhs <= rhs * (1 + tol)))
    return AuditReport(rows, all(r.passed for r in rows), bound, seen)

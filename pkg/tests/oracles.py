"""Independent brute-force references.  None of these import orbint."""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy import integrate


def riemann_sum(f, n: int, x: float) -> complex:
    """(1/n) sum_j f(x + j/n mod 1) by a plain python loop."""
    total = 0.0
    for j in range(n):
        y = (x + j / n) % 1.0
        total += f(y)
    return total / n


def lattice_count(lo: Fraction, hi: Fraction, step: Fraction, closed: bool = True) -> int:
    """Number of k * step in [lo, hi] (or [lo, hi))."""
    first = math.ceil(lo / step)
    last = math.floor(hi / step)
    if not closed and last * step == hi:
        last -= 1
    return max(0, last - first + 1)


def affine_pushforward_scalar(a: float, b: float, grid: int = 40) -> float:
    """Least-squares fit of c with Leb(s^-1 I) = c Leb(I) for s: x -> a x + b.

    Preimages of intervals are found by bisection, not by inverting the map in
    closed form.
    """

    def preimage(y):
        lo, hi = -1e6, 1e6
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if a * mid + b < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    rng = np.random.default_rng(1)
    lhs, rhs = [], []
    for _ in range(grid):
        u, v = np.sort(rng.uniform(-5, 5, 2))
        lhs.append(preimage(v) - preimage(u))
        rhs.append(v - u)
    lhs, rhs = np.array(lhs), np.array(rhs)
    return float(lhs @ rhs / (rhs @ rhs))


def bump_profile(s, order):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1, np.clip(1 - s * s, 0, None) ** order, 0.0)


def profile_integral(order: int) -> Fraction:
    """Exact integral of (1 - s^2)^order over [-1, 1] by binomial expansion."""
    return sum(Fraction(math.comb(order, j) * (-1) ** j * 2, 2 * j + 1) for j in range(order + 1))


def line_bump_integral(center: float, radius: float, order: int) -> float:
    return radius * float(profile_integral(order))


def line_lattice_sum(center: float, radius: float, order: int, n: int) -> float:
    step = 2.0**-n
    ks = np.arange(math.floor((center - radius) / step) - 1, math.ceil((center + radius) / step) + 2)
    return math.fsum(bump_profile((ks * step - center) / radius, order)) * step


def affine_log_bump_integral(center, radius, order, weight=lambda a, b: 1.0) -> float:
    """Integral of a (log a, b) bump against weight * da db / a (right Haar), by dblquad."""
    (ca, cb), (ra, rb) = center, radius

    def g(b, alpha):
        s = ((alpha - ca) / ra, (b - cb) / rb)
        return float(bump_profile(s[0], order) * bump_profile(s[1], order)) * weight(math.exp(alpha), b)

    val, _ = integrate.dblquad(g, ca - ra, ca + ra, cb - rb, cb + rb, epsabs=1e-13, epsrel=1e-13)
    return val


def sym_average_first_coordinate(word, n: int) -> float:
    """E_n x_1: average of x_{sigma^-1(1)} over all permutations of the first n coordinates."""
    w = list(word)
    vals = [w[p[0]] for p in itertools.permutations(range(n))]
    return sum(vals) / len(vals)


def compose_perm(p, q):
    """(p o q)(i) = p(q(i)) on 0-based words."""
    return tuple(p[i] for i in q)

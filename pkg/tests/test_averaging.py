import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import riemann_sum
from orbint import actions as A
from orbint import averaging as V
from orbint import groups as G
from orbint import measures as M
from orbint.errors import DomainError, NotAFundamentalDomain, SingularHit, ZeroHitting

LINE_WIN = G.TruncationPolicy(((-3.0, 3.0),))
ALL = A.torus_rotation(64, "all", 1)
DYADIC = A.torus_rotation(10)
LINE = A.line_translation(12)


def e(m, x):
    return cmath.exp(2j * math.pi * m * x)


# ---------------------------------------------------------------- orbital integrals


def test_character_examples():
    x = 0.3141
    assert abs(V.orbital_integral(ALL, 4, V.Character(3), x)) <= 1e-15
    assert V.orbital_integral(ALL, 4, V.Character(4), x) == pytest.approx(e(4, x), abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 12])
def test_line_indicator_at_zero(n):
    v = V.orbital_integral(LINE, n, V.Indicator(A.Box(0, 1, closed=True)), 0.0, LINE_WIN)
    assert v == 1 + 2.0**-n


@pytest.mark.parametrize("n", [1, 5, 9, 12])
def test_line_indicator_at_generic_point_is_exact(n):
    # an interval of length 1 with off-lattice endpoints holds exactly 2^n lattice points
    v = V.orbital_integral(LINE, n, V.Indicator(A.Box(0, 1, closed=True)), 0.123456789, LINE_WIN)
    assert v == 1.0


def test_ambient_examples():
    assert V.ambient_orbital_integral(LINE, V.Indicator(A.Box(0, 1, closed=True)), 0.7) == 1.0
    assert V.ambient_orbital_integral(DYADIC, V.PowerSingularity(0.75), 0.2) == 4.0


def test_ambient_affine_independent_of_point():
    sys_ = A.affine_self(3)
    bump = M.Bump((0.1, 0.2), (0.7, 0.9), 3, "log-scale")
    f = V.Function(bump)
    vals = []
    for x in [(1.0, 0.0), (2.5, -0.7)]:
        xinv = G.inverse_arrays(G.affine(), np.array([x]))
        lo, hi = bump.support
        t = G.compose_arrays(G.affine(), A._box_corners(lo, hi), xinv)
        win = ((t[:, 0].min() * 0.999, t[:, 0].max() * 1.001), (t[:, 1].min() - 1e-3, t[:, 1].max() + 1e-3))
        vals.append(float(V.ambient_orbital_integral(sys_, f, x, G.TruncationPolicy(win, cells=(1024, 1024)))))
    assert vals[0] == pytest.approx(vals[1], abs=1e-6)
    assert vals[0] == pytest.approx(bump.chart_integral, abs=1e-6)


def test_riemann_identity_against_loop_oracle():
    rng = np.random.default_rng(4)
    f = V.Function(lambda p: np.cos(6 * np.pi * p[:, 0]) + p[:, 0] ** 2)
    for n in (1, 3, 8, 17, 64):
        for x in rng.random(5):
            ref = riemann_sum(lambda y: math.cos(6 * math.pi * y) + y * y, n, x)
            assert V.orbital_integral(ALL, n, f, x) == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("m", range(0, 17))
def test_character_exactness_all_levels(m):
    xs = np.random.default_rng(m).random(20)
    for n in range(1, 17):
        v = V.orbital_integral(ALL, n, V.Character(m), xs)
        ref = np.exp(2j * np.pi * m * xs) if m % n == 0 else 0
        assert np.max(np.abs(v - ref)) <= 1e-12


def test_singular_hit_raises_or_is_skipped():
    f = V.PowerSingularity(0.75)
    with pytest.raises(SingularHit):
        V.orbital_integral(DYADIC, 2, f, 0.25)
    v = V.orbital_integral(DYADIC, 2, f, 0.25, skip_singular=True)
    assert math.isnan(v)


# ---------------------------------------------------------------- closed-form power sums


@pytest.mark.parametrize("delta", [0.25, 0.5, 0.75, 0.9])
def test_power_sums_match_brute_force(delta):
    xs = np.random.default_rng(1).random(30)
    ns = np.array([1, 2, 3, 31, 32, 33, 100, 777, 2048])
    fast = V.riemann_power_sums(delta, ns, xs)
    for j, n in enumerate(ns):
        nodes = (xs[:, None] + np.arange(n)[None, :] / n) % 1.0
        brute = np.array([math.fsum(r) for r in nodes**-delta]) / n
        assert np.allclose(fast[:, j], brute, rtol=5e-11, atol=0)


# ---------------------------------------------------------------- properties


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(1, 40), st.floats(0, 0.999))
def test_linearity(a, b, n, x):
    f, g = V.Character(2), V.Function(lambda p: p[:, 0] ** 3)
    lhs = V.orbital_integral(ALL, n, a * f + b * g, x)
    rhs = a * V.orbital_integral(ALL, n, f, x) + b * V.orbital_integral(ALL, n, g, x)
    assert abs(lhs - rhs) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.floats(-1, 1), st.floats(0.1, 2.0))
def test_monotonicity_on_line(n, x, w):
    f = V.Indicator(A.Box(0, w, closed=True))
    g = V.Indicator(A.Box(-0.5, w + 0.5, closed=True))
    assert V.orbital_integral(LINE, n, f, x, LINE_WIN) <= V.orbital_integral(LINE, n, g, x, LINE_WIN) + 1e-12


def test_maximal_dominates_levels():
    f = V.PowerSingularity(0.75)
    xs = A.torus_rotation(10).space.sample(50, 3)
    fstar = V.maximal_function(DYADIC, f, xs, 10, 0)
    for k in range(11):
        assert np.all(np.real(V.orbital_integral(DYADIC, k, f, xs)) <= fstar + 1e-12)


def test_maximal_examples():
    zero = V.Function(lambda p: np.zeros(len(p)), nonnegative=True)
    assert V.maximal_function(LINE, zero, 0.3, 6, 1, LINE_WIN) == 0.0
    ind = V.Indicator(A.Box(0, 1, closed=True))
    assert V.maximal_function(LINE, ind, 0.0, 12, 1, LINE_WIN) == 1.5
    assert V.maximal_function(DYADIC, V.Constant(1.0), 0.4, 10, 0) == 1.0
    with pytest.raises(DomainError):
        V.maximal_function(DYADIC, V.Character(1), 0.4, 3)


# ---------------------------------------------------------------- ratio and restricted averages


def test_ratio_examples():
    B = A.Box(0, 1, closed=True)
    f = V.Function(lambda p: p[:, 0] * B.contains(p))
    assert V.ratio_average(LINE, 2, f, B, 0.0, LINE_WIN) == 0.5
    assert V.ratio_average(LINE, 2, V.Indicator(B), B, 0.0, LINE_WIN) == 1.0
    B2 = A.Box(0, 0.5)
    assert V.ratio_average(DYADIC, 3, V.Indicator(A.Box(0, 0.25)), B2, 0.0) == 0.5


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10), st.floats(0, 0.4999))
def test_ratio_of_indicator_is_one(k, x):
    B = A.Box(0, 0.5)
    assert V.ratio_average(DYADIC, k, V.Indicator(B), B, x) == 1.0


def test_ratio_needs_point_in_B():
    with pytest.raises(DomainError):
        V.ratio_average(DYADIC, 3, V.Constant(1.0), A.Box(0, 0.5), 0.7)


def test_ratio_zero_hitting():
    # a window without the identity leaves no level element carrying x into B
    with pytest.raises(ZeroHitting):
        V.ratio_average(LINE, 1, V.Constant(1.0), A.Box(0.1, 0.2), 0.15, G.TruncationPolicy(((0.5, 1.0),)))


def test_restricted_examples():
    E = A.Box(0, 1, closed=True)
    ident = V.Function(lambda p: p[:, 0])
    zero = G.identity(G.real_line())
    assert V.restricted_average(LINE, 2, ident, E, zero, 0.0, LINE_WIN) == 0.625
    R = A.RationalSet(0, 1)
    ind = V.Indicator(E)
    for n in (1, 4, 9):
        assert V.restricted_average(LINE, n, ind, R, A.ExactReal(), 0.0, LINE_WIN) == 1 + 2.0**-n
        assert V.restricted_average(LINE, n, ind, R, A.ExactReal(0, 1), 0.0, LINE_WIN) == 0.0
    assert V.ambient_restricted_average(LINE, ind, R, A.ExactReal(), 0.0) == 0.0


# ---------------------------------------------------------------- lattices


def test_fundamental_reduce_examples():
    ch1 = G.dyadic_line_chain(4)
    g, gt = V.fundamental_reduce(ch1, G.element(G.scaled_lattice(0.25), 1.75), A.Box(0, 1))
    assert g.coords == (-1.0,) and gt.coords == (0.75,)
    g, gt = V.fundamental_reduce(ch1, G.element(G.scaled_lattice(0.5), 0.5), A.Box(0, 1))
    assert g.coords == (0.0,)
    ch2 = G.dyadic_line_chain(4, dim=2)
    g, gt = V.fundamental_reduce(ch2, G.element(G.scaled_lattice(0.25, 2), (2.25, -0.5)), A.Box((0, 0), (1, 1)))
    assert g.coords == (-2.0, 1.0) and gt.coords == (0.25, 0.5)


def test_fundamental_reduce_rejects_non_domain():
    ch = G.dyadic_line_chain(4)
    with pytest.raises(NotAFundamentalDomain):
        V.fundamental_reduce(ch, G.element(G.scaled_lattice(0.25), 0.5), A.Box(0, 2))


def test_lattice_examples():
    sys_ = A.torus2_lattice(6)
    D = A.Box((0, 0), (1, 1))
    for n in range(7):
        assert len(V.lattice_points_in(sys_.chain, n, D)) == 4**n
        assert V.lattice_average(sys_, n, V.Constant(1.0), D, (0.3, 0.6)) == 1.0
        if n >= 1:
            assert abs(V.lattice_average(sys_, n, V.Character((1, 0)), D, (0.0, 0.0))) <= 1e-15


def test_lattice_average_rejects_non_invariant():
    f = V.Function(lambda p: p[:, 0])  # not invariant under integer translations of the plane
    with pytest.raises(DomainError):
        V.lattice_average(A.line_translation(3, dim=2), 2, f, A.Box((0, 0), (1, 1)), (0.1, 0.2))


# ---------------------------------------------------------------- product averages


@pytest.mark.parametrize("n", [1, 3, 8])
def test_product_examples(n):
    U = A.Box(0, 1, closed=True)
    s = G.identity(G.real_line())
    v = V.product_average(LINE, n, lambda ts, tx: U.contains(ts).astype(float), s, 0.37, LINE_WIN)
    assert v == 1 + 2.0**-n
    w = V.product_average(LINE, n, lambda ts, tx: U.contains(ts) * np.ones(len(tx)), s, -0.2, LINE_WIN)
    assert w == v
    tor = A.torus_rotation(4)
    z = V.product_average(tor, 2, lambda ts, tx: np.exp(2j * np.pi * (ts[:, 0] + tx[:, 0])),
                          G.identity(G.torus()), 0.3)
    assert abs(z) <= 1e-15


# ---------------------------------------------------------------- trajectories


def test_trajectory_character_two():
    tr = V.trajectory(A.torus_rotation(6), V.Character(2), 0.3, range(0, 7))
    assert tr.reference == 0 and tr.reference_source == "ambient"
    assert abs(tr.values[0] - e(2, 0.3)) <= 1e-15 and abs(tr.values[1] - e(2, 0.3)) <= 1e-15
    assert np.all(np.abs(tr.values[2:]) <= 1e-15)
    assert tr.tail_deviation[2] <= 1e-15


def test_trajectory_explicit_reference_wins():
    tr = V.trajectory(A.torus_rotation(4), V.Constant(2.5), 0.1, range(5), reference=2.5)
    assert tr.reference_source == "explicit"
    assert np.all(tr.values == 2.5) and np.all(tr.tail_deviation == 0)


def test_trajectory_line_indicator_at_grid_point():
    tr = V.trajectory(LINE, V.Indicator(A.Box(0, 1, closed=True)), 0.0, range(1, 13), trunc=LINE_WIN)
    assert tr.reference == 1.0
    assert np.array_equal(np.abs(tr.values - 1.0), 2.0 ** -np.arange(1, 13))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_tail_deviation_monotone(vals):
    tail = V.tail_deviations(np.array(vals), 0.0)
    assert np.all(np.diff(tail) <= 0)

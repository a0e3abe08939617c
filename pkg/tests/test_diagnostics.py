import numpy as np
import pytest

from orbint import actions as A
from orbint import averaging as V
from orbint import calibration as CAL
from orbint import diagnostics as D
from orbint import groups as G
from orbint.errors import DomainError

LINE_WIN = G.TruncationPolicy(((-2.0, 2.0),))


def test_trig_polynomial_converges_exactly():
    sys_ = A.torus_rotation(8)
    f = V.TrigPolynomial(np.array([[0], [3], [-17], [100]]), np.array([1.5, 2.0, 1j, -0.5]))
    ver = D.ae_limit_estimate(sys_, f, range(0, 9), sample_size=50, tol=1e-12, seed=2)
    assert ver.passed and ver.converged_fraction == 1.0
    assert ver.median_deviation[-1] <= 1e-13


def test_line_indicator_grid_points_deviate_by_two_to_minus_n():
    sys_ = A.line_translation(12)
    ver = D.ae_limit_estimate(sys_, V.Indicator(A.Box(0, 1, closed=True)), range(1, 13), tol=1e-12,
                              trunc=LINE_WIN, points=np.array([0.0, 0.5, -0.25]))
    assert np.array_equal(np.abs(ver.values[0] - 1.0), 2.0 ** -np.arange(1, 13))
    assert ver.median_deviation[-1] == 2.0**-12


def test_negative_control_refused():
    with pytest.raises(DomainError):
        D.ae_limit_estimate(A.affine_line(3), V.Constant(1.0), [0, 1], sample_size=2)


def test_ae_estimate_is_deterministic():
    sys_ = A.torus_rotation(10)
    f = V.PowerSingularity(0.75)
    a = D.ae_limit_estimate(sys_, f, range(0, 11), sample_size=40, seed=9)
    b = D.ae_limit_estimate(sys_, f, range(0, 11), sample_size=40, seed=9)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.points, b.points)


def test_geometric_checkpoints():
    assert D.geometric_checkpoints(10_000) == [10, 100, 1000, 10_000]
    assert D.geometric_checkpoints(50) == [10, 50]


def test_divergence_constant_not_flagged():
    sys_ = A.torus_rotation(100, "all", 1)
    one = V.TrigPolynomial(np.array([[0]]), np.array([1.0]))
    rep = D.divergence_gap(sys_, one, 100, np.random.default_rng(0).random(20), 1.0, 2.0)
    assert np.allclose(rep.running_max, 1.0, atol=1e-15)
    assert not rep.flagged and rep.label == D.NO_DIVERGENCE_LABEL


def test_divergence_bounded_control_not_flagged():
    sys_ = A.torus_rotation(1000, "all", 1)
    ctrl = V.TrigPolynomial(np.array([[0], [1], [-1]]), np.array([1.0, 0.5, 0.5]))
    rep = D.divergence_gap(sys_, ctrl, 1000, np.random.default_rng(0).random(20), 1.0, CAL.DIVERGENCE_FACTOR)
    assert not rep.flagged
    assert np.all(rep.running_max <= 2.0 + 1e-12)


def test_divergence_power_singularity_flagged():
    sys_ = A.torus_rotation(CAL.DIVERGENCE_N_MAX, "all", 1)
    pts = sys_.space.sample(CAL.DIVERGENCE_SAMPLE, 1)[:, 0]
    rep = D.divergence_gap(sys_, V.PowerSingularity(0.75), CAL.DIVERGENCE_N_MAX, pts, 4.0, CAL.DIVERGENCE_FACTOR)
    assert rep.flagged and rep.label == D.DIVERGENCE_LABEL
    assert np.all(np.diff(rep.running_max, axis=1) >= 0)


def test_divergence_needs_nonnegative():
    with pytest.raises(DomainError):
        D.divergence_gap(A.torus_rotation(5, "all", 1), V.Function(lambda p: p[:, 0] - 1), 5, [0.3], 1.0, 2.0)


def test_divergence_generic_integrand_uses_level_values():
    sys_ = A.torus_rotation(30, "all", 1)
    f = V.Function(lambda p: 1 + np.cos(2 * np.pi * p[:, 0]), mean=1.0, nonnegative=True)
    rep = D.divergence_gap(sys_, f, 30, [0.1, 0.7], 1.0, 3.0)
    assert not rep.flagged


# ---------------------------------------------------------------- maximal audit


def test_audit_large_alpha_is_vacuous():
    sys_ = A.torus_rotation(6)
    rep = D.maximal_inequality_audit(sys_, V.Constant(1.0), A.Arc(0, 1), 1.0, [5.0], 6, 0, cells=[512])
    assert rep.passed and rep.rows[0].lhs == 0.0 and rep.rows[0].rhs == 0.0


def test_audit_line_indicator():
    sys_ = A.line_translation(8)
    rep = D.maximal_inequality_audit(sys_, V.Indicator(A.Box(0, 1, closed=True)), A.Box(-0.5, 0.5, closed=True),
                                     1.5, [0.25, 0.5, 1.0], 8, 1, window=[(-0.5, 1.0)], cells=[1536],
                                     trunc=LINE_WIN)
    assert rep.passed
    assert rep.observed_hitting <= 1.5


def test_audit_circle_power():
    sys_ = A.torus_rotation(8)
    rep = D.maximal_inequality_audit(sys_, V.PowerSingularity(0.75), A.Arc(0, 1), 1.0,
                                     [0.25, 0.5, 1.0, 2.0, 4.0], 8, 0, cells=[2048])
    assert rep.passed


def test_audit_rejects_bound_below_hitting():
    sys_ = A.line_translation(8)
    with pytest.raises(DomainError):
        D.maximal_inequality_audit(sys_, V.Indicator(A.Box(0, 1, closed=True)), A.Box(-0.5, 0.5, closed=True),
                                   0.5, [1.0], 8, 1, window=[(-0.5, 1.0)], cells=[256], trunc=LINE_WIN)


def test_audit_catches_corrupted_maximal_function():
    sys_ = A.line_translation(8)
    f = V.Indicator(A.Box(0, 1, closed=True))

    def corrupted(pts):
        return V.maximal_function(sys_, f, pts, 8, 1, LINE_WIN) + 10.0 * (f(pts) == 0)

    rep = D.maximal_inequality_audit(sys_, f, A.Box(-0.5, 0.5, closed=True), 1.5, [0.25, 0.5, 1.0], 8, 1,
                                     window=[(-0.5, 1.0)], cells=[1536], trunc=LINE_WIN, maximal=corrupted)
    assert not rep.passed


def test_audit_grid_avoids_dyadics():
    pts, vol = D.audit_grid([(0.0, 1.0)], [1024])
    assert vol == 1 / 1024
    assert not np.any(pts * 2**20 == np.floor(pts * 2**20))


# ---------------------------------------------------------------- calibration


def test_calibration_constants_reproduce():
    out = CAL.calibrate()
    assert out["jessen_final_median"] == CAL.JESSEN_ORACLE_MEDIAN
    assert out["jessen_final_median_bound"] == CAL.JESSEN_FINAL_MEDIAN_BOUND
    assert out["divergence_q25"] == CAL.DIVERGENCE_ORACLE_Q25
    assert out["divergence_factor"] == CAL.DIVERGENCE_FACTOR


def test_library_matches_jessen_oracle_on_calibration_points():
    xs = np.random.default_rng(CAL.CALIBRATION_SEED).random(200)
    med = CAL.jessen_oracle(CAL.CALIBRATION_SEED, sample=200, k_max=10)
    ver = D.ae_limit_estimate(A.torus_rotation(10), V.PowerSingularity(0.75), range(0, 11), points=xs)
    assert np.allclose(ver.median_deviation, med, rtol=1e-9)

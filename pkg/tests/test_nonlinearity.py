import math

import numpy as np
import pytest

from nls_ground.nonlinearity import (
    AuditReport,
    CouplingProduct,
    LogPower,
    NonlinearitySpec,
    NormPower,
    PiecewisePower,
    SeparablePower,
    SobolevCritical,
    audit_assumptions,
    check_eta2,
    eta2_radius,
    eval_g,
    eval_G,
    eval_h,
    eval_H,
)

ALL_TERMS = [
    SeparablePower(0, 1.0, 4.0),
    LogPower(1, 0.5, 3.5),
    PiecewisePower(0, 2.0, 5.0, 3.5),
    NormPower(0.3, 4.5),
    CouplingProduct(0.7, (2.0, 2.0)),
    SobolevCritical((1.0, 2.0)),
]


def _points(n=40, seed=0):
    rng = np.random.default_rng(seed)
    points = rng.uniform(-3.0, 3.0, size=(2, n))
    # stay clear of the kink of the piecewise power
    points[np.abs(np.abs(points) - 1.0) < 1e-3] += 0.01
    return points


@pytest.mark.parametrize("term", ALL_TERMS, ids=lambda t: type(t).__name__)
def test_H_is_gu_minus_two_G(term):
    spec = NonlinearitySpec(3, 2, (term,))
    u = _points()

    gu = np.sum(eval_g(spec, u) * u, axis=0)
    np.testing.assert_allclose(
        eval_H(spec, u), gu - 2.0 * eval_G(spec, u), rtol=1e-10, atol=1e-12
    )


@pytest.mark.parametrize("term", ALL_TERMS, ids=lambda t: type(t).__name__)
def test_gradients_match_finite_differences(term):
    spec = NonlinearitySpec(3, 2, (term,))
    u = _points(seed=1)
    step = 1e-6
    for i in range(2):
        shift = np.zeros_like(u)
        shift[i] = step
        dG = (eval_G(spec, u + shift) - eval_G(spec, u - shift)) / (2 * step)
        dH = (eval_H(spec, u + shift) - eval_H(spec, u - shift)) / (2 * step)
        np.testing.assert_allclose(eval_g(spec, u)[i], dG, rtol=1e-5, atol=1e-6)
        np.testing.assert_allclose(eval_h(spec, u)[i], dH, rtol=1e-5, atol=1e-6)


def test_critical_exponent_is_bound():
    spec = NonlinearitySpec(3, 2, (SobolevCritical((1.0, 1.0)),))
    assert spec.terms[0].exponent == 6.0
    spec = NonlinearitySpec(4, 2, (SobolevCritical((1.0, 1.0)),))
    assert spec.terms[0].exponent == 4.0
    assert spec.has_critical_part
    np.testing.assert_array_equal(spec.theta, [1.0, 1.0])


def test_validation():
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 1, (SeparablePower(0, 1.0, 6.0),))
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 1, (SeparablePower(1, 1.0, 4.0),))
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 2, (CouplingProduct(1.0, (4.0, 0.0)),))
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 2, (CouplingProduct(1.0, (1.5, 1.5)),))
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 2, (CouplingProduct(-1.0, (2.0, 2.0)),))
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 2, (SobolevCritical((1.0, 0.0)),))
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 2, (SobolevCritical((1.0,)),))
    with pytest.raises(ValueError):
        NonlinearitySpec(
            3, 1, (SobolevCritical((1.0,)), SobolevCritical((2.0,)))
        )
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 1, (LogPower(0, 1.0, 3.0),))
    with pytest.raises(ValueError):
        NonlinearitySpec(3, 1, (SeparablePower(0, math.nan, 4.0),))
    with pytest.raises(TypeError):
        NonlinearitySpec(3, 1, ("not a term",))
    with pytest.raises(ValueError):
        NonlinearitySpec(2, 1, ())


def test_points_need_one_row_per_component():
    spec = NonlinearitySpec(3, 2, (SeparablePower(0, 1.0, 4.0),))
    with pytest.raises(ValueError):
        eval_G(spec, np.ones((3, 5)))
    with pytest.raises(ValueError):
        eval_G(spec, np.full((2, 5), np.inf))


def test_structured_form():
    separable = NonlinearitySpec(
        3,
        2,
        (SeparablePower(0, 1.0, 4.0), CouplingProduct(1.0, (2.0, 2.0))),
    )
    assert separable.is_gsp_form
    assert len(separable.couplings) == 1

    rotational = NonlinearitySpec(3, 2, (NormPower(1.0, 4.0),))
    assert not rotational.is_gsp_form
    assert NonlinearitySpec(3, 1, (NormPower(1.0, 4.0),)).is_gsp_form


def test_subcritical_restricted_and_coupling():
    spec = NonlinearitySpec(
        3,
        2,
        (
            SeparablePower(0, 1.0, 4.0),
            SeparablePower(1, 2.0, 4.0),
            CouplingProduct(1.0, (2.0, 2.0)),
            SobolevCritical((1.0, 3.0)),
        ),
    )
    assert not spec.subcritical().has_critical_part

    second = spec.restricted(1)
    assert second.n_components == 1
    assert second.terms[0] == SeparablePower(0, 2.0, 4.0)
    assert second.theta[0] == 3.0
    with pytest.raises(ValueError):
        spec.restricted(2)

    stronger = spec.with_coupling(5.0)
    assert stronger.couplings[0].beta == 5.0
    assert spec.couplings[0].beta == 1.0


def test_combine_is_linear():
    a = NonlinearitySpec(
        3, 2, (SeparablePower(0, 1.0, 4.0), SobolevCritical((1.0, 1.0)))
    )
    b = NonlinearitySpec(
        3, 2, (CouplingProduct(1.0, (2.0, 2.0)), SobolevCritical((0.5, 2.0)))
    )
    combined = a.combine(b, 2.0, 3.0)
    u = _points(seed=4)

    np.testing.assert_allclose(
        eval_G(combined, u), 2.0 * eval_G(a, u) + 3.0 * eval_G(b, u)
    )
    np.testing.assert_allclose(combined.theta, [3.5, 8.0])
    with pytest.raises(ValueError):
        a.combine(NonlinearitySpec(4, 2, ()))


def test_audit_passes_for_a_supercritical_power():
    spec = NonlinearitySpec(3, 1, (SeparablePower(0, 1.0, 4.0),))
    report = audit_assumptions(spec)

    assert isinstance(report, AuditReport)
    assert report.passed
    assert report.failures() == []
    assert report["A1"].passed
    assert report.eta < 1e-3
    assert "A5" in report.summary()
    with pytest.raises(KeyError):
        report["A9"]


def test_audit_fails_below_the_mass_critical_exponent():
    spec = NonlinearitySpec(3, 1, (SeparablePower(0, 1.0, 3.0),))
    report = audit_assumptions(spec)

    assert not report.passed
    assert "A4" in report.failures()


def test_audit_with_critical_part_needs_positive_liminf():
    spec = NonlinearitySpec(
        3,
        2,
        (
            SeparablePower(0, 1.0, 4.0),
            SeparablePower(1, 1.0, 4.0),
            SobolevCritical((1.0, 1.0)),
        ),
    )
    report = audit_assumptions(spec)
    assert report["A3"].passed
    assert report["A4strict"].passed


def test_audit_sample_box():
    spec = NonlinearitySpec(3, 1, (SeparablePower(0, 1.0, 4.0),))
    with pytest.raises(ValueError):
        audit_assumptions(spec, sample_box=(1.0, 0.5))


def _audit_with_eta(eta):
    return AuditReport((), eta, 0.0, (1e-3, 1e3))


def test_eta_mass_bound():
    spec = NonlinearitySpec(3, 1, (SeparablePower(0, 1.0, 4.0),))
    check = check_eta2(spec, (1.0, 1.0), 0.5, audit=_audit_with_eta(0.0))
    assert check.holds
    assert check.lhs == 0.0

    check = check_eta2(spec, (1.0,), 0.5, audit=_audit_with_eta(0.1))
    expected = 6.0 * 0.5 ** (10 / 3) * 0.1
    assert check.lhs == pytest.approx(expected)
    assert check.margin == pytest.approx(1.0 - expected)

    assert eta2_radius(spec, 0.5, audit=_audit_with_eta(0.0)) == math.inf
    radius = eta2_radius(spec, 0.5, audit=_audit_with_eta(0.1))
    check = check_eta2(spec, (radius,), 0.5, audit=_audit_with_eta(0.1))
    assert check.lhs == pytest.approx(1.0)


def test_eta_mass_bound_audits_the_spec():
    spec = NonlinearitySpec(
        3,
        2,
        (
            SeparablePower(0, 0.01, 10 / 3),
            SeparablePower(1, 0.01, 10 / 3),
            SeparablePower(0, 1.0, 4.0),
            SeparablePower(1, 1.0, 4.0),
            SobolevCritical((1.0, 1.0)),
        ),
    )
    audit = audit_assumptions(spec)
    assert audit.eta > 0

    fresh = check_eta2(spec, (10.0, 10.0), 0.5)
    reused = check_eta2(spec, (10.0, 10.0), 0.5, audit=audit)
    assert fresh == reused
    assert eta2_radius(spec, 0.5) == eta2_radius(spec, 0.5, audit=audit)
    assert check_eta2(spec, (10.0, 10.0), 0.5).holds
    assert not check_eta2(spec, (1e6, 1e6), 0.5).holds

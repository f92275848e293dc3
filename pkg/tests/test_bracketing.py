import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leaky_loop.bracketing import (
    assemble_bracket,
    count_negative,
    counting_modes,
    halfwidth_schedule,
    monotone_bounded,
    report_to_json,
    reports_to_csv,
    theorem1_verdict,
    theorem2_verdict,
)
from leaky_loop.errors import HypothesisViolated, InvalidBeta, WindowTooSmall
from leaky_loop.geometry import build_profile, circle
from leaky_loop.longitudinal import build_s, solve_periodic

import oracles


def test_schedule_values():
    assert halfwidth_schedule(0.1) == (pytest.approx(0.172694, abs=1e-6), False)
    assert halfwidth_schedule(0.5)[0] == pytest.approx(0.259930, abs=1e-6)
    a, clamped = halfwidth_schedule(0.5, max_halfwidth=0.2)
    assert clamped and a == pytest.approx(0.1998)


@pytest.mark.parametrize("beta", [0.0, 1.0, -0.1, 1.5])
def test_schedule_rejects_beta_outside_unit_interval(beta):
    with pytest.raises(InvalidBeta):
        halfwidth_schedule(beta)


@settings(max_examples=50, deadline=None)
@given(beta=st.floats(1e-4, 0.999))
def test_schedule_identity(beta):
    # [PAPER] e^{-4 a(beta)/beta} = beta^3
    a, _ = halfwidth_schedule(beta)
    assert math.exp(-4 * a / beta) == pytest.approx(beta**3, rel=1e-12)


def test_bracket_on_unit_circle(unit_circle):
    rep = assemble_bracket(unit_circle, 0.1, 8)
    assert rep.a == pytest.approx(0.172694, abs=1e-6)
    assert not rep.clamped and not rep.asymptotic_regime  # a/beta = 1.73
    assert rep.ordering_violations == []
    assert np.all(rep.omega_minus <= rep.omega_plus)
    assert np.all(np.diff(rep.omega_plus) >= -1e-9) and np.all(np.diff(rep.omega_minus) >= -1e-9)
    assert rep.kappa_minus > rep.kappa_plus
    assert rep.second_transverse_plus >= 0 and rep.second_transverse_minus >= rep.gap_threshold * 0.999
    # mu_1 = -1/4 lies between the renormalized brackets
    assert rep.renormalized_minus[0] <= -0.25 <= rep.renormalized_plus[0]


def test_bracket_refuses_beta_without_negative_fibre_eigenvalue(unit_circle):
    with pytest.raises(HypothesisViolated):
        assemble_bracket(unit_circle, 0.6, 4)


def test_renormalized_brackets_tighten(unit_circle):
    widths = []
    for beta in (0.2, 0.1, 0.05, 0.025):
        rep = assemble_bracket(unit_circle, beta, 4, verify_exclusion=False)
        widths.append(rep.renormalized_plus[0] - rep.renormalized_minus[0])
    assert np.all(np.diff(widths) < 0)


def test_degenerate_pair_is_kept(unit_circle):
    rep = assemble_bracket(unit_circle, 0.05, 5, verify_exclusion=False)
    assert rep.omega_plus[1] == pytest.approx(rep.omega_plus[2], abs=1e-9)
    assert rep.omega_minus[1] == pytest.approx(rep.omega_minus[2], abs=1e-9)


def test_counts_at_beta_002(unit_circle):
    rep = assemble_bracket(unit_circle, 0.02, counting_modes(unit_circle.length, 0.02),
                           verify_exclusion=False)
    cp, cm = count_negative(rep)
    assert rep.weyl == pytest.approx(200.0)
    assert cp <= cm
    lb = abs(math.log(0.02))
    assert abs(cp - 200) <= 4 * lb and abs(cm - 200) <= 4 * lb


def test_counts_match_closed_form_on_circle(unit_circle):
    # on the circle omega^j = t + c m^2 + const with m = floor(j/2); count the pairs directly
    beta = 0.04
    rep = assemble_bracket(unit_circle, beta, counting_modes(unit_circle.length, beta),
                           verify_exclusion=False)
    a = rep.a
    expected = []
    for t, c, v in ((rep.t_plus, (1 - a) ** -2, -0.25 / (1 + a) ** 2),
                    (rep.t_minus, (1 + a) ** -2, -0.25 / (1 - a) ** 2)):
        m = np.arange(0, 200)
        lam = t + c * m**2 + v
        expected.append(int(np.sum(lam < 0) * 2 - (lam[0] < 0)))
    assert count_negative(rep) == tuple(expected)


def test_window_too_small(unit_circle):
    rep = assemble_bracket(unit_circle, 0.05, 4, verify_exclusion=False)
    with pytest.raises(WindowTooSmall):
        count_negative(rep)
    assert rep.counts() is None


def test_monotone_bounded_rule():
    assert monotone_bounded([3.0, 2.0, 2.5])
    assert monotone_bounded([1.0, 1.05])
    assert not monotone_bounded([1.0, 2.0, 4.0])
    assert not monotone_bounded([1.0, float("nan")])


def test_theorem1_on_circle(unit_circle):
    fit = theorem1_verdict(unit_circle, [0.2, 0.1, 0.05, 0.025], 3)
    assert fit.verdict == "PASS"
    assert all(r["contains"] for r in fit.rows)
    last = [r for r in fit.rows if r["beta"] == 0.025]
    assert last[0]["renorm_minus"] <= -0.25 <= last[0]["renorm_plus"]
    assert last[1]["renorm_minus"] <= 0.75 <= last[1]["renorm_plus"]


def test_theorem1_on_ellipse(ellipse21):
    mu1 = solve_periodic(build_s(ellipse21), 1).eigenvalues[0]
    fit = theorem1_verdict(ellipse21, [0.1, 0.05, 0.025], 1)
    assert fit.verdict == "PASS"
    assert all(r["mu"] == pytest.approx(mu1, abs=1e-9) for r in fit.rows)


def test_theorem1_rejects_unsorted_or_empty_sweep(unit_circle):
    with pytest.raises(InvalidBeta):
        theorem1_verdict(unit_circle, [], 1)
    with pytest.raises(InvalidBeta):
        theorem1_verdict(unit_circle, [0.1, 0.2], 1)


def test_theorem1_strip_check_flags_points_outside(unit_circle):
    rep = assemble_bracket(unit_circle, 0.1, 4)
    inside = {"xi_minus": list(rep.omega_minus[:2] + 0.01), "xi_plus": list(rep.omega_plus[:2] - 0.01),
              "tol": 0.0}
    outside = dict(inside, xi_minus=list(rep.omega_minus[:2] - 1.0))
    ok = theorem1_verdict(unit_circle, [0.1], 2, reports={0.1: rep}, strip={0.1: inside})
    bad = theorem1_verdict(unit_circle, [0.1], 2, reports={0.1: rep}, strip={0.1: outside})
    assert ok.strip_check["ok"] and not bad.strip_check["ok"]
    assert bad.verdict == "FAIL"


def test_theorem2_on_circle(unit_circle):
    fit = theorem2_verdict(unit_circle, [0.08, 0.04, 0.02])
    assert fit.verdict == "PASS"
    assert [r["weyl"] for r in fit.rows] == pytest.approx([50, 100, 200])
    assert all(r["count_plus"] <= r["count_minus"] for r in fit.rows)


def test_exports(tmp_path, unit_circle):
    rep = assemble_bracket(unit_circle, 0.1, counting_modes(unit_circle.length, 0.1))
    report_to_json(rep, tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["counts"] == {"plus": count_negative(rep)[0], "minus": count_negative(rep)[1]}
    reports_to_csv([rep], tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "beta,j,omega_minus,omega_plus,renorm_minus,renorm_plus,mu"
    assert len(lines) == rep.n_modes + 1


def test_exact_circle_eigenvalue_lies_inside_the_bracket():
    # exact Bessel eigenvalue of the full problem, angular numbers m = 0, 1
    prof = build_profile(circle(1.0), 128)
    for beta in (0.1, 0.05):
        rep = assemble_bracket(prof, beta, 3, verify_exclusion=False)
        lam0 = oracles.circle_delta_prime_eigenvalue(0, beta)
        lam1 = oracles.circle_delta_prime_eigenvalue(1, beta)
        assert rep.omega_minus[0] <= lam0 <= rep.omega_plus[0]
        assert rep.omega_minus[1] <= lam1 <= rep.omega_plus[1]

"""Separated bracketing operators and the two asymptotic checks.

For a coupling ``beta`` the tube half-width is ``a(beta) = -(3/4) beta ln beta``.
The upper and lower separated operators have the eigenvalues

    omega_+-^j = t_+- + mu_j^+-(a(beta))

where ``t_+ = -kappa_+^2`` (Dirichlet fibre), ``t_- = -kappa_-^2`` (Robin
fibre) and ``mu_j^+-`` are the eigenvalues of the longitudinal operators
``U+-``. Eigenvalue estimates are compared with ``-4/beta^2 + mu_j`` and
eigenvalue counts with ``2L/(pi beta)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CouplingTooWeak,
    ExclusionUnverified,
    HypothesisViolated,
    InvalidBeta,
    NoNegativeEigenvalue,
    WindowTooSmall,
)
from .geometry import GeometryProfile
from .longitudinal import build_s, build_u_minus, build_u_plus, solve_periodic
from .transverse import (
    TransverseProblem,
    discretize_transverse,
    robin_gap_bound,
    solve_dirichlet_root,
    solve_robin_root,
)

# the clamp keeps a strictly inside the admissible range of U+-
CLAMP_FACTOR = 0.999
# slack allowed in the last ratio of a "monotone-bounded" sequence
RATIO_SLACK = 0.1


def halfwidth_schedule(beta: float, max_halfwidth: Optional[float] = None) -> tuple[float, bool]:
    """``a(beta) = -0.75 beta ln beta``, clamped below ``max_halfwidth``.

    Returns ``(a, clamped)``.
    """
    if not 0.0 < beta < 1.0:
        raise InvalidBeta(f"beta must lie in (0, 1), got {beta}")
    a = -0.75 * beta * math.log(beta)
    if max_halfwidth is not None and a >= max_halfwidth:
        return CLAMP_FACTOR * max_halfwidth, True
    return a, False


@dataclass
class BracketingReport:
    beta: float
    a: float
    clamped: bool
    # a/beta > 2 is the regime where the fibre asymptotics are claimed; existence itself only needs beta < 2a
    asymptotic_regime: bool
    length: float
    gamma_plus: float
    kappa_plus: float
    kappa_minus: float
    mu: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    second_transverse_plus: float = float("nan")
    second_transverse_minus: float = float("nan")
    gap_threshold: float = float("nan")
    ordering_violations: list = field(default_factory=list)

    @property
    def t_plus(self) -> float:
        return -self.kappa_plus**2

    @property
    def t_minus(self) -> float:
        return -self.kappa_minus**2

    @property
    def omega_plus(self) -> np.ndarray:
        return self.t_plus + self.mu_plus

    @property
    def omega_minus(self) -> np.ndarray:
        return self.t_minus + self.mu_minus

    @property
    def weyl(self) -> float:
        return 2.0 * self.length / (math.pi * self.beta)

    @property
    def renormalized_plus(self) -> np.ndarray:
        return self.omega_plus + 4.0 / self.beta**2

    @property
    def renormalized_minus(self) -> np.ndarray:
        return self.omega_minus + 4.0 / self.beta**2

    @property
    def n_modes(self) -> int:
        return len(self.mu_plus)

    def counts(self) -> Optional[tuple[int, int]]:
        try:
            return count_negative(self)
        except WindowTooSmall:
            return None

    def to_dict(self) -> dict:
        counts = self.counts()
        return {
            "beta": self.beta,
            "a": self.a,
            "clamped": self.clamped,
            "asymptotic_regime": self.asymptotic_regime,
            "length": self.length,
            "gamma_plus": self.gamma_plus,
            "kappa_plus": self.kappa_plus,
            "kappa_minus": self.kappa_minus,
            "t_plus": self.t_plus,
            "t_minus": self.t_minus,
            "second_transverse_plus": self.second_transverse_plus,
            "second_transverse_minus": self.second_transverse_minus,
            "gap_threshold": self.gap_threshold,
            "omega_plus": [float(v) for v in self.omega_plus],
            "omega_minus": [float(v) for v in self.omega_minus],
            "mu": [float(v) for v in self.mu],
            "counts": None if counts is None else {"plus": counts[0], "minus": counts[1]},
            "weyl": self.weyl,
            "ordering_violations": self.ordering_violations,
        }

    def table_rows(self) -> list[dict]:
        rows = []
        for j in range(self.n_modes):
            rows.append({
                "beta": self.beta,
                "j": j + 1,
                "omega_minus": float(self.omega_minus[j]),
                "omega_plus": float(self.omega_plus[j]),
                "renorm_minus": float(self.renormalized_minus[j]),
                "renorm_plus": float(self.renormalized_plus[j]),
                "mu": float(self.mu[j]),
            })
        return rows


def _transverse_second(problem: TransverseProblem, n_grid: int) -> float:
    return float(discretize_transverse(problem, n_grid, grading=2.0, n_eigs=2)[1])


def assemble_bracket(profile: GeometryProfile, beta: float, n_modes: int,
                     n_grid: Optional[int] = None, verify_exclusion: bool = True,
                     transverse_grid: int = 256) -> BracketingReport:
    """Eigenvalues ``omega_+-^j`` (``j <= n_modes``) of the separated operators."""
    a, clamped = halfwidth_schedule(beta, profile.max_halfwidth)
    gp = profile.gamma_plus
    try:
        kp = solve_dirichlet_root(a, beta)
        km = solve_robin_root(a, beta, gp)
    except (NoNegativeEigenvalue, CouplingTooWeak) as exc:
        raise HypothesisViolated(f"beta={beta}: {exc}") from exc

    mu = solve_periodic(build_s(profile), n_modes, n_grid).eigenvalues
    mu_p = solve_periodic(build_u_plus(profile, a), n_modes, n_grid).eigenvalues
    mu_m = solve_periodic(build_u_minus(profile, a), n_modes, n_grid).eigenvalues

    report = BracketingReport(
        beta=beta, a=a, clamped=clamped, asymptotic_regime=(a / beta > 2 and not clamped),
        length=profile.length, gamma_plus=gp, kappa_plus=kp.kappa, kappa_minus=km.kappa,
        mu=mu, mu_plus=mu_p, mu_minus=mu_m,
    )
    bad = np.nonzero(report.omega_minus > report.omega_plus)[0]
    report.ordering_violations = [int(j) + 1 for j in bad]

    if verify_exclusion:
        # the fibres depend on s only through gamma(s); check the extreme values
        second_p, second_m = np.inf, np.inf
        for g in sorted({float(profile.gamma.min()), 0.0, float(profile.gamma.max())}):
            up = TransverseProblem(a, beta, "dirichlet", gp, g)
            lo = TransverseProblem(a, beta, "robin", gp, g)
            second_p = min(second_p, _transverse_second(up, transverse_grid))
            second_m = min(second_m, _transverse_second(lo, transverse_grid))
        report.second_transverse_plus = second_p
        report.second_transverse_minus = second_m
        report.gap_threshold = robin_gap_bound(a, beta, gp)
        if second_p < 0 or second_m < 0:
            raise ExclusionUnverified(
                f"beta={beta}: second transverse eigenvalue negative "
                f"({second_p:.4g}, {second_m:.4g})")
    return report


def count_negative(report: BracketingReport) -> tuple[int, int]:
    """``(#{j: omega_+^j < 0}, #{j: omega_-^j < 0})``."""
    if report.omega_plus[-1] < 0 or report.omega_minus[-1] < 0:
        raise WindowTooSmall(
            f"beta={report.beta}: all {report.n_modes} computed omegas are negative")
    return int(np.sum(report.omega_plus < 0)), int(np.sum(report.omega_minus < 0))


def counting_modes(length: float, beta: float) -> int:
    """Number of longitudinal modes that safely covers the negative window."""
    return int(math.ceil(3 * length / (math.pi * beta)))


# ---------------------------------------------------------------------------
# verdicts

def monotone_bounded(ratios: Sequence[float], slack: float = RATIO_SLACK) -> bool:
    """True if the last ratio does not exceed the earlier maximum by more than ``slack``.

    ``ratios`` are ordered by decreasing beta. A quantity that is not
    ``O(model)`` makes the ratio grow, so the last entry would be the
    largest by a margin.
    """
    r = np.asarray(ratios, dtype=float)
    if not np.all(np.isfinite(r)):
        return False
    if len(r) < 2:
        return True
    return bool(r[-1] <= (1 + slack) * r[:-1].max())


def _lsq_constant(residuals, model) -> float:
    residuals, model = np.asarray(residuals), np.asarray(model)
    return float(residuals @ model / (model @ model))


@dataclass
class Theorem1Fit:
    rows: list
    fits: dict
    verdict: str
    strip_check: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"rows": self.rows, "fits": self.fits, "verdict": self.verdict,
                "strip_check": self.strip_check}


@dataclass
class Theorem2Fit:
    rows: list
    fits: dict
    verdict: str

    def to_dict(self) -> dict:
        return {"rows": self.rows, "fits": self.fits, "verdict": self.verdict}


def _check_sweep(betas: Sequence[float]) -> list[float]:
    betas = [float(b) for b in betas]
    if not betas:
        raise InvalidBeta("empty beta sweep")
    if any(b2 >= b1 for b1, b2 in zip(betas, betas[1:])):
        raise InvalidBeta(f"beta sweep must be strictly descending, got {betas}")
    return betas


def theorem1_verdict(profile: GeometryProfile, betas: Sequence[float], j_max: int,
                     n_modes: Optional[int] = None, strip: Optional[dict] = None,
                     reports: Optional[dict] = None, slack: float = RATIO_SLACK) -> Theorem1Fit:
    """Eigenvalue expansion check over a descending beta sweep.

    ``strip`` optionally maps ``beta -> {"xi_minus": [...], "xi_plus": [...],
    "tol": float}`` from the 2D solver; the check then also requires
    ``omega_-^j - tol <= xi_-^j`` and ``xi_+^j <= omega_+^j + tol``.
    """
    betas = _check_sweep(betas)
    n_modes = n_modes or max(j_max, 8)
    reports = reports if reports is not None else {}
    rows = []
    for b in betas:
        rep = reports.get(b) or assemble_bracket(profile, b, n_modes)
        reports[b] = rep
        m = b * abs(math.log(b))
        for j in range(j_max):
            lo, hi, mu = rep.renormalized_minus[j], rep.renormalized_plus[j], rep.mu[j]
            rows.append({
                "beta": b, "j": j + 1, "a": rep.a, "clamped": rep.clamped,
                "omega_minus": float(rep.omega_minus[j]), "omega_plus": float(rep.omega_plus[j]),
                "renorm_minus": float(lo), "renorm_plus": float(hi), "mu": float(mu),
                "residual_minus": float(abs(lo - mu)), "residual_plus": float(abs(hi - mu)),
                "ratio_minus": float(abs(lo - mu) / m), "ratio_plus": float(abs(hi - mu) / m),
                "contains": bool(lo <= mu <= hi),
            })

    fits, ok = {}, True
    for j in range(1, j_max + 1):
        sel = [r for r in rows if r["j"] == j]
        model = [r["beta"] * abs(math.log(r["beta"])) for r in sel]
        for side in ("minus", "plus"):
            ratios = [r[f"ratio_{side}"] for r in sel]
            bounded = monotone_bounded(ratios, slack)
            fits[f"j{j}_{side}"] = {
                "C_lsq": _lsq_constant([r[f"residual_{side}"] for r in sel], model),
                "C_max": float(max(ratios)),
                "ratios": ratios,
                "bounded": bounded,
            }
            ok &= bounded
        ok &= all(r["contains"] for r in sel)

    strip_check = None
    if strip:
        strip_check = {"pairs": [], "ok": True}
        for b, res in strip.items():
            rep = reports.get(b)
            if rep is None:
                continue
            tol = float(res.get("tol", 0.0))
            for j in range(min(j_max, len(res["xi_minus"]), len(res["xi_plus"]))):
                lo_ok = rep.omega_minus[j] - tol <= res["xi_minus"][j]
                hi_ok = res["xi_plus"][j] <= rep.omega_plus[j] + tol
                order_ok = res["xi_minus"][j] <= res["xi_plus"][j] + tol
                strip_check["pairs"].append({
                    "beta": b, "j": j + 1, "tol": tol,
                    "omega_minus": float(rep.omega_minus[j]), "xi_minus": float(res["xi_minus"][j]),
                    "xi_plus": float(res["xi_plus"][j]), "omega_plus": float(rep.omega_plus[j]),
                    "inside": bool(lo_ok and hi_ok and order_ok),
                })
        strip_check["ok"] = all(p["inside"] for p in strip_check["pairs"])
        ok &= strip_check["ok"]
    return Theorem1Fit(rows, fits, "PASS" if ok else "FAIL", strip_check)


def theorem2_verdict(profile: GeometryProfile, betas: Sequence[float],
                     slack: float = RATIO_SLACK, weyl_window: float = 0.1) -> Theorem2Fit:
    """Eigenvalue count check: ``|count - 2L/(pi beta)| = O(|ln beta|)``."""
    betas = _check_sweep(betas)
    rows = []
    for b in betas:
        n = counting_modes(profile.length, b)
        rep = assemble_bracket(profile, b, n, verify_exclusion=False)
        cp, cm = count_negative(rep)
        w = rep.weyl
        lb = abs(math.log(b))
        rows.append({
            "beta": b, "count_minus": cm, "count_plus": cp, "weyl": w,
            "dev_minus": cm - w, "dev_plus": cp - w,
            "ratio_minus": abs(cm - w) / lb, "ratio_plus": abs(cp - w) / lb,
            "weyl_ratio_minus": cm / w, "weyl_ratio_plus": cp / w,
            "nested": cp <= cm,
        })
    fits, ok = {}, all(r["nested"] for r in rows)
    for side in ("minus", "plus"):
        ratios = [r[f"ratio_{side}"] for r in rows]
        bounded = monotone_bounded(ratios, slack)
        fits[side] = {
            "C_lsq": _lsq_constant([abs(r[f"dev_{side}"]) for r in rows],
                                   [abs(math.log(r["beta"])) for r in rows]),
            "C_max": float(max(ratios)),
            "ratios": ratios,
            "bounded": bounded,
        }
        last = rows[-1][f"weyl_ratio_{side}"]
        ok &= bounded and abs(last - 1) <= weyl_window
    return Theorem2Fit(rows, fits, "PASS" if ok else "FAIL")


def report_to_json(report: BracketingReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)


def reports_to_csv(reports: Sequence[BracketingReport], path) -> None:
    fields = ["beta", "j", "omega_minus", "omega_plus", "renorm_minus", "renorm_plus", "mu"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for rep in reports:
            for row in rep.table_rows():
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

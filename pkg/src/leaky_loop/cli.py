"""Command-line entry point: ``leaky-loop <command> --config run.yaml``.

Exit codes: 0 success, 2 configuration error, 3 hypothesis violated or a
FAIL verdict, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from threadpoolctl import threadpool_limits

from . import __version__
from .bracketing import (
    assemble_bracket,
    halfwidth_schedule,
    theorem1_verdict,
    theorem2_verdict,
)
from .config import SCHEMA_VERSION, RunConfig, load_config, validate
from .errors import ConfigError, GeometryError, HypothesisError, NumericalError
from .geometry import build_profile, curve_from_config
from .longitudinal import build_operator, solve_periodic
from .strip import strip_brackets
from .transverse import (
    TransverseProblem,
    discretize_transverse,
    robin_gap_bound,
    solve_dirichlet_root,
    solve_robin_root,
)

log = logging.getLogger("leaky_loop")

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NUMERICAL = 0, 2, 3, 4
COMMANDS = ("geom", "spectrum1d", "transverse", "bracket", "strip2d", "thm1", "thm2")


class VerdictFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# output

def _plain(obj):
    """Recursively convert numpy scalars and arrays to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _cell(v):
    return repr(v) if isinstance(v, float) else v


def write_output(cfg: RunConfig, command: str, summary: dict, rows: list) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    header = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "config": cfg.to_dict(),
    }
    summary, rows = _plain(summary), _plain(rows)
    if cfg["format"] == "json":
        path = out / f"{command}.json"
        doc = dict(header, summary=summary, rows=rows)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path
    path = out / f"{command}.csv"
    fields = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        for key in ("schema_version", "version", "command"):
            fh.write(f"# {key}: {header[key]}\n")
        fh.write(f"# config: {json.dumps(header['config'], sort_keys=True)}\n")
        fh.write(f"# summary: {json.dumps(summary, sort_keys=True)}\n")
        if fields:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: _cell(v) if not isinstance(v, (list, dict)) else json.dumps(v)
                            for k, v in row.items()})
    return path


@contextlib.contextmanager
def _flush_on_failure(cfg, command, rows):
    """Write whatever rows exist before re-raising an error."""
    try:
        yield
    except Exception as exc:
        write_output(cfg, command, {"status": "failed", "error": f"{type(exc).__name__}: {exc}"},
                     rows)
        raise


# ---------------------------------------------------------------------------
# commands

def _profile(cfg: RunConfig):
    return build_profile(curve_from_config(cfg["curve"]), cfg["samples"])


def cmd_geom(cfg: RunConfig) -> dict:
    prof = _profile(cfg)
    curve = prof.curve

    def speed(t):
        dx, dy = curve.derivative(np.array([t]), 1)
        return float(np.hypot(dx, dy)[0])

    quad_length, _ = quad(speed, 0.0, 2 * np.pi, limit=200, epsabs=1e-13, epsrel=1e-13)
    turning = float(np.sum(prof.gamma) * prof.ds)
    summary = dict(prof.summary(), status="ok", checks={
        "closed": True,
        "simple": True,
        "length_vs_quadrature": abs(prof.length - quad_length),
        "total_curvature": turning,
        "turning_number_error": abs(abs(turning) - 2 * np.pi),
    })
    rows = [{"s": s, "x": x, "y": y, "gamma": g, "gamma_prime": g1, "gamma_double_prime": g2}
            for s, x, y, g, g1, g2 in zip(prof.s, prof.x, prof.y, prof.gamma,
                                         prof.gamma_prime, prof.gamma_double_prime)]
    write_output(cfg, "geom", summary, rows)
    return summary


def cmd_spectrum1d(cfg: RunConfig) -> dict:
    prof = _profile(cfg)
    a = cfg["halfwidth"]
    if a is None:
        a = 0.1 / prof.gamma_plus if prof.gamma_plus > 0 else 0.1
    n = cfg["n_modes"]
    spectra = {}
    for kind in cfg["operators"]:
        spectra[kind] = solve_periodic(build_operator(prof, kind, a), n).eigenvalues
    rows = [dict({"j": j + 1}, **{k: float(v[j]) for k, v in spectra.items()}) for j in range(n)]
    summary = {"status": "ok", "halfwidth": a, "length": prof.length,
               "gamma_plus": prof.gamma_plus}
    write_output(cfg, "spectrum1d", summary, rows)
    return summary


def cmd_transverse(cfg: RunConfig) -> dict:
    prof = _profile(cfg)
    gp = prof.gamma_plus
    tr = cfg.transverse
    rows: list = []
    with _flush_on_failure(cfg, "transverse", rows):
        for beta in cfg["betas"]:
            a = tr["halfwidth"]
            if a is None:
                a, _ = halfwidth_schedule(beta, prof.max_halfwidth)
            kp = solve_dirichlet_root(a, beta)
            km = solve_robin_root(a, beta, gp)
            up = TransverseProblem(a, beta, "dirichlet", gp, 0.0)
            lo = TransverseProblem(a, beta, "robin", gp, 0.0)
            dp = discretize_transverse(up, tr["n_grid"], tr["grading"], n_eigs=2)
            dm = discretize_transverse(lo, tr["n_grid"], tr["grading"], n_eigs=2)
            rows.append({
                "beta": beta, "a": a,
                "kappa_plus": kp.kappa, "kappa_plus_asym": kp.kappa_asymptotic,
                "kappa_minus": km.kappa, "kappa_minus_asym": km.kappa_asymptotic,
                "t_plus_discrete": dp[0], "t_minus_discrete": dm[0],
                "second_minus_discrete": dm[1],
                "gap_bound": robin_gap_bound(a, beta, gp) if beta < 2 * a else float("nan"),
            })
    summary = {"status": "ok", "gamma_plus": gp}
    write_output(cfg, "transverse", summary, rows)
    return summary


def cmd_bracket(cfg: RunConfig) -> dict:
    prof = _profile(cfg)
    rows: list = []
    per_beta = []
    with _flush_on_failure(cfg, "bracket", rows):
        for beta in cfg["betas"]:
            rep = assemble_bracket(prof, beta, cfg["n_modes"])
            rows.extend(rep.table_rows())
            d = rep.to_dict()
            per_beta.append({k: d[k] for k in (
                "beta", "a", "clamped", "asymptotic_regime", "kappa_plus", "kappa_minus",
                "second_transverse_plus", "second_transverse_minus", "gap_threshold",
                "ordering_violations", "counts")})
    summary = {"status": "ok", "reports": per_beta}
    write_output(cfg, "bracket", summary, rows)
    return summary


def _strip_runs(cfg: RunConfig, prof, rows: list) -> dict:
    st = cfg.strip
    results = {}
    for beta in cfg["betas"]:
        a, _ = halfwidth_schedule(beta, prof.max_halfwidth)
        res = strip_brackets(prof, beta, a, st["n_modes"], tuple(st["fine"]), tuple(st["coarse"]),
                             st["grading"], st["edge_sign"], st["jump_sign"])
        res["tol"] *= cfg["tolerance_scale"]
        results[beta] = res
        for j in range(st["n_modes"]):
            rows.append({"beta": beta, "a": a, "j": j + 1, "xi_minus": res["xi_minus"][j],
                         "xi_plus": res["xi_plus"][j], "tol_disc": res["tol"]})
    return results


def cmd_strip2d(cfg: RunConfig) -> dict:
    prof = _profile(cfg)
    rows: list = []
    with _flush_on_failure(cfg, "strip2d", rows):
        _strip_runs(cfg, prof, rows)
    summary = {"status": "ok", "renormalization": "xi + 4/beta^2 not applied"}
    write_output(cfg, "strip2d", summary, rows)
    return summary


def cmd_thm1(cfg: RunConfig) -> dict:
    prof = _profile(cfg)
    rows: list = []
    with _flush_on_failure(cfg, "thm1", rows):
        strip = None
        if cfg.strip["enabled"]:
            strip = _strip_runs(cfg, prof, [])
        fit = theorem1_verdict(prof, cfg["betas"], cfg["j_max"], n_modes=cfg["n_modes"],
                               strip=strip, slack=cfg["ratio_slack"] * cfg["tolerance_scale"])
        rows.extend(fit.rows)
    summary = {"status": "ok", "verdict": fit.verdict, "fits": fit.fits,
               "strip_check": fit.strip_check}
    write_output(cfg, "thm1", summary, rows)
    if fit.verdict != "PASS":
        raise VerdictFailed("thm1 verdict FAIL")
    return summary


def cmd_thm2(cfg: RunConfig) -> dict:
    prof = _profile(cfg)
    rows: list = []
    with _flush_on_failure(cfg, "thm2", rows):
        fit = theorem2_verdict(prof, cfg["count_betas"],
                               slack=cfg["ratio_slack"] * cfg["tolerance_scale"],
                               weyl_window=cfg["weyl_window"])
        rows.extend(fit.rows)
    summary = {"status": "ok", "verdict": fit.verdict, "fits": fit.fits}
    write_output(cfg, "thm2", summary, rows)
    if fit.verdict != "PASS":
        raise VerdictFailed("thm2 verdict FAIL")
    return summary


HANDLERS = {
    "geom": cmd_geom,
    "spectrum1d": cmd_spectrum1d,
    "transverse": cmd_transverse,
    "bracket": cmd_bracket,
    "strip2d": cmd_strip2d,
    "thm1": cmd_thm1,
    "thm2": cmd_thm2,
}


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leaky-loop", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="YAML or JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--threads", type=int, help="BLAS/LAPACK thread limit")
    p.add_argument("--tolerance-scale", type=float, dest="tolerance_scale",
                   help="multiplies the ratio slack and the measured discretization error")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    raw = cfg.to_dict()
    for key in ("out", "format", "threads", "tolerance_scale"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    return validate(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    limits = threadpool_limits(cfg["threads"]) if cfg["threads"] else contextlib.nullcontext()
    try:
        with limits:
            summary = HANDLERS[args.command](cfg)
    except (ConfigError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HypothesisError, VerdictFailed) as exc:
        print(f"hypothesis/verdict: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    log.info("%s finished: %s", args.command, summary.get("status"))
    print(f"{args.command}: {summary.get('verdict', summary.get('status'))}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Convergence studies: analytic test curves, h-ladders, fitted orders, and
inequality diagnostics.

A study solves the interpolation problem for a ladder of knot spacings h,
measures L^p errors against the closed-form curve on the fine grid, fits the
convergence order by least squares in log-log space, and evaluates a set of
named inequality diagnostics on every solve.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import curves as cv
from . import jacobi as jb
from . import solvers as sv
from .errors import ConfigurationError, SolverError
from .manifolds import from_id

# Diagnostics with nonconstructive theoretical constants are checked as
# "bounded across the ladder" against these empirically calibrated caps.
SECOND_DERIVATIVE_EXCESS_CAP = 10.0
APPROXIMATION_RATIO_CAP = 10.0
_DIAG_TOL = 1e-6


@dataclass
class TestCurve:
    """A closed-form curve with its analytic velocity, both vectorized over
    arrays of parameter values in [0, 1]."""

    name: str
    manifold_id: str
    point: callable
    velocity: callable


def _sphere_wobble():
    def point(t):
        t = np.asarray(t, dtype=float)
        a = 0.9 + 0.3 * np.sin(np.pi * t + 0.4)
        b = 0.5 + 1.2 * t + 0.3 * np.cos(np.pi * t)
        return np.stack([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b),
                         np.cos(a)], axis=-1)

    def velocity(t):
        t = np.asarray(t, dtype=float)
        a = 0.9 + 0.3 * np.sin(np.pi * t + 0.4)
        b = 0.5 + 1.2 * t + 0.3 * np.cos(np.pi * t)
        ap = 0.3 * np.pi * np.cos(np.pi * t + 0.4)
        bp = 1.2 - 0.3 * np.pi * np.sin(np.pi * t)
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        return np.stack([ap * ca * cb - bp * sa * sb,
                         ap * ca * sb + bp * sa * cb,
                         -ap * sa], axis=-1)

    return TestCurve("sphere-wobble", "sphere:2", point, velocity)


def _sphere_greatcircle(speed=1.5):
    def point(t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.cos(speed * t), np.sin(speed * t),
                         np.zeros_like(t)], axis=-1)

    def velocity(t):
        t = np.asarray(t, dtype=float)
        return speed * np.stack([-np.sin(speed * t), np.cos(speed * t),
                                 np.zeros_like(t)], axis=-1)

    return TestCurve("sphere-greatcircle", "sphere:2", point, velocity)


def _hyperbolic_arc():
    def _parts(t):
        t = np.asarray(t, dtype=float)
        r = 0.5 + 0.4 * np.sin(np.pi * t)
        ph = 0.3 + 1.1 * t
        rp = 0.4 * np.pi * np.cos(np.pi * t)
        return r, ph, rp

    def point(t):
        r, ph, _ = _parts(t)
        return np.stack([np.cosh(r), np.sinh(r) * np.cos(ph),
                         np.sinh(r) * np.sin(ph)], axis=-1)

    def velocity(t):
        r, ph, rp = _parts(t)
        php = 1.1
        return np.stack([
            rp * np.sinh(r),
            rp * np.cosh(r) * np.cos(ph) - php * np.sinh(r) * np.sin(ph),
            rp * np.cosh(r) * np.sin(ph) + php * np.sinh(r) * np.cos(ph),
        ], axis=-1)

    return TestCurve("hyperbolic-arc", "hyperbolic:2", point, velocity)


def _euclidean_sine():
    def point(t):
        t = np.asarray(t, dtype=float)
        return np.stack([t, np.sin(2 * np.pi * t)], axis=-1)

    def velocity(t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.ones_like(t), 2 * np.pi * np.cos(2 * np.pi * t)],
                        axis=-1)

    return TestCurve("euclidean-sine", "euclidean:2", point, velocity)


_BUILTINS = {
    "sphere-wobble": _sphere_wobble,
    "sphere-greatcircle": _sphere_greatcircle,
    "hyperbolic-arc": _hyperbolic_arc,
    "euclidean-sine": _euclidean_sine,
}


def builtin_curve(name: str) -> TestCurve:
    """Look up one of the named analytic test curves."""
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown curve {name!r}; available: {sorted(_BUILTINS)}") from None


def list_curves():
    return sorted(_BUILTINS)


# -- order fitting -----------------------------------------------------------

def fit_order(rows):
    """Least-squares slope of log error vs log h, plus per-step halving ratios
    ``log2(e(h)/e(h/2))``.  Rows with nonpositive errors are dropped."""
    usable = [(h, e) for h, e in rows if e > 0 and np.isfinite(e)]
    if len(usable) < 3:
        raise ConfigurationError("order fit needs at least 3 positive errors")
    hs = np.array([h for h, _ in usable])
    es = np.array([e for _, e in usable])
    slope = float(np.polyfit(np.log(hs), np.log(es), 1)[0])
    ratios = list(np.log2(es[:-1] / es[1:]) / np.log2(hs[:-1] / hs[1:]))
    return slope, [float(r) for r in ratios]


# -- diagnostics -------------------------------------------------------------

def _analytic_on_grid(curve: TestCurve, spline: cv.DiscreteCurve) -> cv.DiscreteCurve:
    return cv.DiscreteCurve(spline.manifold_id, spline.times,
                            curve.point(spline.times), spline.knot_indices)


def diagnostics(curve: TestCurve, spline: cv.DiscreteCurve,
                prob: sv.InterpolationProblem, method: str):
    """Named inequality checks for one converged solve.  Each entry maps to
    ``(lhs, rhs, passed)``; entries with nonconstructive constants report the
    measured quantity against an empirical cap."""
    m = spline.manifold
    h = 1.0 / prob.n_intervals
    exact = _analytic_on_grid(curve, spline)
    vel_h = cv.velocity(spline)
    out = {}

    # (a) velocity bound: sup |spline velocity| vs |v(0)| + 2 ||D^2 curve||_L2
    d2_l2 = float(np.sqrt(max(cv.cubic_energy(exact), 0.0)))
    v0n = float(m.norm(exact.points[0], curve.velocity(0.0)))
    lhs = vel_h.max_norm()
    rhs = v0n + 2.0 * d2_l2
    out["velocity_bound"] = (lhs, rhs, lhs <= rhs + _DIAG_TOL)

    # (b) closeness to the nearest knot at the spline's own speed
    knot_t = spline.times[spline.knot_indices]
    nearest = np.argmin(np.abs(spline.times[:, None] - knot_t[None, :]), axis=1)
    gap = m.dist(spline.points, spline.points[spline.knot_indices][nearest])
    budget = np.abs(spline.times - knot_t[nearest]) * vel_h.max_norm()
    margin = np.max(gap - budget)
    out["knot_closeness"] = (float(np.max(gap)),
                             float(np.max(budget)),
                             bool(margin <= _DIAG_TOL))

    # (c) minimality: spline energy does not exceed the analytic curve's
    energy = cv.cubic_energy if method == "cubic" else cv.path_energy
    lhs, rhs = energy(spline), energy(exact)
    out["energy_minimality"] = (lhs, rhs, lhs <= rhs + _DIAG_TOL * (1.0 + rhs))

    # (d) second-derivative excess over 3 ||D^2 curve||_inf, scaled by h^{3/2}
    a_h = cv.accel(spline).max_norm()
    a_c = cv.accel(exact).max_norm()
    excess = (a_h - 3.0 * a_c) / h ** 1.5
    out["second_derivative_excess"] = (excess, SECOND_DERIVATIVE_EXCESS_CAP,
                                       excess <= SECOND_DERIVATIVE_EXCESS_CAP)

    # (e) approximation-lemma ratio for the gap field log_{spline} curve
    gap_field = cv.VectorFieldAlongCurve(
        spline, m.log(spline.points, exact.points))
    num = gap_field.max_norm()
    if num <= 1e-10:
        out["approximation_ratio"] = (0.0, APPROXIMATION_RATIO_CAP, True)
    else:
        d2gap = cv.covariant_derivative(
            spline, cv.covariant_derivative(spline, gap_field))
        ratio = num / (h ** 2 * d2gap.max_norm())
        out["approximation_ratio"] = (ratio, APPROXIMATION_RATIO_CAP,
                                      ratio <= APPROXIMATION_RATIO_CAP)

    # (f) stability of vector-field interpolation applied to D^2 of the curve
    acc = cv.accel(exact).vectors[spline.knot_indices]
    interp = jb.jacobi_interpolate(spline, jb.KnotValues(spline, acc))
    lhs = interp.max_norm()
    rhs = 2.0 * float(m.norm(spline.points[spline.knot_indices], acc).max())
    out["interpolation_stability"] = (lhs, rhs, lhs <= rhs + _DIAG_TOL)
    return out


# -- studies -----------------------------------------------------------------

@dataclass
class StudyRow:
    h: float
    errors: dict
    stats: sv.SolveStats
    diagnostics: dict
    failed: bool = False


@dataclass
class ConvergenceReport:
    method: str
    curve: str
    manifold_id: str
    p_list: tuple
    rows: list = field(default_factory=list)
    fitted_orders: dict = field(default_factory=dict)
    status: str = "ok"

    def diagnostics_pass(self) -> bool:
        return all(passed
                   for row in self.rows if not row.failed
                   for (_, _, passed) in row.diagnostics.values())


def run_study(curve: TestCurve, method: str, h_list, p_list,
              solver_opts: sv.SolverOptions = None,
              substeps: int = None) -> ConvergenceReport:
    """Solve the interpolation problem across the h-ladder and assemble the
    convergence report with fitted orders and per-solve diagnostics."""
    if method not in ("linear", "cubic"):
        raise ConfigurationError(f"unknown method {method!r}")
    p_list = tuple(p_list)
    report = ConvergenceReport(method, curve.name, curve.manifold_id, p_list)
    for h in h_list:
        N = round(1.0 / h)
        if abs(N * h - 1.0) > 1e-12 or N < 1:
            raise ConfigurationError(f"h must be a reciprocal integer, got {h}")
        tk = np.arange(N + 1) / N
        vk = curve.velocity(tk)
        prob = sv.InterpolationProblem(
            curve.manifold_id, curve.point(tk),
            v_start=vk[0], v_end=vk[-1], fine_substeps=substeps)
        try:
            if method == "linear":
                spline = sv.linear_spline(prob)
                stats = sv.SolveStats(0, 0.0, cv.path_energy(spline),
                                      float("nan"), True)
            else:
                spline, stats = sv.cubic_spline(prob, solver_opts)
        except SolverError as err:
            report.rows.append(StudyRow(h, {p: float("nan") for p in p_list},
                                        err.stats, {}, failed=True))
            report.status = "degraded"
            continue
        exact = _analytic_on_grid(curve, spline)
        errors = {p: cv.lp_error(spline, exact, p) for p in p_list}
        diags = diagnostics(curve, spline, prob, method)
        report.rows.append(StudyRow(h, errors, stats, diags))
    for p in p_list:
        rows = [(row.h, row.errors[p]) for row in report.rows if not row.failed]
        try:
            report.fitted_orders[p] = fit_order(rows)
        except ConfigurationError:
            report.fitted_orders[p] = (float("nan"), [])
    return report


# -- serialization -----------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def report_to_csv_rows(report: ConvergenceReport):
    """Flatten a report into (header, rows) for CSV output; one row per
    (h, p) pair, with diagnostics repeated per h."""
    diag_names = []
    for row in report.rows:
        for name in row.diagnostics:
            if name not in diag_names:
                diag_names.append(name)
    header = ["method", "manifold", "curve", "h", "p", "error", "fitted_order"]
    for name in diag_names:
        header += [f"diag_{name}_lhs", f"diag_{name}_rhs", f"diag_{name}_pass"]
    out = []
    for row in report.rows:
        for p in report.p_list:
            rec = [report.method, report.manifold_id, report.curve,
                   _fmt(row.h), "inf" if np.isinf(p) else _fmt(p),
                   _fmt(row.errors[p]), _fmt(report.fitted_orders[p][0])]
            for name in diag_names:
                if name in row.diagnostics:
                    lhs, rhs, ok = row.diagnostics[name]
                    rec += [_fmt(lhs), _fmt(rhs), str(bool(ok))]
                else:
                    rec += ["", "", ""]
            out.append(rec)
    return header, out


def write_reports_csv(reports, path):
    """Write one or more study reports to a single deterministic CSV file."""
    header = None
    all_rows = []
    for report in reports:
        hdr, rows = report_to_csv_rows(report)
        if header is None or len(hdr) > len(header):
            header = hdr
        all_rows.extend(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rec in all_rows:
            w.writerow(rec + [""] * (len(header) - len(rec)))


def summarize(reports, order_windows=None):
    """Pass/fail summary across studies: fitted orders inside their expected
    windows and all diagnostics passing."""
    order_windows = order_windows or {"linear": (1.8, 2.2), "cubic": (3.6, 4.4)}
    checks = []
    for report in reports:
        lo, hi = order_windows[report.method]
        for p in report.p_list:
            slope = report.fitted_orders[p][0]
            checks.append({
                "name": f"{report.curve}:{report.method}:order:p="
                        f"{'inf' if np.isinf(p) else p}",
                "value": slope,
                "window": [lo, hi],
                "pass": bool(np.isfinite(slope) and lo <= slope <= hi),
            })
        checks.append({
            "name": f"{report.curve}:{report.method}:diagnostics",
            "value": report.status,
            "pass": bool(report.diagnostics_pass() and report.status == "ok"),
        })
    return {"checks": checks, "all_pass": all(c["pass"] for c in checks)}


def write_summary_json(summary, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

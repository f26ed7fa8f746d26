"""Command-line entry point: run configured convergence studies and write
reports (CSV + JSON summary + log-log convergence figures).

The config is a JSON file; every field has an embedded default, so an empty
file runs the default study.  Exit status: 0 if all checks pass, 1 if a check
fails, 2 on configuration or solver errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import harness as hz
from . import solvers as sv
from .errors import GeosplineError, ConfigurationError

_DEFAULT_H = [0.25, 0.125, 0.0625, 0.03125]
_DEFAULT_STUDIES = [
    {"curve": "sphere-wobble", "method": "cubic", "h": _DEFAULT_H,
     "p": [2, "inf"]},
    {"curve": "sphere-wobble", "method": "linear", "h": _DEFAULT_H,
     "p": [2, "inf"]},
]


@dataclass
class ExperimentConfig:
    """Parsed experiment configuration with all defaults filled in."""

    studies: list = field(default_factory=lambda: list(_DEFAULT_STUDIES))
    out: str = "results"
    seed: int = 0
    grad_tol: float = None
    max_iters: int = 10000
    substeps: int = None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        if not text.strip():
            raw = {}
        else:
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(
                    f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{path}: top level must be a JSON object")
        known = {"studies", "out", "seed", "solver"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(
                f"{path}: unknown config keys {sorted(unknown)}")
        cfg = cls()
        cfg.studies = raw.get("studies", cfg.studies)
        cfg.out = raw.get("out", cfg.out)
        cfg.seed = int(raw.get("seed", cfg.seed))
        solver = raw.get("solver", {})
        if not isinstance(solver, dict):
            raise ConfigurationError(f"{path}: 'solver' must be an object")
        cfg.grad_tol = solver.get("grad_tol", cfg.grad_tol)
        cfg.max_iters = int(solver.get("max_iters", cfg.max_iters))
        cfg.substeps = solver.get("substeps", cfg.substeps)
        return cfg

    def solver_options(self) -> sv.SolverOptions:
        return sv.SolverOptions(grad_tol=self.grad_tol, max_iters=self.max_iters)


def _parse_p(values):
    out = []
    for p in values:
        out.append(np.inf if p in ("inf", "Inf", "infinity") else float(p))
    return out


def _study_entries(cfg: ExperimentConfig):
    for entry in cfg.studies:
        if not isinstance(entry, dict) or "curve" not in entry:
            raise ConfigurationError("each study needs at least a 'curve' name")
        methods = entry.get("methods")
        if methods is None:
            methods = [entry.get("method", "cubic")]
        for method in methods:
            yield (entry["curve"], method,
                   [float(h) for h in entry.get("h", _DEFAULT_H)],
                   _parse_p(entry.get("p", [2, "inf"])))


def _render_figure(report: hz.ConvergenceReport, path):
    """Log-log convergence plot with a reference slope for the method."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    hs = np.array([row.h for row in report.rows if not row.failed])
    ref_order = 2 if report.method == "linear" else 4
    for p in report.p_list:
        es = np.array([row.errors[p] for row in report.rows if not row.failed])
        label = "L^inf" if np.isinf(p) else f"L^{p:g}"
        ax.loglog(hs, es, "o-", label=f"{label} error")
    if hs.size and np.all([row.errors[report.p_list[0]] > 0
                           for row in report.rows if not row.failed]):
        e0 = max(row.errors[p] for row in report.rows if not row.failed
                 for p in report.p_list)
        ax.loglog(hs, e0 * (hs / hs[0]) ** ref_order, "k--",
                  label=f"h^{ref_order} reference")
    ax.set_xlabel("knot spacing h")
    ax.set_ylabel("interpolation error")
    ax.set_title(f"{report.curve} ({report.method})")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def run(config_path: str, out_override: str = None) -> int:
    cfg = ExperimentConfig.from_file(config_path)
    out_dir = Path(out_override or cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    opts = cfg.solver_options()
    reports = []
    for curve_name, method, h_list, p_list in _study_entries(cfg):
        curve = hz.builtin_curve(curve_name)
        report = hz.run_study(curve, method, h_list, p_list,
                              solver_opts=opts, substeps=cfg.substeps)
        reports.append(report)
    hz.write_reports_csv(reports, out_dir / "report.csv")
    summary = hz.summarize(reports)
    hz.write_summary_json(summary, out_dir / "summary.json")
    for report in reports:
        _render_figure(report, out_dir / f"convergence_{report.curve}_{report.method}.png")
    return 0 if summary["all_pass"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="geospline",
        description="Convergence studies for spline interpolation of "
                    "manifold-valued curves.")
    parser.add_argument("--version", action="version",
                        version=f"geospline {__version__}")
    parser.add_argument("--list-curves", action="store_true",
                        help="print the builtin test curve names and exit")
    parser.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (overrides the config)")
    sub = parser.add_subparsers(dest="command")
    run_p = sub.add_parser("run", help="run the studies described by a config file")
    run_p.add_argument("config", help="path to a JSON experiment config")
    run_p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides the config)")
    args = parser.parse_args(argv)
    if args.list_curves:
        for name in hz.list_curves():
            print(name)
        return 0
    if args.command != "run":
        parser.print_help()
        return 2
    try:
        return run(args.config, args.out)
    except (GeosplineError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

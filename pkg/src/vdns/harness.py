"""Convergence and energy experiments on the manufactured cases.

Three drivers run the three reference studies:

* :func:`run_converge_space` -- ``ex41``, ``tau = h``, errors at ``T = 0.5``;
* :func:`run_converge_time` -- ``ex42`` on a fixed mesh, halving ``tau``;
* :func:`run_energy_study` -- unforced evolution of the discrete energy.

All reference numbers used for acceptance live in :data:`REFERENCE_ERRORS`.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .fem import l2_error, write_vtk_fields
from .fem.space import AnalyticEvaluator
from .mms import AnalyticCase, get_case
from .scheme import Discretization, SchemeConfig, run_simulation

log = logging.getLogger(__name__)

# Reference error tables: parameter -> (rho error, u error)
REFERENCE_ERRORS = {
    "converge-space": {1 / 8: (8.10e-3, 2.49e-5), 1 / 16: (1.98e-3, 5.72e-6),
                       1 / 32: (4.85e-4, 1.40e-6), 1 / 64: (1.20e-4, 3.49e-7)},
    "converge-time": {0.1: (4.72e-3, 7.48e-6), 0.05: (1.09e-3, 1.95e-6),
                      0.025: (2.62e-4, 5.01e-7), 0.0125: (6.40e-5, 1.27e-7),
                      0.00625: (1.58e-5, 3.21e-8)},
}
REFERENCE_TIME_MESH = 256

ORDER_RANGE = (1.7, 2.3)
MAGNITUDE_FACTOR = 3.0
FLOOR_ORDER = 1.5
FLOOR_FACTOR = 3.0

KINDS = ("converge-space", "converge-time", "energy")


@dataclass
class ExperimentSpec:
    """What to run.

    ``mesh_schedule`` lists mesh parameters ``n`` (``h = 1/n``) and
    ``tau_schedule`` time steps. The spatial study uses ``tau = h`` for each
    mesh; the temporal study uses ``mesh_schedule[0]`` for every ``tau``; the
    energy study uses the first entry of each.
    """

    kind: str
    case: str = "ex41"
    mu: float = 1.0
    mesh_schedule: Sequence[int] = (8, 16, 32)
    tau_schedule: Sequence[float] = ()
    T: Optional[float] = None
    out_dir: Optional[str] = None
    quadrature_degree: int = 6
    slow: bool = False
    vtk_every: int = 0
    initial_time: float = 0.0
    detect_floor: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment {self.kind!r}; expected one of {KINDS}")
        self.mesh_schedule = tuple(int(n) for n in self.mesh_schedule)
        self.tau_schedule = tuple(float(t) for t in self.tau_schedule)
        if self.kind == "converge-space" and not self.mesh_schedule:
            raise ValueError("mesh schedule is empty")
        if self.kind == "converge-time" and not self.tau_schedule:
            raise ValueError("time-step schedule is empty")
        if any(b <= a for a, b in zip(self.mesh_schedule, self.mesh_schedule[1:])):
            raise ValueError("mesh schedule must refine monotonically (h decreasing)")
        if any(b >= a for a, b in zip(self.tau_schedule, self.tau_schedule[1:])):
            raise ValueError("time-step schedule must be decreasing")

    @property
    def final_time(self) -> float:
        if self.T is not None:
            return self.T
        return get_case(self.case, self.mu).final_time


def space_spec(**kw) -> ExperimentSpec:
    """Defaults of the spatial study (``h = 1/8, 1/16, 1/32``; 1/64 with ``slow``)."""
    kw.setdefault("mesh_schedule", (8, 16, 32, 64) if kw.get("slow") else (8, 16, 32))
    return ExperimentSpec("converge-space", case=kw.pop("case", "ex41"), **kw)


def time_spec(**kw) -> ExperimentSpec:
    """Defaults of the temporal study (``h = 1/64``; the reference ``1/256`` with ``slow``)."""
    slow = kw.get("slow", False)
    kw.setdefault("mesh_schedule", (REFERENCE_TIME_MESH,) if slow else (64,))
    kw.setdefault("tau_schedule", (0.1, 0.05, 0.025, 0.0125))
    return ExperimentSpec("converge-time", case=kw.pop("case", "ex42"), **kw)


def energy_spec(**kw) -> ExperimentSpec:
    """Defaults of the energy study (``h = 1/16``, ``tau = 0.1``, ``T = 10``)."""
    kw.setdefault("mesh_schedule", (16,))
    kw.setdefault("tau_schedule", (0.1,))
    kw.setdefault("T", 10.0)
    return ExperimentSpec("energy", case=kw.pop("case", "ex41"), **kw)


# --- results ----------------------------------------------------------------------

@dataclass
class ConvergenceRow:
    param: float  # h or tau
    err_rho: float = math.nan
    err_u: float = math.nan
    order_rho: Optional[float] = None
    order_u: Optional[float] = None
    err_sigma: float = math.nan
    past_floor: bool = False
    error: Optional[str] = None


@dataclass
class EnergySeries:
    n: list = field(default_factory=list)
    t: list = field(default_factory=list)
    E: list = field(default_factory=list)
    first_violation: Optional[int] = None
    tolerance: float = 0.0

    @property
    def ok(self) -> bool:
        return self.first_violation is None


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list = field(default_factory=list)
    energy: Optional[EnergySeries] = None
    checks: dict = field(default_factory=dict)
    floor_baseline: Optional[float] = None
    step_reports: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def eoc(errors: Sequence[float]) -> list:
    """``log2(e_coarse / e_fine)`` for consecutive halvings; None for the first row."""
    out = [None]
    for coarse, fine in zip(errors, errors[1:]):
        if coarse > 0 and fine > 0 and np.isfinite(coarse) and np.isfinite(fine):
            out.append(math.log2(coarse / fine))
        else:
            out.append(None)
    return out


def final_errors(state, case: AnalyticCase, rule) -> tuple:
    """``(||rho - sigma_h^2||, ||u - u_h||, ||sigma - sigma_h||)`` at the state's time."""
    from .fem import quad_points

    t = state.time
    qp = quad_points(state.sigma_curr.space.mesh, rule)
    rho_h = qp.eval(state.sigma_curr) ** 2
    err_rho = math.sqrt(qp.integrate((rho_h - qp.eval(case.rho, t)) ** 2))
    err_u = l2_error(state.u_curr, case.u, t, rule)
    err_sigma = l2_error(state.sigma_curr, case.sigma, t, rule)
    return err_rho, err_u, err_sigma


def _vtk_observer(spec, disc, tag):
    if not spec.vtk_every or not spec.out_dir:
        return None
    folder = Path(spec.out_dir) / "vtk"
    folder.mkdir(parents=True, exist_ok=True)

    def observer(report, state):
        if report.step_index % spec.vtk_every == 0:
            write_vtk_fields(folder / f"{tag}_{report.step_index:05d}.vtk",
                             {"sigma": state.sigma_curr, "u": state.u_curr, "p": state.p_curr})

    return observer


def _run_row(spec, case, n, tau, disc, result, tag):
    row = ConvergenceRow(param=1.0 / n if spec.kind == "converge-space" else tau)
    try:
        cfg = SchemeConfig(tau=tau, T=spec.final_time, mu=spec.mu, mesh_n=n,
                           quadrature_degree=spec.quadrature_degree)
        state, reports = run_simulation(case, cfg, _vtk_observer(spec, disc, tag), disc=disc)
        row.err_rho, row.err_u, row.err_sigma = final_errors(state, case, disc.rule)
        result.step_reports[tag] = reports
    except Exception as exc:  # recorded per row; the schedule continues
        log.error("%s failed: %s", tag, exc)
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _fill_orders(rows):
    for key in ("rho", "u"):
        orders = eoc([getattr(r, f"err_{key}") for r in rows])
        for r, o in zip(rows, orders):
            setattr(r, f"order_{key}", o)


def _in_range(x, lo_hi=ORDER_RANGE):
    return x is not None and lo_hi[0] <= x <= lo_hi[1]


def _within_factor(value, reference, factor=MAGNITUDE_FACTOR):
    return np.isfinite(value) and reference / factor <= value <= reference * factor


def run_converge_space(spec: ExperimentSpec) -> ExperimentResult:
    """Errors at the final time for ``tau = h`` on each mesh of the schedule."""
    case = get_case(spec.case, spec.mu)
    result = ExperimentResult(spec)
    for n in spec.mesh_schedule:
        disc = Discretization(n, spec.quadrature_degree)
        log.info("converge-space: h = 1/%d", n)
        result.rows.append(_run_row(spec, case, n, 1.0 / n, disc, result, f"space_h{n}"))
    _fill_orders(result.rows)

    for i, row in enumerate(result.rows):
        label = f"h=1/{spec.mesh_schedule[i]}"
        result.checks[f"{label} run completed"] = row.error is None
        if i > 0:
            result.checks[f"{label} order_rho in {ORDER_RANGE}"] = _in_range(row.order_rho)
            result.checks[f"{label} order_u in {ORDER_RANGE}"] = _in_range(row.order_u)
        ref = _reference(spec, row.param)
        if ref is not None:
            result.checks[f"{label} err_rho within x3 of {ref[0]:.2e}"] = _within_factor(row.err_rho, ref[0])
            result.checks[f"{label} err_u within x3 of {ref[1]:.2e}"] = _within_factor(row.err_u, ref[1])
    return result


def _reference(spec, param):
    if spec.case != {"converge-space": "ex41", "converge-time": "ex42"}[spec.kind]:
        return None
    if spec.mu != 1.0 or spec.quadrature_degree < 6:
        return None
    if spec.kind == "converge-time" and spec.mesh_schedule[0] != REFERENCE_TIME_MESH:
        return None
    if spec.kind == "converge-space" and spec.final_time != 0.5:
        return None
    for key, val in REFERENCE_ERRORS[spec.kind].items():
        if abs(key - param) <= 1e-12:
            return val
    return None


def flag_floor(rows, baseline: Optional[float]) -> None:
    """Mark rows whose u-order dropped below 1.5 with the error near ``baseline``."""
    for row in rows[1:]:
        row.past_floor = bool(row.order_u is not None and row.order_u < FLOOR_ORDER
                              and baseline is not None and baseline > 0
                              and row.err_u <= FLOOR_FACTOR * baseline)


def run_converge_time(spec: ExperimentSpec) -> ExperimentResult:
    """Halve ``tau`` on a fixed mesh; halvings that hit the spatial floor are flagged.

    The spatial error at the fixed mesh is estimated by repeating the finest
    time step on the mesh twice as coarse: for an ``O(h^3)`` velocity error,
    ``(e_coarse - e_fine) / 7`` approximates the fine-mesh spatial part. A
    halving counts as past the floor when its order is below 1.5 and its
    error is within a factor 3 of that baseline.
    """
    case = get_case(spec.case, spec.mu)
    n = spec.mesh_schedule[0]
    result = ExperimentResult(spec)
    disc = Discretization(n, spec.quadrature_degree)
    for tau in spec.tau_schedule:
        log.info("converge-time: h = 1/%d, tau = %g", n, tau)
        result.rows.append(_run_row(spec, case, n, tau, disc, result, f"time_tau{tau:g}"))
    _fill_orders(result.rows)

    needs_floor = any(r.order_u is not None and r.order_u < FLOOR_ORDER for r in result.rows)
    if spec.detect_floor and needs_floor and n % 2 == 0 and result.rows[-1].error is None:
        coarse = Discretization(n // 2, spec.quadrature_degree)
        cfg = SchemeConfig(tau=spec.tau_schedule[-1], T=spec.final_time, mu=spec.mu,
                           mesh_n=n // 2, quadrature_degree=spec.quadrature_degree)
        state, _ = run_simulation(case, cfg, disc=coarse)
        e_coarse = final_errors(state, case, coarse.rule)[1]
        result.floor_baseline = max((e_coarse - result.rows[-1].err_u) / 7.0, 0.0)
        log.info("spatial floor estimate at h = 1/%d: %.3e", n, result.floor_baseline)

    flag_floor(result.rows, result.floor_baseline)
    for i, row in enumerate(result.rows):
        label = f"tau={row.param:g}"
        result.checks[f"{label} run completed"] = row.error is None
        if i > 0:
            if not row.past_floor:
                result.checks[f"{label} order_u in {ORDER_RANGE}"] = _in_range(row.order_u)
        ref = _reference(spec, row.param)
        if ref is not None and i == 0:
            result.checks[f"{label} err_u within x3 of {ref[1]:.2e}"] = _within_factor(row.err_u, ref[1])
    return result


def run_energy_study(spec: ExperimentSpec, case: Optional[AnalyticCase] = None) -> ExperimentResult:
    """Unforced run with homogeneous velocity data; checks ``E^{n+1} <= E^n``.

    The series starts at level 0, where the missing earlier level is taken
    equal to level 0, followed by the backward-Euler start and the BDF2
    steps, so it has ``N + 1`` entries.
    """
    from .scheme import discrete_energy, initial_state

    case = case or get_case(spec.case, spec.mu)
    n = spec.mesh_schedule[0]
    tau = spec.tau_schedule[0]
    disc = Discretization(n, spec.quadrature_degree)
    cfg = SchemeConfig(tau=tau, T=spec.final_time, mu=spec.mu, mesh_n=n,
                       quadrature_degree=spec.quadrature_degree, forcing_enabled=False,
                       dirichlet="zero")
    t0 = spec.initial_time
    state0 = initial_state(case, cfg, disc, t0)
    series = EnergySeries(n=[0], t=[t0], E=[discrete_energy(state0, disc.rule)])
    result = ExperimentResult(spec, energy=series)
    _, reports = run_simulation(case, cfg, _vtk_observer(spec, disc, "energy"), disc=disc, t0=t0)
    result.step_reports["energy"] = reports
    for r in reports:
        series.n.append(r.step_index)
        series.t.append(r.time)
        series.E.append(r.energy)
    e1 = series.E[1] if len(series.E) > 1 else series.E[0]
    series.tolerance = 1e-12 * e1
    for k in range(1, len(series.E)):
        if series.E[k] > series.E[k - 1] + series.tolerance:
            series.first_violation = series.n[k]
            log.error("energy increased at step %d: %.17g -> %.17g",
                      series.n[k], series.E[k - 1], series.E[k])
            break
    result.checks["energy non-increasing at every step"] = series.ok
    result.checks["series length N + 1"] = len(series.E) == cfg.n_steps + 1
    return result


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    runner = {"converge-space": run_converge_space, "converge-time": run_converge_time,
              "energy": run_energy_study}[spec.kind]
    result = runner(spec)
    if spec.out_dir:
        write_outputs(result, spec)
    return result


# --- output -----------------------------------------------------------------------

def _fmt6(x):
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return f"{x:.6g}"


def _fmt17(x):
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def write_outputs(result: ExperimentResult, spec: ExperimentSpec) -> list:
    """CSV tables/series plus a JSON run manifest in ``spec.out_dir``."""
    out = Path(spec.out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if spec.kind == "energy":
            path = out / "energy.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["n", "t", "E"])
                for n, t, e in zip(result.energy.n, result.energy.t, result.energy.E):
                    w.writerow([n, _fmt17(float(t)), _fmt17(float(e))])
        else:
            name = "converge_space.csv" if spec.kind == "converge-space" else "converge_time.csv"
            first = "h" if spec.kind == "converge-space" else "tau"
            path = out / name
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow([first, "err_rho", "order_rho", "err_u", "order_u"])
                for r in result.rows:
                    w.writerow([_fmt6(r.param), _fmt6(r.err_rho), _fmt6(r.order_rho),
                                _fmt6(r.err_u), _fmt6(r.order_u)])
        written.append(path)

        steps_dir = out / "steps"
        steps_dir.mkdir(exist_ok=True)
        from .scheme import StepReport
        for tag, reports in result.step_reports.items():
            path = steps_dir / f"{tag}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(StepReport.CSV_COLUMNS)
                for rep in reports:
                    w.writerow([_fmt17(v) for v in rep.csv_row()])
            written.append(path)

        manifest = {
            "software": {"vdns": __version__, "numpy": np.__version__,
                         "scipy": __import__("scipy").__version__},
            "spec": asdict(spec),
            "rows": [asdict(r) for r in result.rows],
            "floor_baseline": result.floor_baseline,
            "checks": result.checks,
            "passed": result.passed,
        }
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
        written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out}: {exc}") from exc
    return written


def parse_step(text) -> float:
    """Parse ``"1/8"``, ``"0.125"`` or a number."""
    return float(Fraction(str(text)))

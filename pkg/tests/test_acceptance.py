"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible in ``pytest -v``
output and when the module is run as a script). The full-scale temporal
run is opt-in: set ``VDNS_SLOW=1``.
"""
import os
import sys
import time

import numpy as np
import pytest

from vdns.checks import (constant_state, mms_checks, oracle_comparison, random_energy_suite,
                         skew_symmetry, step_report_checks)
from vdns.fem import (AnalyticEvaluator, assemble_vector, build_space, interpolate_lagrange,
                      l2_error, mass_matrix, project_l2, source_kernel, triangle_quadrature)
from vdns.harness import (ORDER_RANGE, energy_spec, eoc, run_converge_space, run_converge_time,
                          run_energy_study, space_spec, time_spec)
from vdns.mesh import build_unit_square_mesh
from vdns.mms import case_ex41
from vdns.scheme import SchemeConfig, run_simulation

SLOW = os.environ.get("VDNS_SLOW") == "1"


def report(capsys, number, title, passed, detail):
    line = f"[criterion {number}] {'PASS' if passed else 'FAIL'} {title}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    assert passed, line


def _rows(rows):
    return "; ".join(f"{r.param:g}: rho {r.err_rho:.3e} ({'' if r.order_rho is None else f'{r.order_rho:.2f}'})"
                     f" u {r.err_u:.3e} ({'' if r.order_u is None else f'{r.order_u:.2f}'})"
                     for r in rows)


def test_criterion_1_spatial_convergence(capsys):
    start = time.perf_counter()
    result = run_converge_space(space_spec())
    elapsed = time.perf_counter() - start
    failed = [k for k, ok in result.checks.items() if not ok]
    ok = not failed and elapsed < 300
    report(capsys, 1, "spatial convergence, ex41, tau = h", ok,
           f"{_rows(result.rows)}; {len(result.checks)} checks, failed {failed}; {elapsed:.0f} s")


def test_criterion_2_temporal_convergence(capsys):
    start = time.perf_counter()
    result = run_converge_time(time_spec())
    elapsed = time.perf_counter() - start
    checked = [r for r in result.rows[1:] if not r.past_floor]
    in_range = all(ORDER_RANGE[0] <= r.order_u <= ORDER_RANGE[1] for r in checked)
    ok = result.passed and in_range and len(checked) >= 1
    flagged = [f"{r.param:g}" for r in result.rows if r.past_floor]
    report(capsys, 2, "temporal convergence, ex42, h = 1/64", ok,
           f"{_rows(result.rows)}; floor estimate {result.floor_baseline}; "
           f"past floor: {flagged}; {elapsed:.0f} s")


@pytest.mark.slow
@pytest.mark.skipif(not SLOW, reason="full-scale run (h = 1/256); set VDNS_SLOW=1")
def test_criterion_2_full_scale(capsys):
    spec = time_spec(slow=True, tau_schedule=(0.1,))
    result = run_converge_time(spec)
    ok = result.passed
    report(capsys, "2 (slow)", "temporal study first row at h = 1/256", ok, _rows(result.rows))


def test_criterion_3_energy_dissipation(capsys):
    start = time.perf_counter()
    study = run_energy_study(energy_spec())
    series = study.energy
    steps = len(series.E) - 1
    suite = random_energy_suite(count=20)
    # the ex41 initial data starts at rest; a later start shows actual decay
    moving = run_energy_study(energy_spec(initial_time=1.0, T=2.0))
    elapsed = time.perf_counter() - start
    ok = (study.passed and steps == 100 and suite.passed and moving.passed and elapsed < 120)
    report(capsys, 3, "energy dissipation", ok,
           f"ex41 data: {steps} steps, first violation {series.first_violation}, "
           f"E from {series.E[0]:.10g} to {series.E[-1]:.10g}; "
           f"from t0 = 1: E {moving.energy.E[0]:.6g} -> {moving.energy.E[-1]:.6g}, "
           f"violation {moving.energy.first_violation}; {suite.detail}; {elapsed:.0f} s")


def test_criterion_4_brute_force_oracle(capsys):
    start = time.perf_counter()
    r = oracle_comparison(n_states=5, mesh_n=2)
    report(capsys, 4, "loop-assembly oracle", r.passed,
           f"max relative mismatch {r.value:.2e} (tol {r.tolerance:.0e}); "
           f"{time.perf_counter() - start:.1f} s")


def test_criterion_5_structural_invariants(capsys):
    results = [skew_symmetry()]
    results += constant_state(steps=50)
    case = case_ex41()
    _, reports = run_simulation(case, SchemeConfig(tau=0.0625, T=0.5, mesh_n=16))
    results += step_report_checks(reports, "ex41 run, h = 1/16")
    _, reports = run_simulation(case, SchemeConfig(tau=0.1, T=1.0, mesh_n=8,
                                                   forcing_enabled=False, dirichlet="zero"),
                                t0=1.0)
    results += step_report_checks(reports, "unforced run")
    ok = all(r.passed for r in results)
    report(capsys, 5, "structural invariants", ok, "; ".join(r.line() for r in results))


def test_criterion_6_operator_oracles(capsys):
    bump = AnalyticEvaluator(lambda x, y, t: np.sin(np.pi * x) * np.sin(np.pi * y))
    rule = triangle_quadrature(6)
    lines, ok = [], True
    for kind, l in (("P1", 1), ("P2", 2)):
        e_int, e_proj, ortho = [], [], 0.0
        for n in (8, 16, 32):
            space = build_space(build_unit_square_mesh(n), kind)
            proj = project_l2(bump, space, rule=rule)
            b = assemble_vector(space, source_kernel(space, bump), rule)
            defect = mass_matrix(space, rule) @ proj.coefficients - b
            ortho = max(ortho, np.max(np.abs(defect)) / np.max(np.abs(b)))
            e_int.append(l2_error(interpolate_lagrange(bump, space), bump, rule=rule))
            e_proj.append(l2_error(proj, bump, rule=rule))
        orders = eoc(e_int)[1:] + eoc(e_proj)[1:]
        ok &= ortho <= 1e-10 and all(l + 0.8 <= o <= l + 1.2 for o in orders)
        lines.append(f"{kind}: orthogonality {ortho:.1e}, interpolation orders "
                     f"{[round(o, 2) for o in orders[:2]]}, projection orders "
                     f"{[round(o, 2) for o in orders[2:]]}")
    report(capsys, 6, "interpolation and projection", ok, "; ".join(lines))


def test_criterion_7_mms_self_consistency(capsys):
    results = mms_checks()
    ok = all(r.passed for r in results)
    report(capsys, 7, "manufactured solutions", ok, "; ".join(r.line() for r in results))


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion")]
    failures = 0
    for test in tests:
        if test is test_criterion_2_full_scale and not SLOW:
            print("[criterion 2 (slow)] SKIP full-scale run; set VDNS_SLOW=1")
            continue
        try:
            test(None)
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)

"""
Second order in space
=====================

Refine the mesh and the time step together (``tau = h``) on the first test
problem and watch both errors drop by about four per halving. Takes a few
seconds.
"""
# %%
from vdns.harness import REFERENCE_ERRORS, run_experiment, space_spec

result = run_experiment(space_spec(out_dir="out_space"))
print(f"{'h':>8} {'rho error':>10} {'order':>6} {'u error':>10} {'order':>6} {'reference u':>12}")
for row in result.rows:
    ref = REFERENCE_ERRORS["converge-space"].get(row.param, (None, None))[1]
    o_r = "" if row.order_rho is None else f"{row.order_rho:.2f}"
    o_u = "" if row.order_u is None else f"{row.order_u:.2f}"
    print(f"{row.param:8.5f} {row.err_rho:10.3e} {o_r:>6} {row.err_u:10.3e} {o_u:>6} {ref:12.2e}")
print("all checks passed:", result.passed)

# %%
# The table was also written to ``out_space/converge_space.csv`` together with
# per-step diagnostics in ``out_space/steps/``.
print(open("out_space/converge_space.csv").read())

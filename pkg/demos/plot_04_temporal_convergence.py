"""
Second order in time, until the mesh takes over
===============================================

On a fixed ``64 x 64`` mesh the second test problem is run with halving time
steps. The velocity error falls like ``tau^2`` until it reaches the spatial
error of the mesh; that last halving is flagged rather than counted. About
three minutes on one core.
"""
# %%
from vdns.harness import run_experiment, time_spec

result = run_experiment(time_spec(out_dir="out_time"))
for row in result.rows:
    o_u = "" if row.order_u is None else f"{row.order_u:.2f}"
    note = "  <- spatial floor" if row.past_floor else ""
    print(f"tau = {row.param:<7g} u error {row.err_u:.3e}  order {o_u:>5}{note}")
if result.floor_baseline is not None:
    print(f"spatial floor estimate from the h = 1/32 rerun: {result.floor_baseline:.2e}")
print("all checks passed:", result.passed)

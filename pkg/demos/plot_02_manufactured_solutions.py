"""
Manufactured solutions and self-checks
======================================

The two test problems come with closed-form density root, velocity and
pressure. Their forcing terms are coded by hand, so before trusting any
convergence table we check them three ways.
"""
# %%
from vdns.checks import mms_checks, oracle_comparison
from vdns.mms import derivative_mismatch, forcing_residual_check, get_case

for name in ("ex41", "ex42"):
    case = get_case(name)
    print(name, "final time", case.final_time, "velocity trace:", case.boundary_trace)
    print("  forcing identity residual", forcing_residual_check(case))
    worst = max(derivative_mismatch(case).items(), key=lambda kv: kv[1])
    print("  worst finite-difference mismatch", worst)

# %%
# A corrupted forcing is caught: scaling ``g`` by 1% leaves a large residual.
print(forcing_residual_check(get_case("ex41").with_forcing_scaled(1.01)))

# %%
# The same summary the ``vdns check`` command prints, plus the comparison of
# the vectorized assembler with a dense loop-by-loop reference.
for r in mms_checks():
    print(r.line())
print(oracle_comparison().line())

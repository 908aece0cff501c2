# %% [markdown]
# # Pointwise tracking with box constraints
#
# The cubic reference problem: three observation points, control bounds
# [-1, 1]. Projected gradient descent drives the fixed-point residual to the
# tolerance, then the report checks the sign conditions and scans the
# second variation over the critical cone.

# %%
import numpy as np

from fracpoint import fixture_problem, optimize, stationarity_report

prob = fixture_problem("cubic")
q, hist = optimize(prob, tol=1e-9)
print(hist.message, "after", len(hist) - 1, "iterations")
for rec in hist.records[:: max(1, len(hist) // 6)]:
    print(f"  it {rec['iter']:3d}  j {rec['j']:.10f}  residual {rec['residual']:.2e}")

# %%
rep = stationarity_report(q, prob, n_dir=64)
print(rep.to_text().split("note")[0])

# %% [markdown]
# With unreachable targets the upper bound takes over most of the domain.

# %%
prob = fixture_problem("active")
q, hist = optimize(prob)
rep = stationarity_report(q, prob, n_dir=16)
print("active fractions:", rep.active_set_fractions)
print("control range:", q.min(), q.max())
np.testing.assert_array_less(-1e-12, rep.min_second_order)

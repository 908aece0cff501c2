# %% [markdown]
# # Verification tier
#
# Taylor tests confirm the gradient and Hessian of the reduced cost, a grid
# search confirms the optimizer on a one-parameter problem, and the adjoint
# identity is checked directly.

# %%
import dataclasses

import numpy as np

from fracpoint import (
    fixture_problem,
    gradient_taylor_test,
    grid_search_oracle,
    hessian_taylor_test,
    one_dof_fixture,
    optimize,
    registry_members,
    run_verification,
    smooth_direction,
)

rng = np.random.default_rng(0)
base = fixture_problem("cubic")
for nl in registry_members():
    prob = dataclasses.replace(base, nonlinearity=nl)
    q = rng.uniform(prob.a, prob.b, size=prob.f.shape)
    w = smooth_direction(rng, prob)
    g, h = gradient_taylor_test(q, w, prob), hessian_taylor_test(q, w, prob)
    print(f"{nl.name:16s} j' slope {g.slope:.3f}   j'' {h.status} slope {h.slope:.3f}")

# %% [markdown]
# For zero and linear reactions j is exactly quadratic, so the third-order
# remainder sits at round-off and the Hessian test is reported inconclusive.

# %%
prob = one_dof_fixture("cubic")
_, j_star, vals = grid_search_oracle(prob, 1e-3)
q, hist = optimize(prob)
print(f"grid search q = {vals[0]:.4f}, optimizer q = {q[0, 0]:.6f}")
print(f"cost gap {abs(hist.j_values[-1] - j_star):.2e}")

# %%
summary = run_verification()
print("passed:", summary["passed"], "warnings:", summary["warnings"])

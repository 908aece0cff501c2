# %% [markdown]
# # Point sources
#
# With a Dirac right-hand side the solution of the fractional problem is
# not a function in the classical sense for small s; its truncated spectral
# expansion still converges in H^(s - theta). Without reaction the
# coefficients are simply F_mn / lambda_mn^s.

# %%
import numpy as np

from fracpoint import EigenBasis, MeasureRHS, analytic_linear_oracle, solve_linear, synthesize

mu = MeasureRHS((((0.3, 0.4), 1.0), ((0.7, 0.65), -0.5)))
for s in (0.6, 0.75, 0.9):
    basis = EigenBasis(16, s)
    rep = solve_linear(np.zeros((basis.M, basis.M)), mu, basis)
    err = np.max(np.abs(rep.solution - analytic_linear_oracle(mu, s, basis)))
    print(f"s = {s}: stability ratio {rep.stability_ratio:.4f}, oracle gap {err:.1e}")

# %% [markdown]
# A nonnegative reaction coefficient damps the response.

# %%
basis = EigenBasis(16, 0.75)
X, Y = basis.grid()
for scale in (0.0, 10.0, 100.0):
    rep = solve_linear(scale * np.ones_like(X), mu, basis)
    u = synthesize(rep.solution, basis)
    print(f"c = {scale:5.1f}: ||p||_H^(s-theta) = {rep.solution_norm:.4f}, peak {u.max():.4f}")

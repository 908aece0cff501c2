"""Galerkin solvers for fractional reaction-diffusion problems on the unit square.

All solves reduce to the dense symmetric system ``(Lambda^s + M_c) U = F``
with ``Lambda^s = diag(lambda_mn^s)`` and ``M_c`` the reaction matrix of a
nonnegative coefficient ``c`` sampled on the quadrature grid. Unknowns are
flattened row-major from the ``(K, K)`` coefficient layout.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import AssumptionViolation, ConfigurationError, NumericalError, SolverError
from .nonlinearity import NEG_TOL
from .spectral_core import analyze, check_interior, hr_norm, l2_norm, synthesize

__all__ = [
    "MeasureRHS",
    "LinearSolveReport",
    "NewtonInfo",
    "LinearizedOperator",
    "assemble_reaction_matrix",
    "dirac_load",
    "solve_linear",
    "solve_semilinear",
    "solve_linearized",
    "solve_second",
    "lipschitz_probe",
    "semilinear_residual",
]


@dataclass(frozen=True)
class MeasureRHS:
    """Finite combination of Dirac masses ``sum_z w_z delta_z``."""

    atoms: tuple = ()

    def __post_init__(self):
        atoms = tuple((check_interior(z), float(w)) for z, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)

    @property
    def points(self):
        return np.array([z for z, _ in self.atoms], dtype=float).reshape(-1, 2)

    @property
    def weights(self):
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def total_variation(self):
        """``||mu||_M``, exact for atomic measures."""
        return float(np.sum(np.abs(self.weights)))


@dataclass
class LinearSolveReport:
    """Solution of a linear solve with truncated-norm diagnostics.

    ``rhs_dual_norm`` is the truncated spectral sum for the ``H^{-s-theta}``
    norm, hence a lower bound for the true dual norm of a Dirac source.
    """

    solution: np.ndarray
    rhs_dual_norm: float
    solution_norm: float
    measure_norm: float | None
    stability_ratio: float


@dataclass
class NewtonInfo:
    converged: bool
    iterations: int
    residuals: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)


def assemble_reaction_matrix(c, basis):
    """Dense matrix of ``int c phi_mn phi_m'n'`` by midpoint quadrature, shape ``(K^2, K^2)``."""
    c = np.asarray(c, dtype=float)
    _check_coefficient(c)
    M, K = c.shape[0], basis.K
    S = basis.sine_table(M)
    # B[i, (m, m')] = S[i, m] S[i, m']
    B = (S[:, :, None] * S[:, None, :]).reshape(M, K * K)
    T = c @ B
    A = (B.T @ T).reshape(K, K, K, K) / M**2
    # A[m, m', n, n'] -> entry[(m, n), (m', n')]
    A = A.transpose(0, 2, 1, 3).reshape(K * K, K * K)
    return 0.5 * (A + A.T)


def _check_coefficient(c):
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ConfigurationError(f"coefficient must be a square grid, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise NumericalError("reaction coefficient has non-finite entries")
    cmin = float(np.min(c)) if c.size else 0.0
    if cmin < -NEG_TOL:
        raise AssumptionViolation(f"reaction coefficient min {cmin:.3e} < 0 (monotonicity)")


def dirac_load(mu, basis):
    """Dual coefficients ``F_mn = sum_z w_z phi_mn(z)``."""
    if not isinstance(mu, MeasureRHS):
        mu = MeasureRHS(tuple(mu))
    if not mu.atoms:
        return np.zeros((basis.K, basis.K))
    return np.einsum("p,pmn->mn", mu.weights, basis.basis_at(mu.points))


class LinearizedOperator:
    """Cholesky-factored ``Lambda^s + M_c`` for repeated solves with one coefficient."""

    def __init__(self, c, basis):
        self.basis = basis
        lam_s = basis.lam_pow(basis.s).ravel()
        self.matrix = assemble_reaction_matrix(c, basis) + np.diag(lam_s)
        try:
            self._factor = sla.cho_factor(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"system matrix is not positive definite: {exc}") from None

    def solve(self, load):
        load = np.asarray(load, dtype=float)
        x = sla.cho_solve(self._factor, load.ravel())
        if not np.all(np.isfinite(x)):
            raise NumericalError("linear solve produced non-finite values")
        return x.reshape(self.basis.K, self.basis.K)


def solve_linear(c, rhs, basis):
    """Solve ``(-Delta)^s p + c p = rhs`` in the truncated basis.

    Parameters
    ----------
    c : ndarray, shape (M, M)
        Nonnegative reaction coefficient on the quadrature grid.
    rhs : MeasureRHS or ndarray of shape (K, K)
        Dirac combination, or a dual load ``F_mn`` given directly.
    basis : EigenBasis

    Returns
    -------
    LinearSolveReport
        Stability ratio is ``||p||_{H^{s-theta}} / ||mu||_M`` for measures and
        ``||p||_{H^{s-theta}} / ||F||_{H^{-s-theta}}`` for plain loads.
    """
    if isinstance(rhs, MeasureRHS):
        load = dirac_load(rhs, basis)
        measure_norm = rhs.total_variation
    else:
        load = np.asarray(rhs, dtype=float)
        if load.shape != (basis.K, basis.K):
            raise ConfigurationError(f"load must have shape {(basis.K, basis.K)}, got {load.shape}")
        measure_norm = None
    p = LinearizedOperator(c, basis).solve(load)
    s, theta = basis.s, basis.theta
    dual = hr_norm(load, -s - theta, basis)
    sol = hr_norm(p, s - theta, basis)
    denom = measure_norm if measure_norm is not None else dual
    ratio = sol / max(denom, np.finfo(float).tiny)
    return LinearSolveReport(p, dual, sol, measure_norm, ratio)


def semilinear_residual(U, f_plus_q, nl, basis):
    """Galerkin residual ``Lambda^s U + P(a(., u)) - P(f + q)`` in coefficient space."""
    X = basis.grid(np.asarray(f_plus_q).shape[0])
    u = synthesize(U, basis, M=X[0].shape[0])
    return basis.lam_pow(basis.s) * U + analyze(nl.value(X, u) - f_plus_q, basis)


def solve_semilinear(f_plus_q, nl, basis, tol=1e-11, max_iter=50, max_halvings=20,
                     full_output=False):
    """Damped Newton solve of the semilinear state equation.

    Each step solves ``(Lambda^s + M_c) dU = -R(U)`` with ``c = da/du(., u)``
    and halves the step until the residual norm decreases. Iteration stops
    once ``||R||_2 <= tol`` in coefficient space.

    Returns the state coefficients, plus a :class:`NewtonInfo` when
    ``full_output`` is set.
    """
    f_plus_q = np.asarray(f_plus_q, dtype=float)
    M = f_plus_q.shape[0]
    if M < basis.K + 1:
        raise ConfigurationError(f"grid size M = {M} must be at least K + 1 = {basis.K + 1}")
    X = basis.grid(M)
    lam_s = basis.lam_pow(basis.s)
    load = analyze(f_plus_q, basis)

    def residual(U):
        u = synthesize(U, basis, M=M)
        return lam_s * U + analyze(nl.value(X, u), basis) - load

    a0 = nl.value(X, np.zeros_like(f_plus_q))
    U = analyze(f_plus_q - a0, basis) / lam_s
    R = residual(U)
    rnorm = float(np.linalg.norm(R))
    info = NewtonInfo(False, 0, [rnorm], [])

    while rnorm > tol:
        if info.iterations >= max_iter:
            raise SolverError(
                f"Newton did not converge in {max_iter} iterations (residual {rnorm:.3e})",
                info.residuals,
            )
        c = nl.du(X, synthesize(U, basis, M=M))
        if np.min(c) < -NEG_TOL:
            raise AssumptionViolation(
                f"{nl.name}: da/du = {np.min(c):.3e} < 0 at iteration {info.iterations}"
            )
        dU = -LinearizedOperator(np.maximum(c, 0.0), basis).solve(R)
        step = 1.0
        for _ in range(max_halvings + 1):
            U_try = U + step * dU
            R_try = residual(U_try)
            r_try = float(np.linalg.norm(R_try))
            if np.isfinite(r_try) and r_try < rnorm:
                break
            step *= 0.5
        else:
            raise SolverError(
                f"line search stalled at residual {rnorm:.3e}", info.residuals
            )
        U, R, rnorm = U_try, R_try, r_try
        info.iterations += 1
        info.residuals.append(rnorm)
        info.step_lengths.append(step)

    info.converged = True
    return (U, info) if full_output else U


def _reaction_coefficient(U, nl, basis):
    X = basis.grid()
    c = nl.du(X, synthesize(U, basis))
    if np.min(c) < -NEG_TOL:
        raise AssumptionViolation(f"{nl.name}: da/du = {np.min(c):.3e} < 0")
    return np.maximum(c, 0.0)


def solve_linearized(u, w, nl, basis, operator=None):
    """First-order sensitivity ``phi = S'(q) w`` at the state ``u``."""
    op = operator or LinearizedOperator(_reaction_coefficient(u, nl, basis), basis)
    return op.solve(analyze(w, basis))


def solve_second(u, phi1, phi2, nl, basis, operator=None):
    """Second-order sensitivity ``psi = S''(q)(w1, w2)`` from two first-order ones."""
    X = basis.grid()
    rhs = nl.duu(X, synthesize(u, basis)) * synthesize(phi1, basis) * synthesize(phi2, basis)
    if not np.any(rhs):
        return np.zeros((basis.K, basis.K))
    op = operator or LinearizedOperator(_reaction_coefficient(u, nl, basis), basis)
    return op.solve(-analyze(rhs, basis))


def lipschitz_probe(f1, f2, nl, basis, tol=1e-11):
    """``(||u1 - u2||_{H^2s} + max|u1 - u2|) / ||f1 - f2||_{L2}`` for two forcings."""
    df = l2_norm(np.asarray(f1, dtype=float) - np.asarray(f2, dtype=float))
    if df == 0.0:
        raise ValueError("forcings coincide; Lipschitz ratio undefined")
    du = solve_semilinear(f1, nl, basis, tol=tol) - solve_semilinear(f2, nl, basis, tol=tol)
    return (hr_norm(du, 2 * basis.s, basis) + float(np.max(np.abs(synthesize(du, basis))))) / df

import numpy as np
import pytest

from fracpoint.errors import AssumptionViolation, ConfigurationError, DomainError, SolverError
from fracpoint.fractional_pde import (
    MeasureRHS,
    assemble_reaction_matrix,
    dirac_load,
    lipschitz_probe,
    semilinear_residual,
    solve_linear,
    solve_linearized,
    solve_second,
    solve_semilinear,
)
from fracpoint.nonlinearity import (
    Nonlinearity,
    cubic,
    get_nonlinearity,
    linear,
    registry_members,
    validate_nonlinearity,
    zero,
)
from fracpoint.oracle_verify import manufactured_semilinear
from fracpoint.spectral_core import EigenBasis, eval_basis, l2_norm, synthesize

# 2 / (2 pi^2)^(3/4), mpmath at 30 digits
P11_DIRAC_CENTER = 0.213566283394110664261649106062
# int_(0,1)^2 phi_11^3 = 8 (4 / (3 pi))^2 = 128 / (9 pi^2)
INT_PHI11_CUBED = 1.44101238957991497164628569898


@pytest.fixture
def basis():
    return EigenBasis(8, 0.75)


def unit(K, m, n, v=1.0):
    w = np.zeros((K, K))
    w[m - 1, n - 1] = v
    return w


# -- nonlinearity registry --------------------------------------------------


@pytest.mark.parametrize("nl", registry_members(), ids=lambda nl: nl.name)
def test_registry_satisfies_monotonicity(nl):
    bound = validate_nonlinearity(nl)
    assert np.isfinite(bound)
    assert np.all(nl.value(None, np.zeros(3)) == 0.0)


@pytest.mark.parametrize("nl", registry_members(), ids=lambda nl: nl.name)
def test_registry_derivatives_by_finite_differences(nl):
    u = np.linspace(-2, 2, 41)
    h = 1e-6
    fd1 = (nl.value(None, u + h) - nl.value(None, u - h)) / (2 * h)
    fd2 = (nl.du(None, u + h) - nl.du(None, u - h)) / (2 * h)
    np.testing.assert_allclose(nl.du(None, u), fd1, atol=1e-6)
    np.testing.assert_allclose(nl.duu(None, u), fd2, atol=1e-5)


def test_registry_lookup():
    assert get_nonlinearity("linear", gamma=2.0).du(None, np.ones(2)).tolist() == [2.0, 2.0]
    with pytest.raises(ConfigurationError):
        get_nonlinearity("quartic")
    with pytest.raises(ConfigurationError):
        get_nonlinearity("cubic", gamma=1.0)
    with pytest.raises(AssumptionViolation):
        linear(-1.0)


def test_validate_rejects_decreasing():
    bad = Nonlinearity("neg", lambda x, u: -u, lambda x, u: -np.ones_like(u),
                       lambda x, u: np.zeros_like(u))
    with pytest.raises(AssumptionViolation):
        validate_nonlinearity(bad)
    nan = Nonlinearity("nan", lambda x, u: u / 0.0, lambda x, u: np.ones_like(u),
                       lambda x, u: np.zeros_like(u))
    with np.errstate(divide="ignore", invalid="ignore"), pytest.raises(AssumptionViolation):
        validate_nonlinearity(nan)


# -- reaction matrix ----------------------------------------------------------


def test_reaction_matrix_zero_and_constant(basis):
    M = basis.M
    assert np.all(assemble_reaction_matrix(np.zeros((M, M)), basis) == 0.0)
    A = assemble_reaction_matrix(np.full((M, M), 2.5), basis)
    np.testing.assert_allclose(A, 2.5 * np.eye(basis.N), atol=1e-12)


def test_reaction_matrix_phi11_against_fine_quadrature():
    basis = EigenBasis(4, 0.75, M=32)
    c = synthesize(unit(4, 1, 1), basis)
    A = assemble_reaction_matrix(c, basis)
    np.testing.assert_allclose(A, A.T, atol=0)
    # independent brute-force midpoint quadrature on the doubled grid
    M2 = 64
    t = (np.arange(M2) + 0.5) / M2
    X, Y = np.meshgrid(t, t, indexing="ij")
    phi11 = 2 * np.sin(np.pi * X) * np.sin(np.pi * Y)
    fine = np.sum(phi11**3) / M2**2
    assert A[0, 0] == pytest.approx(fine, rel=1e-3)
    assert A[0, 0] == pytest.approx(INT_PHI11_CUBED, rel=1e-3)


def test_reaction_matrix_entries_match_direct_sum():
    basis = EigenBasis(3, 0.75, M=7)
    rng = np.random.default_rng(4)
    c = rng.uniform(0, 2, size=(7, 7))
    A = assemble_reaction_matrix(c, basis)
    t = (np.arange(7) + 0.5) / 7
    for (m, n), (mp, np_) in [((1, 1), (1, 1)), ((1, 2), (3, 1)), ((3, 3), (2, 1))]:
        direct = sum(c[i, j] * eval_basis(m, n, (t[i], t[j])) * eval_basis(mp, np_, (t[i], t[j]))
                     for i in range(7) for j in range(7)) / 49
        assert A[(m - 1) * 3 + n - 1, (mp - 1) * 3 + np_ - 1] == pytest.approx(direct, abs=1e-13)


def test_reaction_matrix_rejects_negative(basis):
    c = np.zeros((basis.M, basis.M))
    c[3, 3] = -1e-6
    with pytest.raises(AssumptionViolation):
        assemble_reaction_matrix(c, basis)
    c[3, 3] = -1e-14
    assemble_reaction_matrix(c, basis)


# -- Dirac loads and linear solves -------------------------------------------


def test_dirac_load(basis):
    F = dirac_load(MeasureRHS((((0.5, 0.5), 1.0),)), basis)
    assert F[0, 0] == pytest.approx(2.0)
    assert F[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert np.all(dirac_load(MeasureRHS(), basis) == 0.0)
    z1, z2 = (0.2, 0.7), (0.6, 0.35)
    both = dirac_load(MeasureRHS(((z1, 1.5), (z2, -0.4))), basis)
    sep = 1.5 * dirac_load(MeasureRHS(((z1, 1.0),)), basis) \
        - 0.4 * dirac_load(MeasureRHS(((z2, 1.0),)), basis)
    np.testing.assert_allclose(both, sep, atol=1e-14)


@pytest.mark.parametrize("z", [(0.0, 0.5), (0.3, 1.0), (1.5, 0.5)])
def test_dirac_domain_error(z):
    with pytest.raises(DomainError):
        MeasureRHS(((z, 1.0),))


def test_solve_linear_dirac_center(basis):
    rep = solve_linear(np.zeros((basis.M, basis.M)), MeasureRHS((((0.5, 0.5), 1.0),)), basis)
    assert rep.solution[0, 0] == pytest.approx(P11_DIRAC_CENTER, abs=1e-14)
    assert rep.solution[0, 0] == pytest.approx(0.21357, abs=1e-5)
    assert rep.measure_norm == 1.0
    assert rep.stability_ratio == pytest.approx(rep.solution_norm)


def test_solve_linear_diagonal_cases(basis):
    M = basis.M
    lam11_s = (2 * np.pi**2) ** basis.s
    rep = solve_linear(np.ones((M, M)), unit(8, 1, 1), basis)
    expected = unit(8, 1, 1, 1.0 / (lam11_s + 1.0))
    np.testing.assert_allclose(rep.solution, expected, atol=1e-14)
    rep = solve_linear(np.zeros((M, M)), basis.lam_pow(basis.s) * unit(8, 1, 1), basis)
    np.testing.assert_allclose(rep.solution, unit(8, 1, 1), atol=1e-14)


def test_solve_linear_bad_load(basis):
    with pytest.raises(ConfigurationError):
        solve_linear(np.zeros((basis.M, basis.M)), np.zeros((3, 3)), basis)


def test_reaction_reduces_norm_for_dirac_loads(basis):
    rng = np.random.default_rng(5)
    X, Y = basis.grid()
    for k in range(10):
        pts = rng.uniform(0.05, 0.95, size=(3, 2))
        mu = MeasureRHS(tuple(zip(map(tuple, pts), rng.normal(size=3))))
        free = solve_linear(np.zeros_like(X), mu, basis).solution_norm
        for c in (np.full_like(X, 3.0), 5.0 * X * Y):
            assert solve_linear(c, mu, basis).solution_norm <= free * (1 + 1e-12)


# -- semilinear solves ----------------------------------------------------------


def test_semilinear_linear_limit(basis):
    f = synthesize(basis.lam_pow(basis.s) * unit(8, 1, 1), basis)
    U = solve_semilinear(f, zero(), basis)
    np.testing.assert_allclose(U, unit(8, 1, 1), atol=1e-13)


def test_semilinear_trivial(basis):
    U, info = solve_semilinear(np.zeros((basis.M, basis.M)), cubic(), basis, full_output=True)
    assert np.all(U == 0.0)
    assert info.iterations <= 1 and info.converged


@pytest.mark.parametrize("K", [3, 4, 8])
def test_manufactured_cubic(K):
    basis = EigenBasis(K, 0.75)
    u_star = unit(K, 1, 1, 0.3)
    f = synthesize(basis.lam_pow(basis.s) * u_star, basis) + synthesize(u_star, basis) ** 3
    assert np.linalg.norm(semilinear_residual(u_star, f, cubic(), basis)) <= 1e-12
    U, info = solve_semilinear(f, cubic(), basis, full_output=True)
    np.testing.assert_allclose(U, u_star, atol=1e-10)
    assert np.linalg.norm(semilinear_residual(U, f, cubic(), basis)) <= 1e-11


def test_semilinear_residual_history_and_galerkin_consistency(basis):
    X, Y = basis.grid()
    f = 40 * np.sin(3 * X) * Y * (1 - Y)
    for nl in registry_members():
        U, info = solve_semilinear(f, nl, basis, full_output=True)
        assert info.residuals[-1] <= 1e-11
        assert np.max(np.abs(semilinear_residual(U, f, nl, basis))) <= 1e-11
        assert len(info.residuals) == info.iterations + 1


def test_semilinear_nonconvergence_reports_history(basis):
    X, _ = basis.grid()
    with pytest.raises(SolverError) as exc:
        solve_semilinear(200 * X, get_nonlinearity("exponential"), basis, max_iter=1)
    assert len(exc.value.history) >= 1


def test_semilinear_detects_monotonicity_violation(basis):
    bad = Nonlinearity("bad", lambda x, u: -(u**3), lambda x, u: -3 * u**2,
                       lambda x, u: -6 * u)
    X, _ = basis.grid()
    with pytest.raises(AssumptionViolation):
        solve_semilinear(10 * X, bad, basis)


# -- sensitivities -----------------------------------------------------------------


def test_linearized_diagonal(basis):
    w = synthesize(unit(8, 1, 1), basis)
    U0 = np.zeros((8, 8))
    phi = solve_linearized(U0, w, zero(), basis)
    np.testing.assert_allclose(phi, unit(8, 1, 1, (2 * np.pi**2) ** -basis.s), atol=1e-14)
    assert np.all(solve_linearized(U0, np.zeros_like(w), cubic(), basis) == 0.0)


def test_linearized_matches_finite_difference(basis):
    X, Y = basis.grid()
    f = 30 * X * (1 - X) * Y
    w = np.cos(2 * X + Y) * 5
    u = solve_semilinear(f, cubic(), basis)
    phi = solve_linearized(u, w, cubic(), basis)
    remainders = []
    for t in (1e-2, 1e-3, 1e-4):
        ut = solve_semilinear(f + t * w, cubic(), basis)
        remainders.append(l2_norm(synthesize(ut - u - t * phi, basis)))
    slopes = np.diff(np.log(remainders)) / np.diff(np.log([1e-2, 1e-3, 1e-4]))
    assert np.all(np.abs(slopes - 2) < 0.15), remainders


def test_second_sensitivity(basis):
    X, Y = basis.grid()
    f = 30 * X * (1 - X) * Y
    w1, w2 = 5 * np.cos(2 * X + Y), 4 * np.sin(3 * Y) * X
    u = solve_semilinear(f, cubic(), basis)
    p1 = solve_linearized(u, w1, cubic(), basis)
    p2 = solve_linearized(u, w2, cubic(), basis)
    psi12 = solve_second(u, p1, p2, cubic(), basis)
    psi21 = solve_second(u, p2, p1, cubic(), basis)
    np.testing.assert_allclose(psi12, psi21, atol=1e-12)
    assert np.all(solve_second(u, np.zeros_like(p1), p2, cubic(), basis) == 0.0)
    assert np.all(solve_second(u, p1, p2, linear(2.0), basis) == 0.0)

    # slope-3 remainder of the second-order expansion
    rem = []
    psi = solve_second(u, p1, p1, cubic(), basis)
    for t in (1e-1, 1e-2, 1e-3):
        ut = solve_semilinear(f + t * w1, cubic(), basis)
        rem.append(l2_norm(synthesize(ut - u - t * p1 - 0.5 * t * t * psi, basis)))
    slopes = np.diff(np.log(rem)) / np.diff(np.log([1e-1, 1e-2, 1e-3]))
    assert np.all(np.abs(slopes - 3) < 0.15), rem


# -- Lipschitz probe -----------------------------------------------------------------


@pytest.mark.parametrize("mode", [(1, 1), (2, 3)])
def test_lipschitz_probe_single_mode(basis, mode):
    f1 = np.zeros((basis.M, basis.M))
    g = synthesize(unit(8, *mode), basis)
    ratio = lipschitz_probe(f1, f1 + 0.7 * g, zero(), basis)
    lam_s = (np.pi**2 * (mode[0] ** 2 + mode[1] ** 2)) ** basis.s
    assert ratio == pytest.approx(1 + np.max(np.abs(g)) / lam_s, rel=1e-12)
    assert ratio == pytest.approx(1 + 2 / lam_s, rel=1e-2)


def test_lipschitz_probe_symmetry_and_continuity(basis):
    X, Y = basis.grid()
    f1 = 20 * X * Y
    g = synthesize(unit(8, 1, 1), basis)
    r = [lipschitz_probe(f1, f1 + eps * g, cubic(), basis) for eps in (1e-1, 1e-2, 1e-3)]
    assert max(r) / min(r) < 1.2
    assert lipschitz_probe(f1, f1 + 0.1 * g, cubic(), basis) == pytest.approx(
        lipschitz_probe(f1 + 0.1 * g, f1, cubic(), basis), rel=1e-12)
    with pytest.raises(ValueError):
        lipschitz_probe(f1, f1, cubic(), basis)


def test_manufactured_forcing_warns_for_non_polynomial(basis):
    with pytest.warns(UserWarning):
        manufactured_semilinear(unit(8, 1, 1, 0.3), get_nonlinearity("exponential"), basis)

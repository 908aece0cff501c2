"""Independent oracles and finite-difference harnesses.

Nothing here assembles a reaction matrix or reuses the adjoint: each check
compares a solver path against a route that does not share its machinery.
"""

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import optimal_control as oc
from .errors import ConfigurationError
from .fractional_pde import MeasureRHS, solve_linear, solve_semilinear
from .nonlinearity import cubic, registry_members, zero
from .spectral_core import EigenBasis, l2_inner, l2_norm, point_eval, synthesize

__all__ = [
    "TaylorTestResult",
    "analytic_linear_oracle",
    "manufactured_semilinear",
    "taylor_test",
    "gradient_taylor_test",
    "hessian_taylor_test",
    "grid_search_oracle",
    "adjoint_identity_check",
    "random_dirac",
    "random_admissible",
    "random_smooth_field",
    "smooth_direction",
    "one_dof_fixture",
    "fixture_problem",
    "run_verification",
]

DEFAULT_STEPS = (1e-2, 1e-3, 1e-4)


def analytic_linear_oracle(rhs, s, basis):
    """Closed-form ``F_mn / lambda_mn^s`` for the reaction-free problem."""
    K = basis.K
    m = np.arange(1, K + 1, dtype=float)
    lam = math.pi**2 * (m[:, None] ** 2 + m[None, :] ** 2)
    if isinstance(rhs, MeasureRHS):
        F = np.zeros((K, K))
        for (x, y), w in rhs.atoms:
            F += w * np.outer(2.0 * np.sin(m * math.pi * x), np.sin(m * math.pi * y))
    else:
        F = np.asarray(rhs, dtype=float)
    return F / lam**s


def manufactured_semilinear(u_star, nl, basis):
    """Forcing ``f = (-Delta)^s u* + a(., u*)`` on the basis grid.

    Exact for the Galerkin system only when ``a(., u*)`` is band-limited below
    ``M``; a warning is issued otherwise.
    """
    u_star = np.asarray(u_star, dtype=float)
    support = np.nonzero(u_star)
    top = int(max(support[0].max(), support[1].max())) + 1 if support[0].size else 0
    deg = nl.polynomial_degree
    if deg is None:
        warnings.warn(f"{nl.name} is not polynomial; manufactured forcing is aliased",
                      stacklevel=2)
    elif deg > 0 and deg * top > basis.M - 1:
        warnings.warn(f"{nl.name}(u*) reaches mode {deg * top} > M - 1 = {basis.M - 1}",
                      stacklevel=2)
    X = basis.grid()
    lap = synthesize(basis.lam_pow(basis.s) * u_star, basis)
    return lap + nl.value(X, synthesize(u_star, basis))


@dataclass
class TaylorTestResult:
    steps: list
    remainders: list
    slope: float
    expected: float
    passed: bool
    inconclusive: bool = False

    @property
    def status(self):
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"


def taylor_test(fn, expected, steps=DEFAULT_STEPS, tol=0.15, noise_floor=0.0):
    """Fit the log-log slope of ``|fn(t)|`` over ``steps``.

    ``fn(t)`` returns a Taylor remainder. Remainders at or below
    ``noise_floor`` are dropped; with fewer than two left the result is
    flagged inconclusive rather than failed.
    """
    steps = [float(t) for t in steps]
    if len(steps) < 3:
        raise ConfigurationError("a Taylor test needs at least three step sizes")
    ratios = np.array(steps[:-1]) / np.array(steps[1:])
    if not np.allclose(ratios, ratios[0]) or ratios[0] <= 1:
        raise ConfigurationError("step sizes must decrease by a constant factor")
    rem = [abs(float(fn(t))) for t in steps]
    keep = [(t, r) for t, r in zip(steps, rem) if r > noise_floor]
    if len(keep) < 2:
        return TaylorTestResult(steps, rem, float("nan"), expected, False, inconclusive=True)
    lt, lr = np.log([k[0] for k in keep]), np.log([k[1] for k in keep])
    slope = float(np.polyfit(lt, lr, 1)[0])
    return TaylorTestResult(steps, rem, slope, expected, abs(slope - expected) <= tol)


def _noise_floor(j0):
    return 1e2 * np.finfo(float).eps * max(1.0, abs(j0))


def smooth_direction(rng, prob, scale=20.0):
    """Random smooth grid direction with L2 norm ``scale``, projected to the control space.

    White-noise directions barely excite the smooth sensitivities, which leaves
    third-order Taylor remainders at round-off level.
    """
    X, Y = prob.basis.grid()
    w = oc.restrict_to_controls(random_smooth_field(rng)(X, Y), prob)
    return scale * w / l2_norm(w)


def gradient_taylor_test(q, w, prob, steps=DEFAULT_STEPS):
    """Remainder ``j(q + t w) - j(q) - t <grad j(q), w>`` should decay like ``t^2``."""
    ev = oc.evaluate(q, prob)
    dj = l2_inner(ev.gradient, w)
    return taylor_test(lambda t: oc.reduced_cost(q + t * w, prob) - ev.j - t * dj, 2.0,
                       steps, noise_floor=_noise_floor(ev.j))


def hessian_taylor_test(q, w, prob, steps=DEFAULT_STEPS):
    """Second-order remainder including ``t^2/2 j''(q)(w, w)`` should decay like ``t^3``."""
    ev = oc.evaluate(q, prob)
    dj = l2_inner(ev.gradient, w)
    d2j = oc.hessian_form(q, w, w, prob)
    return taylor_test(
        lambda t: oc.reduced_cost(q + t * w, prob) - ev.j - t * dj - 0.5 * t * t * d2j,
        3.0, steps, noise_floor=_noise_floor(ev.j))


def _dof_labels(prob):
    if prob.control_labels is None:
        return np.zeros((prob.basis.M, prob.basis.M), dtype=int)
    return prob.control_labels


def grid_search_oracle(prob, resolution):
    """Exhaustive scan of ``j`` over piecewise-constant controls with one or two values.

    The control space is the one of ``prob.control_labels`` (a single constant
    when no labels are set). Returns ``(q_star, j_star, values_star)``.
    """
    labels = _dof_labels(prob)
    n_dof = int(labels.max()) + 1
    if n_dof > 2:
        raise ConfigurationError(f"grid search refuses {n_dof} degrees of freedom (max 2)")
    n = int(math.ceil((prob.b - prob.a) / resolution)) + 1
    axis = np.linspace(prob.a, prob.b, n)
    best = (np.inf, None)
    for vals in np.array(np.meshgrid(*([axis] * n_dof), indexing="ij")).reshape(n_dof, -1).T:
        j = oc.reduced_cost(vals[labels], prob)
        if j < best[0]:
            best = (j, vals)
    j_star, vals = best
    return vals[labels], float(j_star), vals


def adjoint_identity_check(q, w, prob):
    """Relative mismatch between ``sum_z (u(z) - u_z) phi_w(z)`` and ``<p, w>``."""
    ev = oc.evaluate(q, prob)
    phi_w = ev.sensitivity(w)
    lhs = float(np.dot(ev.misfit, point_eval(phi_w, prob.points, prob.basis))) \
        if prob.observations else 0.0
    rhs = l2_inner(synthesize(ev.p, prob.basis), w)
    return abs(lhs - rhs) / (1.0 + abs(rhs))


# ---------------------------------------------------------------------------
# random data and fixtures


def random_dirac(rng, n_atoms=None, margin=0.02):
    n = int(rng.integers(1, 6)) if n_atoms is None else n_atoms
    pts = rng.uniform(margin, 1.0 - margin, size=(n, 2))
    wts = rng.normal(size=n)
    return MeasureRHS(tuple(zip(map(tuple, pts), wts)))


def random_admissible(rng, prob):
    q = rng.uniform(prob.a, prob.b, size=(prob.basis.M, prob.basis.M))
    return oc.restrict_to_controls(q, prob)


def random_smooth_field(rng, n_bumps=4, amplitude=1.0):
    """Callable ``(X, Y) -> values``: a sum of random Gaussian bumps and plane waves.

    Defined independently of any grid so the same field can be sampled at
    several resolutions.
    """
    centers = rng.uniform(0.1, 0.9, size=(n_bumps, 2))
    widths = rng.uniform(0.08, 0.25, size=n_bumps)
    heights = amplitude * rng.normal(size=n_bumps)
    freqs = rng.uniform(0.5, 3.0, size=(2, 2))
    phases = rng.uniform(0, 2 * np.pi, size=2)
    wave_amp = 0.3 * amplitude * rng.normal(size=2)

    def field(X, Y):
        out = np.zeros_like(X, dtype=float)
        for (cx, cy), wd, h in zip(centers, widths, heights):
            out += h * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * wd * wd))
        for k in range(2):
            out += wave_amp[k] * np.cos(np.pi * (freqs[k, 0] * X + freqs[k, 1] * Y) + phases[k])
        return out

    return field


def fixture_problem(kind, K=8, s=0.75, theta=0.5, one_dof=False):
    """Small reference problems: ``"linear"``, ``"cubic"`` or ``"active"``.

    ``linear`` has no reaction term; ``cubic`` uses ``a(u) = u^3``; ``active``
    has targets far above what the bounds allow so the upper bound is active.
    With ``one_dof`` the control is restricted to constants.
    """
    basis = EigenBasis(K, s, theta)
    X, Y = basis.grid()
    obs = [((0.3, 0.4), 0.25), ((0.7, 0.6), 0.15), ((0.5, 0.25), -0.1)]
    if kind == "linear":
        nl, f, alpha, a, b = zero(), 0.5 * np.sin(np.pi * X) * np.sin(2 * np.pi * Y), 0.2, -1.0, 1.0
    elif kind == "cubic":
        nl, f, alpha, a, b = cubic(), 2.0 * X * (1 - X) * Y, 0.1, -1.0, 1.0
        obs = [((0.3, 0.4), 0.4), ((0.7, 0.6), 0.3), ((0.5, 0.25), 0.1)]
    elif kind == "active":
        nl, f, alpha, a, b = cubic(), np.zeros_like(X), 0.1, -0.5, 0.5
        obs = [((0.3, 0.4), 2.0), ((0.7, 0.6), 2.5)]
    else:
        raise ConfigurationError(f"unknown fixture {kind!r}")
    labels = np.zeros(X.shape, dtype=int) if one_dof else None
    return oc.ControlProblem(f, alpha, a, b, obs, nl, basis, control_labels=labels)


def one_dof_fixture(kind, K=8, s=0.75):
    return fixture_problem(kind, K=K, s=s, one_dof=True)


# ---------------------------------------------------------------------------
# verification tier used by the command-line ``verify`` subcommand


def _probe(name, status, **details):
    return {"name": name, "status": status, **details}


def run_verification(prob=None, seed=0, n_dirac=10, grid_resolution=1e-3):
    """Run every oracle probe and return a JSON-serializable summary.

    The summary has ``passed`` (no probe failed), ``failures`` and
    ``warnings`` (inconclusive probes) besides the per-probe records.
    """
    rng = np.random.default_rng(seed)
    prob = prob or fixture_problem("cubic")
    basis = prob.basis
    probes = []

    err = 0.0
    for _ in range(n_dirac):
        mu = random_dirac(rng)
        p = solve_linear(np.zeros((basis.M, basis.M)), mu, basis).solution
        err = max(err, float(np.max(np.abs(p - analytic_linear_oracle(mu, basis.s, basis)))))
    probes.append(_probe("linear_oracle", "pass" if err <= 1e-12 else "fail", max_error=err))

    K_man = max(basis.K, 4)
    mbasis = EigenBasis(K_man, basis.s, basis.theta)
    u_star = np.zeros((K_man, K_man))
    u_star[0, 0] = 0.3
    f = manufactured_semilinear(u_star, cubic(), mbasis)
    U, info = solve_semilinear(f, cubic(), mbasis, full_output=True)
    err = float(np.max(np.abs(U - u_star)))
    probes.append(_probe("manufactured_recovery", "pass" if err <= 1e-10 else "fail",
                         max_error=err, newton_iterations=info.iterations))

    for nl in registry_members():
        p_nl = dataclasses.replace(prob, nonlinearity=nl, control_labels=None)
        q = random_admissible(rng, p_nl)
        w = smooth_direction(rng, p_nl)
        for label, test in (("gradient", gradient_taylor_test), ("hessian", hessian_taylor_test)):
            res = test(q, w, p_nl)
            probes.append(_probe(f"taylor_{label}[{nl.name}]", res.status, slope=res.slope,
                                 expected=res.expected, remainders=res.remainders))

    q = random_admissible(rng, prob)
    w = rng.standard_normal(q.shape)
    rel = adjoint_identity_check(q, w, prob)
    probes.append(_probe("adjoint_identity", "pass" if rel <= 1e-8 else "fail", rel_error=rel))

    p1 = dataclasses.replace(prob, control_labels=np.zeros((basis.M, basis.M), dtype=int))
    q_or, j_or, vals = grid_search_oracle(p1, grid_resolution)
    q_opt, hist = oc.optimize(p1)
    dq = abs(float(q_opt.flat[0]) - float(vals[0]))
    dj = abs(hist.j_values[-1] - j_or)
    ok = hist.converged and dq <= 2 * grid_resolution and dj <= 1e-6 + grid_resolution**2
    probes.append(_probe("grid_search_agreement", "pass" if ok else "fail",
                         control_gap=dq, cost_gap=dj))

    failures = [p["name"] for p in probes if p["status"] == "fail"]
    warns = [p["name"] for p in probes if p["status"] == "inconclusive"]
    return {"passed": not failures, "failures": failures, "warnings": warns, "probes": probes}

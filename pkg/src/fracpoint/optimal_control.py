"""Pointwise-tracking optimal control with box constraints.

The reduced cost is

    j(q) = 1/2 sum_z (u(z) - u_z)^2 + alpha/2 ||q||^2,   u = S(q),

with ``S`` the semilinear control-to-state map. Controls are grid functions
on the quadrature midpoints; box projection is pointwise clipping. A problem
may restrict controls to piecewise constants on a labelled partition of the
grid (``control_labels``), which keeps clipping an exact projection.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .fractional_pde import (
    LinearizedOperator,
    MeasureRHS,
    dirac_load,
    solve_linear,
    solve_semilinear,
)
from .nonlinearity import NEG_TOL
from .spectral_core import analyze, check_interior, l2_inner, l2_norm, point_eval, synthesize

__all__ = [
    "PointObservation",
    "ControlProblem",
    "ControlEvaluation",
    "DescentHistory",
    "OptimalityReport",
    "evaluate",
    "state",
    "reduced_cost",
    "adjoint",
    "reduced_gradient",
    "project_admissible",
    "restrict_to_controls",
    "optimize",
    "hessian_form",
    "critical_cone_membership",
    "project_to_critical_cone",
    "stationarity_report",
    "hessian_lipschitz_probe",
]


@dataclass(frozen=True)
class PointObservation:
    z: tuple
    target: float

    def __post_init__(self):
        object.__setattr__(self, "z", check_interior(self.z))
        object.__setattr__(self, "target", float(self.target))


@dataclass
class ControlProblem:
    """Data of the tracking problem.

    ``f`` is the fixed forcing on the ``basis.M`` grid. ``control_labels``,
    when given, is an integer array on the same grid; controls are then
    constant on each label.
    """

    f: np.ndarray
    alpha: float
    a: float
    b: float
    observations: list
    nonlinearity: object
    basis: object
    control_labels: np.ndarray | None = None
    newton_tol: float = 1e-11

    def __post_init__(self):
        M = self.basis.M
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != (M, M):
            raise ConfigurationError(f"forcing must have shape {(M, M)}, got {self.f.shape}")
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise ConfigurationError(f"bounds need -inf < a < b < inf, got [{self.a}, {self.b}]")
        self.observations = [
            o if isinstance(o, PointObservation) else PointObservation(*o)
            for o in self.observations
        ]
        pts = [o.z for o in self.observations]
        if len(set(pts)) != len(pts):
            raise ConfigurationError("observation points must be pairwise distinct")
        if self.control_labels is not None:
            labels = np.asarray(self.control_labels)
            if labels.shape != (M, M):
                raise ConfigurationError("control_labels must live on the quadrature grid")
            _, inverse = np.unique(labels, return_inverse=True)
            self.control_labels = inverse.reshape(M, M)

    @property
    def points(self):
        return np.array([o.z for o in self.observations], dtype=float).reshape(-1, 2)

    @property
    def targets(self):
        return np.array([o.target for o in self.observations], dtype=float)

    @property
    def tau_act(self):
        return 1e-8 * (self.b - self.a)

    def tau_d(self, d):
        return 1e-6 * (1.0 + float(np.max(np.abs(d))))

    def zeros(self):
        return np.zeros((self.basis.M, self.basis.M))


@dataclass
class ControlEvaluation:
    """State, misfits and (on demand) the adjoint at one control."""

    q: np.ndarray
    u: np.ndarray
    misfit: np.ndarray
    j: float
    prob: ControlProblem
    _operator: LinearizedOperator | None = None
    _p: np.ndarray | None = None

    @property
    def operator(self):
        if self._operator is None:
            prob = self.prob
            X = prob.basis.grid()
            c = prob.nonlinearity.du(X, synthesize(self.u, prob.basis))
            self._operator = LinearizedOperator(np.maximum(c, 0.0), prob.basis)
        return self._operator

    @property
    def p(self):
        if self._p is None:
            atoms = tuple(zip(map(tuple, self.prob.points), self.misfit))
            self._p = self.operator.solve(dirac_load(MeasureRHS(atoms), self.prob.basis))
        return self._p

    @property
    def gradient(self):
        prob = self.prob
        return restrict_to_controls(synthesize(self.p, prob.basis) + prob.alpha * self.q, prob)

    def sensitivity(self, w):
        return self.operator.solve(analyze(w, self.prob.basis))


def evaluate(q, prob):
    """Solve the state equation at ``q`` and bundle what derivatives need."""
    q = np.asarray(q, dtype=float)
    u = solve_semilinear(prob.f + q, prob.nonlinearity, prob.basis, tol=prob.newton_tol)
    misfit = point_eval(u, prob.points, prob.basis) - prob.targets if prob.observations \
        else np.zeros(0)
    j = 0.5 * float(np.sum(misfit**2)) + 0.5 * prob.alpha * l2_inner(q, q)
    return ControlEvaluation(q, u, misfit, j, prob)


def state(q, prob):
    """Control-to-state map ``S(q)``; warns when ``q`` leaves the admissible box."""
    q = np.asarray(q, dtype=float)
    tol = prob.tau_act
    if np.min(q) < prob.a - tol or np.max(q) > prob.b + tol:
        warnings.warn("control outside [a, b]; state is still well defined", stacklevel=2)
    return solve_semilinear(prob.f + q, prob.nonlinearity, prob.basis, tol=prob.newton_tol)


def reduced_cost(q, prob):
    return evaluate(q, prob).j


def adjoint(q, u, prob, report=False):
    """Adjoint state with Dirac sources weighted by the observation misfits.

    Returns the coefficients, or the full ``LinearSolveReport`` with
    ``report=True``.
    """
    basis = prob.basis
    misfit = point_eval(u, prob.points, basis) - prob.targets if prob.observations \
        else np.zeros(0)
    c = prob.nonlinearity.du(basis.grid(), synthesize(u, basis))
    rep = solve_linear(np.maximum(c, 0.0) if np.min(c) >= -NEG_TOL else c,
                       MeasureRHS(tuple(zip(map(tuple, prob.points), misfit))), basis)
    return rep if report else rep.solution


def restrict_to_controls(g, prob):
    """L2 projection onto the control space (label-wise means when labels are set)."""
    labels = prob.control_labels
    if labels is None:
        return g
    counts = np.bincount(labels.ravel())
    means = np.bincount(labels.ravel(), weights=np.asarray(g).ravel()) / counts
    return means[labels]


def reduced_gradient(q, prob):
    """Riesz representative ``p + alpha q`` of ``j'(q)`` on the grid."""
    return evaluate(q, prob).gradient


def project_admissible(v, prob):
    return np.clip(v, prob.a, prob.b)


@dataclass
class DescentHistory:
    records: list = field(default_factory=list)
    converged: bool = False
    message: str = ""

    def append(self, **rec):
        self.records.append(rec)

    @property
    def j_values(self):
        return [r["j"] for r in self.records]

    @property
    def residuals(self):
        return [r["residual"] for r in self.records]

    def __len__(self):
        return len(self.records)


def _fixed_point_residual(q, d, prob):
    return l2_norm(q - project_admissible(q - d, prob))


def _active_fraction(q, prob):
    tol = prob.tau_act
    return float(np.mean((q - prob.a <= tol) | (prob.b - q <= tol)))


def optimize(prob, q0=None, tol=1e-9, max_iter=500, sigma=1e-4, max_halvings=40):
    """Projected gradient with Armijo backtracking along the projection arc.

    Iterates ``q+ = P(q - tau d)`` starting every iteration from
    ``tau = 1/alpha`` and halving until
    ``j(q+) <= j(q) - (sigma/tau) ||q+ - q||^2``. Stops when
    ``||q - P(q - d)|| <= tol``.

    Returns
    -------
    q : ndarray
        Final (or best, if not converged) control.
    history : DescentHistory
    """
    q = project_admissible(prob.zeros() if q0 is None else np.asarray(q0, dtype=float), prob)
    q = restrict_to_controls(q, prob)
    ev = evaluate(q, prob)
    hist = DescentHistory()
    for it in range(max_iter + 1):
        d = ev.gradient
        res = _fixed_point_residual(ev.q, d, prob)
        step = hist.records[-1]["next_step"] if hist.records else 0.0
        hist.append(iter=it, j=ev.j, residual=res, step=step,
                    active_fraction=_active_fraction(ev.q, prob), next_step=0.0)
        if res <= tol:
            hist.converged = True
            hist.message = "converged"
            break
        if it == max_iter:
            hist.message = f"max_iter={max_iter} reached"
            break
        tau = 1.0 / prob.alpha
        for _ in range(max_halvings):
            q_new = project_admissible(ev.q - tau * d, prob)
            ev_new = evaluate(q_new, prob)
            if ev_new.j <= ev.j - sigma / tau * l2_inner(q_new - ev.q, q_new - ev.q):
                break
            tau *= 0.5
        else:
            hist.message = "line search failed"
            break
        hist.records[-1]["next_step"] = tau
        ev = ev_new
    for rec in hist.records:
        rec.pop("next_step")
    return ev.q, hist


def hessian_form(q, w1, w2, prob, ev=None):
    """``j''(q)(w1, w2)`` via sensitivities and the adjoint.

    ``alpha (w1, w2) - int a_uu(u) phi1 phi2 p + sum_z phi1(z) phi2(z)``.
    """
    ev = ev or evaluate(q, prob)
    basis = prob.basis
    phi1 = ev.sensitivity(w1)
    phi2 = phi1 if w2 is w1 else ev.sensitivity(w2)
    value = prob.alpha * l2_inner(w1, w2)
    duu = prob.nonlinearity.duu(basis.grid(), synthesize(ev.u, basis))
    if np.any(duu):
        value -= l2_inner(duu * synthesize(phi1, basis) * synthesize(phi2, basis),
                          synthesize(ev.p, basis))
    if prob.observations:
        value += float(np.dot(point_eval(phi1, prob.points, basis),
                              point_eval(phi2, prob.points, basis)))
    return value


def _sign_sets(q, d, prob, tau_d, tau_act):
    lower = q - prob.a <= tau_act
    upper = prob.b - q <= tau_act
    strong = np.abs(d) > tau_d
    return lower, upper, strong


def critical_cone_membership(q_bar, d_bar, h, prob, tau_d=None, tau_act=None):
    """Check whether ``h`` lies in the discrete cone of critical directions.

    Returns ``(member, diagnostics)`` where diagnostics counts the grid points
    breaking each of the three defining conditions.
    """
    tau_d = prob.tau_d(d_bar) if tau_d is None else tau_d
    tau_act = prob.tau_act if tau_act is None else tau_act
    lower, upper, strong = _sign_sets(q_bar, d_bar, prob, tau_d, tau_act)
    diag = {
        "nonzero_on_strong": int(np.sum(strong & (h != 0))),
        "negative_on_lower": int(np.sum(lower & (h < -tau_d))),
        "positive_on_upper": int(np.sum(upper & (h > tau_d))),
    }
    return not any(diag.values()), diag


def project_to_critical_cone(h, q_bar, d_bar, prob, tau_d=None, tau_act=None):
    """Zero ``h`` where ``|d| > tau_d`` and clip its sign on the active sets."""
    tau_d = prob.tau_d(d_bar) if tau_d is None else tau_d
    tau_act = prob.tau_act if tau_act is None else tau_act
    lower, upper, strong = _sign_sets(q_bar, d_bar, prob, tau_d, tau_act)
    h = np.where(lower, np.maximum(h, 0.0), h)
    h = np.where(upper, np.minimum(h, 0.0), h)
    return np.where(strong, 0.0, h)


@dataclass
class OptimalityReport:
    """Stationarity and second-order diagnostics at a candidate control.

    The second-order part is a finite scan of sampled directions, not a proof.
    """

    d_bar: np.ndarray
    fixed_point_residual: float
    projected_gradient_residual: float
    sign_violations: dict
    second_order_samples: list
    active_set_fractions: dict
    growth_estimate: float
    growth_radius: float
    tau_d: float
    tau_act: float
    j: float

    @property
    def min_second_order(self):
        vals = [v for _, v, _ in self.second_order_samples]
        return min(vals) if vals else float("nan")

    def to_text(self):
        lines = [
            f"j = {float(self.j)!r}",
            f"fixed_point_residual = {float(self.fixed_point_residual)!r}",
            f"projected_gradient_residual = {float(self.projected_gradient_residual)!r}",
            f"tau_d = {float(self.tau_d)!r}",
            f"tau_act = {float(self.tau_act)!r}",
        ]
        lines += [f"sign_violations.{k} = {v}" for k, v in self.sign_violations.items()]
        lines += [f"active_fraction.{k} = {float(v)!r}" for k, v in self.active_set_fractions.items()]
        lines += [
            f"second_order.n_samples = {len(self.second_order_samples)}",
            f"second_order.min = {float(self.min_second_order)!r}",
            f"growth.estimate = {float(self.growth_estimate)!r}",
            f"growth.radius = {float(self.growth_radius)!r}",
            "note = second-order values come from sampled directions (a scan, not a proof)",
        ]
        lines += [f"second_order.{lab} = {float(v)!r}" for lab, v, _ in self.second_order_samples]
        return "\n".join(lines) + "\n"


def stationarity_report(q_bar, prob, n_dir=64, seed=0, growth_radii=(1e-1, 1e-2, 1e-3),
                        n_growth=8):
    """Certify first-order conditions and scan second-order ones at ``q_bar``.

    Sign violations count grid points breaking ``d = 0`` (interior),
    ``d >= 0`` (at ``a``) or ``d <= 0`` (at ``b``) beyond ``tau_d``.
    Second-order samples are ``j''(q)(h, h)`` for Gaussian directions pushed
    into the discrete critical cone and normalized in L2. The growth estimate
    is the smallest ``(j(q) - j(q_bar)) / (||q - q_bar||^2 / 2)`` over
    admissible perturbations of the given radii.
    """
    rng = np.random.default_rng(seed)
    q_bar = np.asarray(q_bar, dtype=float)
    ev = evaluate(q_bar, prob)
    d = ev.gradient
    tau_d, tau_act = prob.tau_d(d), prob.tau_act
    lower, upper, strong = _sign_sets(q_bar, d, prob, tau_d, tau_act)
    interior = ~(lower | upper)
    violations = {
        "interior": int(np.sum(interior & (np.abs(d) > tau_d))),
        "lower": int(np.sum(lower & ~upper & (d < -tau_d))),
        "upper": int(np.sum(upper & ~lower & (d > tau_d))),
    }
    p_grid = restrict_to_controls(synthesize(ev.p, prob.basis), prob)
    fp = l2_norm(q_bar - project_admissible(-p_grid / prob.alpha, prob))

    shape = q_bar.shape
    samples = []
    for k in range(n_dir):
        h = restrict_to_controls(rng.standard_normal(shape), prob)
        h = project_to_critical_cone(h, q_bar, d, prob, tau_d, tau_act)
        nrm = l2_norm(h)
        if nrm == 0.0:
            samples.append((f"dir{k:03d}", 0.0, 0.0))
            continue
        h = h / nrm
        samples.append((f"dir{k:03d}", hessian_form(q_bar, h, h, prob, ev=ev), 1.0))

    growth = np.inf
    for rho in growth_radii:
        for _ in range(n_growth):
            h = restrict_to_controls(rng.standard_normal(shape), prob)
            h /= l2_norm(h)
            q = project_admissible(q_bar + rho * h, prob)
            dq = l2_inner(q - q_bar, q - q_bar)
            if dq == 0.0:
                continue
            growth = min(growth, (evaluate(q, prob).j - ev.j) / (0.5 * dq))

    return OptimalityReport(
        d_bar=d,
        fixed_point_residual=fp,
        projected_gradient_residual=_fixed_point_residual(q_bar, d, prob),
        sign_violations=violations,
        second_order_samples=samples,
        active_set_fractions={
            "lower": float(np.mean(lower)),
            "upper": float(np.mean(upper)),
            "strongly_active": float(np.mean(strong)),
        },
        growth_estimate=float(growth),
        growth_radius=float(max(growth_radii, default=0.0)),
        tau_d=tau_d,
        tau_act=tau_act,
        j=ev.j,
    )


def hessian_lipschitz_probe(q1, q2, w, prob):
    """``|j''(q1)(w,w) - j''(q2)(w,w)| / (||q1 - q2|| ||w||^2)``."""
    dq = l2_norm(np.asarray(q1, dtype=float) - np.asarray(q2, dtype=float))
    if dq == 0.0:
        raise ValueError("controls coincide; Hessian Lipschitz ratio undefined")
    h1 = hessian_form(q1, w, w, prob)
    h2 = hessian_form(q2, w, w, prob)
    return abs(h1 - h2) / (dq * l2_inner(w, w))

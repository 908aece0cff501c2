"""Dirichlet eigenbasis of the Laplacian on the unit square.

Fields are carried in two representations:

* coefficient arrays of shape ``(K, K)``, entry ``[m-1, n-1]`` multiplying
  ``phi_mn(x, y) = 2 sin(m pi x) sin(n pi y)``;
* grid arrays of shape ``(M, M)``, entry ``[i, j]`` holding the value at the
  cell midpoint ``((i + 1/2)/M, (j + 1/2)/M)``.

The midpoint rule is exact for products of sine modes up to ``M - 1``, so
``analyze(synthesize(w)) == w`` whenever ``K <= M - 1``.
"""

import math
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "EigenBasis",
    "eigenvalue",
    "eval_basis",
    "grid_points",
    "synthesize",
    "analyze",
    "frac_power_apply",
    "hr_norm",
    "l2_inner",
    "l2_norm",
    "point_eval",
    "check_interior",
]


def eigenvalue(m, n):
    """Dirichlet eigenvalue ``pi^2 (m^2 + n^2)`` of mode ``(m, n)``."""
    if int(m) != m or int(n) != n or m < 1 or n < 1:
        raise ValueError(f"mode indices must be positive integers, got ({m}, {n})")
    return np.pi**2 * (m * m + n * n)


def check_interior(point):
    """Return ``point`` as a float pair, raising DomainError unless it is in (0, 1)^2."""
    x, y = (float(c) for c in point)
    if not (0.0 < x < 1.0 and 0.0 < y < 1.0):
        raise DomainError(f"point ({x}, {y}) is not strictly inside the unit square")
    return x, y


def eval_basis(m, n, point):
    """Value of the L2-normalized eigenfunction ``phi_mn`` at an interior point."""
    x, y = check_interior(point)
    eigenvalue(m, n)
    return 2.0 * np.sin(m * np.pi * x) * np.sin(n * np.pi * y)


def grid_points(M):
    """Midpoint coordinates ``(i + 1/2)/M`` along one axis."""
    return (np.arange(M) + 0.5) / M


class EigenBasis:
    """Truncated eigenbasis ``{phi_mn : 1 <= m, n <= K}`` with its quadrature grid.

    Parameters
    ----------
    K : int
        Modes per dimension.
    s : float
        Fractional exponent, ``1/2 < s < 1``.
    theta : float, optional
        Dual exponent with ``1 - s < theta < s``. Only affects reported norms.
    M : int, optional
        Midpoint grid cells per dimension; defaults to ``4 K`` so cubic
        products of K-mode fields integrate without aliasing.
    """

    def __init__(self, K, s, theta=0.5, M=None):
        if int(K) != K or K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {K}")
        if not 0.5 < s < 1.0:
            raise ConfigurationError(f"s must lie in (1/2, 1), got {s}")
        if not 1.0 - s < theta < s:
            raise ConfigurationError(
                f"theta must lie in (1 - s, s) = ({1 - s:g}, {s:g}), got {theta}"
            )
        M = 4 * int(K) if M is None else M
        if int(M) != M or M < K + 1:
            raise ConfigurationError(f"grid size M = {M} must be at least K + 1 = {K + 1}")
        self.K = int(K)
        self.s = float(s)
        self.theta = float(theta)
        self.M = int(M)

    def __repr__(self):
        return f"EigenBasis(K={self.K}, s={self.s}, theta={self.theta}, M={self.M})"

    @property
    def N(self):
        return self.K * self.K

    @cached_property
    def modes(self):
        return np.arange(1, self.K + 1)

    @cached_property
    def eigenvalues(self):
        m = self.modes
        lam = np.pi**2 * (m[:, None] ** 2 + m[None, :] ** 2)
        lam.setflags(write=False)
        return lam

    def sine_table(self, M=None):
        """``sqrt(2) sin(m pi x_i)`` with shape ``(M, K)``."""
        M = self.M if M is None else int(M)
        return _sine_table(M, self.K)

    def lam_pow(self, r):
        return self.eigenvalues**r

    def grid(self, M=None):
        """Meshgrid ``(X, Y)`` of cell midpoints, ``indexing='ij'``."""
        t = grid_points(self.M if M is None else M)
        return np.meshgrid(t, t, indexing="ij")

    def basis_at(self, points):
        """Matrix of eigenfunction values, shape ``(len(points), K, K)``."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        for p in pts:
            check_interior(p)
        sx = np.sqrt(2.0) * np.sin(np.pi * pts[:, 0:1] * self.modes[None, :])
        sy = np.sqrt(2.0) * np.sin(np.pi * pts[:, 1:2] * self.modes[None, :])
        return sx[:, :, None] * sy[:, None, :]


_SINE_CACHE = {}


def _sine_table(M, K):
    key = (M, K)
    tab = _SINE_CACHE.get(key)
    if tab is None:
        x = grid_points(M)
        tab = np.sqrt(2.0) * np.sin(np.pi * np.outer(x, np.arange(1, K + 1)))
        tab.setflags(write=False)
        _SINE_CACHE[key] = tab
    return tab


def synthesize(w, basis, M=None):
    """Evaluate ``sum w_mn phi_mn`` at the midpoints of an ``M x M`` grid."""
    M = basis.M if M is None else int(M)
    if M < basis.K + 1:
        raise ConfigurationError(f"grid size M = {M} must be at least K + 1 = {basis.K + 1}")
    S = basis.sine_table(M)
    return S @ np.asarray(w, dtype=float) @ S.T


def analyze(g, basis):
    """Midpoint-rule projection ``w_mn = M^-2 sum_ij g_ij phi_mn(x_ij)``."""
    g = np.asarray(g, dtype=float)
    M = g.shape[0]
    if g.shape != (M, M):
        raise ConfigurationError(f"grid function must be square, got shape {g.shape}")
    if M < basis.K + 1:
        raise ConfigurationError(f"grid size M = {M} must be at least K + 1 = {basis.K + 1}")
    S = basis.sine_table(M)
    return S.T @ g @ S / M**2


def frac_power_apply(w, r, basis):
    """Apply ``(-Delta)^r`` in the truncated basis."""
    return basis.lam_pow(r) * w


def hr_norm(w, r, basis):
    """Spectral ``H^r`` norm ``(sum lambda_mn^r |w_mn|^2)^(1/2)``; negative ``r`` gives dual norms."""
    w = np.asarray(w, dtype=float)
    return float(np.sqrt(np.sum(basis.lam_pow(r) * w * w)))


def l2_inner(f, g):
    """Midpoint quadrature of the L2 inner product of two grid functions."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ConfigurationError(f"grid mismatch: {f.shape} vs {g.shape}")
    return float(np.sum(f * g)) / f.size


def l2_norm(f):
    return math.sqrt(l2_inner(f, f))


def point_eval(w, points, basis):
    """Evaluate a coefficient field at interior points by direct mode summation."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    vals = np.einsum("pmn,mn->p", basis.basis_at(pts), np.asarray(w, dtype=float))
    return float(vals[0]) if single else vals

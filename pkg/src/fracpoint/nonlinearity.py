"""Reaction nonlinearities ``a(x, u)`` with their first two u-derivatives.

Every callable takes ``(x, u)`` where ``x`` is a tuple ``(X, Y)`` of
coordinate arrays broadcastable against ``u``. The built-in entries ignore
``x`` but user-supplied ones may use it.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AssumptionViolation, ConfigurationError

NEG_TOL = 1e-13


@dataclass(frozen=True)
class Nonlinearity:
    name: str
    value: Callable
    du: Callable
    duu: Callable
    polynomial_degree: int | None = None

    @property
    def is_polynomial(self):
        return self.polynomial_degree is not None

    @property
    def is_zero(self):
        return self.polynomial_degree == -1


def _zero_like(x, u):
    return np.zeros_like(np.asarray(u, dtype=float))


def zero():
    return Nonlinearity("zero", _zero_like, _zero_like, _zero_like, polynomial_degree=-1)


def linear(gamma=1.0):
    if gamma < 0:
        raise AssumptionViolation(f"linear reaction needs gamma >= 0, got {gamma}")
    gamma = float(gamma)
    return Nonlinearity(
        f"linear(gamma={gamma:g})",
        lambda x, u: gamma * np.asarray(u, dtype=float),
        lambda x, u: np.full_like(np.asarray(u, dtype=float), gamma),
        _zero_like,
        polynomial_degree=1,
    )


def cubic():
    return Nonlinearity(
        "cubic",
        lambda x, u: np.asarray(u, dtype=float) ** 3,
        lambda x, u: 3.0 * np.asarray(u, dtype=float) ** 2,
        lambda x, u: 6.0 * np.asarray(u, dtype=float),
        polynomial_degree=3,
    )


def exponential():
    return Nonlinearity(
        "exponential",
        lambda x, u: np.expm1(u),
        lambda x, u: np.exp(u),
        lambda x, u: np.exp(u),
    )


def arctan():
    def duu(x, u):
        u = np.asarray(u, dtype=float)
        return -2.0 * u / (1.0 + u * u) ** 2

    return Nonlinearity(
        "arctan",
        lambda x, u: np.asarray(u, dtype=float) + np.arctan(u),
        lambda x, u: 1.0 + 1.0 / (1.0 + np.asarray(u, dtype=float) ** 2),
        duu,
    )


REGISTRY = {
    "zero": zero,
    "linear": linear,
    "cubic": cubic,
    "exponential": exponential,
    "arctan": arctan,
}


def get_nonlinearity(name, **params):
    """Build a registry nonlinearity by name, e.g. ``get_nonlinearity("linear", gamma=2)``."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown nonlinearity {name!r}; choose from {sorted(REGISTRY)}"
        ) from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for nonlinearity {name!r}: {exc}") from None


def registry_members():
    """One default-parameter instance of every registry entry."""
    return [factory() for factory in REGISTRY.values()]


def validate_nonlinearity(nl, u_range=(-5.0, 5.0), n_samples=257, seed=0):
    """Sample ``nl`` on ``[0,1]^2 x u_range`` and check monotonicity and finiteness.

    Raises AssumptionViolation on a negative u-derivative (beyond ``NEG_TOL``)
    or a non-finite value, and returns the sampled bound on
    ``|du| + |duu|`` otherwise.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, n_samples)
    Y = rng.uniform(0.0, 1.0, n_samples)
    U = np.linspace(u_range[0], u_range[1], n_samples)
    v, d1, d2 = nl.value((X, Y), U), nl.du((X, Y), U), nl.duu((X, Y), U)
    for label, arr in (("value", v), ("du", d1), ("duu", d2)):
        if not np.all(np.isfinite(arr)):
            raise AssumptionViolation(f"{nl.name}: non-finite {label} on u in {u_range}")
    if np.min(d1) < -NEG_TOL:
        raise AssumptionViolation(
            f"{nl.name}: du/du = {np.min(d1):.3e} < 0 violates monotonicity"
        )
    return float(np.max(np.abs(d1) + np.abs(d2)))

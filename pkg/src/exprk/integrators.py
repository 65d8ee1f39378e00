"""Fixed-step time steppers for semilinear and general first-order systems.

Exponential methods (``etd_euler``, ``exprk2``) consume a semilinear problem
``u' = A u + g(t, u)`` and a table of precomputed propagators
``e^{hA}, phi_1(hA), phi_2(hA)``.  Classical methods (``rk2``, ``rk4``) and the
one-stage Rosenbrock scheme (``rb2``) consume ``u' = F(t, u)``.

``rb2`` uses only ``J = dF/du``; no ``dF/dt`` term is added, so on
non-autonomous problems it is first order.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, ShapeError, StepFailureError
from .matfun import PhiTable

METHODS = ("etd_euler", "exprk2", "rk2", "rk4", "rb2")
EXPONENTIAL_METHODS = ("etd_euler", "exprk2")
GRIDS = ("exact", "uniform")

_ALIASES = {
    "etd": "etd_euler",
    "etdeuler": "etd_euler",
    "exp_euler": "etd_euler",
    "expeuler": "etd_euler",
    "exprk": "exprk2",
}


def normalize_method(tag):
    """Canonical method tag (``'ETD-Euler'`` -> ``'etd_euler'``)."""
    key = str(tag).strip().lower().replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in METHODS:
        raise ConfigurationError(f"unknown method {tag!r}; expected one of {', '.join(METHODS)}")
    return key


def _vector(u, name="u"):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.ndim != 1:
        raise ShapeError(f"{name} must be a vector, got shape {u.shape}")
    return u


def finite_difference_jacobian(F, t, u):
    """Central-difference Jacobian ``dF/du`` with steps ``sqrt(eps) * max(1, |u_j|)``."""
    u = _vector(u)
    n = u.shape[0]
    J = np.empty((n, n))
    root_eps = math.sqrt(np.finfo(float).eps)
    for j in range(n):
        d = root_eps * max(1.0, abs(u[j]))
        up = u.copy()
        um = u.copy()
        up[j] += d
        um[j] -= d
        fp = np.asarray(F(t, up), dtype=float)
        fm = np.asarray(F(t, um), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise DomainError(f"non-finite F evaluation while differencing component {j}")
        J[:, j] = (fp - fm) / (up[j] - um[j])
    return J


@dataclass(frozen=True)
class GeneralProblem:
    """``u' = F(t, u)`` on ``[t0, tf]`` with an optional analytic Jacobian."""

    F: Callable
    u0: np.ndarray
    t0: float
    tf: float
    jacobian: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "u0", _vector(self.u0, "u0"))
        if not self.tf > self.t0:
            raise DomainError(f"need tf > t0, got [{self.t0}, {self.tf}]")

    @property
    def dim(self):
        return self.u0.shape[0]

    def jacobian_at(self, t, u):
        if self.jacobian is not None:
            return np.asarray(self.jacobian(t, u), dtype=float)
        return finite_difference_jacobian(self.F, t, u)

    def as_general(self):
        return self

    def as_semilinear(self):
        raise ConfigurationError("exponential methods need a semilinear (A, g) splitting")


@dataclass(frozen=True)
class SemilinearProblem:
    """``u' = A u + g(t, u)`` on ``[t0, tf]``."""

    A: np.ndarray
    g: Callable
    u0: np.ndarray
    t0: float
    tf: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        u0 = _vector(self.u0, "u0")
        if A.shape != (u0.shape[0], u0.shape[0]):
            raise ShapeError(f"A has shape {A.shape}, state has dimension {u0.shape[0]}")
        if not self.tf > self.t0:
            raise DomainError(f"need tf > t0, got [{self.t0}, {self.tf}]")
        if not np.all(np.isfinite(self.g(self.t0, u0))):
            raise DomainError("g(t0, u0) is not finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "u0", u0)

    @property
    def dim(self):
        return self.u0.shape[0]

    def F(self, t, u):
        return self.A @ u + self.g(t, u)

    def as_semilinear(self):
        return self

    def as_general(self):
        return GeneralProblem(self.F, self.u0, self.t0, self.tf)


@dataclass(frozen=True)
class PrecomputedPropagators:
    h: float
    exp_hA: np.ndarray
    phi1_hA: np.ndarray
    phi2_hA: np.ndarray

    @classmethod
    def build(cls, A, h):
        table = PhiTable.build(A, h, order=2)
        return cls(h, *table.mats)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    method: str
    h: float
    wall_time: float = 0.0
    finite: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def final_time(self):
        return float(self.times[-1])

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def n_steps(self):
        return len(self.times) - 1


# -- steppers ----------------------------------------------------------------


def step_etd_euler(p, pre, t, u):
    return pre.exp_hA @ u + pre.h * (pre.phi1_hA @ p.g(t, u))


def step_exprk2(p, pre, t, u):
    h = pre.h
    gn = p.g(t, u)
    a = pre.exp_hA @ u + h * (pre.phi1_hA @ gn)
    return a + h * (pre.phi2_hA @ (p.g(t + h, a) - gn))


def step_rk2(p, t, u, h):
    k1 = p.F(t, u)
    k2 = p.F(t + 0.5 * h, u + 0.5 * h * k1)
    return u + h * k2


def step_rk4(p, t, u, h):
    K1 = h * p.F(t, u)
    K2 = h * p.F(t + 0.5 * h, u + 0.5 * K1)
    K3 = h * p.F(t + 0.5 * h, u + 0.5 * K2)
    K4 = h * p.F(t + h, u + K3)
    return u + K1 / 6 + K2 / 3 + K3 / 3 + K4 / 6


def step_rb2(p, t, u, h, gamma=0.5):
    """``u + h (I - gamma h J)^{-1} F(t, u)`` with ``J = dF/du`` at ``(t, u)``."""
    f = p.F(t, u)
    M = np.eye(u.shape[0]) - gamma * h * p.jacobian_at(t, u)
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(f))):
        return np.full_like(u, np.nan)
    try:
        k = np.linalg.solve(M, f)
    except np.linalg.LinAlgError:
        raise StepFailureError(f"singular Rosenbrock matrix at t={t}", condition=np.linalg.cond(M)) from None
    return u + h * k


# -- driver ------------------------------------------------------------------


def _grid(t0, tf, h, grid):
    span = tf - t0
    if grid == "uniform":
        n = max(1, round(span / h))
        return np.array([t0 + i * h for i in range(n + 1)])
    n = max(1, math.ceil(span / h * (1.0 - 1e-12)))
    times = np.array([t0 + i * h for i in range(n)] + [tf])
    return times


def integrate(problem, method, h, *, gamma=0.5, grid="exact"):
    """Advance ``problem`` from ``t0`` to ``tf`` with fixed step ``h``.

    ``grid='exact'`` takes ``ceil((tf - t0)/h)`` steps, shortening the last one
    so the run ends on ``tf``.  ``grid='uniform'`` takes ``round((tf - t0)/h)``
    steps of exactly ``h`` and ends near ``tf``; this is the protocol behind the
    published benchmark tables.

    A non-finite state stops the run; the trajectory is returned with
    ``finite=False`` and the offending state as its last entry.
    """
    method = normalize_method(method)
    if grid not in GRIDS:
        raise ConfigurationError(f"unknown grid {grid!r}; expected one of {GRIDS}")
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise ConfigurationError(f"step size must be positive, got {h!r}")
    t0, tf = float(problem.t0), float(problem.tf)
    if h > (tf - t0) * (1 + 1e-12):
        raise ConfigurationError(f"step size {h} exceeds the window length {tf - t0}")

    if method in EXPONENTIAL_METHODS:
        p = problem.as_semilinear()
        stepper = step_etd_euler if method == "etd_euler" else step_exprk2
    else:
        p = problem.as_general()

    times = _grid(t0, tf, h, grid)
    n = len(times) - 1
    states = np.empty((n + 1, p.dim))
    u = p.u0.copy()
    states[0] = u
    finite = True
    last = n

    start = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        props = {}
        for i in range(n):
            t = times[i]
            dt = times[i + 1] - t
            if method in EXPONENTIAL_METHODS:
                key = dt if not math.isclose(dt, h, rel_tol=1e-13) else h
                pre = props.get(key)
                if pre is None:
                    pre = props[key] = PrecomputedPropagators.build(p.A, key)
                u = stepper(p, pre, t, u)
            elif method == "rk2":
                u = step_rk2(p, t, u, dt)
            elif method == "rk4":
                u = step_rk4(p, t, u, dt)
            else:
                u = step_rb2(p, t, u, dt, gamma)
            states[i + 1] = u
            if not np.all(np.isfinite(u)):
                finite = False
                last = i + 1
                break
    wall = time.perf_counter() - start

    return Trajectory(
        times=times[: last + 1].copy(),
        states=states[: last + 1].copy(),
        method=method,
        h=h,
        wall_time=wall,
        finite=finite,
        meta={"grid": grid, "gamma": gamma if method == "rb2" else None},
    )

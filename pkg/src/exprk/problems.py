"""Benchmark problems with exact or reference solutions.

``toy``      u' = lambda u + 2u/(1+u^2), lambda = -1000, u(0) = 1
``cm1d``     u' = k u + sin t, k = -100, u(0) = 1 on [0, pi/2] (closed form known)
``duffing``  u'' + omega u + k u^3 = 0 as a first-order system in (u, v)

Every problem carries both a semilinear splitting ``(A, g)`` and the full
right-hand side ``F`` with an analytic Jacobian.
"""

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, OracleFailureError
from .integrators import GeneralProblem, SemilinearProblem, step_rk4


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    A: np.ndarray
    g: Callable
    F: Callable
    jacobian: Callable
    u0: np.ndarray
    t0: float
    tf: float
    exact: Optional[Callable] = None
    invariant: Optional[Callable] = None
    parameters: dict = field(default_factory=dict)
    h_ref: float = 1e-4

    @property
    def dim(self):
        return len(self.u0)

    def as_semilinear(self):
        return SemilinearProblem(self.A, self.g, self.u0, self.t0, self.tf)

    def as_general(self):
        return GeneralProblem(self.F, self.u0, self.t0, self.tf, jacobian=self.jacobian)

    def replace(self, **changes):
        """Copy with a different window or initial state."""
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        kw["u0"] = np.atleast_1d(np.asarray(kw["u0"], dtype=float))
        return ProblemSpec(**kw)


def toy_model(lam=-1000.0, u0=1.0, t0=0.0, tf=0.1):
    A = np.array([[lam]])

    def g(t, u):
        return 2.0 * u / (1.0 + u * u)

    def F(t, u):
        return lam * u + 2.0 * u / (1.0 + u * u)

    def jacobian(t, u):
        x = u[0]
        return np.array([[lam + 2.0 * (1.0 - x * x) / (1.0 + x * x) ** 2]])

    return ProblemSpec(
        name="toy",
        A=A, g=g, F=F, jacobian=jacobian,
        u0=np.array([float(u0)]), t0=float(t0), tf=float(tf),
        parameters={"lam": float(lam)},
        h_ref=1e-6,
    )


def cm1d(k=-100.0, u0=1.0, t0=0.0, tf=math.pi / 2):
    """Linear stiff test ``u' = k u + sin t``.

    The exact solution is ``C e^{k t} - (cos t + k sin t)/(1 + k^2)`` with
    ``C`` fixed by ``u(0)``; for ``u0 = 1`` this is the familiar
    ``-(-e^{kt}(2 + k^2) + cos t + k sin t)/(1 + k^2)``.
    """
    k = float(k)
    u0 = float(u0)
    if t0 != 0.0:
        raise ConfigurationError("cm1d closed form assumes t0 = 0")
    c = u0 + 1.0 / (1.0 + k * k)
    A = np.array([[k]])

    def g(t, u):
        return np.array([math.sin(t)])

    def F(t, u):
        return k * u + math.sin(t)

    def jacobian(t, u):
        return np.array([[k]])

    def exact(t):
        return np.array([c * math.exp(k * t) - (math.cos(t) + k * math.sin(t)) / (1.0 + k * k)])

    return ProblemSpec(
        name="cm1d",
        A=A, g=g, F=F, jacobian=jacobian,
        u0=np.array([u0]), t0=0.0, tf=float(tf),
        exact=exact,
        parameters={"k": k},
        h_ref=1e-5,
    )


def duffing_energy(state, omega=1.0, k=100.0):
    u, v = state[0], state[1]
    return 0.5 * v * v + 0.5 * omega * u * u + 0.25 * k * u**4


def duffing(omega=1.0, k=100.0, u0=(1.0, 0.0), t0=0.0, tf=10.0):
    """Unforced Duffing oscillator, ``A = [[0, 1], [-omega, 0]]``, ``g = (0, -k u^3)``."""
    omega = float(omega)
    k = float(k)
    A = np.array([[0.0, 1.0], [-omega, 0.0]])

    def g(t, s):
        return np.array([0.0, -k * s[0] ** 3])

    def F(t, s):
        u, v = s[0], s[1]
        return np.array([v, -omega * u - k * u**3])

    def jacobian(t, s):
        return np.array([[0.0, 1.0], [-omega - 3.0 * k * s[0] ** 2, 0.0]])

    def invariant(s):
        return duffing_energy(s, omega, k)

    return ProblemSpec(
        name="duffing",
        A=A, g=g, F=F, jacobian=jacobian,
        u0=np.asarray(u0, dtype=float), t0=float(t0), tf=float(tf),
        invariant=invariant,
        parameters={"omega": omega, "k": k},
        h_ref=1e-4,
    )


PROBLEMS = {"toy": toy_model, "cm1d": cm1d, "duffing": duffing}


def get_problem(name, **params):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEMS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name}: {exc}") from None


# -- reference solutions -----------------------------------------------------

REFERENCE_RTOL = 1e-8

_cache = {}
_cache_lock = threading.Lock()


def _rk4_uniform(p, t0, t1, n):
    gp = p.as_general()
    h = (t1 - t0) / n
    u = gp.u0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            u = step_rk4(gp, t0 + i * h, u, h)
    return u


def _cache_key(p, t_eval, h_ref):
    return (
        p.name,
        tuple(sorted(p.parameters.items())),
        tuple(p.u0.tolist()),
        p.t0,
        float(t_eval),
        float(h_ref),
    )


def reference_solution(p, t_eval, h_ref=None):
    """Tiny-step RK4 state at ``t_eval``, verified against a half-step rerun.

    ``h_ref`` defaults to the problem's own reference step.  Raises
    :class:`OracleFailureError` when the result is non-finite or the two runs
    disagree by more than ``1e-8`` relative.  Results are cached.
    """
    h_ref = float(p.h_ref if h_ref is None else h_ref)
    key = _cache_key(p, t_eval, h_ref)
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit.copy()

    span = float(t_eval) - p.t0
    if span == 0.0:
        return p.u0.copy()
    n = max(1, math.ceil(abs(span) / h_ref * (1.0 - 1e-12)))
    coarse = _rk4_uniform(p, p.t0, float(t_eval), n)
    fine = _rk4_uniform(p, p.t0, float(t_eval), 2 * n)
    if not (np.all(np.isfinite(coarse)) and np.all(np.isfinite(fine))):
        raise OracleFailureError(f"non-finite reference for {p.name} at t={t_eval}")
    scale = np.max(np.abs(fine))
    gap = np.max(np.abs(coarse - fine))
    if gap > REFERENCE_RTOL * scale:
        raise OracleFailureError(
            f"reference for {p.name} at t={t_eval} not converged: "
            f"h={h_ref:g} and h/2 differ by {gap / scale:.3e} relative"
        )
    with _cache_lock:
        _cache[key] = fine
    return fine.copy()


def solution_at(p, t):
    """Exact solution when known, otherwise the reference solution."""
    if p.exact is not None:
        return np.atleast_1d(p.exact(t))
    return reference_solution(p, t)

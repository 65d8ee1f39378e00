"""Exponential and phi-function kernels.

Scalar phi-functions are available through three evaluation routes (upward
recursion, Taylor series, trapezoidal contour average) plus an ``auto``
dispatcher.  Dense matrix routines use scaling and squaring with a truncated
Taylor series; actions ``e^{tA} B`` are formed without building ``e^{tA}``,
either by repeated truncated Taylor steps or by Arnoldi projection.

The phi-functions follow

    phi_0(z) = e^z,    phi_{k+1}(z) = (phi_k(z) - 1/k!) / z,

equivalently ``phi_k(z) = 1/(k-1)! * int_0^1 e^{(1-s) z} s^{k-1} ds``.
"""

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonFiniteResultError, ShapeError, UnsupportedOrderError

MAX_PHI_ORDER = 8
MAX_DENSE_PHI_ORDER = 4
TAYLOR_DEGREE = 30

_TAYLOR_TOL = 1e-17
_TAYLOR_CAP = 60
_CONTOUR_NODES = 32
_EPS = np.finfo(float).eps


class PhiStrategy(str, enum.Enum):
    RECURSION = "recursion"
    TAYLOR = "taylor"
    CONTOUR = "contour"
    AUTO = "auto"


# -- scalar phi-functions -----------------------------------------------------


def _expm1(z):
    """``e^z - 1`` without cancellation for small complex ``z``."""
    if z.imag == 0.0:
        return complex(math.expm1(z.real))
    x, y = z.real, z.imag
    s = math.sin(0.5 * y)
    real = math.expm1(x) * math.cos(y) - 2.0 * s * s
    return complex(real, math.exp(x) * math.sin(y))


def _phi_recursion(k, z):
    if k == 0:
        return cmath.exp(z)
    phi = _expm1(z) / z
    fact = 1.0
    for j in range(1, k):
        fact *= j
        phi = (phi - 1.0 / fact) / z
    return phi


def _phi_taylor(k, z):
    term = 1.0 / math.factorial(k)
    total = complex(term)
    for j in range(1, _TAYLOR_CAP + 1):
        term = term * z / (k + j)
        total += term
        if abs(term) < _TAYLOR_TOL * abs(total):
            break
    return total


def _phi_point(k, t):
    # node evaluator for the contour rule; the series is cancellation-free
    # for |t| < 2 and the recursion is stable beyond it for every k <= 8
    return _phi_taylor(k, t) if abs(t) < 2.0 else _phi_recursion(k, t)


def _phi_contour(k, z):
    theta = 2.0 * np.pi * (np.arange(_CONTOUR_NODES) + 0.5) / _CONTOUR_NODES
    if z.imag == 0.0:
        # conjugate-symmetric nodes: upper half only, real part of the mean
        half = theta[: _CONTOUR_NODES // 2]
        vals = [_phi_point(k, z + cmath.exp(1j * th)) for th in half]
        return complex(math.fsum(v.real for v in vals) / len(vals))
    vals = [_phi_point(k, z + cmath.exp(1j * th)) for th in theta]
    return sum(vals) / len(vals)


def _recursion_radius(k):
    # below this modulus the recursion loses more than ~1e-13 for order k
    return max(1.0, k / 4.0)


def phi_scalar(k, z, strategy=PhiStrategy.AUTO):
    """Evaluate ``phi_k(z)`` for a scalar ``z``.

    ``strategy`` selects the evaluation route; ``auto`` uses the Taylor series
    for ``|z| < 0.5``, the contour average up to ``max(1, k/4)`` and the
    recursion beyond.  ``phi_0`` is always the host exponential.
    """
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise DomainError(f"phi index must be a non-negative integer, got {k!r}")
    k = int(k)
    if k > MAX_PHI_ORDER:
        raise UnsupportedOrderError(f"phi_{k} requested; maximum supported order is {MAX_PHI_ORDER}")
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"phi argument must be finite, got {z!r}")
    strategy = PhiStrategy(strategy)

    if k == 0:
        return cmath.exp(z)
    if z == 0:
        return complex(1.0 / math.factorial(k))

    if strategy is PhiStrategy.AUTO:
        r = abs(z)
        if r < 0.5:
            strategy = PhiStrategy.TAYLOR
        elif r < _recursion_radius(k):
            strategy = PhiStrategy.CONTOUR
        else:
            strategy = PhiStrategy.RECURSION

    if strategy is PhiStrategy.RECURSION:
        return _phi_recursion(k, z)
    if strategy is PhiStrategy.TAYLOR:
        return _phi_taylor(k, z)
    return _phi_contour(k, z)


# -- dense matrix functions ---------------------------------------------------


def _square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ShapeError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


def _scaling_exponent(norm):
    if norm <= 1.0:
        return 0
    return max(0, math.ceil(math.log2(norm)))


def expm_dense(A):
    """Matrix exponential by scaling and squaring.

    ``A`` is scaled by ``2^-s`` with ``s = max(0, ceil(log2 ||A||_1))`` so the
    scaled norm is at most one, the degree-30 Taylor polynomial is evaluated in
    Horner form and the result is squared ``s`` times.
    """
    A = _square(A)
    n = A.shape[0]
    s = _scaling_exponent(np.linalg.norm(A, 1))
    X = A / 2.0**s
    eye = np.eye(n)
    E = eye.copy()
    for j in range(TAYLOR_DEGREE, 0, -1):
        E = eye + (X @ E) / j
    if not np.all(np.isfinite(E)):
        raise NonFiniteResultError("non-finite Taylor approximant", stage=0)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, s + 1):
            E = E @ E
            if not np.all(np.isfinite(E)):
                raise NonFiniteResultError(f"overflow at squaring {i} of {s}", stage=i)
    return E


def _augmented_block(A, k):
    # [[A, I, 0, ...], [0, 0, I, ...], ..., [0, ..., 0]] of size n(k+1)
    n = A.shape[0]
    big = np.zeros((n * (k + 1), n * (k + 1)))
    big[:n, :n] = A
    for j in range(k):
        big[j * n:(j + 1) * n, (j + 1) * n:(j + 2) * n] = np.eye(n)
    return big


def phi_dense(k, A):
    """``phi_k(A)`` read from the exponential of a block-augmented matrix.

    The top-right ``n x n`` block of ``exp([[A, I, 0], [0, 0, I], ...])`` with
    ``k`` shift blocks equals ``phi_k(A)``.
    """
    if int(k) != k or k < 0:
        raise DomainError(f"phi index must be a non-negative integer, got {k!r}")
    k = int(k)
    if k > MAX_DENSE_PHI_ORDER:
        raise UnsupportedOrderError(f"dense phi_{k} requested; maximum is {MAX_DENSE_PHI_ORDER}")
    A = _square(A)
    if k == 0:
        return expm_dense(A)
    n = A.shape[0]
    E = expm_dense(_augmented_block(A, k))
    return E[:n, k * n:]


@dataclass(frozen=True)
class PhiTable:
    """Dense ``[e^{hA}, phi_1(hA), ..., phi_p(hA)]`` for one step size."""

    h: float
    order: int
    mats: tuple

    @classmethod
    def build(cls, A, h, order=2):
        A = _square(A)
        if not (math.isfinite(h) and h > 0):
            raise DomainError(f"step size must be positive and finite, got {h!r}")
        if order > MAX_DENSE_PHI_ORDER:
            raise UnsupportedOrderError(f"phi table order {order} exceeds {MAX_DENSE_PHI_ORDER}")
        n = A.shape[0]
        if order == 0:
            return cls(h, 0, (expm_dense(h * A),))
        E = expm_dense(_augmented_block(h * A, order))
        mats = tuple(E[:n, j * n:(j + 1) * n].copy() for j in range(order + 1))
        return cls(h, order, mats)

    def __getitem__(self, k):
        return self.mats[k]


# -- actions on vectors -------------------------------------------------------


def _maxabs(X):
    return float(np.max(np.abs(X))) if X.size else 0.0


def expm_action(A, B, t=1.0):
    """Approximate ``e^{tA} B`` without forming the exponential.

    Uses ``s`` repeated steps ``B <- T_m(tA/s) B`` where ``T_m`` is the Taylor
    polynomial of degree at most 30, with ``s = max(1, ceil(||tA||_1))`` and
    early termination once two consecutive terms are below round-off.
    """
    A = _square(A)
    B = np.asarray(B, dtype=float)
    if B.shape[0] != A.shape[0]:
        raise ShapeError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t!r}")
    if not np.all(np.isfinite(B)):
        raise DomainError("B has non-finite entries")

    tA = t * A
    s = max(1, math.ceil(np.linalg.norm(tA, 1)))
    X = tA / s
    F = B.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(s):
            term = F
            prev = _maxabs(term)
            for j in range(1, TAYLOR_DEGREE + 1):
                term = (X @ term) / j
                F = F + term
                cur = _maxabs(term)
                if cur + prev <= _EPS * _maxabs(F):
                    break
                prev = cur
            if not np.all(np.isfinite(F)):
                raise NonFiniteResultError(f"overflow in scaling step {i + 1} of {s}", stage=i + 1)
    return F


def phipm_action(A, U, t=1.0):
    """``sum_k t^k phi_k(tA) u_k`` from one exponential action.

    With ``W = [u_p, ..., u_1]`` and ``J`` the ``p x p`` upper shift, the
    first ``n`` entries of ``exp(t [[A, W], [0, J]]) [u_0; e_p]`` give the sum.
    """
    A = _square(A)
    n = A.shape[0]
    U = [np.asarray(u, dtype=float).reshape(-1) for u in U]
    if not U:
        raise ShapeError("U must contain at least u_0")
    p = len(U) - 1
    if p > MAX_DENSE_PHI_ORDER:
        raise UnsupportedOrderError(f"phipm order {p} exceeds {MAX_DENSE_PHI_ORDER}")
    for k, u in enumerate(U):
        if u.shape[0] != n:
            raise ShapeError(f"u_{k} has length {u.shape[0]}, expected {n}")
    if p == 0:
        return expm_action(A, U[0], t)

    aug = np.zeros((n + p, n + p))
    aug[:n, :n] = A
    for col, k in enumerate(range(p, 0, -1)):
        aug[:n, n + col] = U[k]
    for j in range(p - 1):
        aug[n + j, n + j + 1] = 1.0
    rhs = np.zeros(n + p)
    rhs[:n] = U[0]
    rhs[-1] = 1.0
    return expm_action(aug, rhs, t)[:n]


def arnoldi(A, v, m):
    """Orthonormal Krylov basis ``V`` of ``span{v, Av, ..., A^{m-1} v}`` and ``H = V^T A V``.

    Modified Gram-Schmidt with one re-orthogonalisation pass.  On (lucky)
    breakdown the reduced basis is returned, so ``V.shape[1]`` may be ``< m``.
    """
    A = _square(A)
    n = A.shape[0]
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise ShapeError(f"v has length {v.shape[0]}, expected {n}")
    if int(m) != m or not 1 <= m <= n:
        raise DomainError(f"Krylov dimension must lie in [1, {n}], got {m!r}")
    m = int(m)
    beta = np.linalg.norm(v)
    if beta == 0.0 or not math.isfinite(beta):
        raise DomainError("starting vector must be non-zero and finite")

    tol = 1e-12 * max(1.0, np.linalg.norm(A, 1))
    V = np.zeros((n, m))
    H = np.zeros((m, m))
    V[:, 0] = v / beta
    for j in range(m):
        w = A @ V[:, j]
        for _ in range(2):
            for i in range(j + 1):
                c = V[:, i] @ w
                H[i, j] += c
                w = w - c * V[:, i]
        if j + 1 == m:
            break
        h_next = np.linalg.norm(w)
        if h_next <= tol:
            return V[:, :j + 1], H[:j + 1, :j + 1]
        H[j + 1, j] = h_next
        V[:, j + 1] = w / h_next
    return V, H


def krylov_exp_action(A, v, t, m):
    """``||v|| V_m e^{t H_m} e_1`` from an ``m``-step Arnoldi projection."""
    V, H = arnoldi(A, v, m)
    beta = np.linalg.norm(np.asarray(v, dtype=float))
    return beta * (V @ expm_dense(float(t) * H)[:, 0])

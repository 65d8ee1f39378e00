"""Linear stability of the steppers on ``u' = lambda u`` with ``z = h lambda``.

Stability functions (one step multiplies the state by ``R(z)``):

* ``etd_euler``, ``exprk2``: ``e^z`` (the linear part is propagated exactly)
* ``rk2`` (midpoint): ``1 + z + z^2/2``
* ``rk4``: ``1 + z + z^2/2 + z^3/6 + z^4/24``
* ``rb2(gamma)``: ``1 + z/(1 - gamma z) = (1 + (1 - gamma) z)/(1 - gamma z)``

The stability domain is the open set ``|R(z)| < 1``; points with ``|R| = 1``
are outside.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import PoleError, UnboundedIntervalError
from .integrators import normalize_method


def _polynomial(coeffs):
    return lambda z: sum(c * z**j for j, c in enumerate(coeffs))


_RK2 = _polynomial([1.0, 1.0, 0.5])
_RK4 = _polynomial([1.0, 1.0, 1 / 2, 1 / 6, 1 / 24])


def stability_function(method, z, gamma=0.5):
    method = normalize_method(method)
    z = complex(z)
    if method in ("etd_euler", "exprk2"):
        return cmath.exp(z)
    if method == "rk2":
        return _RK2(z)
    if method == "rk4":
        return _RK4(z)
    den = 1.0 - gamma * z
    if den == 0:
        raise PoleError(f"rb2 stability function has a pole at z = 1/gamma = {1 / gamma}")
    return (1.0 + (1.0 - gamma) * z) / den


def _amplification(method, Z, gamma):
    """Vectorised ``|R(Z)|``; the rb2 pole maps to ``inf``."""
    method = normalize_method(method)
    if method in ("etd_euler", "exprk2"):
        return np.exp(Z.real)
    if method == "rk2":
        return np.abs(1 + Z + Z**2 / 2)
    if method == "rk4":
        return np.abs(1 + Z + Z**2 / 2 + Z**3 / 6 + Z**4 / 24)
    den = 1.0 - gamma * Z
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.abs((1.0 + (1.0 - gamma) * Z) / den)
    return np.where(den == 0, np.inf, out)


@dataclass(frozen=True)
class StabilityRaster:
    """Boolean stability mask at cell centres.

    ``mask`` has shape ``(ny, nx)``; row 0 is the top of the window
    (``im_max``) and column 0 its left edge (``re_min``), i.e. image order.
    """

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int
    mask: np.ndarray
    method: str = ""

    @property
    def window(self):
        return (self.re_min, self.re_max, self.im_min, self.im_max)

    @property
    def dx(self):
        return (self.re_max - self.re_min) / self.nx

    @property
    def dy(self):
        return (self.im_max - self.im_min) / self.ny

    @property
    def reals(self):
        return self.re_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def imags(self):
        return self.im_max - (np.arange(self.ny) + 0.5) * self.dy

    def contains(self, z):
        """Mask value of the cell holding ``z``; ``False`` outside the window."""
        z = complex(z)
        i = math.floor((z.real - self.re_min) / self.dx)
        j = math.floor((self.im_max - z.imag) / self.dy)
        if 0 <= i < self.nx and 0 <= j < self.ny:
            return bool(self.mask[j, i])
        return False


def rasterize(method, window, nx, ny, gamma=0.5):
    re_min, re_max, im_min, im_max = map(float, window)
    if not (re_max > re_min and im_max > im_min):
        raise ValueError(f"empty window {window!r}")
    if nx < 1 or ny < 1:
        raise ValueError(f"resolution must be positive, got {nx}x{ny}")
    dx = (re_max - re_min) / nx
    dy = (im_max - im_min) / ny
    xs = re_min + (np.arange(nx) + 0.5) * dx
    ys = im_max - (np.arange(ny) + 0.5) * dy
    Z = xs[None, :] + 1j * ys[:, None]
    mask = _amplification(method, Z, gamma) < 1.0
    return StabilityRaster(re_min, re_max, im_min, im_max, int(nx), int(ny), mask, normalize_method(method))


_SCAN_STEP = 1e-2
_SCAN_LINEAR_LIMIT = 64.0
_SCAN_LIMIT = 1e12


def real_axis_boundary(method, gamma=0.5, tol=1e-8):
    """Left end of the stability interval on the negative real axis.

    Scans leftwards from the origin for the first ``x`` with ``|R(x)| >= 1``
    and refines by bisection to ``tol``.  Raises
    :class:`UnboundedIntervalError` when no such point exists.
    """
    method = normalize_method(method)

    def unstable(x):
        return abs(stability_function(method, x, gamma)) >= 1.0

    inside = 0.0
    x = -_SCAN_STEP
    while x >= -_SCAN_LIMIT:
        if unstable(x):
            break
        inside = x
        x = x - _SCAN_STEP if x > -_SCAN_LINEAR_LIMIT else 2.0 * x
    else:
        raise UnboundedIntervalError(f"{method} is stable on the whole negative real axis")

    lo, hi = x, inside  # unstable at lo, stable at hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

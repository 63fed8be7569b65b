"""Closed-form logarithmic kernels and fixed quadrature rules."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _u2_atan(u, v):
    # u**2 * atan(v/u), continuous with value 0 on u == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = u * u * np.arctan(v / u)
    return np.where(u == 0.0, 0.0, out)


def _u_atan(u, v):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = u * np.arctan(v / u)
    return np.where(u == 0.0, 0.0, out)


def _xlogr2(a, r2):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a * np.log(r2)
    return np.where(a == 0.0, 0.0, out)


def _corner(u, v):
    """Antiderivative F with d2F/dudv = ln sqrt(u^2 + v^2)."""
    r2 = u * u + v * v
    return 0.5 * (_xlogr2(u * v, r2) - 3.0 * u * v + _u2_atan(u, v) + _u2_atan(v, u))


def rect_log_integral(u0, u1, v0, v1):
    """``int_{u0}^{u1} int_{v0}^{v1} ln sqrt(u^2+v^2) dv du`` in closed form."""
    u0, u1, v0, v1 = (np.asarray(a, dtype=float) for a in (u0, u1, v0, v1))
    return _corner(u1, v1) - _corner(u0, v1) - _corner(u1, v0) + _corner(u0, v0)


def _edge(u, v):
    # d F / d u
    r2 = u * u + v * v
    return 0.5 * (_xlogr2(v, r2) - 2.0 * v + 2.0 * _u_atan(u, v))


def rect_log_gradient(u0, u1, v0, v1):
    """Gradient, w.r.t. the evaluation point, of :func:`rect_log_integral`.

    With ``u = X - x`` and ``v = Y - y`` a shift of ``x`` moves both ``u``
    limits by ``-dx``. Returned as ``d/dx + i d/dy``.
    """
    u0, u1, v0, v1 = (np.asarray(a, dtype=float) for a in (u0, u1, v0, v1))
    gx = -(_edge(u1, v1) - _edge(u0, v1) - _edge(u1, v0) + _edge(u0, v0))
    gy = -(_edge(v1, u1) - _edge(v0, u1) - _edge(v1, u0) + _edge(v0, u0))
    return gx + 1j * gy


def rect_power_moments(z00: complex, h: float, order: int) -> np.ndarray:
    """``int int_rect zeta**k dA`` for k = 0..order over the square with lower-left ``z00``.

    Uses ``d/dx d/dy G(x+iy) = i G''`` with ``G = zeta**(k+2)/((k+1)(k+2))``.
    """
    z00 = np.asarray(z00, dtype=complex)
    z10 = z00 + h
    z01 = z00 + 1j * h
    z11 = z00 + h + 1j * h
    out = []
    for k in range(order + 1):
        c = 1.0 / ((k + 1) * (k + 2))
        e = k + 2
        val = (z11 ** e - z01 ** e - z10 ** e + z00 ** e) * c
        out.append(-1j * val)
    return np.array(out)

"""One-dimensional radial integrals behind the power-law Levy measure.

For ``c * |x|**(-n - alpha)`` the jump part of the exponent reduces, after
the substitution ``v = r * |s|``, to a few fixed kernels of ``v`` integrated
up to a variable limit ``T``:

* ``re_integral(T) = int_0^T (1 - Lambda_n(v)) v**(-1-alpha) dv`` where
  ``Lambda_n`` is the characteristic function of one coordinate of a
  uniform point on the unit sphere of R^n (``cos`` for n = 1).
* ``odd_small(T) = int_0^T (v - sin v) v**(-1-alpha) dv``
* ``sin_antideriv(T)``: an antiderivative of ``sin(v) v**(-1-alpha)``.

Each kernel is a power series on [0, 1], batched adaptive quadrature on
[1, T_big] and an integration-by-parts asymptotic expansion beyond.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import special

from .quadrature import integrate_pieces

_SERIES_TERMS = 14
_IBP_DEPTH = 8
_QUAD_RTOL = 1e-11


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _lambda_n(v: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.cos(v)
    if n == 3:
        return np.sinc(v / np.pi)
    nu = n / 2 - 1
    out = np.ones_like(v)
    nz = v != 0
    vv = v[nz]
    out[nz] = math.gamma(n / 2) * (2.0 / vv) ** nu * special.jv(nu, vv)
    return out


def oscillatory_tails(T: np.ndarray, beta: float, depth: int = _IBP_DEPTH):
    """``(int_T^inf cos(v) v**-beta dv, int_T^inf sin(v) v**-beta dv)``.

    Repeated integration by parts; the dropped remainder is of order
    ``beta (beta+1) ... (beta+depth-1) T**(-beta-depth)``.
    """
    T = np.asarray(T, dtype=float)
    if depth == 0:
        return np.zeros_like(T), np.zeros_like(T)
    ic_next, is_next = oscillatory_tails(T, beta + 1.0, depth - 1)
    tb = T ** (-beta)
    ic = -np.sin(T) * tb + beta * is_next
    is_ = np.cos(T) * tb - beta * ic_next
    return ic, is_


class RadialKernels:
    """Kernels for a given ``alpha`` and spherical dimension ``n``."""

    def __init__(self, alpha: float, n: int = 1):
        if not 0.0 < alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
        self.alpha = float(alpha)
        self.n = int(n)
        self.t_big = 200.0 if self.n == 1 else 1.0e4

    # -- real part ----------------------------------------------------
    def _re_integrand(self, v):
        return (1.0 - _lambda_n(v, self.n)) * v ** (-1.0 - self.alpha)

    def _re_series(self, T):
        a, h = self.alpha, self.n / 2
        out = np.zeros_like(T)
        for k in range(1, _SERIES_TERMS + 1):
            ck = math.exp(math.lgamma(h) - k * math.log(4.0) - math.lgamma(k + 1) - math.lgamma(h + k))
            out += (-1) ** (k + 1) * ck * T ** (2 * k - a) / (2 * k - a)
        return out

    @property
    def re_total(self) -> float:
        """``re_integral(inf)`` in closed form."""
        return _re_total(self.alpha, self.n)

    def _re_tail(self, T):
        """``int_T^inf Lambda_n(v) v**(-1-alpha) dv`` for large T."""
        if self.n == 1:
            return oscillatory_tails(T, 1.0 + self.alpha)[0]
        nu = self.n / 2 - 1
        amp = math.gamma(self.n / 2) * 2.0 ** nu * math.sqrt(2.0 / math.pi)
        phase = nu * math.pi / 2 + math.pi / 4
        ic, is_ = oscillatory_tails(T, nu + 1.5 + self.alpha)
        return amp * (math.cos(phase) * ic + math.sin(phase) * is_)

    def re_integral(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        out = np.empty_like(T)
        inf = np.isinf(T)
        out[inf] = self.re_total
        small = T <= 1.0
        out[small] = self._re_series(T[small])
        big = (T > self.t_big) & ~inf
        tb = T[big]
        out[big] = self.re_total - tb ** (-self.alpha) / self.alpha + self._re_tail(tb)
        mid = ~(small | big | inf)
        if np.any(mid):
            out[mid] = self._re_series(np.array([1.0]))[0] + self._cumulative(self._re_integrand, T[mid])
        return out

    # -- imaginary part (one-dimensional directions only) -------------
    def _odd_series(self, T):
        a = self.alpha
        out = np.zeros_like(T)
        for k in range(1, _SERIES_TERMS + 1):
            out += (-1) ** (k + 1) * T ** (2 * k + 1 - a) / (math.factorial(2 * k + 1) * (2 * k + 1 - a))
        return out

    def _odd_integrand(self, v):
        return (v - np.sin(v)) * v ** (-1.0 - self.alpha)

    def _power_integral(self, lo, hi):
        """``int_lo^hi v**-alpha dv``."""
        if self.alpha == 1.0:
            return np.log(hi / lo)
        p = 1.0 - self.alpha
        return (hi ** p - lo ** p) / p

    def odd_small(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        if np.any(np.isinf(T)):
            raise ValueError("odd_small needs finite limits")
        out = np.empty_like(T)
        small = T <= 1.0
        out[small] = self._odd_series(T[small])
        big = T > self.t_big
        if np.any(big):
            tb = T[big]
            anchor = self._odd_anchor()
            beta = 1.0 + self.alpha
            is_big = oscillatory_tails(np.array([self.t_big]), beta)[1][0]
            out[big] = anchor + self._power_integral(self.t_big, tb) - (is_big - oscillatory_tails(tb, beta)[1])
        mid = ~(small | big)
        if np.any(mid):
            out[mid] = self._odd_series(np.array([1.0]))[0] + self._cumulative(self._odd_integrand, T[mid])
        return out

    def _sin_series(self, T):
        a = self.alpha
        out = np.zeros_like(T)
        for k in range(0, _SERIES_TERMS + 1):
            p = 2 * k + 1 - a
            if p == 0.0:
                out += np.log(T)
            else:
                out += (-1) ** k * T ** p / (math.factorial(2 * k + 1) * p)
        return out

    def _sin_integrand(self, v):
        return np.sin(v) * v ** (-1.0 - self.alpha)

    def sin_antideriv(self, T) -> np.ndarray:
        """Antiderivative of ``sin(v) v**(-1-alpha)``; only differences are meaningful.

        ``T = inf`` is allowed (the integral converges at infinity).
        """
        T = np.asarray(T, dtype=float)
        out = np.empty_like(T)
        small = T <= 1.0
        out[small] = self._sin_series(T[small])
        big = T > self.t_big
        if np.any(big):
            tb = T[big]
            beta = 1.0 + self.alpha
            tail = np.where(np.isinf(tb), 0.0, oscillatory_tails(np.where(np.isinf(tb), 1.0, tb), beta)[1])
            out[big] = self._sin_limit() - tail
        mid = ~(small | big)
        if np.any(mid):
            out[mid] = self._sin_series(np.array([1.0]))[0] + self._cumulative(self._sin_integrand, T[mid])
        return out

    # -- helpers -------------------------------------------------------
    def _cumulative(self, f, T):
        """``int_1^T f`` for every entry of T in (1, t_big]."""
        order = np.argsort(T, kind="stable")
        ts = T[order]
        edges = np.concatenate([[1.0], ts])
        pieces = integrate_pieces(f, edges, rtol=_QUAD_RTOL, atol=1e-15, panel_width=1.0)
        out = np.empty_like(T)
        out[order] = np.cumsum(pieces)
        return out

    def _odd_anchor(self) -> float:
        return _odd_anchor(self.alpha)

    def _sin_limit(self) -> float:
        return _sin_limit(self.alpha)


@lru_cache(maxsize=None)
def kernels(alpha: float, n: int = 1) -> RadialKernels:
    return RadialKernels(alpha, n)


@lru_cache(maxsize=None)
def _re_total(alpha: float, n: int) -> float:
    # int_0^inf (1 - Lambda_n(v)) v^(-1-alpha) dv, from the fractional Laplacian constant
    return math.exp(
        math.lgamma(n / 2) + math.log(abs(math.gamma(-alpha / 2)))
        - (alpha + 1) * math.log(2.0) - math.lgamma((n + alpha) / 2)
    )


@lru_cache(maxsize=None)
def _odd_anchor(alpha: float) -> float:
    k = kernels(alpha, 1)
    return float(k._odd_series(np.array([1.0]))[0] + k._cumulative(k._odd_integrand, np.array([k.t_big]))[0])


@lru_cache(maxsize=None)
def _sin_limit(alpha: float) -> float:
    k = kernels(alpha, 1)
    at_big = k._sin_series(np.array([1.0]))[0] + k._cumulative(k._sin_integrand, np.array([k.t_big]))[0]
    return float(at_big + oscillatory_tails(np.array([k.t_big]), 1.0 + alpha)[1][0])

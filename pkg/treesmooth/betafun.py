"""Beta distribution kernel: log-gamma, regularized incomplete beta, and its inverse.

All kernels accept numpy arrays and broadcast; the scalar entry points
(`log_gamma`, `beta_cdf`, `beta_ppf`) return Python floats for scalar input.
Calibrating a whole forest evaluates one PPF per leaf, so the array path is
the one that matters for speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from treesmooth.errors import DomainError

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Lanczos is accurate in absolute terms only; within this radius of the roots
# z = 1 and z = 2 a Taylor series around z = 2 takes over
_ROOT_RADIUS = 0.25
_EULER_GAMMA = 0.5772156649015329
_ZETA_TERMS = 30
_ZETA_HEAD = 2000


def _zeta_minus_one(k: int) -> float:
    """zeta(k) - 1: a direct sum plus the Euler-Maclaurin tail from _ZETA_HEAD on."""
    n = np.arange(_ZETA_HEAD - 1, 1, -1, dtype=np.float64)
    head = float(np.sum(n ** -k))
    big = float(_ZETA_HEAD)
    tail = big ** (1 - k) / (k - 1) + 0.5 * big ** -k + k * big ** (-k - 1) / 12.0
    return head + tail


# ln Gamma(2 + t) = (1 - gamma) t + sum_{k>=2} (-1)^k (zeta(k) - 1) t^k / k
_SHIFTED_COEF = np.array(
    [0.0, 1.0 - _EULER_GAMMA]
    + [(-1) ** k * _zeta_minus_one(k) / k for k in range(2, _ZETA_TERMS + 1)]
)

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 20000

PPF_MAX_ITER = 200
PPF_TOL = 1e-12
PPF_WIDTH_TOL = 1e-14

# beyond this total concentration the log-gamma differences lose too many digits
MAX_CONCENTRATION = 1e7


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


def _unwrap(value: np.ndarray, scalar: bool):
    return float(value) if scalar else value


# ==================== LOG-GAMMA ====================

def _lanczos(z: np.ndarray) -> np.ndarray:
    """ln Gamma(z) for z >= 0.5."""
    z = z - 1.0
    series = np.full_like(z, _LANCZOS_COEF[0])
    for i, coef in enumerate(_LANCZOS_COEF[1:], start=1):
        series = series + coef / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(series)


def _log_gamma_shifted(t: np.ndarray) -> np.ndarray:
    """ln Gamma(2 + t) for |t| < _ROOT_RADIUS, relative accuracy kept near t = 0."""
    return np.polynomial.polynomial.polyval(t, _SHIFTED_COEF)


def log_gamma_array(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if not np.all(z > 0):
        raise DomainError("log_gamma is only defined here for z > 0")
    reflect = z < 0.5
    result = _lanczos(np.where(reflect, 1.0 - z, z))
    if reflect.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            reflected = np.log(np.pi / np.sin(np.pi * z)) - result
        result = np.where(reflect, reflected, result)
    near_two = np.abs(z - 2.0) < _ROOT_RADIUS
    if near_two.any():
        result = np.where(near_two, _log_gamma_shifted(z - 2.0), result)
    near_one = np.abs(z - 1.0) < _ROOT_RADIUS
    if near_one.any():
        # z - 1 is exact here, and Gamma(z) = Gamma(z + 1) / z
        result = np.where(near_one, _log_gamma_shifted(z - 1.0) - np.log1p(z - 1.0), result)
    return result


def log_gamma(z):
    scalar = np.ndim(z) == 0
    return _unwrap(log_gamma_array(z), scalar)


def log_beta(a, b) -> np.ndarray:
    return log_gamma_array(a) + log_gamma_array(b) - log_gamma_array(np.add(a, b))


# ==================== INCOMPLETE BETA ====================

def _continued_fraction(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Modified Lentz evaluation of the incomplete-beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0

    def guard(v):
        return np.where(np.abs(v) < _CF_TINY, _CF_TINY, v)

    c = np.ones_like(x)
    d = 1.0 / guard(1.0 - qab * x / qap)
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 / guard(1.0 + aa * d)
        c = guard(1.0 + aa / c)
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 / guard(1.0 + aa * d)
        c = guard(1.0 + aa / c)
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _CF_EPS
        if not active.any():
            return h
    raise DomainError("incomplete beta continued fraction did not converge")


def _check_params(a: np.ndarray, b: np.ndarray) -> None:
    if not (np.all(a > 0) and np.all(b > 0)):
        raise DomainError("Beta parameters must be positive")
    if np.any(a + b > MAX_CONCENTRATION):
        raise DomainError(f"alpha + beta above {MAX_CONCENTRATION:g} is out of range")


def _flat_broadcast(*args) -> tuple[tuple[int, ...], list[np.ndarray]]:
    arrays = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in args))
    return arrays[0].shape, [np.ravel(a).copy() for a in arrays]


def betainc(x, a, b) -> np.ndarray:
    """Regularized incomplete beta I_x(a, b), broadcasting over all arguments."""
    shape, (x, a, b) = _flat_broadcast(x, a, b)
    if not np.all((x >= 0.0) & (x <= 1.0)):
        raise DomainError("beta_cdf needs 0 <= x <= 1")
    _check_params(a, b)

    result = np.where(x >= 1.0, 1.0, 0.0)
    interior = (x > 0.0) & (x < 1.0)
    if interior.any():
        xi, ai, bi = x[interior], a[interior], b[interior]
        # the fraction converges fast below (a+1)/(a+b+2); mirror the rest
        swap = xi > (ai + 1.0) / (ai + bi + 2.0)
        aa = np.where(swap, bi, ai)
        bb = np.where(swap, ai, bi)
        xx = np.where(swap, 1.0 - xi, xi)
        log_front = aa * np.log(xx) + bb * np.log1p(-xx) - log_beta(aa, bb)
        part = np.exp(log_front) * _continued_fraction(aa, bb, xx) / aa
        result[interior] = np.clip(np.where(swap, 1.0 - part, part), 0.0, 1.0)
    return result.reshape(shape)


def beta_cdf(x, p: BetaParams):
    scalar = np.ndim(x) == 0
    return _unwrap(betainc(x, p.alpha, p.beta), scalar)


def beta_pdf_array(x, a, b) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_density = (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - log_beta(a, b)
    return np.exp(log_density)


# ==================== PPF ====================

def betaincinv(q, a, b) -> np.ndarray:
    """Inverse of I_x(a, b) in x by bracketed Newton iteration from the mean.

    A Newton step that leaves the current bracket, or cannot be taken, is
    replaced by bisection. Stops when |I_x - q| <= 1e-12 or the bracket is
    narrower than 1e-14.
    """
    shape, (q, a, b) = _flat_broadcast(q, a, b)
    if not np.all((q >= 0.0) & (q <= 1.0)):
        raise DomainError("beta_ppf needs 0 <= q <= 1")
    _check_params(a, b)

    result = np.where(q >= 1.0, 1.0, 0.0)
    interior = (q > 0.0) & (q < 1.0)
    if interior.any():
        qi, ai, bi = q[interior], a[interior], b[interior]
        lo = np.zeros_like(qi)
        hi = np.ones_like(qi)
        x = ai / (ai + bi)
        active = np.ones(qi.shape, dtype=bool)
        for _ in range(PPF_MAX_ITER):
            f = betainc(x, ai, bi) - qi
            active &= ~((np.abs(f) <= PPF_TOL) | (hi - lo <= PPF_WIDTH_TOL))
            if not active.any():
                break
            lo = np.where(active & (f < 0), x, lo)
            hi = np.where(active & (f > 0), x, hi)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                candidate = x - f / beta_pdf_array(x, ai, bi)
            outside = ~np.isfinite(candidate) | (candidate <= lo) | (candidate >= hi)
            candidate = np.where(outside, 0.5 * (lo + hi), candidate)
            x = np.where(active, candidate, x)
        result[interior] = x
    return result.reshape(shape)


def beta_ppf(q, p: BetaParams):
    scalar = np.ndim(q) == 0
    return _unwrap(betaincinv(q, p.alpha, p.beta), scalar)

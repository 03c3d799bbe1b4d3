"""Exact radial derivatives of R^2 built from the soliton ODE.

Iterated radial Laplacians of f = R^2 are needed up to Delta^3 f, which is
sixth-derivative content. Differencing would be hopeless, so every field is
written as a polynomial in

    R, P = R', q = R'/rho, t = 1/rho

and differentiated symbolically with the closure rules

    R' = P,  P' = R - R^3 - q,  q' = (R - R^3 - 2q) t,  t' = -t^2,

reducing every P*t to q. Inside ``SERIES_RADIUS`` the negative powers of rho
cancel badly in floating point, so there the same fields are taken from the
even power series of R about the origin instead.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .soliton import SERIES_RADIUS, SolitonProfile, origin_series

# monomial exponent tuple: (R, P, q, t)
Poly = dict


def _add(acc, mono, coeff):
    a, b, c, d = mono
    k = min(b, d)
    mono = (a, b - k, c + k, d - k)
    acc[mono] += coeff


def derivative(poly: Poly) -> Poly:
    out = defaultdict(float)
    for (a, b, c, d), k in poly.items():
        if a:
            _add(out, (a - 1, b + 1, c, d), k * a)
        if b:
            # P' = R - R^3 - q
            _add(out, (a + 1, b - 1, c, d), k * b)
            _add(out, (a + 3, b - 1, c, d), -k * b)
            _add(out, (a, b - 1, c + 1, d), -k * b)
        if c:
            # q' = (R - R^3 - 2q) t
            _add(out, (a + 1, b, c - 1, d + 1), k * c)
            _add(out, (a + 3, b, c - 1, d + 1), -k * c)
            _add(out, (a, b, c, d + 1), -2 * k * c)
        if d:
            _add(out, (a, b, c, d + 1), -k * d)
    return {m: v for m, v in out.items() if v != 0}


def laplacian(poly: Poly) -> Poly:
    d1 = derivative(poly)
    out = defaultdict(float)
    for m, v in derivative(d1).items():
        _add(out, m, v)
    for (a, b, c, d), v in d1.items():
        _add(out, (a, b, c, d + 1), v)
    return {m: v for m, v in out.items() if v != 0}


@lru_cache(maxsize=None)
def field_polys() -> dict:
    f = {(2, 0, 0, 0): 1.0}
    phi1 = laplacian(f)
    phi2 = laplacian(phi1)
    phi3 = laplacian(phi2)
    return {
        "f": f,
        "df": derivative(f),
        "phi1": phi1,
        "dphi1": derivative(phi1),
        "phi2": phi2,
        "phi3": phi3,
        "phi4": laplacian(phi3),
    }


def evaluate(poly: Poly, R, P, q, t):
    out = np.zeros_like(R)
    for (a, b, c, d), k in sorted(poly.items()):
        term = np.full_like(R, k)
        if a:
            term = term * R ** a
        if b:
            term = term * P ** b
        if c:
            term = term * q ** c
        if d:
            term = term * t ** d
        out = out + term
    return out


def _series_fields(R0: float, rho: np.ndarray, nterms: int = 40) -> dict:
    """Same fields as ``field_polys`` from the power series in x = rho^2."""
    a = origin_series(R0, nterms)
    f = np.convolve(a, a)[:nterms]

    def lap(c):
        k = np.arange(1, c.size)
        return 4.0 * k * k * c[1:]

    def ev(c, x):
        return np.polynomial.polynomial.polyval(x, c)

    def ev_d(c, rho):
        # d/drho sum c_k rho^(2k) = rho * sum 2k c_k rho^(2k-2)
        k = np.arange(1, c.size)
        return rho * ev(2.0 * k * c[1:], rho * rho)

    x = rho * rho
    p1 = lap(f)
    p2 = lap(p1)
    p3 = lap(p2)
    p4 = lap(p3)
    return {
        "f": ev(f, x),
        "df": ev_d(f, rho),
        "phi1": ev(p1, x),
        "dphi1": ev_d(p1, rho),
        "phi2": ev(p2, x),
        "phi3": ev(p3, x),
        "phi4": ev(p4, x),
    }


@dataclass(frozen=True, eq=False)
class RadialFields:
    """R^2, its radial derivative and iterated Laplacians on the profile grid."""

    rho: np.ndarray
    weight: np.ndarray  # R (R + rho R'), the soliton-direction factor
    f: np.ndarray
    df: np.ndarray
    phi1: np.ndarray
    dphi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    phi4: np.ndarray


@lru_cache(maxsize=16)
def radial_fields(p: SolitonProfile) -> RadialFields:
    rho, R, P = p.r, p.R, p.dR
    out = {}
    inner = rho < SERIES_RADIUS
    outer = ~inner
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(outer, 1.0 / np.where(rho > 0, rho, 1.0), 0.0)
    q = P * t
    polys = field_polys()
    ser = _series_fields(p.R0, rho[inner]) if p.R0 != 0 else None
    for name, poly in polys.items():
        vals = np.empty_like(R)
        vals[outer] = evaluate(poly, R[outer], P[outer], q[outer], t[outer])
        vals[inner] = ser[name] if ser is not None else 0.0
        out[name] = vals
    weight = R * (R + rho * P)
    return RadialFields(rho=rho, weight=weight, **out)

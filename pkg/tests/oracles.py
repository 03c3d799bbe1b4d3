"""Independent reference computations used to freeze expected values.

Nothing here imports the package's solvers: these are deliberately naive
re-derivations (plain loops, trapezoid rules, brute-force sums) so that a
bug in the production path cannot hide in its own oracle.
"""
import math

import numpy as np


def shoot_bisect_R0(h=1e-4, lo=2.0, hi=2.5, width=1e-5, r_end=12.0):
    """Townes R(0) by bisection on the first event of a fixed-step RK4 shot.

    Seed at r=h from the two-term Taylor expansion; zero crossing => R(0)
    too large, R' > 0 => too small.
    """

    def event(R0):
        c = 0.5 * (R0 - R0 ** 3)
        r, R, P = h, R0 + c * h * h, 2 * c * h

        def f(r, R, P):
            return P, R - R ** 3 - P / r

        while r < r_end:
            a1, b1 = f(r, R, P)
            a2, b2 = f(r + h / 2, R + h / 2 * a1, P + h / 2 * b1)
            a3, b3 = f(r + h / 2, R + h / 2 * a2, P + h / 2 * b2)
            a4, b4 = f(r + h, R + h * a3, P + h * b3)
            R += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            P += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
            r += h
            if R < 0:
                return "high"
            if P > 0:
                return "low"
        return None

    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        ev = event(mid)
        if ev == "low":
            lo = mid
        elif ev == "high":
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def trapezoid_half(y, x):
    """Trapezoid rule on every other node (half resolution)."""
    return float(np.trapezoid(y[::2], x[::2]))


def centered_fd_second(y, h):
    return (y[2:] - 2 * y[1:-1] + y[:-2]) / (h * h)


def bessel_helmholtz_1d_check(eps):
    """Brute-force K0 Green function normalisation: int K0(r/eps) r dr / eps^2 = 1."""
    from scipy import integrate, special

    val, _ = integrate.quad(lambda r: special.k0(r / eps) * r, 0, 60 * eps, limit=400)
    return val / eps ** 2


def o1_extrema(alpha, beta0, L0, dL0, C1, M):
    """sqrt of the roots of D y^2 + beta0 y - alpha^2 C1/(4M) = 0 for the o1 law.

    Found by numpy's polynomial root finder rather than the closed form.
    """
    D = dL0 ** 2 - beta0 / L0 ** 2 + alpha ** 2 * C1 / (4 * M * L0 ** 4)
    roots = np.roots([D, beta0, -alpha ** 2 * C1 / (4 * M)])
    roots = np.sort(roots.real[roots.real > 0])
    return np.sqrt(roots)


def o2_threshold(alpha, beta0, e0, C1, C2, M, n=200001):
    """Collapse threshold for L_t(0) in the o2 law by brute-force maximisation.

    Energy: L_t^2 = D - V(e), V(e) = (-beta0 e^2 + C1 e^4/(4M) - C2 e^6/(6M))/alpha^2
    with e = alpha/L. Collapse needs L_t^2 > 0 for every e > e0.
    """
    e = np.linspace(e0, 50 * e0 + 5.0, n)
    V = (-beta0 * e ** 2 + C1 * e ** 4 / (4 * M) - C2 * e ** 6 / (6 * M)) / alpha ** 2
    return -math.sqrt(max(V.max() - V[0], 0.0))


def fd_radial_laplacian(f, r, h):
    """Delta f = f'' + f'/r at nodes 2..n-3 from central differences at h and 2h,
    combined by one Richardson step (error O(h^4))."""

    def lap(step):
        k = step
        d2 = (f[2 * k:] - 2 * f[k:-k] + f[:-2 * k]) / (k * h) ** 2
        d1 = (f[2 * k:] - f[:-2 * k]) / (2 * k * h)
        return d2 + d1 / r[k:-k]

    fine = lap(1)[1:-1]
    coarse = lap(2)
    return (4 * fine - coarse) / 3

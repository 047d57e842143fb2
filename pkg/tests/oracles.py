"""Independent reference computations used by the tests."""

import itertools
import math

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate
from scipy.stats import binom


def gauss_hermite(fn, sigma, deg=150):
    """E fn(sigma Z), Z ~ N(0, 1), by probabilists' Gauss-Hermite quadrature."""
    x, w = hermegauss(deg)
    return float(np.dot(w, fn(sigma * x)) / math.sqrt(2 * math.pi))


def normal_expect(fn, sigma, kinks=(), width=12.0):
    """E fn(sigma Z) by adaptive quadrature, splitting at kinks of fn."""
    pts = sorted({-width * sigma, width * sigma, *[k for k in kinks if abs(k) < width * sigma]})

    def dens(x):
        return float(fn(np.array([x]))[0]) * math.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))

    return math.fsum(integrate.quad(dens, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                     for a, b in zip(pts, pts[1:]))


def binomial_expect(fn, n, sigma=1.0, t=1.0):
    """E fn(sigma sqrt(t/n) (2B - n)), B ~ Bin(n, 1/2): the classical random walk."""
    k = np.arange(n + 1)
    x = sigma * math.sqrt(t / n) * (2 * k - n)
    return float(np.dot(binom.pmf(k, n, 0.5), fn(x)))


def rademacher_rosenthal_ratio(n, p=4):
    """E max_k |S_k|^p / (n + n^(p/2)) by enumerating all 2^n sign paths."""
    total = 0.0
    for signs in itertools.product((-1, 1), repeat=n):
        s = np.cumsum(signs)
        total += np.max(np.abs(s)) ** p
    return total / 2**n / (n + n ** (p / 2))

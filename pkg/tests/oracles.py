"""Reference computations that share no code path with the package."""

import itertools
import math

import numpy as np


def convolution_product(f_coeffs, g_coeffs, n, dim, cutoff):
    """Truncated product by direct summation over all wavevector pairs.

    Coefficients are dicts {integer wavevector tuple: complex}.
    """
    keep = lambda k: all(abs(c) <= cutoff for c in k)  # noqa: E731
    out = {}
    fk = {k: v for k, v in f_coeffs.items() if keep(k)}
    gk = {k: v for k, v in g_coeffs.items() if keep(k)}
    for p, a in fk.items():
        for q, b in gk.items():
            k = tuple(x + y for x, y in zip(p, q))
            if keep(k):
                out[k] = out.get(k, 0) + a * b
    return out


def to_dict(arr, n):
    """Full FFT-ordered coefficient array -> {signed wavevector: value}."""
    signed = lambda i: i if i < n // 2 else i - n  # noqa: E731
    return {tuple(signed(i) for i in idx): arr[idx] for idx in itertools.product(range(n), repeat=arr.ndim)}


def bmo_bruteforce(values, n, dim):
    """Max over every grid-aligned dyadic cube of the mean absolute deviation.

    Walks each cube point by point with nested index loops.
    """
    levels = int(round(math.log2(n))) - 1
    best = 0.0
    for j in range(levels):
        side = n // 2**j
        for origin in itertools.product(range(0, n, side), repeat=dim):
            pts = []
            for off in itertools.product(range(side), repeat=dim):
                idx = tuple(o + d for o, d in zip(origin, off))
                pts.append(float(values[idx]))
            mean = math.fsum(pts) / len(pts)
            dev = math.fsum(abs(v - mean) for v in pts) / len(pts)
            best = max(best, dev)
    return best


def _gauss_1d(n=512, images=6):
    x = np.arange(n) * (2 * np.pi / n)
    g = d1 = d2 = 0.0
    for m in range(-images, images + 1):
        y = x - np.pi + 2 * np.pi * m
        e = np.exp(-(y**2) / 2)
        g = g + e
        d1 = d1 - y * e
        d2 = d2 + (y**2 - 1) * e
    w = 2 * np.pi / n
    integral = lambda a: float(np.sum(a) * w)  # noqa: E731
    peak = float(np.sum([np.exp(-((2 * np.pi * m) ** 2) / 2) for m in range(-images, images + 1)]))
    return dict(g2=integral(g**2), g4=integral(g**4), d1=integral(d1**2), d2=integral(d2**2), peak=peak)


def gaussian_interpolation_ratios(n=512):
    """Ratios of the six interpolation inequalities for the periodic Gaussian
    bump centred at (pi, ..., pi), by separable quadrature of analytic derivatives."""
    q = _gauss_1d(n)
    out = {}
    for dim in (2, 3):
        l2 = math.sqrt(q["g2"] ** dim)
        l4 = (q["g4"] ** dim) ** 0.25
        linf = q["peak"] ** dim
        grad = math.sqrt(dim * q["d1"] * q["g2"] ** (dim - 1))
        hess = math.sqrt(dim * q["d2"] * q["g2"] ** (dim - 1) + dim * (dim - 1) * q["d1"] ** 2 * q["g2"] ** (dim - 2))
        if dim == 2:
            out["2d-linf"] = linf / (l2**0.5 * hess**0.5)
            out["2d-l4-grad"] = l4 / (l2**0.5 * grad**0.5)
            out["2d-l4-hess"] = l4 / (l2**0.75 * hess**0.25)
        else:
            out["3d-linf"] = linf / (l2**0.25 * hess**0.75)
            out["3d-l4-hess"] = l4 / (l2**0.625 * hess**0.375)
            out["3d-grad-hess"] = grad / (l2**0.5 * hess**0.5)
    return out


def steady_euler_log_sobolev(n=512, p=4):
    """Non-BMO ingredients for u = (-sin x2, sin x1) by quadrature of analytic derivatives."""
    x = np.arange(n) * (2 * np.pi / n)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    w = (2 * np.pi / n) ** 2
    lp = lambda a, b: float((np.sum((a**2 + b**2) ** (p / 2)) * w) ** (1 / p))  # noqa: E731
    zero = np.zeros_like(x1)
    derivs = [
        (-np.sin(x2), np.sin(x1)),  # u
        (zero, np.cos(x1)),  # d1 u
        (-np.cos(x2), zero),  # d2 u
        (zero, -np.sin(x1)),  # d11 u
        (zero, zero),  # d12 u
        (np.sin(x2), zero),  # d22 u
    ]
    w2p = sum(lp(a, b) for a, b in derivs)
    lhs = float(np.max(np.sqrt(np.cos(x1) ** 2 + np.cos(x2) ** 2)))
    l2 = math.sqrt(float(np.sum(np.sin(x2) ** 2 + np.sin(x1) ** 2) * w))
    return dict(lhs=lhs, l2=l2, w2p=w2p)

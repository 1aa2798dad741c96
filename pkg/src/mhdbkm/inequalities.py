"""Empirical checks of the interpolation, Gagliardo-Nirenberg, commutator and
logarithmic Sobolev inequalities on sampled periodic fields.

Each checker returns the left-hand side, the right-hand side without its
constant, and their ratio. Fitting a constant means taking the largest ratio
over a family of fields; nothing here claims sharpness.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import spectral as sp
from .diagnostics import bmo_seminorm_physical, lp_norm, lp_norm_physical, ndjson_line, sobolev_seminorm
from .scenarios import band_mask, random_field
from .spectral import Grid

AMPLITUDES = (-3.0, 0.01, 1e6)


class DegenerateField(ValueError):
    """Zero or constant input; the ratio is undefined."""


class BandTooWide(ValueError):
    """The grid cannot represent the products of this field exactly."""


@dataclass(frozen=True)
class Ratio:
    lhs: float
    rhs: float
    ratio: float


def _ratio(lhs: float, rhs: float) -> Ratio:
    if not rhs > 0:
        raise DegenerateField("right-hand side vanishes")
    return Ratio(lhs, rhs, lhs / rhs)


def _nonconstant(grid: Grid, fhat: np.ndarray) -> None:
    mean = (...,) + (0,) * grid.dim
    rest = fhat.copy()
    rest[mean] = 0.0
    if not np.any(rest != 0):
        raise DegenerateField("field is constant")


def multi_indices(dim: int, order: int):
    """All ``alpha`` with ``|alpha| == order`` and their multinomial weights."""
    for alpha in itertools.product(range(order + 1), repeat=dim):
        if sum(alpha) == order:
            weight = math.factorial(order)
            for a in alpha:
                weight //= math.factorial(a)
            yield alpha, weight


def partial(grid: Grid, fhat: np.ndarray, alpha) -> np.ndarray:
    out = fhat
    for axis, a in enumerate(alpha):
        if a:
            out = sp.derivative(grid, out, axis, a)
    return out


def tensor_magnitude(grid: Grid, fhat: np.ndarray, order: int) -> np.ndarray:
    """Pointwise Frobenius norm of ``∇^order f`` (components summed for vectors)."""
    if order == 0:
        f = grid.to_physical(fhat)
        sq = f * f
    else:
        sq = 0.0
        for alpha, w in multi_indices(grid.dim, order):
            d = grid.to_physical(partial(grid, fhat, alpha))
            sq = sq + w * d * d
    if sq.ndim > grid.dim:
        sq = np.sum(sq, axis=tuple(range(sq.ndim - grid.dim)))
    return np.sqrt(sq)


def field_band(grid: Grid, fhat: np.ndarray, tol: float = 1e-13) -> int:
    """Largest ``max_i |k_i|`` carrying a coefficient above ``tol`` (relative)."""
    mag = np.abs(fhat)
    if mag.ndim > grid.dim:
        mag = np.max(mag, axis=tuple(range(mag.ndim - grid.dim)))
    top = mag.max()
    if top == 0:
        return 0
    kmax = np.max(np.abs(grid.k), axis=0) * grid.length / (2 * np.pi)
    return int(round(kmax[mag > tol * top].max()))


# interpolation inequalities: (dim, lhs kind, power of ||f||_2, (top seminorm, its power))

INTERPOLATION = {
    "2d-linf": (2, "linf", 0.5, ("hess", 0.5)),
    "2d-l4-grad": (2, "l4", 0.5, ("grad", 0.5)),
    "2d-l4-hess": (2, "l4", 0.75, ("hess", 0.25)),
    "3d-linf": (3, "linf", 0.25, ("hess", 0.75)),
    "3d-l4-hess": (3, "l4", 0.625, ("hess", 0.375)),
    "3d-grad-hess": (3, "grad", 0.5, ("hess", 0.5)),
}


def check_interpolation(grid: Grid, fhat: np.ndarray, inequality_id: str) -> Ratio:
    """``lhs / (||f||_2^a ||∇^m f||_2^b)`` for one of the six interpolation inequalities."""
    dim, lhs_kind, a, (top, b) = INTERPOLATION[inequality_id]
    if grid.dim != dim:
        raise sp.DimensionError(f"{inequality_id} is a {dim}D inequality")
    _nonconstant(grid, fhat)
    lhs = {
        "linf": lambda: lp_norm(grid, fhat, math.inf),
        "l4": lambda: lp_norm(grid, fhat, 4),
        "grad": lambda: sobolev_seminorm(grid, fhat, 1),
    }[lhs_kind]()
    order = 2 if top == "hess" else 1
    rhs = sobolev_seminorm(grid, fhat, 0) ** a * sobolev_seminorm(grid, fhat, order) ** b
    return _ratio(lhs, rhs)


def check_gn(grid: Grid, fhat: np.ndarray, i: int, s: int) -> Ratio:
    """``||∇^i u||_{L^{2s/i}} / (||u||_inf^{1-i/s} ||∇^s u||_2^{i/s})``."""
    if not 1 <= i <= s <= 4:
        raise ValueError("need 1 <= i <= s <= 4")
    _nonconstant(grid, fhat)
    lhs = lp_norm_physical(grid, tensor_magnitude(grid, fhat, i), 2 * s / i)
    linf = lp_norm_physical(grid, grid.to_physical(fhat), math.inf)
    rhs = linf ** (1 - i / s) * sobolev_seminorm(grid, fhat, s) ** (i / s)
    return _ratio(lhs, rhs)


def commutator_norm(grid: Grid, uhat: np.ndarray, s: int) -> float:
    """``||∇^s((u.∇)u) - (u.∇)∇^s u||_2`` with exact (unmasked) grid products."""
    u = grid.to_physical(uhat)
    grad = lambda vhat: grid.to_physical(sp.gradient(grid, vhat))  # noqa: E731
    ax = -grid.dim - 1
    adv = grid.to_spectral(np.sum(u * grad(uhat), axis=ax))
    total = 0.0
    for alpha, w in multi_indices(grid.dim, s):
        d_u = partial(grid, uhat, alpha)
        c = partial(grid, adv, alpha) - grid.to_spectral(np.sum(u * grad(d_u), axis=ax))
        total += w * np.sum(np.abs(c) ** 2)
    return math.sqrt(grid.volume * total)


def check_commutator(grid: Grid, uhat: np.ndarray, s: int) -> Ratio:
    """Commutator ratio ``lhs / (||∇u||_inf ||∇^s u||_2)`` for divergence-free ``u``."""
    if s not in (1, 2, 3):
        raise ValueError("s must be 1, 2 or 3")
    band = field_band(grid, uhat)
    need = max(4 * band + 1, (s + 2) * band)
    if grid.n < need:
        raise BandTooWide(f"band {band} needs n >= {need}, grid has {grid.n}")
    _nonconstant(grid, uhat)
    lhs = commutator_norm(grid, uhat, s)
    grad_inf = float(np.max(tensor_magnitude(grid, uhat, 1)))
    return _ratio(lhs, grad_inf * sobolev_seminorm(grid, uhat, s))


def commutator_norm_dealiased(grid: Grid, uhat: np.ndarray) -> float:
    """``s = 1`` commutator assembled from :func:`spectral.dealiased_product` calls."""
    d = grid.dim
    total = 0.0
    for a in range(d):
        for i in range(d):
            adv = sum(sp.dealiased_product(grid, uhat[j], sp.derivative(grid, uhat[i], j)) for j in range(d))
            du = sp.derivative(grid, uhat[i], a)
            lower = sum(sp.dealiased_product(grid, uhat[j], sp.derivative(grid, du, j)) for j in range(d))
            c = sp.derivative(grid, adv, a) - lower
            total += np.sum(np.abs(c) ** 2)
    return math.sqrt(grid.volume * total)


@dataclass(frozen=True)
class LogSobolev:
    lhs: float
    bracket: float
    ratio: float
    l2: float
    curl_bmo: float
    w2p: float


def w2p_norm(grid: Grid, fhat: np.ndarray, p: float) -> float:
    """``sum_{|alpha| <= 2} ||∂^alpha f||_{L^p}`` on the physical grid."""
    total = lp_norm_physical(grid, grid.to_physical(fhat), p)
    for order in (1, 2):
        for alpha, _ in multi_indices(grid.dim, order):
            total += lp_norm_physical(grid, grid.to_physical(partial(grid, fhat, alpha)), p)
    return total


def check_log_sobolev(grid: Grid, fhat: np.ndarray, p: float = 4) -> LogSobolev:
    """``||∇f||_inf`` against ``1 + ||f||_2 + BMO(curl f) ln(1 + ||f||_{W^{2,p}})``."""
    if not p > grid.dim:
        raise ValueError(f"p must exceed the dimension {grid.dim}")
    if not sp.is_divergence_free(grid, fhat, rtol=1e-10):
        raise ValueError("field must be divergence-free")
    lhs = float(np.max(tensor_magnitude(grid, fhat, 1)))
    l2 = sobolev_seminorm(grid, fhat, 0)
    w = grid.to_physical(sp.curl(grid, fhat))
    bmo = bmo_seminorm_physical(grid, w) if grid.dim == 2 else sum(bmo_seminorm_physical(grid, c) for c in w)
    w2p = w2p_norm(grid, fhat, p)
    bracket = 1.0 + l2 + bmo * math.log1p(w2p)
    return LogSobolev(lhs, bracket, lhs / bracket, l2, bmo, w2p)


# registry


@dataclass(frozen=True)
class Inequality:
    id: str
    dim: int | None
    vector: bool
    homogeneous: bool
    check: Callable[[Grid, np.ndarray], Ratio]


def get_inequality(inequality_id: str) -> Inequality:
    """Resolve ids such as ``2d-linf``, ``gn-i1-s3``, ``commutator-s3``, ``log-sobolev-p4``."""
    if inequality_id in INTERPOLATION:
        dim = INTERPOLATION[inequality_id][0]
        return Inequality(inequality_id, dim, False, True, lambda g, f: check_interpolation(g, f, inequality_id))
    if m := re.fullmatch(r"gn-i(\d)-s(\d)", inequality_id):
        i, s = int(m[1]), int(m[2])
        if not 1 <= i <= s <= 4:
            raise KeyError(inequality_id)
        return Inequality(inequality_id, None, False, True, lambda g, f: check_gn(g, f, i, s))
    if m := re.fullmatch(r"commutator-s(\d)", inequality_id):
        s = int(m[1])
        return Inequality(inequality_id, None, True, True, lambda g, f: check_commutator(g, f, s))
    if m := re.fullmatch(r"log-sobolev(?:-p(\d+(?:\.\d+)?))?", inequality_id):
        p = float(m[1]) if m[1] else 4.0

        def check(g, f):
            r = check_log_sobolev(g, f, p)
            return Ratio(r.lhs, r.bracket, r.ratio)

        return Inequality(inequality_id, None, True, False, check)
    raise KeyError(f"unknown inequality {inequality_id!r}")


DEFAULT_SUITE = (
    "2d-linf",
    "2d-l4-grad",
    "2d-l4-hess",
    "3d-linf",
    "3d-l4-hess",
    "3d-grad-hess",
    "gn-i1-s2",
    "gn-i1-s3",
    "gn-i2-s3",
    "commutator-s1",
    "commutator-s2",
    "commutator-s3",
)


# families


def periodic_gaussian(grid: Grid, width: float = 1.0, center=None, images: int = 4) -> np.ndarray:
    """Physical samples of ``exp(-|x - x0|^2 / (2 width^2))`` summed over periodic images."""
    center = np.full(grid.dim, grid.length / 2) if center is None else np.asarray(center, float)
    out = np.ones(grid.shape)
    for a in range(grid.dim):
        x = grid.x[a] - center[a]
        g1 = sum(np.exp(-((x + m * grid.length) ** 2) / (2 * width**2)) for m in range(-images, images + 1))
        out = out * g1
    return out


@dataclass
class FieldFamily:
    """Generator of test fields for one inequality.

    ``kind`` is ``random`` (band-limited white noise), ``single-mode``
    (``sin(m x1)``, ``m = 1..``), ``gaussian`` (periodic bumps of shrinking
    width) or ``amplitude-sweep`` (one random field scaled by ``amplitudes``).
    Vector families are divergence-free.
    """

    kind: str
    dim: int = 2
    count: int = 1
    seed: int = 0
    band: int = 8
    n: int = 64
    amplitudes: Sequence[float] = (1.0, 10.0, 100.0, 1000.0)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.band > self.grid.cutoff:
            raise ValueError(f"band {self.band} exceeds dealias cutoff {self.grid.cutoff}")

    @property
    def grid(self) -> Grid:
        return Grid(self.dim, self.n)

    def generate(self, vector: bool = False) -> list[np.ndarray]:
        g = self.grid
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)
            return [random_field(g, rng, self.band, vector=vector) for _ in range(self.count)]
        if self.kind == "single-mode":
            out = []
            for i in range(self.count):
                m = 1 + i % self.band
                s = np.sin(m * g.x[0])
                comps = [np.zeros(g.shape)] * g.dim
                if vector:
                    comps[1] = s
                    out.append(g.to_spectral(np.stack(comps)))
                else:
                    out.append(g.to_spectral(s))
            return out
        if self.kind == "gaussian":
            out = []
            for i in range(self.count):
                width = 1.0 / (1.0 + 0.25 * i)
                bump = sp.dealias(g, g.to_spectral(periodic_gaussian(g, width)))
                bump[(0,) * g.dim] = 0.0
                if vector:
                    # divergence-free: ∇⊥ of the bump in 2D, curl of (0, 0, bump) in 3D
                    if g.dim == 2:
                        out.append(np.stack([sp.derivative(g, bump, 1), -sp.derivative(g, bump, 0)]))
                    else:
                        out.append(sp.curl3d(g, np.stack([np.zeros_like(bump), np.zeros_like(bump), bump])))
                else:
                    out.append(bump)
            return out
        if self.kind == "amplitude-sweep":
            base = random_field(g, np.random.default_rng(self.seed), self.band, vector=vector)
            return [a * base for a in list(self.amplitudes)[: self.count]]
        raise ValueError(f"unknown family kind {self.kind!r}")


@dataclass
class InequalityReport:
    inequality_id: str
    lhs: list = field(default_factory=list)
    rhs_without_constant: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    scaling_check: bool | None = None

    @property
    def fitted_constant(self) -> float:
        valid = [r for r in self.ratio if r is not None]
        return max(valid) if valid else math.nan

    @property
    def all_finite(self) -> bool:
        return all(r is not None and math.isfinite(r) and r >= 0 for r in self.ratio)

    def ndjson_lines(self) -> list[str]:
        lines = []
        for i, (l, r, q) in enumerate(zip(self.lhs, self.rhs_without_constant, self.ratio)):
            rec = {"inequality_id": self.inequality_id, "sample": i}
            if i in self.errors:
                rec["error"] = self.errors[i]
            else:
                rec.update(lhs=l, rhs_without_constant=r, ratio=q)
            lines.append(ndjson_line(rec))
        lines.append(
            ndjson_line(
                {
                    "inequality_id": self.inequality_id,
                    "summary": True,
                    "count": len(self.ratio),
                    "failed": len(self.errors),
                    "fitted_constant": self.fitted_constant,
                    "scaling_check": self.scaling_check,
                }
            )
        )
        return lines


def amplitude_invariant(ineq: Inequality, grid: Grid, fhat: np.ndarray, base: float, rtol: float = 1e-12) -> bool:
    for a in AMPLITUDES:
        r = ineq.check(grid, a * fhat).ratio
        if not abs(r - base) <= rtol * abs(base):
            return False
    return True


def fit_constants(
    family: FieldFamily | Sequence[np.ndarray],
    inequality_id: str,
    grid: Grid | None = None,
    scaling_samples: int | None = 1,
) -> InequalityReport:
    """Evaluate one inequality over a family; the fitted constant is the largest ratio.

    ``family`` may also be a plain list of spectral fields on ``grid``.
    ``scaling_samples`` limits how many valid samples get the amplitude-invariance
    check (``None`` checks all of them).
    """
    ineq = get_inequality(inequality_id)
    if isinstance(family, FieldFamily):
        grid = family.grid
        if ineq.dim is not None and ineq.dim != grid.dim:
            raise sp.DimensionError(f"{inequality_id} needs a {ineq.dim}D family")
        fields_ = family.generate(vector=ineq.vector)
    else:
        if grid is None:
            raise ValueError("grid is required for an explicit field list")
        fields_ = list(family)
    if not fields_:
        raise ValueError("family is empty")
    report = InequalityReport(inequality_id)
    checked = 0
    scaling_ok = True
    for i, f in enumerate(fields_):
        try:
            r = ineq.check(grid, f)
        except (DegenerateField, BandTooWide) as exc:
            report.errors[i] = f"{type(exc).__name__}: {exc}"
            report.lhs.append(None)
            report.rhs_without_constant.append(None)
            report.ratio.append(None)
            continue
        report.lhs.append(r.lhs)
        report.rhs_without_constant.append(r.rhs)
        report.ratio.append(r.ratio)
        if ineq.homogeneous and (scaling_samples is None or checked < scaling_samples):
            scaling_ok &= amplitude_invariant(ineq, grid, f, r.ratio)
            checked += 1
    report.scaling_check = (scaling_ok if checked else None) if ineq.homogeneous else None
    return report


def default_family(inequality_id: str, count: int = 200, seed: int = 0) -> FieldFamily:
    """Random band-limited family sized for the given inequality."""
    ineq = get_inequality(inequality_id)
    if ineq.dim == 3:
        return FieldFamily("random", dim=3, count=count, seed=seed, band=5, n=16)
    return FieldFamily("random", dim=2, count=count, seed=seed, band=8, n=64)


__all__ = [
    "BandTooWide",
    "DEFAULT_SUITE",
    "DegenerateField",
    "FieldFamily",
    "InequalityReport",
    "band_mask",
    "check_commutator",
    "check_gn",
    "check_interpolation",
    "check_log_sobolev",
    "fit_constants",
    "get_inequality",
]

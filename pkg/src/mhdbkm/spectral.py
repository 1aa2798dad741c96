"""Fourier representation of periodic fields on the torus.

Fields live in spectral space as full complex coefficient arrays with the
``norm="forward"`` convention, so that

    f(x) = sum_k fhat(k) exp(i k.x)

and ``fhat(0)`` is the mean of ``f``. A scalar field has shape ``(n,) * dim``;
a vector field carries a leading component axis, shape ``(dim,) + (n,) * dim``.
All operators act on the trailing ``dim`` axes, so they broadcast over any
leading batch/component axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class DimensionError(ValueError):
    """Operation called on a grid of the wrong dimension."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, length)^dim``.

    ``dealias_mask`` keeps exactly the modes with every ``|k_i| <= n // 3``.
    """

    dim: int
    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def cutoff(self) -> int:
        """Largest integer wavenumber kept by the 2/3 rule."""
        return self.n // 3

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer frequency table (FFT ordering) shared by every axis."""
        return np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n)).astype(int)

    @cached_property
    def k(self) -> np.ndarray:
        """Physical wavevector components, shape ``(dim,) + shape``."""
        scale = 2 * np.pi / self.length
        k1 = self.wavenumbers * scale
        return np.stack(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """``1/|k|^2`` with the mean mode mapped to zero."""
        out = np.zeros(self.shape)
        nz = self.k2 > 0
        out[nz] = 1.0 / self.k2[nz]
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m = np.abs(self.wavenumbers) <= self.cutoff
        mask = m
        for _ in range(self.dim - 1):
            mask = np.multiply.outer(mask, m)
        return mask

    @cached_property
    def non_nyquist(self) -> np.ndarray:
        """Per axis, False on the Nyquist plane of that axis."""
        return np.abs(self.k * self.length / (2 * np.pi)) < self.n / 2 - 0.5

    @cached_property
    def ik(self) -> np.ndarray:
        """``i k`` per axis with the Nyquist planes zeroed (odd derivatives)."""
        return 1j * self.k * self.non_nyquist

    @cached_property
    def x(self) -> np.ndarray:
        """Physical coordinates, shape ``(dim,) + shape``."""
        x1 = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    # transforms

    # Real transforms are used internally; the full Hermitian spectrum is
    # rebuilt from the half spectrum so callers always see all modes.

    def to_spectral(self, f: np.ndarray) -> np.ndarray:
        n, h = self.n, self.n // 2 + 1
        half = sfft.rfftn(f, axes=self.axes, norm="forward")
        full = np.empty(half.shape[:-1] + (n,), dtype=complex)
        full[..., :h] = half
        mirror = half[..., 1 : n - h + 1][..., ::-1]
        for ax in self.axes[:-1]:
            mirror = np.roll(np.flip(mirror, axis=ax), 1, axis=ax)
        full[..., h:] = np.conj(mirror)
        return full

    def to_physical(self, fhat: np.ndarray) -> np.ndarray:
        """Real field of a Hermitian spectrum (anti-Hermitian parts are dropped)."""
        return sfft.irfftn(fhat[..., : self.n // 2 + 1], s=self.shape, axes=self.axes, norm="forward")

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.dim, self.n * factor, self.length)


def is_hermitian(grid: Grid, fhat: np.ndarray, tol: float = 1e-12) -> bool:
    """True when ``fhat(-k) == conj(fhat(k))``, i.e. the field is real."""
    flipped = np.flip(fhat, axis=grid.axes)
    flipped = np.roll(flipped, 1, axis=grid.axes)
    scale = max(np.max(np.abs(fhat)), 1.0)
    return bool(np.max(np.abs(flipped - np.conj(fhat))) <= tol * scale)


def resample(fhat: np.ndarray, src: Grid, dst: Grid) -> np.ndarray:
    """Copy the coefficients of a band-limited field onto a grid of another size.

    Modes that do not exist on ``dst`` are dropped; the Nyquist plane is
    never carried over.
    """
    if src.dim != dst.dim:
        raise DimensionError("grids differ in dimension")
    lead = fhat.shape[: fhat.ndim - src.dim]
    out = np.zeros(lead + dst.shape, dtype=complex)
    kmax = min(src.n, dst.n) // 2 - 1
    idx = np.r_[0 : kmax + 1, -kmax:0]
    sel = np.ix_(*([idx] * src.dim))
    out[(...,) + sel] = fhat[(...,) + sel]
    return out


# calculus


def derivative(grid: Grid, fhat: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Multiply by ``(i k_axis)^order``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0 <= axis < grid.dim:
        raise DimensionError(f"axis {axis} out of range for dim {grid.dim}")
    if order == 1:
        return grid.ik[axis] * fhat
    # the Nyquist mode has no real-valued odd derivative
    ik = grid.ik[axis] if order % 2 else 1j * grid.k[axis]
    return ik**order * fhat


def gradient(grid: Grid, fhat: np.ndarray) -> np.ndarray:
    """Gradient of scalar(s); the new component axis is inserted just before the
    spatial axes."""
    return grid.ik * np.expand_dims(fhat, -grid.dim - 1)


def divergence(grid: Grid, vhat: np.ndarray) -> np.ndarray:
    return sum(derivative(grid, np.take(vhat, a, axis=-grid.dim - 1), a) for a in range(grid.dim))


def laplacian(grid: Grid, fhat: np.ndarray) -> np.ndarray:
    return -grid.k2 * fhat


def inverse_laplacian(grid: Grid, fhat: np.ndarray) -> np.ndarray:
    """Solve ``Δg = f`` with zero mean for ``g``."""
    return -grid.inv_k2 * fhat


def curl2d(grid: Grid, vhat: np.ndarray) -> np.ndarray:
    """Scalar curl ``∂1 v2 - ∂2 v1``."""
    if grid.dim != 2:
        raise DimensionError("curl2d requires a 2D grid")
    return derivative(grid, vhat[1], 0) - derivative(grid, vhat[0], 1)


def curl3d(grid: Grid, vhat: np.ndarray) -> np.ndarray:
    if grid.dim != 3:
        raise DimensionError("curl3d requires a 3D grid")
    d = lambda f, a: derivative(grid, f, a)  # noqa: E731
    return np.stack(
        [
            d(vhat[2], 1) - d(vhat[1], 2),
            d(vhat[0], 2) - d(vhat[2], 0),
            d(vhat[1], 0) - d(vhat[0], 1),
        ]
    )


def curl(grid: Grid, vhat: np.ndarray) -> np.ndarray:
    return curl2d(grid, vhat) if grid.dim == 2 else curl3d(grid, vhat)


def velocity_from_vorticity_2d(grid: Grid, omega_hat: np.ndarray) -> np.ndarray:
    """Mean-free divergence-free field whose curl is ``omega``.

    With stream function ``psi = -Δ^{-1} omega`` the field is ``(∂2 psi, -∂1 psi)``.
    """
    if grid.dim != 2:
        raise DimensionError("requires a 2D grid")
    psi = grid.inv_k2 * omega_hat
    return np.stack([derivative(grid, psi, 1), -derivative(grid, psi, 0)])


def leray_project(grid: Grid, vhat: np.ndarray) -> np.ndarray:
    """Remove the gradient part of ``v`` mode by mode; the mean is untouched."""
    k = grid.k
    kdotv = np.sum(k * vhat, axis=-grid.dim - 1, keepdims=True)
    return vhat - k * (kdotv * grid.inv_k2)


def max_divergence(grid: Grid, vhat: np.ndarray) -> float:
    """``max_k |k . vhat(k)|``."""
    return float(np.max(np.abs(np.sum(grid.k * vhat, axis=-grid.dim - 1))))


def is_divergence_free(grid: Grid, vhat: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = float(np.max(np.abs(vhat)))
    return max_divergence(grid, vhat) <= rtol * max(scale, np.finfo(float).tiny)


# products


def dealias(grid: Grid, fhat: np.ndarray) -> np.ndarray:
    return np.where(grid.dealias_mask, fhat, 0.0)


def dealiased_product(grid: Grid, fhat: np.ndarray, ghat: np.ndarray) -> np.ndarray:
    """Pointwise product with the 2/3 rule applied to inputs and output."""
    f = grid.to_physical(dealias(grid, fhat))
    g = grid.to_physical(dealias(grid, ghat))
    return dealias(grid, grid.to_spectral(f * g))


def advect(grid: Grid, a_phys: np.ndarray, bhat: np.ndarray) -> np.ndarray:
    """Dealiased ``(a.∇) b`` for a physical-space vector ``a`` and spectral ``b``.

    ``b`` may be scalar or vector. ``a`` is assumed already band-limited to
    the kept modes.
    """
    grad_b = grid.to_physical(gradient(grid, dealias(grid, bhat)))
    # derivative axis of grad_b lines up with the component axis of a
    prod = np.sum(a_phys * grad_b, axis=-grid.dim - 1)
    return dealias(grid, grid.to_spectral(prod))


def recover_pressure(grid: Grid, uhat: np.ndarray, hhat: np.ndarray, kind: str = "total") -> np.ndarray:
    """Pressure eliminated by the Leray projection, mean zero.

    ``kind="total"`` returns ``q = p + |h|^2/2`` solving
    ``-Δq = div(u.∇u - (h.∇)h)``; ``kind="fluid"`` returns ``p`` itself.
    """
    u = grid.to_physical(uhat)
    h = grid.to_physical(hhat)
    forcing = advect(grid, h, hhat) - advect(grid, u, uhat)
    # u_t = forcing - ∇q and div u_t = 0 give Δq = div(forcing)
    q = inverse_laplacian(grid, divergence(grid, forcing))
    if kind == "total":
        return q
    if kind == "fluid":
        mag = 0.5 * dealias(grid, grid.to_spectral(np.sum(h * h, axis=0)))
        p = q - mag
        p[(0,) * grid.dim] = 0.0
        return p
    raise ValueError(f"unknown pressure kind {kind!r}")

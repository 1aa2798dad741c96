"""Initial-condition catalogue."""

from __future__ import annotations

import numpy as np

from . import spectral as sp
from .dynamics import MHDState
from .spectral import Grid

SCENARIOS = ("taylor-green-euler", "single-mode-magnetic", "orszag-tang", "random-band")


class UnknownScenario(ValueError):
    pass


def band_mask(grid: Grid, band: int) -> np.ndarray:
    """Modes with every ``|k_i| <= band``."""
    m = np.abs(grid.wavenumbers) <= band
    mask = m
    for _ in range(grid.dim - 1):
        mask = np.multiply.outer(mask, m)
    return mask


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    band: int,
    vector: bool = False,
    solenoidal: bool = True,
    l2: float | None = 1.0,
) -> np.ndarray:
    """White-noise field restricted to ``|k_i| <= band`` with zero mean.

    Vector fields are Leray-projected when ``solenoidal``. The result is scaled
    to the requested L^2 norm (``None`` leaves it unscaled).
    """
    if not 1 <= band <= grid.cutoff:
        raise ValueError(f"band must lie in [1, {grid.cutoff}], got {band}")
    shape = ((grid.dim,) if vector else ()) + grid.shape
    fhat = grid.to_spectral(rng.standard_normal(shape)) * band_mask(grid, band)
    fhat[(...,) + (0,) * grid.dim] = 0.0
    if vector and solenoidal:
        fhat = sp.leray_project(grid, fhat)
    if l2 is not None:
        norm = np.sqrt(grid.volume * np.sum(np.abs(fhat) ** 2))
        fhat = fhat * (l2 / norm)
    return fhat


def _vec(grid: Grid, *components) -> np.ndarray:
    return grid.to_spectral(np.stack([np.broadcast_to(c, grid.shape) for c in components]))


def make_ic(scenario: str, grid: Grid, params: dict | None = None, seed: int = 0) -> MHDState:
    """Build the initial state of a named scenario.

    ``orszag-tang`` accepts ``beta`` (magnetic amplitude, default 1);
    ``random-band`` accepts ``band`` (default 4), ``amplitude`` (L^2 norm of
    each field, default 1) and ``magnetic`` (ratio of field norms, default 1).
    """
    params = dict(params or {})
    x = grid.x
    zero = np.zeros(grid.shape)
    d = grid.dim

    def take(name, default):
        return float(params.pop(name, default))

    if scenario == "taylor-green-euler":
        if d == 2:
            u = _vec(grid, -np.sin(x[1]), np.sin(x[0]))
        else:
            u = _vec(
                grid,
                np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]),
                -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]),
                zero,
            )
        h = np.zeros_like(u)
    elif scenario == "single-mode-magnetic":
        h = _vec(grid, np.sin(x[1]), *([zero] * (d - 1)))
        u = np.zeros_like(h)
    elif scenario == "orszag-tang":
        if d != 2:
            raise ValueError("orszag-tang is two-dimensional")
        beta = take("beta", 1.0)
        u = _vec(grid, -np.sin(x[1]), np.sin(x[0]))
        h = beta * _vec(grid, -np.sin(x[1]), np.sin(2 * x[0]))
    elif scenario == "random-band":
        band = int(take("band", 4))
        amplitude = take("amplitude", 1.0)
        ratio = take("magnetic", 1.0)
        if amplitude < 0 or ratio < 0:
            raise ValueError("amplitude and magnetic must be >= 0")
        rng = np.random.default_rng(seed)
        u = random_field(grid, rng, band, vector=True, l2=amplitude)
        h = random_field(grid, rng, band, vector=True, l2=amplitude * ratio)
    else:
        raise UnknownScenario(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    if params:
        raise ValueError(f"unused parameters for {scenario}: {sorted(params)}")
    u, h = sp.dealias(grid, u), sp.dealias(grid, h)
    if scenario != "random-band":
        # analytic fields: clear transform round-off so they are exactly single-mode
        u[np.abs(u) < 1e-14] = 0.0
        h[np.abs(h) < 1e-14] = 0.0
    return MHDState(grid, 0.0, u, h)

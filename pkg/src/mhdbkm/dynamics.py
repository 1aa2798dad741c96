"""Time integration of incompressible MHD with zero viscosity and resistivity nu > 0.

    u_t + (u.∇)u + ∇q = (h.∇)h
    h_t + (u.∇)h - (h.∇)u = nu Δh
    div u = div h = 0

The pressure ``q`` is never stepped; it is removed by Leray projection. In
2D the same dynamics can be advanced in vorticity/current form
``(omega, j) = (curl u, curl h)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import spectral as sp
from .spectral import Grid

log = logging.getLogger(__name__)

SCHEMES = ("if-rk4", "imex-euler")


class CflViolation(RuntimeError):
    def __init__(self, t: float, dt: float, dt_max: float):
        super().__init__(f"dt={dt:g} exceeds advective limit {dt_max:g} at t={t:g}")
        self.t, self.dt, self.dt_max = t, dt, dt_max


class NonFinite(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"non-finite coefficients after step ending at t={t:g}")
        self.t = t


@dataclass(frozen=True)
class MHDState:
    """Velocity ``u`` and magnetic field ``h`` as spectral vectors at time ``t``."""

    grid: Grid
    t: float
    u: np.ndarray
    h: np.ndarray

    def physical(self) -> tuple[np.ndarray, np.ndarray]:
        return self.grid.to_physical(self.u), self.grid.to_physical(self.h)

    def check(self, rtol: float = 1e-10) -> None:
        """Raise ``ValueError`` if any state invariant is broken."""
        g = self.grid
        zero = (slice(None),) + (0,) * g.dim
        for name, v in (("u", self.u), ("h", self.h)):
            if v.shape != (g.dim,) + g.shape:
                raise ValueError(f"{name} has shape {v.shape}")
            scale = max(float(np.max(np.abs(v))), 1.0)
            if sp.max_divergence(g, v) > rtol * scale:
                raise ValueError(f"{name} is not divergence-free")
            if np.max(np.abs(v[zero])) > rtol * scale:
                raise ValueError(f"{name} has a nonzero mean")
            if not sp.is_hermitian(g, v, tol=rtol):
                raise ValueError(f"{name} is not real-valued")


@dataclass(frozen=True)
class StepperConfig:
    nu: float
    dt: float
    scheme: str = "if-rk4"
    cfl_limit: float = 0.5

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be > 0 (the ideal system is not integrated)")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not 0 < self.cfl_limit <= 1:
            raise ValueError("cfl_limit must lie in (0, 1]")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")


# right-hand sides


def nonlinear_primitive(grid: Grid, uhat: np.ndarray, hhat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transport part of the primitive RHS, without resistive diffusion."""
    u = grid.to_physical(sp.dealias(grid, uhat))
    h = grid.to_physical(sp.dealias(grid, hhat))
    # one batched gradient transform for both fields
    grads = grid.to_physical(sp.gradient(grid, sp.dealias(grid, np.stack([uhat, hhat]))))
    gu, gh = grads[0], grads[1]
    ax = -grid.dim - 1
    # (a.∇)b_i = sum_j a_j ∂_j b_i ; the derivative axis of gu/gh aligns with a's component axis
    mom = np.sum(h * gh, axis=ax) - np.sum(u * gu, axis=ax)
    ind = np.sum(h * gu, axis=ax) - np.sum(u * gh, axis=ax)
    out = sp.dealias(grid, grid.to_spectral(np.stack([mom, ind])))
    return sp.leray_project(grid, out[0]), sp.leray_project(grid, out[1])


def rhs_primitive(state: MHDState, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """``(du/dt, dh/dt)`` in spectral space."""
    g = state.grid
    du, dh = nonlinear_primitive(g, state.u, state.h)
    return du, dh + nu * sp.laplacian(g, state.h)


def tr_grad_u_perp_h(grid: Grid, gu: np.ndarray, gh: np.ndarray) -> np.ndarray:
    """``tr(∇u ∇⊥h)`` from physical gradients ``g[i, j] = ∂_j f_i``.

    ``∇⊥h`` has rows ``(-∂2 h_i, ∂1 h_i)``.
    """
    perp = np.stack([-gh[:, 1], gh[:, 0]], axis=1)  # perp[i, a]
    # tr(A B) = sum_{i,a} A[i, a] B[a, i]
    return np.einsum("ia...,ai...->...", gu, perp)


def rhs_vorticity_2d(grid: Grid, omega: np.ndarray, j: np.ndarray, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """``(dω/dt, dj/dt)`` of the curl system, in spectral space."""
    if grid.dim != 2:
        raise sp.DimensionError("vorticity form is two-dimensional")
    domega, dj = nonlinear_vorticity_2d(grid, omega, j)
    return domega, dj + nu * sp.laplacian(grid, j)


def nonlinear_vorticity_2d(grid: Grid, omega: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if grid.dim != 2:
        raise sp.DimensionError("vorticity form is two-dimensional")
    omega = sp.dealias(grid, omega)
    j = sp.dealias(grid, j)
    uhat = sp.velocity_from_vorticity_2d(grid, omega)
    hhat = sp.velocity_from_vorticity_2d(grid, j)
    u, h = grid.to_physical(np.stack([uhat, hhat]))
    grads = grid.to_physical(
        np.stack([sp.gradient(grid, uhat), sp.gradient(grid, hhat)])
    )
    gu, gh = grads
    gw, gj = grid.to_physical(np.stack([sp.gradient(grid, omega), sp.gradient(grid, j)]))
    dw = np.sum(h * gj, axis=0) - np.sum(u * gw, axis=0)
    dj = np.sum(h * gw, axis=0) - np.sum(u * gj, axis=0) + 2 * tr_grad_u_perp_h(grid, gu, gh)
    out = sp.dealias(grid, grid.to_spectral(np.stack([dw, dj])))
    return out[0], out[1]


# stepping


def max_speed(state: MHDState) -> float:
    u, h = state.physical()
    return float(max(np.max(np.sqrt(np.sum(u * u, axis=0))), np.max(np.sqrt(np.sum(h * h, axis=0)))))


def check_cfl(state: MHDState, cfg: StepperConfig, dt: float | None = None) -> None:
    dt = cfg.dt if dt is None else dt
    vmax = max_speed(state)
    if vmax > 0:
        dt_max = cfg.cfl_limit * state.grid.dx / vmax
        if dt > dt_max:
            raise CflViolation(state.t, dt, dt_max)


def _if_rk4(y: np.ndarray, decay: np.ndarray, dt: float, nonlinear: Callable) -> np.ndarray:
    """Classical RK4 on the integrating-factor variables; ``decay`` is ``-nu|k|^2``
    broadcast to ``y`` (zero where a component is not diffused)."""
    e_half = np.exp(decay * (dt / 2))
    e_full = e_half * e_half
    k1 = nonlinear(y)
    k2 = nonlinear(e_half * (y + (dt / 2) * k1))
    k3 = nonlinear(e_half * y + (dt / 2) * k2)
    k4 = nonlinear(e_full * y + dt * (e_half * k3))
    return e_full * (y + (dt / 6) * k1) + (dt / 3) * e_half * (k2 + k3) + (dt / 6) * k4


def _imex_euler(y: np.ndarray, decay: np.ndarray, dt: float, nonlinear: Callable) -> np.ndarray:
    return (y + dt * nonlinear(y)) / (1 - dt * decay)


_SCHEMES = {"if-rk4": _if_rk4, "imex-euler": _imex_euler}


def step(state: MHDState, cfg: StepperConfig, dt: float | None = None, check: bool = True) -> MHDState:
    """Advance by one step of ``dt`` (default ``cfg.dt``)."""
    g = state.grid
    dt = cfg.dt if dt is None else dt
    if check:
        check_cfl(state, cfg, dt)
    decay = np.stack([np.zeros(g.shape), np.broadcast_to(-cfg.nu * g.k2, g.shape)])[:, None]

    def nonlinear(y):
        return np.stack(nonlinear_primitive(g, y[0], y[1]))

    y = _SCHEMES[cfg.scheme](np.stack([state.u, state.h]), decay, dt, nonlinear)
    t = state.t + dt
    if not np.all(np.isfinite(y)):
        raise NonFinite(t)
    y = sp.dealias(g, sp.leray_project(g, y))
    return MHDState(g, t, y[0], y[1])


@dataclass(frozen=True)
class VorticityState:
    """2D state in curl form: ``omega = curl u``, ``j = curl h``."""

    grid: Grid
    t: float
    omega: np.ndarray
    j: np.ndarray

    @classmethod
    def from_primitive(cls, state: MHDState) -> "VorticityState":
        g = state.grid
        return cls(g, state.t, sp.curl2d(g, state.u), sp.curl2d(g, state.h))

    def to_primitive(self) -> MHDState:
        g = self.grid
        return MHDState(
            g, self.t, sp.velocity_from_vorticity_2d(g, self.omega), sp.velocity_from_vorticity_2d(g, self.j)
        )


def step_vorticity_2d(state: VorticityState, cfg: StepperConfig, dt: float | None = None) -> VorticityState:
    g = state.grid
    dt = cfg.dt if dt is None else dt
    decay = np.stack([np.zeros(g.shape), -cfg.nu * g.k2])

    def nonlinear(y):
        return np.stack(nonlinear_vorticity_2d(g, y[0], y[1]))

    y = _SCHEMES[cfg.scheme](np.stack([state.omega, state.j]), decay, dt, nonlinear)
    t = state.t + dt
    if not np.all(np.isfinite(y)):
        raise NonFinite(t)
    y = sp.dealias(g, y)
    y[(slice(None),) + (0,) * g.dim] = 0.0
    return VorticityState(g, t, y[0], y[1])


def step_times(t0: float, t_end: float, dt: float) -> Iterator[float]:
    """Step sizes covering ``[t0, t_end]``; the last one is shortened if needed."""
    n_full = math.floor((t_end - t0) / dt + 1e-9)
    for _ in range(n_full):
        yield dt
    rest = t_end - (t0 + n_full * dt)
    if rest > 1e-9 * dt:
        yield rest


def integrate_vorticity_2d(state: VorticityState, cfg: StepperConfig, t_end: float) -> VorticityState:
    for dt in step_times(state.t, t_end, cfg.dt):
        state = step_vorticity_2d(state, cfg, dt)
    return state


def integrate(state: MHDState, cfg: StepperConfig, t_end: float, check: bool = True) -> MHDState:
    """Plain time integration without diagnostics."""
    for dt in step_times(state.t, t_end, cfg.dt):
        state = step(state, cfg, dt, check=check)
    return state


# runs with monitoring


class BlowupSuspected(RuntimeError):
    def __init__(self, t: float, reason: str):
        super().__init__(f"blow-up suspected at t={t:g}: {reason}")
        self.t, self.reason = t, reason


@dataclass
class RunResult:
    state: MHDState
    records: list = field(default_factory=list)
    status: str = "ok"
    reason: str = ""
    steps: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run(
    initial: MHDState,
    cfg: StepperConfig,
    t_end: float,
    cadence: int = 1,
    monitor=None,
    on_record: Callable | None = None,
    on_step: Callable | None = None,
    step0: int = 0,
) -> RunResult:
    """Repeated :func:`step` with diagnostics every ``cadence`` steps.

    ``monitor`` is a :class:`mhdbkm.diagnostics.Monitor` (one is created if
    omitted); it may raise :class:`BlowupSuspected`, which ends the run with
    status ``"blowup-suspected"``. A non-finite step ends the run the same way.
    ``step0`` is the global step index of ``initial`` and sets the cadence phase.
    ``on_step(state, step_index)`` is called after every step.
    """
    if t_end < initial.t:
        raise ValueError("t_end precedes the initial time")
    result = RunResult(initial)
    if t_end == initial.t:
        return result
    if monitor is None:
        from .diagnostics import Monitor

        monitor = Monitor(cfg.nu)

    def emit(s, n):
        rec = monitor.observe(s, step=n)
        result.records.append(rec)
        if on_record is not None:
            on_record(rec)
        monitor.check(rec)

    state = initial
    n = step0
    try:
        if not monitor.seeded:
            emit(state, n)
        for dt in step_times(initial.t, t_end, cfg.dt):
            state = step(state, cfg, dt)
            n += 1
            result.state, result.steps = state, n - step0
            last = math.isclose(state.t, t_end, rel_tol=0, abs_tol=1e-9 * cfg.dt)
            if (n % cadence == 0) or last:
                emit(state, n)
            if on_step is not None:
                on_step(state, n)
    except NonFinite as exc:
        log.warning("run stopped: %s", exc)
        result.status, result.reason = "blowup-suspected", f"non-finite state at t={exc.t:.17g}"
    except BlowupSuspected as exc:
        log.warning("run stopped: %s", exc)
        result.status, result.reason = "blowup-suspected", exc.reason
    return result


__all__ = [
    "BlowupSuspected",
    "CflViolation",
    "MHDState",
    "NonFinite",
    "RunResult",
    "StepperConfig",
    "VorticityState",
    "check_cfl",
    "integrate",
    "integrate_vorticity_2d",
    "nonlinear_primitive",
    "nonlinear_vorticity_2d",
    "rhs_primitive",
    "rhs_vorticity_2d",
    "run",
    "step",
    "step_vorticity_2d",
]

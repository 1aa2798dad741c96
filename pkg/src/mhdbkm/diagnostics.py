"""Norms and monitored quantities of a running simulation.

Every norm uses the torus measure: ``||f||_2^2 = L^d * sum_k |fhat(k)|^2``
spectrally, or ``dx^d * sum_x |f(x)|^p`` on the grid. Vector fields are
measured with the pointwise Euclidean norm over components.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from typing import IO, Iterable, Sequence

import numpy as np

from . import spectral as sp
from .dynamics import BlowupSuspected, MHDState
from .spectral import Grid


class UnsupportedExponent(ValueError):
    pass


class NotApplicable(ValueError):
    """The check has nothing to say about this input (e.g. zero initial curls)."""


# norms


def lp_norm_physical(grid: Grid, f: np.ndarray, p: float) -> float:
    """Grid L^p norm of a physical field; ``p`` may be any value >= 1 or ``inf``."""
    a = np.abs(f) if f.ndim == grid.dim else np.sqrt(np.sum(f * f, axis=tuple(range(f.ndim - grid.dim))))
    if p == math.inf:
        return float(np.max(a))
    return float((np.sum(a**p) * grid.cell_volume) ** (1.0 / p))


def lp_norm(grid: Grid, fhat: np.ndarray, p: float) -> float:
    """L^p norm of a spectral field for ``p`` in {2, 4, inf}.

    L^2 is taken by Parseval; the other two on the physical grid.
    """
    if p == 2:
        return float(math.sqrt(grid.volume * np.sum(np.abs(fhat) ** 2)))
    if p in (4, math.inf):
        return lp_norm_physical(grid, grid.to_physical(fhat), p)
    raise UnsupportedExponent(f"p={p!r} not in {{2, 4, inf}}")


def sobolev_seminorm(grid: Grid, fhat: np.ndarray, s: int) -> float:
    """``||∇^s f||_2`` of the full derivative tensor, via the ``|k|^s`` multiplier."""
    if s < 0:
        raise ValueError("s must be >= 0")
    weight = grid.k2**s if s else 1.0
    return float(math.sqrt(grid.volume * np.sum(weight * np.abs(fhat) ** 2)))


def bmo_levels(n: int) -> range:
    """Dyadic levels ``j`` whose cubes have side ``n / 2**j >= 4`` points."""
    return range(0, int(round(math.log2(n))) - 1)


def bmo_seminorm_physical(grid: Grid, f: np.ndarray) -> float:
    """Largest mean absolute deviation over grid-aligned dyadic cubes.

    Cube sums use ``math.fsum``, so the result does not depend on the order
    in which points are visited.
    """
    n, d = grid.n, grid.dim
    if n & (n - 1):
        raise ValueError("dyadic BMO needs a power-of-two grid")
    best = 0.0
    for j in bmo_levels(n):
        nb, b = 1 << j, n >> j
        blocks = f.reshape(sum(((nb, b) for _ in range(d)), ()))
        order = tuple(range(0, 2 * d, 2)) + tuple(range(1, 2 * d, 2))
        blocks = blocks.transpose(order).reshape(nb**d, b**d)
        cnt = b**d
        for row in blocks:
            m = math.fsum(row.tolist()) / cnt
            dev = math.fsum(np.abs(row - m).tolist()) / cnt
            if dev > best:
                best = dev
    return best


def bmo_seminorm(grid: Grid, fhat: np.ndarray) -> float:
    """Discrete BMO seminorm of a spectral scalar field."""
    return bmo_seminorm_physical(grid, grid.to_physical(fhat))


def curl_bmo(grid: Grid, uhat: np.ndarray) -> float:
    """BMO of ``curl u``; in 3D the component seminorms are summed."""
    w = grid.to_physical(sp.curl(grid, uhat))
    if grid.dim == 2:
        return bmo_seminorm_physical(grid, w)
    return sum(bmo_seminorm_physical(grid, c) for c in w)


# records


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    step: int
    energy: float
    resistive_dissipation: float
    dissipation_integral: float
    energy_residual: float
    energy_residual_rel: float
    l2_u: float
    l2_h: float
    hdot1_u: float
    hdot1_h: float
    hdot3_u: float
    hdot3_h: float
    curl_u_linf: float
    curl_u_bmo: float
    bkm_integral: float
    m_of_t: float
    curl_u_l2: float
    curl_h_l2: float
    grad_curl_h_l2: float
    grad_h_sq_integral: float
    gronwall_lhs: float
    gronwall_envelope: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DiagnosticsRecord":
        return cls(**{f.name: d[f.name] for f in fields(cls)})


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class FieldNorms:
    """Instantaneous norms of one state."""

    energy: float
    l2_u: float
    l2_h: float
    hdot1_u: float
    hdot1_h: float
    hdot3_u: float
    hdot3_h: float
    curl_u_linf: float
    curl_u_bmo: float
    curl_u_l2: float
    curl_h_l2: float
    grad_curl_h_l2: float

    @classmethod
    def of(cls, state: MHDState) -> "FieldNorms":
        g = state.grid
        wu = sp.curl(g, state.u)
        wh = sp.curl(g, state.h)
        l2_u = sobolev_seminorm(g, state.u, 0)
        l2_h = sobolev_seminorm(g, state.h, 0)
        return cls(
            energy=0.5 * (l2_u**2 + l2_h**2),
            l2_u=l2_u,
            l2_h=l2_h,
            hdot1_u=sobolev_seminorm(g, state.u, 1),
            hdot1_h=sobolev_seminorm(g, state.h, 1),
            hdot3_u=sobolev_seminorm(g, state.u, 3),
            hdot3_h=sobolev_seminorm(g, state.h, 3),
            curl_u_linf=lp_norm(g, wu, math.inf),
            curl_u_bmo=curl_bmo(g, state.u),
            curl_u_l2=sobolev_seminorm(g, wu, 0),
            curl_h_l2=sobolev_seminorm(g, wh, 0),
            grad_curl_h_l2=sobolev_seminorm(g, wh, 1),
        )


class Monitor:
    """Turns a sequence of states into :class:`DiagnosticsRecord` values.

    Time integrals use the trapezoid rule between consecutive observations.
    ``gronwall_envelope`` is evaluated with the constant ``gronwall_c``; the
    minimal admissible constant is fitted afterwards by :func:`gronwall_2d_check`.
    """

    def __init__(self, nu: float, bkm_ceiling: float | None = None, gronwall_c: float = 1.0):
        self.nu = nu
        self.bkm_ceiling = bkm_ceiling
        self.gronwall_c = gronwall_c
        self.acc: dict | None = None

    @property
    def seeded(self) -> bool:
        return self.acc is not None

    def state_dict(self) -> dict:
        return dict(self.acc) if self.acc else {}

    def load_state_dict(self, acc: dict) -> None:
        self.acc = dict(acc) if acc else None

    def observe(self, state: MHDState, step: int = 0) -> DiagnosticsRecord:
        nm = FieldNorms.of(state)
        nu = self.nu
        diss = nu * nm.hdot1_h**2
        grad_j_sq = nm.grad_curl_h_l2**2
        grad_h_sq = nm.hdot1_h**2
        m_now = nm.hdot3_u**2 + nm.hdot3_h**2
        a = self.acc
        if a is None:
            a = self.acc = dict(
                t=state.t,
                e0=nm.energy,
                q0=nm.curl_u_l2**2 + nm.curl_h_l2**2,
                diss=diss,
                bmo=nm.curl_u_bmo,
                grad_j_sq=grad_j_sq,
                grad_h_sq=grad_h_sq,
                diss_int=0.0,
                bkm_int=0.0,
                grad_j_int=0.0,
                grad_h_int=0.0,
                m=m_now,
            )
        else:
            half = 0.5 * (state.t - a["t"])
            a["diss_int"] += half * (a["diss"] + diss)
            a["bkm_int"] += half * (a["bmo"] + nm.curl_u_bmo)
            a["grad_j_int"] += half * (a["grad_j_sq"] + grad_j_sq)
            a["grad_h_int"] += half * (a["grad_h_sq"] + grad_h_sq)
            a["m"] = max(a["m"], m_now)
            a.update(t=state.t, diss=diss, bmo=nm.curl_u_bmo, grad_j_sq=grad_j_sq, grad_h_sq=grad_h_sq)
        residual = nm.energy - a["e0"] + a["diss_int"]
        rec = DiagnosticsRecord(
            t=state.t,
            step=step,
            energy=nm.energy,
            resistive_dissipation=diss,
            dissipation_integral=a["diss_int"],
            energy_residual=residual,
            energy_residual_rel=residual / a["e0"] if a["e0"] > 0 else 0.0,
            l2_u=nm.l2_u,
            l2_h=nm.l2_h,
            hdot1_u=nm.hdot1_u,
            hdot1_h=nm.hdot1_h,
            hdot3_u=nm.hdot3_u,
            hdot3_h=nm.hdot3_h,
            curl_u_linf=nm.curl_u_linf,
            curl_u_bmo=nm.curl_u_bmo,
            bkm_integral=a["bkm_int"],
            m_of_t=a["m"],
            curl_u_l2=nm.curl_u_l2,
            curl_h_l2=nm.curl_h_l2,
            grad_curl_h_l2=nm.grad_curl_h_l2,
            grad_h_sq_integral=a["grad_h_int"],
            gronwall_lhs=nm.curl_u_l2**2 + nm.curl_h_l2**2 + nu * a["grad_j_int"],
            gronwall_envelope=a["q0"] * _exp(2 * self.gronwall_c / nu * a["grad_h_int"]),
        )
        return rec

    def check(self, rec: DiagnosticsRecord) -> None:
        """Raise :class:`BlowupSuspected` if the BKM integrand passed the ceiling."""
        if self.bkm_ceiling is not None and not rec.curl_u_bmo <= self.bkm_ceiling:
            raise BlowupSuspected(rec.t, f"BMO(curl u)={rec.curl_u_bmo:.6g} above ceiling {self.bkm_ceiling:g}")


# post-processing of record streams


def _column(records: Sequence, name: str) -> np.ndarray:
    return np.array([getattr(r, name) if not isinstance(r, dict) else r[name] for r in records], dtype=float)


def cumulative_trapezoid(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


@dataclass(frozen=True)
class EnergyBalance:
    t: np.ndarray
    absolute: np.ndarray
    relative: np.ndarray

    @property
    def max_relative(self) -> float:
        return float(np.max(np.abs(self.relative)))


def energy_balance(records: Sequence) -> EnergyBalance:
    """``E(t_n) - E(t_0) + ∫ nu ||∇h||^2`` along the record stream."""
    if len(records) < 2:
        raise ValueError("energy balance needs at least two records")
    t = _column(records, "t")
    e = _column(records, "energy")
    d = _column(records, "resistive_dissipation")
    absolute = e - e[0] + cumulative_trapezoid(t, d)
    relative = absolute / e[0] if e[0] > 0 else np.zeros_like(absolute)
    return EnergyBalance(t, absolute, relative)


@dataclass(frozen=True)
class BkmSeries:
    t: np.ndarray
    integral: np.ndarray
    tail_start: float | None
    """Earliest sampled ``T*`` with ``∫_{T*}^{T} BMO(curl u) ds <= epsilon``."""


def bkm_accumulate(records: Sequence, epsilon: float = 0.1) -> BkmSeries:
    t = _column(records, "t")
    if len(t) == 0:
        return BkmSeries(t, t.copy(), None)
    b = _column(records, "curl_u_bmo")
    integral = cumulative_trapezoid(t, b)
    tail = integral[-1] - integral
    hits = np.nonzero(tail <= epsilon)[0]
    return BkmSeries(t, integral, float(t[hits[0]]) if len(hits) else None)


def m_running_sup(records: Sequence, t_star: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Running maximum of ``||∇^3 u||^2 + ||∇^3 h||^2`` from ``t_star`` on."""
    t = _column(records, "t")
    v = _column(records, "hdot3_u") ** 2 + _column(records, "hdot3_h") ** 2
    if t_star is not None:
        keep = t >= t_star
        t, v = t[keep], v[keep]
    return t, np.maximum.accumulate(v) if len(v) else v


@dataclass(frozen=True)
class GronwallReport:
    t: np.ndarray
    lhs: np.ndarray
    envelope: np.ndarray
    fitted_c: float
    violations: int
    stable: bool | None = None
    refined_c: float | None = None


def fit_gronwall_constant(t, curl_u_l2, curl_h_l2, grad_curl_h_l2, hdot1_h, nu, rtol=1e-10):
    """Return ``(lhs, exponent_integral, q0, C)`` for the 2D H^1 envelope."""
    q0 = curl_u_l2[0] ** 2 + curl_h_l2[0] ** 2
    if not q0 > 0:
        raise NotApplicable("initial curls vanish")
    lhs = curl_u_l2**2 + curl_h_l2**2 + nu * cumulative_trapezoid(t, grad_curl_h_l2**2)
    integral = cumulative_trapezoid(t, hdot1_h**2)
    c = 0.0
    for q, i in zip(lhs, integral):
        if q <= q0 * (1 + rtol):
            continue
        if i <= 0:
            return lhs, integral, q0, math.inf
        c = max(c, nu * math.log(q / q0) / (2 * i))
    return lhs, integral, q0, c


def gronwall_2d_check(records: Sequence, nu: float, refined: Sequence | None = None) -> GronwallReport:
    """Fit the least ``C`` with ``lhs(t) <= q0 exp((2C/nu) ∫ ||∇h||^2)`` at every sample.

    With ``refined`` (the same run on a grid twice as fine) the report also
    says whether the two fitted constants agree within 20%.
    """
    cols = [_column(records, n) for n in ("t", "curl_u_l2", "curl_h_l2", "grad_curl_h_l2", "hdot1_h")]
    lhs, integral, q0, c = fit_gronwall_constant(*cols, nu)
    with np.errstate(over="ignore"):
        envelope = q0 * np.exp(2 * c / nu * integral) if math.isfinite(c) else np.full_like(lhs, np.inf)
    violations = int(np.sum(lhs > envelope * (1 + 1e-10)))
    stable = refined_c = None
    if refined is not None:
        refined_c = gronwall_2d_check(refined, nu).fitted_c
        hi = max(c, refined_c)
        stable = bool(abs(c - refined_c) <= 0.2 * hi) if math.isfinite(hi) else False
    return GronwallReport(cols[0], lhs, envelope, c, violations, stable, refined_c)


# NDJSON


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "null" if v is None else ("true" if v else "false")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{_fmt(str(k))}: {_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def ndjson_line(obj) -> str:
    """One JSON object per line; floats carry 17 significant digits."""
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    return _fmt(obj) + "\n"


def write_records(fh: IO[str], records: Iterable) -> None:
    for r in records:
        fh.write(ndjson_line(r))
    fh.flush()


def read_records(path) -> list[DiagnosticsRecord]:
    """Diagnostics lines of an NDJSON file; status lines are skipped."""
    out = []
    with open(path) as fh:
        for line in fh:
            d = json.loads(line)
            if "status" not in d:
                out.append(DiagnosticsRecord.from_dict(d))
    return out

"""Time evolution of u_t + H u_xx + u_xyy + u u_x = mu*Lap(u).

The stepper is an integrating-factor classical RK4: the stiff linear symbol
is applied through its exact exponential (so the linear flow is integrated
without error and the zero mode u_hat(0, eta) evolves by exactly
exp(-mu eta^2 dt) per step), and only the quadratic term -1/2 d_x(u^2) passes
through the Runge-Kutta stages.  The only stability restriction left is the
advective one, audited as dt * max|u| * max|xi| <= 0.5.

A Picard iteration on the Duhamel integral equation

    u(t) = E_mu(t) phi - int_0^t E_mu(t - t') 1/2 d_x(u^2)(t') dt'

provides an independent small-time solver for mu > 0; the two paths agreeing
is one of the package's cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import (
    Grid2D,
    RealField,
    SpectrumField,
    dealias,
    forward,
    inverse,
)
from .operators import propagator_array
from .weights import WeightSpec

CFL_LIMIT = 0.5
BLOWUP_AMPLITUDE = 1e8


class SolverAbort(RuntimeError):
    """Numerical abort: blow-up or a violated stability audit."""

    def __init__(self, reason: str, t: float, step: int, detail: str = ""):
        super().__init__(f"{reason} at t={t:.6g} (step {step}): {detail}")
        self.reason = reason
        self.t = t
        self.step = step
        self.detail = detail


class PicardDivergence(RuntimeError):
    """Fixed-point iteration failed to contract (T too large for the data)."""

    def __init__(self, residuals: Sequence[float]):
        super().__init__(
            f"no contraction after {len(residuals)} iterations; "
            f"last residual {residuals[-1]:.3e}"
        )
        self.residuals = list(residuals)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_final: float
    mu: float = 0.0
    dealias: bool = True
    stride: int = 10
    nonlinear: bool = True

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.t_final <= 0 or self.dt > self.t_final * (1 + 1e-12):
            raise ValueError("need 0 < dt <= t_final")
        if self.mu < 0:
            raise ValueError("viscosity mu must be >= 0")
        if self.stride < 1:
            raise ValueError("diagnostic stride must be >= 1")


@dataclass(frozen=True)
class SimulationState:
    t: float
    spectrum: SpectrumField
    step_index: int = 0


def nonlinear_rhs(F: SpectrumField, use_dealias: bool = True) -> SpectrumField:
    """Spectrum of -1/2 d_x(u^2), with the 2/3 mask around the square."""
    g = F.grid
    src = dealias(F) if use_dealias else F
    u = inverse(src)
    w = forward(RealField(g, u.samples**2))
    out = w.coeffs * (-0.5j * g.xi2)
    if use_dealias:
        out = np.where(g.dealias_mask, out, 0.0)
    return SpectrumField(g, out)


class _StepKernel:
    """Per-(grid, dt, mu) precomputed arrays for the IF-RK4 stage."""

    def __init__(self, grid: Grid2D, dt: float, mu: float):
        self.grid = grid
        self.dt = dt
        self.mu = mu
        self.e_half = propagator_array(grid, 0.5 * dt, mu)
        self.e_full = propagator_array(grid, dt, mu)
        self.max_xi = float(np.max(np.abs(grid.xi)))

    def advance(self, state: SimulationState, cfg: SolverConfig) -> SimulationState:
        g = self.grid
        c = state.spectrum.coeffs
        if cfg.nonlinear:
            dt, eh, ef = self.dt, self.e_half, self.e_full

            def rhs(coeffs: np.ndarray) -> np.ndarray:
                return nonlinear_rhs(SpectrumField(g, coeffs), cfg.dealias).coeffs

            k1 = rhs(c)
            c2 = rhs(eh * (c + (0.5 * dt) * k1))
            c3 = rhs(eh * c + (0.5 * dt) * c2)
            c4 = rhs(ef * c + dt * (eh * c3))
            new = ef * c + (dt / 6.0) * (ef * k1 + 2.0 * eh * (c2 + c3) + c4)
        else:
            new = self.e_full * c
        return SimulationState(
            t=state.t + self.dt,
            spectrum=SpectrumField(g, new),
            step_index=state.step_index + 1,
        )


def step(state: SimulationState, cfg: SolverConfig) -> SimulationState:
    """Advance one dt.  Builds the exponential tables on the fly; loops
    should go through :func:`run`, which reuses them."""
    kernel = _StepKernel(state.spectrum.grid, cfg.dt, cfg.mu)
    new = kernel.advance(state, cfg)
    _audit(inverse(new.spectrum), kernel, cfg, new.t, new.step_index)
    return new


def _audit(u: RealField, kernel: _StepKernel, cfg: SolverConfig, t: float, n: int) -> None:
    m = float(np.max(np.abs(u.samples)))
    if not math.isfinite(m) or m > BLOWUP_AMPLITUDE:
        raise SolverAbort("blow_up", t, n, f"max|u| = {m:.3e}")
    cfl = cfg.dt * m * kernel.max_xi
    if cfg.nonlinear and cfl > CFL_LIMIT:
        raise SolverAbort(
            "cfl_audit", t, n, f"dt*max|u|*max|xi| = {cfl:.3f} > {CFL_LIMIT}"
        )


@dataclass(frozen=True)
class RunDiagnostics:
    """What to record along a run (every `stride` steps plus both endpoints)."""

    hs_orders: Tuple[float, ...] = ()
    weights: Tuple[WeightSpec, ...] = ()
    extra: Tuple[Tuple[str, Callable[[RealField], float]], ...] = ()


@dataclass
class TimeSeries:
    """Per-record diagnostics of one run; rows strictly increasing in t."""

    mu: float
    phi_l2: float
    t: np.ndarray
    l2: np.ndarray
    moment_x: np.ndarray
    zero_mode: np.ndarray  # (n_records, ny) complex
    hs: Dict[float, np.ndarray]
    weighted: Dict[str, np.ndarray]
    extra: Dict[str, np.ndarray]

    def zero_mode_drift(self) -> np.ndarray:
        """max_eta |u_hat(0,eta,t) - u_hat(0,eta,0)| per record."""
        return np.max(np.abs(self.zero_mode - self.zero_mode[0]), axis=1)


@dataclass(frozen=True)
class RunResult:
    series: TimeSeries
    final: RealField


def _hs_norm_from_spectrum(F: SpectrumField, s: float) -> float:
    g = F.grid
    dxi = 2.0 * np.pi / g.lx
    deta = 2.0 * np.pi / g.ly
    wgt = (1.0 + g.xi2**2 + g.eta2**2) ** s
    total = np.sum(wgt * np.abs(F.coeffs) ** 2) * dxi * deta
    return float(np.sqrt(total) / (2.0 * np.pi))


def run(
    phi: RealField,
    cfg: SolverConfig,
    diagnostics: Optional[RunDiagnostics] = None,
) -> RunResult:
    """Evolve phi to t_final, recording diagnostics every `stride` steps."""
    diag = diagnostics or RunDiagnostics()
    g = phi.grid
    kernel = _StepKernel(g, cfg.dt, cfg.mu)
    state = SimulationState(t=0.0, spectrum=forward(phi))
    # final time is n_steps * dt, the closest step multiple to t_final
    n_steps = max(1, int(round(cfg.t_final / cfg.dt)))

    w2 = {spec.label(): spec.evaluate(g.xmesh, g.ymesh) ** 2 for spec in diag.weights}
    area = g.cell_area

    rows: List[dict] = []

    def record(st: SimulationState) -> None:
        u = inverse(st.spectrum)
        _audit(u, kernel, cfg, st.t, st.step_index)
        row = {
            "t": st.t,
            "l2": u.l2(),
            "moment_x": float(np.sum(g.xmesh * u.samples) * area),
            "zero_mode": st.spectrum.zero_mode_row(),
            "hs": {s: _hs_norm_from_spectrum(st.spectrum, s) for s in diag.hs_orders},
            "weighted": {
                lbl: float(np.sqrt(np.sum(w * u.samples**2) * area))
                for lbl, w in w2.items()
            },
            "extra": {lbl: fn(u) for lbl, fn in diag.extra},
        }
        rows.append(row)

    record(state)
    for n in range(1, n_steps + 1):
        state = kernel.advance(state, cfg)
        if n % cfg.stride == 0 or n == n_steps:
            record(state)

    series = TimeSeries(
        mu=cfg.mu,
        phi_l2=rows[0]["l2"],
        t=np.array([r["t"] for r in rows]),
        l2=np.array([r["l2"] for r in rows]),
        moment_x=np.array([r["moment_x"] for r in rows]),
        zero_mode=np.array([r["zero_mode"] for r in rows]),
        hs={s: np.array([r["hs"][s] for r in rows]) for s in diag.hs_orders},
        weighted={
            lbl: np.array([r["weighted"][lbl] for r in rows]) for lbl in w2
        },
        extra={lbl: np.array([r["extra"][lbl] for r in rows]) for lbl, _ in diag.extra},
    )
    return RunResult(series=series, final=inverse(state.spectrum))


def _cumulative_weights(j: int, h: float) -> np.ndarray:
    """Newton-Cotes weights for int_0^{t_j} on nodes 0..j of spacing h.

    Composite Simpson for even j; for odd j >= 3 the last three panels use
    the 3/8 rule so the order stays 4; j = 1 falls back to the trapezoid.
    """
    w = np.zeros(j + 1)
    if j == 0:
        return w
    if j == 1:
        w[:2] = 0.5 * h
        return w
    m = j if j % 2 == 0 else j - 3
    for k in range(0, m, 2):
        w[k] += h / 3.0
        w[k + 1] += 4.0 * h / 3.0
        w[k + 2] += h / 3.0
    if j % 2 == 1:
        w[m] += 3.0 * h / 8.0
        w[m + 1] += 9.0 * h / 8.0
        w[m + 2] += 9.0 * h / 8.0
        w[j] += 3.0 * h / 8.0
    return w


@dataclass(frozen=True)
class PicardResult:
    final: RealField
    residuals: List[float]
    iterations: int


def picard_solve(
    phi: RealField,
    t_final: float,
    mu: float,
    max_iter: int = 25,
    tol: float = 1e-10,
    n_nodes: int = 33,
    use_dealias: bool = True,
) -> PicardResult:
    """Solve the Duhamel integral equation by fixed-point iteration.

    The time integral uses a fixed (n_nodes)-point composite Simpson grid on
    [0, t_final]; iterates are compared in the sup-in-t L2 norm.  The caller
    supplies t_final; non-convergence raises :class:`PicardDivergence`.
    """
    if mu <= 0:
        raise ValueError("picard_solve needs mu > 0 (parabolic regularisation)")
    if t_final <= 0 or n_nodes < 5 or n_nodes % 2 == 0:
        raise ValueError("need t_final > 0 and an odd n_nodes >= 5")
    g = phi.grid
    h = t_final / (n_nodes - 1)
    # E_mu(k*h) for k = 0..n-1; uniform nodes make E(t_j - t_m) = table[j - m]
    table = [propagator_array(g, k * h, mu) for k in range(n_nodes)]
    phi_hat = forward(phi).coeffs
    free = [table[j] * phi_hat for j in range(n_nodes)]
    weights = [_cumulative_weights(j, h) for j in range(n_nodes)]

    def l2(coeffs: np.ndarray) -> float:
        return SpectrumField(g, coeffs).l2()

    u = [f.copy() for f in free]
    residuals: List[float] = []
    for it in range(1, max_iter + 1):
        rhs = [
            nonlinear_rhs(SpectrumField(g, u[m]), use_dealias).coeffs
            for m in range(n_nodes)
        ]
        new = []
        for j in range(n_nodes):
            acc = free[j].copy()
            wj = weights[j]
            for m in range(j + 1):
                if wj[m] != 0.0:
                    acc += wj[m] * (table[j - m] * rhs[m])
            new.append(acc)
        res = max(l2(new[j] - u[j]) for j in range(n_nodes))
        residuals.append(res)
        u = new
        if res < tol:
            return PicardResult(
                final=inverse(SpectrumField(g, u[-1])),
                residuals=residuals,
                iterations=it,
            )
    raise PicardDivergence(residuals)

"""Linear symbols of the equation: Hilbert transform, fractional powers,
and the exact propagators of the free and parabolically regularised flows.

The dispersion relation is ``omega(xi, eta) = xi*eta**2 - xi*|xi|`` (odd in
xi, even in eta, and zero on the xi = 0 line), so the free propagator
multiplies each coefficient by the unit-modulus phase ``exp(i t omega)`` and
the regularised one adds the decay ``exp(-t mu (xi^2 + eta^2))``.

The self-paired x-Nyquist column carries no continuum sign for xi, so every
symbol is averaged over the two Nyquist signs there (see
:func:`bozk.grid.multiplier_array`); odd symbols annihilate the column and
phases reduce to their real part.  Composition laws therefore hold exactly on
fields with no Nyquist content, which is the resolved regime.
"""

from __future__ import annotations

import numpy as np

from .grid import (
    Grid2D,
    RealField,
    SpectrumField,
    apply_multiplier,
    forward,
    inverse,
    multiplier_array,
)

_FRACTIONAL_KINDS = ("J", "J_x", "J_y", "D", "D_x")


def dispersion(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """omega(xi, eta) = xi*eta^2 - xi*|xi|."""
    return xi * eta**2 - xi * np.abs(xi)


def damping_rate(xi: np.ndarray, eta: np.ndarray, mu: float) -> np.ndarray:
    return mu * (xi**2 + eta**2)


def hilbert_x(f: RealField) -> RealField:
    """Hilbert transform in x: the multiplier -i*sgn(xi), with sgn(0) = 0.

    The xi = 0 line is annihilated (principal-value convention) and so is the
    self-paired x-Nyquist column, where the odd symbol averages to zero; on
    the remaining modes the multiplier squares to -1.
    """
    return inverse(apply_multiplier(forward(f), lambda xi, eta: -1j * np.sign(xi)))


def fractional_op(f: RealField, kind: str, z: float) -> RealField:
    """Apply J^z, J_x^z, J_y^z, D^z or D_x^z.

    The homogeneous operators D and D_x with z < 0 are singular on the zero
    mode (respectively the whole xi = 0 line); they are only defined when the
    field carries no content there, and the singular entries of the symbol
    are replaced by zero once that is checked.
    """
    if kind not in _FRACTIONAL_KINDS:
        raise ValueError(f"unknown fractional operator kind {kind!r}")
    F = forward(f)
    g = f.grid
    xi2, eta2 = g.xi2, g.eta2
    if kind == "J":
        marr = (1.0 + xi2**2 + eta2**2) ** (z / 2.0)
    elif kind == "J_x":
        marr = (1.0 + xi2**2) ** (z / 2.0)
    elif kind == "J_y":
        marr = (1.0 + eta2**2) ** (z / 2.0)
    else:
        base = xi2**2 + eta2**2 if kind == "D" else np.abs(xi2) ** 2
        singular = base == 0.0
        if z < 0:
            scale = np.max(np.abs(F.coeffs))
            resid = np.max(np.abs(F.coeffs[singular])) if scale > 0 else 0.0
            if resid > 1e-13 * max(scale, 1.0):
                raise ValueError(
                    f"{kind}^z with z < 0 needs a field with no mass on its "
                    f"singular modes (residual {resid:.3e})"
                )
        with np.errstate(divide="ignore", invalid="ignore"):
            marr = np.sqrt(base) ** z
        marr = np.where(singular, 0.0 if z != 0 else 1.0, marr)
    return inverse(SpectrumField(g, F.coeffs * marr.astype(np.complex128)))


def propagator_array(grid: Grid2D, t: float, mu: float) -> np.ndarray:
    """Grid symbol of E_mu(t), Nyquist-symmetrised."""
    if mu < 0:
        raise ValueError("viscosity mu must be >= 0")
    if mu > 0 and t < 0:
        raise ValueError("backward diffusion: t < 0 requires mu = 0")

    def symbol(xi, eta):
        return np.exp(1j * t * dispersion(xi, eta) - t * damping_rate(xi, eta, mu))

    return multiplier_array(grid, symbol)


def propagate(F: SpectrumField, t: float, mu: float = 0.0) -> SpectrumField:
    """Exact linear evolution by time t (unitary for mu = 0, contraction for mu > 0)."""
    return SpectrumField(F.grid, F.coeffs * propagator_array(F.grid, t, mu))


def smoothing_ratio(phi: RealField, mu: float, t: float, lam: float) -> float:
    """||J^lam E_mu(t) phi|| / ((1 + t^(-lam/2)) ||phi||).

    Bounded in t for fixed mu > 0; quantifies the parabolic gain of lam
    derivatives at the cost of t^(-lam/2).
    """
    if mu <= 0 or t <= 0 or lam <= 0:
        raise ValueError("smoothing_ratio needs mu > 0, t > 0, lam > 0")
    denom = phi.l2()
    if denom == 0.0:
        raise ValueError("smoothing_ratio is undefined for the zero field")
    evolved = inverse(propagate(forward(phi), t, mu))
    num = fractional_op(evolved, "J", lam).l2()
    return num / ((1.0 + t ** (-lam / 2.0)) * denom)

"""Periodic 2-D grids, discrete Fourier transforms, and diagonal multipliers.

Conventions fixed here and relied on everywhere else:

* Physical arrays have shape ``(ny, nx)``: axis 0 is y, axis 1 is x, so x is
  the fastest-varying (contiguous) direction in C order.
* The spatial grid is centred, ``x_i = -Lx/2 + i*dx``, ``y_j = -Ly/2 + j*dy``.
* Spectral coefficients are normalised to approximate the continuum transform
  ``u_hat(xi, eta) = int exp(-i(x*xi + y*eta)) u dx dy``, i.e. they equal the
  raw DFT times ``dx*dy`` times the exact centring phase ``(-1)**(m+n)``.
* Wavenumber indices follow FFT order, ``m in [-nx/2, nx/2)``; the Nyquist
  index ``-nx/2`` has no positive partner, so every multiplier evaluated on
  the grid is symmetrised there (average over the two Nyquist signs).  This
  keeps inverse transforms of Hermitian data exactly real without branching.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Multiplier = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on ``[-Lx/2, Lx/2) x [-Ly/2, Ly/2)``."""

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self) -> None:
        if self.nx % 2 != 0 or self.ny % 2 != 0 or self.nx < 8 or self.ny < 8:
            raise ValueError(
                f"grid sizes must be even and >= 8, got nx={self.nx}, ny={self.ny}"
            )
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError(f"period lengths must be positive, got {self.lx}, {self.ly}")

        dx = self.lx / self.nx
        dy = self.ly / self.ny
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)

        mx = np.fft.fftfreq(self.nx, d=1.0 / self.nx).astype(np.int64)
        my = np.fft.fftfreq(self.ny, d=1.0 / self.ny).astype(np.int64)
        object.__setattr__(self, "mx", mx)
        object.__setattr__(self, "my", my)
        object.__setattr__(self, "xi", 2.0 * np.pi * mx / self.lx)
        object.__setattr__(self, "eta", 2.0 * np.pi * my / self.ly)

        x = -0.5 * self.lx + dx * np.arange(self.nx)
        y = -0.5 * self.ly + dy * np.arange(self.ny)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

        # exp(-i xi_m x_0) = (-1)^m exactly for the centred grid
        phase = np.where(mx % 2 == 0, 1.0, -1.0)[None, :] * np.where(
            my % 2 == 0, 1.0, -1.0
        )[:, None]
        object.__setattr__(self, "_centre_phase", phase)

        keep = (np.abs(mx) <= self.nx // 3)[None, :] & (np.abs(my) <= self.ny // 3)[:, None]
        object.__setattr__(self, "dealias_mask", keep)

        for arr in (mx, my, x, y, phase, keep):
            arr.setflags(write=False)

    # broadcastable 2-D views -------------------------------------------------

    @property
    def xi2(self) -> np.ndarray:
        """xi broadcast to coefficient shape (ny, nx)."""
        return np.broadcast_to(self.xi[None, :], (self.ny, self.nx))

    @property
    def eta2(self) -> np.ndarray:
        return np.broadcast_to(self.eta[:, None], (self.ny, self.nx))

    @property
    def xmesh(self) -> np.ndarray:
        return np.broadcast_to(self.x[None, :], (self.ny, self.nx))

    @property
    def ymesh(self) -> np.ndarray:
        return np.broadcast_to(self.y[:, None], (self.ny, self.nx))

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid2D):
            return NotImplemented
        return (self.nx, self.ny, self.lx, self.ly) == (other.nx, other.ny, other.lx, other.ly)

    def __hash__(self) -> int:
        return hash((self.nx, self.ny, self.lx, self.ly))


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid2D:
    """Validate sizes and build a :class:`Grid2D`."""
    return Grid2D(nx=int(nx), ny=int(ny), lx=float(lx), ly=float(ly))


@dataclass(frozen=True)
class RealField:
    """Real samples on a grid; shape ``(ny, nx)``, x fastest."""

    grid: Grid2D
    samples: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.samples, dtype=np.float64)
        if a.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(f"samples shape {a.shape} != {(self.grid.ny, self.grid.nx)}")
        if not np.all(np.isfinite(a)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "samples", a)

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "RealField":
        return cls(grid, np.asarray(fn(grid.xmesh, grid.ymesh), dtype=np.float64))

    @classmethod
    def zeros(cls, grid: Grid2D) -> "RealField":
        return cls(grid, np.zeros((grid.ny, grid.nx)))

    def l2(self) -> float:
        """Discrete L2 norm, ``sqrt(sum f^2 dx dy)``."""
        return float(np.sqrt(np.sum(self.samples**2) * self.grid.cell_area))


@dataclass(frozen=True)
class SpectrumField:
    """Complex coefficients approximating the continuum transform."""

    grid: Grid2D
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.coeffs, dtype=np.complex128)
        if a.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(f"coeffs shape {a.shape} != {(self.grid.ny, self.grid.nx)}")
        object.__setattr__(self, "coeffs", a)

    def l2(self) -> float:
        """L2 norm of the underlying field via Parseval."""
        g = self.grid
        dxi = 2.0 * np.pi / g.lx
        deta = 2.0 * np.pi / g.ly
        return float(
            np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * dxi * deta) / (2.0 * np.pi)
        )

    def zero_mode_row(self) -> np.ndarray:
        """u_hat(0, eta) for all grid eta, i.e. the x-mean transform."""
        return self.coeffs[:, 0].copy()


def forward(f: RealField) -> SpectrumField:
    g = f.grid
    coeffs = np.fft.fft2(f.samples) * (g.cell_area * g._centre_phase)
    return SpectrumField(g, coeffs)


def inverse(F: SpectrumField) -> RealField:
    g = F.grid
    raw = F.coeffs * (g._centre_phase / g.cell_area)
    return RealField(g, np.fft.ifft2(raw).real)


def inverse_imag_residual(F: SpectrumField) -> float:
    """Max |imaginary part| discarded by :func:`inverse`; realness diagnostic."""
    g = F.grid
    raw = F.coeffs * (g._centre_phase / g.cell_area)
    return float(np.max(np.abs(np.fft.ifft2(raw).imag)))


def conjugate_flip(coeffs: np.ndarray) -> np.ndarray:
    """conj of the index-negated array: out[n, m] = conj(in[-n mod ny, -m mod nx])."""
    return np.conj(np.roll(coeffs[::-1, ::-1], shift=(1, 1), axis=(0, 1)))


def multiplier_array(grid: Grid2D, m: Multiplier) -> np.ndarray:
    """Evaluate a symbol on the grid and symmetrise its Nyquist lines.

    For a Hermitian symbol (``m(-xi,-eta) = conj m(xi, eta)``) the returned
    array satisfies the same identity on the discrete index set, including
    the self-paired Nyquist lines, so multiplying a Hermitian spectrum keeps
    it exactly Hermitian.  Off the Nyquist lines the values are untouched.
    """
    with np.errstate(all="ignore"):
        vals = np.asarray(m(grid.xi2, grid.eta2), dtype=np.complex128)
        if vals.shape != (grid.ny, grid.nx):
            vals = np.broadcast_to(vals, (grid.ny, grid.nx)).astype(np.complex128)
        out = vals.copy()
        sym = 0.5 * (vals + conjugate_flip(vals))
    nyq_x = grid.mx == -grid.nx // 2
    nyq_y = grid.my == -grid.ny // 2
    out[:, nyq_x] = sym[:, nyq_x]
    out[nyq_y, :] = sym[nyq_y, :]
    if not np.all(np.isfinite(out)):
        raise ValueError("multiplier is non-finite at a grid wavenumber")
    return out


def apply_multiplier(F: SpectrumField, m: Multiplier) -> SpectrumField:
    """Pointwise multiply the spectrum by a symbol of (xi, eta)."""
    return SpectrumField(F.grid, F.coeffs * multiplier_array(F.grid, m))


def dealias(F: SpectrumField) -> SpectrumField:
    """Zero every coefficient with |m| > nx/3 or |n| > ny/3 (2/3 rule).

    When 3 divides nx the retained boundary mode nx/3 sits exactly at the
    alias-free limit (its self-interaction folds back onto itself); sizes
    with 3 not dividing nx make quadratic products strictly alias-free.
    """
    return SpectrumField(F.grid, np.where(F.grid.dealias_mask, F.coeffs, 0.0))


def require_same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")

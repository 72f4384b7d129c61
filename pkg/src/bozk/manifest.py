"""Flat key-value run manifests.

The config format is plain text, one `key = value` per line, dotted keys,
`#` comments.  Lengths accept a trailing `pi` (e.g. `grid.lx = 16pi`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from .grid import Grid2D, RealField, make_grid
from .solver import SolverConfig
from .weights import WeightSpec
from . import fields as data_families
from .io import read_snapshot


class ManifestError(ValueError):
    """Configuration rejected; maps to exit code 2."""


_KNOWN_KEYS = {
    "grid.nx", "grid.ny", "grid.lx", "grid.ly",
    "data.kind", "data.amplitude", "data.sigma_x", "data.sigma_y",
    "data.center_x", "data.center_y", "data.width", "data.separation",
    "data.path", "data.seed", "data.spectral_width",
    "solver.dt", "solver.t_final", "solver.mu", "solver.dealias",
    "solver.stride", "solver.nonlinear",
    "diag.hs", "diag.weights",
    "uc.t", "uc.levels", "uc.epsilon", "uc.r_list", "uc.s", "uc.doublings",
    "picard.t_final", "picard.mu", "picard.max_iter", "picard.tol", "picard.nodes",
    "seed",
}


def _parse_length(text: str) -> float:
    t = text.strip().lower()
    if t.endswith("pi"):
        return float(t[:-2] or "1") * math.pi
    return float(t)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ManifestError(f"not a boolean: {text!r}")


def _parse_weight(token: str) -> WeightSpec:
    parts = token.strip().split(":")
    try:
        if parts[0] == "poly":
            return WeightSpec.polynomial(float(parts[1]))
        if parts[0] == "trunc":
            return WeightSpec.truncated(int(parts[1]))
        if parts[0] == "gamma":
            return WeightSpec.gamma_power(float(parts[1]))
        if parts[0] == "damp":
            return WeightSpec.damped(float(parts[1]), float(parts[2]))
    except (IndexError, ValueError) as exc:
        raise ManifestError(f"bad weight spec {token!r}: {exc}") from exc
    raise ManifestError(f"unknown weight kind in {token!r}")


@dataclass
class RunManifest:
    raw: Dict[str, str]
    nx: int = 128
    ny: int = 128
    lx: float = 16 * math.pi
    ly: float = 16 * math.pi
    data_kind: str = "gaussian"
    data_params: Dict[str, float] = field(default_factory=dict)
    data_path: Optional[str] = None
    dt: float = 1e-3
    t_final: float = 0.5
    mu: float = 0.0
    dealias: bool = True
    stride: int = 10
    nonlinear: bool = True
    hs_orders: Tuple[float, ...] = ()
    weights: Tuple[WeightSpec, ...] = ()
    uc_t: float = 0.5
    uc_levels: int = 4
    uc_epsilon: float = 0.5
    uc_r_list: Tuple[float, ...] = (1.0, 2.0, 3.0)
    uc_s: float = 6.0
    uc_doublings: int = 0
    picard_t_final: float = 0.05
    picard_mu: float = 0.1
    picard_max_iter: int = 25
    picard_tol: float = 1e-10
    picard_nodes: int = 33
    seed: int = 0

    def grid(self) -> Grid2D:
        try:
            return make_grid(self.nx, self.ny, self.lx, self.ly)
        except ValueError as exc:
            raise ManifestError(str(exc)) from exc

    def solver_config(self) -> SolverConfig:
        try:
            return SolverConfig(
                dt=self.dt,
                t_final=self.t_final,
                mu=self.mu,
                dealias=self.dealias,
                stride=self.stride,
                nonlinear=self.nonlinear,
            )
        except ValueError as exc:
            raise ManifestError(str(exc)) from exc

    def initial_data(self, grid: Grid2D) -> RealField:
        p = self.data_params
        kind = self.data_kind
        if kind == "gaussian" or kind == "dx_gaussian":
            fn = data_families.gaussian if kind == "gaussian" else data_families.dx_gaussian
            return fn(
                grid,
                amplitude=p.get("amplitude", 1.0),
                sigma_x=p.get("sigma_x", 1.5),
                sigma_y=p.get("sigma_y", 1.5),
                center=(p.get("center_x", 0.0), p.get("center_y", 0.0)),
            )
        if kind == "two_solitary_bumps":
            return data_families.two_solitary_bumps(
                grid,
                amplitude=p.get("amplitude", 1.0),
                width=p.get("width", 2.0),
                separation=p.get("separation", 8.0),
            )
        if kind == "random_smooth":
            return data_families.random_smooth(
                grid,
                seed=int(p.get("seed", self.seed)),
                amplitude=p.get("amplitude", 1.0),
                spectral_width=p.get("spectral_width", 1.0),
            )
        if kind == "file":
            if not self.data_path:
                raise ManifestError("data.kind = file requires data.path")
            snap = read_snapshot(self.data_path)
            if snap.grid != grid:
                raise ManifestError(
                    "snapshot grid does not match the manifest grid"
                )
            return snap
        raise ManifestError(f"unknown data family {kind!r}")


def parse_manifest_text(text: str) -> RunManifest:
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ManifestError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ManifestError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value

    m = RunManifest(raw=raw)
    try:
        if "grid.nx" in raw:
            m.nx = int(raw["grid.nx"])
        if "grid.ny" in raw:
            m.ny = int(raw["grid.ny"])
        if "grid.lx" in raw:
            m.lx = _parse_length(raw["grid.lx"])
        if "grid.ly" in raw:
            m.ly = _parse_length(raw["grid.ly"])
        if "data.kind" in raw:
            m.data_kind = raw["data.kind"]
        for key in ("amplitude", "sigma_x", "sigma_y", "center_x", "center_y",
                    "width", "separation", "seed", "spectral_width"):
            k = f"data.{key}"
            if k in raw:
                m.data_params[key] = float(raw[k])
        if "data.path" in raw:
            m.data_path = raw["data.path"]
        if "solver.dt" in raw:
            m.dt = float(raw["solver.dt"])
        if "solver.t_final" in raw:
            m.t_final = float(raw["solver.t_final"])
        if "solver.mu" in raw:
            m.mu = float(raw["solver.mu"])
        if "solver.dealias" in raw:
            m.dealias = _parse_bool(raw["solver.dealias"])
        if "solver.stride" in raw:
            m.stride = int(raw["solver.stride"])
        if "solver.nonlinear" in raw:
            m.nonlinear = _parse_bool(raw["solver.nonlinear"])
        if "diag.hs" in raw and raw["diag.hs"]:
            m.hs_orders = tuple(float(s) for s in raw["diag.hs"].split(","))
        if "diag.weights" in raw and raw["diag.weights"]:
            m.weights = tuple(_parse_weight(t) for t in raw["diag.weights"].split(","))
        if "uc.t" in raw:
            m.uc_t = float(raw["uc.t"])
        if "uc.levels" in raw:
            m.uc_levels = int(raw["uc.levels"])
        if "uc.epsilon" in raw:
            m.uc_epsilon = float(raw["uc.epsilon"])
        if "uc.r_list" in raw:
            m.uc_r_list = tuple(float(s) for s in raw["uc.r_list"].split(","))
        if "uc.s" in raw:
            m.uc_s = float(raw["uc.s"])
        if "uc.doublings" in raw:
            m.uc_doublings = int(raw["uc.doublings"])
        if "picard.t_final" in raw:
            m.picard_t_final = float(raw["picard.t_final"])
        if "picard.mu" in raw:
            m.picard_mu = float(raw["picard.mu"])
        if "picard.max_iter" in raw:
            m.picard_max_iter = int(raw["picard.max_iter"])
        if "picard.tol" in raw:
            m.picard_tol = float(raw["picard.tol"])
        if "picard.nodes" in raw:
            m.picard_nodes = int(raw["picard.nodes"])
        if "seed" in raw:
            m.seed = int(raw["seed"])
    except ManifestError:
        raise
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc

    # eager validation so config errors surface before any work
    m.grid()
    m.solver_config()
    return m


def load_manifest(path: str | Path) -> RunManifest:
    p = Path(path)
    if not p.exists():
        raise ManifestError(f"config file not found: {path}")
    return parse_manifest_text(p.read_text())

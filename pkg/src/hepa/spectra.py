"""Ro-vibrational spectra of the purely long-range wells, their retardation
and adiabatic-correction contributions, and the C3 / Gamma fit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .basis import block
from .constants import DEFAULT, PhysicalConstants, gamma_from_c3
from .potentials import adiabatic_curves, default_grid
from .radial import GridExtensionError, effective_potential, solve_bound_states

# Measured 0u+ binding energies (MHz) and their errors, keyed by v.
TABLE_I_EXPERIMENT = {
    4: (-18.2, 0.5),
    3: (-79.6, 0.5),
    2: (-253.3, 0.5),
    1: (-648.5, 0.5),
    0: (-1430.0, 20.0),
}

C6_RATIO_BOUND = 1.5e-4
C6_CHECK_FROM = 150.0


class StatisticsError(ValueError):
    """The requested J is forbidden by Bose statistics for this well."""


class PairingError(RuntimeError):
    pass


class IllConditionedFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class Well:
    name: str
    omega: int
    reflection: str | None
    asymptote_j: int
    j_parity: str  # "odd", "even" or "any"
    default_j: int

    @property
    def block(self):
        return block("u", self.omega, self.reflection)

    def check_j(self, j):
        if j < max(self.omega, 1 if self.omega == 0 else self.omega):
            raise StatisticsError(f"{self.name}: J must be >= {max(self.omega, 1)}, got {j}")
        if self.j_parity == "odd" and j % 2 == 0:
            raise StatisticsError(f"{self.name}: Bose statistics requires odd J, got {j}")
        if self.j_parity == "even" and j % 2 == 1:
            raise StatisticsError(f"{self.name}: Bose statistics requires even J, got {j}")


WELLS = {
    "0u+": Well("0u+", 0, "+", 0, "odd", 1),
    "0u-": Well("0u-", 0, "-", 1, "even", 2),
    "2u": Well("2u", 2, None, 1, "any", 2),
}


def get_well(name):
    key = name.replace("_", "").replace("^", "").replace(" ", "")
    if key not in WELLS:
        raise KeyError(f"unknown well {name!r}; choose from {sorted(WELLS)}")
    return WELLS[key]


@dataclass(frozen=True)
class GridSpec:
    """Curve grid (uniform ``step`` to ``r_switch``, geometric beyond) and Numerov step."""

    r_min: float = 50.0
    r_switch: float = 3000.0
    r_max: float = 20000.0
    step: float = 0.5
    numerov_step: float = 0.5
    max_r_max: float = 120000.0
    min_r_min: float = 20.0

    def grid(self):
        return default_grid(self.r_min, self.r_switch, self.r_max, self.step)

    def halved(self):
        return replace(self, step=self.step / 2, numerov_step=self.numerov_step / 2)


DEFAULT_GRID = GridSpec()


@dataclass
class SpectrumRow:
    well: str
    j: int
    v: int
    energy: float  # MHz
    eps_ret: float | None = None
    eps_rad: float | None = None
    r_min: float = math.nan
    r_max: float = math.nan
    mean_r: float = math.nan
    grid_sensitive: bool = False

    def as_dict(self):
        return {
            "well": self.well,
            "J": self.j,
            "v": self.v,
            "E_MHz": self.energy,
            "eps_ret_MHz": self.eps_ret,
            "eps_rad_MHz": self.eps_rad,
            "R_min_a0": self.r_min,
            "R_max_a0": self.r_max,
            "mean_R_a0": self.mean_r,
        }


def well_curve(well, j, retarded=True, rotation=True, constants=DEFAULT, grid=DEFAULT_GRID):
    """The adiabatic curve of ``well`` that holds the purely long-range minimum."""
    well = get_well(well) if isinstance(well, str) else well
    curves = adiabatic_curves(well.block, j, grid.grid(), retarded=retarded, rotation=rotation,
                              constants=constants)
    candidates = [c for c in curves if c.asymptote_j == well.asymptote_j and c.well() is not None]
    if not candidates:
        raise RuntimeError(f"no purely long-range well found for {well.name}")
    return min(candidates, key=lambda c: -c.well()[1])


@lru_cache(maxsize=256)
def _levels(well_name, j, retarded, radial_correction, constants, grid):
    well = WELLS[well_name]
    while True:
        curve = well_curve(well, j, retarded=retarded, constants=constants, grid=grid)
        v_eff = effective_potential(curve, radial_correction)
        try:
            levels = solve_bound_states(curve.r, v_eff, constants.reduced_mass, step=grid.numerov_step)
        except GridExtensionError as exc:
            if exc.side == "inner":
                if grid.r_min * 0.8 < grid.min_r_min:
                    raise
                grid = replace(grid, r_min=grid.r_min * 0.8)
            else:
                if grid.r_max * 1.5 > grid.max_r_max:
                    raise
                grid = replace(grid, r_max=grid.r_max * 1.5)
            continue
        for lev in levels:
            lev.block = well.name
            lev.j = j
        return tuple(levels)


def bound_levels(well, j=None, retarded=True, radial_correction=True, constants=DEFAULT,
                 grid=DEFAULT_GRID):
    """Bound levels of a well (cached); includes grid-sensitive near-threshold ones."""
    well = get_well(well) if isinstance(well, str) else well
    j = well.default_j if j is None else j
    well.check_j(j)
    return _levels(well.name, j, retarded, radial_correction, constants, grid)


def compute_spectrum(well, j=None, retarded=True, radial_correction=True, constants=DEFAULT,
                     grid=DEFAULT_GRID, include_sensitive=False):
    """Rows ordered by v with energies relative to the well's asymptote.

    Raises StatisticsError when J is forbidden for the well.
    """
    well = get_well(well) if isinstance(well, str) else well
    j = well.default_j if j is None else j
    levels = bound_levels(well, j, retarded, radial_correction, constants, grid)
    return [
        SpectrumRow(well.name, j, lev.v, lev.energy, r_min=lev.r_min, r_max=lev.r_max,
                    mean_r=lev.mean_r, grid_sensitive=lev.grid_sensitive)
        for lev in levels
        if include_sensitive or not lev.grid_sensitive
    ]


def _paired_difference(well, j, base_kwargs, other_kwargs, constants, grid):
    main = bound_levels(well, j, constants=constants, grid=grid, **base_kwargs)
    ref = {lev.v: lev for lev in bound_levels(well, j, constants=constants, grid=grid, **other_kwargs)}
    out = []
    for lev in main:
        if lev.grid_sensitive:
            continue
        if lev.v not in ref:
            raise PairingError(f"level v={lev.v} has no partner in the reference run")
        out.append(lev.energy - ref[lev.v].energy)
    return out


def epsilon_ret(well, j=None, radial_correction=True, constants=DEFAULT, grid=DEFAULT_GRID):
    """E(retarded) - E(k -> 0) per level, MHz."""
    return _paired_difference(
        well, j,
        {"retarded": True, "radial_correction": radial_correction},
        {"retarded": False, "radial_correction": radial_correction},
        constants, grid,
    )


def epsilon_rad(well, j=None, retarded=True, constants=DEFAULT, grid=DEFAULT_GRID):
    """E(with <phi|d2/dR2|phi>) - E(without) per level, MHz."""
    return _paired_difference(
        well, j,
        {"retarded": retarded, "radial_correction": True},
        {"retarded": retarded, "radial_correction": False},
        constants, grid,
    )


def spectrum_table(well, j=None, constants=DEFAULT, grid=DEFAULT_GRID):
    """Full-model rows with both epsilon columns filled in."""
    rows = compute_spectrum(well, j, constants=constants, grid=grid)
    for row, er, ed in zip(rows, epsilon_ret(well, j, constants=constants, grid=grid),
                           epsilon_rad(well, j, constants=constants, grid=grid)):
        row.eps_ret, row.eps_rad = er, ed
    return rows


@dataclass
class FitResult:
    c3: float
    c3_err: float
    gamma_mhz: float  # Gamma / 2 pi
    gamma_err_mhz: float
    residuals: dict  # v -> experiment - model, MHz
    sensitivity: float  # max |dE| (MHz) for a +0.1 % change of C3
    chi2: float
    iterations: int
    shifts: dict = field(default_factory=dict)  # v -> dE (MHz) for +0.1 % C3

    def as_dict(self):
        return {
            "c3_au": self.c3,
            "c3_err_au": self.c3_err,
            "gamma_mhz": self.gamma_mhz,
            "gamma_err_mhz": self.gamma_err_mhz,
            "residuals_mhz": {str(k): v for k, v in self.residuals.items()},
            "sensitivity_mhz_per_0.1pct": self.sensitivity,
            "chi2": self.chi2,
            "iterations": self.iterations,
        }


def _energies(well, j, c3, constants, grid):
    rows = compute_spectrum(well, j, constants=constants.with_c3(c3), grid=grid, include_sensitive=True)
    return {row.v: row.energy for row in rows}


def c3_sensitivity(well="0u+", j=None, rel=1e-3, constants=DEFAULT, grid=DEFAULT_GRID):
    """Per-level energy change (MHz) when C3 is multiplied by (1 + rel)."""
    base = _energies(well, j, constants.c3, constants, grid)
    moved = _energies(well, j, constants.c3 * (1 + rel), constants, grid)
    return {v: moved[v] - base[v] for v in base if v in moved}


def fit_c3(experimental, well="0u+", j=None, constants=DEFAULT, grid=DEFAULT_GRID,
           c3_start=None, rel_step=1e-3, max_iter=8, rtol=1e-8):
    """Weighted least-squares fit of C3 alone to measured binding energies.

    Parameters
    ----------
    experimental : dict or iterable
        ``{v: (energy_mhz, error_mhz)}`` or triples ``(v, energy, error)``.

    The derivative dE/dC3 comes from central differences with relative step
    ``rel_step``; Gamma follows from the fitted C3.  The quoted uncertainty is
    the propagated experimental error, inflated by sqrt(chi2/dof) when that
    exceeds one.
    """
    data = dict(experimental) if isinstance(experimental, dict) else {v: (e, s) for v, e, s in experimental}
    data = {int(v): (float(e), float(s)) for v, (e, s) in data.items()}
    if len(data) < 2:
        raise ValueError("need at least two measured levels")
    if any(not (s > 0 and math.isfinite(s)) for _, s in data.values()):
        raise ValueError("every measurement needs a finite positive error")

    vs = sorted(data)
    y = np.array([data[v][0] for v in vs])
    sig = np.array([data[v][1] for v in vs])
    w = 1.0 / sig**2
    c3 = constants.c3 if c3_start is None else float(c3_start)

    def model(c):
        e = _energies(well, j, c, constants, grid)
        missing = [v for v in vs if v not in e]
        if missing:
            raise PairingError(f"model has no level v={missing}")
        return np.array([e[v] for v in vs])

    it = 0
    for it in range(1, max_iter + 1):
        h = c3 * rel_step
        e0 = model(c3)
        slope = (model(c3 + h) - model(c3 - h)) / (2 * h)
        if np.all(np.abs(slope * c3 * 1e-3) < 1e-3):
            raise IllConditionedFitError("binding energies do not depend on C3")
        delta = np.sum(w * slope * (y - e0)) / np.sum(w * slope**2)
        c3 += delta
        if abs(delta) < rtol * c3:
            break

    e0 = model(c3)
    h = c3 * rel_step
    slope = (model(c3 + h) - model(c3 - h)) / (2 * h)
    resid = y - e0
    chi2 = float(np.sum(w * resid**2))
    dof = max(len(vs) - 1, 1)
    c3_err = 1.0 / math.sqrt(np.sum(w * slope**2)) * max(1.0, math.sqrt(chi2 / dof))
    gamma = gamma_from_c3(c3, constants.lambda_nm) / (2 * math.pi) * 1e-6
    shifts = {v: float(s * c3 * 1e-3) for v, s in zip(vs, slope)}
    return FitResult(
        c3=c3,
        c3_err=c3_err,
        gamma_mhz=gamma,
        gamma_err_mhz=gamma * c3_err / c3,
        residuals={v: float(r) for v, r in zip(vs, resid)},
        sensitivity=max(abs(s) for s in shifts.values()),
        chi2=chi2,
        iterations=it,
        shifts=shifts,
    )


def c6_bound(radii, constants: PhysicalConstants = DEFAULT):
    """Ratio (C6/R^6) / (C3/R^3) per radius.

    Radii at or beyond 150 bohr are checked against the 1.5e-4 bound; the
    ``ok`` flag is False only for a checked radius that exceeds it.
    """
    report = []
    for r in radii:
        if r < 1.0:
            raise ValueError("radii must be at least 1 bohr")
        ratio = constants.c6_bound / (constants.c3 * r**3)
        checked = r >= C6_CHECK_FROM
        report.append({"R_a0": float(r), "ratio": ratio, "checked": checked,
                       "ok": (not checked) or ratio <= C6_RATIO_BOUND})
    return report

"""Reduction of photoassociation detunings to molecular binding energies.

The measured line centre is shifted from the binding energy by the Zeeman
energy of the trapped pair at the trap bottom and by the thermal energy of
the colliding pair:

    b_v = delta_v + (2 mu B0 + 3 kB T) / h

Recoil and Doppler terms are reported alongside but never applied; the
mean-field term is reported as an upper bound only.  All frequencies are in
MHz, fields in Gauss, temperatures in microkelvin.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .constants import CODATA, DEFAULT, HBAR_JS, KB_MHZ_PER_UK


class FitError(RuntimeError):
    """A fit failed; ``last`` holds the last parameter iterate, if any."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class Measurement:
    delta_v: float  # line centre nu_L - nu_0, MHz (negative)
    b0: float  # trap-bottom field, Gauss
    temperature: float  # microkelvin
    density: float | None = None  # atoms / cm^3
    v_label: int | None = None

    def __post_init__(self):
        if not self.delta_v < 0:
            raise ValueError(f"detuning must be negative (red of the line), got {self.delta_v}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.b0 < 0:
            raise ValueError(f"B0 must be non-negative, got {self.b0}")
        if self.density is not None and self.density < 0:
            raise ValueError("density must be non-negative")


@dataclass(frozen=True)
class ShiftBudget:
    """Shift and broadening terms in MHz; ``mean_field_bound`` is None without a density."""

    zeeman: float
    thermal_trap: float
    thermal_kinetic: float
    recoil: float
    doppler_width: float
    mean_field_bound: float | None = None

    @property
    def correction(self):
        """The part applied to the line centre: Zeeman plus both thermal terms."""
        return self.zeeman + self.thermal_trap + self.thermal_kinetic

    def as_dict(self):
        out = {
            "zeeman_mhz": self.zeeman,
            "thermal_trap_mhz": self.thermal_trap,
            "thermal_kinetic_mhz": self.thermal_kinetic,
            "recoil_mhz": self.recoil,
            "doppler_width_mhz": self.doppler_width,
            "correction_mhz": self.correction,
        }
        if self.mean_field_bound is not None:
            out["mean_field_bound_mhz"] = self.mean_field_bound
        return out


def zeeman_shift(b0, constants=DEFAULT):
    """2 mu B0 / h in MHz for the trapped pair."""
    return 2.0 * constants.mu * b0


def thermal_shift(temperature):
    """(3/2) kB T / h in MHz; each of the trap and kinetic terms has this size."""
    return 1.5 * KB_MHZ_PER_UK * temperature


def binding_energy(m: Measurement, constants=DEFAULT):
    """Binding energy b_v (MHz) inferred from a measured line centre."""
    return m.delta_v + zeeman_shift(m.b0, constants) + 2.0 * thermal_shift(m.temperature)


def recoil_shift(constants=DEFAULT):
    """hbar^2 k^2 / 4m, in MHz."""
    lam = constants.lambda_nm * 1e-9
    return CODATA["h_js"] / (4.0 * constants.atom_mass_kg * lam**2) * 1e-6


def doppler_width(temperature, constants=DEFAULT):
    """rms of hbar k P / 2m (MHz) for a thermal centre-of-mass momentum P."""
    lam = constants.lambda_nm * 1e-9
    kt = CODATA["kb_jk"] * temperature * 1e-6
    return math.sqrt(kt / (2.0 * constants.atom_mass_kg)) / lam * 1e-6


def mean_field_shift(density_cm3, scattering_length_nm, constants=DEFAULT):
    """4 pi hbar^2 n a / m, in MHz."""
    n = density_cm3 * 1e6
    a = scattering_length_nm * 1e-9
    energy = 4.0 * math.pi * HBAR_JS**2 * n * a / constants.atom_mass_kg
    return energy / CODATA["h_js"] * 1e-6


def shift_budget(m: Measurement, scattering_length=20.0, constants=DEFAULT):
    """All shift terms for a measurement; ``scattering_length`` in nm."""
    thermal = thermal_shift(m.temperature)
    mean_field = None
    if m.density is not None:
        mean_field = mean_field_shift(m.density, scattering_length, constants)
    return ShiftBudget(
        zeeman=zeeman_shift(m.b0, constants),
        thermal_trap=thermal,
        thermal_kinetic=thermal,
        recoil=recoil_shift(constants),
        doppler_width=doppler_width(m.temperature, constants),
        mean_field_bound=mean_field,
    )


def lorentzian(x, center, width, amplitude, offset):
    half = 0.5 * width
    return offset + amplitude * half**2 / ((x - center) ** 2 + half**2)


@dataclass
class LorentzianFit:
    center: float
    width: float  # full width at half maximum, MHz
    amplitude: float
    offset: float
    covariance: np.ndarray

    @property
    def errors(self):
        return np.sqrt(np.diag(self.covariance))

    def as_dict(self):
        err = self.errors
        return {
            "center_mhz": self.center,
            "center_err_mhz": float(err[0]),
            "width_mhz": self.width,
            "width_err_mhz": float(err[1]),
            "amplitude": self.amplitude,
            "offset": self.offset,
        }


def _initial_guess(x, y):
    offset = float(np.percentile(y, 10))
    k = int(np.argmax(y))
    amplitude = float(y[k] - offset)
    above = x[y - offset > 0.5 * amplitude]
    width = float(above.max() - above.min()) if above.size > 1 else (x[-1] - x[0]) / 10
    return [float(x[k]), max(width, 1e-3 * (x[-1] - x[0])), amplitude, offset]


def lorentzian_fit(scan, p0=None, max_nfev=2000):
    """Fit offset + A (w/2)^2 / ((d - c)^2 + (w/2)^2) to (detuning, signal) pairs.

    The signal is typically the cloud temperature after the PA pulse.  Points
    may come in any order.  The covariance is scaled by the residual variance.
    """
    data = np.asarray(sorted((float(d), float(s)) for d, s in scan))
    if data.shape[0] < 5:
        raise ValueError("need at least 5 points spanning the resonance")
    x, y = data[:, 0], data[:, 1]
    p0 = _initial_guess(x, y) if p0 is None else list(p0)

    def resid(p):
        return lorentzian(x, *p) - y

    res = least_squares(resid, p0, method="lm", max_nfev=max_nfev, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if res.status <= 0:
        raise FitError(f"Lorentzian fit did not converge: {res.message}", last=res.x)
    dof = max(x.size - 4, 1)
    s2 = 2.0 * res.cost / dof
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Jacobian in Lorentzian fit", last=res.x) from exc
    c, w, a, o = res.x
    return LorentzianFit(float(c), float(abs(w)), float(a), float(o), cov)


@dataclass
class ZeemanFit:
    slope: float  # in units of mu / h
    slope_err: float
    intercept: float  # MHz
    intercept_err: float

    @property
    def deviation(self):
        """Departure from the free-pair slope of -2, in units of mu."""
        return -(self.slope + 2.0)

    @property
    def moment_bound(self):
        """Upper bound on the molecular moment, in units of mu."""
        return max(abs(self.deviation), self.slope_err)

    def as_dict(self):
        return {
            "slope_mu": self.slope,
            "slope_err_mu": self.slope_err,
            "intercept_mhz": self.intercept,
            "intercept_err_mhz": self.intercept_err,
            "deviation_mu": self.deviation,
            "moment_bound_mu": self.moment_bound,
        }


def zeeman_slope_fit(points, constants=DEFAULT):
    """Weighted straight-line fit of corrected detuning (MHz) against B0 (G).

    ``points`` holds ``(b0, detuning)`` or ``(b0, detuning, sigma)``.  Without
    sigmas the uncertainty comes from the scatter of the residuals; with them
    it is the propagated error.  The slope is returned in units of mu B0 / h.
    """
    arr = np.asarray([tuple(p) for p in points], dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise ValueError("points must be (b0, detuning[, sigma]) tuples")
    b, d = arr[:, 0], arr[:, 1]
    absolute = arr.shape[1] == 3
    sig = arr[:, 2] if absolute else np.ones_like(b)
    if np.unique(b).size < 3:
        raise FitError("need at least 3 distinct B0 values")
    w = 1.0 / sig**2
    a = np.column_stack([b, np.ones_like(b)])
    normal = a.T @ (a * w[:, None])
    if np.linalg.cond(normal) > 1e12:
        raise FitError("rank-deficient B0 values")
    cov = np.linalg.inv(normal)
    slope, intercept = cov @ (a.T @ (w * d))
    if not absolute:
        resid = d - (slope * b + intercept)
        cov = cov * float(np.sum(resid**2)) / max(b.size - 2, 1)
    scale = constants.mu
    return ZeemanFit(
        slope=float(slope / scale),
        slope_err=float(math.sqrt(cov[0, 0]) / scale),
        intercept=float(intercept),
        intercept_err=float(math.sqrt(cov[1, 1])),
    )


@dataclass
class ThermalAverage:
    trap: float  # MHz
    trap_err: float
    kinetic: float  # MHz
    kinetic_err: float
    samples: int


def _weighted_mean(values, weights):
    """Ratio estimator and its delta-method standard error."""
    sw = weights.sum()
    mean = float((weights * values).sum() / sw)
    n = values.size
    var = np.sum((weights * (values - mean)) ** 2) / sw**2 * n / max(n - 1, 1)
    return mean, float(math.sqrt(var))


def _stream_average(rng, temperature, samples, weighting):
    kt = KB_MHZ_PER_UK * temperature  # kB T / h, MHz
    # pair in a harmonic trap: three quadratic coordinates, <x_i^2> fixes the unit
    z = rng.standard_normal((samples, 3))
    trap = 0.5 * kt * np.sum(z * z, axis=1)
    # relative momentum from exp(-E/kT), E = hbar^2 q^2 / m; q in units where E = kT q^2
    q = rng.standard_normal(samples) / math.sqrt(2.0)
    kinetic = kt * q * q
    weights = q * q if weighting == "s-wave" else np.ones_like(q)
    t_mean, t_err = _weighted_mean(trap, np.ones_like(trap))
    k_mean, k_err = _weighted_mean(kinetic, weights)
    return t_mean, t_err, k_mean, k_err


def thermal_average_oracle(temperature, samples=10**6, seed=0, streams=4, weighting="s-wave"):
    """Monte-Carlo check of the two thermal terms at temperature T (uK).

    The kinetic term averages hbar^2 q^2 / m over the one-dimensional
    Boltzmann measure, importance-weighted by q^2 for s-wave pairs
    (``weighting="uniform"`` drops that factor and yields kB T / 2).  Streams
    are seeded from one SeedSequence and merged weighted by their sizes.
    """
    if samples < 10**4:
        raise ValueError("need at least 1e4 samples")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if weighting not in ("s-wave", "uniform"):
        raise ValueError("weighting must be 's-wave' or 'uniform'")
    if temperature == 0:
        return ThermalAverage(0.0, 0.0, 0.0, 0.0, samples)
    children = np.random.SeedSequence(seed).spawn(streams)
    sizes = [samples // streams + (i < samples % streams) for i in range(streams)]
    parts = np.array([
        _stream_average(np.random.default_rng(ss), temperature, n, weighting)
        for ss, n in zip(children, sizes)
    ])

    n = np.asarray(sizes, dtype=float)

    def merge(mean, err):
        # weights by sample count: inverse-variance weights would favour low draws
        w = n / n.sum()
        return float(np.sum(w * mean)), float(math.sqrt(np.sum((w * err) ** 2)))

    trap, trap_err = merge(parts[:, 0], parts[:, 1])
    kin, kin_err = merge(parts[:, 2], parts[:, 3])
    return ThermalAverage(trap, trap_err, kin, kin_err, samples)


def _rows(path):
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.lstrip().startswith("#"))
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        return list(reader), [f.strip() for f in reader.fieldnames]


def read_scan(path):
    """(detuning_mhz, temperature_uk) pairs from a scan CSV."""
    rows, fields = _rows(path)
    for col in ("detuning_mhz", "temperature_uk"):
        if col not in fields:
            raise ValueError(f"{path}: missing column {col!r}")
    return [(float(r["detuning_mhz"]), float(r["temperature_uk"])) for r in rows]


def read_measurements(path):
    """Measurements from a CSV with v, delta_mhz, b0_gauss, t_uk[, n_cm3]."""
    rows, fields = _rows(path)
    for col in ("v", "delta_mhz", "b0_gauss", "t_uk"):
        if col not in fields:
            raise ValueError(f"{path}: missing column {col!r}")
    out = []
    for r in rows:
        n = r.get("n_cm3")
        out.append(Measurement(
            delta_v=float(r["delta_mhz"]),
            b0=float(r["b0_gauss"]),
            temperature=float(r["t_uk"]),
            density=float(n) if n not in (None, "") else None,
            v_label=int(r["v"]) if r["v"] not in (None, "") else None,
        ))
    return out

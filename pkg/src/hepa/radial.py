"""Single-channel bound states of an effective radial potential.

Levels are located with the renormalized Numerov recurrence: the pivots of
the LDL^T factorization of the Numerov matrix are the ratios w_{i+1}/w_i, and
the number of negative pivots counts the eigenvalues below a trial energy.
Each level is isolated by bisection on that count, then its wavefunction is
rebuilt from outward and inward ratios joined at the outer turning point.
Inputs are in atomic units; reported energies are in MHz.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .constants import au_to_mhz, mhz_to_au

SENSITIVE_MHZ = 0.5


class EnergyOutsideWellError(ValueError):
    pass


class GridExtensionError(RuntimeError):
    """A level does not decay before the outer end of the grid."""

    def __init__(self, message, energy_mhz, side="outer"):
        super().__init__(message)
        self.energy_mhz = energy_mhz
        self.side = side


@dataclass
class BoundLevel:
    v: int
    energy: float  # MHz, relative to the curve asymptote
    r: np.ndarray
    u: np.ndarray
    r_min: float
    r_max: float
    mean_r: float
    grid_sensitive: bool = False
    at_window_edge: bool = False
    block: str | None = None
    j: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def nodes(self):
        return count_nodes(self.u)


def effective_potential(curve, include_radial_correction=True):
    """V_eff = V - g / (2 mu), in Hartree on the curve grid."""
    v = np.array(curve.values, dtype=float)
    if not include_radial_correction:
        return v
    return v - curve.radial_correction / (2.0 * curve.constants.reduced_mass)


def count_nodes(u, rel=1e-9):
    u = np.asarray(u)
    big = u[np.abs(u) > rel * np.abs(u).max()]
    return int(np.count_nonzero(np.signbit(big[1:]) != np.signbit(big[:-1])))


def turning_points(r, v_eff, energy):
    """Innermost and outermost solutions of V_eff(R) = energy (Hartree).

    Linear interpolation between samples.  At the exact minimum both points
    collapse to the location of the minimum.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v_eff, dtype=float)
    below = v <= energy
    if not below.any():
        raise EnergyOutsideWellError(f"energy {au_to_mhz(energy):.6g} MHz lies below the potential")
    inside = np.flatnonzero(below)
    i0, i1 = inside[0], inside[-1]
    if i0 == 0 or i1 == r.size - 1:
        raise EnergyOutsideWellError(
            f"no turning point inside the grid at {au_to_mhz(energy):.6g} MHz"
        )

    def cross(a, b):
        if v[b] == v[a]:
            return r[a]
        return r[a] + (energy - v[a]) * (r[b] - r[a]) / (v[b] - v[a])

    if v[i0] == energy and v[i1] == energy and i0 == i1:
        return float(r[i0]), float(r[i0])
    return float(cross(i0 - 1, i0)), float(cross(i1, i1 + 1))


def mean_radius(r, u):
    """<R> = int u^2 R dR / int u^2 dR by the trapezoidal rule."""
    u2 = np.asarray(u) ** 2
    return float(np.trapezoid(u2 * r, r) / np.trapezoid(u2, r))


class NumerovProblem:
    """Dirichlet problem -u''/(2 mu) + V u = E u on a uniform grid."""

    def __init__(self, x, v, mu):
        self.x = np.asarray(x, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.mu = mu
        self.h = self.x[1] - self.x[0]
        if not np.allclose(np.diff(self.x), self.h, rtol=1e-9, atol=1e-9):
            raise ValueError("Numerov grid must be uniform")
        self._cache = []  # sorted (energy, count)

    def _u_coeffs(self, energy):
        t = self.h**2 * 2.0 * self.mu * (self.v - energy) / 12.0
        return (2.0 + 10.0 * t) / (1.0 - t), t

    def count(self, energy):
        """Number of eigenvalues strictly below ``energy``."""
        k = bisect.bisect_left(self._cache, (energy, -1))
        if k < len(self._cache) and self._cache[k][0] == energy:
            return self._cache[k][1]
        coeffs, _ = self._u_coeffs(energy)
        it = iter(coeffs[1:-1].tolist())
        d = next(it)
        n = 1 if d < 0.0 else 0
        for c in it:
            if d == 0.0:
                d = 1e-300
            d = c - 1.0 / d
            if d < 0.0:
                n += 1
        bisect.insort(self._cache, (energy, n))
        return n

    def _bracket(self, level, lo, hi):
        for e, n in self._cache:
            if n <= level and e > lo:
                lo = e
            if n > level and e < hi:
                hi = e
        return lo, hi

    def eigenvalue(self, level, lo, hi, tol):
        lo, hi = self._bracket(level, lo, hi)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.count(mid) > level:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    def wavefunction(self, energy):
        """Normalized u at ``energy`` (zero at both grid ends)."""
        coeffs, t = self._u_coeffs(energy)
        n = self.x.size
        allowed = np.flatnonzero(self.v <= energy)
        m = int(allowed[-1]) if allowed.size else n // 2
        m = min(max(m, 2), n - 3)

        c = coeffs.tolist()
        out = [0.0] * n  # outward pivots r_i = w_{i+1}/w_i
        d = c[1]
        out[1] = d
        for i in range(2, m + 1):
            d = c[i] - 1.0 / (d if d != 0.0 else 1e-300)
            out[i] = d
        inn = [0.0] * n  # inward pivots s_i = w_{i-1}/w_i
        s = c[n - 2]
        inn[n - 2] = s
        for i in range(n - 3, m - 1, -1):
            s = c[i] - 1.0 / (s if s != 0.0 else 1e-300)
            inn[i] = s

        w = np.zeros(n)
        w[m] = 1.0
        for i in range(m - 1, 0, -1):
            w[i] = w[i + 1] / out[i] if out[i] != 0.0 else 0.0
        for i in range(m + 1, n - 1):
            w[i] = w[i - 1] / inn[i] if inn[i] != 0.0 else 0.0
        u = w / (1.0 - t)
        u[0] = u[-1] = 0.0
        u /= np.sqrt(np.trapezoid(u * u, self.x))
        return u


def numerov_grid(r, v_eff, step, r_end=None):
    """Resample (r, v_eff) onto a uniform grid starting at r[0]."""
    r = np.asarray(r, dtype=float)
    end = r[-1] if r_end is None else min(r_end, r[-1])
    n = int(np.floor((end - r[0]) / step + 1e-9)) + 1
    x = r[0] + step * np.arange(n)
    diffs = np.diff(r)
    if np.allclose(diffs[: n - 1], step) and np.allclose(r[: n], x):
        return x, np.asarray(v_eff, dtype=float)[:n]
    return x, CubicSpline(r, v_eff)(x)


def solve_bound_states(r, v_eff, mu, window=None, step=0.5, tol_mhz=1e-6,
                       decay=1e-8, sensitive_mhz=SENSITIVE_MHZ):
    """All bound levels of ``v_eff`` (Hartree on grid ``r``) inside ``window``.

    Parameters
    ----------
    r, v_eff : array
        Effective potential samples; ``v_eff`` must vanish at large R.
    mu : float
        Reduced mass in electron masses.
    window : (float, float), optional
        Energy window in MHz, defaults to (min V_eff, 0).
    step : float
        Uniform Numerov step in bohr.

    Returns
    -------
    list of BoundLevel, ordered by v.  Levels with |E| below
    ``sensitive_mhz`` are flagged ``grid_sensitive`` and exempt from the
    decay check.

    Raises
    ------
    GridExtensionError
        If a level that is not grid-sensitive has not decayed to ``decay``
        times its maximum at either end of the grid; ``side`` says which.
    """
    x, v = numerov_grid(r, v_eff, step)
    prob = NumerovProblem(x, v, mu)
    vmin = float(v.min())
    lo, hi = (vmin, 0.0) if window is None else (mhz_to_au(window[0]), mhz_to_au(window[1]))
    lo = max(lo, vmin)
    if hi <= lo:
        return []
    n_lo, n_hi = prob.count(lo), prob.count(hi)
    tol = mhz_to_au(tol_mhz)
    levels = []
    for level in range(n_lo, n_hi):
        e = prob.eigenvalue(level, lo, hi, tol)
        u = prob.wavefunction(e)
        e_mhz = au_to_mhz(e)
        sensitive = abs(e_mhz) < sensitive_mhz
        peak = np.abs(u).max()
        if not sensitive:
            for side, tail, edge_r in (("inner", u[1], x[0]), ("outer", u[-2], x[-1])):
                if abs(tail) >= decay * peak:
                    raise GridExtensionError(
                        f"level v={level} at {e_mhz:.6g} MHz has not decayed at R={edge_r:.0f} a0",
                        e_mhz, side,
                    )
        try:
            rmin, rmax = turning_points(r, v_eff, e)
        except EnergyOutsideWellError:
            rmin = rmax = float("nan")
        edge = min(abs(e - lo), abs(hi - e)) < 10 * tol
        levels.append(
            BoundLevel(
                v=level,
                energy=e_mhz,
                r=x,
                u=u,
                r_min=rmin,
                r_max=rmax,
                mean_r=mean_radius(x, u),
                grid_sensitive=sensitive,
                at_window_edge=edge,
                extra={"inner_tail": float(abs(u[1]) / peak), "outer_tail": float(abs(u[-2]) / peak)},
            )
        )
    return levels

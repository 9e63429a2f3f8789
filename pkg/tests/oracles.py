"""Independent reference calculations used by the tests.

None of these routines share numerical code with the package solvers: the
vibrational oracle diagonalizes a fourth-order finite-difference Hamiltonian
as a banded matrix, and the sensitivity oracle uses Hellmann-Feynman
expectation values instead of repeated solves.
"""

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eig_banded

HARTREE_MHZ = 6.579683920502e9


def fd_levels(r, v, mu, step=0.5, e_max=0.0):
    """Eigenvalues (Hartree) below ``e_max`` of -u''/2mu + V u, Dirichlet box.

    Five-point stencil for the second derivative on a uniform grid built from
    ``r[0]`` to ``r[-1]``, with u = 0 on both walls; ``v`` is interpolated
    with a cubic spline.
    """
    x = np.arange(r[0] + step, r[-1] - step / 2, step)
    vx = CubicSpline(r, v)(x)
    t = 1.0 / (2.0 * mu * 12.0 * step**2)
    n = x.size
    band = np.zeros((3, n))
    band[2] = 30.0 * t + vx
    band[1, 1:] = -16.0 * t
    band[0, 2:] = 1.0 * t
    # ghost points beyond each wall are odd reflections, u(r0 - h) = -u(r0 + h)
    band[2, 0] -= t
    band[2, -1] -= t
    return eig_banded(band, lower=False, eigvals_only=True, select="v",
                      select_range=(vx.min() - 1e-12, e_max))


def fd_levels_mhz(r, v, mu, step=0.5):
    return fd_levels(r, v, mu, step) * HARTREE_MHZ


def hellmann_feynman_shift(x, u, dv_dp, dp):
    """First-order energy change <u|dV/dp|u> dp with ``u`` normalized on ``x``."""
    return float(np.trapezoid(u * u * dv_dp, x) / np.trapezoid(u * u, x) * dp)


def morse_levels(d_e, a, mu):
    """Exact Morse levels D_e (1 - exp(-a x))^2 - D_e, bound ones only."""
    lam = np.sqrt(2.0 * mu * d_e) / a
    n = np.arange(int(np.floor(lam - 0.5)) + 1)
    return -(a**2 / (2.0 * mu)) * (lam - n - 0.5) ** 2


def thermal_moment_closed_form(kt, weighting):
    """<E> of E = kT q^2 under q-measure exp(-q^2) (times q^2 for s-wave)."""
    return 1.5 * kt if weighting == "s-wave" else 0.5 * kt

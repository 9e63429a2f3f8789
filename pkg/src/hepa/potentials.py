"""Adiabatic long-range potentials of the 2S + 2P ungerade manifold.

The electronic operator on a symmetry block is

    U(R) + H_fs(A) + H_fs(B) [+ (J(J+1) + L^2 + S^2 - 2 Omega^2
                                + 2 Lz Sz + L+ S- + L- S+) / (2 mu R^2)]

where U(R) is the (retarded) resonant dipole-dipole interaction, diagonal in
the Hund's case (a) states.  Couplings between different Omega blocks are
dropped.  All energies are in Hartree, distances in bohr.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .basis import hund_a_decomposition, hund_states, operators
from .constants import DEFAULT, PhysicalConstants, au_to_mhz


class RefinementError(RuntimeError):
    """Raised when the R grid is too coarse to follow the eigenvectors."""

    def __init__(self, message, interval):
        super().__init__(message)
        self.interval = interval


def retardation_factors(kr):
    """(Sigma, Pi) retardation factors; both tend to 1 as kR -> 0."""
    kr = np.asarray(kr, dtype=float)
    c, s = np.cos(kr), np.sin(kr)
    return c + kr * s, c + kr * s - kr * kr * c


def _hund_coefficient(spin, lam_abs, parity):
    # Sign chosen for two-electron atoms: exchanging the electronic states of
    # the atoms is an even permutation of the four electrons, so 5Sigma_u is
    # attractive and 5Pi_u repulsive.
    if lam_abs == 0:
        return 2.0 * parity * (-1) ** spin
    return -1.0 * parity * (-1) ** spin


def dipole_dipole_element(r, spin, lambda_abs, omega_parity, retarded=True, constants=DEFAULT):
    """Dipole-dipole energy (Hartree) of the Hund's (a) state |2S+1 Lambda_w>.

    Parameters
    ----------
    r : float or array
        Internuclear distance in bohr.
    spin : int
        Molecular spin S (0, 1 or 2).
    lambda_abs : int
        |Lambda|, 0 for Sigma and 1 for Pi.
    omega_parity : int
        Inversion eigenvalue, -1 for ungerade and +1 for gerade.
    retarded : bool
        Include the kR-dependent retardation factors; otherwise the kR -> 0 limit.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("R must be positive")
    if spin not in (0, 1, 2) or lambda_abs not in (0, 1) or omega_parity not in (-1, 1):
        raise ValueError("invalid Hund's case (a) labels")
    coeff = _hund_coefficient(spin, lambda_abs, omega_parity)
    if retarded:
        f_sigma, f_pi = retardation_factors(constants.k * r)
        factor = f_sigma if lambda_abs == 0 else f_pi
    else:
        factor = 1.0
    value = coeff * constants.c3 / r**3 * factor
    return float(value) if value.ndim == 0 else value


def dipole_projectors():
    """(P_sigma, P_pi): 54 x 54 operators with U = C3/R^3 (f_s P_sigma + f_p P_pi)."""
    p_sigma = np.zeros((54, 54))
    p_pi = np.zeros((54, 54))
    for h in hund_states():
        coeff = _hund_coefficient(h.spin, abs(h.lam), h.parity)
        target = p_sigma if h.lam == 0 else p_pi
        target += coeff * np.outer(h.vector, h.vector)
    return p_sigma, p_pi


def fine_structure_operator(constants=DEFAULT):
    ls = operators().ls
    return constants.alpha * ls + constants.beta * ls @ ls


def rotation_operator():
    """J-independent part of l^2 kept within an Omega block (units of hbar^2).

    L^2 + S^2 - 2 Omega^2 + 2 Lz Sz + L+ S- + L- S+; add J(J+1) separately.
    """
    ops = operators()
    return (
        ops.l2
        + ops.s2
        - 2.0 * ops.omega @ ops.omega
        + 2.0 * ops.lz @ ops.sz
        + ops.lp @ ops.sm
        + ops.lm @ ops.sp
    )


class BlockOperators:
    """Operators projected onto one symmetry block, ready for fast assembly."""

    def __init__(self, blk, constants=DEFAULT):
        self.block = blk
        self.constants = constants
        b = blk.vectors
        p_sigma, p_pi = dipole_projectors()
        self.sigma = b.T @ p_sigma @ b
        self.pi = b.T @ p_pi @ b
        self.fs = b.T @ fine_structure_operator(constants) @ b
        self.rot = b.T @ rotation_operator() @ b

    def matrices(self, r, j=None, retarded=True, rotation=False, fine_structure=True):
        """Stack of block Hamiltonians, shape (len(r), d, d)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r <= 0):
            raise ValueError("R must be positive")
        c = self.constants
        if retarded:
            f_sigma, f_pi = retardation_factors(c.k * r)
        else:
            f_sigma = f_pi = np.ones_like(r)
        scale = c.c3 / r**3
        h = (scale * f_sigma)[:, None, None] * self.sigma + (scale * f_pi)[:, None, None] * self.pi
        if fine_structure:
            h = h + self.fs
        if rotation:
            _check_j(self.block, j)
            d = self.block.dim
            rot = self.rot + j * (j + 1) * np.eye(d)
            h = h + (1.0 / (2.0 * c.reduced_mass * r**2))[:, None, None] * rot
        return h


def _check_j(blk, j):
    if j is None:
        raise ValueError("the rotation term needs J")
    if j < blk.omega:
        raise ValueError(f"J={j} is below Omega={blk.omega}")


def hamiltonian_matrix(blk, r, j=None, retarded=True, rotation=False, fine_structure=True, constants=DEFAULT):
    """Block Hamiltonian (Hartree) at a single distance ``r`` (bohr)."""
    if rotation:
        _check_j(blk, j)
    elif j is not None and j < blk.omega:
        raise ValueError(f"J={j} is below Omega={blk.omega}")
    ops = BlockOperators(blk, constants)
    return ops.matrices([r], j, retarded, rotation, fine_structure)[0]


def full_hamiltonian(r, j=None, retarded=True, rotation=False, constants=DEFAULT):
    """The retained operator on the whole 54-dimensional product space."""
    c = constants
    p_sigma, p_pi = dipole_projectors()
    if retarded:
        f_sigma, f_pi = retardation_factors(c.k * r)
    else:
        f_sigma = f_pi = 1.0
    h = c.c3 / r**3 * (f_sigma * p_sigma + f_pi * p_pi) + fine_structure_operator(c)
    if rotation:
        if j is None:
            raise ValueError("the rotation term needs J")
        h = h + (rotation_operator() + j * (j + 1) * np.eye(54)) / (2.0 * c.reduced_mass * r**2)
    return h


def default_grid(r_min=50.0, r_switch=3000.0, r_max=20000.0, step=0.5):
    """Uniform ``step`` up to ``r_switch``, geometric beyond (first step = ``step``)."""
    inner = np.arange(r_min, r_switch, step)
    ratio = 1.0 + step / r_switch
    n_outer = int(np.ceil(np.log(r_max / r_switch) / np.log(ratio)))
    outer = r_switch * ratio ** np.arange(n_outer + 1)
    outer[-1] = max(outer[-1], r_max)
    return np.concatenate([inner, outer])


@dataclass
class PotentialCurve:
    """One adiabatic curve of a block.

    ``values`` are in Hartree relative to ``asymptote_energy``, the
    separated-atom limit 2S1 + 2P_{asymptote_j}.  ``eigenvectors`` has shape
    (len(r), block.dim) with continuity-fixed signs.
    """

    block: object
    j: int | None
    curve_index: int
    r: np.ndarray
    values: np.ndarray
    eigenvectors: np.ndarray
    asymptote_j: int
    asymptote_energy: float
    flags: dict = field(default_factory=dict)
    constants: PhysicalConstants = DEFAULT
    _radial_correction: np.ndarray | None = field(default=None, repr=False)

    @property
    def radial_correction(self):
        """g(R) = <phi|d^2 phi/dR^2> in 1/bohr^2 (non-positive)."""
        if self._radial_correction is None:
            self._radial_correction = radial_correction(self)
        return self._radial_correction

    def hund_weights(self, i):
        return hund_a_decomposition(self.block, self.eigenvectors[i])

    def well(self):
        """(R at the minimum, depth in Hartree) of the deepest interior minimum.

        Returns None when the curve has no interior minimum below its asymptote.
        """
        v = self.values
        interior = np.flatnonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])) + 1
        interior = interior[v[interior] < 0]
        if interior.size == 0:
            return None
        i = interior[np.argmin(v[interior])]
        return float(self.r[i]), float(-v[i])


def _assign_asymptotes(limits, constants):
    labels = {j: constants.asymptote(j) for j in (0, 1, 2)}
    out = []
    for value in limits:
        j = min(labels, key=lambda jj: abs(labels[jj] - value))
        out.append((j, labels[j]))
    return out


def adiabatic_curves(blk, j=None, r_grid=None, retarded=True, rotation=True, fine_structure=True,
                     constants=DEFAULT, min_overlap=0.9):
    """Diagonalize the block Hamiltonian along ``r_grid`` and follow each eigenvector.

    Eigenvalues are ordered by eigenvector continuity, not by value, and
    eigenvector signs are fixed by overlap with the previous grid point.
    Curves are returned sorted by their value at the largest R.

    Raises
    ------
    RefinementError
        If neighbouring eigenvectors overlap by less than ``min_overlap``.
    """
    if r_grid is None:
        r_grid = default_grid()
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size < 3 or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be strictly increasing with at least 3 points")
    if rotation:
        _check_j(blk, j)

    ops = BlockOperators(blk, constants)
    h = ops.matrices(r, j, retarded, rotation, fine_structure)
    w, v = np.linalg.eigh(h)
    n, d = w.shape

    # follow eigenvectors: permutation and sign per grid point
    raw = np.einsum("nij,nik->njk", v[:-1], v[1:])
    perm = np.arange(d)
    perms = np.empty((n, d), dtype=int)
    perms[0] = perm
    identity_ok = np.all(np.abs(np.diagonal(raw, axis1=1, axis2=2)) >= 0.5, axis=1)
    for i in range(1, n):
        if identity_ok[i - 1]:
            perms[i] = perms[i - 1]
            continue
        # columns of step i matched to columns of step i-1
        rows, cols = linear_sum_assignment(-np.abs(raw[i - 1]))
        local = np.empty(d, dtype=int)
        local[rows] = cols
        perms[i] = local[perms[i - 1]]

    idx = np.arange(n)[:, None]
    w = w[idx, perms]
    v = np.take_along_axis(v, perms[:, None, :], axis=2)
    overlap = np.einsum("nij,nij->nj", v[:-1], v[1:])
    bad = np.abs(overlap) < min_overlap
    if np.any(bad):
        i = int(np.argwhere(bad)[0][0])
        raise RefinementError(
            f"eigenvector overlap {np.abs(overlap[i]).min():.3f} between R={r[i]:.3f} and R={r[i + 1]:.3f}",
            (float(r[i]), float(r[i + 1])),
        )
    signs = np.cumprod(np.vstack([np.ones((1, d)), np.sign(overlap)]), axis=0)
    v = v * signs[:, None, :]

    order = np.argsort(w[-1], kind="stable")
    limits = _assign_asymptotes(w[-1, order], constants)
    flags = {"retarded": retarded, "rotation": rotation, "fine_structure": fine_structure}
    curves = []
    for ci, (col, (asym_j, asym_e)) in enumerate(zip(order, limits)):
        curves.append(
            PotentialCurve(
                block=blk,
                j=j,
                curve_index=ci,
                r=r,
                values=w[:, col] - asym_e,
                eigenvectors=np.ascontiguousarray(v[:, :, col]),
                asymptote_j=asym_j,
                asymptote_energy=asym_e,
                flags=dict(flags),
                constants=constants,
            )
        )
    return curves


def radial_correction(curve):
    """g(R) = <phi|phi''> from three-point finite differences of the eigenvectors.

    Uses the non-uniform stencil, so g = 2[(o+ - 1)/h+ + (o- - 1)/h-]/(h+ + h-)
    with o+- the overlaps with the neighbouring eigenvectors; end points copy
    their neighbour.
    """
    r, v = curve.r, curve.eigenvectors
    h = np.diff(r)
    # unit vectors overlap by at most 1; clipping removes roundoff that would make g > 0
    o = np.minimum(np.einsum("ij,ij->i", v[:-1], v[1:]), 1.0)
    hm, hp = h[:-1], h[1:]
    g = np.empty(r.size)
    g[1:-1] = 2.0 * ((o[1:] - 1.0) / hp + (o[:-1] - 1.0) / hm) / (hp + hm)
    g[0], g[-1] = g[1], g[-2]
    return g


def derivative_norm(curve):
    """||d phi / dR||^2 from central first differences (equals -g to O(h^2))."""
    dv = np.gradient(curve.eigenvectors, curve.r, axis=0)
    return np.einsum("ij,ij->i", dv, dv)


def curve_metadata(curve):
    return {
        "block": curve.block.name,
        "J": curve.j,
        "curve_index": curve.curve_index,
        "asymptote": f"2S1+2P{curve.asymptote_j}",
        "flags": curve.flags,
        "units": {"R_a0": "bohr", "V_MHz": "MHz relative to asymptote", "g_per_a0sq": "1/bohr^2"},
    }


def write_curve_csv(curve, stream, stride=1):
    """CSV columns: R_a0, V_MHz, g_per_a0sq, then one Hund's (a) weight per label."""
    labels = sorted(hund_a_decomposition(curve.block, curve.eigenvectors[0]))
    writer = csv.writer(stream)
    writer.writerow(["R_a0", "V_MHz", "g_per_a0sq"] + [f"w_{lab}" for lab in labels])
    g = curve.radial_correction
    for i in range(0, curve.r.size, stride):
        weights = curve.hund_weights(i)
        writer.writerow(
            [f"{curve.r[i]:.1f}", f"{au_to_mhz(curve.values[i]):.6g}", f"{g[i]:.6g}"]
            + [f"{weights[lab]:.6f}" for lab in labels]
        )


def write_curve_json(curve, stream, stride=1):
    """Metadata plus the sampled R_a0, V_MHz and g_per_a0sq arrays."""
    data = curve_metadata(curve)
    idx = slice(0, curve.r.size, stride)
    data["R_a0"] = [round(float(x), 1) for x in curve.r[idx]]
    data["V_MHz"] = [float(f"{au_to_mhz(x):.6g}") for x in curve.values[idx]]
    data["g_per_a0sq"] = [float(f"{x:.6g}") for x in curve.radial_correction[idx]]
    json.dump(data, stream, indent=2)
    stream.write("\n")


def block_asymptotes(blk, constants=DEFAULT):
    """Sorted separated-atom limits (Hartree) of the block's states."""
    return np.sort(np.linalg.eigvalsh(BlockOperators(blk, constants).fs))


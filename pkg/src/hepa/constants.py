"""Physical constants, unit conversions and the C3 <-> Gamma relation.

Everything downstream works in atomic units (Hartree, bohr, electron mass,
hbar = 1).  Laboratory units (MHz, GHz, nm, uK, Gauss) only appear at the
edges, through the conversion table below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

# CODATA 2018 values, frozen here so that every module uses the same numbers.
CODATA = {
    "hartree_hz": 6.579683920502e15,   # Hartree / h
    "bohr_m": 5.29177210903e-11,
    "au_time_s": 2.4188843265857e-17,  # hbar / Hartree
    "amu_me": 1822.888486209,          # unified atomic mass unit / electron mass
    "amu_kg": 1.66053906660e-27,
    "h_js": 6.62607015e-34,
    "kb_jk": 1.380649e-23,
    "muB_jt": 9.2740100783e-24,        # magnitude of the Bohr magneton
}

HARTREE_MHZ = CODATA["hartree_hz"] * 1e-6
HARTREE_GHZ = CODATA["hartree_hz"] * 1e-9
BOHR_NM = CODATA["bohr_m"] * 1e9
HBAR_JS = CODATA["h_js"] / (2.0 * math.pi)
KB_MHZ_PER_UK = CODATA["kb_jk"] * 1e-6 / CODATA["h_js"] * 1e-6
MUB_MHZ_PER_GAUSS = CODATA["muB_jt"] * 1e-4 / CODATA["h_js"] * 1e-6

C6_BOUND_AU = 3265.0


def au_to_mhz(energy):
    return energy * HARTREE_MHZ


def mhz_to_au(freq):
    return freq / HARTREE_MHZ


def au_to_ghz(energy):
    return energy * HARTREE_GHZ


def ghz_to_au(freq):
    return freq / HARTREE_GHZ


def nm_to_bohr(length):
    return length / BOHR_NM


def bohr_to_nm(length):
    return length * BOHR_NM


def c3_from_gamma(gamma, lambda_nm):
    """C3 in atomic units from the decay rate ``gamma`` (rad/s) and wavelength.

    C3 = (3/4) hbar Gamma (lambda / 2 pi)^3
    """
    if lambda_nm <= 0:
        raise ValueError(f"wavelength must be positive, got {lambda_nm}")
    if gamma < 0:
        raise ValueError(f"decay rate must be non-negative, got {gamma}")
    hbar_gamma = gamma * CODATA["au_time_s"]
    reduced = nm_to_bohr(lambda_nm) / (2.0 * math.pi)
    return 0.75 * hbar_gamma * reduced**3


def gamma_from_c3(c3, lambda_nm):
    """Inverse of :func:`c3_from_gamma`; returns Gamma in rad/s."""
    if c3 <= 0:
        raise ValueError(f"C3 must be positive, got {c3}")
    if lambda_nm <= 0:
        raise ValueError(f"wavelength must be positive, got {lambda_nm}")
    reduced = nm_to_bohr(lambda_nm) / (2.0 * math.pi)
    return c3 / (0.75 * reduced**3) / CODATA["au_time_s"]


def fine_structure_constants(delta21_ghz, delta10_ghz):
    """Return (alpha, beta) in Hartree for H_fs = alpha L.S + beta (L.S)^2.

    ``delta21_ghz`` is E(J=1) - E(J=2) and ``delta10_ghz`` is E(J=0) - E(J=1)
    for an L=1, S=1 atom.  With L.S = +1, -1, -2 for J = 2, 1, 0 these are
    reproduced exactly.
    """
    if delta21_ghz <= 0 or delta10_ghz <= 0:
        raise ValueError("fine-structure splittings must be positive")
    d21 = ghz_to_au(delta21_ghz)
    d10 = ghz_to_au(delta10_ghz)
    alpha = -d21 / 2.0
    beta = (2.0 * d10 - d21) / 6.0
    return alpha, beta


def fine_structure_level(j, alpha, beta):
    """Energy of the L=1, S=1 fine-structure level J, in the units of alpha."""
    ls = 0.5 * (j * (j + 1) - 4)
    return alpha * ls + beta * ls * ls


@dataclass(frozen=True)
class PhysicalConstants:
    """Model constants; immutable and hashable so results can be cached on them.

    Attributes
    ----------
    c3 : float
        Resonant dipole-dipole coefficient, Hartree * bohr^3.
    lambda_nm : float
        Wavelength shared by the three 2S1 - 2P_J lines.
    delta21_ghz, delta10_ghz : float
        Fine-structure splittings 2P2 <-> 2P1 and 2P1 <-> 2P0.
    mass_u : float
        Atomic mass of 4He in unified atomic mass units.
    """

    c3: float = 6.405
    lambda_nm: float = 1083.3
    delta21_ghz: float = 2.291175
    delta10_ghz: float = 29.616950
    mass_u: float = 4.002602
    c6_bound: float = field(default=C6_BOUND_AU)

    def __post_init__(self):
        if self.c3 <= 0:
            raise ValueError(f"C3 must be positive, got {self.c3}")
        if self.lambda_nm <= 0:
            raise ValueError(f"wavelength must be positive, got {self.lambda_nm}")
        if not self.delta10_ghz > self.delta21_ghz > 0:
            raise ValueError("expected delta10 > delta21 > 0")
        if self.mass_u <= 0:
            raise ValueError("mass must be positive")

    @property
    def gamma(self):
        """Radiative decay rate in rad/s."""
        return gamma_from_c3(self.c3, self.lambda_nm)

    @property
    def gamma_mhz(self):
        """Gamma / 2 pi in MHz."""
        return self.gamma / (2.0 * math.pi) * 1e-6

    @property
    def k(self):
        """Photon wavenumber in 1/bohr."""
        return 2.0 * math.pi / nm_to_bohr(self.lambda_nm)

    @property
    def alpha(self):
        return fine_structure_constants(self.delta21_ghz, self.delta10_ghz)[0]

    @property
    def beta(self):
        return fine_structure_constants(self.delta21_ghz, self.delta10_ghz)[1]

    @property
    def atom_mass(self):
        """Atomic mass in electron masses."""
        return self.mass_u * CODATA["amu_me"]

    @property
    def atom_mass_kg(self):
        return self.mass_u * CODATA["amu_kg"]

    @property
    def reduced_mass(self):
        """Reduced mass of the pair in electron masses."""
        return self.atom_mass / 2.0

    @property
    def mu_bohr_magneton(self):
        """Bohr magneton in MHz/G, negative (electron charge sign)."""
        return -MUB_MHZ_PER_GAUSS

    @property
    def mu(self):
        """Atomic magnetic moment mu = -2 mu_B in MHz/G (positive)."""
        return -2.0 * self.mu_bohr_magneton

    def asymptote(self, j):
        """Energy (Hartree) of the 2S1 + 2P_j separated-atom limit."""
        return fine_structure_level(j, self.alpha, self.beta)

    def with_c3(self, c3):
        return replace(self, c3=c3)


DEFAULT = PhysicalConstants()

_OVERRIDE_KEYS = {"c3_au", "gamma_mhz", "lambda_nm", "delta21_ghz", "delta10_ghz", "mass_u"}


def load_constants(path=None):
    """Build constants from an optional JSON override file.

    Recognized keys: c3_au, gamma_mhz (Gamma/2pi), lambda_nm, delta21_ghz,
    delta10_ghz, mass_u.  ``None`` returns the built-in defaults.
    """
    if path is None:
        return DEFAULT
    data = json.loads(Path(path).read_text())
    unknown = set(data) - _OVERRIDE_KEYS
    if unknown:
        raise ValueError(f"unknown constants keys: {sorted(unknown)}")
    if "c3_au" in data and "gamma_mhz" in data:
        raise ValueError("give either c3_au or gamma_mhz, not both")
    kwargs = {}
    for key in ("lambda_nm", "delta21_ghz", "delta10_ghz", "mass_u"):
        if key in data:
            kwargs[key] = float(data[key])
    lam = kwargs.get("lambda_nm", DEFAULT.lambda_nm)
    if "c3_au" in data:
        kwargs["c3"] = float(data["c3_au"])
    elif "gamma_mhz" in data:
        kwargs["c3"] = c3_from_gamma(2.0 * math.pi * float(data["gamma_mhz"]) * 1e6, lam)
    return PhysicalConstants(**kwargs)

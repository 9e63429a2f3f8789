import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hepa import basis as B
from hepa import potentials as P
from hepa.constants import DEFAULT, au_to_mhz, mhz_to_au

C3 = DEFAULT.c3


@pytest.mark.parametrize("spin,lam,coeff", [
    (2, 0, -2.0), (0, 0, -2.0), (1, 0, 2.0), (2, 1, 1.0), (1, 1, -1.0), (0, 1, 1.0),
])
def test_dipole_element_ungerade_nonretarded(spin, lam, coeff):
    r = 200.0
    value = P.dipole_dipole_element(r, spin, lam, -1, retarded=False)
    assert value == pytest.approx(coeff * C3 / r**3)


@pytest.mark.parametrize("spin", [0, 1, 2])
@pytest.mark.parametrize("lam", [0, 1])
def test_dipole_element_gerade_is_opposite(spin, lam):
    u = P.dipole_dipole_element(300.0, spin, lam, -1)
    g = P.dipole_dipole_element(300.0, spin, lam, +1)
    assert g == pytest.approx(-u)


def test_dipole_element_validation():
    with pytest.raises(ValueError):
        P.dipole_dipole_element(0.0, 2, 0, -1)
    with pytest.raises(ValueError):
        P.dipole_dipole_element(100.0, 3, 0, -1)


@given(st.floats(0.0, 0.05))
def test_retardation_small_kr(x):
    fs, fp = P.retardation_factors(x)
    assert fs == pytest.approx(1 + x**2 / 2 - x**4 / 8, abs=1e-9)
    assert fp == pytest.approx(1 - x**2 / 2 + 3 * x**4 / 8, abs=1e-9)


def test_retardation_zero():
    assert P.retardation_factors(0.0) == (1.0, 1.0)


@pytest.fixture(scope="module")
def blocks():
    return B.ungerade_blocks()


@settings(max_examples=25, deadline=None)
@given(st.floats(60.0, 5000.0), st.integers(3, 6))
def test_full_hamiltonian_symmetric_and_conserves_symmetries(r, j):
    ops = B.operators()
    h = P.full_hamiltonian(r, j, rotation=True)
    assert np.allclose(h, h.T, atol=1e-16)
    for op in (ops.omega, ops.inversion, ops.reflection):
        assert np.allclose(h @ op, op @ h, atol=1e-15)


def test_ungerade_gerade_decoupled():
    u, g = B.symmetrize()
    h = P.full_hamiltonian(150.0, 2, rotation=True)
    assert np.abs(u.T @ h @ g).max() < 1e-16


def test_blocks_reproduce_full_spectrum():
    r, j = 180.0, 3
    full = np.linalg.eigvalsh(P.full_hamiltonian(r, j, rotation=True))
    parts = []
    for parity in ("u", "g"):
        for omega in range(4):
            for refl in (("+", "-") if omega == 0 else (None,)):
                blk = B.block(parity, omega, refl)
                w = np.linalg.eigvalsh(P.hamiltonian_matrix(blk, r, j, rotation=True))
                parts.extend(w if omega == 0 else np.concatenate([w, w]))
    assert np.allclose(np.sort(parts), full, atol=1e-15)


def test_block_hamiltonian_hermitian(blocks):
    for blk in blocks:
        h = P.hamiltonian_matrix(blk, 250.0, j=max(blk.omega, 1) + 2, rotation=True)
        assert np.allclose(h, h.T)


def test_0u_plus_without_fine_structure():
    blk = B.block("u", 0, "+")
    r = 300.0
    h = P.hamiltonian_matrix(blk, r, retarded=False, fine_structure=False)
    w = np.linalg.eigvalsh(h) * r**3 / C3
    assert np.allclose(w, [-2.0, -2.0, -1.0, 1.0])


def test_large_r_limits_are_fine_structure_levels(blocks):
    for blk in blocks:
        w = np.linalg.eigvalsh(P.hamiltonian_matrix(blk, 1e8))
        assert np.allclose(w, P.block_asymptotes(blk), atol=mhz_to_au(1e-3))


def test_rotation_requires_valid_j():
    with pytest.raises(ValueError):
        P.hamiltonian_matrix(B.block("u", 2), 100.0, j=1, rotation=True)
    with pytest.raises(ValueError):
        P.hamiltonian_matrix(B.block("u", 0, "+"), 100.0, rotation=True)


def test_default_grid_shape():
    r = P.default_grid()
    assert r[0] == 50.0 and r[-1] >= 20000.0
    assert np.all(np.diff(r) > 0)
    assert np.allclose(np.diff(r[r < 3000]), 0.5)


@pytest.fixture(scope="module")
def curves_0u_plus():
    return P.adiabatic_curves(B.block("u", 0, "+"), 1)


def test_curves_sorted_and_labelled(curves_0u_plus):
    assert [c.asymptote_j for c in curves_0u_plus] == [2, 2, 1, 0]
    assert all(abs(c.values[-1]) < mhz_to_au(0.1) for c in curves_0u_plus)


def test_curve_eigenvectors_continuous(curves_0u_plus):
    for c in curves_0u_plus:
        overlap = np.einsum("ij,ij->i", c.eigenvectors[:-1], c.eigenvectors[1:])
        assert overlap.min() > 0.9


def test_radial_correction_non_positive(curves_0u_plus):
    for c in curves_0u_plus:
        assert np.all(c.radial_correction <= 1e-14)


def test_radial_correction_matches_derivative_norm(curves_0u_plus):
    c = curves_0u_plus[3]
    g = c.radial_correction
    d = P.derivative_norm(c)
    mask = (c.r > 100) & (c.r < 2500)
    assert np.allclose(-g[mask], d[mask], rtol=2e-2, atol=1e-12)


def test_0u_plus_well(curves_0u_plus):
    well = curves_0u_plus[3].well()
    assert well is not None
    assert 140 < well[0] < 260
    assert curves_0u_plus[0].well() is None


def test_refinement_error_on_coarse_grid():
    with pytest.raises(P.RefinementError) as info:
        P.adiabatic_curves(B.block("u", 0, "+"), 1, np.array([30.0, 2000.0, 20000.0]), min_overlap=0.999)
    lo, hi = info.value.interval
    assert lo < hi


def test_curve_grid_validation():
    with pytest.raises(ValueError):
        P.adiabatic_curves(B.block("u", 2), 2, np.array([100.0, 90.0, 200.0]))


def test_hund_weights_short_range_5pi(curves_0u_plus):
    # the 0u+ well's inner wall is built from the repulsive 5Pi_u state
    c = curves_0u_plus[3]
    i = np.searchsorted(c.r, 60.0)
    assert c.hund_weights(i)["5Pi_u"] > 0.5


def test_curve_writers(curves_0u_plus):
    buf = io.StringIO()
    P.write_curve_csv(curves_0u_plus[3], buf, stride=1000)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("R_a0,V_MHz,g_per_a0sq,w_")
    assert len(lines) > 5
    buf = io.StringIO()
    P.write_curve_json(curves_0u_plus[3], buf, stride=1000)
    doc = json.loads(buf.getvalue())
    assert doc["asymptote"] == "2S1+2P0"
    assert len(doc["R_a0"]) == len(doc["V_MHz"])


def test_well_depth_fixed_nuclei_matches_dense_minimum():
    # minimize the lowest 0u+ P0-curve eigenvalue by brute force on a fine grid
    blk = B.block("u", 0, "+")
    curves = P.adiabatic_curves(blk, rotation=False)
    depth = au_to_mhz(curves[3].well()[1])
    r = np.linspace(150, 300, 3001)
    asym = DEFAULT.asymptote(0)
    h = P.BlockOperators(blk).matrices(r)
    w = np.linalg.eigvalsh(h)
    # the P0 curve is the highest eigenvalue at these distances
    brute = au_to_mhz(asym - w[:, -1].min())
    assert depth == pytest.approx(brute, rel=1e-4)


def test_retarded_5sigma_u_closed_form():
    r = 150.0
    kr = DEFAULT.k * r
    expected = -2.0 * C3 / r**3 * (np.cos(kr) + kr * np.sin(kr))
    assert P.dipole_dipole_element(r, 2, 0, -1) == pytest.approx(expected, rel=1e-12)


def test_effective_potential_above_bare(curves_0u_plus):
    from hepa.radial import effective_potential
    for c in curves_0u_plus:
        assert np.all(effective_potential(c) >= c.values)


def test_radial_correction_vanishes_at_large_r(curves_0u_plus):
    for c in curves_0u_plus:
        g = np.abs(c.radial_correction)
        assert g[-1] < 1e-3 * g.max() + 1e-16

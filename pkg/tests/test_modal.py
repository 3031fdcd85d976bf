"""Eigensolutions: frozen frequencies, orthonormality, and the coupling shift."""

import numpy as np
import pytest

import piezowim as pw

# Pinned after an independent recomputation of the generalized eigenproblem
# (separate script, dense solve on the same discretization).
F_SC_REF = (76.6408, 480.2553)
F_OC_REF = (79.1487, 485.2435)
THETA_ABS_REF = np.array([0.02488, 0.08642, 0.14187, 0.19873, 0.25547])
P_ABS_REF = np.array([0.07089, 0.03929, 0.02303, 0.01646, 0.01279])


def test_short_circuit_frequencies_frozen(sc_basis):
    assert sc_basis.frequencies[0] == pytest.approx(F_SC_REF[0], rel=1e-6)
    assert sc_basis.frequencies[1] == pytest.approx(F_SC_REF[1], rel=1e-6)


def test_open_circuit_frequencies_frozen(oc_basis):
    assert oc_basis.frequencies[0] == pytest.approx(F_OC_REF[0], rel=1e-6)
    assert oc_basis.frequencies[1] == pytest.approx(F_OC_REF[1], rel=1e-6)


def test_mass_orthonormality(sys0, sc_basis):
    G = sc_basis.shapes.T @ sys0.M @ sc_basis.shapes
    assert np.max(np.abs(G - np.eye(sc_basis.N_m))) < 1e-9


def test_stiffness_diagonalization(sys0, sc_basis):
    G = sc_basis.shapes.T @ sys0.K @ sc_basis.shapes
    w2 = sc_basis.omegas**2
    assert np.allclose(np.diag(G), w2, rtol=1e-6)
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) < 1e-6 * w2[-1]


def test_open_circuit_stiffening_and_interlacing(sc_basis, oc_basis):
    """The voltage constraint adds a rank-1 stiffness term, so every
    open-circuit eigenvalue sits in [lam_sc_r, lam_sc_r+1]."""
    lam_sc = sc_basis.omegas**2
    lam_oc = oc_basis.omegas**2
    assert np.all(lam_oc >= lam_sc * (1.0 - 1e-12))
    assert np.all(lam_oc[:-1] <= lam_sc[1:] * (1.0 + 1e-12))
    # the fundamental detunes by a couple of Hz, higher modes much less
    assert oc_basis.frequencies[0] - sc_basis.frequencies[0] > 2.0


def test_uncoupled_limit_has_no_shift():
    spec = pw.reference_bimorph(e31=0.0, n_elements=12)
    sys_ = pw.assemble(spec)
    sc = pw.short_circuit_modes(sys_, n_modes=3)
    oc = pw.open_circuit_modes(sys_, n_modes=3)
    assert np.array_equal(sc.frequencies, oc.frequencies)


def test_solves_are_deterministic(sys0):
    a = pw.short_circuit_modes(sys0)
    b = pw.short_circuit_modes(sys0)
    assert np.array_equal(a.frequencies, b.frequencies)
    assert np.array_equal(a.shapes, b.shapes)


def test_sign_convention(sc_basis):
    idx = np.argmax(np.abs(sc_basis.shapes), axis=0)
    assert np.all(sc_basis.shapes[idx, np.arange(sc_basis.N_m)] > 0.0)


def test_truncation_is_nested(sys0, sc_basis):
    wide = pw.short_circuit_modes(sys0, n_modes=10)
    # the subset eigensolver takes a slightly different path per subset size,
    # so agreement is roundoff-limited rather than bitwise
    assert np.allclose(wide.frequencies[:5], sc_basis.frequencies, rtol=1e-7)
    assert np.allclose(wide.shapes[:, :5], sc_basis.shapes, rtol=1e-7, atol=1e-8)


def test_modal_coupling_magnitudes_frozen(sys0, sc_basis):
    theta = sc_basis.shapes.T @ sys0.Theta
    p = sc_basis.shapes.T @ (sys0.M @ sys0.Lvec)
    assert np.allclose(np.abs(theta), THETA_ABS_REF, rtol=1e-3)
    assert np.allclose(np.abs(p), P_ABS_REF, rtol=1e-3)


def test_n_modes_validation(sys0):
    with pytest.raises(ValueError):
        pw.short_circuit_modes(sys0, n_modes=0)
    with pytest.raises(ValueError):
        pw.short_circuit_modes(sys0, n_modes=sys0.n_dof + 1)


def test_tip_mass_ladder_frozen(sc78):
    assert sc78.frequencies[0] == pytest.approx(11.0709, rel=1e-4)

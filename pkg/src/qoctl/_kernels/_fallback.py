"""Pure-numpy propagation kernels.

Reference implementation of the hot loops; the compiled extension in
``_step.pyx`` provides the same four entry points with identical semantics.
Given the same inputs both backends agree to close to machine precision
(see tests/test_kernels.py).

Conventions shared by both backends:

* ``amps`` has shape ``(nt - 1, n_controls)``: one sample per midpoint.
* Step ``k`` applies the exponential of the generator built from
  ``amps[k]``.  ``direction=+1`` fills ``out[k+1]`` from ``out[k]``;
  ``direction=-1`` fills ``out[k]`` from ``out[k+1]`` with ``out[-1]`` set
  to the boundary value (same midpoint grid in both directions).
* For kets the step operator is ``exp(-1j * H * dt)``; a backward
  (adjoint) run is requested by passing ``-dt``.  For density matrices the
  step operator is ``expm(G * dt)``; adjointing the generator for backward
  runs is the caller's job.
"""

import numpy as np
from scipy.linalg import expm

BACKEND = "python"


def expm_hermitian(h: np.ndarray, scale: complex) -> np.ndarray:
    """``expm(scale * h)`` for Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(scale * w)) @ v.conj().T


def propagate_pwc_ket(drift, coups, amps, dt, psi0, direction):
    """Piecewise-constant-exponential propagation of a state vector.

    Parameters
    ----------
    drift : (N, N) complex ndarray
    coups : (M, N, N) complex ndarray
        One summed coupling matrix per control channel.
    amps : (nt-1, M) float ndarray
    dt : float
        Signed: negative ``dt`` realizes the adjoint (backward) step.
    psi0 : (N,) complex ndarray
        Boundary state: at ``t0`` for ``direction=+1``, at ``tf`` for ``-1``.
    direction : int

    Returns
    -------
    (nt, N) complex ndarray, indexed by state-grid point.
    """
    n_steps = amps.shape[0]
    out = np.empty((n_steps + 1, drift.shape[0]), dtype=complex)
    if direction > 0:
        out[0] = psi0
        for k in range(n_steps):
            h = _assemble(drift, coups, amps[k])
            out[k + 1] = expm_hermitian(h, -1j * dt) @ out[k]
    else:
        out[n_steps] = psi0
        for k in range(n_steps - 1, -1, -1):
            h = _assemble(drift, coups, amps[k])
            out[k] = expm_hermitian(h, -1j * dt) @ out[k + 1]
    return out


def propagate_pwc_dm(gen0, gens, amps, dt, rho0_vec, direction):
    """Same stepping for a vectorized density matrix under a GKLS generator.

    The generator per step is ``gen0 + sum_j amps[k, j] * gens[j]`` and the
    step operator is its matrix exponential times ``dt`` (Pade scaling and
    squaring; the generator is not normal).  For backward (adjoint)
    propagation the caller passes the conjugate-transposed generator parts.
    """
    n_steps = amps.shape[0]
    dim = gen0.shape[0]
    out = np.empty((n_steps + 1, dim), dtype=complex)
    if direction > 0:
        out[0] = rho0_vec
        for k in range(n_steps):
            g = _assemble(gen0, gens, amps[k])
            out[k + 1] = expm(g * dt) @ out[k]
    else:
        out[n_steps] = rho0_vec
        for k in range(n_steps - 1, -1, -1):
            g = _assemble(gen0, gens, amps[k])
            out[k] = expm(g * dt) @ out[k + 1]
    return out


def krotov_forward_ket(drift, coups, amps, chi, psi0, dt, gain):
    """Sequential-update forward pass of the optimizer, ket variant.

    For each midpoint ``k`` the field update
    ``du_j = gain[k] * mean_w Im <chi[k, w] | C_j | psi[k, w]>``
    is applied to ``amps[k]`` **before** stepping the states through the
    exponential built from the updated amplitudes.

    Parameters
    ----------
    amps : (nt-1, M) float ndarray
        Updated in place.
    chi : (nt, W, N) complex ndarray
        Backward-propagated co-states on the state grid (W ensemble members).
    psi0 : (W, N) complex ndarray
    gain : (nt-1,) float ndarray
        Update shape over Krotov step size, ``S(t_k)/lambda`` (an ensemble
        average over W is taken internally).

    Returns
    -------
    (nt, W, N) complex ndarray of forward-propagated states.
    """
    n_steps, n_ctrl = amps.shape
    n_ens, dim = psi0.shape
    out = np.empty((n_steps + 1, n_ens, dim), dtype=complex)
    out[0] = psi0
    for k in range(n_steps):
        for j in range(n_ctrl):
            upd = 0.0
            for w in range(n_ens):
                upd += np.vdot(chi[k, w], coups[j] @ out[k, w]).imag
            amps[k, j] += gain[k] * upd / n_ens
        step = expm_hermitian(_assemble(drift, coups, amps[k]), -1j * dt)
        out[k + 1] = out[k] @ step.T
    return out


def krotov_forward_dm(gen0, gens, comms, amps, chi, rho0_vec, dt, gain):
    """Sequential-update forward pass, vectorized-density variant.

    ``comms[j]`` is the vectorized commutator map ``[H_j, .]`` so that the
    update reads ``du_j = gain[k] * mean_w Im( chi[k,w]^dag comms[j] rho )``.
    """
    n_steps, n_ctrl = amps.shape
    n_ens, dim = rho0_vec.shape
    out = np.empty((n_steps + 1, n_ens, dim), dtype=complex)
    out[0] = rho0_vec
    for k in range(n_steps):
        for j in range(n_ctrl):
            upd = 0.0
            for w in range(n_ens):
                upd += np.vdot(chi[k, w], comms[j] @ out[k, w]).imag
            amps[k, j] += gain[k] * upd / n_ens
        step = expm(_assemble(gen0, gens, amps[k]) * dt)
        out[k + 1] = out[k] @ step.T
    return out


def _assemble(base, parts, amplitudes):
    m = base.copy()
    for j in range(parts.shape[0]):
        m += amplitudes[j] * parts[j]
    return m

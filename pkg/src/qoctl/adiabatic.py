"""Instantaneous eigensystem tracking and counterdiabatic drive synthesis.

The dressed frame orders the per-step eigensystem by continuity (maximal
successive overlap) and fixes the gauge by making successive overlaps real
and positive; with that gauge the generic counterdiabatic construction
reduces to the closed-form ``(theta_dot / 2) sigma_y`` for a real two-level
Hamiltonian.

Angle convention: ``tan(theta) = Omega0 / Delta_L`` with
``theta = arctan2(Omega0, Delta_L)`` continuous through the crossing, so
``theta_dot = (Delta_L dOmega0 - Omega0 dDelta_L) / (Omega0^2 + Delta_L^2)``.
The counterdiabatic term is invariant under an overall sign flip of the
Hamiltonian, so the same formulas serve both ``+-(Delta sz + Omega sx)/2``
sign conventions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import ControlledHamiltonian, Operator
from .dynamics import ControlField, TimeGrid, Trajectory
from .frames import ThreeLevelDriveSpec, rwa_three_level

CONTINUITY_MIN_OVERLAP = 0.9


class DegenerateCrossingError(ValueError):
    """Continuity tracking was ambiguous at the reported step indices."""

    def __init__(self, steps):
        super().__init__(f"degenerate or discontinuous eigensystem at "
                         f"steps {list(steps)}")
        self.steps = tuple(steps)


class DetuningConditionError(ValueError):
    """No zero eigenvalue: the dark-state detuning condition is violated."""


@dataclass(frozen=True)
class DressedFrame:
    """Continuity-ordered instantaneous eigensystem on the midpoint grid."""

    grid: TimeGrid
    energies: np.ndarray      # (nt-1, N), ordered by continuity
    vectors: np.ndarray       # (nt-1, N, N), eigenvectors as columns
    flagged_steps: tuple      # indices where tracking was ambiguous

    @property
    def dim(self) -> int:
        return self.energies.shape[1]

    def gaps(self) -> np.ndarray:
        """(nt-1,) smallest gap between adjacent ordered energies."""
        sorted_e = np.sort(self.energies, axis=1)
        return np.min(np.diff(sorted_e, axis=1), axis=1)


def dressed_frame(h: ControlledHamiltonian,
                  controls: Sequence[ControlField],
                  grid: TimeGrid) -> DressedFrame:
    """Per-midpoint eigendecomposition with continuity ordering.

    The first step is ordered by ascending eigenvalue; subsequent steps are
    matched to the previous one by maximal overlap, and each eigenvector's
    phase is fixed so that ``<phi_n(t_k)|phi_n(t_k+1)>`` is real positive.
    Steps where the assignment is ambiguous (tiny gap or overlap below 0.9)
    are flagged, not silently accepted.
    """
    if len(controls) != h.n_controls:
        raise ValueError(f"expected {h.n_controls} control fields")
    amps = np.stack([f.samples for f in controls], axis=1) if controls \
        else np.zeros((grid.nt - 1, 0))
    n_steps = grid.nt - 1
    dim = h.dim
    energies = np.empty((n_steps, dim))
    vectors = np.empty((n_steps, dim, dim), dtype=complex)
    flagged = []
    for k in range(n_steps):
        ham = h.at(amps[k]).matrix
        w, v = np.linalg.eigh(ham)
        if k == 0:
            # deterministic gauge: largest component real positive
            for n in range(dim):
                lead = np.argmax(np.abs(v[:, n]))
                phase = v[lead, n] / abs(v[lead, n])
                v[:, n] = v[:, n] / phase
            energies[0], vectors[0] = w, v
            continue
        overlap = np.abs(vectors[k - 1].conj().T @ v)
        rows, cols = linear_sum_assignment(-overlap)
        perm = np.empty(dim, dtype=int)
        perm[rows] = cols
        w, v = w[perm], v[:, perm]
        matched = overlap[np.arange(dim), perm]
        scale = max(1.0, float(np.max(np.abs(w))))
        if np.min(matched) < CONTINUITY_MIN_OVERLAP or \
                np.min(np.diff(np.sort(w))) < 1e-10 * scale:
            flagged.append(k)
        inner = np.einsum("in,in->n", vectors[k - 1].conj(), v)
        phases = np.where(np.abs(inner) > 0, inner / np.abs(inner), 1.0)
        energies[k] = w
        vectors[k] = v / phases[None, :]
    return DressedFrame(grid, energies, vectors, tuple(flagged))


@dataclass(frozen=True)
class MixingAngles:
    """Two-level mixing angle ``theta`` (and coupling phase ``phi``)."""

    theta: ControlField
    phi: ControlField
    theta_dot: np.ndarray

    @property
    def grid(self) -> TimeGrid:
        return self.theta.grid


def mixing_angles(rabi: ControlField, detuning: ControlField,
                  rabi_dot: Optional[np.ndarray] = None,
                  detuning_dot: Optional[np.ndarray] = None) -> MixingAngles:
    """Mixing angle of ``-+ (Delta sz + Omega sx)/2`` per midpoint.

    ``theta_dot`` comes from the analytic rate
    ``(Delta dOmega - Omega dDelta) / (Omega^2 + Delta^2)`` when the control
    derivatives are supplied, else from central differences (one-sided at
    the ends) of the sampled controls.
    """
    if rabi.grid != detuning.grid:
        raise ValueError("rabi and detuning must share a grid")
    omega = rabi.samples
    delta = detuning.samples
    dt = rabi.grid.dt
    if rabi_dot is None:
        rabi_dot = _central_diff(omega, dt)
    if detuning_dot is None:
        detuning_dot = _central_diff(delta, dt)
    omega_sq = omega ** 2 + delta ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        theta_dot = np.where(omega_sq > 0,
                             (delta * rabi_dot - omega * detuning_dot)
                             / np.where(omega_sq > 0, omega_sq, 1.0),
                             0.0)
    theta = ControlField(rabi.grid, np.arctan2(omega, delta))
    phi = ControlField(rabi.grid, np.where(omega >= 0, 0.0, np.pi))
    return MixingAngles(theta, phi, theta_dot)


def adiabaticity_margin(frame: DressedFrame,
                        angles: MixingAngles) -> ControlField:
    """Per-midpoint ratio ``|theta_dot| / (2 |E+ - E-|)``; << 1 when
    adiabatic.  A closed gap reports infinity rather than raising."""
    if frame.dim != 2:
        raise ValueError("adiabaticity margin is defined for two levels")
    gap = np.abs(frame.energies[:, 1] - frame.energies[:, 0])
    ratio = np.where(gap > 0,
                     0.5 * np.abs(angles.theta_dot)
                     / np.where(gap > 0, gap, 1.0),
                     np.inf)
    return ControlField(frame.grid, ratio)


def counterdiabatic_tls(rabi: ControlField, detuning: ControlField,
                        rabi_dot: Optional[np.ndarray] = None,
                        detuning_dot: Optional[np.ndarray] = None
                        ) -> ControlField:
    """Closed-form counterdiabatic coefficient of ``sigma_y``.

    Adding ``u_cd(t) sigma_y`` with ``u_cd = theta_dot / 2`` to the
    two-level RWA Hamiltonian cancels non-adiabatic transitions exactly;
    for a linear sweep at constant coupling the profile is a Lorentzian.
    """
    angles = mixing_angles(rabi, detuning, rabi_dot, detuning_dot)
    return ControlField(rabi.grid, 0.5 * angles.theta_dot)


def counterdiabatic_generic(frame: DressedFrame) -> list:
    """Counterdiabatic operator sequence ``i (dV/dt) V^dag`` per midpoint.

    ``V`` is the continuity-gauged eigenvector frame; the derivative is a
    central finite difference (one-sided at the ends) and the result is
    symmetrized, which discards only the anti-Hermitian discretization
    residue.  Flagged degenerate steps propagate as errors.
    """
    if frame.flagged_steps:
        raise DegenerateCrossingError(frame.flagged_steps)
    v = frame.vectors
    n_steps = v.shape[0]
    if n_steps < 2:
        raise ValueError("need at least two midpoint frames")
    dt = frame.grid.dt
    out = []
    for k in range(n_steps):
        if k == 0:
            dv = (v[1] - v[0]) / dt
        elif k == n_steps - 1:
            dv = (v[-1] - v[-2]) / dt
        else:
            dv = (v[k + 1] - v[k - 1]) / (2 * dt)
        hcd = 1j * dv @ v[k].conj().T
        out.append(Operator(0.5 * (hcd + hcd.conj().T)))
    return out


def stirap_dark_state(spec: ThreeLevelDriveSpec) -> Trajectory:
    """Zero-eigenvalue dark state of the resonant three-level system.

    Requires one- and two-photon resonance; each midpoint's Hamiltonian
    must have an eigenvalue within ``1e-10`` of zero (else
    :class:`DetuningConditionError`), and the corresponding eigenstate is
    checked to have no projection on the lossy intermediate level.
    Returned as a ket trajectory on the midpoint grid.
    """
    if abs(spec.detuning_1) > 1e-12 or abs(spec.detuning_2p) > 1e-12:
        raise DetuningConditionError(
            f"need one- and two-photon resonance, got Delta_1="
            f"{spec.detuning_1}, Delta_2P={spec.detuning_2p}")
    h, fields = rwa_three_level(spec)
    grid = spec.grid
    amps = np.stack([f.samples for f in fields], axis=1)
    darks = np.empty((grid.nt - 1, 3), dtype=complex)
    prev = None
    for k in range(grid.nt - 1):
        ham = h.at(amps[k]).matrix
        w, v = np.linalg.eigh(ham)
        idx = int(np.argmin(np.abs(w)))
        scale = max(1.0, float(np.max(np.abs(ham))))
        if abs(w[idx]) > 1e-10 * scale:
            raise DetuningConditionError(
                f"no zero eigenvalue at step {k}: closest is {w[idx]}")
        dark = v[:, idx]
        if abs(dark[1]) > 1e-10:
            raise DetuningConditionError(
                f"dark state at step {k} has intermediate-level "
                f"projection {abs(dark[1])}")
        if prev is None:
            lead = np.argmax(np.abs(dark))
            dark = dark * (abs(dark[lead]) / dark[lead])
        else:
            inner = np.vdot(prev, dark)
            if abs(inner) > 0:
                dark = dark * (inner.conjugate() / abs(inner))
        darks[k] = dark
        prev = dark
    mid_grid = TimeGrid(grid.t0 + grid.dt / 2, grid.tf - grid.dt / 2,
                        grid.nt - 1)
    return Trajectory(mid_grid, "ket", darks)


def dressed_csv(frame: DressedFrame, trajectory: Trajectory, path):
    """Dressed energies and populations in the trajectory CSV schema.

    One row per midpoint: time, the ordered dressed energies, then the
    populations ``|<phi_n|psi>|^2`` of the grid state at the left edge of
    each step (a half-step offset, adequate for plotting).
    """
    import csv as _csv

    dim = frame.dim
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["time"] + [f"energy_{n}" for n in range(dim)]
                        + [f"pop_{n}" for n in range(dim)])
        for k, t in enumerate(frame.grid.midpoints):
            psi = trajectory.array[k]
            overlaps = np.abs(frame.vectors[k].conj().T @ psi) ** 2
            row = [repr(float(t))]
            row += [repr(float(e)) for e in frame.energies[k]]
            row += [repr(float(p)) for p in overlaps]
            writer.writerow(row)


def landau_zener(grid: TimeGrid, gap: float, rate: float):
    """Linear-sweep avoided-crossing problem ``H = (rate*t sz + gap sx)/2``.

    Returns ``(ControlledHamiltonian, fields)`` on the given grid; the
    asymptotic diabatic transition probability is
    ``exp(-pi gap^2 / (2 rate))``.
    """
    from . import core
    h = ControlledHamiltonian(Operator(np.zeros((2, 2))),
                              [(core.sigma_z(), 0), (core.sigma_x(), 1)])
    fields = [ControlField(grid, 0.5 * rate * grid.midpoints),
              ControlField.constant(grid, 0.5 * gap)]
    return h, fields


def _central_diff(samples: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty_like(samples)
    if len(samples) == 1:
        out[:] = 0.0
        return out
    out[1:-1] = (samples[2:] - samples[:-2]) / (2 * dt)
    out[0] = (samples[1] - samples[0]) / dt
    out[-1] = (samples[-1] - samples[-2]) / dt
    return out

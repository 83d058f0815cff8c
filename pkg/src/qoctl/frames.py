"""Rotating frames, rotating-wave approximations and chirped fields.

Basis convention: index 0 is the ground state, so the driven-qubit drift is
``-(omega0/2) sigma_z`` and the lab-frame interaction is
``-Omega0 S(t) cos(omega_L t + phi(t)) sigma_x``.  With these signs the
frame rotating at the carrier yields the static-detuning form
``-1/2 (Delta_L sigma_z + Omega0 S(t) sigma_x)`` with
``Delta_L = omega0 - omega_L``.

The RWA is never enforced: every constructor reports the validity ratio
``omega0 / Omega0`` and leaves deliberate RWA-breakdown studies to the
caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import core
from .core import ControlledHamiltonian, Operator
from .dynamics import ControlField, TimeGrid

FRAME_CHOICES = ("lab", "drift", "carrier", "instantaneous")


class ChirpResolutionError(ValueError):
    """Grid too coarse for the carrier; carries the required ``nt``."""

    def __init__(self, message: str, required_nt: int):
        super().__init__(message)
        self.required_nt = required_nt


@dataclass(frozen=True)
class TwoLevelDriveSpec:
    """Driven two-level system: transition, carrier, peak Rabi, envelope."""

    omega0: float
    omegaL: float
    rabi0: float
    shape: ControlField
    phase: Optional[ControlField] = None

    def __post_init__(self):
        s = self.shape.samples
        if np.min(s) < -1e-12 or np.max(s) > 1.0 + 1e-12:
            raise ValueError("shape samples must lie in [0, 1]")
        if self.phase is not None and self.phase.grid != self.shape.grid:
            raise ValueError("phase and shape must share a grid")

    @property
    def grid(self) -> TimeGrid:
        return self.shape.grid

    @property
    def detuning(self) -> float:
        """``Delta_L = omega0 - omega_L``."""
        return self.omega0 - self.omegaL

    def phase_samples(self) -> np.ndarray:
        if self.phase is None:
            return np.zeros(self.grid.nt - 1)
        return self.phase.samples

    def lab_hamiltonian(self):
        """Full lab-frame problem: ``(ControlledHamiltonian, fields)``."""
        h = ControlledHamiltonian(-0.5 * self.omega0 * core.sigma_z(),
                                  [(core.sigma_x(), 0)])
        t = self.grid.midpoints
        samples = -self.rabi0 * self.shape.samples * np.cos(
            self.omegaL * t + self.phase_samples())
        return h, [ControlField(self.grid, samples)]


@dataclass(frozen=True)
class ThreeLevelDriveSpec:
    """Ladder-coupled three-level system driven by a two-color field."""

    energies: tuple
    rabi: tuple  # (Omega1(t), Omega2(t)) as ControlFields
    carriers: tuple  # (omega1, omega2)

    def __post_init__(self):
        if len(self.energies) != 3 or len(self.rabi) != 2 \
                or len(self.carriers) != 2:
            raise ValueError("need 3 energies, 2 Rabi fields, 2 carriers")
        if self.rabi[0].grid != self.rabi[1].grid:
            raise ValueError("both Rabi fields must share a grid")

    @property
    def grid(self) -> TimeGrid:
        return self.rabi[0].grid

    @property
    def omega21(self) -> float:
        return self.energies[1] - self.energies[0]

    @property
    def omega32(self) -> float:
        return self.energies[2] - self.energies[1]

    @property
    def detuning_1(self) -> float:
        """One-photon detuning of the first transition."""
        return self.carriers[0] - self.omega21

    @property
    def detuning_2(self) -> float:
        """One-photon detuning of the second transition."""
        return self.carriers[1] - self.omega32

    @property
    def detuning_2p(self) -> float:
        """Two-photon detuning; equals the sum of the one-photon ones."""
        return self.detuning_1 + self.detuning_2

    def lab_hamiltonian(self, dipole_ratio: float = 1.0):
        """Lab-frame problem with both colors coupling both transitions.

        ``Omega_i(t) = mu_i E_i S_i(t)`` fixes each color's envelope, and
        ``dipole_ratio = mu_2 / mu_1`` sets how strongly each color leaks
        into the other transition (the leakage is what the two-photon RWA
        discards).  Returns ``(ControlledHamiltonian, fields)``.
        """
        drift = Operator(np.diag(np.asarray(self.energies, dtype=complex)))
        c12 = Operator([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
        c23 = Operator([[0, 0, 0], [0, 0, 1], [0, 1, 0]])
        h = ControlledHamiltonian(drift, [(c12, 0), (c23, 1)])
        t = self.grid.midpoints
        color1 = self.rabi[0].samples * np.cos(self.carriers[0] * t)
        color2 = self.rabi[1].samples * np.cos(self.carriers[1] * t)
        fields = [
            ControlField(self.grid, color1 + color2 / dipole_ratio),
            ControlField(self.grid, dipole_ratio * color1 + color2),
        ]
        return h, fields


@dataclass(frozen=True)
class RWAResult:
    """RWA Hamiltonian, its control fields and the validity diagnostic."""

    hamiltonian: ControlledHamiltonian
    fields: list
    frame: str
    validity_ratio: float


def rwa_two_level(spec: TwoLevelDriveSpec,
                  frame: str = "carrier") -> RWAResult:
    """Rotating-wave Hamiltonian of a driven qubit in a selectable frame.

    Frames: ``carrier`` (static detuning on the diagonal), ``drift``
    (detuning oscillations on the off-diagonal), ``instantaneous``
    (detuning reduced by the phase derivative), ``lab`` (no approximation,
    for oracle comparisons).  Populations agree between all frames up to
    the RWA error; the ratio ``omega0/Omega0`` is reported, not enforced.
    """
    if frame not in FRAME_CHOICES:
        raise ValueError(f"frame must be one of {FRAME_CHOICES}")
    grid = spec.grid
    ratio = np.inf if spec.rabi0 == 0 else abs(spec.omega0 / spec.rabi0)
    if frame == "lab":
        h, fields = spec.lab_hamiltonian()
        return RWAResult(h, fields, frame, ratio)
    phi = spec.phase_samples()
    envelope = spec.rabi0 * spec.shape.samples
    if frame == "carrier":
        h = ControlledHamiltonian(
            -0.5 * spec.detuning * core.sigma_z(),
            [(core.sigma_x(), 0), (core.sigma_y(), 1)])
        fields = [ControlField(grid, -0.5 * envelope * np.cos(phi)),
                  ControlField(grid, 0.5 * envelope * np.sin(phi))]
        return RWAResult(h, fields, frame, ratio)
    if frame == "drift":
        # Off-diagonal -O0/2 S e^{-i(Delta_L t - phi)} in the (0, 1) slot.
        arg = spec.detuning * grid.midpoints - phi
        h = ControlledHamiltonian(
            Operator(np.zeros((2, 2))),
            [(core.sigma_x(), 0), (core.sigma_y(), 1)])
        fields = [ControlField(grid, -0.5 * envelope * np.cos(arg)),
                  ControlField(grid, -0.5 * envelope * np.sin(arg))]
        return RWAResult(h, fields, frame, ratio)
    # Instantaneous frame: rotate at omega_L t + phi(t); the phase
    # derivative (central differences, one-sided ends) shifts the detuning.
    phi_dot = _midpoint_derivative(phi, grid.dt)
    h = ControlledHamiltonian(
        Operator(np.zeros((2, 2))),
        [(core.sigma_z(), 0), (core.sigma_x(), 1)])
    fields = [ControlField(grid, -0.5 * (spec.detuning - phi_dot)),
              ControlField(grid, -0.5 * envelope)]
    return RWAResult(h, fields, frame, ratio)


def rwa_three_level(spec: ThreeLevelDriveSpec):
    """Two-photon RWA Hamiltonian of the ladder system.

    Returns ``(ControlledHamiltonian, fields)`` with diagonal
    ``(0, Delta_1, Delta_2P)`` and real off-diagonals ``Omega_i(t)/2`` --
    the frame in which the detunings sit on the diagonal.
    """
    drift = Operator(np.diag([0.0, spec.detuning_1, spec.detuning_2p])
                     .astype(complex))
    c12 = Operator([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    c23 = Operator([[0, 0, 0], [0, 0, 1], [0, 1, 0]])
    h = ControlledHamiltonian(drift, [(c12, 0), (c23, 1)])
    fields = [0.5 * spec.rabi[0], 0.5 * spec.rabi[1]]
    return h, fields


def rotating_frame(h: ControlledHamiltonian,
                   controls: Sequence[ControlField], grid: TimeGrid,
                   theta: Callable[[float], Sequence[float]],
                   theta_dot: Optional[Callable] = None) -> list:
    """Transform into the frame of diagonal phases ``U = diag(e^{-i th_k})``.

    Returns the midpoint-sampled sequence of
    ``H'(t) = U^dag H U - diag(theta_dot)``.  The analytic derivative of
    ``theta`` is required; populations in the rotated frame match the
    original ones (checked by the frame-equivalence oracle in the tests).
    """
    if theta_dot is None:
        raise ValueError("rotating_frame needs the analytic derivative "
                         "theta_dot of the frame phases")
    amps = np.stack([f.samples for f in controls], axis=1) if controls \
        else np.zeros((grid.nt - 1, 0))
    if len(controls) != h.n_controls:
        raise ValueError(f"expected {h.n_controls} control fields")
    out = []
    for k, t in enumerate(grid.midpoints):
        ham = h.at(amps[k]).matrix
        th = np.asarray(theta(t), dtype=float)
        td = np.asarray(theta_dot(t), dtype=float)
        if th.shape != (h.dim,) or td.shape != (h.dim,):
            raise ValueError("theta must return one phase per level")
        u = np.exp(-1j * th)
        rotated = (u.conj()[:, None] * ham * u[None, :]) - np.diag(td)
        out.append(Operator(rotated))
    return out


def chirped_field(e0: float, shape: ControlField, omegaL: float,
                  alpha: float) -> ControlField:
    """Lab-frame chirped drive ``E0 S(t) cos(omega_L t + alpha t^2)``.

    The instantaneous frequency is ``omega_L + 2 alpha t``; the grid must
    resolve it with at least 20 samples per period, otherwise a
    :class:`ChirpResolutionError` reports the required ``nt``.
    """
    grid = shape.grid
    t = grid.midpoints
    f_max = float(np.max(np.abs(omegaL + 2.0 * alpha * grid.times)))
    if f_max > 0:
        dt_needed = 2.0 * np.pi / f_max / 20.0
        if grid.dt > dt_needed:
            required = int(np.ceil((grid.tf - grid.t0) / dt_needed)) + 1
            raise ChirpResolutionError(
                f"grid under-resolves the chirped carrier: dt={grid.dt:.3g} "
                f"but need <= {dt_needed:.3g}; use nt >= {required}",
                required_nt=required)
    return ControlField(grid, e0 * shape.samples
                        * np.cos(omegaL * t + alpha * t * t))


def _midpoint_derivative(samples: np.ndarray, dt: float) -> np.ndarray:
    """Central differences with one-sided ends on the midpoint grid."""
    out = np.empty_like(samples)
    if len(samples) == 1:
        out[:] = 0.0
        return out
    out[1:-1] = (samples[2:] - samples[:-2]) / (2 * dt)
    out[0] = (samples[1] - samples[0]) / dt
    out[-1] = (samples[-1] - samples[-2]) / dt
    return out

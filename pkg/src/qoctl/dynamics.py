"""Time grids and piecewise-constant-exponential propagators.

States live on the integer grid ``t_k = t0 + k*dt``; control samples live on
the midpoints ``t_k + dt/2``.  The two staggered grids are what makes the
sequential optimizer update explicit, and midpoint sampling gives
second-order accuracy for time-dependent generators.

Forward propagation applies ``exp(-i H dt)`` (Schroedinger) or the
exponential of the full GKLS generator.  Backward propagation applies the
adjoint step operator while visiting the same midpoint samples, which is the
co-state contract the gradient-based optimizers rely on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .core import (ControlledHamiltonian, DimensionMismatchError, Liouvillian,
                   Operator, QuantumState)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with ``nt`` state points from ``t0`` to ``tf``."""

    t0: float
    tf: float
    nt: int

    def __post_init__(self):
        if self.nt < 2:
            raise ValueError("need at least two state grid points")
        if not self.tf > self.t0:
            raise ValueError("tf must exceed t0")

    @property
    def dt(self) -> float:
        return (self.tf - self.t0) / (self.nt - 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    @property
    def midpoints(self) -> np.ndarray:
        return self.t0 + self.dt * (np.arange(self.nt - 1) + 0.5)


@dataclass(frozen=True)
class ControlField:
    """Real control samples on the midpoint grid of a :class:`TimeGrid`."""

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.grid.nt - 1,):
            raise ValueError(f"field needs {self.grid.nt - 1} midpoint "
                             f"samples, got shape {s.shape}")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def constant(cls, grid: TimeGrid, value: float) -> "ControlField":
        return cls(grid, np.full(grid.nt - 1, float(value)))

    @classmethod
    def from_function(cls, grid: TimeGrid,
                      func: Callable[[float], float]) -> "ControlField":
        return cls(grid, np.array([func(t) for t in grid.midpoints]))

    def __add__(self, other: "ControlField") -> "ControlField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return ControlField(self.grid, self.samples + other.samples)

    def __mul__(self, scalar) -> "ControlField":
        return ControlField(self.grid, self.samples * float(scalar))

    __rmul__ = __mul__


class Trajectory:
    """States on every point of a time grid, stored as one dense array."""

    def __init__(self, grid: TimeGrid, kind: str, array: np.ndarray):
        self.grid = grid
        self.kind = kind
        self.array = array

    def __len__(self) -> int:
        return self.array.shape[0]

    @property
    def dim(self) -> int:
        return self.array.shape[1]

    def state(self, k: int) -> QuantumState:
        return QuantumState._wrap(self.kind, self.array[k])

    @property
    def states(self) -> list:
        return [self.state(k) for k in range(len(self))]

    @property
    def final(self) -> QuantumState:
        return self.state(len(self) - 1)

    def populations(self) -> np.ndarray:
        """(nt, N) array of level populations."""
        if self.kind == "ket":
            return np.abs(self.array) ** 2
        return np.einsum("kii->ki", self.array).real

    def expectations(self, op: Operator) -> np.ndarray:
        if op.dim != self.dim:
            raise DimensionMismatchError(
                f"observable dim {op.dim} != state dim {self.dim}")
        m = op.matrix
        if self.kind == "ket":
            vals = np.einsum("ki,ij,kj->k", self.array.conj(), m, self.array)
        else:
            vals = np.einsum("ij,kji->k", m, self.array)
        return vals.real if op.hermitian else vals

    def max_norm_drift(self) -> float:
        """Largest deviation of norm (ket) or trace (density) from 1."""
        if self.kind == "ket":
            return float(np.max(np.abs(
                np.linalg.norm(self.array, axis=1) - 1.0)))
        traces = np.einsum("kii->k", self.array).real
        return float(np.max(np.abs(traces - 1.0)))

    def min_eigenvalue(self) -> float:
        """Smallest density-matrix eigenvalue over the trajectory."""
        if self.kind == "ket":
            raise ValueError("eigenvalue check applies to density states")
        return float(min(np.linalg.eigvalsh(rho)[0] for rho in self.array))

    def to_csv(self, path, observables: Sequence = ()):
        """Tidy trajectory export: time, populations, named expectations.

        ``observables`` is a sequence of ``(name, Operator)`` pairs.
        """
        pops = self.populations()
        extra = [(name, self.expectations(op)) for name, op in observables]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = (["time"] + [f"pop_{i}" for i in range(self.dim)]
                      + [name for name, _ in extra])
            writer.writerow(header)
            for k, t in enumerate(self.grid.times):
                row = [repr(float(t))]
                row += [repr(float(p)) for p in pops[k]]
                for _, vals in extra:
                    v = vals[k]
                    row.append(repr(float(v.real)) if np.iscomplexobj(vals)
                               else repr(float(v)))
                writer.writerow(row)


def _sample_matrix(controls: Sequence[ControlField], grid: TimeGrid,
                   n_controls: int) -> np.ndarray:
    if len(controls) != n_controls:
        raise ValueError(f"expected {n_controls} control fields, "
                         f"got {len(controls)}")
    for field in controls:
        if field.grid != grid:
            raise ValueError("control field grid differs from the "
                             "propagation grid")
    if n_controls == 0:
        return np.zeros((grid.nt - 1, 0))
    return np.stack([f.samples for f in controls], axis=1)


def _coupling_stack(h: ControlledHamiltonian) -> np.ndarray:
    ops = h.control_operators()
    if not ops:
        return np.zeros((0, h.dim, h.dim), dtype=complex)
    return np.stack([op.matrix for op in ops])


def propagate_ket(h: ControlledHamiltonian, controls: Sequence[ControlField],
                  grid: TimeGrid, psi0: QuantumState,
                  direction: str = "forward") -> Trajectory:
    """Propagate a ket under ``H(t) = H0 + sum_j u_j(t) H_j``.

    Step ``k`` applies ``exp(-i H(t_k + dt/2) dt)``; the backward direction
    applies the adjoint ``exp(+i H dt)`` from ``tf`` down to ``t0`` while
    visiting the same midpoint samples, so a forward/backward round trip is
    the identity to machine precision.
    """
    if not psi0.is_ket:
        raise ValueError("propagate_ket needs a ket initial state")
    if psi0.dim != h.dim:
        raise DimensionMismatchError(f"state dim {psi0.dim} != {h.dim}")
    amps = _sample_matrix(controls, grid, h.n_controls)
    sign = _direction_sign(direction)
    out = _kernels.propagate_pwc_ket(h.drift.matrix, _coupling_stack(h),
                                     amps, sign * grid.dt, psi0.ket,
                                     sign)
    return Trajectory(grid, "ket", out)


def vectorize_density(rho: np.ndarray) -> np.ndarray:
    """Row-major vec; with it ``vec(A rho B) = (A kron B^T) vec(rho)``."""
    return np.asarray(rho, dtype=complex).reshape(-1)


def unvectorize_density(vec: np.ndarray) -> np.ndarray:
    dim = int(round(np.sqrt(vec.shape[0])))
    return vec.reshape(dim, dim)


def hamiltonian_generator(h: np.ndarray) -> np.ndarray:
    """Vectorized ``-i[H, .]``."""
    dim = h.shape[0]
    eye = np.eye(dim)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def commutator_map(h: np.ndarray) -> np.ndarray:
    """Vectorized ``[H, .]``."""
    dim = h.shape[0]
    eye = np.eye(dim)
    return np.kron(h, eye) - np.kron(eye, h.T)


def dissipator_generator(jump_matrices: Iterable[np.ndarray],
                         dim: int) -> np.ndarray:
    """Vectorized GKLS dissipator for the given jump operators."""
    eye = np.eye(dim)
    gen = np.zeros((dim * dim, dim * dim), dtype=complex)
    for L in jump_matrices:
        LdL = L.conj().T @ L
        gen += (np.kron(L, L.conj())
                - 0.5 * np.kron(LdL, eye)
                - 0.5 * np.kron(eye, LdL.T))
    return gen


def gkls_generator_parts(liouvillian: Liouvillian):
    """Drift generator (Hamiltonian drift + dissipator) and control parts."""
    h = liouvillian.hamiltonian
    gen0 = hamiltonian_generator(h.drift.matrix) + dissipator_generator(
        (op.matrix for op in liouvillian.jump_operators), h.dim)
    gens = np.stack([hamiltonian_generator(op.matrix)
                     for op in h.control_operators()]) \
        if h.n_controls else np.zeros((0, h.dim ** 2, h.dim ** 2),
                                      dtype=complex)
    return gen0, gens


def propagate_density(liouvillian: Liouvillian,
                      controls: Sequence[ControlField], grid: TimeGrid,
                      rho0: QuantumState,
                      direction: str = "forward") -> Trajectory:
    """Propagate a density matrix under the full GKLS generator.

    The generator is exponentiated per step in its ``N^2``-dimensional
    vectorized form (Pade scaling and squaring; it is not a normal matrix).
    Forward propagation preserves trace and positivity to round-off; the
    backward direction propagates co-states with the adjoint
    (Heisenberg-picture) generator.
    """
    if not rho0.is_density:
        raise ValueError("propagate_density needs a density initial state")
    h = liouvillian.hamiltonian
    if rho0.dim != h.dim:
        raise DimensionMismatchError(f"state dim {rho0.dim} != {h.dim}")
    amps = _sample_matrix(controls, grid, h.n_controls)
    sign = _direction_sign(direction)
    gen0, gens = gkls_generator_parts(liouvillian)
    if sign < 0:
        gen0 = np.ascontiguousarray(gen0.conj().T)
        gens = np.ascontiguousarray(np.conj(np.transpose(gens, (0, 2, 1))))
    out = _kernels.propagate_pwc_dm(gen0, gens, amps, grid.dt,
                                    vectorize_density(rho0.rho), sign)
    dim = h.dim
    return Trajectory(grid, "density", out.reshape(-1, dim, dim))


def propagate_operator_sequence(mats, grid: TimeGrid, psi0: QuantumState,
                                direction: str = "forward") -> Trajectory:
    """Propagate a ket under an arbitrary midpoint-sampled Hamiltonian.

    ``mats`` is a sequence of ``nt - 1`` Hermitian matrices (or Operators),
    one per midpoint.  Internally the sequence is expanded over the
    orthonormal Hermitian basis so it runs through the same kernels as
    :func:`propagate_ket`.
    """
    from .core import gellmann_basis  # local import avoids cycle at init

    if not psi0.is_ket:
        raise ValueError("propagate_operator_sequence needs a ket")
    stack = np.stack([m.matrix if isinstance(m, Operator) else
                      np.asarray(m, dtype=complex) for m in mats])
    if stack.shape[0] != grid.nt - 1:
        raise ValueError(f"need {grid.nt - 1} matrices, got {stack.shape[0]}")
    dim = stack.shape[1]
    basis = [np.eye(dim, dtype=complex) / np.sqrt(dim)]
    basis.extend(gellmann_basis(dim))
    coups = np.stack(basis)
    # tr(H B) is real for Hermitian H and basis elements
    amps = np.ascontiguousarray(np.einsum("kij,mji->km", stack, coups).real)
    sign = _direction_sign(direction)
    out = _kernels.propagate_pwc_ket(np.zeros((dim, dim), dtype=complex),
                                     coups, amps, sign * grid.dt,
                                     psi0.ket, sign)
    return Trajectory(grid, "ket", out)


def _direction_sign(direction: str) -> int:
    if direction == "forward":
        return 1
    if direction == "backward":
        return -1
    raise ValueError(f"direction must be 'forward' or 'backward', "
                     f"got {direction!r}")


def expectation(op: Operator, state: QuantumState):
    """``<psi|A|psi>`` or ``tr(A rho)``; real when ``op`` is Hermitian."""
    if op.dim != state.dim:
        raise DimensionMismatchError(
            f"operator dim {op.dim} != state dim {state.dim}")
    if state.is_ket:
        val = complex(np.vdot(state.ket, op.matrix @ state.ket))
    else:
        val = complex(np.trace(op.matrix @ state.rho))
    return val.real if op.hermitian else val


def bloch_precession(omega: Callable[[float], Sequence[float]],
                     r0: Sequence[float], grid: TimeGrid) -> np.ndarray:
    """Integrate ``dr/dt = r x Omega(t)`` with midpoint stepping.

    Each step is an exact rotation about ``Omega`` evaluated at the midpoint,
    so ``|r|`` is conserved to round-off.  Returns an ``(nt, 3)`` array.
    """
    out = np.empty((grid.nt, 3))
    out[0] = np.asarray(r0, dtype=float)
    dt = grid.dt
    for k, t in enumerate(grid.midpoints):
        axis = -np.asarray(omega(t), dtype=float)  # r x O = (-O) x r
        out[k + 1] = _rotate(out[k], axis, dt)
    return out


def _rotate(r: np.ndarray, axis: np.ndarray, dt: float) -> np.ndarray:
    speed = np.linalg.norm(axis)
    if speed == 0.0:
        return r.copy()
    n = axis / speed
    angle = speed * dt
    return (r * np.cos(angle) + np.cross(n, r) * np.sin(angle)
            + n * np.dot(n, r) * (1.0 - np.cos(angle)))

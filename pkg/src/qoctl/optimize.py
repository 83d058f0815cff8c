"""Gradient-based (Krotov, GRAPE) and gradient-free pulse optimization.

The sequential method iterates: backward-propagate the co-states from the
final-time cost's boundary condition using the old field; then sweep
forward, updating each midpoint sample by
``du_j(t_k) = S(t_k)/lambda * mean_w Im <chi_w(t_k)|dH/du_j|psi_w(t_k)>``
before stepping the states with the already-updated field.  The staggered
state/control grids make this explicit, and for the shipped (convex)
final-time costs the total cost decreases monotonically.

The concurrent method (GRAPE) computes the exact discrete gradient -- the
Frechet derivative of each step exponential, eigenbasis formula for the
Hermitian case, `scipy.linalg.expm_frechet` for the GKLS generator -- and
applies one shaped update per iteration with a backtracking line search.
No monotonicity guarantee is asserted for it.

Co-state boundary conditions per cost kind (ensemble of W members):

* ket state-to-state (``|<phi|psi>|^2``): ``chi(T) = <phi|psi(T)> phi``
* ket gate (``Re tr``-form):              ``chi(T) = O psi(0) / 2``
* density targets, cost ``tr[(rho - rho_tgt)^2] / 2`` (the
  Hilbert-Schmidt distance, a true distance even for mixed targets):
  ``chi(T) = (rho_tgt - rho(T)) / 2``
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm_frechet
from scipy.optimize import minimize

from . import _kernels, shapes
from .core import ControlledHamiltonian, Liouvillian, QuantumState
from .dynamics import (ControlField, TimeGrid, commutator_map,
                       gkls_generator_parts, vectorize_density)
from .functionals import CostSpec


@dataclass(frozen=True)
class ControlProblem:
    """Dynamics plus cost: everything an optimizer needs.

    ``initial_states`` and the cost's target payload must be matched in
    length (gate costs derive their targets from the gate and the initial
    states).  Open-system dynamics is selected by density initial states;
    ``jump_operators`` may then be non-empty.
    """

    hamiltonian: ControlledHamiltonian
    grid: TimeGrid
    initial_states: tuple
    cost: CostSpec
    jump_operators: tuple = ()

    def __init__(self, hamiltonian, grid, initial_states, cost,
                 jump_operators=()):
        object.__setattr__(self, "hamiltonian", hamiltonian)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "initial_states", tuple(initial_states))
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "jump_operators", tuple(jump_operators))
        kinds = {s.kind for s in self.initial_states}
        if len(kinds) != 1:
            raise ValueError("initial states must share a variant")
        if self.jump_operators and not self.is_open:
            raise ValueError("jump operators require density initial states")

    @property
    def is_open(self) -> bool:
        return self.initial_states[0].is_density

    @property
    def n_states(self) -> int:
        return len(self.initial_states)

    def liouvillian(self) -> Liouvillian:
        return Liouvillian(self.hamiltonian, self.jump_operators)

    def targets(self) -> list:
        """Target states, one per ensemble member."""
        cost = self.cost
        if cost.kind == "state_to_state":
            tgt = cost.target
            targets = list(tgt) if isinstance(tgt, (tuple, list)) else [tgt]
            if len(targets) != self.n_states:
                raise ValueError(f"need {self.n_states} targets, "
                                 f"got {len(targets)}")
            return targets
        if cost.kind == "gate":
            gate = cost.target
            if self.is_open:
                return [QuantumState._wrap(
                    "density", gate.matrix @ s.rho @ gate.matrix.conj().T)
                    for s in self.initial_states]
            return [QuantumState._wrap("ket", gate.matrix @ s.ket)
                    for s in self.initial_states]
        raise ValueError(f"cost kind {self.cost.kind!r} has no per-state "
                         "targets; use the gradient-free optimizer")


@dataclass
class KrotovSettings:
    """Step size, update shape and stopping thresholds.

    ``lambda_`` is the inverse step size of the sequential update;
    ``update_shape`` must vanish at both ends (fields stay pinned at
    switch-on/off) and defaults to a flat-top with 5% sine-squared ramps.
    ``stall_shrink``, if set, multiplies ``lambda_`` by that factor
    whenever an iteration improves by less than ``dj_threshold`` without
    having converged.  ``grape_step``/``line_search`` only affect the
    concurrent method.
    """

    lambda_: float = 1.0
    update_shape: Optional[ControlField] = None
    max_iters: int = 100
    j_threshold: float = 0.0
    dj_threshold: float = 0.0
    stall_shrink: Optional[float] = None
    grape_step: float = 1.0
    line_search: bool = True

    def shape_for(self, grid: TimeGrid) -> np.ndarray:
        if self.update_shape is None:
            s = shapes.sin2_ramp(grid, 1.0, 0.05).samples
        else:
            if self.update_shape.grid != grid:
                raise ValueError("update shape grid mismatch")
            s = self.update_shape.samples
        if abs(s[0]) > 1e-15 or abs(s[-1]) > 1e-15:
            raise ValueError("update shape must vanish at both ends")
        if np.min(s) < 0 or np.max(s) > 1 + 1e-12:
            raise ValueError("update shape must lie in [0, 1]")
        return s


@dataclass(frozen=True)
class IterationEntry:
    index: int
    j_tf: float
    running_cost: float
    wall_ms: float
    phase: str = "krotov"


@dataclass
class OptimizationRecord:
    """Per-iteration history, final fields and the convergence verdict."""

    iterations: list
    final_fields: list
    converged_reason: str
    method: str

    @property
    def j_history(self) -> np.ndarray:
        return np.array([e.j_tf for e in self.iterations])

    @property
    def final_j(self) -> float:
        return self.iterations[-1].j_tf

    def monotonic(self, slack: float = 1e-12) -> bool:
        j = self.j_history
        return bool(np.all(np.diff(j) <= slack))


def fields_to_csv(fields: Sequence[ControlField], path):
    """Midpoint time in column 0, one column per control."""
    grid = fields[0].grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time"] + [f"u_{j}" for j in range(len(fields))])
        for k, t in enumerate(grid.midpoints):
            writer.writerow([repr(float(t))]
                            + [repr(float(f.samples[k])) for f in fields])


def _log(stream, entry: IterationEntry):
    if stream is not None:
        stream.write(json.dumps({"iter": entry.index, "J_tf": entry.j_tf,
                                 "running_cost": entry.running_cost,
                                 "wall_ms": entry.wall_ms}) + "\n")


class _KetEngine:
    """Closed-system propagation plumbing shared by Krotov and GRAPE."""

    def __init__(self, problem: ControlProblem):
        self.problem = problem
        h = problem.hamiltonian
        self.drift = h.drift.matrix
        self.coups = np.stack([op.matrix for op in h.control_operators()])
        self.psi0 = np.stack([s.ket for s in problem.initial_states])
        self.grid = problem.grid
        kind = problem.cost.kind
        if kind == "state_to_state":
            self.tgt = np.stack([t.ket for t in problem.targets()])
        elif kind == "gate":
            self.tgt = np.stack([t.ket for t in problem.targets()])
        else:
            raise ValueError(f"gradient methods do not support cost kind "
                             f"{kind!r}")

    def forward_all(self, amps):
        out = np.empty((self.grid.nt, len(self.psi0), self.drift.shape[0]),
                       dtype=complex)
        for w, psi in enumerate(self.psi0):
            out[:, w, :] = _kernels.propagate_pwc_ket(
                self.drift, self.coups, amps, self.grid.dt, psi, 1)
        return out

    def backward_all(self, amps, chi_final):
        out = np.empty((self.grid.nt, len(chi_final), self.drift.shape[0]),
                       dtype=complex)
        for w, chi in enumerate(chi_final):
            out[:, w, :] = _kernels.propagate_pwc_ket(
                self.drift, self.coups, amps, -self.grid.dt, chi, -1)
        return out

    def cost_value(self, finals) -> float:
        if self.problem.cost.kind == "state_to_state":
            overlaps = np.einsum("wi,wi->w", self.tgt.conj(), finals)
            return float(1.0 - np.mean(np.abs(overlaps) ** 2))
        overlaps = np.einsum("wi,wi->w", self.tgt.conj(), finals)
        return float(1.0 - np.mean(overlaps.real))

    def chi_boundary(self, finals):
        if self.problem.cost.kind == "state_to_state":
            overlaps = np.einsum("wi,wi->w", self.tgt.conj(), finals)
            return overlaps[:, None] * self.tgt
        return 0.5 * self.tgt

    def krotov_forward(self, amps, chi, gain):
        return _kernels.krotov_forward_ket(self.drift, self.coups, amps,
                                           chi, self.psi0, self.grid.dt,
                                           gain)

    def gradient(self, amps):
        """Exact discrete gradient of the cost w.r.t. every sample."""
        fwd = self.forward_all(amps)
        chi = self.backward_all(amps, self.chi_boundary(fwd[-1]))
        dt = self.grid.dt
        n_steps, n_ctrl = amps.shape
        grad = np.zeros_like(amps)
        for k in range(n_steps):
            ham = self.drift + np.tensordot(amps[k], self.coups, axes=1)
            w, v = np.linalg.eigh(ham)
            phases = np.exp(-1j * dt * w)
            denom = w[:, None] - w[None, :]
            ratio = np.where(
                np.abs(denom) > 1e-14,
                (phases[:, None] - phases[None, :])
                / np.where(np.abs(denom) > 1e-14, denom, 1.0),
                -1j * dt * phases[:, None])
            for j in range(n_ctrl):
                inner = v.conj().T @ self.coups[j] @ v
                dstep = v @ (ratio * inner) @ v.conj().T
                acc = 0.0
                for wi in range(fwd.shape[1]):
                    acc += np.vdot(chi[k + 1, wi],
                                   dstep @ fwd[k, wi]).real
                grad[k, j] = -2.0 * acc / fwd.shape[1]
        return grad


class _DensityEngine:
    """Open-system (vectorized GKLS) counterpart of the ket engine."""

    def __init__(self, problem: ControlProblem):
        self.problem = problem
        self.grid = problem.grid
        gen0, gens = gkls_generator_parts(problem.liouvillian())
        self.gen0 = gen0
        self.gens = gens
        ops = problem.hamiltonian.control_operators()
        self.comms = np.stack([commutator_map(op.matrix) for op in ops])
        self.rho0 = np.stack([vectorize_density(s.rho)
                              for s in problem.initial_states])
        tgt = problem.targets()
        self.tgt = np.stack([vectorize_density(t.rho) for t in tgt])

    def forward_all(self, amps):
        dim = self.gen0.shape[0]
        out = np.empty((self.grid.nt, len(self.rho0), dim), dtype=complex)
        for w, rho in enumerate(self.rho0):
            out[:, w, :] = _kernels.propagate_pwc_dm(
                self.gen0, self.gens, amps, self.grid.dt, rho, 1)
        return out

    def backward_all(self, amps, chi_final):
        gen0_adj = np.ascontiguousarray(self.gen0.conj().T)
        gens_adj = np.ascontiguousarray(
            np.conj(np.transpose(self.gens, (0, 2, 1))))
        dim = self.gen0.shape[0]
        out = np.empty((self.grid.nt, len(chi_final), dim), dtype=complex)
        for w, chi in enumerate(chi_final):
            out[:, w, :] = _kernels.propagate_pwc_dm(
                gen0_adj, gens_adj, amps, self.grid.dt, chi, -1)
        return out

    def cost_value(self, finals) -> float:
        diff = finals - self.tgt
        dists = 0.5 * np.einsum("wi,wi->w", diff.conj(), diff).real
        return float(np.mean(dists))

    def chi_boundary(self, finals):
        return 0.5 * (self.tgt - finals)

    def krotov_forward(self, amps, chi, gain):
        return _kernels.krotov_forward_dm(self.gen0, self.gens, self.comms,
                                          amps, chi, self.rho0,
                                          self.grid.dt, gain)

    def gradient(self, amps):
        fwd = self.forward_all(amps)
        chi = self.backward_all(amps, self.chi_boundary(fwd[-1]))
        dt = self.grid.dt
        n_steps, n_ctrl = amps.shape
        grad = np.zeros_like(amps)
        for k in range(n_steps):
            gen = self.gen0 + np.tensordot(amps[k], self.gens, axes=1)
            for j in range(n_ctrl):
                _, dstep = expm_frechet(gen * dt, self.gens[j] * dt,
                                        compute_expm=True)
                acc = 0.0
                for wi in range(fwd.shape[1]):
                    acc += np.vdot(chi[k + 1, wi],
                                   dstep @ fwd[k, wi]).real
                grad[k, j] = -2.0 * acc / fwd.shape[1]
        return grad


def _engine(problem: ControlProblem):
    return _DensityEngine(problem) if problem.is_open \
        else _KetEngine(problem)


def _amps_matrix(problem: ControlProblem,
                 guess: Sequence[ControlField]) -> np.ndarray:
    n = problem.hamiltonian.n_controls
    if len(guess) != n:
        raise ValueError(f"expected {n} guess fields, got {len(guess)}")
    for f in guess:
        if f.grid != problem.grid:
            raise ValueError("guess field grid mismatch")
    return np.stack([f.samples for f in guess], axis=1).copy()


def _fields(problem: ControlProblem, amps: np.ndarray) -> list:
    return [ControlField(problem.grid, amps[:, j])
            for j in range(amps.shape[1])]


def krotov_state_to_state(problem: ControlProblem,
                          guess: Sequence[ControlField],
                          settings: KrotovSettings,
                          log_stream=None) -> OptimizationRecord:
    """Sequential optimization of a single state-to-state transfer."""
    if problem.cost.kind != "state_to_state":
        raise ValueError("krotov_state_to_state needs a state_to_state cost")
    return krotov_ensemble(problem, guess, settings, log_stream=log_stream)


def krotov_ensemble(problem: ControlProblem, guess: Sequence[ControlField],
                    settings: KrotovSettings,
                    log_stream=None) -> OptimizationRecord:
    """Sequential optimization over an ensemble of state pairs or a gate.

    The per-midpoint update averages ``Im <chi_w|dH/du|psi_w>`` over the
    ensemble; gate costs propagate the ``N`` logical states (2N
    propagations per iteration), open-system costs the density matrices.
    """
    engine = _engine(problem)
    amps = _amps_matrix(problem, guess)
    gain = settings.shape_for(problem.grid) / settings.lambda_
    dt = problem.grid.dt
    tf_span = problem.grid.tf - problem.grid.t0
    lam = settings.lambda_

    fwd = engine.forward_all(amps)
    j_tf = engine.cost_value(fwd[-1])
    if not np.isfinite(j_tf):
        raise FloatingPointError("non-finite functional for the guess field")
    entries = [IterationEntry(0, j_tf, 0.0, 0.0)]
    _log(log_stream, entries[0])
    reason = "max_iters"
    rejects = 0
    if j_tf <= settings.j_threshold:
        reason = "j_threshold"
    else:
        for it in range(1, settings.max_iters + 1):
            t_start = time.perf_counter()
            chi = engine.backward_all(amps, engine.chi_boundary(fwd[-1]))
            old = amps.copy()
            trial = engine.krotov_forward(amps, chi, gain)
            j_new = engine.cost_value(trial[-1])
            if not np.isfinite(j_new):
                raise FloatingPointError(f"non-finite functional at "
                                         f"iteration {it}")
            if j_new > j_tf:
                # Discrete step overshot the monotonicity bound: reject,
                # halve the step (double lambda) and retry.  The record
                # stays non-increasing because the field is unchanged.
                amps[:] = old
                lam *= 2.0
                gain = settings.shape_for(problem.grid) / lam
                rejects += 1
                entry = IterationEntry(
                    it, j_tf, 0.0, (time.perf_counter() - t_start) * 1e3)
                entries.append(entry)
                _log(log_stream, entry)
                if rejects > 8:
                    reason = "stalled"
                    break
                continue
            fwd = trial
            delta = amps - old
            shape = gain * lam
            with np.errstate(invalid="ignore", divide="ignore"):
                penalty = np.where(shape[:, None] > 0,
                                   delta ** 2
                                   / np.where(shape[:, None] > 0,
                                              shape[:, None], 1.0), 0.0)
            running = float(lam * np.sum(penalty) * dt / tf_span)
            wall = (time.perf_counter() - t_start) * 1e3
            entry = IterationEntry(it, j_new, running, wall)
            entries.append(entry)
            _log(log_stream, entry)
            improvement = j_tf - j_new
            j_tf = j_new
            if j_tf <= settings.j_threshold:
                reason = "j_threshold"
                break
            if settings.dj_threshold > 0 and \
                    improvement < settings.dj_threshold:
                if settings.stall_shrink is not None and rejects == 0:
                    lam = lam * settings.stall_shrink
                    gain = settings.shape_for(problem.grid) / lam
                    continue
                reason = "dj_threshold"
                break
    return OptimizationRecord(entries, _fields(problem, amps), reason,
                              method="krotov")


def grape_concurrent(problem: ControlProblem, guess: Sequence[ControlField],
                     settings: KrotovSettings,
                     log_stream=None) -> OptimizationRecord:
    """Concurrent gradient update with optional backtracking line search.

    The whole gradient is computed with frozen fields, then applied at
    once through the update shape.  Fast near an optimum; no monotonicity
    guarantee.
    """
    engine = _engine(problem)
    amps = _amps_matrix(problem, guess)
    shape = settings.shape_for(problem.grid)
    j_tf = engine.cost_value(engine.forward_all(amps)[-1])
    entries = [IterationEntry(0, j_tf, 0.0, 0.0, phase="grape")]
    _log(log_stream, entries[0])
    reason = "max_iters"
    for it in range(1, settings.max_iters + 1):
        t_start = time.perf_counter()
        grad = engine.gradient(amps)
        if np.max(np.abs(grad)) == 0.0:
            reason = "dj_threshold"
            break
        step = settings.grape_step
        accepted = False
        for _ in range(25 if settings.line_search else 1):
            trial = amps - step * shape[:, None] * grad
            j_trial = engine.cost_value(engine.forward_all(trial)[-1])
            if (j_trial < j_tf) or not settings.line_search:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            reason = "dj_threshold"
            break
        improvement = j_tf - j_trial
        amps, j_tf = trial, j_trial
        wall = (time.perf_counter() - t_start) * 1e3
        entry = IterationEntry(it, j_tf, 0.0, wall, phase="grape")
        entries.append(entry)
        _log(log_stream, entry)
        if j_tf <= settings.j_threshold:
            reason = "j_threshold"
            break
        if settings.dj_threshold > 0 and improvement < settings.dj_threshold:
            reason = "dj_threshold"
            break
    return OptimizationRecord(entries, _fields(problem, amps), reason,
                              method="grape")


def grape_gradient(problem: ControlProblem,
                   fields: Sequence[ControlField]) -> np.ndarray:
    """Exact discrete gradient ``dJ/du_j[k]``; shape ``(nt-1, M)``.

    Exposed for the finite-difference cross-check; the concurrent
    optimizer consumes it internally.
    """
    return _engine(problem).gradient(_amps_matrix(problem, fields))


def evaluate_cost(problem: ControlProblem,
                  fields: Sequence[ControlField]) -> float:
    """Final-time cost of the given fields (no optimization)."""
    engine = _engine(problem)
    return engine.cost_value(engine.forward_all(
        _amps_matrix(problem, fields))[-1])


@dataclass
class Parametrization:
    """Low-dimensional field parametrization for the gradient-free search.

    ``basis="fourier"``: per control, ``n_terms`` sine coefficients
    (vanishing at both grid ends).  ``basis="gaussian"``: per control,
    ``n_terms`` pulses with ``(amplitude, center, width)`` triples.
    ``bounds`` has one ``(lo, hi)`` pair per coefficient; rendered fields
    are the baseline plus the parametrized part.  Practical limit is a
    couple of dozen coefficients -- beyond that the simplex search stalls.
    """

    basis: str
    n_controls: int
    n_terms: int
    bounds: list
    coefficients: np.ndarray = None
    baseline: Optional[list] = None

    def __post_init__(self):
        if self.basis not in ("fourier", "gaussian"):
            raise ValueError("basis must be 'fourier' or 'gaussian'")
        per = self.n_terms if self.basis == "fourier" else 3 * self.n_terms
        self._per_control = per
        n = per * self.n_controls
        if self.coefficients is None:
            self.coefficients = np.zeros(n)
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (n,):
            raise ValueError(f"need {n} coefficients, "
                             f"got {self.coefficients.shape}")
        if len(self.bounds) != n:
            raise ValueError(f"need {n} bounds pairs, got {len(self.bounds)}")

    @property
    def n_params(self) -> int:
        return len(self.coefficients)

    def render(self, grid: TimeGrid,
               coefficients: Optional[np.ndarray] = None) -> list:
        coeffs = self.coefficients if coefficients is None \
            else np.asarray(coefficients, dtype=float)
        coeffs = np.clip(coeffs, [b[0] for b in self.bounds],
                         [b[1] for b in self.bounds])
        t = grid.midpoints
        span = grid.tf - grid.t0
        fields = []
        for c in range(self.n_controls):
            part = coeffs[c * self._per_control:(c + 1) * self._per_control]
            if self.basis == "fourier":
                samples = np.zeros_like(t)
                for m, a in enumerate(part):
                    samples += a * np.sin((m + 1) * np.pi
                                          * (t - grid.t0) / span)
            else:
                samples = np.zeros_like(t)
                for m in range(self.n_terms):
                    amp, center, width = part[3 * m:3 * m + 3]
                    width = max(width, 1e-6 * span)
                    samples += amp * np.exp(-0.5 * ((t - center)
                                                    / width) ** 2)
            if self.baseline is not None:
                samples = samples + self.baseline[c].samples
            fields.append(ControlField(grid, samples))
        return fields


def gradient_free_search(problem: ControlProblem,
                         parametrization: Parametrization,
                         budget: int,
                         cost_function: Optional[Callable] = None,
                         log_stream=None) -> OptimizationRecord:
    """Derivative-free simplex search over the field coefficients.

    ``cost_function(fields) -> float`` overrides the problem's final-time
    cost (this is how non-propagation costs like the Weyl-chamber distance
    are searched).  When the budget is exhausted the best-so-far fields
    are returned with ``converged_reason="budget_exhausted"``.
    """
    grid = problem.grid
    if cost_function is None:
        cost_function = lambda fields: evaluate_cost(problem, fields)  # noqa: E731

    history = []

    def objective(x):
        t_start = time.perf_counter()
        val = cost_function(parametrization.render(grid, x))
        wall = (time.perf_counter() - t_start) * 1e3
        entry = IterationEntry(len(history), float(val), 0.0, wall,
                               phase="gradient_free")
        history.append((entry, np.array(x)))
        _log(log_stream, entry)
        return val

    if parametrization.n_params == 0 or budget <= 0:
        fields = parametrization.render(grid)
        j0 = float(cost_function(fields))
        entry = IterationEntry(0, j0, 0.0, 0.0, phase="gradient_free")
        return OptimizationRecord([entry], fields, "no_parameters",
                                  method="gradient_free")

    res = minimize(objective, parametrization.coefficients,
                   method="Nelder-Mead", bounds=parametrization.bounds,
                   options={"maxfev": budget, "xatol": 1e-10,
                            "fatol": 1e-12})
    best_entry, best_x = min(history, key=lambda h: h[0].j_tf)
    reason = "converged" if res.success else "budget_exhausted"
    entries = [h[0] for h in history]
    return OptimizationRecord(entries, parametrization.render(grid, best_x),
                              reason, method="gradient_free")


def hybrid_optimize(problem: ControlProblem,
                    parametrization: Parametrization,
                    settings: KrotovSettings, budget: int,
                    cost_function: Optional[Callable] = None,
                    log_stream=None) -> OptimizationRecord:
    """Gradient-free pre-optimization feeding the sequential method.

    With a zero budget (or an empty parametrization) it reduces to plain
    Krotov from the baseline guess; with ``max_iters == 0`` it returns the
    gradient-free result; with both disabled it returns the guess.
    """
    pre = gradient_free_search(problem, parametrization, budget,
                               cost_function=cost_function,
                               log_stream=log_stream)
    if settings.max_iters <= 0:
        return pre
    polish = krotov_ensemble(problem, pre.final_fields, settings,
                             log_stream=log_stream)
    offset = len(pre.iterations)
    merged = pre.iterations + [
        IterationEntry(offset + e.index, e.j_tf, e.running_cost, e.wall_ms,
                       phase=e.phase) for e in polish.iterations]
    return OptimizationRecord(merged, polish.final_fields,
                              polish.converged_reason, method="hybrid")

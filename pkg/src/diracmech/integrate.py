"""Fixed-step classical Runge-Kutta integration of the reduced dynamics,
with transverse momenta reconstructed at recording time and diagnostic
observables stored per sample.

One trajectory is strictly sequential; identical inputs give
bit-identical output.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebroid import PhaseState
from .dirac import _reduced_rates, complete_state, solve_consistency
from .errors import EngineError, TruncatedTrajectoryError
from .numcore import grad, solve_linear
from .systems import SystemSpec

__all__ = ["Trajectory", "rk4_step", "simulate", "observables"]

OBSERVABLE_NAMES = ("H", "consistency_residual_inf", "admissibility_residual_inf")


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of one integration run."""

    times: np.ndarray
    states: tuple            # reduced PhaseState per sample
    eta_alpha: np.ndarray    # reconstructed transverse momenta per sample
    observables: dict = field(default_factory=dict)

    def reduced_array(self) -> np.ndarray:
        """Samples as an (n, m + k) array, base coordinates first."""
        return np.array([s.q + s.eta for s in self.states])

    def __len__(self) -> int:
        return len(self.states)


def _rk4_increment(f: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    """Four-stage increment (dt/6)(k1 + 2 k2 + 2 k3 + k4) at a flat state.

    Failures are re-raised with the stage index attached.
    """
    stage = 0
    try:
        k1 = f(y)
        stage = 1
        k2 = f(y + (0.5 * dt) * k1)
        stage = 2
        k3 = f(y + (0.5 * dt) * k2)
        stage = 3
        k4 = f(y + dt * k3)
    except EngineError as err:
        err.stage_index = stage
        raise
    return (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _compensated_add(y: np.ndarray, comp: np.ndarray, inc: np.ndarray):
    """One Neumaier-compensated update of the accumulated state.

    Long fixed-step runs otherwise accumulate a per-step rounding bias
    linear in the step count, which would drown the O(dt^4) truncation
    error of interest.
    """
    delta = inc + comp
    new = y + delta
    big = np.abs(y) >= np.abs(delta)
    comp = np.where(big, (y - new) + delta, (delta - new) + y)
    return new, comp


def _field_on_vector(spec: SystemSpec, warm_start):
    """The reduced field as a map on flat (q, eta_a) vectors.

    ``warm_start`` is a one-element list holding the Newton guess for the
    transverse solve; stages within one step share it.
    """
    dirac = spec.dirac
    h = spec.hamiltonian
    solution = spec.consistency
    m = spec.m

    def f(y):
        q = y[:m]
        eta_a = y[m:]
        eta_alpha = solve_consistency(
            dirac, h, q, eta_a, guess=warm_start[0], solution=solution
        )
        g = grad(h, (*q, *eta_a, *eta_alpha))
        qdot, etadot = _reduced_rates(dirac, g, q, np.concatenate([eta_a, eta_alpha]))
        return np.concatenate([qdot, etadot])

    return f


def rk4_step(f: Callable, s: PhaseState, dt: float) -> PhaseState:
    """Advance a reduced state by one step of the classical scheme.

    ``f`` maps a reduced PhaseState to (qdot, etadot_a).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    m = len(s.q)

    def on_vec(y):
        qdot, etadot = f(PhaseState(q=y[:m], eta=y[m:], full=False))
        return np.concatenate([np.asarray(qdot, float), np.asarray(etadot, float)])

    y = np.array(s.q + s.eta)
    y = y + _rk4_increment(on_vec, y, dt)
    return PhaseState(q=y[:m], eta=y[m:], full=False)


def _sample(spec: SystemSpec, rs: PhaseState, guess=None):
    """(observables, eta_alpha) at one reduced state."""
    full, eta_alpha = complete_state(
        spec.dirac, spec.hamiltonian, rs, guess=guess, solution=spec.consistency
    )
    g = grad(spec.hamiltonian, full.q + full.eta)
    res_cons = g[spec.m + spec.k :]
    qdot, _ = _reduced_rates(spec.dirac, g, full.q, np.asarray(full.eta))
    obs = {
        "H": spec.hamiltonian.value(full.q + full.eta),
        "consistency_residual_inf": float(np.max(np.abs(res_cons))) if res_cons.size else 0.0,
        "admissibility_residual_inf": _admissibility_residual(spec, full.q, qdot),
    }
    return obs, eta_alpha


def observables(spec: SystemSpec, rs: PhaseState, guess=None) -> dict:
    """Energy plus the two residual diagnostics at one reduced state."""
    return _sample(spec, rs, guess=guess)[0]


def _admissibility_residual(spec: SystemSpec, q, qdot) -> float:
    """Largest transverse coefficient of qdot in the frame, or (when the
    anchor is not square) the distance of qdot from the admissible image."""
    rho = spec.dirac.alg.anchor_array(q)
    k = spec.k
    if rho.shape[0] == rho.shape[1]:
        z = solve_linear(rho, qdot)
        trans = z[k:]
        return float(np.max(np.abs(trans))) if trans.size else 0.0
    adm = rho[:, :k]
    z, *_ = np.linalg.lstsq(adm, qdot, rcond=None)
    return float(np.max(np.abs(qdot - adm @ z)))


def simulate(
    spec: SystemSpec,
    ic: PhaseState,
    t_end: float,
    dt: float = 1e-3,
    stride: int = 10,
) -> Trajectory:
    """Integrate from ``ic`` to ``t_end`` recording every stride-th step.

    Transverse momenta and observables are evaluated at each recorded
    sample; the Newton warm start for generic consistency solves is the
    previous step's solution.  A failure mid-run raises
    TruncatedTrajectoryError carrying the partial trajectory.
    """
    if t_end <= 0.0 or dt <= 0.0 or stride < 1:
        raise ValueError("t_end and dt must be positive, stride at least 1")
    if ic.full or len(ic.q) != spec.m or len(ic.eta) != spec.k:
        raise ValueError(
            f"initial condition must be reduced with shapes ({spec.m}, {spec.k})"
        )
    n_steps = math.ceil(t_end / dt)
    warm_start = [None]
    f = _field_on_vector(spec, warm_start)
    m = spec.m

    times = []
    states = []
    eta_rows = []
    obs_rows = {name: [] for name in OBSERVABLE_NAMES}

    def record(step_index, y):
        rs = PhaseState(q=y[:m], eta=y[m:], full=False)
        obs, eta_alpha = _sample(spec, rs, guess=warm_start[0])
        times.append(step_index * dt)
        states.append(rs)
        eta_rows.append(eta_alpha)
        for name in OBSERVABLE_NAMES:
            obs_rows[name].append(obs[name])

    def partial() -> Trajectory:
        return Trajectory(
            times=np.array(times),
            states=tuple(states),
            eta_alpha=np.array(eta_rows) if eta_rows else np.zeros((0, spec.n_fiber - spec.k)),
            observables={name: np.array(vals) for name, vals in obs_rows.items()},
        )

    y = np.array(ic.q + ic.eta)
    comp = np.zeros_like(y)
    step = 0
    try:
        record(0, y)
        for step in range(1, n_steps + 1):
            y, comp = _compensated_add(y, comp, _rk4_increment(f, y, dt))
            warm_start[0] = _warm_start_update(spec, y, warm_start[0])
            if step % stride == 0:
                record(step, y)
    except EngineError as err:
        failed_time = step * dt
        raise TruncatedTrajectoryError(
            f"integration of {spec.name!r} failed near t={failed_time:.6g}: {err}",
            partial=partial(),
            failed_time=failed_time,
        ) from err
    return partial()


def _warm_start_update(spec: SystemSpec, y, previous):
    if spec.consistency.kind != "newton":
        return previous
    rs = PhaseState(q=y[: spec.m], eta=y[spec.m :], full=False)
    _, eta_alpha = complete_state(
        spec.dirac, spec.hamiltonian, rs, guess=previous, solution=spec.consistency
    )
    return eta_alpha

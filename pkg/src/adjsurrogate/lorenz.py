"""Lorenz-63 dynamics, RK4 propagation, and exact discrete derivatives.

The RK4 loops are compiled with numba; they are the inner kernel of every
experiment (ground truth, training data, and the Exact 4D-Var model).
The tangent linear map is obtained by pushing the 3x3 identity through every
RK4 stage, so it is the exact Jacobian of the discrete map rather than a
discretisation of the continuous variational equation.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import NonFiniteState
from .smallmat import RngStream, SpdFactor, as_vector, cholesky, sample_gaussian

# Reference initial condition of the ground-truth run.
TRUTH_X0 = np.array([-10.0375, -4.3845, 34.6514])


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0


@dataclass(frozen=True)
class IntegratorSpec:
    """``interval`` is the observation spacing; it is split into ``substeps`` RK4 steps."""

    interval: float = 0.12
    substeps: int = 50

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def dt(self) -> float:
        return self.interval / self.substeps


@numba.njit(cache=True)
def _f(x, s, r, b, out):
    out[0] = s * (x[1] - x[0])
    out[1] = x[0] * (r - x[2]) - x[1]
    out[2] = x[0] * x[1] - b * x[2]


@numba.njit(cache=True)
def _jac(x, s, r, b, out):
    out[0, 0] = -s
    out[0, 1] = s
    out[0, 2] = 0.0
    out[1, 0] = r - x[2]
    out[1, 1] = -1.0
    out[1, 2] = -x[0]
    out[2, 0] = x[1]
    out[2, 1] = x[0]
    out[2, 2] = -b


@numba.njit(cache=True)
def _rk4(x0, s, r, b, dt, n):
    x = x0.copy()
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    tmp = np.empty(3)
    for _ in range(n):
        _f(x, s, r, b, k1)
        for i in range(3):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        _f(tmp, s, r, b, k2)
        for i in range(3):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        _f(tmp, s, r, b, k3)
        for i in range(3):
            tmp[i] = x[i] + dt * k3[i]
        _f(tmp, s, r, b, k4)
        ok = True
        for i in range(3):
            x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not (np.isfinite(x[i]) and np.isfinite(k4[i]) and np.isfinite(k3[i])):
                ok = False
        if not ok:
            return x, False
    return x, True


@numba.njit(cache=True)
def _stage_tlm(J, P, K_prev, c, out):
    # out = J @ (P + c * K_prev)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += J[i, k] * (P[k, j] + c * K_prev[k, j])
            out[i, j] = acc


@numba.njit(cache=True)
def _rk4_tlm(x0, s, r, b, dt, n):
    x = x0.copy()
    P = np.eye(3)
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    tmp = np.empty(3)
    J = np.empty((3, 3))
    K1 = np.empty((3, 3))
    K2 = np.empty((3, 3))
    K3 = np.empty((3, 3))
    K4 = np.empty((3, 3))
    zero = np.zeros((3, 3))
    for _ in range(n):
        _f(x, s, r, b, k1)
        _jac(x, s, r, b, J)
        _stage_tlm(J, P, zero, 0.0, K1)

        for i in range(3):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        _f(tmp, s, r, b, k2)
        _jac(tmp, s, r, b, J)
        _stage_tlm(J, P, K1, 0.5 * dt, K2)

        for i in range(3):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        _f(tmp, s, r, b, k3)
        _jac(tmp, s, r, b, J)
        _stage_tlm(J, P, K2, 0.5 * dt, K3)

        for i in range(3):
            tmp[i] = x[i] + dt * k3[i]
        _f(tmp, s, r, b, k4)
        _jac(tmp, s, r, b, J)
        _stage_tlm(J, P, K3, dt, K4)

        ok = True
        for i in range(3):
            x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(x[i]):
                ok = False
            for j in range(3):
                P[i, j] = P[i, j] + dt / 6.0 * (K1[i, j] + 2.0 * K2[i, j] + 2.0 * K3[i, j] + K4[i, j])
                if not np.isfinite(P[i, j]):
                    ok = False
        if not ok:
            return x, P, False
    return x, P, True


@numba.njit(cache=True)
def _trajectory(x0, s, r, b, dt, n, nsteps):
    out = np.empty((nsteps + 1, 3))
    out[0] = x0
    x = x0.copy()
    for k in range(nsteps):
        x, ok = _rk4(x, s, r, b, dt, n)
        if not ok:
            return out[: k + 1], False
        out[k + 1] = x
    return out, True


@numba.njit(cache=True)
def _trajectory_tlm(x0, s, r, b, dt, n, nsteps):
    states = np.empty((nsteps + 1, 3))
    tlms = np.empty((nsteps, 3, 3))
    states[0] = x0
    x = x0.copy()
    for k in range(nsteps):
        x, P, ok = _rk4_tlm(x, s, r, b, dt, n)
        if not ok:
            return states[: k + 1], tlms[:k], False
        states[k + 1] = x
        tlms[k] = P
    return states, tlms, True


def _state(x) -> np.ndarray:
    return as_vector(x, 3, name="state")


def rhs(p: LorenzParams, x) -> np.ndarray:
    x = _state(x)
    out = np.empty(3)
    _f(x, p.sigma, p.rho, p.beta, out)
    return out


def rhs_jacobian(p: LorenzParams, x) -> np.ndarray:
    x = _state(x)
    out = np.empty((3, 3))
    _jac(x, p.sigma, p.rho, p.beta, out)
    return out


def propagate(p: LorenzParams, spec: IntegratorSpec, x) -> np.ndarray:
    """Advance ``x`` by one interval with ``spec.substeps`` RK4 steps."""
    x = _state(x)
    y, ok = _rk4(x, p.sigma, p.rho, p.beta, spec.dt, spec.substeps)
    if not ok:
        raise NonFiniteState(f"RK4 blew up starting from {x.tolist()}")
    return y


def tangent_linear(p: LorenzParams, spec: IntegratorSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(propagate(x), M)`` with M the exact Jacobian of the discrete map."""
    x = _state(x)
    y, M, ok = _rk4_tlm(x, p.sigma, p.rho, p.beta, spec.dt, spec.substeps)
    if not ok:
        raise NonFiniteState(f"RK4 tangent linear model blew up starting from {x.tolist()}")
    return y, M


def adjoint_vec(p: LorenzParams, spec: IntegratorSpec, x, v) -> np.ndarray:
    """M^T v for the discrete RK4 map at ``x``."""
    v = as_vector(v, 3, name="v")
    _, M = tangent_linear(p, spec, x)
    return M.T @ v


@dataclass
class Trajectory:
    """Model states at equally spaced times ``t0 + k * interval``."""

    states: np.ndarray
    t0: int = 0
    interval: float = 0.12

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, k):
        return self.states[k]

    def check(self, p: LorenzParams, spec: IntegratorSpec, atol: float = 1e-12) -> None:
        """Assert consecutive states are linked by ``propagate`` (debug/test use)."""
        for k in range(len(self) - 1):
            y = propagate(p, spec, self.states[k])
            if not np.allclose(y, self.states[k + 1], rtol=0.0, atol=atol * max(1.0, np.abs(y).max())):
                raise AssertionError(f"states {k} and {k + 1} are not linked by propagate")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "x", "y", "z"])
            for k, s in enumerate(self.states):
                w.writerow([self.t0 + k] + [f"{c:.17g}" for c in s])

    @classmethod
    def from_csv(cls, path, interval: float = 0.12) -> "Trajectory":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t0 = int(rows[0, 0]) if len(rows) else 0
        return cls(states=rows[:, 1:4].copy(), t0=t0, interval=interval)


def generate_truth(p: LorenzParams, spec: IntegratorSpec, x0, nsteps: int) -> Trajectory:
    if nsteps < 1:
        raise ValueError("nsteps must be >= 1")
    x0 = _state(x0)
    states, ok = _trajectory(x0, p.sigma, p.rho, p.beta, spec.dt, spec.substeps, nsteps)
    if not ok:
        raise NonFiniteState(f"trajectory blew up after {len(states) - 1} steps")
    return Trajectory(states=states, t0=0, interval=spec.interval)


def trajectory_with_tlm(p: LorenzParams, spec: IntegratorSpec, x0, nsteps: int):
    """States ``(nsteps+1, 3)`` and per-interval Jacobians ``(nsteps, 3, 3)``."""
    x0 = _state(x0)
    states, tlms, ok = _trajectory_tlm(x0, p.sigma, p.rho, p.beta, spec.dt, spec.substeps, nsteps)
    if not ok:
        raise NonFiniteState(f"trajectory blew up after {len(states) - 1} steps")
    return states, tlms


@dataclass(frozen=True)
class ObsOperator:
    """Linear observation operator ``y = H x + eta``, ``eta ~ N(0, R)``."""

    H: np.ndarray = field(default_factory=lambda: np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    R: np.ndarray = field(default_factory=lambda: np.eye(2))
    R_factor: SpdFactor | None = None

    def __post_init__(self):
        if self.R_factor is None:
            object.__setattr__(self, "R_factor", cholesky(self.R))

    @property
    def nobs(self) -> int:
        return self.H.shape[0]

    def apply(self, x) -> np.ndarray:
        return self.H @ x

    def rinv(self, d) -> np.ndarray:
        return self.R_factor.solve(d)


def observe(obs: ObsOperator, traj: Trajectory, rng: RngStream) -> np.ndarray:
    """Noisy observations of every state of ``traj``, drawn in trajectory order."""
    out = np.empty((len(traj), obs.nobs))
    for k in range(len(traj)):
        out[k] = sample_gaussian(obs.apply(traj[k]), obs.R_factor, rng)
    return out

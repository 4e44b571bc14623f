"""Strong-constraint 4D-Var with pluggable forward/adjoint models.

The cost over a window of n observations is

    J(x0) = 1/2 |x0 - xb|^2_{B^-1} + 1/2 sum_i |H x_i - y_i|^2_{R^-1},
    x_i = forward(x_{i-1}),

and its gradient is accumulated in one reverse sweep of ``adjoint_vec``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from . import mlp
from .errors import DimensionMismatch, NonFiniteState
from .lorenz import IntegratorSpec, LorenzParams, ObsOperator, Trajectory, _rk4, _rk4_tlm, propagate
from .smallmat import RngStream, SpdFactor, as_vector, cholesky, sample_gaussian

B0 = np.array([
    [12.4294, 12.4323, -0.2139],
    [12.4323, 16.0837, -0.0499],
    [-0.2139, -0.0499, 14.7634],
])

SURROGATE_TAGS = ("Standard", "Adj", "AdjVec", "Indep", "IndepVec", "Lagrange", "Random", "RandCol")


@dataclass
class ModelPair:
    """A forward map and the adjoint-vector product used for its gradient.

    ``linearize(x)`` returns ``(forward(x), A)`` with A the 3x3 matrix whose
    product with v is ``adjoint_vec(x, v)``; the gradient sweep uses it so a
    model is evaluated once per step.  It is derived from the two maps when
    not supplied.

    ``kernel`` is an optional ``(step, params)`` pair with ``step`` a numba
    function ``step(x, params) -> (y, A, ok)``.  Window solves then run
    entirely in compiled code.
    """

    tag: str
    forward: Callable[[np.ndarray], np.ndarray]
    adjoint_vec: Callable[[np.ndarray, np.ndarray], np.ndarray]
    linearize: Callable | None = None
    kernel: tuple | None = None

    def __post_init__(self):
        if self.linearize is None:
            eye = np.eye(3)

            def lin(x):
                A = np.column_stack([self.adjoint_vec(x, e) for e in eye])
                return self.forward(x), A

            self.linearize = lin


@numba.njit(cache=True)
def _exact_step(x, params):
    s, r, b, dt, n = params
    y, M, ok = _rk4_tlm(x, s, r, b, dt, n)
    return y, M.T.copy(), ok


def exact_model(p: LorenzParams | None = None, spec: IntegratorSpec | None = None) -> ModelPair:
    p = p or LorenzParams()
    spec = spec or IntegratorSpec()
    args = (p.sigma, p.rho, p.beta, spec.dt, spec.substeps)

    def fwd(x):
        y, ok = _rk4(x, *args)
        if not ok:
            raise NonFiniteState(f"RK4 blew up starting from {x.tolist()}")
        return y

    def lin(x):
        y, M, ok = _rk4_tlm(x, *args)
        if not ok:
            raise NonFiniteState(f"RK4 tangent linear model blew up starting from {x.tolist()}")
        return y, M.T

    def adj(x, v):
        return lin(x)[1] @ v

    return ModelPair("Exact", fwd, adj, lin, (_exact_step, args))


@numba.njit(cache=True)
def _mlp_linearize(x, W1, b1, W2, b2, A1, a1, A2, shared):
    # forward through (W1, b1, W2, b2); adjoint matrix (A2 diag(s) A1)^T.
    # shared: the adjoint weights are the forward ones, so tanh is evaluated once
    nh = W1.shape[0]
    y = b2.copy()
    At = np.zeros((3, 3))
    for k in range(nh):
        h = math.tanh(W1[k, 0] * x[0] + W1[k, 1] * x[1] + W1[k, 2] * x[2] + b1[k])
        for i in range(3):
            y[i] += W2[i, k] * h
        if not shared:
            h = math.tanh(A1[k, 0] * x[0] + A1[k, 1] * x[1] + A1[k, 2] * x[2] + a1[k])
        sk = 1.0 - h * h
        for i in range(3):
            c = A2[i, k] * sk
            for j in range(3):
                At[j, i] += c * A1[k, j]
    ok = np.isfinite(y[0]) and np.isfinite(y[1]) and np.isfinite(y[2])
    return y, At, ok


@numba.njit(cache=True)
def _mlp_step(x, params):
    W1, b1, W2, b2, A1, a1, A2, shared = params
    return _mlp_linearize(x, W1, b1, W2, b2, A1, a1, A2, shared)


def surrogate_model(tag: str, theta: mlp.MlpParams, phi: mlp.AdjNetParams | None = None) -> ModelPair:
    """Network-backed model.  With ``phi`` the gradient uses the adjoint network."""
    W1, b1, W2, b2 = (np.ascontiguousarray(a) for a in (theta.W1, theta.b1, theta.W2, theta.b2))
    shared = phi is None
    if shared:
        A1, a1, A2 = W1, b1, W2
    else:
        A1, a1, A2 = (np.ascontiguousarray(a) for a in (phi.W1, phi.b1, phi.W2))

    def lin(x):
        y, At, ok = _mlp_linearize(x, W1, b1, W2, b2, A1, a1, A2, shared)
        if not ok:
            raise NonFiniteState("surrogate produced a non-finite state")
        return y, At

    def fwd(x):
        return lin(x)[0]

    def adj(x, v):
        h = np.tanh(A1 @ x + a1)
        return ((1.0 - h * h) * (v @ A2)) @ A1

    return ModelPair(tag, fwd, adj, lin, (_mlp_step, (W1, b1, W2, b2, A1, a1, A2, shared)))


class FourDVarProblem:
    """One assimilation window: background, observations at t_1..t_n, and a model."""

    def __init__(self, xb, B_factor: SpdFactor, y, model: ModelPair, obs: ObsOperator | None = None):
        self.xb = as_vector(xb, 3, name="xb")
        self.B_factor = B_factor
        self.y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        self.model = model
        self.obs = obs or ObsOperator()
        if self.y.shape[1] != self.obs.nobs:
            raise DimensionMismatch(f"observations have {self.y.shape[1]} components, H has {self.obs.nobs} rows")
        self.Binv = B_factor.solve(np.eye(3))
        self.Rinv = self.obs.R_factor.solve(np.eye(self.obs.nobs))
        self.H = self.obs.H
        self.HtRinv = self.H.T @ self.Rinv

    @property
    def window(self) -> int:
        return self.y.shape[0]


def cost(prob: FourDVarProblem, x0) -> float:
    x = as_vector(x0, 3, name="x0")
    d = x - prob.xb
    J = 0.5 * float(d @ prob.Binv @ d)
    for i in range(prob.window):
        x = prob.model.forward(x)
        r = prob.H @ x - prob.y[i]
        J += 0.5 * float(r @ prob.Rinv @ r)
    return J


def cost_and_gradient(prob: FourDVarProblem, x0) -> tuple[float, np.ndarray]:
    x = as_vector(x0, 3, name="x0")
    d = x - prob.xb
    bd = prob.Binv @ d
    J = 0.5 * float(d @ bd)
    adjoints = []
    forcing = []
    for i in range(prob.window):
        x, A = prob.model.linearize(x)
        adjoints.append(A)
        r = prob.H @ x - prob.y[i]
        J += 0.5 * float(r @ prob.Rinv @ r)
        forcing.append(prob.HtRinv @ r)
    lam = np.zeros(3)
    for i in range(prob.window - 1, -1, -1):
        lam = adjoints[i] @ (lam + forcing[i])
    return J, bd + lam


def gradient(prob: FourDVarProblem, x0) -> np.ndarray:
    return cost_and_gradient(prob, x0)[1]


# ---------------------------------------------------------------------------
# BFGS

@dataclass
class BfgsOptions:
    gtol: float = 1e-6
    xtol: float = 1e-6
    maxiter: int = 400
    c1: float = 1e-4
    c2: float = 0.9
    max_bracket: int = 10
    max_zoom: int = 10

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")


@dataclass
class BfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    termination: str
    nfev: int
    trace: list = field(default_factory=list)  # (iteration, wall seconds, f, x)


TERMINATIONS = ("GradientTolerance", "StepTolerance", "MaxIterations", "LineSearchFailed")


def _build_bfgs(fg, jit):
    """BFGS solver around ``fg(x, fargs) -> (f, g)``.

    One implementation serves two uses: ``jit=numba.njit`` with a compiled
    ``fg`` (the 4D-Var window kernels), and ``jit=identity`` for arbitrary
    Python callables.  ``fg`` must report failure as f = +inf.
    """

    @jit
    def clock():
        with numba.objmode(t="float64"):
            t = time.perf_counter()
        return t

    @jit
    def evaluate(fargs, x, st, best_x, best_g):
        # st = [nfev, best f]
        f, g = fg(x, fargs)
        st[0] += 1.0
        if f < st[1]:
            st[1] = f
            best_x[:] = x
            best_g[:] = g
        return f, g

    @jit
    def cubicmin(a, fa, fpa, b, fb, c, fc):
        # minimizer of the cubic through (a, fa, fpa), (b, fb), (c, fc); nan if ill-posed
        db = b - a
        dc = c - a
        denom = (db * dc) ** 2 * (db - dc)
        if denom == 0.0:
            return np.nan
        rb = fb - fa - fpa * db
        rc = fc - fa - fpa * dc
        A = (dc * dc * rb - db * db * rc) / denom
        B = (-dc * dc * dc * rb + db * db * db * rc) / denom
        radical = B * B - 3.0 * A * fpa
        if A == 0.0 or radical < 0.0:
            return np.nan
        return a + (-B + math.sqrt(radical)) / (3.0 * A)

    @jit
    def quadmin(a, fa, fpa, b, fb):
        db = b - a
        if db == 0.0:
            return np.nan
        curv = (fb - fa - fpa * db) / (db * db)
        if not curv > 0.0:
            return np.nan
        return a - fpa / (2.0 * curv)

    @jit
    def probe(fargs, x, p, a, st, best_x, best_g):
        xa = x + a * p
        fa, ga = evaluate(fargs, xa, st, best_x, best_g)
        d = np.dot(ga, p) if np.isfinite(fa) else np.nan
        return fa, d, xa, ga

    @jit
    def zoom(fargs, x, p, a_lo, f_lo, d_lo, a_hi, f_hi, f0, g0d, c1, c2, budget, st, best_x, best_g):
        a_rec = 0.0
        f_rec = f0
        for k in range(max(budget, 0)):
            lo = min(a_lo, a_hi)
            hi = max(a_lo, a_hi)
            width = hi - lo
            if width <= 1e-14 * max(1.0, hi):
                break
            a = np.nan
            if k > 0 and np.isfinite(f_hi):
                a = cubicmin(a_lo, f_lo, d_lo, a_hi, f_hi, a_rec, f_rec)
                if not (lo + 0.2 * width < a < hi - 0.2 * width):
                    a = np.nan
            if np.isnan(a) and np.isfinite(f_hi):
                a = quadmin(a_lo, f_lo, d_lo, a_hi, f_hi)
                if not (lo + 0.1 * width < a < hi - 0.1 * width):
                    a = np.nan
            if np.isnan(a):
                a = lo + 0.5 * width
            f, d, xa, ga = probe(fargs, x, p, a, st, best_x, best_g)
            if not np.isfinite(f) or f > f0 + c1 * a * g0d or f >= f_lo:
                a_rec, f_rec = a_hi, f_hi
                a_hi, f_hi = a, f
            else:
                if abs(d) <= -c2 * g0d:
                    return True, f, xa, ga
                if d * (a_hi - a_lo) >= 0.0:
                    a_rec, f_rec = a_hi, f_hi
                    a_hi, f_hi = a_lo, f_lo
                else:
                    a_rec, f_rec = a_lo, f_lo
                a_lo, f_lo, d_lo = a, f, d
        return False, f0, x, x

    @jit
    def strong_wolfe(fargs, x, p, f0, g0d, alpha1, c1, c2, max_bracket, max_zoom, st, best_x, best_g):
        # bracketing phase; returns (ok, f, x_new, g_new)
        a_prev, f_prev, d_prev = 0.0, f0, g0d
        a = alpha1
        evals = 0
        while evals < max_bracket:
            f, d, xa, ga = probe(fargs, x, p, a, st, best_x, best_g)
            evals += 1
            if not np.isfinite(f):
                a = 0.5 * (a_prev + a)
                continue
            if f > f0 + c1 * a * g0d or (evals > 1 and f >= f_prev):
                return zoom(fargs, x, p, a_prev, f_prev, d_prev, a, f, f0, g0d, c1, c2,
                            max_zoom, st, best_x, best_g)
            if abs(d) <= -c2 * g0d:
                return True, f, xa, ga
            if d >= 0.0:
                return zoom(fargs, x, p, a, f, d, a_prev, f_prev, f0, g0d, c1, c2,
                            max_zoom, st, best_x, best_g)
            a_prev, f_prev, d_prev = a, f, d
            a = 2.0 * a
        return False, f0, x, x

    @jit
    def solve(fargs, x0, gtol, xtol, maxiter, c1, c2, max_bracket, max_zoom):
        t0 = clock()
        n = x0.shape[0]
        x = x0.copy()
        st = np.array([0.0, np.inf])
        best_x = x0.copy()
        best_g = np.zeros(n)
        tr_f = np.empty(maxiter + 2)
        tr_t = np.empty(maxiter + 2)
        tr_it = np.empty(maxiter + 2, dtype=np.int64)
        tr_x = np.empty((maxiter + 2, n))
        fx, gx = evaluate(fargs, x, st, best_x, best_g)
        tr_f[0], tr_t[0], tr_it[0] = fx, clock() - t0, 0
        tr_x[0] = x
        nt = 1
        it = 0
        code = 2
        if not np.isfinite(fx):
            return x, fx, gx, 0, 3, int(st[0]), tr_it[:nt], tr_t[:nt], tr_f[:nt], tr_x[:nt]
        Hinv = np.eye(n)
        while True:
            if np.max(np.abs(gx)) <= gtol:
                code = 0
                break
            if it >= maxiter:
                code = 2
                break
            p = -_matvec(Hinv, gx)
            g0d = np.dot(gx, p)
            if not g0d < 0.0:
                Hinv = np.eye(n)
                p = -gx
                g0d = np.dot(gx, p)
            alpha1 = 1.0
            if it == 0:
                alpha1 = min(1.0, 1.0 / np.sum(np.abs(gx)))
            ok, f_new, x_new, g_new = strong_wolfe(fargs, x, p, fx, g0d, alpha1, c1, c2, max_bracket, max_zoom,
                                                   st, best_x, best_g)
            if not ok:
                code = 3
                # an inconsistent gradient can stall the search next to a lower trial point
                if st[1] < fx:
                    x, fx, gx = best_x.copy(), st[1], best_g.copy()
                    tr_f[nt], tr_t[nt], tr_it[nt] = fx, clock() - t0, it
                    tr_x[nt] = x
                    nt += 1
                break
            it += 1
            s = x_new - x
            yv = g_new - gx
            x, fx, gx = x_new, f_new, g_new
            tr_f[nt], tr_t[nt], tr_it[nt] = fx, clock() - t0, it
            tr_x[nt] = x
            nt += 1
            if np.linalg.norm(s) <= xtol * (1.0 + np.linalg.norm(x)):
                code = 1
                break
            sy = np.dot(s, yv)
            if sy <= 1e-12:
                Hinv = np.eye(n)
                continue
            # H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded
            Hy = _matvec(Hinv, yv)
            c = (sy + np.dot(yv, Hy)) / (sy * sy)
            for i in range(n):
                for j in range(n):
                    Hinv[i, j] += c * s[i] * s[j] - (Hy[i] * s[j] + s[i] * Hy[j]) / sy
        return x, fx, gx, it, code, int(st[0]), tr_it[:nt], tr_t[:nt], tr_f[:nt], tr_x[:nt]

    return solve


def _identity(fn):
    return fn


def _result(out) -> BfgsResult:
    x, f, g, it, code, nfev, tr_it, tr_t, tr_f, tr_x = out
    trace = [(int(k), float(t), float(v), xk.copy()) for k, t, v, xk in zip(tr_it, tr_t, tr_f, tr_x)]
    return BfgsResult(np.asarray(x), float(f), np.asarray(g), int(it), TERMINATIONS[code], int(nfev), trace)


def _run(solver, fargs, x0, opts: BfgsOptions) -> BfgsResult:
    return _result(solver(fargs, x0, opts.gtol, opts.xtol, opts.maxiter, opts.c1, opts.c2,
                          opts.max_bracket, opts.max_zoom))


def bfgs_minimize(f, g, x0, opts: BfgsOptions | None = None, fg=None) -> BfgsResult:
    """Minimize ``f`` with BFGS (inverse-Hessian form) and a strong Wolfe line search.

    ``fg`` may return ``(f(x), g(x))`` in one call.  Never raises on failure;
    the reason is in ``termination``: GradientTolerance, StepTolerance,
    MaxIterations, or LineSearchFailed (best point evaluated is returned).
    """
    opts = opts or BfgsOptions()
    call = fg if fg is not None else (lambda x: (f(x), g(x)))

    def safe(x, _):
        try:
            fx, gx = call(x)
        except (NonFiniteState, FloatingPointError):
            return math.inf, np.full_like(x, np.nan)
        gx = np.asarray(gx, dtype=np.float64)
        if not np.isfinite(fx) or not np.all(np.isfinite(gx)):
            return math.inf, np.full_like(x, np.nan)
        return float(fx), gx

    return _run(_build_bfgs(safe, _identity), None, np.array(x0, dtype=np.float64), opts)


@numba.njit(cache=True)
def _matvec(A, v):
    out = np.zeros(A.shape[0])
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            out[i] += A[i, j] * v[j]
    return out


def _window_fg(step):
    @numba.njit
    def fg(x, fargs):
        params, xb, Binv, H, Rinv, HtRinv, Y = fargs
        nw = Y.shape[0]
        n = x.shape[0]
        d = x - xb
        bd = _matvec(Binv, d)
        f = 0.5 * np.dot(d, bd)
        adj = np.empty((nw, n, n))
        forcing = np.empty((nw, n))
        xi = x
        for i in range(nw):
            xi, A, ok = step(xi, params)
            if not ok:
                return np.inf, np.full(n, np.nan)
            adj[i] = A
            r = _matvec(H, xi) - Y[i]
            rr = _matvec(Rinv, r)
            f += 0.5 * np.dot(r, rr)
            forcing[i] = _matvec(HtRinv, r)
        lam = np.zeros(n)
        for i in range(nw - 1, -1, -1):
            lam = _matvec(adj[i], lam + forcing[i])
        g = bd + lam
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            return np.inf, np.full(n, np.nan)
        return f, g

    return fg


_COMPILED = {}


def _compiled_solver(step):
    if step not in _COMPILED:
        _COMPILED[step] = _build_bfgs(_window_fg(step), numba.njit)
    return _COMPILED[step]


def solve_window(prob: FourDVarProblem, x0, opts: BfgsOptions) -> BfgsResult:
    """BFGS on one window, compiled end to end when the model has a kernel."""
    x0 = np.array(x0, dtype=np.float64)
    if prob.model.kernel is None:
        return bfgs_minimize(None, None, x0, opts, fg=lambda x: cost_and_gradient(prob, x))
    step, params = prob.model.kernel
    c = np.ascontiguousarray
    fargs = (params, prob.xb, c(prob.Binv), c(prob.H), c(prob.Rinv), c(prob.HtRinv), c(prob.y))
    return _run(_compiled_solver(step), fargs, x0, opts)


# ---------------------------------------------------------------------------
# drivers

@dataclass
class WindowResult:
    analysis: np.ndarray
    cost: float
    iterations: int
    termination: str
    wall_time: float
    trace: list


def assimilate_window(prob: FourDVarProblem, x0_guess=None, opts: BfgsOptions | None = None) -> WindowResult:
    """Solve one window; the initial guess defaults to the background."""
    x0 = prob.xb.copy() if x0_guess is None else as_vector(x0_guess, 3)
    opts = opts or BfgsOptions()
    t0 = time.perf_counter()
    res = solve_window(prob, x0, opts)
    wall = time.perf_counter() - t0
    return WindowResult(res.x, res.f, res.iterations, res.termination, wall, res.trace)


@dataclass
class SequentialConfig:
    n_time: int = 550
    spinup_discard: int = 50
    interval: float = 0.12
    substeps: int = 50
    window: int = 2

    def __post_init__(self):
        if not 0 <= self.spinup_discard < self.n_time:
            raise ValueError("need 0 <= spinup_discard < n_time")

    @property
    def integrator(self) -> IntegratorSpec:
        return IntegratorSpec(self.interval, self.substeps)


@dataclass
class SequentialResult:
    tag: str
    analyses: np.ndarray
    costs: np.ndarray
    iterations: np.ndarray
    terminations: list
    wall_times: np.ndarray
    error: str | None = None

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("step,x,y,z,cost,iterations,termination,wall_time_s\n")
            for k in range(len(self.analyses)):
                a = self.analyses[k]
                fh.write(
                    f"{k},{a[0]:.17g},{a[1]:.17g},{a[2]:.17g},{self.costs[k]:.17g},"
                    f"{int(self.iterations[k])},{self.terminations[k]},{self.wall_times[k]:.6e}\n"
                )


def initial_background(truth0, B_factor: SpdFactor, rng: RngStream) -> np.ndarray:
    return sample_gaussian(truth0, B_factor, rng)


def sequential_run(
    cfg: SequentialConfig,
    model: ModelPair,
    truth: Trajectory,
    observations: np.ndarray,
    B_factor: SpdFactor,
    xb0=None,
    rng: RngStream | None = None,
    obs: ObsOperator | None = None,
    p: LorenzParams | None = None,
    opts: BfgsOptions | None = None,
) -> SequentialResult:
    """Cycle 4D-Var windows over the truth run.

    ``observations[k]`` observes ``truth[k]``.  The first background is
    ``xb0`` or, if omitted, truth[0] perturbed by N(0, B) drawn from ``rng``.
    Each analysis is propagated with the exact model to give the next
    background, whatever ``model`` is used inside the window.
    """
    need = cfg.n_time + cfg.window
    if len(truth) < need or observations.shape[0] < need:
        raise DimensionMismatch(f"truth and observations need at least {need} states")
    obs = obs or ObsOperator()
    p = p or LorenzParams()
    spec = cfg.integrator
    if xb0 is None:
        if rng is None:
            raise ValueError("give xb0 or rng")
        xb0 = initial_background(truth[0], B_factor, rng)
    xb = as_vector(xb0, 3)

    n = cfg.n_time
    analyses = np.full((n, 3), np.nan)
    costs = np.full(n, np.nan)
    iters = np.zeros(n, dtype=int)
    terms = [""] * n
    walls = np.full(n, np.nan)
    error = None
    # compile outside the timed region
    solve_window(FourDVarProblem(xb, B_factor, observations[1:1 + cfg.window], model, obs), xb,
                 BfgsOptions(maxiter=1))
    for i in range(n):
        prob = FourDVarProblem(xb, B_factor, observations[i + 1:i + 1 + cfg.window], model, obs)
        w = assimilate_window(prob, opts=opts)
        analyses[i] = w.analysis
        costs[i] = w.cost
        iters[i] = w.iterations
        terms[i] = w.termination
        walls[i] = w.wall_time
        if i + 1 < n:
            try:
                xb = propagate(p, spec, w.analysis)
            except NonFiniteState as exc:
                error = f"step {i}: {exc}"
                break
    return SequentialResult(model.tag, analyses, costs, iters, terms, walls, error)


def forecast_run(cfg: SequentialConfig, xb0, p: LorenzParams | None = None) -> np.ndarray:
    """Free run of the initial background with no assimilation."""
    p = p or LorenzParams()
    spec = cfg.integrator
    out = np.empty((cfg.n_time, 3))
    out[0] = as_vector(xb0, 3)
    for i in range(1, cfg.n_time):
        out[i] = propagate(p, spec, out[i - 1])
    return out


def spatiotemporal_rmse(analyses, truth, skip: int = 50) -> float:
    """RMSE over steps ``skip..N-1`` and all state components."""
    a = np.asarray(analyses, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if a.shape != t.shape:
        raise DimensionMismatch(f"analyses {a.shape} vs truth {t.shape}")
    if not 0 <= skip < a.shape[0]:
        raise DimensionMismatch(f"skip={skip} leaves nothing of {a.shape[0]} steps")
    d = a[skip:] - t[skip:]
    return float(np.sqrt(np.sum(d * d) / d.size))

"""Two-layer tanh surrogate networks and closed-form parameter gradients.

Forward network:   N(u) = W2 tanh(W1 u + b1) + b2          (3 -> 25 -> 3)
Input Jacobian:    dN/du = W2 diag(sech^2(W1 u + b1)) W1
Adjoint network:   A(u) = W2 diag(sech^2(W1 u + b1)) W1     (own parameters)

The adjoint network's adjoint estimate is A(u)^T, so it has exactly the
expressivity of the single-network adjoint (dN/du)^T.  Fitting M^T with the
untransposed form is markedly harder because that family is not closed under
transposition.

Flat parameter layout is W1 (row-major), b1, W2 (row-major), b2; the adjoint
network uses the same layout without b2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import as_training_set
from .errors import MissingAdjointData
from .smallmat import RngStream

N_STATE = 3
N_HIDDEN = 25
_W1 = N_HIDDEN * N_STATE
_B1 = _W1 + N_HIDDEN
_W2 = _B1 + N_STATE * N_HIDDEN
N_ADJ_PARAMS = _W2
N_PARAMS = _W2 + N_STATE

MLP_TAG = "mlp-tanh-3-25-3"
ADJNET_TAG = "adjnet-tanh-3-25-3x3"


def _split(theta: np.ndarray):
    W1 = theta[:_W1].reshape(N_HIDDEN, N_STATE)
    b1 = theta[_W1:_B1]
    W2 = theta[_B1:_W2].reshape(N_STATE, N_HIDDEN)
    b2 = theta[_W2:N_PARAMS] if theta.shape[0] == N_PARAMS else None
    return W1, b1, W2, b2


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


@dataclass
class MlpParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    n_params = N_PARAMS
    tag = MLP_TAG

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])

    @classmethod
    def from_flat(cls, theta) -> "MlpParams":
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters, got shape {theta.shape}")
        W1, b1, W2, b2 = _split(theta)
        return cls(W1.copy(), b1.copy(), W2.copy(), b2.copy())

    @classmethod
    def zeros(cls) -> "MlpParams":
        return cls.from_flat(np.zeros(N_PARAMS))

    @classmethod
    def init(cls, rng: RngStream) -> "MlpParams":
        a1 = glorot_bound(N_STATE, N_HIDDEN)
        W1 = rng.uniform(-a1, a1, (N_HIDDEN, N_STATE))
        a2 = glorot_bound(N_HIDDEN, N_STATE)
        W2 = rng.uniform(-a2, a2, (N_STATE, N_HIDDEN))
        return cls(W1, np.zeros(N_HIDDEN), W2, np.zeros(N_STATE))


@dataclass
class AdjNetParams:
    """Parameters of the adjoint network; it shares the Jacobian's functional form."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray

    n_params = N_ADJ_PARAMS
    tag = ADJNET_TAG

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel()])

    @classmethod
    def from_flat(cls, phi) -> "AdjNetParams":
        phi = np.asarray(phi, dtype=np.float64)
        if phi.shape != (N_ADJ_PARAMS,):
            raise ValueError(f"expected {N_ADJ_PARAMS} parameters, got shape {phi.shape}")
        W1, b1, W2, _ = _split(phi)
        return cls(W1.copy(), b1.copy(), W2.copy())

    @classmethod
    def from_mlp(cls, theta: MlpParams) -> "AdjNetParams":
        return cls(theta.W1.copy(), theta.b1.copy(), theta.W2.copy())

    @classmethod
    def init(cls, rng: RngStream) -> "AdjNetParams":
        p = MlpParams.init(rng)
        return cls(p.W1, p.b1, p.W2)


def _hidden(W1, b1, u):
    h = np.tanh(u @ W1.T + b1)
    return h, 1.0 - h * h


def forward(theta: MlpParams, u) -> np.ndarray:
    """Network output for a state (3,) or a batch of states (N, 3)."""
    h, _ = _hidden(theta.W1, theta.b1, np.asarray(u, dtype=np.float64))
    return h @ theta.W2.T + theta.b2


def _sandwich(W1, b1, W2, u):
    _, s = _hidden(W1, b1, np.asarray(u, dtype=np.float64))
    if s.ndim == 1:
        return (W2 * s) @ W1
    return np.einsum("ik,bk,kj->bij", W2, s, W1)


def jacobian(theta: MlpParams, u) -> np.ndarray:
    """dN/du, shape (3, 3) or (N, 3, 3)."""
    return _sandwich(theta.W1, theta.b1, theta.W2, u)


def jacobian_t_vec(theta: MlpParams, u, v) -> np.ndarray:
    """(dN/du)^T v without forming the Jacobian."""
    _, s = _hidden(theta.W1, theta.b1, np.asarray(u, dtype=np.float64))
    return (s * (np.asarray(v) @ theta.W2)) @ theta.W1


def adjnet_forward(phi: AdjNetParams, u) -> np.ndarray:
    """Raw adjoint-network output W2 diag(sech^2) W1, shape (3, 3) or (N, 3, 3)."""
    return _sandwich(phi.W1, phi.b1, phi.W2, u)


def adjnet_adjoint(phi: AdjNetParams, u) -> np.ndarray:
    """The adjoint network's estimate of M^T: the transposed raw output."""
    return np.swapaxes(adjnet_forward(phi, u), -1, -2)


def adjnet_adjoint_vec(phi: AdjNetParams, u, v) -> np.ndarray:
    """adjnet_adjoint(phi, u) @ v without forming the matrix."""
    return jacobian_t_vec(phi, u, v)


# ---------------------------------------------------------------------------
# losses

LOSS_KINDS = ("Standard", "Adj", "AdjVec", "IndepFwd", "IndepAdj", "IndepAdjVec")

# alpha per training method; "AdjVec" and "Random" are the same network
DEFAULT_ALPHA = {
    "Adj": 100.0 / 3.0,
    "AdjVec": 1e-3,
    "Random": 1e-3,
    "Lagrange": 1e-5,
    "RandCol": 5e-2,
}


@dataclass(frozen=True)
class LossSpec:
    kind: str
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not self.alpha >= 0.0:
            raise ValueError("alpha must be nonnegative")

    @property
    def adjoint_net(self) -> bool:
        return self.kind in ("IndepAdj", "IndepAdjVec")

    @property
    def n_params(self) -> int:
        return N_ADJ_PARAMS if self.adjoint_net else N_PARAMS


def _require(batch, kind):
    if kind in ("Adj", "IndepAdj") and batch.MT is None:
        raise MissingAdjointData(f"{kind} loss needs adjoint matrices")
    if kind in ("AdjVec", "IndepAdjVec") and (batch.V is None or batch.MTV is None):
        raise MissingAdjointData(f"{kind} loss needs adjoint-vector products")


def loss_value_and_param_grad(spec: LossSpec, params, batch) -> tuple[float, np.ndarray]:
    """Batch-mean loss and its exact gradient w.r.t. the flat parameter vector.

    ``params`` is an MlpParams/AdjNetParams or a flat array.  ``batch`` is a
    TrainingSet or a list of TrainingRecord.
    """
    batch = as_training_set(batch)
    _require(batch, spec.kind)
    theta = params.flatten() if hasattr(params, "flatten") else np.asarray(params, dtype=np.float64)
    if theta.shape != (spec.n_params,):
        raise ValueError(f"{spec.kind} expects {spec.n_params} parameters, got {theta.shape}")
    return _loss_grad(spec.kind, spec.alpha, theta, batch)


def _loss_grad(kind: str, alpha: float, theta: np.ndarray, batch):
    W1, b1, W2, b2 = _split(theta)
    U = batch.X
    nb = U.shape[0]
    h = np.tanh(U @ W1.T + b1)
    s = 1.0 - h * h

    gW1 = np.zeros_like(W1)
    gb1 = np.zeros_like(b1)
    gW2 = np.zeros_like(W2)
    dA = np.zeros_like(h)
    loss = 0.0

    if kind in ("Standard", "Adj", "AdjVec", "IndepFwd"):
        r = h @ W2.T + b2 - batch.Y
        loss += float(np.sum(r * r)) / nb
        dout = (2.0 / nb) * r
        gW2 += dout.T @ h
        gb2 = dout.sum(axis=0)
        dA += (dout @ W2) * s
    else:
        gb2 = None

    G = None
    if kind in ("Adj", "IndepAdj"):
        # ||J^T - M^T||_F == ||J - M||_F
        J = np.einsum("ik,bk,kj->bij", W2, s, W1)
        E = J - np.swapaxes(batch.MT, 1, 2)
        w = alpha if kind == "Adj" else 1.0
        loss += w * float(np.sum(E * E)) / nb
        G = (2.0 * w / nb) * E
    elif kind in ("AdjVec", "IndepAdjVec"):
        J = np.einsum("ik,bk,kj->bij", W2, s, W1)
        res = np.einsum("bij,bi->bj", J, batch.V) - batch.MTV
        w = alpha if kind == "AdjVec" else 1.0
        loss += w * float(np.sum(res * res)) / nb
        G = (2.0 * w / nb) * batch.V[:, :, None] * res[:, None, :]

    if G is not None:
        # J_b = W2 diag(s_b) W1; differentiate through W2, W1 and s_b = 1 - tanh^2
        gW2 += np.einsum("bij,bk,kj->ik", G, s, W1)
        gW1 += np.einsum("bk,ik,bij->kj", s, W2, G)
        ds = np.einsum("bij,ik,kj->bk", G, W2, W1)
        dA += ds * (-2.0 * h * s)

    gW1 += dA.T @ U
    gb1 += dA.sum(axis=0)
    parts = [gW1.ravel(), gb1, gW2.ravel()]
    if gb2 is not None:
        parts.append(gb2)
    elif b2 is not None:
        parts.append(np.zeros(N_STATE))
    return loss, np.concatenate(parts)


# ---------------------------------------------------------------------------
# serialization

def params_to_json(params, seed: int | None = None, extra: dict | None = None) -> str:
    flat = params.flatten()
    env = {
        "architecture": params.tag,
        "dims": [N_STATE, N_HIDDEN, N_STATE * N_STATE if isinstance(params, AdjNetParams) else N_STATE],
        "seed": seed,
        "n_params": int(flat.shape[0]),
        "params": [float(x) for x in flat],
    }
    if extra:
        env.update(extra)
    return json.dumps(env)


def params_from_json(text: str):
    env = json.loads(text)
    cls = {MLP_TAG: MlpParams, ADJNET_TAG: AdjNetParams}.get(env.get("architecture"))
    if cls is None:
        raise ValueError(f"unknown architecture {env.get('architecture')!r}")
    flat = np.array(env["params"], dtype=np.float64)
    if flat.shape[0] != env["n_params"]:
        raise ValueError("parameter count does not match header")
    return cls.from_flat(flat)

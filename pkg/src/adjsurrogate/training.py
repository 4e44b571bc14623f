"""Training data generation, Adam, and the per-method training drivers."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import mlp
from .dataset import TrainingSet, as_training_set
from .errors import MissingAdjointData, NonFiniteLoss
from .lorenz import IntegratorSpec, LorenzParams, ObsOperator, trajectory_with_tlm
from .smallmat import RngStream, SpdFactor, as_vector, sample_gaussian

log = logging.getLogger(__name__)

# Base initial condition of the training trajectories (perturbed by N(0, 5 I)).
TRAIN_X0 = np.array([-5.9448, -5.6587, 24.4367])
TRAIN_X0_VARIANCE = 5.0

VECTOR_SCHEMES = ("Lagrange", "Random", "RandCol")


@dataclass(frozen=True)
class MethodDef:
    """How one surrogate method is trained.

    ``forward_loss`` trains the forward network; ``adjoint_loss`` (if set)
    trains a separate adjoint network.  ``scheme`` selects the vectors of the
    adjoint-vector data.
    """

    forward_loss: str
    adjoint_loss: str | None = None
    scheme: str | None = None
    alpha: float = 0.0


METHODS = {
    "Standard": MethodDef("Standard"),
    "Adj": MethodDef("Adj", alpha=mlp.DEFAULT_ALPHA["Adj"]),
    "AdjVec": MethodDef("AdjVec", scheme="Random", alpha=mlp.DEFAULT_ALPHA["AdjVec"]),
    "Indep": MethodDef("IndepFwd", adjoint_loss="IndepAdj"),
    "IndepVec": MethodDef("IndepFwd", adjoint_loss="IndepAdjVec", scheme="Random"),
    "Lagrange": MethodDef("AdjVec", scheme="Lagrange", alpha=mlp.DEFAULT_ALPHA["Lagrange"]),
    "RandCol": MethodDef("AdjVec", scheme="RandCol", alpha=mlp.DEFAULT_ALPHA["RandCol"]),
}
# Random-vector training is the same network as AdjVec.
METHOD_ALIASES = {"Random": "AdjVec"}


def canonical_method(name: str) -> str:
    name = METHOD_ALIASES.get(name, name)
    if name not in METHODS:
        raise ValueError(f"unknown surrogate method {name!r}")
    return name


@dataclass
class TrainConfig:
    epochs: int = 200
    batches_per_epoch: int | None = 100
    batch_size: int = 5
    lr_max: float = 1e-2
    lr_min: float = 1e-5

    def batches_for(self, n_data: int) -> int:
        nb = self.batches_per_epoch if self.batches_per_epoch is not None else n_data // self.batch_size
        if nb * self.batch_size > n_data:
            raise ValueError(
                f"{nb} batches of {self.batch_size} need {nb * self.batch_size} records, have {n_data}"
            )
        return nb


# ---------------------------------------------------------------------------
# data

def make_vector(scheme: str, obs: ObsOperator, rng: RngStream) -> np.ndarray:
    """Direction v for one adjoint-vector product record."""
    if scheme == "Lagrange":
        eta = sample_gaussian(np.zeros(obs.nobs), obs.R_factor, rng)
        return obs.H.T @ obs.rinv(eta)
    if scheme == "Random":
        return rng.standard_normal(3)
    if scheme == "RandCol":
        v = np.zeros(3)
        v[int(rng.integers(0, 3))] = 1.0
        return v
    raise ValueError(f"unknown vector scheme {scheme!r}")


def generate_training_set(
    p: LorenzParams,
    spec: IntegratorSpec,
    rng: RngStream,
    n_data: int = 500,
    scheme: str | None = None,
    obs: ObsOperator | None = None,
    x0=None,
) -> TrainingSet:
    """Forward pairs and adjoint matrices along one trajectory of ``n_data`` intervals.

    The start point is ``x0`` if given, otherwise the training base point plus
    N(0, 5 I) noise drawn from ``rng``.  When ``scheme`` is given, one
    adjoint-vector product per record is added, with vectors drawn after the
    start point.
    """
    if n_data < 1:
        raise ValueError("n_data must be >= 1")
    if x0 is None:
        noise = SpdFactor(np.sqrt(TRAIN_X0_VARIANCE) * np.eye(3))
        x0 = sample_gaussian(TRAIN_X0, noise, rng)
    x0 = as_vector(x0, 3, name="x0")
    states, tlms = trajectory_with_tlm(p, spec, x0, n_data)
    data = TrainingSet(X=states[:-1].copy(), Y=states[1:].copy(), MT=np.swapaxes(tlms, 1, 2).copy())
    if scheme is not None:
        obs = obs or ObsOperator()
        V = np.array([make_vector(scheme, obs, rng) for _ in range(n_data)])
        data.V = V
        data.MTV = np.einsum("bij,bj->bi", data.MT, V)
    return data


def attach_vectors(data: TrainingSet, scheme: str, rng: RngStream, obs: ObsOperator | None = None) -> TrainingSet:
    """Copy of ``data`` with fresh adjoint-vector products under ``scheme``."""
    if data.MT is None:
        raise MissingAdjointData("adjoint-vector products need adjoint matrices")
    obs = obs or ObsOperator()
    V = np.array([make_vector(scheme, obs, rng) for _ in range(len(data))])
    return TrainingSet(data.X, data.Y, data.MT, V, np.einsum("bij,bj->bi", data.MT, V))


# ---------------------------------------------------------------------------
# optimizer

def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Log-uniform decay from lr_max at epoch 0 to lr_min at the last epoch."""
    if not 0 <= epoch < cfg.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.epochs})")
    if cfg.epochs == 1:
        return cfg.lr_max
    frac = epoch / (cfg.epochs - 1)
    return float(cfg.lr_max * (cfg.lr_min / cfg.lr_max) ** frac)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray, lr: float):
    """One Adam update; returns ``(new_state, new_theta)``."""
    if theta.shape != grad.shape or theta.shape != state.m.shape:
        raise ValueError("theta, grad and Adam moments must have the same shape")
    b1, b2 = state.beta1, state.beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * grad
    v = b2 * state.v + (1.0 - b2) * grad * grad
    mhat = m / (1.0 - b1**t)
    vhat = v / (1.0 - b2**t)
    theta = theta - lr * mhat / (np.sqrt(vhat) + state.eps)
    return AdamState(m, v, t, b1, b2, state.eps), theta


# ---------------------------------------------------------------------------
# drivers

@dataclass
class TrainedSurrogate:
    method: str
    theta: mlp.MlpParams
    phi: mlp.AdjNetParams | None = None
    forward_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    adjoint_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    alpha: float = 0.0

    def adjoint_matrix(self, x) -> np.ndarray:
        """Surrogate approximation of M^T at ``x`` (single state or batch)."""
        if self.phi is not None:
            return mlp.adjnet_adjoint(self.phi, x)
        return np.swapaxes(mlp.jacobian(self.theta, x), -1, -2)

    def curves_to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,forward_loss,adjoint_loss\n")
            for e, (f, a) in enumerate(zip(self.forward_loss, self.adjoint_loss), start=1):
                fh.write(f"{e},{f:.17g},{a:.17g}\n")


def forward_loss(theta: mlp.MlpParams, data: TrainingSet) -> float:
    r = mlp.forward(theta, data.X) - data.Y
    return float(np.sum(r * r)) / len(data)


def adjoint_loss(model: TrainedSurrogate, data: TrainingSet) -> float:
    if data.MT is None:
        return float("nan")
    E = model.adjoint_matrix(data.X) - data.MT
    return float(np.sum(E * E)) / len(data)


def fit_network(spec: mlp.LossSpec, theta0: np.ndarray, data: TrainingSet, cfg: TrainConfig,
                rng: RngStream, on_epoch=None) -> np.ndarray:
    """Minibatch Adam on one loss.  ``on_epoch(epoch, theta)`` runs after each epoch."""
    theta = theta0.copy()
    state = AdamState.zeros(theta.shape[0])
    n = len(data)
    nb = cfg.batches_for(n)
    bs = cfg.batch_size
    for epoch in range(cfg.epochs):
        lr = lr_schedule(epoch, cfg)
        perm = rng.permutation(n)
        for k in range(nb):
            batch = data.subset(perm[k * bs:(k + 1) * bs])
            loss, grad = mlp._loss_grad(spec.kind, spec.alpha, theta, batch)
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise NonFiniteLoss(f"{spec.kind} loss became non-finite at epoch {epoch}, batch {k}")
            state, theta = adam_step(state, theta, grad, lr)
        if on_epoch is not None:
            on_epoch(epoch, theta)
    return theta


def centred_init(theta: np.ndarray, data: TrainingSet) -> np.ndarray:
    """Fold input standardization into the first layer of a fresh network.

    W1 columns are divided by the per-component spread of the training
    inputs, b1 recentres them, and b2 (forward networks only) starts at the
    target mean.  Lorenz-63 states are O(10) while tanh saturates at O(1),
    so without this most hidden units start saturated.
    """
    theta = theta.copy()
    W1, b1, _, b2 = mlp._split(theta)
    W1 /= np.maximum(data.X.std(axis=0), 1e-12)
    b1[:] = -W1 @ data.X.mean(axis=0)
    if b2 is not None:
        b2[:] = data.Y.mean(axis=0)
    return theta


def train(method: str, data, cfg: TrainConfig, rng: RngStream, alpha: float | None = None) -> TrainedSurrogate:
    """Train the network(s) of ``method`` and record full-data loss curves."""
    name = canonical_method(method)
    mdef = METHODS[name]
    data = as_training_set(data)
    a = mdef.alpha if alpha is None else float(alpha)
    fspec = mlp.LossSpec(mdef.forward_loss, a if mdef.forward_loss in ("Adj", "AdjVec") else 0.0)
    for spec in filter(None, [fspec, mlp.LossSpec(mdef.adjoint_loss) if mdef.adjoint_loss else None]):
        if spec.kind in ("Adj", "IndepAdj") and data.MT is None:
            raise MissingAdjointData(f"{method} needs adjoint matrices")
        if spec.kind in ("AdjVec", "IndepAdjVec") and data.MTV is None:
            raise MissingAdjointData(f"{method} needs adjoint-vector products")

    theta = centred_init(mlp.MlpParams.init(rng).flatten(), data)
    phi = centred_init(mlp.AdjNetParams.init(rng).flatten(), data) if mdef.adjoint_loss else None
    model = TrainedSurrogate(name, mlp.MlpParams.from_flat(theta),
                             None if phi is None else mlp.AdjNetParams.from_flat(phi), alpha=a)
    if cfg.epochs == 0:
        return model

    fwd_curve, adj_curve = [], []

    def fwd_epoch(epoch, th):
        model.theta = mlp.MlpParams.from_flat(th)
        fwd_curve.append(forward_loss(model.theta, data))
        if phi is None:
            adj_curve.append(adjoint_loss(model, data))

    model.theta = mlp.MlpParams.from_flat(fit_network(fspec, theta, data, cfg, rng, fwd_epoch))

    if phi is not None:
        aspec = mlp.LossSpec(mdef.adjoint_loss)

        def adj_epoch(epoch, ph):
            model.phi = mlp.AdjNetParams.from_flat(ph)
            adj_curve.append(adjoint_loss(model, data))

        model.phi = mlp.AdjNetParams.from_flat(fit_network(aspec, phi, data, cfg, rng, adj_epoch))

    model.forward_loss = np.array(fwd_curve)
    model.adjoint_loss = np.array(adj_curve)
    log.info("trained %s: forward loss %.4g, adjoint loss %.4g", name, fwd_curve[-1], adj_curve[-1])
    return model

"""Containers for surrogate training data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrainingRecord:
    """One training sample.

    ``adjoint`` is the 3x3 matrix M^T of the interval map at ``x``;
    ``vector``/``adjoint_vector`` hold an adjoint-vector product pair
    ``(v, M^T v)``.
    """

    x: np.ndarray
    target: np.ndarray
    adjoint: np.ndarray | None = None
    vector: np.ndarray | None = None
    adjoint_vector: np.ndarray | None = None


@dataclass
class TrainingSet:
    """Column-stacked training records, the form the loss kernels consume.

    X, Y: (N, 3); MT: (N, 3, 3) adjoint matrices; V, MTV: (N, 3).
    """

    X: np.ndarray
    Y: np.ndarray
    MT: np.ndarray | None = None
    V: np.ndarray | None = None
    MTV: np.ndarray | None = None

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "TrainingSet":
        pick = lambda a: None if a is None else a[idx]
        return TrainingSet(self.X[idx], self.Y[idx], pick(self.MT), pick(self.V), pick(self.MTV))

    def records(self) -> list[TrainingRecord]:
        out = []
        for i in range(len(self)):
            out.append(TrainingRecord(
                x=self.X[i],
                target=self.Y[i],
                adjoint=None if self.MT is None else self.MT[i],
                vector=None if self.V is None else self.V[i],
                adjoint_vector=None if self.MTV is None else self.MTV[i],
            ))
        return out

    @classmethod
    def from_records(cls, records) -> "TrainingSet":
        records = list(records)
        if not records:
            raise ValueError("empty batch")

        def stack(name):
            vals = [getattr(r, name) for r in records]
            if any(v is None for v in vals):
                return None
            return np.array(vals, dtype=np.float64)

        return cls(stack("x"), stack("target"), stack("adjoint"), stack("vector"), stack("adjoint_vector"))

    def to_npz(self, path) -> None:
        arrays = {k: v for k, v in vars(self).items() if v is not None}
        np.savez(path, **arrays)

    @classmethod
    def from_npz(cls, path) -> "TrainingSet":
        with np.load(path) as f:
            return cls(**{k: f[k] for k in f.files})


def as_training_set(batch) -> TrainingSet:
    if isinstance(batch, TrainingSet):
        return batch
    return TrainingSet.from_records(batch)

"""Ordinary least squares through the normal equations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch, SingularSystem

RIDGE = 1e-8
REFINE_STEPS = 3


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float

    def predict(self, features) -> np.ndarray:
        return np.asarray(features, dtype=float) @ self.weights + self.intercept


def fit_linear(features, targets, ridge: float = RIDGE) -> LinearModel:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(targets, dtype=float).ravel()
    n, k = X.shape
    if len(y) != n:
        raise ShapeMismatch(f"{n} feature rows but {len(y)} targets")
    if n < k + 1:
        raise SingularSystem(f"need at least {k + 1} rows for {k} features, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ShapeMismatch("features and targets must be finite")
    A = np.hstack([X, np.ones((n, 1))])
    gram = A.T @ A + ridge * np.eye(k + 1)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("normal equations are singular") from exc
    if np.linalg.cond(gram) > 1e15:
        raise SingularSystem("normal equations are numerically singular")

    def solve(rhs):
        return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))

    rhs = A.T @ y
    beta = solve(rhs)
    # the jitter only stabilises the factorisation; refinement removes its bias
    for _ in range(REFINE_STEPS):
        beta = beta + solve(rhs - A.T @ (A @ beta))
    return LinearModel(beta[:k], float(beta[k]))

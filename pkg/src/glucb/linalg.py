"""Regularized design matrix with an incrementally maintained inverse.

The state tracks ``V = lambda * I + sum_s x_s x_s^T`` together with its
inverse (Sherman-Morrison rank-one updates) and its log-determinant. The
inverse is rebuilt from ``V`` every ``refresh_interval`` updates so that
round-off never accumulates past the 1e-8 residual budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_REFRESH_INTERVAL = 1000
RESIDUAL_TOL = 1e-8


def _as_vector(x, dim: int, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != dim:
        raise ValueError(f"{name} must be a vector of length {dim}, got shape {v.shape}")
    return v


@dataclass
class SpdState:
    """Design matrix ``V``, its inverse and ``log det V``.

    Mutate through :meth:`update`; use :func:`rank_one_update` for a
    copy-on-write variant.
    """

    dim: int
    lam: float
    V: np.ndarray
    V_inv: np.ndarray
    log_det: float
    updates_since_refresh: int = 0
    refresh_interval: int = DEFAULT_REFRESH_INTERVAL
    n_updates: int = field(default=0)

    def copy(self) -> "SpdState":
        return SpdState(
            dim=self.dim,
            lam=self.lam,
            V=self.V.copy(),
            V_inv=self.V_inv.copy(),
            log_det=self.log_det,
            updates_since_refresh=self.updates_since_refresh,
            refresh_interval=self.refresh_interval,
            n_updates=self.n_updates,
        )

    def update(self, x) -> None:
        x = _as_vector(x, self.dim)
        p = self.V_inv @ x
        denom = 1.0 + x @ p
        self.V += np.outer(x, x)
        self.V_inv -= np.outer(p, p) / denom
        self.V_inv = 0.5 * (self.V_inv + self.V_inv.T)
        self.log_det += np.log(denom)
        self.updates_since_refresh += 1
        self.n_updates += 1
        if self.updates_since_refresh >= self.refresh_interval:
            self.refresh()

    def refresh(self) -> None:
        """Recompute the inverse and log-determinant directly from ``V``."""
        self.V = 0.5 * (self.V + self.V.T)
        chol = np.linalg.cholesky(self.V)
        eye = np.eye(self.dim)
        lower_inv = np.linalg.solve(chol, eye)
        self.V_inv = lower_inv.T @ lower_inv
        self.log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        self.updates_since_refresh = 0

    def residual(self) -> float:
        """Max-abs entry of ``V @ V_inv - I``."""
        return float(np.max(np.abs(self.V @ self.V_inv - np.eye(self.dim))))

    def check(self, tol: float = RESIDUAL_TOL) -> None:
        """Refresh if the identity residual has drifted past ``tol``."""
        if self.residual() > tol:
            self.refresh()


def init(d: int, lam: float, refresh_interval: int = DEFAULT_REFRESH_INTERVAL) -> SpdState:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    if refresh_interval < 1:
        raise ValueError("refresh_interval must be >= 1")
    d = int(d)
    lam = float(lam)
    return SpdState(
        dim=d,
        lam=lam,
        V=lam * np.eye(d),
        V_inv=np.eye(d) / lam,
        log_det=d * np.log(lam),
        refresh_interval=int(refresh_interval),
    )


def rank_one_update(state: SpdState, x) -> SpdState:
    """Return a new state with ``x x^T`` added to ``V``."""
    new = state.copy()
    new.update(x)
    return new


def quad_form(state: SpdState, y) -> float:
    """``y^T V^{-1} y``, i.e. the squared ``V^{-1}``-norm of ``y``."""
    y = _as_vector(y, state.dim, "y")
    return max(float(y @ state.V_inv @ y), 0.0)


def whitened_score(state: SpdState, x, y) -> float:
    """``|x^T V^{-1} y| / sqrt(1 + x^T V^{-1} x)``.

    Measures how much pulling ``x`` shrinks the ``V^{-1}``-norm of ``y``.
    """
    x = _as_vector(x, state.dim)
    y = _as_vector(y, state.dim, "y")
    p = state.V_inv @ x
    return abs(float(p @ y)) / np.sqrt(1.0 + max(float(p @ x), 0.0))


def quad_forms(state: SpdState, Y: np.ndarray) -> np.ndarray:
    """Row-wise :func:`quad_form` for a ``(n, d)`` array."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != state.dim:
        raise ValueError(f"expected shape (n, {state.dim}), got {Y.shape}")
    return np.maximum(np.einsum("ij,jk,ik->i", Y, state.V_inv, Y), 0.0)


def whitened_scores(state: SpdState, X: np.ndarray, y) -> np.ndarray:
    """:func:`whitened_score` of every row of ``X`` against one direction ``y``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != state.dim:
        raise ValueError(f"expected shape (n, {state.dim}), got {X.shape}")
    y = _as_vector(y, state.dim, "y")
    P = X @ state.V_inv
    num = np.abs(P @ y)
    return num / np.sqrt(1.0 + np.maximum(np.einsum("ij,ij->i", P, X), 0.0))

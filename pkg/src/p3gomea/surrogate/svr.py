"""Epsilon-insensitive support vector regression trained with SMO."""

from __future__ import annotations

from typing import Optional

import numba
import numpy as np

from .base import DimensionMismatch

KERNELS = ("rbf", "sigmoid")


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "rbf":
        sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if kernel == "sigmoid":
        return np.tanh(gamma * (a @ b.T))
    raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


@numba.njit(cache=True)
def _smo(K, y, C, eps, tol, max_iter):
    """Maximal-violating-pair SMO on the 2n-variable SVR dual.

    Variables 0..n-1 are alpha (label +1), n..2n-1 are alpha* (label -1). The
    dual is min 1/2 b'Qb + p'b with Q_st = y_s y_t K[s%n, t%n],
    p = [eps - y, eps + y], sum_t y_t b_t = 0, 0 <= b <= C.
    Returns (coef, rho, iterations); prediction is coef @ k(x) - rho.
    """
    n = K.shape[0]
    m = 2 * n
    beta = np.zeros(m)
    sgn = np.empty(m)
    G = np.empty(m)
    for t in range(n):
        sgn[t] = 1.0
        sgn[t + n] = -1.0
        G[t] = eps - y[t]
        G[t + n] = eps + y[t]

    it = 0
    while it < max_iter:
        # i: argmax over I_up of -y G, j: argmin over I_low of -y G (lowest index on ties)
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(m):
            v = -sgn[t] * G[t]
            if (sgn[t] > 0 and beta[t] < C) or (sgn[t] < 0 and beta[t] > 0):
                if v > gmax:
                    gmax = v
                    i = t
            if (sgn[t] > 0 and beta[t] > 0) or (sgn[t] < 0 and beta[t] < C):
                if v < gmin:
                    gmin = v
                    j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            break
        ii = i % n
        jj = j % n
        curv = K[ii, ii] + K[jj, jj] - 2.0 * K[ii, jj]
        if curv <= 1e-12:
            curv = 1e-12
        step = (gmax - gmin) / curv
        # keep both variables inside the box
        if sgn[i] > 0:
            step = min(step, C - beta[i])
        else:
            step = min(step, beta[i])
        if sgn[j] > 0:
            step = min(step, beta[j])
        else:
            step = min(step, C - beta[j])
        beta[i] += sgn[i] * step
        beta[j] -= sgn[j] * step
        for t in range(m):
            tt = t % n
            G[t] += sgn[t] * step * (K[tt, ii] - K[tt, jj])
        it += 1

    # rho from free variables, midpoint of the feasible interval otherwise
    total = 0.0
    nfree = 0
    ub = np.inf
    lb = -np.inf
    for t in range(m):
        yg = sgn[t] * G[t]
        if 0 < beta[t] < C:
            total += yg
            nfree += 1
        elif (beta[t] >= C and sgn[t] < 0) or (beta[t] <= 0 and sgn[t] > 0):
            ub = min(ub, yg)
        else:
            lb = max(lb, yg)
    if nfree > 0:
        rho = total / nfree
    else:
        rho = (ub + lb) / 2.0
    coef = beta[:n] - beta[n:]
    return coef, rho, it


class SVR:
    """Support vector regressor; ``gamma=None`` means ``1 / n_features``."""

    def __init__(
        self,
        kernel: str = "rbf",
        C: float = 1.0,
        epsilon: float = 0.1,
        gamma: Optional[float] = None,
        tol: float = 1e-3,
        max_iter: int = 1_000_000,
    ):
        if kernel not in KERNELS:
            raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
        self.kernel = kernel
        self.C = C
        self.epsilon = epsilon
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y) -> "SVR":
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        # canonical sample order makes the fit independent of input order
        order = np.lexsort((y,) + tuple(X.T[::-1]))
        X, y = X[order], y[order]
        self.n_features_ = X.shape[1]
        self.gamma_ = self.gamma if self.gamma is not None else 1.0 / self.n_features_
        K = kernel_matrix(X, X, self.kernel, self.gamma_)
        coef, rho, self.n_iter_ = _smo(K, y, self.C, self.epsilon, self.tol, self.max_iter)
        support = np.abs(coef) > 0
        self.support_vectors_ = X[support]
        self._sv_sq = (self.support_vectors_**2).sum(axis=1)
        self.dual_coef_ = coef[support]
        self.intercept_ = -rho
        return self

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_:
            raise DimensionMismatch(f"expected {self.n_features_} features, got {X.shape[1]}")
        if len(self.dual_coef_) == 0:
            return np.full(len(X), self.intercept_)
        cross = X @ self.support_vectors_.T
        if self.kernel == "rbf":
            sq = (X * X).sum(axis=1)[:, None] + self._sv_sq[None, :] - 2.0 * cross
            K = np.exp(-self.gamma_ * np.maximum(sq, 0.0))
        else:
            K = np.tanh(self.gamma_ * cross)
        return K @ self.dual_coef_ + self.intercept_

"""Instance-dependent complexity ``H_G`` and the oracle allocation ``w*``.

    H_G = min_{w in simplex} max_{a != a*} ||x_a - x_{a*}||^2_{W(w)^-1} / gap_a^2,
    W(w) = sum_a w_a x_a x_a^T

The solver works with the reciprocal pieces ``r_a(w) = gap_a^2 / q_a(w)``
(``q_a`` the quadratic form), which are concave, smooth and bounded on the
simplex, and maximizes ``min_a r_a`` so that ``H_G = 1 / max_w min_a r_a``.
An SQP solve gives a near-optimal point; conditional-gradient steps (LP
direction plus line search) polish it. Every evaluated tangent plane of a
concave piece over-estimates it, so the LP over the collected planes bounds
``max min r_a`` from above and ``H_G`` from below: ``fw_gap`` is the
distance from the returned value to that bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from .env import Instance, best_arm, gaps, three_arm

RIDGE = 1e-10


@dataclass
class LowerBoundResult:
    h_g: float
    w_star: np.ndarray
    fw_gap: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "h_g": self.h_g,
            "w_star": [float(v) for v in self.w_star],
            "fw_gap": self.fw_gap,
            "iterations": self.iterations,
            "converged": self.converged,
        }


class _Problem:
    """Suboptimal-arm differences and squared gaps for one instance."""

    def __init__(self, instance: Instance):
        g = gaps(instance)
        star = best_arm(instance)
        others = np.array([a for a in range(instance.K) if a != star])
        if np.any(g[others] <= 0):
            raise ValueError("instance has a zero gap; H_G is undefined")
        self.X = instance.arms
        self.Y = instance.arms[others] - instance.arms[star]
        self.gap2 = g[others] ** 2
        self.K = instance.K
        self.d = instance.d

    def _w_inv(self, w: np.ndarray) -> np.ndarray:
        W = (self.X.T * w) @ self.X + RIDGE * np.eye(self.d)
        return np.linalg.inv(W)

    def values(self, w: np.ndarray) -> np.ndarray:
        Winv = self._w_inv(w)
        q = np.einsum("ij,jk,ik->i", self.Y, Winv, self.Y)
        return q / self.gap2

    def value(self, w: np.ndarray) -> float:
        return float(self.values(w).max())

    def values_and_grads(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # d/dw_i  y^T W^-1 y = -(y^T W^-1 x_i)^2
        Winv = self._w_inv(w)
        Z = self.Y @ Winv
        q = np.einsum("ij,ij->i", Z, self.Y)
        grads = -((Z @ self.X.T) ** 2)
        return q / self.gap2, grads / self.gap2[:, None]


def _check_simplex(w, K: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (K,):
        raise ValueError(f"weights must have length {K}, got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12 * K:
        raise ValueError("weights must lie on the probability simplex")
    return w


def objective(instance: Instance, w) -> float:
    """Max over suboptimal arms of the gap-normalized ``W^-1`` quadratic form."""
    prob = _Problem(instance)
    return prob.value(_check_simplex(w, instance.K))


def _recip(prob: _Problem, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, grads = prob.values_and_grads(w)
    return 1.0 / vals, -grads / vals[:, None] ** 2


def _cut_model_max(cuts: list, K: int) -> tuple[float, np.ndarray]:
    """``max_s min_(planes) plane(s)`` over the simplex; returns value and maximizer."""
    H = np.concatenate([c[0] for c in cuts])
    G = np.vstack([c[1] for c in cuts])
    offs = np.concatenate([c[0] - c[1] @ c[2] for c in cuts])
    cost = np.zeros(K + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([-G, np.ones((len(H), 1))])
    A_eq = np.zeros((1, K + 1))
    A_eq[0, :K] = 1.0
    bounds = [(0.0, None)] * K + [(None, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=offs, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"linear subproblem failed: {res.message}")
    s = np.clip(res.x[:K], 0.0, None)
    return -float(res.fun), s / s.sum()


def _sqp(prob: _Problem, w0: np.ndarray, maxiter: int) -> tuple[np.ndarray, int]:
    K, A = prob.K, len(prob.gap2)
    z0 = np.append(w0, _recip(prob, w0)[0].min())
    constraints = [
        {
            "type": "ineq",
            "fun": lambda z: _recip(prob, z[:-1])[0] - z[-1],
            "jac": lambda z: np.hstack([_recip(prob, z[:-1])[1], -np.ones((A, 1))]),
        },
        {
            "type": "eq",
            "fun": lambda z: z[:-1].sum() - 1.0,
            "jac": lambda z: np.append(np.ones(K), 0.0),
        },
    ]
    res = minimize(
        lambda z: -z[-1],
        z0,
        jac=lambda z: np.append(np.zeros(K), -1.0),
        constraints=constraints,
        bounds=[(0.0, 1.0)] * K + [(0.0, None)],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": maxiter},
    )
    w = np.clip(res.x[:-1], 0.0, None)
    if not np.all(np.isfinite(w)) or w.sum() <= 0:
        return w0, max(int(res.nit), 1)
    w = w / w.sum()
    # SQP can end on a worse point than it started from
    if _recip(prob, w)[0].min() < _recip(prob, w0)[0].min():
        w = w0
    return w, max(int(res.nit), 1)


MAX_CUTS = 400
POLISH_STEPS = 50
STALL_STEPS = 30
CUT_SHRINK = 1e-3


def solve_hg(instance: Instance, tol: float = 1e-6, max_iter: int = 100_000) -> LowerBoundResult:
    """Minimize the complexity objective over the simplex.

    Stops once the certified gap is at most ``tol * h_g``. If ``max_iter``
    iterations pass first, the best iterate is returned with
    ``converged=False``.
    """
    prob = _Problem(instance)
    K = prob.K
    w = np.full(K, 1.0 / K)
    cuts: list = []
    upper = np.inf
    converged = False
    it = 0
    previous = np.inf
    while it < max_iter and not converged:
        w, nit = _sqp(prob, w, min(500, max_iter - it))
        it += nit
        stalled = 0
        for k in range(1, POLISH_STEPS + 1):
            r, dr = _recip(prob, w)
            cuts.append((r, dr, w.copy()))
            del cuts[:-MAX_CUTS]
            model, s = _cut_model_max(cuts, K)
            # a bound below the current value means inaccurate planes, not a certificate
            if model >= r.min() * (1.0 - 1e-7):
                upper = min(upper, model)
            g = 1.0 / r.min()
            if g - 1.0 / upper <= tol * g:
                converged = True
                break
            if it >= max_iter:
                break
            it += 1
            direction = s - w

            def neg_min(gamma, w=w, direction=direction):
                return -_recip(prob, w + gamma * direction)[0].min()

            line = minimize_scalar(neg_min, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
            gamma_fixed = 2.0 / (k + 2.0)
            val, gamma = min((line.fun, line.x), (neg_min(gamma_fixed), gamma_fixed))
            if -val <= r.min():
                # no ascent along the LP direction: the model is loose, so cut
                # it where it is loosest (the LP point and toward it) instead
                stalled += 1
                if stalled > STALL_STEPS:
                    break
                for frac in (1.0, 0.5 ** stalled):
                    # nudged inside so W stays well conditioned and the plane is accurate
                    p = (1.0 - CUT_SHRINK) * (w + frac * direction) + CUT_SHRINK / K
                    cuts.append((*_recip(prob, p), p))
                continue
            stalled = 0
            w = np.clip(w + gamma * direction, 0.0, None)
            w /= w.sum()
        current = prob.value(w)
        if not converged and current >= previous:
            break
        previous = current
    g = prob.value(w)
    return LowerBoundResult(
        h_g=g,
        w_star=w,
        fw_gap=max(g - 1.0 / upper, 0.0),
        iterations=it,
        converged=converged,
    )


def sample_lower_bound(h_g: float, delta: float) -> float:
    """Expected-sample-count lower bound ``h_g * log(1 / (2.4 delta))``."""
    if not 0.0 < delta < 0.15:
        raise ValueError(f"delta must lie in (0, 0.15), got {delta!r}")
    return h_g * math.log(1.0 / (2.4 * delta))


def closed_form_three_arm_lb(omega: float) -> float:
    """``(1 + sin w / gap)^2`` with ``gap = 1 - cos w``, for the three-arm instance."""
    three_arm(omega)  # validates omega
    gap = 1.0 - math.cos(omega)
    r = math.sin(omega) / gap
    return 1.0 + 2.0 * r + r * r


def mab_sandwich(instance: Instance) -> tuple[float, float]:
    """``(sum 1/gap^2, 2 sum 1/gap^2)`` for a standard-basis instance.

    The best arm contributes with the smallest positive gap.
    """
    g = gaps(instance)
    star = best_arm(instance)
    g = g.copy()
    g[star] = np.min(np.delete(g, star))
    total = float(np.sum(1.0 / g**2))
    return total, 2.0 * total

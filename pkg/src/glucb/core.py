"""GLUCB: best-arm identification for linear bandits.

Each round forms the confidence ellipsoid ``{theta : ||theta - theta_t||_V <= beta}``,
takes the empirical best arm ``h``, and computes for every other arm its
*advantage*: the largest reward edge over ``h`` any parameter in the
ellipsoid allows. If all advantages are negative the run stops and
recommends ``h``. Otherwise the arm with the largest advantage is the
challenger ``l``, and the arm pulled is the one whose rank-one update shrinks
``||x_h - x_l||_{V^-1}`` the most.

The functions in this module are the reference implementation of every
step. :func:`run_glucb` and :func:`run_static` dispatch to a compiled loop
(:mod:`glucb._kernel`) by default and to :func:`_run_python` with
``engine="python"``; both consume the random streams identically.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .env import Instance, best_arm, pull

TIE_RTOL = 1e-12
DEFAULT_MAX_STEPS = 10_000_000


class RadiusMode(str, enum.Enum):
    DET = "det"
    SIMPLE = "simple"


class Termination(str, enum.Enum):
    STOPPED = "stopped"
    MAX_STEPS = "max_steps_exceeded"


@dataclass(frozen=True)
class ConfidenceParams:
    R: float = 1.0
    S: float = 2.0
    delta: float = 0.05
    lam: float = 1.0
    radius_mode: RadiusMode = RadiusMode.DET

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        for name in ("R", "S", "lam"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        object.__setattr__(self, "radius_mode", RadiusMode(self.radius_mode))


def radius_det(log_det: float, d: int, params: ConfidenceParams) -> float:
    """Self-normalized radius from the log-determinant of ``V``."""
    excess = max(0.5 * log_det - 0.5 * d * math.log(params.lam), 0.0)
    return params.R * math.sqrt(2.0 * (excess - math.log(params.delta))) + math.sqrt(
        params.lam
    ) * params.S


def radius_simple(t: int, params: ConfidenceParams, d: int) -> float:
    """``R * sqrt(d * log(t / delta))``."""
    if t < 1 or t / params.delta <= 1.0:
        raise ValueError(f"need t >= 1 and t/delta > 1, got t={t}, delta={params.delta}")
    return params.R * math.sqrt(d * math.log(t / params.delta))


def _radius(spd: linalg.SpdState, t: int, params: ConfidenceParams) -> float:
    if params.radius_mode is RadiusMode.DET:
        return radius_det(spd.log_det, spd.dim, params)
    return radius_simple(max(t, 1), params, spd.dim)


@dataclass
class RunState:
    spd: linalg.SpdState
    b: np.ndarray
    theta_hat: np.ndarray
    t: int
    pull_counts: np.ndarray
    beta: float

    @classmethod
    def initial(cls, d: int, K: int, params: ConfidenceParams) -> "RunState":
        spd = linalg.init(d, params.lam)
        return cls(
            spd=spd,
            b=np.zeros(d),
            theta_hat=np.zeros(d),
            t=0,
            pull_counts=np.zeros(K, dtype=np.int64),
            beta=_radius(spd, 0, params),
        )


@dataclass
class StopReport:
    tau: int
    recommended: int
    correct: bool
    terminated: Termination
    pull_counts: np.ndarray
    wall_time: float  # seconds


@dataclass
class Trace:
    """Per-pull record: step, best arm, challenger, pulled arm, radius, max advantage."""

    t: np.ndarray
    h: np.ndarray
    l: np.ndarray
    c: np.ndarray
    beta: np.ndarray
    max_advantage: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "Trace":
        return cls(
            t=np.arange(n, dtype=np.int64),
            h=np.full(n, -1, dtype=np.int64),
            l=np.full(n, -1, dtype=np.int64),
            c=np.full(n, -1, dtype=np.int64),
            beta=np.full(n, np.nan),
            max_advantage=np.full(n, np.nan),
        )

    def truncate(self, n: int) -> "Trace":
        return Trace(*(getattr(self, f)[:n] for f in ("t", "h", "l", "c", "beta", "max_advantage")))

    def __len__(self) -> int:
        return len(self.t)


def _arms(arms) -> np.ndarray:
    return arms.arms if hasattr(arms, "arms") else np.asarray(arms, dtype=np.float64)


def _first_near_max(values: np.ndarray) -> int:
    m = values.max()
    return int(np.flatnonzero(values >= m - TIE_RTOL * abs(m))[0])


# single-step operations -------------------------------------------------------


def observe(state: RunState, a: int, y: float, arms, params: ConfidenceParams) -> RunState:
    """Fold reward ``y`` from arm ``a`` into the state (in place) and return it."""
    X = _arms(arms)
    if not 0 <= a < X.shape[0]:
        raise IndexError(f"arm index {a} out of range [0, {X.shape[0]})")
    x = X[a]
    state.spd.update(x)
    state.b += y * x
    state.theta_hat = state.spd.V_inv @ state.b
    state.t += 1
    state.pull_counts[a] += 1
    state.beta = _radius(state.spd, state.t, params)
    return state


def current_best(state: RunState, arms) -> int:
    """Empirical best arm; near-ties go to the lowest index."""
    return _first_near_max(_arms(arms) @ state.theta_hat)


def advantage(state: RunState, a: int, h: int, arms) -> float:
    """Largest ``theta^T (x_a - x_h)`` over the confidence ellipsoid."""
    if a == h:
        raise ValueError("advantage needs two distinct arm indices")
    X = _arms(arms)
    diff = X[a] - X[h]
    return float(state.theta_hat @ diff) + state.beta * math.sqrt(linalg.quad_form(state.spd, diff))


def advantages(state: RunState, h: int, arms) -> np.ndarray:
    """Advantage of every arm against ``h``; entry ``h`` is ``-inf``."""
    X = _arms(arms)
    diffs = X - X[h]
    adv = diffs @ state.theta_hat + state.beta * np.sqrt(linalg.quad_forms(state.spd, diffs))
    adv[h] = -np.inf
    return adv


def closest_arm(state: RunState, h: int, arms) -> int:
    return _first_near_max(advantages(state, h, arms))


def selection_scores(state: RunState, h: int, l: int, arms) -> np.ndarray:
    X = _arms(arms)
    return linalg.whitened_scores(state.spd, X, X[h] - X[l])


def select_arm(state: RunState, h: int, l: int, arms, rng: np.random.Generator) -> int:
    """Arm whose pull most reduces ``||x_h - x_l||_{V^-1}``; ties drawn uniformly."""
    if h == l:
        raise ValueError("select_arm needs h != l")
    scores = selection_scores(state, h, l, arms)
    m = scores.max()
    tied = np.flatnonzero(scores >= m - TIE_RTOL * m)
    if len(tied) == 1:
        return int(tied[0])
    k = min(int(rng.random() * len(tied)), len(tied) - 1)
    return int(tied[k])


def should_stop(state: RunState, arms) -> bool:
    h = current_best(state, arms)
    return bool(advantages(state, h, arms).max() < 0.0)


def potential_two_arm(state: RunState, arms) -> float:
    """``||x_1 - x_2||^2_{V^-1}`` for a two-arm problem."""
    X = _arms(arms)
    if X.shape[0] != 2:
        raise ValueError(f"potential is defined for K = 2, got K = {X.shape[0]}")
    return linalg.quad_form(state.spd, X[0] - X[1])


def tracking_arm(weights: np.ndarray, counts: np.ndarray, t: int) -> int:
    """Arm furthest behind its target share ``w_a * (t + 1)``."""
    deficit = weights * (t + 1) - counts
    return int(np.argmax(deficit))


# full runs --------------------------------------------------------------------


def _split_streams(rng: np.random.Generator) -> tuple[np.random.Generator, np.random.Generator]:
    noise_rng, tie_rng = rng.spawn(2)
    return noise_rng, tie_rng


def _check_weights(weights, K: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (K,):
        raise ValueError(f"weights must have length {K}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must lie on the probability simplex")
    return w


def _run_python(instance, params, rng, max_steps, stopping, trace, weights):
    X = instance.arms
    noise_rng, tie_rng = _split_streams(rng)
    state = RunState.initial(instance.d, instance.K, params)
    rows = [] if trace else None
    terminated = Termination.MAX_STEPS
    while True:
        h = current_best(state, X)
        adv = advantages(state, h, X)
        max_adv = float(adv.max())
        if stopping and max_adv < 0.0:
            terminated = Termination.STOPPED
            break
        if state.t >= max_steps:
            break
        l = _first_near_max(adv)
        if weights is None:
            c = select_arm(state, h, l, X, tie_rng)
        else:
            c = tracking_arm(weights, state.pull_counts, state.t)
        if rows is not None:
            rows.append((h, l, c, state.beta, max_adv))
        y = pull(instance, c, noise_rng)
        observe(state, c, y, X, params)
    tr = None
    if rows is not None:
        tr = Trace.empty(len(rows))
        if rows:
            cols = list(zip(*rows))
            tr.h[:], tr.l[:], tr.c[:] = cols[0], cols[1], cols[2]
            tr.beta[:], tr.max_advantage[:] = cols[3], cols[4]
    return state, h, terminated, tr


def _run(instance, params, rng, max_steps, stopping, trace, weights, engine):
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    start = time.perf_counter()
    if engine == "python":
        state, h, terminated, tr = _run_python(
            instance, params, rng, max_steps, stopping, trace, weights
        )
        counts, t = state.pull_counts, state.t
    elif engine == "numba":
        from ._kernel import run_compiled

        counts, t, h, stopped, tr = run_compiled(
            instance, params, rng, max_steps, stopping, trace, weights
        )
        terminated = Termination.STOPPED if stopped else Termination.MAX_STEPS
    else:
        raise ValueError(f"unknown engine {engine!r}")
    elapsed = time.perf_counter() - start
    if tr is not None:
        tr = tr.truncate(t)
    report = StopReport(
        tau=int(t),
        recommended=int(h),
        correct=bool(terminated is Termination.STOPPED and h == best_arm(instance)),
        terminated=terminated,
        pull_counts=np.asarray(counts, dtype=np.int64).copy(),
        wall_time=elapsed,
    )
    return report, tr


def run_glucb(
    instance: Instance,
    params: ConfidenceParams,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
    *,
    stopping: bool = True,
    trace: bool = False,
    engine: str = "numba",
) -> tuple[StopReport, Trace | None]:
    """Run GLUCB until it stops or ``max_steps`` pulls have been made.

    ``rng`` is split into a noise stream and a tie-breaking stream. With
    ``stopping=False`` the stopping rule is skipped and the run always
    lasts ``max_steps`` pulls. ``trace=True`` also returns the per-pull
    :class:`Trace`.
    """
    return _run(instance, params, rng, max_steps, stopping, trace, None, engine)


def run_static(
    instance: Instance,
    params: ConfidenceParams,
    weights,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
    *,
    stopping: bool = True,
    trace: bool = False,
    engine: str = "numba",
) -> StopReport:
    """Fixed-proportion allocation with GLUCB's stopping and recommendation rules.

    Arms are pulled deterministically, always the one furthest behind its
    target share. Returns the report only; pass ``trace=True`` to get
    ``(report, trace)``.
    """
    w = _check_weights(weights, instance.K)
    report, tr = _run(instance, params, rng, max_steps, stopping, trace, w, engine)
    return (report, tr) if trace else report

"""Linear bandit instances, reward draws and the synthetic instance generators.

Randomness comes from :func:`make_rng`, which builds a numpy ``Generator``
on the Philox4x64-10 counter-based bit generator, keyed by a
``SeedSequence(master_seed, spawn_key=(stream_index,))``. The same
``(master_seed, stream_index)`` pair reproduces the same draws on every
platform numpy supports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NORM_TOL = 1e-12
BEST_MARGIN = 1e-12
SPHERE_MAX_ATTEMPTS = 100


class ConstructionError(RuntimeError):
    """A randomized generator could not produce a valid instance."""


def make_rng(master_seed: int, stream_index: int = 0) -> np.random.Generator:
    """Deterministic Philox stream for one ``(master_seed, stream_index)`` pair."""
    if master_seed < 0 or stream_index < 0:
        raise ValueError("seed and stream index must be nonnegative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream_index),))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class ArmSet:
    arms: np.ndarray

    def __post_init__(self):
        arms = np.array(self.arms, dtype=np.float64)
        if arms.ndim != 2:
            raise ValueError("arms must be a 2-d array of shape (K, d)")
        if arms.shape[0] < 2:
            raise ValueError(f"need at least two arms, got {arms.shape[0]}")
        if arms.shape[1] < 1:
            raise ValueError("arm dimension must be positive")
        norms = np.linalg.norm(arms, axis=1)
        if np.any(norms > 1.0 + NORM_TOL):
            bad = int(np.argmax(norms))
            raise ValueError(f"arm {bad} has norm {norms[bad]:.17g} > 1")
        arms.setflags(write=False)
        object.__setattr__(self, "arms", arms)

    @property
    def K(self) -> int:
        return self.arms.shape[0]

    @property
    def d(self) -> int:
        return self.arms.shape[1]

    def __len__(self) -> int:
        return self.K

    def __getitem__(self, a: int) -> np.ndarray:
        return self.arms[a]


@dataclass(frozen=True)
class Instance:
    """Arm set plus the hidden parameter and Gaussian noise scale."""

    arm_set: ArmSet
    theta_star: np.ndarray
    noise_std: float = 1.0

    def __post_init__(self):
        if not isinstance(self.arm_set, ArmSet):
            object.__setattr__(self, "arm_set", ArmSet(self.arm_set))
        theta = np.array(self.theta_star, dtype=np.float64)
        if theta.shape != (self.arm_set.d,):
            raise ValueError(
                f"theta_star must have length {self.arm_set.d}, got shape {theta.shape}"
            )
        if not self.noise_std >= 0:
            raise ValueError("noise_std must be nonnegative")
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "noise_std", float(self.noise_std))
        means = self.means
        top = int(np.argmax(means))
        others = np.delete(means, top)
        if not np.all(means[top] - others > BEST_MARGIN):
            raise ValueError("best arm is not unique (margin <= 1e-12)")

    @classmethod
    def from_arrays(cls, arms, theta_star, noise_std: float = 1.0) -> "Instance":
        return cls(ArmSet(arms), theta_star, noise_std)

    @property
    def arms(self) -> np.ndarray:
        return self.arm_set.arms

    @property
    def K(self) -> int:
        return self.arm_set.K

    @property
    def d(self) -> int:
        return self.arm_set.d

    @property
    def means(self) -> np.ndarray:
        return self.arms @ self.theta_star


def pull(instance: Instance, a: int, rng: np.random.Generator) -> float:
    """One noisy reward ``theta*^T x_a + noise_std * N(0, 1)``."""
    if not 0 <= a < instance.K:
        raise IndexError(f"arm index {a} out of range [0, {instance.K})")
    mean = float(instance.arms[a] @ instance.theta_star)
    if instance.noise_std == 0.0:
        return mean
    return mean + instance.noise_std * float(rng.standard_normal())


def best_arm(instance: Instance) -> int:
    return int(np.argmax(instance.means))


def gaps(instance: Instance) -> np.ndarray:
    means = instance.means
    return means.max() - means


def min_gap(instance: Instance) -> float:
    g = gaps(instance)
    return float(np.min(np.delete(g, best_arm(instance))))


def _check_omega(omega: float) -> None:
    if not 0.0 < omega < math.pi / 2:
        raise ValueError(f"omega must lie in (0, pi/2), got {omega!r}")


def three_arm(omega: float, noise_std: float = 1.0) -> Instance:
    """``{e1, e2, (cos w, sin w)}`` with ``theta* = e1``."""
    _check_omega(omega)
    arms = np.array([[1.0, 0.0], [0.0, 1.0], [math.cos(omega), math.sin(omega)]])
    return Instance.from_arrays(arms, [1.0, 0.0], noise_std)


def gen_soare(d: int, omega: float = 0.1, noise_std: float = 1.0) -> Instance:
    """Canonical basis of R^d plus one arm at angle ``omega`` from ``e1``."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    _check_omega(omega)
    extra = np.zeros(d)
    extra[0], extra[1] = math.cos(omega), math.sin(omega)
    arms = np.vstack([np.eye(d), extra])
    theta = np.zeros(d)
    theta[0] = 1.0
    return Instance.from_arrays(arms, theta, noise_std)


def _sphere_theta(arms: np.ndarray, gamma: float) -> tuple[np.ndarray, int]:
    gram = arms @ arms.T
    np.fill_diagonal(gram, -np.inf)
    i, j = np.unravel_index(int(np.argmax(gram)), gram.shape)
    u, v = arms[i], arms[j]
    theta = u + gamma * (v - u)
    return theta, int(i)


def gen_sphere(
    d: int,
    K: int = 100,
    gamma: float = 0.01,
    rng: np.random.Generator | None = None,
    noise_std: float = 1.0,
    arms: np.ndarray | None = None,
) -> Instance:
    """Uniform arms on the unit sphere; ``theta*`` sits next to the closest pair.

    ``u, v`` is the pair of arms with the largest inner product and
    ``theta* = u + gamma * (v - u)``. Draws in which ``u`` is not the strict
    best arm are discarded and redrawn. Passing ``arms`` fixes the arm set
    (no redraws).
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if not 0.0 < gamma < 0.5:
        raise ValueError(f"gamma must lie in (0, 0.5), got {gamma!r}")
    if arms is not None:
        arms = np.asarray(arms, dtype=np.float64)
        theta, u = _sphere_theta(arms, gamma)
        inst = Instance.from_arrays(arms, theta, noise_std)
        if best_arm(inst) != u:
            raise ConstructionError("closest-pair arm u is not the best arm")
        return inst
    if rng is None:
        raise ValueError("rng is required when arms are not given")
    for _ in range(SPHERE_MAX_ATTEMPTS):
        g = rng.standard_normal((K, d))
        draw = g / np.linalg.norm(g, axis=1, keepdims=True)
        theta, u = _sphere_theta(draw, gamma)
        means = draw @ theta
        if np.all(np.delete(means[u] - means, u) > BEST_MARGIN):
            return Instance.from_arrays(draw, theta, noise_std)
    raise ConstructionError(f"no valid sphere instance after {SPHERE_MAX_ATTEMPTS} draws")


def gen_crowded(
    K: int,
    sigma: float = 0.3,
    rng: np.random.Generator | None = None,
    noise_std: float = 1.0,
    phis=None,
) -> Instance:
    """``e1``, the arm at ``3pi/4`` and ``K - 2`` arms jittered around ``pi/4``.

    Jitter angles are ``N(0, sigma^2)``; any draw whose reward would tie or
    beat ``e1`` is redrawn. ``phis`` overrides the random angles.
    """
    if K < 3:
        raise ValueError(f"K must be >= 3, got {K}")
    if phis is None:
        if rng is None:
            raise ValueError("rng is required when phis are not given")
        phis = rng.normal(0.0, sigma, K - 2)
        while True:
            bad = np.cos(math.pi / 4 + phis) >= 1.0 - BEST_MARGIN
            if not bad.any():
                break
            phis[bad] = rng.normal(0.0, sigma, int(bad.sum()))
    phis = np.asarray(phis, dtype=np.float64)
    if phis.shape != (K - 2,):
        raise ValueError(f"expected {K - 2} jitter angles, got shape {phis.shape}")
    ang = math.pi / 4 + phis
    arms = np.vstack(
        [
            [1.0, 0.0],
            [math.cos(3 * math.pi / 4), math.sin(3 * math.pi / 4)],
            np.column_stack([np.cos(ang), np.sin(ang)]),
        ]
    )
    return Instance.from_arrays(arms, [1.0, 0.0], noise_std)


def standard_basis(theta_star, noise_std: float = 1.0) -> Instance:
    """Unstructured K-armed bandit embedded as the standard basis of R^K."""
    theta = np.asarray(theta_star, dtype=np.float64)
    return Instance.from_arrays(np.eye(theta.shape[0]), theta, noise_std)


# instance files -------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _vec(v) -> str:
    return "[" + ", ".join(_fmt(x) for x in v) + "]"


def instance_to_text(instance: Instance) -> str:
    """JSON document with every real written to 17 significant digits."""
    rows = ",\n  ".join(_vec(row) for row in instance.arms)
    return (
        "{\n"
        f' "d": {instance.d},\n'
        f' "arms": [\n  {rows}\n ],\n'
        f' "theta_star": {_vec(instance.theta_star)},\n'
        f' "noise_std": {_fmt(instance.noise_std)}\n'
        "}\n"
    )


def dump_instance(instance: Instance, path) -> None:
    Path(path).write_text(instance_to_text(instance), encoding="utf-8")


def load_arms(path) -> tuple[np.ndarray, np.ndarray | None, float]:
    """Read an instance file; ``theta_star`` is ``None`` for arm-set-only files."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        d = int(data["d"])
        arms = np.asarray(data["arms"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed instance file {path}: {exc}") from exc
    if arms.ndim != 2 or arms.shape[1] != d:
        raise ValueError(f"malformed instance file {path}: arms do not match d={d}")
    theta = data.get("theta_star")
    theta = None if theta is None else np.asarray(theta, dtype=np.float64)
    return arms, theta, float(data.get("noise_std", 1.0))


def load_instance(path) -> Instance:
    arms, theta, noise_std = load_arms(path)
    if theta is None:
        raise ValueError(f"{path} holds an arm set only (no theta_star)")
    return Instance.from_arrays(arms, theta, noise_std)

"""Benchmark saddle problems and the continuous-time reference flows.

Shipped problems: a two-dimensional Huber-smoothed worst case (smoothness 1,
saddle at the origin), the Lagrangian of a linearly constrained QP with
banded constraint matrix, the scaled bilinear coupling, and a seeded family
of random monotone linear operators.  The two flows for L(x, y) = x y — the
resolvent-regularized flow and the anchored flow — have exact closed forms,
which the fixed-step RK4 integrator must reproduce; each side serves as the
oracle for the other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import ContractError, NumericalDivergenceError, Point, SaddleProblem

__all__ = [
    "HuberSaddleParams",
    "make_huber_saddle",
    "make_ouyang_qp",
    "make_bilinear",
    "make_random_monotone",
    "FlowKind",
    "FlowSpec",
    "flow_closed_form",
    "FlowTrajectory",
    "integrate_flow",
    "load_preset",
    "preset_names",
    "PRESET_STEP_SIZES",
]


@dataclass(frozen=True)
class HuberSaddleParams:
    """Parameters of the Huber-smoothed 2-d saddle; requires 0 < eps < delta < 1."""

    delta: float = 1e-2
    epsilon: float = 5e-5

    def __post_init__(self) -> None:
        if not 0 < self.delta < 1:
            raise ContractError("delta must lie in (0, 1)")
        if not 0 < self.epsilon < self.delta:
            raise ContractError("epsilon must lie in (0, delta)")
        if self.epsilon >= self.delta / 10:
            warnings.warn(
                "epsilon is not << delta; the bilinear approximation is poor",
                RuntimeWarning,
                stacklevel=3,
            )


def _huber(u: float, eps: float) -> float:
    return eps * abs(u) - 0.5 * eps * eps if abs(u) >= eps else 0.5 * u * u


def _huber_grad(u: float, eps: float) -> float:
    # continuous at |u| = eps (eps * sign(u) = u), so the branch choice there
    # is immaterial
    return eps * math.copysign(1.0, u) if abs(u) >= eps else u


def make_huber_saddle(params: HuberSaddleParams | None = None) -> SaddleProblem:
    """(1-delta) f_eps(x) + delta x y - (1-delta) f_eps(y); smoothness 1."""
    p = params if params is not None else HuberSaddleParams()
    d, e = p.delta, p.epsilon

    def op(z: np.ndarray) -> np.ndarray:
        x, y = z[0], z[1]
        return np.array(
            [(1 - d) * _huber_grad(x, e) + d * y, -d * x + (1 - d) * _huber_grad(y, e)]
        )

    def val(z: np.ndarray) -> float:
        x, y = z[0], z[1]
        return (1 - d) * _huber(x, e) + d * x * y - (1 - d) * _huber(y, e)

    return SaddleProblem(
        name="huber-saddle",
        dim_x=1,
        dim_y=1,
        operator=op,
        lipschitz=1.0,
        saddle_point=Point(np.zeros(2), 1),
        value=val,
        metadata={"delta": d, "epsilon": e},
    )


def ouyang_matrices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The banded constraint data A, b, h and curvature H = 2 A^T A."""
    if n < 2:
        raise ContractError("n must be >= 2")
    A = np.zeros((n, n))
    for i in range(n - 1):
        A[i, n - 2 - i] = -0.25
        A[i, n - 1 - i] = 0.25
    A[n - 1, 0] = 0.25
    b = np.full(n, 0.25)
    h = np.zeros(n)
    h[n - 1] = 0.25
    H = 2 * A.T @ A
    return A, b, h, H


def make_ouyang_qp(n: int = 200) -> SaddleProblem:
    """Lagrangian of a linearly constrained QP: L = x'Hx/2 - h'x - <Ax-b, y>.

    ||A|| <= 1/2 and ||H|| <= 1/2, so the saddle operator is 1-smooth; the
    declared constant is 1. The saddle point solves A x = b (x = (1, ..., n))
    and A^T y = H x - h.
    """
    A, b, h, H = ouyang_matrices(n)
    xs = np.linalg.solve(A, b)
    ys = np.linalg.solve(A.T, H @ xs - h)

    def op(z: np.ndarray) -> np.ndarray:
        x, y = z[:n], z[n:]
        return np.concatenate([H @ x - h - A.T @ y, A @ x - b])

    def val(z: np.ndarray) -> float:
        x, y = z[:n], z[n:]
        return float(0.5 * x @ (H @ x) - h @ x - (A @ x - b) @ y)

    return SaddleProblem(
        name=f"ouyang-qp-{n}",
        dim_x=n,
        dim_y=n,
        operator=op,
        lipschitz=1.0,
        saddle_point=Point(np.concatenate([xs, ys]), n),
        value=val,
        metadata={"n": n},
    )


def make_bilinear(scale: float = 1.0) -> SaddleProblem:
    """L(x, y) = scale * x y on R x R; the operator is a scaled rotation."""
    if not scale > 0:
        raise ContractError("scale must be > 0")

    def op(z: np.ndarray) -> np.ndarray:
        return np.array([scale * z[1], -scale * z[0]])

    return SaddleProblem(
        name="bilinear",
        dim_x=1,
        dim_y=1,
        operator=op,
        lipschitz=scale,
        saddle_point=Point(np.zeros(2), 1),
        value=lambda z: float(scale * z[0] * z[1]),
        metadata={"scale": scale},
    )


def _monotone_linear_problem(
    P1: np.ndarray, P2: np.ndarray, C: np.ndarray, v: np.ndarray, R: float, name: str
) -> SaddleProblem:
    """Affine monotone operator z -> M z + v with M = [[P1, C], [-C', P2]].

    P1, P2 must be positive semidefinite; the skew coupling contributes
    nothing to <Mz, z>, so the operator is monotone. M is rescaled to
    spectral norm R exactly (power iteration would only approach the norm
    from below, which could push the true constant past the declared one).
    """
    nx, ny = P1.shape[0], P2.shape[0]
    M = np.block([[P1, C], [-C.T, P2]])
    nrm = np.linalg.norm(M, 2)
    if nrm == 0:
        raise ContractError("operator matrix is zero")
    M = M * (R / nrm)
    try:
        zs = np.linalg.solve(M, -v)
        if np.linalg.norm(M @ zs + v) > 1e-10 * max(1.0, R * np.linalg.norm(zs)):
            raise np.linalg.LinAlgError("inaccurate solve")
        saddle = Point(zs, nx)
    except np.linalg.LinAlgError as exc:
        raise ContractError(f"operator matrix is singular; no recorded saddle ({exc})")

    def op(z: np.ndarray) -> np.ndarray:
        return M @ z + v

    def val(z: np.ndarray) -> float:
        x, y = z[:nx], z[nx:]
        vx, vy = v[:nx], v[nx:]
        s = R / nrm
        return float(
            0.5 * s * x @ (P1 @ x) + s * x @ (C @ y) - 0.5 * s * y @ (P2 @ y)
            + vx @ x - vy @ y
        )

    return SaddleProblem(
        name=name,
        dim_x=nx,
        dim_y=ny,
        operator=op,
        lipschitz=R,
        saddle_point=saddle,
        value=val,
        metadata={"matrix": M, "offset": v},
    )


def make_random_monotone(n: int, R: float = 1.0, seed: int = 0) -> SaddleProblem:
    """Random monotone linear saddle operator on R^n x R^n with norm R.

    Diagonal blocks are random Gram matrices, the coupling block is dense
    Gaussian. If the matrix comes out singular with an incompatible offset
    (no saddle exists), the draw is retried with a shifted seed.
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    attempt = seed
    while True:
        rng = np.random.default_rng(attempt)
        G1 = rng.normal(size=(n, n))
        G2 = rng.normal(size=(n, n))
        P1 = G1 @ G1.T / n
        P2 = G2 @ G2.T / n
        C = rng.normal(size=(n, n))
        v = rng.normal(size=2 * n)
        try:
            return _monotone_linear_problem(
                P1, P2, C, v, R, f"random-monotone-{n}-{seed}"
            )
        except ContractError:
            attempt += 10_000


# ---------------------------------------------------------------------------
# continuous-time flows for L(x, y) = x y
# ---------------------------------------------------------------------------


class FlowKind(str, Enum):
    MOREAU_YOSIDA = "moreau-yosida"
    ANCHORED = "anchored"


@dataclass(frozen=True)
class FlowSpec:
    """A flow on R^2 for the unit bilinear coupling.

    The anchored flow dz/dt = -G(z) + (z0 - z)/t is singular at t = 0, so
    evaluation requires t > 0; ``t_start`` sets where integration begins.
    ``lam`` is the resolvent parameter of the regularized flow and is unused
    for the anchored kind.
    """

    kind: FlowKind
    z0: tuple[float, float]
    t_end: float
    steps: int
    lam: float = 0.01
    t_start: float = 1e-2

    def __post_init__(self) -> None:
        if self.kind == FlowKind.MOREAU_YOSIDA and not self.lam > 0:
            raise ContractError("lam must be > 0")
        if not 0 < self.t_start < self.t_end:
            raise ContractError("need 0 < t_start < t_end")
        if self.steps < 1:
            raise ContractError("steps must be >= 1")


def flow_closed_form(spec: FlowSpec, t) -> np.ndarray:
    """Exact solution of the flow at time t (vectorized over t).

    Anchored: x(t) = (y0 cos t + x0 sin t - y0)/t and the matching y(t);
    finite as t -> 0+ with limit z0. Regularized: a spiral contracting by
    exp(-lam t/(1+lam^2)) while rotating at rate 1/(1+lam^2).
    """
    t = np.asarray(t, dtype=float)
    x0, y0 = spec.z0
    if spec.kind == FlowKind.ANCHORED:
        if np.any(t <= 0):
            raise ContractError("anchored flow requires t > 0")
        x = (y0 * np.cos(t) + x0 * np.sin(t) - y0) / t
        y = (y0 * np.sin(t) - x0 * np.cos(t) + x0) / t
    else:
        lam = spec.lam
        w = t / (1 + lam * lam)
        decay = np.exp(-lam * w)
        x = decay * (x0 * np.cos(w) - y0 * np.sin(w))
        y = decay * (y0 * np.cos(w) + x0 * np.sin(w))
    return np.stack([x, y], axis=-1)


def _flow_rhs(spec: FlowSpec):
    x0, y0 = spec.z0
    z0 = np.array([x0, y0])
    if spec.kind == FlowKind.ANCHORED:
        def rhs(t: float, z: np.ndarray) -> np.ndarray:
            return np.array([-z[1], z[0]]) + (z0 - z) / t
    else:
        lam = spec.lam
        c = 1.0 / (1 + lam * lam)
        def rhs(t: float, z: np.ndarray) -> np.ndarray:
            # -G_lam(z) for the resolvent-regularized operator of [[0,1],[-1,0]]
            return np.array(
                [-c * (lam * z[0] + z[1]), -c * (-z[0] + lam * z[1])]
            )
    return rhs


@dataclass(frozen=True)
class FlowTrajectory:
    ts: np.ndarray
    zs: np.ndarray
    spec: FlowSpec
    metadata: dict = field(default_factory=dict)


def integrate_flow(spec: FlowSpec) -> FlowTrajectory:
    """Classical fixed-step RK4 from t_start to t_end.

    The initial value is the closed form evaluated at t_start: for the
    anchored flow that is the unique solution approaching z0 as t -> 0+
    (starting at the raw anchor value instead would integrate a different
    trajectory). Divergence beyond 1e9 times the initial scale aborts with
    a suggestion to increase ``steps``.
    """
    rhs = _flow_rhs(spec)
    h = (spec.t_end - spec.t_start) / spec.steps
    z = flow_closed_form(spec, spec.t_start)
    limit = 1e9 * (np.linalg.norm(z) + 1.0)
    ts = spec.t_start + h * np.arange(spec.steps + 1)
    zs = np.empty((spec.steps + 1, 2))
    zs[0] = z
    t = spec.t_start
    for i in range(spec.steps):
        k1 = rhs(t, z)
        k2 = rhs(t + h / 2, z + h / 2 * k1)
        k3 = rhs(t + h / 2, z + h / 2 * k2)
        k4 = rhs(t + h, z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = spec.t_start + (i + 1) * h
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > limit:
            raise NumericalDivergenceError(
                f"flow integration blew up at step {i + 1} (t ~ {t:.3g}); "
                f"try more than {spec.steps} steps"
            )
        zs[i + 1] = z
    return FlowTrajectory(
        ts=ts,
        zs=zs,
        spec=spec,
        metadata={"t_start": spec.t_start, "initial": zs[0].tolist()},
    )


# ---------------------------------------------------------------------------
# named presets
# ---------------------------------------------------------------------------

# step sizes used in the reference experiments, per problem and method
PRESET_STEP_SIZES: dict[str, dict[str, float]] = {
    "huber-default": {"eg": 0.1, "eag-c": 0.1, "popov": 0.1, "eag-v": 0.1},
    "ouyang-200": {"eg": 0.5, "popov": 0.5, "eag-c": 0.1265, "eag-v": 0.618},
    "bilinear-unit": {"eg": 0.1, "eag-c": 0.1, "popov": 0.1, "eag-v": 0.618},
}


def preset_names() -> list[str]:
    return ["huber-default", "ouyang-200", "bilinear-unit", "random-monotone:<n>:<seed>"]


def load_preset(name: str) -> tuple[SaddleProblem, Point]:
    """Resolve a preset name to (problem, default starting point)."""
    if name == "huber-default":
        problem = make_huber_saddle()
        z0 = Point(np.array([1.0, 1.0]) / math.sqrt(2.0), 1)
        problem.metadata["z0_note"] = "unit norm along (1,1)/sqrt(2)"
        return problem, z0
    if name == "ouyang-200":
        problem = make_ouyang_qp(200)
        return problem, Point(np.zeros(400), 200)
    if name == "bilinear-unit":
        return make_bilinear(1.0), Point(np.array([1.0, 0.0]), 1)
    if name.startswith("random-monotone:"):
        parts = name.split(":")
        if len(parts) != 3:
            raise ContractError(
                f"bad preset {name!r}; use random-monotone:<n>:<seed>"
            )
        n, seed = int(parts[1]), int(parts[2])
        problem = make_random_monotone(n, 1.0, seed)
        rng = np.random.default_rng(seed + 1)
        z0 = rng.normal(size=2 * n)
        return problem, Point(z0 / np.linalg.norm(z0), n)
    raise ContractError(f"unknown preset {name!r}; known: {preset_names()}")

"""Worst-case biaffine instances, minimax polynomials and the Krylov oracle.

The complexity floor R^2 D^2 / (2*floor(k/2)+1)^2 is realized three
independent ways, which must agree:

* the closed form R/(2m+1) for the minimax value of |t p(t)| over degree-k
  polynomials with p(0) = 1, built from an odd Chebyshev polynomial,
* the exact minimum residual over the order-(k-1) Krylov subspace of the
  constructed hard instance (brute-force least squares), and
* the residual of the optimal polynomial solver, which attains the floor on
  every matrix of norm <= R.

Span-respecting algorithm runs are checked against the instance floor at
every step whose consumed oracle budget fits the instance's design depth.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .algorithms import Trace
from .core import CertificateError, ContractError, Point, SaddleProblem

__all__ = [
    "chebyshev_eval",
    "chebyshev_coefficients",
    "MinimaxPoly",
    "minimax_poly",
    "chebyshev_nodes",
    "dual_weights",
    "HardInstance",
    "build_hard_instance",
    "krylov_min_residual",
    "chebyshev_solver",
    "LowerBoundReport",
    "verify_lower_bound",
    "save_instance",
    "load_instance",
]


def chebyshev_eval(N: int, t):
    """T_N(t) by the three-term recurrence T_{N+1} = 2 t T_N - T_{N-1}."""
    if N < 0:
        raise ContractError("N must be >= 0")
    t = np.asarray(t, dtype=float)
    prev = np.ones_like(t)
    if N == 0:
        return prev if prev.ndim else float(prev)
    cur = t.copy()
    for _ in range(N - 1):
        prev, cur = cur, 2 * t * cur - prev
    return cur if cur.ndim else float(cur)


def chebyshev_coefficients(N: int) -> np.ndarray:
    """Monomial coefficients of T_N, ascending powers. Exact integers."""
    if N < 0:
        raise ContractError("N must be >= 0")
    prev = np.zeros(N + 1)
    prev[0] = 1.0
    if N == 0:
        return prev
    cur = np.zeros(N + 1)
    cur[1] = 1.0
    for _ in range(N - 1):
        nxt = np.zeros(N + 1)
        nxt[1:] = 2 * cur[:-1]
        nxt -= prev
        prev, cur = cur, nxt
    return cur


@dataclass(frozen=True)
class MinimaxPoly:
    """The degree-k minimizer of max |t p(t)| over [-R, R] with p(0) = 1.

    The polynomial is even of degree 2m, m = floor(k/2); its weighted values
    t p(t) equioscillate with magnitude m_star = R/(2m+1) at 2m+2 nodes.
    """

    k: int
    m: int
    R: float
    coeffs: np.ndarray  # ascending powers, length 2m+1
    m_star: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in self.coeffs[::-1]:
            out = out * t + c
        return out if out.ndim else float(out)

    def nodes(self) -> np.ndarray:
        return chebyshev_nodes(self.k, self.R)


def chebyshev_nodes(k: int, R: float = 1.0) -> np.ndarray:
    """The 2m+2 extremal nodes R cos((2m+1-j) pi / (2m+1)), increasing."""
    m = k // 2
    j = np.arange(2 * m + 2)
    return R * np.cos((2 * m + 1 - j) * np.pi / (2 * m + 1))


def minimax_poly(k: int, R: float = 1.0) -> MinimaxPoly:
    """Expand ((-1)^m/(2m+1)) (R/t) T_{2m+1}(t/R) into monomial form."""
    if k < 1:
        raise ContractError("k must be >= 1")
    if not R > 0:
        raise ContractError("R must be > 0")
    m = k // 2
    N = 2 * m + 1
    TN = chebyshev_coefficients(N)  # odd polynomial
    coeffs = np.zeros(2 * m + 1)
    sign = (-1) ** m / (2 * m + 1)
    for i in range(1, N + 1, 2):
        coeffs[i - 1] = sign * TN[i] * R ** (1 - i)
    return MinimaxPoly(k=k, m=m, R=R, coeffs=coeffs, m_star=R / (2 * m + 1))


def _simplex_project(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _dual_value_and_grad(mu: np.ndarray, t: np.ndarray, k: int):
    """Inner minimization of sum mu_j t_j^2 p(t_j)^2 over p in P_k."""
    Phi = np.vander(t, k + 1, increasing=True)[:, 1:]  # columns t^1..t^k
    w = mu * t * t
    G = Phi.T @ (w[:, None] * Phi)
    rhs = -Phi.T @ w
    c, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    p = 1.0 + Phi @ c
    return float(w @ (p * p)), t * t * p * p


def _dual_weights_ascent(k: int, iters: int = 4000) -> np.ndarray:
    """Projected supergradient ascent on the concave dual; fallback path.

    Polyak steps (the optimal value 1/(2m+1)^2 is known in closed form)
    drive the dual value to the optimum quickly, but the dual is
    quadratically flat there, so the ascent iterate alone cannot pin the
    stationarity residual below ~sqrt(value gap). A terminal least-squares
    polish on the full, unreduced stationarity system over the support the
    ascent found closes the remaining gap.
    """
    m = k // 2
    t = chebyshev_nodes(k, 1.0)
    n = len(t)
    target = 1.0 / (2 * m + 1) ** 2
    mu = np.full(n, 1.0 / n)
    best_mu, best_gap = mu, np.inf
    for _ in range(iters):
        val, grad = _dual_value_and_grad(mu, t, k)
        gap = target - val
        if gap < best_gap:
            best_gap, best_mu = gap, mu
        gn2 = float(grad @ grad)
        if gn2 == 0.0 or gap <= 1e-14 * target:
            break
        mu = _simplex_project(mu + (gap / gn2) * grad)
    support = best_mu > 1e-9
    pv = minimax_poly(k, 1.0)(t)
    rows = [t[support] ** (2 + i) * pv[support] for i in range(1, 2 * m + 1)]
    rows.append(np.ones(int(support.sum())))
    rhs = np.zeros(2 * m + 1)
    rhs[-1] = 1.0
    sol, *_ = np.linalg.lstsq(np.asarray(rows), rhs, rcond=None)
    polished = np.zeros(n)
    polished[support] = sol
    if polished.min() >= 0 and _kkt_residual(polished, k) < _kkt_residual(best_mu, k):
        return polished
    return best_mu


def _kkt_residual(mu: np.ndarray, k: int) -> float:
    """Worst scaled stationarity residual of the dual weights (R = 1)."""
    m = k // 2
    t = chebyshev_nodes(k, 1.0)
    pv = minimax_poly(k, 1.0)(t)
    worst = 0.0
    for i in range(1, 2 * m + 1):
        r = float(np.sum(mu * t ** (2 + i) * pv))
        worst = max(worst, abs(r))
    worst = max(worst, abs(float(np.sum(mu)) - 1.0))
    worst = max(worst, float(-mu.min()) if mu.min() < 0 else 0.0)
    obj = float(np.sum(mu * t * t * pv * pv))
    worst = max(worst, abs(obj - 1.0 / (2 * m + 1) ** 2))
    return worst


def dual_weights(k: int, method: str = "solve") -> np.ndarray:
    """Simplex weights certifying optimality of the minimax polynomial.

    Solves the stationarity system (the optimal polynomial must minimize the
    weighted node sum), exploiting the +/- symmetry of the node set to halve
    the unknowns. Weights are scale-free in R. Falls back to projected
    ascent on the concave dual if the linear solve does not satisfy the KKT
    conditions; failure of both is an error.
    """
    if k < 1:
        raise ContractError("k must be >= 1")
    m = k // 2
    t = chebyshev_nodes(k, 1.0)
    pv = minimax_poly(k, 1.0)(t)
    mu = None
    if method == "solve":
        pos = t[m + 1:]
        pv_pos = pv[m + 1:]
        rows = [2 * pos ** (2 + i) * pv_pos for i in range(2, 2 * m + 1, 2)]
        rows.append(2 * np.ones_like(pos))
        rhs = np.zeros(m + 1)
        rhs[-1] = 1.0
        sol, *_ = np.linalg.lstsq(np.array(rows), rhs, rcond=None)
        mu = np.concatenate([sol[::-1], sol])
        if _kkt_residual(mu, k) >= 1e-8:
            mu = None
    if mu is None:
        mu = _dual_weights_ascent(k)
        if _kkt_residual(mu, k) >= 1e-8:
            raise CertificateError(
                f"dual weights for k={k} failed the KKT check in both paths"
            )
    return mu


@dataclass(frozen=True)
class HardInstance:
    """Symmetric linear-equation instance plus its embedded biaffine saddle.

    ``lambdas`` are the nonzero eigenvalues of the diagonal matrix A (on the
    first 2m+2 coordinates), ``x_star`` the minimum-norm solution of
    A x = b, and ``saddle`` the biaffine problem <A x - b, y - c> with
    c = x_star, whose saddle point nearest the origin is (x_star, x_star).
    """

    k: int
    m: int
    n: int
    R: float
    D: float
    lambdas: np.ndarray
    mu: np.ndarray
    x_star: np.ndarray
    b: np.ndarray
    saddle: SaddleProblem = field(repr=False)

    @property
    def A(self) -> np.ndarray:
        diag = np.zeros(self.n)
        diag[: len(self.lambdas)] = self.lambdas
        return np.diag(diag)

    @property
    def floor(self) -> float:
        """The complexity floor R^2 D_z^2 / (2m+1)^2 in the joint space."""
        Dz2 = 2 * self.D**2
        return self.R**2 * Dz2 / (2 * self.m + 1) ** 2


def _embed_saddle(n: int, a_diag: np.ndarray, b: np.ndarray, c: np.ndarray, R: float, k: int) -> SaddleProblem:
    def op(z: np.ndarray) -> np.ndarray:
        x, y = z[:n], z[n:]
        return np.concatenate([a_diag * y - b, b - a_diag * x])

    def val(z: np.ndarray) -> float:
        x, y = z[:n], z[n:]
        return float((a_diag * x - b) @ (y - c))

    return SaddleProblem(
        name=f"hard-biaffine-k{k}",
        dim_x=n,
        dim_y=n,
        operator=op,
        lipschitz=R,
        saddle_point=Point(np.concatenate([c, c]), n),
        value=val,
    )


def build_hard_instance(k: int, R: float = 1.0, D: float = 1.0, n: int | None = None) -> HardInstance:
    """Construct the depth-k worst-case instance in ambient dimension n >= k+2."""
    if k < 1:
        raise ContractError("k must be >= 1")
    if not (R > 0 and D >= 0):
        raise ContractError("R must be > 0 and D >= 0")
    m = k // 2
    n = k + 2 if n is None else n
    if n < k + 2:
        raise ContractError(f"n = {n} < k + 2 = {k + 2}")
    lam = chebyshev_nodes(k, R)
    mu = dual_weights(k)
    return _assemble_instance(k, m, n, R, D, lam, mu)


def _assemble_instance(k, m, n, R, D, lam, mu) -> HardInstance:
    x_star = np.zeros(n)
    x_star[: 2 * m + 2] = D * np.sqrt(np.maximum(mu, 0.0))
    a_diag = np.zeros(n)
    a_diag[: 2 * m + 2] = lam
    b = a_diag * x_star
    saddle = _embed_saddle(n, a_diag, b, x_star, R, k)
    return HardInstance(
        k=k, m=m, n=n, R=R, D=D,
        lambdas=np.asarray(lam, dtype=float),
        mu=np.asarray(mu, dtype=float),
        x_star=x_star, b=b, saddle=saddle,
    )


def krylov_min_residual(A: np.ndarray, b: np.ndarray, k: int) -> float:
    """Exact min of ||A x - b||^2 over the order-(k-1) Krylov subspace of b.

    Modified Gram-Schmidt with one reorthogonalization pass keeps the basis
    orthonormal despite the ill-conditioning of raw power bases; if the
    Krylov space degenerates early, the minimum over the achieved subspace
    is returned (the span is unchanged by degeneration).
    """
    if k < 1:
        raise ContractError("k must be >= 1")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        return 0.0
    basis: list[np.ndarray] = []
    w = b.copy()
    for _ in range(k):
        v = w.copy()
        for _ in range(2):
            for u in basis:
                v -= (u @ v) * u
        nv = float(np.linalg.norm(v))
        if nv <= 1e-14 * nb:
            break
        basis.append(v / nv)
        w = A @ basis[-1]
    Q = np.column_stack(basis)
    AQ = A @ Q
    coef, *_ = np.linalg.lstsq(AQ, b, rcond=None)
    r = AQ @ coef - b
    return float(r @ r)


def chebyshev_solver(B: np.ndarray, v: np.ndarray, k: int, R: float) -> np.ndarray:
    """The optimal degree-k polynomial iterate for B z = v with ||B|| <= R.

    Writes the even minimax polynomial as p(sqrt(s)) = 1 - s q(s) and returns
    q(B^T B) B^T v, using 2*floor(k/2) - 1 <= k - 1 matrix products. Its
    residual satisfies ||B z - v||^2 <= R^2 D^2 / (2*floor(k/2)+1)^2 whenever
    v = B z_star with ||z_star|| <= D.
    """
    if k < 1:
        raise ContractError("k must be >= 1")
    B = np.asarray(B, dtype=float)
    v = np.asarray(v, dtype=float)
    poly = minimax_poly(k, R)
    pe = poly.coeffs[::2]      # coefficients of s^i in p(sqrt(s)); pe[0] = 1
    q = -pe[1:]                # q(s) = (1 - p(sqrt(s))) / s, ascending
    if len(q) == 0:
        return np.zeros_like(v)
    w = B.T @ v
    acc = q[-1] * w
    for c in q[-2::-1]:
        acc = B.T @ (B @ acc) + c * w
    return acc


@dataclass(frozen=True)
class StepCheck:
    k_iter: int
    span_used: int
    grad_sq: float
    floor: float
    margin: float
    per_depth_bound: float
    in_span: bool


@dataclass(frozen=True)
class LowerBoundReport:
    steps: list
    applicable: bool
    verdict: bool
    floor: float
    message: str = ""


def verify_lower_bound(
    instance: HardInstance,
    trace: Trace,
    k: int | None = None,
    span_tol: float = 1e-8,
) -> LowerBoundReport:
    """Check an algorithm run against the instance's complexity floor.

    For every stored iterate whose consumed oracle budget e_j is at most the
    design depth k, verifies ||G(z^j)||^2 >= R^2 ||z0 - z*||^2 / (2 floor(k/2)+1)^2
    and that both blocks of z^j - z0 lie in the order-(e_j - 1) Krylov space
    of (A, b) up to a projection residual of span_tol * ||block||.  Iterates
    beyond the design depth carry no guarantee and are skipped.  A trace that
    leaves the Krylov span is reported inapplicable rather than failed.

    The per-depth curve R^2 D_z^2/(2 floor(e_j/2)+1)^2 is reported for
    information only: the depth-k instance does not (and can not) enforce it
    at intermediate depths.
    """
    k = instance.k if k is None else k
    zs = instance.saddle.saddle_point.coords
    z0 = trace.z0
    Dz2 = float(np.sum((z0 - zs) ** 2))
    floor = instance.R**2 * Dz2 / (2 * (k // 2) + 1) ** 2
    if Dz2 == 0.0:
        return LowerBoundReport([], True, True, 0.0, "started at the saddle point; bound is trivially 0")
    if np.linalg.norm(z0) > 1e-12 * (1.0 + np.linalg.norm(zs)):
        return LowerBoundReport(
            [], False, False, floor,
            "instance is built relative to z0 = 0; translate the problem first",
        )

    n = instance.n
    a_diag = np.zeros(n)
    a_diag[: len(instance.lambdas)] = instance.lambdas
    depth_max = min(int(k), 2 * len(instance.lambdas))
    basis: list[np.ndarray] = []
    w = instance.b.copy()
    nb = np.linalg.norm(w)
    for _ in range(depth_max):
        v = w.copy()
        for _ in range(2):
            for u in basis:
                v -= (u @ v) * u
        nv = float(np.linalg.norm(v))
        if nv <= 1e-14 * nb:
            break
        basis.append(v / nv)
        w = a_diag * basis[-1]

    def in_span(block: np.ndarray, depth: int) -> bool:
        nrm = float(np.linalg.norm(block))
        if nrm == 0.0:
            return True
        r = block.copy()
        for u in basis[: min(depth, len(basis))]:
            r -= (u @ r) * u
        return float(np.linalg.norm(r)) <= span_tol * nrm

    steps: list[StepCheck] = []
    all_in_span = True
    verdict = True
    for idx, j in enumerate(trace.stored_ks.tolist()):
        e = int(trace.oracle_calls[j])
        if e > k:
            continue
        z = trace.iterates[idx]
        gsq = float(trace.grad_sq[j])
        ok_span = in_span(z[:n] - z0[:n], e) and in_span(z[n:] - z0[n:], e)
        all_in_span &= ok_span
        per_depth = instance.R**2 * Dz2 / (2 * (e // 2) + 1) ** 2
        ok = gsq >= floor * (1 - 1e-9)
        verdict &= ok
        steps.append(StepCheck(j, e, gsq, floor, gsq - floor, per_depth, ok_span))
    if not all_in_span:
        return LowerBoundReport(
            steps, False, False, floor,
            "trace left the reachable Krylov span; the bound does not apply",
        )
    return LowerBoundReport(steps, True, verdict, floor)


def save_instance(instance: HardInstance, path) -> None:
    """Write a self-describing text file from which runs reproduce exactly."""
    with open(path, "w") as f:
        f.write(_instance_text(instance))


def _instance_text(instance: HardInstance) -> str:
    buf = io.StringIO()
    buf.write("# hard biaffine instance\n")
    buf.write(f"k={instance.k}\n")
    buf.write(f"n={instance.n}\n")
    buf.write(f"R={instance.R:.17g}\n")
    buf.write(f"D={instance.D:.17g}\n")
    buf.write("lambdas=" + ",".join(f"{v:.17g}" for v in instance.lambdas) + "\n")
    buf.write("mu=" + ",".join(f"{v:.17g}" for v in instance.mu) + "\n")
    return buf.getvalue()


def load_instance(path) -> HardInstance:
    fields: dict[str, str] = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            fields[key] = val
    try:
        k = int(fields["k"])
        n = int(fields["n"])
        R = float(fields["R"])
        D = float(fields["D"])
        lam = np.array([float(v) for v in fields["lambdas"].split(",")])
        mu = np.array([float(v) for v in fields["mu"].split(",")])
    except KeyError as exc:
        raise ContractError(f"instance file missing field {exc}") from exc
    return _assemble_instance(k, k // 2, n, R, D, lam, mu)

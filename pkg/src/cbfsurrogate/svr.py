"""Gaussian-kernel epsilon-SVR trained by a from-scratch SMO solver.

The dual is solved directly in beta space (beta_i = alpha_i - alpha_i*):

    maximize  -1/2 beta' K beta + beta' y - epsilon * sum_i |beta_i|
    subject to  sum_i beta_i = 0,  |beta_i| <= C

Each iteration picks the maximal-KKT-violating pair (lowest indices on
ties) and solves the one-dimensional subproblem along e_i - e_j exactly;
the objective is piecewise quadratic and concave in the step, so the
optimum is found by checking the stationary point of each sign regime
plus the regime edges. Features and targets are z-scored with training
statistics, so epsilon is expressed in standardized target units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


class ConvergenceError(RuntimeError):
    """SMO failed to reach the KKT tolerance within the update budget."""


@dataclass(frozen=True)
class SvrHyperParams:
    c: float
    gamma: float
    epsilon: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass
class SvrModel:
    train_points: np.ndarray  # standardized, kept feature columns only
    dual_coeffs: np.ndarray
    bias: float
    gamma: float
    c: float
    epsilon: float
    n_features_in: int
    kept_features: np.ndarray
    feature_means: np.ndarray  # statistics of the kept columns
    feature_sds: np.ndarray
    target_mean: float
    target_sd: float
    n_updates: int
    kkt_violation: float
    objective_trace: np.ndarray | None = None


def rbf_kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2); 1 at zero distance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    d = x - y
    return float(np.exp(-gamma * np.dot(d, d)))


def _rbf_gram(points: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.einsum("ij,ij->i", points, points)
    dist = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(dist, 0.0, out=dist)
    gram = np.exp(-gamma * dist)
    np.fill_diagonal(gram, 1.0)
    return gram


def _rbf_cross(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sqa = np.einsum("ij,ij->i", a, a)
    sqb = np.einsum("ij,ij->i", b, b)
    dist = sqa[:, None] + sqb[None, :] - 2.0 * (a @ b.T)
    np.maximum(dist, 0.0, out=dist)
    return np.exp(-gamma * dist)


@njit(cache=True)
def _dual_objective(gram, y, eps, beta):
    n = beta.size
    quad = 0.0
    lin = 0.0
    for a in range(n):
        ba = beta[a]
        row = 0.0
        for b in range(n):
            row += gram[a, b] * beta[b]
        quad += ba * row
        lin += ba * y[a] - eps * abs(ba)
    return -0.5 * quad + lin


@njit(cache=True)
def _smo_solve(gram, y, c, eps, tol, max_updates, record):
    n = y.size
    beta = np.zeros(n)
    f = y.copy()  # f_i = y_i - (K beta)_i, maintained incrementally
    trace = np.empty(max_updates if record else 0)
    n_updates = 0
    viol = np.inf
    converged = False
    while n_updates < max_updates:
        # maximal violating pair: i maximizes the ascent derivative over
        # increasable coordinates, j minimizes it over decreasable ones
        best_up = -np.inf
        best_dn = np.inf
        i = -1
        j = -1
        for t in range(n):
            bt = beta[t]
            ft = f[t]
            if bt < c:
                up = ft + eps if bt < 0.0 else ft - eps
                if up > best_up:
                    best_up = up
                    i = t
            if bt > -c:
                dn = ft + eps if bt <= 0.0 else ft - eps
                if dn < best_dn:
                    best_dn = dn
                    j = t
        viol = best_up - best_dn
        if viol <= tol:
            converged = True
            break
        bi = beta[i]
        bj = beta[j]
        fi = f[i]
        fj = f[j]
        eta = gram[i, i] + gram[j, j] - 2.0 * gram[i, j]
        if eta < 0.0:
            eta = 0.0
        t_max = c - bi
        if bj + c < t_max:
            t_max = bj + c
        # sign regimes of |bi + t| and |bj - t| over t in [0, t_max]
        edges = np.empty(4)
        ne = 0
        edges[ne] = 0.0
        ne += 1
        if bi < 0.0 and -bi < t_max:
            edges[ne] = -bi
            ne += 1
        if bj > 0.0 and bj < t_max:
            edges[ne] = bj
            ne += 1
        if ne == 3 and edges[1] > edges[2]:
            tmp = edges[1]
            edges[1] = edges[2]
            edges[2] = tmp
        edges[ne] = t_max
        ne += 1
        best_t = 0.0
        best_gain = 0.0
        for r in range(ne - 1):
            lo = edges[r]
            hi = edges[r + 1]
            if hi <= lo:
                continue
            mid = 0.5 * (lo + hi)
            si = 1.0 if bi + mid > 0.0 else -1.0
            sj = 1.0 if bj - mid > 0.0 else -1.0
            deriv0 = fi - fj - eps * si + eps * sj  # derivative at t=0 under this regime's signs
            if eta > 0.0:
                ts = deriv0 / eta
                if ts < lo:
                    ts = lo
                elif ts > hi:
                    ts = hi
            else:
                ts = hi if deriv0 > 0.0 else lo
            for cand in range(2):
                tc = ts if cand == 0 else hi
                gain = (
                    tc * (fi - fj)
                    - 0.5 * eta * tc * tc
                    - eps * (abs(bi + tc) - abs(bi))
                    - eps * (abs(bj - tc) - abs(bj))
                )
                if gain > best_gain:
                    best_gain = gain
                    best_t = tc
        if best_t <= 0.0:
            break  # numerical stall; caller sees converged=False with viol
        beta[i] = bi + best_t
        beta[j] = bj - best_t
        for m in range(n):
            f[m] -= best_t * (gram[m, i] - gram[m, j])
        if record:
            trace[n_updates] = _dual_objective(gram, y, eps, beta)
        n_updates += 1
    return beta, f, n_updates, viol, converged, trace[:n_updates]


def _bias(beta: np.ndarray, f: np.ndarray, c: float, eps: float) -> float:
    abs_beta = np.abs(beta)
    if not np.any(abs_beta > 0.0):
        return float(f.mean())  # f == y_std when beta == 0
    interior = (abs_beta > 1e-12 * c) & (abs_beta < c * (1.0 - 1e-12))
    if np.any(interior):
        pinned = np.where(beta[interior] > 0.0, f[interior] - eps, f[interior] + eps)
        return float(pinned.mean())
    # no unbounded support vectors: midpoint of the KKT-feasible interval
    up = np.where(beta < 0.0, f + eps, f - eps)
    dn = np.where(beta <= 0.0, f + eps, f - eps)
    lo = up[beta < c].max()
    hi = dn[beta > -c].min()
    return float(0.5 * (lo + hi))


def train_svr(
    features,
    targets,
    params: SvrHyperParams,
    tol: float = 1e-3,
    max_passes: int = 10_000,
    record_objective: bool = False,
) -> SvrModel:
    """Fit epsilon-SVR on (features, targets).

    max_passes bounds the outer sweeps; one sweep is n pairwise updates,
    so the total update budget is max_passes * n. Raises ConvergenceError
    if the KKT tolerance is not reached within it.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    y = np.asarray(targets, dtype=float)
    n = y.size
    if n < 1:
        raise ValueError("need at least one training point")
    if x.shape[0] != n:
        raise ValueError(f"features rows ({x.shape[0]}) != targets length ({n})")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("features and targets must be finite")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")

    means = x.mean(axis=0)
    sds = x.std(axis=0)
    kept = np.flatnonzero(np.ptp(x, axis=0) > 0.0)  # exact constant detection
    x_std = (x[:, kept] - means[kept]) / sds[kept]
    t_mean = float(y.mean())
    t_sd = float(y.std())
    if t_sd == 0.0:
        t_sd = 1.0  # degenerate targets: solver sees zeros, bias recovers the constant
    y_std = (y - t_mean) / t_sd

    gram = _rbf_gram(x_std, params.gamma)
    beta, f, n_updates, viol, converged, trace = _smo_solve(
        gram, y_std, float(params.c), float(params.epsilon), float(tol), int(max_passes) * n, bool(record_objective)
    )
    if not converged:
        raise ConvergenceError(f"SMO stopped after {n_updates} updates with KKT violation {viol:.3e} > tol {tol:.1e}")
    np.clip(beta, -params.c, params.c, out=beta)
    return SvrModel(
        train_points=x_std,
        dual_coeffs=beta,
        bias=_bias(beta, f, params.c, params.epsilon),
        gamma=params.gamma,
        c=params.c,
        epsilon=params.epsilon,
        n_features_in=x.shape[1],
        kept_features=kept,
        feature_means=means[kept],
        feature_sds=sds[kept],
        target_mean=t_mean,
        target_sd=t_sd,
        n_updates=int(n_updates),
        kkt_violation=float(viol),
        objective_trace=np.asarray(trace) if record_objective else None,
    )


def predict_svr(model: SvrModel, x):
    """Decision function in original target units; accepts one vector or a matrix."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = arr.reshape(1, -1) if single else arr
    if pts.shape[1] != model.n_features_in:
        raise ValueError(f"dimension mismatch: model expects {model.n_features_in} features, got {pts.shape[1]}")
    pts_std = (pts[:, model.kept_features] - model.feature_means) / model.feature_sds
    kx = _rbf_cross(pts_std, model.train_points, model.gamma)
    out = (kx @ model.dual_coeffs + model.bias) * model.target_sd + model.target_mean
    return float(out[0]) if single else out


def dump_model(model: SvrModel, path) -> None:
    """Write a model as CSV-with-header sections; bit-stable for fixed inputs."""
    fmt = lambda v: format(float(v), ".17g")
    lines = ["[hyperparams]", "c,gamma,epsilon", f"{fmt(model.c)},{fmt(model.gamma)},{fmt(model.epsilon)}"]
    lines += ["[target]", "mean,sd", f"{fmt(model.target_mean)},{fmt(model.target_sd)}"]
    lines += ["[solution]", "bias,n_updates,kkt_violation", f"{fmt(model.bias)},{model.n_updates},{fmt(model.kkt_violation)}"]
    lines += ["[features]", "column,mean,sd"]
    for idx, col in enumerate(model.kept_features):
        lines.append(f"{int(col)},{fmt(model.feature_means[idx])},{fmt(model.feature_sds[idx])}")
    lines += ["[duals]", "index,beta"]
    for idx, b in enumerate(model.dual_coeffs):
        lines.append(f"{idx},{fmt(b)}")
    lines += ["[train_points]", "index," + ",".join(f"f{int(c)}" for c in model.kept_features)]
    for idx in range(model.train_points.shape[0]):
        row = ",".join(fmt(v) for v in model.train_points[idx])
        lines.append(f"{idx},{row}" if row else f"{idx}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

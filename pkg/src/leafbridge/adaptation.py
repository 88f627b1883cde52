"""Cross-domain projection from matched pivot centroids.

The matched source and target centroid rows are stacked into a [z, ds+dt]
matrix (z = 2 * n_pivots): source rows occupy the first ds columns, target
rows the last dt, and the remainder is zero-padded. On that stack we build a
kernel K, a joint MMD matrix M mixing marginal and per-class conditional
terms through an adaptive factor mu, and a normalized graph Laplacian over an
automatically sized nearest-neighbor affinity graph. The coefficient matrix
alpha combines them with the ridge/MMD/manifold weights, and the projection
P = Gs^T alpha Gt maps encoded source records into the target feature space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.spatial.distance import pdist, squareform

from .errors import BandwidthError, DataError, NumericalError, SolveError
from .pivot import PivotSet

MIN_NEIGHBORS = 4


@dataclass(frozen=True, eq=False)
class StackedPivots:
    """Source-then-target pivot centroids, zero-padded to a common width."""

    rows: np.ndarray
    labels: np.ndarray
    d_source: int
    d_target: int
    shared_classes: tuple[str, ...]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 2 or rows.shape[0] % 2 != 0:
            raise DataError("stacked pivots need an even row count z = 2 * n_pivots >= 2")
        if rows.shape[1] != self.d_source + self.d_target:
            raise DataError("stacked pivot width must be d_source + d_target")
        if not np.isfinite(rows).all():
            raise DataError("stacked pivot rows must be finite")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (rows.shape[0],):
            raise DataError("one label per stacked row required")
        if labels.min() < 0 or labels.max() >= len(self.shared_classes):
            raise DataError("stacked labels must index the shared class set")

    @property
    def z(self) -> int:
        return self.rows.shape[0]

    @property
    def n_pivots(self) -> int:
        return self.z // 2

    @property
    def g_source(self) -> np.ndarray:
        """[z, ds] transform: pivot source centroids on top, zeros below."""
        return self.rows[:, : self.d_source]

    @property
    def g_target(self) -> np.ndarray:
        """[z, dt] transform: zeros on top, pivot target centroids below."""
        return self.rows[:, self.d_source :]

    def source_half(self) -> np.ndarray:
        return np.arange(self.n_pivots)

    def target_half(self) -> np.ndarray:
        return np.arange(self.n_pivots, self.z)


def stack_pivots(pivots: PivotSet) -> StackedPivots:
    """Embed a PivotSet into the stacked padded representation.

    Each row's label is the argmax of its label distribution restricted to
    the shared class set (this equals the bundle's centroid label whenever
    that label is shared).
    """
    if pivots.n_pivots < 1:
        raise DataError("cannot stack an empty pivot set")
    d_s = pivots.Ws.shape[1]
    d_t = pivots.Wt.shape[1]
    n = pivots.n_pivots
    rows = np.zeros((2 * n, d_s + d_t))
    rows[:n, :d_s] = pivots.Ws
    rows[n:, d_s:] = pivots.Wt
    src_shared = [pivots.source_classes.index(c) for c in pivots.shared_classes]
    tgt_shared = [pivots.target_classes.index(c) for c in pivots.shared_classes]
    labels = np.concatenate([
        np.argmax(pivots.Vs[:, src_shared], axis=1),
        np.argmax(pivots.Vt[:, tgt_shared], axis=1),
    ])
    return StackedPivots(rows, labels, d_s, d_t, pivots.shared_classes)


def build_kernel(pivots: StackedPivots, kind: str = "linear") -> np.ndarray:
    """Kernel matrix on the stacked rows: plain inner products or a median-
    bandwidth Gaussian."""
    rows = pivots.rows
    if kind == "linear":
        return rows @ rows.T
    if kind == "rbf":
        dist = pdist(rows)
        nonzero = dist[dist > 0]
        if nonzero.size == 0:
            raise BandwidthError("all stacked rows identical, rbf bandwidth undefined")
        h = float(np.median(nonzero))
        sq = squareform(dist) ** 2
        return np.exp(-sq / (2.0 * h * h))
    raise DataError(f"unknown kernel kind {kind!r}")


def proxy_a_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Classifier-separability proxy distance 2 * (1 - 2 * err).

    err is the training error of a least-squares linear separator (with
    intercept) labeling the first sample -1 and the second +1, measured on
    its own training rows.
    """
    X = np.vstack([a, b])
    y = np.concatenate([-np.ones(a.shape[0]), np.ones(b.shape[0])])
    X1 = np.hstack([X, np.ones((X.shape[0], 1))])
    w, *_ = np.linalg.lstsq(X1, y, rcond=None)
    pred = np.where(X1 @ w >= 0, 1.0, -1.0)
    err = float(np.mean(pred != y))
    return 2.0 * (1.0 - 2.0 * err)


def mu_from_distances(marginal: float, conditional_sum: float) -> float:
    """Adaptive factor 1 - d_M / (d_M + sum_c d_c), clamped to [0, 1]."""
    denom = marginal + conditional_sum
    if abs(denom) < 1e-12:
        return 0.5
    return float(min(max(1.0 - marginal / denom, 0.0), 1.0))


def compute_mu(pivots: StackedPivots) -> float:
    """Estimate how much weight the conditional MMD terms should carry.

    The marginal proxy distance separates the source half from the target
    half; each per-class distance does the same restricted to that class's
    rows (classes missing from either half contribute 0).
    """
    src = pivots.rows[pivots.source_half()]
    tgt = pivots.rows[pivots.target_half()]
    d_marginal = proxy_a_distance(src, tgt)
    labels_s = pivots.labels[pivots.source_half()]
    labels_t = pivots.labels[pivots.target_half()]
    d_conditional = 0.0
    for c in range(len(pivots.shared_classes)):
        mask_s = labels_s == c
        mask_t = labels_t == c
        if not mask_s.any() or not mask_t.any():
            continue
        d_conditional += proxy_a_distance(src[mask_s], tgt[mask_t])
    return mu_from_distances(d_marginal, d_conditional)


def build_mmd_matrix(pivots: StackedPivots, mu: float,
                     cross_term: str = "product") -> np.ndarray:
    """Joint MMD matrix M = (1 - mu) * M0 + mu * sum_c Mc.

    M0 has 1/n_p^2 for same-domain entries and -1/n_p^2 otherwise. Mc has
    1/n_c^2 within the source class-c block, 1/m_c^2 within the target one,
    and a cross entry of -1/(n_c * m_c) (cross_term="product", the default,
    which keeps Mc positive semidefinite) or -1/(n_c^2 * m_c^2)
    (cross_term="squared", a compatibility variant). Blocks whose class
    count is zero are skipped, as is the cross term when either count is 0.
    """
    if cross_term not in ("product", "squared"):
        raise DataError(f"unknown cross_term {cross_term!r}")
    z = pivots.z
    n_p = pivots.n_pivots
    sign = np.ones(z)
    sign[n_p:] = -1.0
    m0 = np.outer(sign, sign) / (n_p * n_p)

    mc_sum = np.zeros((z, z))
    labels = pivots.labels
    for c in range(len(pivots.shared_classes)):
        src_rows = np.flatnonzero(labels[:n_p] == c)
        tgt_rows = n_p + np.flatnonzero(labels[n_p:] == c)
        n_c = src_rows.size
        m_c = tgt_rows.size
        if n_c > 0:
            mc_sum[np.ix_(src_rows, src_rows)] += 1.0 / (n_c * n_c)
        if m_c > 0:
            mc_sum[np.ix_(tgt_rows, tgt_rows)] += 1.0 / (m_c * m_c)
        if n_c > 0 and m_c > 0:
            if cross_term == "product":
                cross = -1.0 / (n_c * m_c)
            else:
                cross = -1.0 / (n_c * n_c * m_c * m_c)
            mc_sum[np.ix_(src_rows, tgt_rows)] += cross
            mc_sum[np.ix_(tgt_rows, src_rows)] += cross
    return (1.0 - mu) * m0 + mu * mc_sum


def _cosine_matrix(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = rows / safe[:, None]
    cos = unit @ unit.T
    cos[norms == 0, :] = 0.0
    cos[:, norms == 0] = 0.0
    return cos


def _auto_knn_from_cos(cos: np.ndarray, labels: np.ndarray, i: int) -> np.ndarray:
    z = cos.shape[0]
    dist = 1.0 - cos[i]
    others = np.concatenate([np.arange(i), np.arange(i + 1, z)])
    if z < MIN_NEIGHBORS + 1:
        return others
    ranked = others[np.argsort(dist[others], kind="stable")]
    neighbors = list(ranked[:MIN_NEIGHBORS])
    for u in ranked[MIN_NEIGHBORS:]:
        if labels[u] != labels[i]:
            break
        neighbors.append(u)
    return np.array(neighbors, dtype=np.int64)


def auto_knn(pivots: StackedPivots, i: int) -> np.ndarray:
    """Automatically sized nearest-neighbor list for stacked row i.

    Rows are ranked by ascending cosine distance (ties -> lower index). The
    first four are always included; the list then grows down the ranking
    while neighbors keep the query row's label, stopping at the first row
    with a different label. With fewer than 5 rows every other row is
    returned.
    """
    if not 0 <= i < pivots.z:
        raise DataError(f"row index {i} out of range for z={pivots.z}")
    return _auto_knn_from_cos(_cosine_matrix(pivots.rows), pivots.labels, i)


def laplacian_from_affinity(B: np.ndarray) -> np.ndarray:
    """Normalized Laplacian I - D^(-1/2) B D^(-1/2); zero-degree rows stay
    identity rows."""
    B = np.asarray(B, dtype=np.float64)
    degrees = B.sum(axis=1)
    inv_sqrt = np.where(degrees > 0, 1.0 / np.sqrt(np.where(degrees > 0, degrees, 1.0)), 0.0)
    return np.eye(B.shape[0]) - B * np.outer(inv_sqrt, inv_sqrt)


def build_laplacian(pivots: StackedPivots) -> tuple[np.ndarray, np.ndarray]:
    """Affinity graph over auto-sized neighborhoods and its normalized
    Laplacian.

    B[i, j] is the cosine similarity (negatives floored at 0) whenever i is
    a neighbor of j or j of i; the diagonal is zero.
    """
    z = pivots.z
    cos = _cosine_matrix(pivots.rows)
    floored = np.maximum(cos, 0.0)
    B = np.zeros((z, z))
    for i in range(z):
        for j in _auto_knn_from_cos(cos, pivots.labels, i):
            value = floored[i, j]
            B[i, j] = value
            B[j, i] = value
    np.fill_diagonal(B, 0.0)
    return B, laplacian_from_affinity(B)


def compute_alpha(K: np.ndarray, M: np.ndarray, Lap: np.ndarray,
                  ridge: float, mmd: float, manifold: float,
                  mode: str = "literal") -> np.ndarray:
    """Coefficient matrix from the combined system.

    A = ridge * I + (mmd * M + manifold * Lap) @ K. mode="literal" returns A
    itself; mode="inverse" returns A^(-1) via an LU solve with partial
    pivoting and enforces ||A @ alpha - I||_F <= 1e-6 * z.
    """
    K = np.asarray(K, dtype=np.float64)
    z = K.shape[0]
    for mat, name in ((K, "K"), (M, "M"), (Lap, "Lap")):
        if np.asarray(mat).shape != (z, z):
            raise DataError(f"{name} must be {z}x{z}")
    for coeff, name in ((ridge, "ridge"), (mmd, "mmd"), (manifold, "manifold")):
        if coeff < 0:
            raise DataError(f"{name} coefficient must be >= 0")
    A = ridge * np.eye(z) + (mmd * M + manifold * Lap) @ K
    if mode == "literal":
        return A
    if mode != "inverse":
        raise DataError(f"unknown alpha mode {mode!r}")
    try:
        lu, piv = lu_factor(A)
        alpha = lu_solve((lu, piv), np.eye(z))
    except np.linalg.LinAlgError as exc:
        raise SolveError(f"singular system, condition estimate {np.linalg.cond(A):.3e}") from exc
    residual = float(np.linalg.norm(A @ alpha - np.eye(z)))
    if not np.isfinite(residual) or residual > 1e-6 * z:
        raise SolveError(
            f"solve residual {residual:.3e} exceeds {1e-6 * z:.3e}, "
            f"condition estimate {np.linalg.cond(A):.3e}"
        )
    return alpha


@dataclass(frozen=True)
class ProjectionMatrix:
    """Linear map [d_source, d_target] from encoded source rows to the
    encoded target feature space."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DataError("projection must be a matrix")
        if not np.isfinite(matrix).all():
            raise NumericalError("projection matrix has non-finite entries")
        object.__setattr__(self, "matrix", matrix)

    @property
    def d_source(self) -> int:
        return self.matrix.shape[0]

    @property
    def d_target(self) -> int:
        return self.matrix.shape[1]


def build_projection(pivots: StackedPivots, alpha: np.ndarray) -> ProjectionMatrix:
    """P = Gs^T @ alpha @ Gt over the padded transforms."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (pivots.z, pivots.z):
        raise DataError(f"alpha must be {pivots.z}x{pivots.z}, got {alpha.shape}")
    return ProjectionMatrix(pivots.g_source.T @ alpha @ pivots.g_target)


@dataclass(frozen=True, eq=False)
class AdaptationState:
    """Everything Step 4 computed, for inspection and diagnostics."""

    kernel: np.ndarray
    mmd_matrix: np.ndarray
    mu: float
    affinity: np.ndarray
    laplacian: np.ndarray
    alpha: np.ndarray
    ridge: float
    mmd: float
    manifold: float
    kernel_kind: str
    alpha_mode: str

    def diagnostics(self) -> dict:
        z = self.kernel.shape[0]
        def spectrum(mat):
            eig = np.linalg.eigvalsh((mat + mat.T) / 2.0)
            return {"min": float(eig[0]), "max": float(eig[-1])}
        residual = None
        if self.alpha_mode == "inverse":
            A = self.ridge * np.eye(z) + (
                self.mmd * self.mmd_matrix + self.manifold * self.laplacian
            ) @ self.kernel
            residual = float(np.linalg.norm(A @ self.alpha - np.eye(z)))
        return {
            "z": z,
            "n_pivots": z // 2,
            "mu": self.mu,
            "kernel_kind": self.kernel_kind,
            "alpha_mode": self.alpha_mode,
            "coefficients": {"ridge": self.ridge, "mmd": self.mmd, "manifold": self.manifold},
            "kernel_spectrum": spectrum(self.kernel),
            "mmd_spectrum": spectrum(self.mmd_matrix),
            "laplacian_spectrum": spectrum(self.laplacian),
            "solve_residual": residual,
        }


def adapt(pivots: StackedPivots, ridge: float, mmd: float, manifold: float,
          kernel_kind: str = "linear", alpha_mode: str = "literal",
          cross_term: str = "product") -> tuple[AdaptationState, ProjectionMatrix]:
    """Run the full adaptation stage on stacked pivots."""
    K = build_kernel(pivots, kernel_kind)
    mu = compute_mu(pivots)
    M = build_mmd_matrix(pivots, mu, cross_term)
    B, Lap = build_laplacian(pivots)
    alpha = compute_alpha(K, M, Lap, ridge, mmd, manifold, alpha_mode)
    projection = build_projection(pivots, alpha)
    state = AdaptationState(K, M, mu, B, Lap, alpha,
                            ridge, mmd, manifold, kernel_kind, alpha_mode)
    return state, projection

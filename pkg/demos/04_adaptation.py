"""The projection solve: kernel, adaptive MMD, auto-k Laplacian, alpha.

Run from the repository root:  python demos/04_adaptation.py
"""

import numpy as np

from leafbridge import (
    auto_knn,
    build_kernel,
    build_laplacian,
    build_mmd_matrix,
    build_projection,
    collect_leaves,
    compute_alpha,
    compute_mu,
    dedup,
    extract_distributions,
    match_pivots,
    rotated_pair,
    train_forest,
)
from leafbridge.adaptation import stack_pivots

source, target = rotated_pair(n_source=400, n_target=200, center_spread=2.0,
                              cluster_std=2.0, seed=5)
f_src = train_forest(source, 10, 20, seed=5)
f_tgt = train_forest(target, 10, 20, seed=5)
dd_src, _ = dedup(extract_distributions(source, collect_leaves(f_src)))
dd_tgt, _ = dedup(extract_distributions(target, collect_leaves(f_tgt)))
pivots = match_pivots(dd_src, dd_tgt, 0.1)

# Matched centroids are stacked into a zero-padded [z, ds+dt] matrix:
# source rows fill the left block, target rows the right block.
sp = stack_pivots(pivots)
print(f"stacked {sp.n_pivots} pivots: z={sp.z}, width {sp.rows.shape[1]} "
      f"(= {sp.d_source} source + {sp.d_target} target columns)")

K = build_kernel(sp, "rbf")
print("\nkernel: rbf with median bandwidth, diagonal =", np.unique(np.diag(K)))

# mu balances marginal vs per-class conditional distribution alignment;
# it is estimated from linear separability of the two halves.
mu = compute_mu(sp)
print(f"adaptive factor mu = {mu:.3f} "
      "(0: marginal alignment dominates, 1: class-conditional dominates)")

M = build_mmd_matrix(sp, mu)
print("MMD matrix: symmetric", np.allclose(M, M.T),
      "| min eigenvalue", f"{np.linalg.eigvalsh(M).min():.2e}")

# The affinity graph sizes each neighborhood automatically: at least 4
# neighbors, extended while they share the query row's label.
ks = [len(auto_knn(sp, i)) for i in range(sp.z)]
print("neighborhood sizes:", sorted(set(ks)))
B, Lap = build_laplacian(sp)
eig = np.linalg.eigvalsh(Lap)
print(f"normalized Laplacian spectrum: [{eig.min():.3f}, {eig.max():.3f}]")

# alpha combines ridge, MMD and manifold terms; "literal" uses the combined
# system matrix directly, "inverse" solves it with a pivoted LU.
alpha = compute_alpha(K, M, Lap, ridge=0.001, mmd=5.0, manifold=0.01,
                      mode="literal")
projection = build_projection(sp, alpha)
print(f"\nprojection matrix: {projection.matrix.shape}, "
      f"|P|_F = {np.linalg.norm(projection.matrix):.3f}")

alpha_inv = compute_alpha(K, M, Lap, 0.001, 5.0, 0.01, mode="inverse")
z = sp.z
A = 0.001 * np.eye(z) + (5.0 * M + 0.01 * Lap) @ K
print("inverse-mode residual:", f"{np.linalg.norm(A @ alpha_inv - np.eye(z)):.2e}")

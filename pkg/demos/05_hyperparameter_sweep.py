"""Sweeping the composition ratio and sparsity weight.

beta_bar mixes the two normalized gradients: 0 optimizes only the
reconstruction term, 1 only the image-matching term.  gamma pushes scores
toward zero along the all-ones direction.  This demo runs a small grid on
the planted instance and prints clustering quality per cell; the CLI
``blockselect sweep`` runs the same loop against a dataset on disk, writes
one CSV row per (candidate, beta_bar, gamma, d) cell, and can resume an
interrupted sweep.
"""

from blockselect.blockmodel import generate_candidates, select_best_rre
from blockselect.data import PlantedSpec, generate_planted
from blockselect.errors import InsufficientSupportError
from blockselect.evaluation import evaluate_selection
from blockselect.objective import build_context
from blockselect.solver import SolverConfig, optimize

spec = PlantedSpec(n=300, k=3, d_informative=20, d_noise=80,
                   intra_p=0.35, inter_p=0.02, signal_strength=0.3, seed=1)
net = generate_planted(spec)
bm = select_best_rre(generate_candidates(net.adjacency, k=3, count=10,
                                         base_seed=1000))

# Reusing the precomputed Gram context across cells avoids repeating the
# one-time O(n m^2) setup; each cell is then O(m^2) per iteration.
ctx = build_context(net, bm, delta=1e-6)

d = 16
print(f"ACC (%) / nnz(r) at d={d} over a beta_bar x gamma grid.")
print("'-' marks cells where nnz(r) < d: too few surviving features to rank")
print("(the CLI reports those rows as zeros with insufficient_support=true)\n")
gammas = (0.0, 0.5, 1.0)
print("beta_bar |" + "".join(f"   gamma={g:<6g}" for g in gammas))
print("-" * 52)
for beta in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    cells = []
    for gamma in gammas:
        cfg = SolverConfig(beta_bar=beta, gamma=gamma, eta=0.02,
                           max_iterations=300)
        scores, trace = optimize(net, bm, cfg, ctx=ctx)
        try:
            report = evaluate_selection(net, scores, d=d, runs=10, base_seed=0)
            cells.append(f"{100 * report.acc_mean:8.1f}/{trace.final.nnz:<4d}")
        except InsufficientSupportError:
            cells.append(f"{'-':>8s}/{trace.final.nnz:<4d}")
    print(f"{beta:8.1f} |" + "".join(cells))

print("\ntwo effects are visible: (1) a cliff around beta_bar ~ 0.5, where")
print("enough weight on the image-matching term lets the selector separate")
print("informative from noise features, and (2) sparsification, which grows")
print("with both beta_bar and gamma until fewer than d features survive")

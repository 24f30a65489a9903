"""Walkthrough: seeded demonstration subsets and orders, and the sweep's
mean / order-deviation arithmetic.

Run: python3 demos/05_demo_sensitivity_sweep.py
"""

from selfpolish import demo_variants, load_demos
from selfpolish.evaluation import order_statistics

pool = list(load_demos("gsm8k", "refine").demos)
print(f"refine demo pool: {len(pool)} rewrite pairs\n")

print("== seeded subsets and orders (reproducible for a fixed seed) ==")
for demo_set in demo_variants(pool, k=2, n_sets=2, n_orders=2, seed=7):
    firsts = [d.original_problem.split(".")[0] for d in demo_set.demos]
    print(f"set={demo_set.set_id} order={demo_set.order_id}: {firsts}")

print("\n== order-deviation arithmetic on a synthetic accuracy grid ==")
cells = {
    "s0": {"o0": 0.40, "o1": 0.60},   # std 0.10
    "s1": {"o0": 0.50, "o1": 0.50},   # std 0.00
    "s2": {"o0": 0.30, "o1": 0.50},   # std 0.10
}
mean, deviation = order_statistics(cells)
for set_id, per_set in cells.items():
    print(f"{set_id}: {per_set}")
print(f"mean accuracy  : {mean:.4f}")
print(f"order deviation: {deviation:.4f} (mean over sets of per-set population std)")

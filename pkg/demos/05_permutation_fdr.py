"""Permutation FDR on stopping I, then a rank-coverage curve.

The observed screen is repeated on response-permuted copies (same subsets)
and the false discovery rate of "stopping I >= t" is estimated for every
observed t.  Elements of subsets above the chosen threshold are selected.
"""
from partret import (ScreeningConfig, fdr_curve, gen_example5, marginal_ranking,
                     rank_coverage_curve, run_permutation_study, select_variables,
                     spiked_permutation, threshold_at)
from partret.permfdr import NoThreshold

d = gen_example5(n=400, mu0=4.0, seed=7, S=200)
cfg = ScreeningConfig(m=7, n_s=5000, seed=7)
study = run_permutation_study(d, cfg, b=20, seed=7)
curve = fdr_curve(study)
print("threshold  M1   fdr")
for k in range(len(curve.thresholds) - 1, -1, -max(1, len(curve.thresholds) // 12)):
    print(f"{curve.thresholds[k]:9.2f}  {curve.m1[k]:4d}  {curve.fdr_capped[k]:.3f}")

try:
    thr = threshold_at(curve, 0.3)
    chosen = select_variables(study.observed, thr)
    print(f"\nthreshold at fdr 0.3: I >= {thr:.2f}")
    print("selected:", ", ".join(f"{d.names[v]}({c})" for v, c in chosen.items()))
except NoThreshold:
    print("\nno threshold reaches fdr 0.3")

# keep X1..X7 aligned with y, scramble everything else, and ask how deep
# the I1 ranking must go to capture them
sp = spiked_permutation(d, range(7), seed=7)
curve = rank_coverage_curve(marginal_ranking(sp, "i1"), range(7))
print("\nretained  fraction of X1..X7 captured (I1 on spiked data)")
for count, frac in curve[:12]:
    print(f"{count:8d}  {frac:.2f}")

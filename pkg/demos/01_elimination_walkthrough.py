"""Backward elimination on one Example 1 dataset.

Six binary variables, y ~ N(X1*X2, 1).  Starting from all six, the variable
with the smallest drop score is removed until every remaining score is
positive; the survivors are retained.
"""
from partret import build_partition, eliminate, gen_example1, influence_I

d = gen_example1(n=200, seed=1)
print(f"n={d.n}, S={d.S}, initial I over all six = "
      f"{influence_I(build_partition(d, range(6))):.2f}")

trace = eliminate(d, range(6))
print("\nstep  I before   drop scores (variable: D)                          discard")
for k, step in enumerate(trace.steps, 1):
    scores = "  ".join(f"{d.names[s.variable]}:{s.d_value:+.2f}" for s in step.drop_scores)
    print(f"{k:>4}  {step.i_before:8.2f}   {scores:<50} {d.names[step.dropped]}")
final = "  ".join(f"{d.names[s.variable]}:{s.d_value:+.2f}" for s in trace.final_scores)
print(f"final {trace.stopping_i:8.2f}   {final}")
print(f"\nretained {[d.names[v] for v in trace.retained]} ({trace.stop_reason})")

# the same elimination over many regenerated datasets
hits = sum(eliminate(gen_example1(200, s), range(6)).retained == (0, 1) for s in range(100))
print(f"{{X1, X2}} retained exactly in {hits} of 100 regenerated datasets")

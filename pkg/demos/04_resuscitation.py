"""Resuscitation: stratified re-screening seeded by an initial ranking.

Each stage takes the current top-L list, draws three subset members from
the list and four from the rest, and re-ranks.  Weak influential variables
get paired with strong ones far more often than uniform sampling allows.
"""
from partret import gen_example5, marginal_ranking, resuscitate

d = gen_example5(n=400, mu0=4.0, seed=1)
init = marginal_ranking(d, "i1")
stages = resuscitate(d, init, [(10, 3, 100_000), (15, 3, 100_000)], m=7, seed=1)

print("variable  " + "  ".join(f"{lab:>7}" for lab in ["I1", *(r.method for r in stages)]))
for v in range(7):
    row = [init.rank_of(v), *(r.rank_of(v) for r in stages)]
    print(f"{d.names[v]:>8}  " + "  ".join(f"{x:7g}" for x in row))

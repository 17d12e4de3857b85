# %% [markdown]
# # The doubled pair
#
# D2 has four points (i, j) with I00 and I11 marking the first coordinate
# and S swapping the second.  Its automorphisms form a group of order 4,
# and the core built from its type space has the same group.

# %%
from plcore.catalog import doubled_interval, doubled_interval_theory
from plcore.corecalc import aut_compare, core_of_theory, repeated_core_check
from plcore.formula import FormulaPool
from plcore.hom import automorphisms
from plcore.splus import build_splus, one_point_extensions, splus_core
from plcore.typespace import build_typespace

d2 = doubled_interval()
t = doubled_interval_theory()
print(d2.dumps())
print(len(automorphisms(d2)), "automorphisms")

# %%
ts = build_typespace(d2, None, 2)
print(ts)
print([ts.iota("s", e).index for e in range(4)])

# %%
res = core_of_theory(t, d2, FormulaPool(d2.signature, 1, 2, 3), k=2, with_pi=True)
print(res.core)
cmp = aut_compare(d2, res)
print(cmp.order_model, cmp.order_core, cmp.ok)

# %%
# running the construction on the core gives the core back
rep = repeated_core_check(res, FormulaPool(res.core.signature, 0, 1, 2), k2=1)
print(rep.ok, rep.first_size, rep.second_size)

# %%
# types realised in continuations collapse to a single point
sp = build_splus(d2, t, 1, 1, models=one_point_extensions(d2, t, isolated=1))
print(sp)
_, core, _, _ = splus_core(sp, FormulaPool(d2.signature, 1, 2, 2))
print(core.universe)

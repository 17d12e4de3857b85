# %% [markdown]
# # Three disjoint subsets
#
# The theory says that no element lies in two of P0, P1, P2.  Every model
# maps into the three-point model U3 with one point in each set, and U3 is
# the only positively closed model.

# %%
from plcore.catalog import disjoint_subsets_theory
from plcore.corecalc import core_invariants, core_of_theory
from plcore.formula import FormulaPool
from plcore.theory import find_inequality_definition, find_universal, pc_survey

t3 = disjoint_subsets_theory()
print(t3)

# %%
v = find_universal(t3, 4)
u3 = v.value
print(v.status)
print(u3.dumps())

# %%
# every other model up to size 4 has a point that can still be pushed into a set
for m, verdict in pc_survey(t3, 4)[:6]:
    print(dict(m.universe), {n: sorted(m.tables[n]) for n in m.signature.names}, verdict.status)

# %%
# inequality is a disjunction of P_i(x0) & P_j(x1)
phi = find_inequality_definition(u3, FormulaPool(u3.signature, 0, 2, 2))["s"]
print(phi)

# %%
res = core_of_theory(t3, u3, FormulaPool(u3.signature, 1, 2, 2), k=1)
print(res.core)
print(core_invariants(res))

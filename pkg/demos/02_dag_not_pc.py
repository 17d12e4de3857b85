# %% [markdown]
# # Directed acyclic graphs
#
# Forbidding cycles of length at most 4 leaves every finite DAG short of
# being positively closed: some pp formula fails in the DAG but becomes
# true after adding points and edges.

# %%
from plcore.catalog import dag_theory
from plcore.theory import enumerate_models, pc_check

dag4 = dag_theory(4)
dags = enumerate_models(dag4, 3)
print(len(dags), "DAGs with at most 3 vertices")

# %%
for m in dags:
    v = pc_check(m, dag4, 4)
    edges = sorted(m.tables["E"])
    print(m.universe["s"], edges, v.status)
    print("   ", v.witness.describe())

# %% [markdown]
# # First-order formulas as relations
#
# Adding a relation for every first-order formula of a finite pool turns
# elementary maps into plain homomorphisms.  On the 3-chain only the
# identity survives.

# %%
import itertools

from plcore.catalog import linear_order
from plcore.hom import Hom
from plcore.morley import elementary_check, fo_pool, morleyize, same_automorphisms, tp_expand

chain = linear_order(3)
pool = fo_pool(chain.signature, rank=2, arity=2, references=[chain])
print(len(pool), "formulas")
for e in pool[:8]:
    print(" ", e.text())

# %%
mp, manifest = morleyize(chain, pool)
for img in itertools.product(range(3), repeat=3):
    h = {"s": img}
    el = elementary_check(h, chain, chain, pool)
    assert el == Hom(mp, mp, h).is_homomorphism()
    if el:
        print("elementary:", img)

# %%
sigmas = [["exists z. L(x,z) & L(z,y)"], ["exists y. L(x,y)"]]
mtp = tp_expand(chain, sigmas)
print({n: sorted(mtp.tables[n]) for n in ("Sigma0", "Sigma1")})
print(same_automorphisms(chain, mtp))

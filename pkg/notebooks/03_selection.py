# %% [markdown]
# # Choosing K and phi
#
# Each (K, phi) cell of a small grid is fitted and BIC is compared. phi is
# taken where BIC is lowest. Along that phi, K is picked at the largest
# second difference of BIC.

# %%
import logging
import warnings

from scsar import Family, choose_elbow, grid_search
from scsar.errors import ClusterRepair
from scsar.synthesis import ClusterParams, SyntheticSpec, generate

logging.basicConfig(level=logging.WARNING)
bands = [
    ClusterParams((2.0, -1.0), 0.03, 0.5),
    ClusterParams((-1.0, 3.0), 0.00, 0.5),
    ClusterParams((0.0, 1.0), 0.05, 0.5),
]
sim = generate(SyntheticSpec(bands, shape=(15, 15), seed=7))

with warnings.catch_warnings():
    warnings.simplefilter("ignore", ClusterRepair)
    grid = grid_search(sim.dataset, sim.weights, Family.SAR, [1, 2, 3, 4], [0.5, 1.0], seeds=[0, 1, 2])

for (k, phi), bic in sorted(grid.bic_table().items(), key=lambda kv: (kv[0][1], kv[0][0])):
    print(f"phi={phi:<4} K={k}  BIC {bic:9.2f}")

# %%
choice = choose_elbow(grid)
print("chosen:", tuple(choice), "fallback" if choice.fallback else "", "ambiguous" if choice.ambiguous else "")

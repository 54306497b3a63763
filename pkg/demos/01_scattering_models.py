"""Grouped scattering matrices: permutations, blocks and the Cayley map.

A group-connected surface splits its N ports into G groups of N_G ports.
Inside a group every port is tied to every other one through a lossless
reactance network; across groups there is no connection.
"""
import numpy as np

from bdris import (GroupingStrategy, ScatteringBlocks, assemble_scattering, cayley_scattering,
                   count_groupings, permutation_matrix, reactance_from_scattering,
                   sequential_grouping)

rng = np.random.default_rng(1)

# How many distinct groupings exist?  Grows very quickly with N.
for N, ng in [(4, 2), (8, 2), (16, 4), (64, 4)]:
    print(f"N={N:3d} N_G={ng}: {count_groupings(N, ng)} groupings")

# A strategy is a permutation read in consecutive chunks of N_G.
s = GroupingStrategy((0, 5, 2, 7, 1, 3, 4, 6), 4)
print("groups (1-based):", s.to_string())
print("same partition, other order:", s == GroupingStrategy((7, 2, 5, 0, 6, 4, 3, 1), 4))
print(permutation_matrix(s).astype(int))

# Reactance blocks -> scattering blocks.  Any real symmetric X works.
X = rng.normal(scale=50.0, size=(2, 4, 4))
X = X + X.transpose(0, 2, 1)
blocks = ScatteringBlocks(cayley_scattering(X, Z0=50.0))
theta = assemble_scattering(s, blocks)

print("max |Theta - Theta^T|  :", np.abs(theta - theta.T).max())
print("max |Theta^H Theta - I|:", np.abs(theta.conj().T @ theta - np.eye(8)).max())
# entries outside the groups are exactly zero
print("nonzero pattern:\n", (np.abs(theta) > 0).astype(int))

# and back again
print("reactance round trip error:", np.abs(reactance_from_scattering(blocks.blocks) - X).max())
print("X = 0 gives Theta = -I:", np.allclose(cayley_scattering(np.zeros((3, 3))), -np.eye(3)))
print("sequential grouping:", sequential_grouping(8, 2).to_string())

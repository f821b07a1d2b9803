"""Full tensor-product representation for small N: the brute-force oracle.

Everything here exists to validate the symmetric-subspace solvers on N <= 4
atoms, where the 2^N / 3^N product space is still tractable.  The symmetric
embedding isometry maps collective-basis states to their permutation-symmetric
product-space counterparts, so the two representations can be compared
entrywise.
"""

from __future__ import annotations

from itertools import product as iproduct
from math import comb, factorial

import numpy as np

from .algebra import LEVELS, CollectiveBasis

__all__ = [
    "single_atom_sum",
    "symmetric_embedding",
    "collective_lowering_product",
    "product_dim",
]

# Single-atom level order matches the collective labels: two-level (g, e)
# (index = occupation of e), three-level (s, e, g).
_TWO_LEVEL = ("g", "e")


def product_dim(basis: CollectiveBasis) -> int:
    return basis.level_count**basis.n_atoms


def _single_atom_matrix(level_count: int, a: int, b: int) -> np.ndarray:
    m = np.zeros((level_count, level_count), dtype=np.complex128)
    m[a, b] = 1.0
    return m


def single_atom_sum(basis: CollectiveBasis, op1: np.ndarray) -> np.ndarray:
    """sum_j op1 acting on atom j, as a product-space matrix."""
    n = basis.n_atoms
    d = basis.level_count
    eye = np.eye(d, dtype=np.complex128)
    total = np.zeros((d**n, d**n), dtype=np.complex128)
    for j in range(n):
        term = np.array([[1.0 + 0j]])
        for k in range(n):
            term = np.kron(term, op1 if k == j else eye)
        total += term
    return total


def collective_lowering_product(basis: CollectiveBasis) -> np.ndarray:
    """Collective jump operator in the product space.

    Two-level: sum_j |g><e|_j;  three-level: sum_j |g><e|_j (the e->g emission
    channel of the Lambda system).
    """
    if basis.level_count == 2:
        op1 = _single_atom_matrix(2, _TWO_LEVEL.index("g"), _TWO_LEVEL.index("e"))
    else:
        op1 = _single_atom_matrix(3, LEVELS.index("g"), LEVELS.index("e"))
    return single_atom_sum(basis, op1)


def single_atom_transfer(level_count: int, a: str, b: str) -> np.ndarray:
    """|a><b| for one atom in the level order used by the product space."""
    order = _TWO_LEVEL if level_count == 2 else LEVELS
    return _single_atom_matrix(level_count, order.index(a), order.index(b))


def symmetric_embedding(basis: CollectiveBasis) -> np.ndarray:
    """Isometry V (product_dim x basis.dim): columns are the normalized
    permutation-symmetric states for each collective label."""
    n = basis.n_atoms
    d = basis.level_count
    V = np.zeros((d**n, basis.dim), dtype=np.complex128)
    for col, label in enumerate(basis.state_labels):
        if basis.level_count == 2:
            counts = {1: label, 0: n - label}  # product index 1 = |e>
            weight = comb(n, label)
        else:
            ns, ne, ng = label
            counts = {0: ns, 1: ne, 2: ng}
            weight = factorial(n) // (factorial(ns) * factorial(ne) * factorial(ng))
        amp = 1.0 / np.sqrt(weight)
        for config in iproduct(range(d), repeat=n):
            if all(config.count(k) == c for k, c in counts.items()):
                idx = 0
                for c in config:
                    idx = idx * d + c
                V[idx, col] = amp
    return V

"""Pairwise NMI estimation and the filtered linkage tree FOS."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

MERGE_ONE_TOL = 1e-6


class EmptyPopulation(ValueError):
    pass


@numba.njit(cache=True)
def _nmi_kernel(pop, alpha):
    n, ell = pop.shape
    marg = np.zeros((ell, alpha))
    for r in range(n):
        for i in range(ell):
            marg[i, pop[r, i]] += 1.0
    h = np.zeros(ell)
    for i in range(ell):
        for a in range(alpha):
            if marg[i, a] > 0:
                q = marg[i, a] / n
                h[i] -= q * np.log(q)
    out = np.eye(ell)
    joint = np.zeros((alpha, alpha))
    for i in range(ell):
        for j in range(i + 1, ell):
            joint[:, :] = 0.0
            for r in range(n):
                joint[pop[r, i], pop[r, j]] += 1.0
            hj = 0.0  # 0 * log 0 := 0
            for a in range(alpha):
                for b in range(alpha):
                    if joint[a, b] > 0:
                        q = joint[a, b] / n
                        hj -= q * np.log(q)
            v = 0.0
            if hj > 0:
                v = min(max((h[i] + h[j] - hj) / hj, 0.0), 1.0)
            out[i, j] = v
            out[j, i] = v
    return out


def estimate_nmi_matrix(population, alphabet_size: Optional[int] = None) -> np.ndarray:
    """Normalized mutual information ``I(X_i; X_j) / H(X_i, X_j)`` for all column pairs.

    Pairs of constant columns (zero joint entropy) get 0; the diagonal is 1.
    """
    pop = np.ascontiguousarray(population, dtype=np.int64)
    if pop.ndim != 2 or pop.shape[0] == 0:
        raise EmptyPopulation("cannot estimate dependencies from an empty population")
    alpha = int(pop.max()) + 1 if alphabet_size is None else alphabet_size
    return _nmi_kernel(pop, alpha)


@dataclass
class TreeNode:
    members: tuple[int, ...]
    children: Optional[tuple[int, int]] = None
    similarity: Optional[float] = None  # similarity of the two children at merge time


@numba.njit(cache=True)
def _upgma(sim, uniforms):
    """Merge order as (row node, col node, similarity); ``sim`` is overwritten."""
    ell = sim.shape[0]
    merges = np.empty((ell - 1, 2), dtype=np.int64)
    sims = np.empty(ell - 1)
    active = np.arange(ell)  # row index in `sim` -> node index
    sizes = np.ones(ell)
    ties = np.empty((ell * (ell - 1) // 2, 2), dtype=np.int64)
    for step in range(ell - 1):
        m = ell - step
        best = -np.inf
        count = 0
        for i in range(m):
            for j in range(i + 1, m):
                v = sim[i, j]
                if v > best:
                    best = v
                    count = 0
                if v == best:
                    ties[count, 0] = i
                    ties[count, 1] = j
                    count += 1
        pick = min(int(uniforms[step] * count), count - 1) if count > 1 else 0
        a, b = ties[pick, 0], ties[pick, 1]
        merges[step, 0] = active[a]
        merges[step, 1] = active[b]
        sims[step] = best

        # Lance-Williams update for average linkage, merged cluster goes to row a
        wa, wb = sizes[a], sizes[b]
        for k in range(m):
            v = (wa * sim[a, k] + wb * sim[b, k]) / (wa + wb)
            sim[a, k] = v
            sim[k, a] = v
        sizes[a] = wa + wb
        active[a] = ell + step
        # drop row/col b by moving the last active cluster into its slot
        last = m - 1
        if b != last:
            for k in range(m):
                sim[b, k] = sim[last, k]
            for k in range(m):
                sim[k, b] = sim[k, last]
            sizes[b] = sizes[last]
            active[b] = active[last]
    return merges, sims


def linkage_tree(nmi: np.ndarray, rng: np.random.Generator) -> list[TreeNode]:
    """Agglomerative UPGMA clustering; returns all 2l-1 nodes, leaves first.

    Ties between equally similar cluster pairs are broken uniformly at random.
    """
    nmi = np.asarray(nmi, dtype=float)
    ell = nmi.shape[0]
    nodes = [TreeNode((i,)) for i in range(ell)]
    if ell == 1:
        return nodes
    merges, sims = _upgma(nmi.copy(), rng.random(ell - 1))
    for (x, y), best in zip(merges.tolist(), sims.tolist()):
        nodes.append(TreeNode(nodes[x].members + nodes[y].members, (x, y), best))
    return nodes


def filter_tree(nodes: list[TreeNode], ell: int) -> list[tuple[int, ...]]:
    removed = set()
    for node in nodes:
        if node.children is not None and node.similarity >= 1.0 - MERGE_ONE_TOL:
            removed.update(node.children)
    fos = []
    for idx, node in enumerate(nodes):
        if idx in removed or len(node.members) == ell:
            continue
        fos.append(tuple(sorted(node.members)))
    return fos


def build_filtered_linkage_tree(nmi: np.ndarray, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """FOS from the linkage tree without the root and without children merged at NMI 1."""
    nodes = linkage_tree(nmi, rng)
    return filter_tree(nodes, len(np.asarray(nmi)))


def learn_fos(population, alphabet_size: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    return build_filtered_linkage_tree(estimate_nmi_matrix(population, alphabet_size), rng)

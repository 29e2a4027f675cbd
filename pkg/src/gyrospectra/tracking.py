"""Nearest-neighbour branch continuation for sampled eigenvalue curves."""
from __future__ import annotations

import itertools

import numpy as np


def best_assignment(reference: np.ndarray, candidates: np.ndarray) -> tuple[int, ...]:
    """Permutation ``perm`` minimising ``sum |reference[i] - candidates[perm[i]]|``.

    Brute force over all permutations; the branch counts here are 2 or 4.
    Ties resolve to the lexicographically first permutation, which keeps
    repeated runs bit-identical.
    """
    reference = np.asarray(reference)
    candidates = np.asarray(candidates)
    k = len(reference)
    cost = np.abs(reference[:, None] - candidates[None, :])
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(k)):
        c = cost[range(k), perm].sum()
        if c < best_cost - 1e-300:
            best, best_cost = perm, c
    return tuple(best)


def continue_branches(samples, initial=None) -> np.ndarray:
    """Reorder each row of ``samples`` so that columns follow continuous branches.

    Parameters
    ----------
    samples : array_like, shape (n, k)
        Unordered eigenvalues at consecutive parameter values.
    initial : array_like, shape (k,), optional
        Reference values that fix the column order of the first row
        (e.g. the labelled unperturbed spectrum).

    The prediction for row ``j`` is the linear extrapolation of the two
    previous rows, so straight crossings of the spectral mesh are followed
    through the crossing rather than reflected off it.
    """
    s = np.array(samples, dtype=complex)
    out = np.empty_like(s)
    if len(s) == 0:
        return out
    first = s[0] if initial is None else s[0][list(best_assignment(np.asarray(initial), s[0]))]
    out[0] = first
    for j in range(1, len(s)):
        pred = out[j - 1] if j == 1 else 2 * out[j - 1] - out[j - 2]
        out[j] = s[j][list(best_assignment(pred, s[j]))]
    return out

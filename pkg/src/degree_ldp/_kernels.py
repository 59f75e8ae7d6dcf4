"""Compiled inner loops for the edge-flip Metropolis chain."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def flip_chain(adj, deg, ftab, log_odds, pair_u, pair_v, picks, uniforms, state, visits, track):
    """Run one batch of single-edge-flip Metropolis proposals in place.

    ``picks[t]`` indexes the proposed vertex pair. The graph bitmask ``state``
    follows every accepted flip (meaningful for up to 63 pairs); when
    ``track`` is set ``visits[state]`` is incremented after every proposal.
    Returns ``(accepted, state, edge_delta)``.
    """
    accepted = 0
    edge_delta = 0
    for t in range(picks.shape[0]):
        k = picks[t]
        u = pair_u[k]
        v = pair_v[k]
        du = deg[u]
        dv = deg[v]
        if adj[u, v]:
            delta = -(log_odds + ftab[du] - ftab[du - 1] + ftab[dv] - ftab[dv - 1])
        else:
            delta = log_odds + ftab[du + 1] - ftab[du] + ftab[dv + 1] - ftab[dv]
        if delta >= 0.0 or uniforms[t] < math.exp(delta):
            if adj[u, v]:
                adj[u, v] = 0
                adj[v, u] = 0
                deg[u] = du - 1
                deg[v] = dv - 1
                edge_delta -= 1
            else:
                adj[u, v] = 1
                adj[v, u] = 1
                deg[u] = du + 1
                deg[v] = dv + 1
                edge_delta += 1
            accepted += 1
            if k < 63:
                state ^= np.int64(1) << k
        if track:
            visits[state] += 1
    return accepted, state, edge_delta

"""Vectorized fixed-point sweeps over a state space's successor tables.

Every solver in the package reduces to one of two backups on the non-capture
states (capture states and the terminal keep pinned boundary values):

  zero-sum:  v(s) = gamma * opt_a v(succ(s, a)), opt = max or min per state;
  MDP:       v(s) = gamma * max_a v(succ(s, a)) where one player is free,
             v(s) = gamma * v(frozen successor) elsewhere.

Discounting makes both gamma-contractions, so sweeps converge geometrically.
"""

from __future__ import annotations

import math

import numpy as np

#: Slack used when scanning for the first optimal action. Genuine value gaps in
#: these games are powers of gamma times split constants, far above this; the
#: slack only absorbs float noise between branches that are equal by symmetry.
TIE_TOL = 1e-12

DEFAULT_VALUE_TOL = 1e-10


def iteration_cap(gamma: float, tol: float, margin: int = 50) -> int:
    """Sweeps needed to push a gamma-contraction below tol, plus margin."""
    return int(math.ceil(math.log(tol * (1.0 - gamma)) / math.log(gamma))) + margin


def zero_sum_backup(space, gamma, max_mask, v):
    """One synchronous sweep of the zero-sum operator on the non-capture rows."""
    gathered = v[space.succ]
    return gamma * np.where(max_mask, gathered.max(axis=1), gathered.min(axis=1))


def solve_zero_sum(space, fixed, gamma, max_mask, tol=DEFAULT_VALUE_TOL, cap=None, v0=None):
    """Value iteration with per-state max/min chosen by `max_mask`.

    `fixed` pins the boundary (capture states, terminal); those rows are never
    updated. Returns (values, iterations, residual).
    """
    if cap is None:
        cap = iteration_cap(gamma, tol)
    nc = space.is_noncapture
    v = fixed.astype(float).copy()
    if v0 is not None:
        v[nc] = v0[nc]
    else:
        v[nc] = 0.0
    residual = math.inf
    iterations = 0
    for iterations in range(1, cap + 1):
        new = zero_sum_backup(space, gamma, max_mask, v)
        residual = float(np.abs(new[nc] - v[nc]).max(initial=0.0))
        v[nc] = new[nc]
        if residual <= tol:
            break
    return v, iterations, residual


def solve_mdp(space, fixed, gamma, free_mask, frozen_succ, tol=DEFAULT_VALUE_TOL, cap=None, v0=None):
    """Best-response value iteration: `free_mask` rows maximize, the rest follow
    `frozen_succ` (the successor under the frozen opponents' profile)."""
    if cap is None:
        cap = iteration_cap(gamma, tol)
    nc = space.is_noncapture
    succ = space.succ
    v = fixed.astype(float).copy()
    if v0 is not None:
        v[nc] = v0[nc]
    else:
        v[nc] = 0.0
    residual = math.inf
    iterations = 0
    for iterations in range(1, cap + 1):
        gathered = v[succ]
        new = gamma * np.where(free_mask, gathered.max(axis=1), v[frozen_succ])
        residual = float(np.abs(new[nc] - v[nc]).max(initial=0.0))
        v[nc] = new[nc]
        if residual <= tol:
            break
    return v, iterations, residual


def greedy_moves(space, values, rows_mask, maximize=True, tie_tol=TIE_TOL):
    """First optimal action (ascending vertex order) per state in `rows_mask`.

    Returns a full-length move array, NULL (0) outside the requested rows.
    Padded action slots replicate slot 0, so a first-occurrence scan can never
    pick a padded slot before the identical real one.
    """
    moves = np.zeros(space.n_states, dtype=np.int64)
    rows = np.flatnonzero(rows_mask)
    if rows.size == 0:
        return moves
    gathered = values[space.succ[rows]]
    if maximize:
        best = gathered.max(axis=1)
        pick = (gathered >= best[:, None] - tie_tol).argmax(axis=1)
    else:
        best = gathered.min(axis=1)
        pick = (gathered <= best[:, None] + tie_tol).argmax(axis=1)
    moves[rows] = space.act[rows, pick]
    return moves

"""Dense enumeration of the full game state set.

A non-terminal state is a tuple (x1, ..., xN, p): token positions for the N-1
pursuers and the evader (player N), plus the index p of the player who moves
next. States are packed into a mixed-radix integer

    idx = ((...(x1-1)*V + (x2-1))*V + ... + (xN-1))*N + (p-1)

so value vectors are flat arrays; the single terminal state takes the last
index. Capture classification ignores the mover coordinate: a state is a
capture state iff some pursuer token sits on the evader's vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, IllegalMoveError, ValidationError
from .graph import Graph

#: The null move available at capture states and the terminal state.
NULL_MOVE = 0


class _Terminal:
    __slots__ = ()

    def __repr__(self):
        return "TERMINAL"


#: Distinguished absorbing terminal state marker.
TERMINAL = _Terminal()

DEFAULT_STATE_CAP = 50_000_000


@dataclass(frozen=True)
class StateClass:
    """Classification of a single state."""

    kind: str  # "noncapture" | "capture" | "terminal"
    capturing_set: tuple = ()


class StateSpace:
    """All states of an N-player game on a graph, with O(1) indexed lookups."""

    def __init__(self, graph: Graph, n_players: int, state_cap: int = DEFAULT_STATE_CAP):
        if n_players < 2:
            raise ValidationError(f"need at least 2 players, got {n_players}")
        v = graph.vertex_count
        n_nonterminal = n_players * v**n_players
        if n_nonterminal + 1 > state_cap:
            raise CapacityError(
                f"{n_players} players on {v} vertices need {n_nonterminal + 1} states, "
                f"above the cap of {state_cap}"
            )
        self.graph = graph
        self.n_players = n_players
        self.n_vertices = v
        self.n_states = n_nonterminal + 1
        self.terminal_index = n_nonterminal

        idx = np.arange(n_nonterminal, dtype=np.int64)
        self.mover = np.zeros(self.n_states, dtype=np.int64)
        self.mover[:n_nonterminal] = idx % n_players + 1
        self.positions = np.zeros((self.n_states, n_players), dtype=np.int64)
        rest = idx // n_players
        for i in reversed(range(n_players)):
            self.positions[:n_nonterminal, i] = rest % v + 1
            rest //= v
        robber = self.positions[:, -1]
        cop_on_robber = self.positions[:, :-1] == robber[:, None]
        cop_on_robber[self.terminal_index] = False
        self.is_capture = cop_on_robber.any(axis=1)
        self.is_capture[self.terminal_index] = False
        self.capture_count = cop_on_robber.sum(axis=1)
        self._cop_on_robber = cop_on_robber
        self.is_nonterminal = np.ones(self.n_states, dtype=bool)
        self.is_nonterminal[self.terminal_index] = False
        self.is_noncapture = self.is_nonterminal & ~self.is_capture
        self._succ = None
        self._act = None
        self._acount = None
        self._max_actions = max(graph.degree(u) for u in range(1, v + 1)) + 1

    # -- state <-> index ---------------------------------------------------

    def index_of(self, state) -> int:
        if state is TERMINAL:
            return self.terminal_index
        self._check_state(state)
        acc = 0
        for x in state[:-1]:
            acc = acc * self.n_vertices + (x - 1)
        return acc * self.n_players + (state[-1] - 1)

    def state_at(self, idx: int):
        if idx == self.terminal_index:
            return TERMINAL
        if not 0 <= idx < self.n_states:
            raise ValidationError(f"state index {idx} out of range")
        return tuple(int(x) for x in self.positions[idx]) + (int(self.mover[idx]),)

    def _check_state(self, state) -> None:
        if len(state) != self.n_players + 1:
            raise ValidationError(
                f"state must have {self.n_players} positions plus a mover, got {state!r}"
            )
        for x in state[:-1]:
            if not 1 <= x <= self.n_vertices:
                raise ValidationError(f"position {x} out of range 1..{self.n_vertices} in {state!r}")
        if not 1 <= state[-1] <= self.n_players:
            raise ValidationError(f"mover {state[-1]} out of range 1..{self.n_players} in {state!r}")

    def _as_index(self, s) -> int:
        return s if isinstance(s, (int, np.integer)) else self.index_of(s)

    # -- classification, actions, transition -------------------------------

    def classify(self, s) -> StateClass:
        idx = self._as_index(s)
        if idx == self.terminal_index:
            return StateClass("terminal")
        if self.is_capture[idx]:
            capturing = tuple(int(i) + 1 for i in np.flatnonzero(self._cop_on_robber[idx]))
            return StateClass("capture", capturing)
        return StateClass("noncapture")

    def capturing_set(self, s) -> tuple:
        return self.classify(s).capturing_set

    def actions(self, s, player: int) -> list:
        """Legal moves of `player` at state `s` (not necessarily the mover)."""
        if not 1 <= player <= self.n_players:
            raise ValidationError(f"player {player} out of range 1..{self.n_players}")
        idx = self._as_index(s)
        if idx == self.terminal_index or self.is_capture[idx]:
            return [NULL_MOVE]
        if self.mover[idx] == player:
            return self.graph.closed_neighborhood(int(self.positions[idx, player - 1]))
        return [int(self.positions[idx, player - 1])]

    def transition(self, s, action: int):
        """Apply the mover's action; capture states and the terminal absorb into the terminal."""
        idx = self._as_index(s)
        if idx == self.terminal_index or self.is_capture[idx]:
            if action != NULL_MOVE:
                raise IllegalMoveError(f"only the null move is legal at {self.state_at(idx)!r}")
            return TERMINAL
        p = int(self.mover[idx])
        if action not in self.actions(idx, p):
            raise IllegalMoveError(
                f"action {action} not legal for player {p} at {self.state_at(idx)!r}"
            )
        return self.state_at(self.transition_index(idx, action))

    def transition_index(self, idx: int, action: int) -> int:
        """Index-level transition; assumes a legal mover action at a non-capture state."""
        p = int(self.mover[idx])
        x = int(self.positions[idx, p - 1])
        stride = self.n_players * self.n_vertices ** (self.n_players - p)
        dp = 1 if p < self.n_players else 1 - self.n_players
        return idx + (action - x) * stride + dp

    # -- dense successor tables (built lazily, used by the solvers) --------

    def _build_tables(self):
        n, v, k = self.n_states, self.n_vertices, self._max_actions
        succ = np.full((n, k), self.terminal_index, dtype=np.int64)
        act = np.full((n, k), NULL_MOVE, dtype=np.int64)
        acount = np.ones(n, dtype=np.int64)
        all_idx = np.arange(n, dtype=np.int64)
        for p in range(1, self.n_players + 1):
            stride = self.n_players * v ** (self.n_players - p)
            dp = 1 if p < self.n_players else 1 - self.n_players
            rows_p = all_idx[(self.mover == p) & self.is_noncapture]
            xp = self.positions[rows_p, p - 1]
            for vert in range(1, v + 1):
                rows = rows_p[xp == vert]
                if rows.size == 0:
                    continue
                moves = self.graph.closed_neighborhood(vert)
                acount[rows] = len(moves)
                for j in range(k):
                    a = moves[j] if j < len(moves) else moves[0]  # pad with first move
                    succ[rows, j] = rows + (a - vert) * stride + dp
                    act[rows, j] = a
        self._succ, self._act, self._acount = succ, act, acount

    @property
    def succ(self) -> np.ndarray:
        """(n_states, K) successor indices for the mover's sorted actions, right-padded."""
        if self._succ is None:
            self._build_tables()
        return self._succ

    @property
    def act(self) -> np.ndarray:
        """(n_states, K) action vertices aligned with `succ`."""
        if self._act is None:
            self._build_tables()
        return self._act

    @property
    def acount(self) -> np.ndarray:
        """Number of real (unpadded) actions per state."""
        if self._acount is None:
            self._build_tables()
        return self._acount

    def slot_mask(self) -> np.ndarray:
        """(n_states, K) boolean mask of real action slots."""
        return np.arange(self._max_actions)[None, :] < self.acount[:, None]

    def succ_of_moves(self, moves: np.ndarray) -> np.ndarray:
        """Successor index for each non-capture state when the mover plays moves[idx].

        Capture states and the terminal map to the terminal index.
        """
        out = np.full(self.n_states, self.terminal_index, dtype=np.int64)
        nc = np.flatnonzero(self.is_noncapture)
        p = self.mover[nc]
        x = self.positions[nc, p - 1]
        stride = self.n_players * self.n_vertices ** (self.n_players - p)
        dp = np.where(p < self.n_players, 1, 1 - self.n_players)
        out[nc] = nc + (moves[nc] - x) * stride + dp
        return out


def build_state_space(graph: Graph, n_players: int, state_cap: int = DEFAULT_STATE_CAP) -> StateSpace:
    return StateSpace(graph, n_players, state_cap)


def classify(space: StateSpace, s) -> StateClass:
    return space.classify(s)


def actions(space: StateSpace, s, player: int) -> list:
    return space.actions(s, player)


def transition(space: StateSpace, s, action: int):
    return space.transition(s, action)

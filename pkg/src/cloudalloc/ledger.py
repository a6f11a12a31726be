"""Storage-allocation reporting on top of the map.

Converts raw orbit values into the operational quantities an operator
would track: per-stage allocations in bytes, per-user demand rates,
traffic differences between stages, and chunk-count sequences.

Byte quantities are decimal throughout (1 Gb = 1000 Mb = 10^9 bytes).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .model import ModelParams, SystemState, Trajectory, step_general, step_two_user

MEGABYTE = 1_000_000.0
GIGABYTE = 1_000_000_000.0


class OutOfRangeError(IndexError):
    """A requested stage or user index is not covered by the trajectory."""


def _sign(value: float) -> int:
    return (value > 0.0) - (value < 0.0)


@dataclass(frozen=True)
class UserAllocation:
    """One user's allocation at a stage: magnitude in bytes plus the raw
    sign of xi_i * x_i (the alternating sign measures transfer direction
    relative to the other users, it is not an error)."""

    magnitude: float
    sign: int

    @property
    def raw(self) -> float:
        return self.sign * self.magnitude


@dataclass(frozen=True)
class AllocationRecord:
    l: int
    owner_alloc: float                      # alpha * v_c, in bytes
    user_alloc: tuple[UserAllocation, ...]  # xi_i * x_i, in bytes


@dataclass(frozen=True)
class NodeSeries:
    """N_i = xi_i * x_i for one user over a contiguous stage range."""

    user: int          # 1-based user index
    start_stage: int
    values: tuple[float, ...]


@dataclass(frozen=True)
class ChunkSeries:
    """Chunk counts under c' = c - c*v_c, kept as reals; rounding is a
    display concern only."""

    c0: float
    values: tuple[float, ...]

    def rounded(self) -> tuple[int, ...]:
        """Half-up integer view of the counts."""
        return tuple(
            int(Decimal(v).quantize(Decimal(1), rounding=ROUND_HALF_UP))
            for v in self.values
        )


def allocation_report(
    params: ModelParams,
    s0: SystemState,
    stages,
    unit_scale: float,
) -> list[AllocationRecord]:
    """Iterate once from s0 and sample allocations at the requested stages.

    `stages` must be sorted ascending and lie at or after s0's stage;
    `unit_scale` is bytes per model unit.  Divergence surfaces as
    DivergenceError from the underlying step.
    """
    stages = list(stages)
    if any(b <= a for a, b in zip(stages, stages[1:])):
        raise ValueError(f"stages must be strictly ascending, got {stages}")
    if stages and stages[0] < s0.l:
        raise OutOfRangeError(f"stage {stages[0]} precedes the initial stage {s0.l}")

    step = step_two_user if params.n_users == 2 else step_general
    records = []
    state = s0
    for target in stages:
        while state.l < target:
            state = step(params, state)
        records.append(
            AllocationRecord(
                l=state.l,
                owner_alloc=params.alpha * state.v_c * unit_scale,
                user_alloc=tuple(
                    UserAllocation(magnitude=abs(raw), sign=_sign(raw))
                    for raw in (
                        xi_i * x_i * unit_scale
                        for xi_i, x_i in zip(params.xi, state.x)
                    )
                ),
            )
        )
    return records


def demand_rate(params: ModelParams, s: SystemState) -> tuple[float, ...]:
    """Per-user demand rates q_i = xi_i * x_i * v_c at the given state."""
    return tuple(xi_i * x_i * s.v_c for xi_i, x_i in zip(params.xi, s.x))


def traffic_split(traj: Trajectory, user: int, l_lo: int, l_hi: int) -> float:
    """Demand difference x_i(l_lo) - x_i(l_hi) for one user (1-based)."""
    if not 1 <= user <= traj.params.n_users:
        raise OutOfRangeError(f"user index {user} outside 1..{traj.params.n_users}")
    if l_lo > l_hi:
        raise OutOfRangeError(f"stage window is empty: {l_lo} > {l_hi}")
    try:
        lo_state = traj.state_at(l_lo)
        hi_state = traj.state_at(l_hi)
    except IndexError as exc:
        raise OutOfRangeError(str(exc)) from exc
    return lo_state.x[user - 1] - hi_state.x[user - 1]


def node_series(traj: Trajectory, user: int) -> NodeSeries:
    """Node sizes N_i = xi_i * x_i along the trajectory for one user."""
    if not 1 <= user <= traj.params.n_users:
        raise OutOfRangeError(f"user index {user} outside 1..{traj.params.n_users}")
    xi_i = traj.params.xi[user - 1]
    return NodeSeries(
        user=user,
        start_stage=traj.states[0].l if traj.states else 0,
        values=tuple(xi_i * s.x[user - 1] for s in traj.states),
    )


def chunk_sequence(c0: float, v_series) -> ChunkSeries:
    """Chunk counts from c0 under c' = c - c*v for each capacity value."""
    if c0 <= 0:
        raise ValueError(f"initial chunk count must be > 0, got {c0}")
    values = [float(c0)]
    c = float(c0)
    for v in v_series:
        c = c - c * v
        values.append(c)
    return ChunkSeries(c0=float(c0), values=tuple(values))

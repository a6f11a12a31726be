"""Discrete owner/user storage-allocation map.

One owner holds a capacity level v_c; each of n users holds a demand
level x_i.  Per stage the capacity is rescaled by alpha and debited by
the signed user allocations (-1)^i * xi_i * x_i, while each demand is
driven by its own allocation times the capacity minus everyone else's
allocations.  The two-user form gets a dedicated fast path; both forms
are kept bit-for-bit identical.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

# A state is declared divergent as soon as any component leaves this
# bound (or stops being finite); the quadratic terms permit unbounded
# orbits and we fail loudly instead of emitting infinities.
DIVERGENCE_BOUND = 1e12


class DivergenceError(RuntimeError):
    """An iterate left the divergence bound at stage `stage`."""

    def __init__(self, stage: int, value: float):
        self.stage = stage
        self.value = value
        super().__init__(
            f"orbit diverged at stage {stage} (component magnitude {value!r} "
            f"exceeds {DIVERGENCE_BOUND:g} or is not finite)"
        )


@dataclass(frozen=True)
class ModelParams:
    """Scaling parameters of the allocation map.

    alpha: capacity rescale factor, 0 < alpha <= 1.
    xi:    per-user demand scale factors, all >= 0.
    v_max: maximum owner capacity in storage units, > 0.

    The alternating-sign scale sum  sum_i (-1)^i xi_i  should not exceed 1;
    a violation is reported as a warning rather than rejected, since the
    map itself stays well defined.
    """

    alpha: float
    xi: tuple[float, ...]
    v_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if len(self.xi) < 1:
            raise ValueError("at least one user scale xi_i is required")
        if any(v < 0.0 for v in self.xi):
            raise ValueError(f"all xi_i must be >= 0, got {self.xi}")
        if self.v_max <= 0.0:
            raise ValueError(f"v_max must be > 0, got {self.v_max}")
        if self.signed_scale_sum() > 1.0:
            warnings.warn(
                "alternating scale sum exceeds 1; the map is still iterated "
                "but the capacity constraint cannot hold",
                stacklevel=2,
            )

    @classmethod
    def two_user(cls, alpha: float, xi1: float, xi2: float, v_max: float = 1.0) -> "ModelParams":
        return cls(alpha=alpha, xi=(xi1, xi2), v_max=v_max)

    @property
    def n_users(self) -> int:
        return len(self.xi)

    @property
    def xi1(self) -> float:
        self._require_two_user()
        return self.xi[0]

    @property
    def xi2(self) -> float:
        self._require_two_user()
        return self.xi[1]

    def signed_scale_sum(self) -> float:
        """sum_i (-1)^i xi_i with users indexed from 1."""
        return math.fsum(
            (xi_i if i % 2 == 0 else -xi_i) for i, xi_i in enumerate(self.xi, start=1)
        )

    def _require_two_user(self):
        if len(self.xi) != 2:
            raise ValueError(f"operation requires exactly two users, got {len(self.xi)}")


@dataclass(frozen=True)
class SystemState:
    """Map state at stage l: capacity v_c and demands x = (x_1, ..., x_n)."""

    l: int
    v_c: float
    x: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if self.l < 0:
            raise ValueError(f"stage index must be >= 0, got {self.l}")

    def components(self) -> tuple[float, ...]:
        return (self.v_c, *self.x)

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in self.components())


@dataclass(frozen=True)
class ConstraintReport:
    """Truth values of the capacity constraint 0 < S <= alpha*v_c <= v_max,
    where S is the alternating allocation sum at the given state."""

    allocation_sum: float
    scaled_capacity: float
    v_max: float
    sum_positive: bool
    sum_within_capacity: bool
    capacity_within_max: bool

    @property
    def satisfied(self) -> bool:
        return self.sum_positive and self.sum_within_capacity and self.capacity_within_max


@dataclass(frozen=True)
class Trajectory:
    """Consecutive states of one orbit under fixed parameters."""

    params: ModelParams
    states: tuple[SystemState, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        for a, b in zip(self.states, self.states[1:]):
            if b.l != a.l + 1:
                raise ValueError(f"stages must be consecutive, got {a.l} -> {b.l}")

    def state_at(self, l: int) -> SystemState:
        if not self.states:
            raise IndexError("empty trajectory")
        offset = l - self.states[0].l
        if not 0 <= offset < len(self.states):
            raise IndexError(
                f"stage {l} outside trajectory range "
                f"[{self.states[0].l}, {self.states[-1].l}]"
            )
        return self.states[offset]

    def replay_check(self) -> bool:
        """True iff every stored transition reproduces under the map bit-for-bit."""
        for a, b in zip(self.states, self.states[1:]):
            c = step_general(self.params, a)
            if c.v_c != b.v_c or c.x != b.x:
                return False
        return True


def _check_divergence(stage: int, components: tuple[float, ...]) -> None:
    for c in components:
        if not math.isfinite(c) or abs(c) > DIVERGENCE_BOUND:
            raise DivergenceError(stage, c)


def step_general(params: ModelParams, s: SystemState) -> SystemState:
    """Advance one stage for any number of users.

    v'   = alpha*v - sum_i (-1)^i xi_i x_i
    x_i' = (-1)^i xi_i x_i v - sum_{j != i} (-1)^j xi_j x_j
    """
    if len(s.x) != params.n_users:
        raise ValueError(
            f"state has {len(s.x)} demand components but params define {params.n_users} users"
        )
    # signed terms t_i = ((-1)^i xi_i) * x_i, users indexed from 1
    terms = []
    for i, (xi_i, x_i) in enumerate(zip(params.xi, s.x), start=1):
        sign = -1.0 if i % 2 else 1.0
        terms.append((sign * xi_i) * x_i)

    total = 0.0
    for t in terms:
        total += t
    v_next = params.alpha * s.v_c - total

    x_next = []
    for i, t_i in enumerate(terms):
        other = 0.0
        for j, t_j in enumerate(terms):
            if j != i:
                other += t_j
        x_next.append(t_i * s.v_c - other)

    nxt = SystemState(l=s.l + 1, v_c=v_next, x=tuple(x_next))
    _check_divergence(nxt.l, nxt.components())
    return nxt


def step_two_user_raw(
    alpha: float, xi1: float, xi2: float, v: float, x1: float, x2: float
) -> tuple[float, float, float]:
    """Raw two-user update; no divergence check, no state wrapper.

    v'  = alpha*v + xi1*x1 - xi2*x2
    x1' = -xi1*x1*v - xi2*x2
    x2' =  xi1*x1 + xi2*x2*v

    Term grouping mirrors step_general so the n=2 results are bit-identical.
    """
    u1 = xi1 * x1
    u2 = xi2 * x2
    return (
        alpha * v - (u2 - u1),
        -(u1 * v) - u2,
        u2 * v + u1,
    )


def step_two_user(params: ModelParams, s: SystemState) -> SystemState:
    """Advance one stage of the two-user specialization."""
    params._require_two_user()
    if len(s.x) != 2:
        raise ValueError(f"two-user step needs a 2-demand state, got {len(s.x)}")
    v, x1, x2 = step_two_user_raw(
        params.alpha, params.xi[0], params.xi[1], s.v_c, s.x[0], s.x[1]
    )
    nxt = SystemState(l=s.l + 1, v_c=v, x=(x1, x2))
    _check_divergence(nxt.l, nxt.components())
    return nxt


def iterate(
    params: ModelParams, s0: SystemState, steps: int, transient: int = 0
) -> Trajectory:
    """Apply the map `steps` times from s0 and keep the last steps - transient states.

    The returned trajectory holds the states at stages s0.l + transient + 1
    through s0.l + steps; s0 itself is never included.  Raises
    DivergenceError (with the offending stage) if the orbit leaves the bound.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if not 0 <= transient < steps:
        raise ValueError(f"transient must lie in [0, steps), got {transient}")

    step = step_two_user if params.n_users == 2 else step_general
    state = s0
    kept = []
    for k in range(steps):
        state = step(params, state)
        if k >= transient:
            kept.append(state)
    return Trajectory(params=params, states=tuple(kept))


def check_constraint(params: ModelParams, s: SystemState) -> ConstraintReport:
    """Report each clause of 0 < sum_i (-1)^i xi_i x_i <= alpha*v_c <= v_max."""
    total = 0.0
    for i, (xi_i, x_i) in enumerate(zip(params.xi, s.x), start=1):
        sign = -1.0 if i % 2 else 1.0
        total += (sign * xi_i) * x_i
    scaled = params.alpha * s.v_c
    return ConstraintReport(
        allocation_sum=total,
        scaled_capacity=scaled,
        v_max=params.v_max,
        sum_positive=total > 0.0,
        sum_within_capacity=total <= scaled,
        capacity_within_max=scaled <= params.v_max,
    )

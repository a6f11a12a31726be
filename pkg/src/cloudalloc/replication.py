"""Cyclic replica placement and the exact data-loss probability engine.

Each of n nodes is replicated three times: a full primary copy P_i plus
two half copies S1_i and S2_i.  Blocks are formed cyclically on two
racks -- owner block i holds {P_i, S1_{i+1}, S2_{i+2}} on four machines
(the primary is split across two), user block i holds
{S1_i, S2_{i+1}, S1_{i+2}} on three -- giving 7n machines in total.

Loss probabilities come from the survival generating polynomial
(1 + 7x + 21x^2 + 34x^3 + 30x^4 + 12x^5)^n, whose coefficients count the
failure subsets of a 7-machine group that destroy no half; see failsim
for the brute-force reconstruction of those counts.  All combinatorics
are exact (big integers / rationals) with a log-domain fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

BASE_COEFFS = (
    1,
    math.comb(7, 6),                                  # 7
    math.comb(7, 5),                                  # 21
    math.comb(7, 4) - 1,                              # 34
    math.comb(7, 3) - math.comb(4, 3) - 1,            # 30
    math.comb(7, 2) - math.comb(4, 2) - math.comb(3, 2),  # 12
)

MACHINES_PER_NODE = 7
OWNER_MACHINES_PER_BLOCK = 4
USER_MACHINES_PER_BLOCK = 3

LOSS_METHODS = ("exact-bigint", "log-domain", "closed-form")


class TooFewNodesError(ValueError):
    """The cyclic placement needs at least three nodes."""


@dataclass(frozen=True)
class ReplicaLabel:
    kind: str   # "P", "S1" or "S2"
    node: int   # 1-based node index

    def __str__(self) -> str:
        return f"{self.kind}{self.node}" if self.kind == "P" else f"{self.kind}_{self.node}"


@dataclass(frozen=True)
class Machine:
    id: int
    rack: str           # "owner" or "user"
    block_index: int    # 1-based
    hosts: tuple[tuple[int, str], ...]  # (node, half) pairs; half in {"A", "B"}


@dataclass(frozen=True)
class Block:
    rack: str
    index: int
    entries: tuple[ReplicaLabel, ...]
    machine_ids: tuple[int, ...]


def owner_machine_ids(n: int, block: int) -> tuple[int, ...]:
    """Machine ids of owner block `block` (1-based): four consecutive slots."""
    base = OWNER_MACHINES_PER_BLOCK * (block - 1)
    return tuple(range(base, base + OWNER_MACHINES_PER_BLOCK))


def user_machine_ids(n: int, block: int) -> tuple[int, ...]:
    """Machine ids of user block `block` (1-based): three slots after the owner rack."""
    base = OWNER_MACHINES_PER_BLOCK * n + USER_MACHINES_PER_BLOCK * (block - 1)
    return tuple(range(base, base + USER_MACHINES_PER_BLOCK))


@dataclass(frozen=True)
class PlacementPlan:
    n: int
    owner_blocks: tuple[Block, ...]
    user_blocks: tuple[Block, ...]
    machines: tuple[Machine, ...]

    def half_hosts(self) -> dict[tuple[int, str], tuple[int, ...]]:
        """Machine ids hosting each (node, half) pair."""
        hosts: dict[tuple[int, str], list[int]] = {}
        for m in self.machines:
            for key in m.hosts:
                hosts.setdefault(key, []).append(m.id)
        return {k: tuple(sorted(v)) for k, v in sorted(hosts.items())}

    def group_machine_ids(self, block: int) -> tuple[int, ...]:
        """The 7-machine group of one node index: owner block + user block."""
        return owner_machine_ids(self.n, block) + user_machine_ids(self.n, block)


def _wrap(i: int, n: int) -> int:
    return (i - 1) % n + 1


def build_placement(n: int) -> PlacementPlan:
    """Cyclic placement for n >= 3 nodes: 7n machines across two racks.

    The primary copy of node i is split into halves A and B on two
    dedicated machines; every S1 entry hosts half A of its node and
    every S2 entry half B, so no machine ever stores more than 50% of a
    node's chunk set.
    """
    if n < 3:
        raise TooFewNodesError(f"placement requires n >= 3 nodes, got {n}")

    owner_blocks = []
    user_blocks = []
    machines = []
    for i in range(1, n + 1):
        s1 = _wrap(i + 1, n)
        s2 = _wrap(i + 2, n)
        ids = owner_machine_ids(n, i)
        owner_blocks.append(
            Block(
                rack="owner",
                index=i,
                entries=(
                    ReplicaLabel("P", i),
                    ReplicaLabel("S1", s1),
                    ReplicaLabel("S2", s2),
                ),
                machine_ids=ids,
            )
        )
        machines.append(Machine(ids[0], "owner", i, ((i, "A"),)))
        machines.append(Machine(ids[1], "owner", i, ((i, "B"),)))
        machines.append(Machine(ids[2], "owner", i, ((s1, "A"),)))
        machines.append(Machine(ids[3], "owner", i, ((s2, "B"),)))

    for i in range(1, n + 1):
        e1 = i
        e2 = _wrap(i + 1, n)
        e3 = _wrap(i + 2, n)
        ids = user_machine_ids(n, i)
        user_blocks.append(
            Block(
                rack="user",
                index=i,
                entries=(
                    ReplicaLabel("S1", e1),
                    ReplicaLabel("S2", e2),
                    ReplicaLabel("S1", e3),
                ),
                machine_ids=ids,
            )
        )
        machines.append(Machine(ids[0], "user", i, ((e1, "A"),)))
        machines.append(Machine(ids[1], "user", i, ((e2, "B"),)))
        machines.append(Machine(ids[2], "user", i, ((e3, "A"),)))

    return PlacementPlan(
        n=n,
        owner_blocks=tuple(owner_blocks),
        user_blocks=tuple(user_blocks),
        machines=tuple(sorted(machines, key=lambda m: m.id)),
    )


def render_plan(plan: PlacementPlan) -> str:
    """One block per line: rack, index, member labels, machine ids."""
    lines = []
    for block in plan.owner_blocks + plan.user_blocks:
        members = " ".join(str(e) for e in block.entries)
        ids = ",".join(str(i) for i in block.machine_ids)
        lines.append(f"{block.rack} {block.index} {members} machines={ids}")
    return "\n".join(lines) + "\n"


def base_polynomial() -> tuple[int, ...]:
    """Survival coefficients (1, 7, 21, 34, 30, 12) of one 7-machine group.

    a_f counts the f-machine failure subsets that destroy no data half:
    a1 = C(7,6) and a2 = C(7,5) (one or two failures are always safe),
    a3 = C(7,4) - 1 (only the all-user triple is fatal),
    a4 = C(7,3) - C(4,3) - 1, a5 = C(7,2) - C(4,2) - C(3,2), and every
    subset of six or more machines loses a half.
    """
    return BASE_COEFFS


def _convolve(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def loss_polynomial(n: int) -> tuple[int, ...]:
    """Exact integer coefficients of the n-th power of the base polynomial
    (length 5n + 1), via binary-exponentiation convolution."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    result = [1]
    square = list(BASE_COEFFS)
    e = n
    while e:
        if e & 1:
            result = _convolve(result, square)
        e >>= 1
        if e:
            square = _convolve(square, square)
    return tuple(result)


def prob_no_loss(n: int, f: int) -> float:
    """Probability that f uniformly random machine failures destroy no half:
    coeff(x^f) / C(7n, f) for f <= 5n, zero beyond (exact ratio, floated)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= f <= MACHINES_PER_NODE * n:
        raise ValueError(f"f must lie in [0, {MACHINES_PER_NODE * n}], got {f}")
    if f > 5 * n:
        return 0.0
    coeffs = loss_polynomial(n)
    return float(Fraction(coeffs[f], math.comb(MACHINES_PER_NODE * n, f)))


def prob_f_failures(n: int, f: int, p: float) -> float:
    """Binomial probability of exactly f failures among 7n machines."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    m = MACHINES_PER_NODE * n
    if not 0 <= f <= m:
        raise ValueError(f"f must lie in [0, {m}], got {f}")
    return math.comb(m, f) * p**f * (1.0 - p) ** (m - f)


@dataclass(frozen=True)
class LossResult:
    p_loss: float
    method: str
    per_f_terms: tuple[tuple[int, float], ...] | None = None


def _exact_loss(n: int, p: float, want_terms: bool) -> LossResult:
    # Work over the common denominator d^(7n) with p = a/d exactly, so the
    # whole double sum stays in integer arithmetic until the final division.
    m = MACHINES_PER_NODE * n
    fp = Fraction(p)
    a, d = fp.numerator, fp.denominator
    b = d - a
    coeffs = loss_polynomial(n)

    total = 0
    terms = [] if want_terms else None
    denom = Fraction(d) ** m
    for f in range(3, m + 1):
        c_f = coeffs[f] if f <= 5 * n else 0
        weight = math.comb(m, f) - c_f
        if weight == 0:
            continue
        num = weight * a**f * b ** (m - f)
        total += num
        if terms is not None:
            terms.append((f, float(Fraction(num) / denom)))
    return LossResult(
        p_loss=float(Fraction(total) / denom),
        method="exact-bigint",
        per_f_terms=tuple(terms) if terms is not None else None,
    )


def _log_domain_loss(n: int, p: float, want_terms: bool) -> LossResult:
    m = MACHINES_PER_NODE * n
    if p == 0.0:
        return LossResult(0.0, "log-domain", () if want_terms else None)
    if p == 1.0:
        per = ((m, 1.0),) if want_terms else None
        return LossResult(1.0, "log-domain", per)
    coeffs = loss_polynomial(n)
    log_p = math.log(p)
    log_q = math.log1p(-p)
    lg_m1 = math.lgamma(m + 1)

    logs = []
    fs = []
    for f in range(3, m + 1):
        c_f = coeffs[f] if f <= 5 * n else 0
        total_f = math.comb(m, f)
        weight = total_f - c_f
        if weight == 0:
            continue
        log_binom = lg_m1 - math.lgamma(f + 1) - math.lgamma(m - f + 1)
        # exact integer ratio (C - c)/C floated before taking the log
        log_weight = math.log(float(Fraction(weight, total_f)))
        logs.append(log_binom + log_weight + f * log_p + (m - f) * log_q)
        fs.append(f)
    terms = [(f, math.exp(lg)) for f, lg in zip(fs, logs)]
    return LossResult(
        p_loss=math.fsum(t for _, t in terms),
        method="log-domain",
        per_f_terms=tuple(terms) if want_terms else None,
    )


def _closed_form_loss(n: int, p: float) -> LossResult:
    # One group dies iff its owner quadruple or user triple fails whole:
    # P(fatal) = p^4 + p^3 - p^7, groups are independent.  Evaluated as an
    # exact rational to keep the tiny-probability regime meaningful.
    fp = Fraction(p)
    survive = 1 - fp**3 - fp**4 + fp**7
    return LossResult(
        p_loss=float(1 - survive**n), method="closed-form", per_f_terms=None
    )


def prob_data_loss(
    n: int, p: float, method: str = "exact-bigint", want_terms: bool = False
) -> LossResult:
    """Probability that random machine failures (each machine independently
    fails with probability p) destroy every copy of some data half.

    exact-bigint   -- the double sum over failure counts f = 3..5n (weighted
                      by the survival polynomial) and f = 5n+1..7n, in exact
                      integer arithmetic.
    log-domain     -- the same sum in log space with compensated summation.
    closed-form    -- 1 - (1 - p^3 - p^4 + p^7)^n, the independent-group
                      reduction; algebraically equal to exact-bigint.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if method == "exact-bigint":
        return _exact_loss(n, p, want_terms)
    if method == "log-domain":
        return _log_domain_loss(n, p, want_terms)
    if method == "closed-form":
        return _closed_form_loss(n, p)
    raise ValueError(f"unknown method {method!r}; expected one of {LOSS_METHODS}")


@dataclass(frozen=True)
class LossCurveRow:
    n: int
    p: float
    p_loss_exact: float
    p_loss_closed_form: float


def loss_curve(n_list, p: float) -> list[LossCurveRow]:
    """Data-loss probability per cluster size, plot-ready."""
    n_list = list(n_list)
    if not n_list:
        raise ValueError("n_list must be nonempty")
    return [
        LossCurveRow(
            n=n,
            p=p,
            p_loss_exact=prob_data_loss(n, p, "exact-bigint").p_loss,
            p_loss_closed_form=prob_data_loss(n, p, "closed-form").p_loss,
        )
        for n in n_list
    ]

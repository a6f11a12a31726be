import math
from fractions import Fraction

import pytest

from cloudalloc.replication import (
    BASE_COEFFS,
    LOSS_METHODS,
    TooFewNodesError,
    base_polynomial,
    build_placement,
    loss_curve,
    loss_polynomial,
    prob_data_loss,
    prob_f_failures,
    prob_no_loss,
    render_plan,
)


def block_members(block):
    return [str(e) for e in block.entries]


class TestPlacement:
    def test_three_node_blocks(self):
        plan = build_placement(3)
        assert [block_members(b) for b in plan.owner_blocks] == [
            ["P1", "S1_2", "S2_3"],
            ["P2", "S1_3", "S2_1"],
            ["P3", "S1_1", "S2_2"],
        ]
        assert [block_members(b) for b in plan.user_blocks] == [
            ["S1_1", "S2_2", "S1_3"],
            ["S1_2", "S2_3", "S1_1"],
            ["S1_3", "S2_1", "S1_2"],
        ]
        assert len(plan.machines) == 21

    def test_too_few_nodes(self):
        with pytest.raises(TooFewNodesError):
            build_placement(2)

    def test_ten_nodes_has_seventy_machines(self):
        plan = build_placement(10)
        assert len(plan.machines) == 70

    def test_machine_counts_per_block(self):
        plan = build_placement(5)
        for b in plan.owner_blocks:
            assert len(b.machine_ids) == 4
        for b in plan.user_blocks:
            assert len(b.machine_ids) == 3

    def test_each_machine_hosts_one_half(self):
        plan = build_placement(6)
        for m in plan.machines:
            assert len(m.hosts) == 1
            node, half = m.hosts[0]
            assert 1 <= node <= 6 and half in ("A", "B")

    def test_cyclic_wraparound(self):
        plan = build_placement(5)
        assert block_members(plan.owner_blocks[3]) == ["P4", "S1_5", "S2_1"]
        assert block_members(plan.owner_blocks[4]) == ["P5", "S1_1", "S2_2"]
        assert block_members(plan.user_blocks[4]) == ["S1_5", "S2_1", "S1_2"]

    def test_half_host_counts(self):
        plan = build_placement(7)
        hosts = plan.half_hosts()
        for node in range(1, 8):
            # half A: primary machine + three S1 entries; half B: primary + two S2
            assert len(hosts[(node, "A")]) == 4
            assert len(hosts[(node, "B")]) == 3

    def test_machine_ids_cover_range_once(self):
        plan = build_placement(4)
        ids = [m.id for m in plan.machines]
        assert ids == list(range(28))

    def test_groups_partition_machines(self):
        plan = build_placement(4)
        seen = set()
        for i in range(1, 5):
            group = plan.group_machine_ids(i)
            assert len(group) == 7
            seen.update(group)
        assert seen == set(range(28))

    def test_render_plan_one_block_per_line(self):
        plan = build_placement(3)
        lines = render_plan(plan).strip().splitlines()
        assert len(lines) == 6
        assert lines[0] == "owner 1 P1 S1_2 S2_3 machines=0,1,2,3"
        assert lines[3] == "user 1 S1_1 S2_2 S1_3 machines=12,13,14"


class TestBasePolynomial:
    def test_coefficients(self):
        assert base_polynomial() == (1, 7, 21, 34, 30, 12)

    def test_binomial_identities(self):
        assert BASE_COEFFS[2] == math.comb(7, 5) == 21
        assert BASE_COEFFS[4] == math.comb(7, 3) - math.comb(4, 3) - 1 == 30

    def test_total_subset_weight(self):
        assert sum(base_polynomial()) == 105


class TestLossPolynomial:
    def test_first_power_is_base(self):
        assert loss_polynomial(1) == BASE_COEFFS

    def test_cube_quadratic_coefficient(self):
        # hand convolution: 3*a2 + 3*a1^2 = 3*21 + 3*49 = 210
        assert loss_polynomial(3)[2] == 210

    def test_coefficient_sums(self):
        for n in (1, 2, 3, 5, 8, 13, 50):
            assert sum(loss_polynomial(n)) == 105**n

    def test_length(self):
        assert len(loss_polynomial(7)) == 36

    def test_coefficients_bounded_by_binomials(self):
        for n in (3, 5, 10):
            coeffs = loss_polynomial(n)
            for f, c in enumerate(coeffs):
                assert c <= math.comb(7 * n, f)


class TestProbNoLoss:
    def test_single_failure_always_survivable(self):
        for n in range(3, 21):
            assert prob_no_loss(n, 1) == 1.0
            assert prob_no_loss(n, 2) == 1.0

    def test_three_node_triples(self):
        assert prob_no_loss(3, 2) == 1.0
        assert prob_no_loss(3, 3) == pytest.approx(1327 / 1330)

    def test_beyond_survivable_range_zero(self):
        assert prob_no_loss(3, 16) == 0.0
        assert prob_no_loss(3, 21) == 0.0

    def test_range_validation(self):
        with pytest.raises(ValueError):
            prob_no_loss(3, 22)
        with pytest.raises(ValueError):
            prob_no_loss(3, -1)


class TestProbFFailures:
    def test_no_failures_certain_when_p_zero(self):
        assert prob_f_failures(3, 0, 0.0) == 1.0
        assert prob_f_failures(3, 1, 0.0) == 0.0

    def test_all_fail_binomial_term(self):
        assert prob_f_failures(3, 0, 0.5) == pytest.approx(0.5**21)

    def test_sums_to_one(self):
        total = sum(prob_f_failures(4, f, 0.3) for f in range(29))
        assert total == pytest.approx(1.0, rel=1e-12)


class TestProbDataLoss:
    def test_zero_failure_probability(self):
        for method in LOSS_METHODS:
            assert prob_data_loss(5, 0.0, method).p_loss == 0.0

    def test_certain_failure(self):
        for method in LOSS_METHODS:
            assert prob_data_loss(5, 1.0, method).p_loss == 1.0

    def test_exact_equals_closed_form(self):
        for n in (1, 3, 10, 40):
            for p in (0.01, 0.1, 0.37):
                e = prob_data_loss(n, p, "exact-bigint").p_loss
                c = prob_data_loss(n, p, "closed-form").p_loss
                assert e == pytest.approx(c, rel=1e-12)

    def test_log_domain_agrees(self):
        for n in (3, 10, 20, 40):
            for p in (0.01, 0.1, 0.5):
                e = prob_data_loss(n, p, "exact-bigint").p_loss
                l = prob_data_loss(n, p, "log-domain").p_loss
                assert l == pytest.approx(e, rel=1e-10)

    def test_monotone_in_p(self):
        grid = [k / 100 for k in range(0, 101)]
        values = [prob_data_loss(4, p, "closed-form").p_loss for p in grid]
        for a, b in zip(values, values[1:]):
            assert b >= a

    def test_per_f_terms_sum_to_total(self):
        res = prob_data_loss(3, 0.2, "exact-bigint", want_terms=True)
        assert res.per_f_terms is not None
        assert sum(t for _, t in res.per_f_terms) == pytest.approx(res.p_loss, rel=1e-12)
        assert all(f >= 3 for f, _ in res.per_f_terms)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            prob_data_loss(3, 0.1, "guesswork")

    def test_closed_form_value_small_p(self):
        # 1 - (1 - p^3 - p^4 + p^7)^n by independent groups; p enters as the
        # exact rational value of the given float
        p = Fraction(0.1)
        expected = float(1 - (1 - p**3 - p**4 + p**7) ** 3)
        got = prob_data_loss(3, 0.1, "closed-form").p_loss
        assert got == expected


class TestLossCurve:
    def test_single_row_matches_point_computation(self):
        (row,) = loss_curve([10], 0.01)
        assert row.p_loss_exact == prob_data_loss(10, 0.01).p_loss
        assert row.p_loss_closed_form == prob_data_loss(10, 0.01, "closed-form").p_loss

    def test_zero_probability_curve(self):
        rows = loss_curve([3, 10, 20], 0.0)
        assert all(r.p_loss_exact == 0.0 for r in rows)

    def test_monotone_in_n(self):
        rows = loss_curve([10, 20, 40, 80, 100, 140, 200], 0.01)
        for a, b in zip(rows, rows[1:]):
            assert b.p_loss_exact >= a.p_loss_exact

    def test_near_linear_in_n_for_small_p(self):
        rows = loss_curve([10, 100], 0.01)
        assert rows[1].p_loss_exact == pytest.approx(10 * rows[0].p_loss_exact, rel=1e-2)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            loss_curve([], 0.1)

import itertools

import pytest

from cloudalloc.failsim import (
    FailureScenario,
    McEstimate,
    exhaustive_loss_probability,
    group_fatal,
    mc_estimate,
    scenario_loss,
    verify_coefficients,
)
from cloudalloc.replication import base_polynomial, build_placement, prob_data_loss


class TestGroupFatal:
    def test_user_triple_is_fatal(self):
        assert group_fatal({4, 5, 6})

    def test_owner_quadruple_is_fatal(self):
        assert group_fatal({0, 1, 2, 3})

    def test_any_two_failures_survive(self):
        for pair in itertools.combinations(range(7), 2):
            assert not group_fatal(set(pair))

    def test_all_seven_fatal(self):
        assert group_fatal(set(range(7)))

    def test_mixed_triple_survives(self):
        assert not group_fatal({0, 1, 2})
        assert not group_fatal({3, 4, 5})

    def test_local_id_validation(self):
        with pytest.raises(ValueError):
            group_fatal({7})


class TestVerifyCoefficients:
    def test_counts_match_survival_coefficients(self):
        counts = verify_coefficients()
        assert counts == (1, 7, 21, 34, 30, 12, 0, 0)
        assert counts[:6] == base_polynomial()

    def test_boundary_sizes(self):
        counts = verify_coefficients()
        assert counts[0] == 1     # empty failure set
        assert counts[3] == 34
        assert counts[5] == 12
        assert counts[6] == counts[7] == 0


class TestScenarioLoss:
    def test_empty_failure_set(self):
        s = FailureScenario(n=3, failed=frozenset())
        assert not scenario_loss(s, "group")
        assert not scenario_loss(s, "structural")

    def test_one_group_user_triple_lost(self):
        plan = build_placement(3)
        user_ids = plan.user_blocks[1].machine_ids
        s = FailureScenario(n=3, failed=frozenset(user_ids))
        assert scenario_loss(s, "group")

    def test_owner_quadruple_lost(self):
        plan = build_placement(3)
        s = FailureScenario(n=3, failed=frozenset(plan.owner_blocks[0].machine_ids))
        assert scenario_loss(s, "group")

    def test_both_primary_machines_alone_survive_structurally(self):
        plan = build_placement(3)
        primaries = [
            m.id
            for m in plan.machines
            if m.rack == "owner" and m.block_index == 1 and m.hosts[0][0] == 1
        ]
        assert len(primaries) == 2
        s = FailureScenario(n=3, failed=frozenset(primaries))
        assert not scenario_loss(s, "structural", plan)

    def test_all_hosts_of_one_half_lost_structurally(self):
        plan = build_placement(3)
        hosts = plan.half_hosts()[(2, "B")]
        s = FailureScenario(n=3, failed=frozenset(hosts))
        assert scenario_loss(s, "structural", plan)

    def test_plan_node_count_must_match(self):
        plan = build_placement(4)
        s = FailureScenario(n=3, failed=frozenset())
        with pytest.raises(ValueError):
            scenario_loss(s, "structural", plan)

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            FailureScenario(n=3, failed=frozenset({21}))
        with pytest.raises(ValueError):
            FailureScenario(n=0, failed=frozenset())

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            scenario_loss(FailureScenario(n=3, failed=frozenset()), "psychic")


class TestMcEstimate:
    def test_p_zero_exact(self):
        est = mc_estimate(5, 0.0, 10_000, seed=1)
        assert est.p_hat == 0.0 and est.half_width_95 == 0.0

    def test_p_one_exact(self):
        est = mc_estimate(5, 1.0, 10_000, seed=1)
        assert est.p_hat == 1.0

    def test_deterministic_for_fixed_seed(self):
        a = mc_estimate(4, 0.2, 50_000, seed=77)
        b = mc_estimate(4, 0.2, 50_000, seed=77)
        assert a == b

    def test_worker_count_does_not_change_result(self):
        a = mc_estimate(4, 0.2, 50_000, seed=77, workers=1)
        b = mc_estimate(4, 0.2, 50_000, seed=77, workers=4)
        assert a == b

    def test_different_seeds_differ(self):
        a = mc_estimate(4, 0.2, 50_000, seed=1)
        b = mc_estimate(4, 0.2, 50_000, seed=2)
        assert a.p_hat != b.p_hat

    def test_group_mode_concords_with_exact(self):
        exact = prob_data_loss(10, 0.1, "closed-form").p_loss
        est = mc_estimate(10, 0.1, 200_000, seed=42)
        sigma = est.half_width_95 / 1.96
        assert abs(est.p_hat - exact) <= 3 * sigma

    def test_structural_mode_runs(self):
        est = mc_estimate(5, 0.3, 20_000, seed=9, mode="structural")
        assert 0.0 < est.p_hat < 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            mc_estimate(5, 0.5, 0)
        with pytest.raises(ValueError):
            mc_estimate(5, 1.5, 100)
        with pytest.raises(ValueError):
            mc_estimate(5, 0.5, 100, mode="psychic")
        with pytest.raises(ValueError):
            mc_estimate(5, 0.5, 100, workers=0)


class TestExhaustive:
    def test_single_group_matches_exact_formula(self):
        for p in (0.2, 0.7):
            assert exhaustive_loss_probability(1, p) == pytest.approx(
                prob_data_loss(1, p).p_loss, rel=1e-12
            )

    def test_two_groups_match_exact_formula(self):
        assert exhaustive_loss_probability(2, 0.3) == pytest.approx(
            prob_data_loss(2, 0.3).p_loss, rel=1e-12
        )

    def test_modes_classify_scenarios_differently(self):
        # the structural hosting sets cross block boundaries, so individual
        # scenarios flip class between the two modes
        plan = build_placement(3)
        owner_block = FailureScenario(n=3, failed=frozenset(plan.owner_blocks[0].machine_ids))
        assert scenario_loss(owner_block, "group")
        assert not scenario_loss(owner_block, "structural", plan)
        half_hosts = FailureScenario(n=3, failed=frozenset(plan.half_hosts()[(1, "A")]))
        assert not scenario_loss(half_hosts, "group")
        assert scenario_loss(half_hosts, "structural", plan)

    def test_mode_probabilities_agree_exactly(self):
        # measured, not assumed: each machine hosts exactly one half, so the
        # structural hosting sets partition the machines into n quadruples
        # and n triples -- the same independence profile as the group model,
        # hence identical total loss probability despite the per-scenario
        # disagreements above
        for p in (0.1, 0.3, 0.5):
            group = exhaustive_loss_probability(3, p, "group")
            structural = exhaustive_loss_probability(3, p, "structural")
            assert group == structural

    def test_size_guard(self):
        with pytest.raises(ValueError):
            exhaustive_loss_probability(4, 0.1)

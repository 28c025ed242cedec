import numpy as np
import pytest

from benesim.capacity import (LOWER_SINK, UPPER_SINK, build_stabilizing_profile,
                              in_capacity_region, sample_interior_rates,
                              verify_profile)
from benesim.topology import InputServer, Node, build_benes


def test_region_uniform_boundary():
    n = 3
    r = np.full((8, 8), 1 / 8)
    assert in_capacity_region(r, n, slack=0.0)


def test_region_row_violation():
    r = np.zeros((4, 4))
    r[0, 0] = 1.2
    assert not in_capacity_region(r, 2)


def test_region_slack_tightens_columns():
    r = np.zeros((4, 4))
    r[:, 0] = [0.4, 0.3, 0.2, 0.095]  # column sum 0.995
    assert in_capacity_region(r, 2, slack=0.0)
    assert not in_capacity_region(r, 2, slack=0.01)


def test_region_dimension_mismatch():
    with pytest.raises(ValueError):
        in_capacity_region(np.zeros((4, 4)), 3)


def test_profile_uniform_base_case():
    topo = build_benes(2)
    r = np.full((4, 4), 0.25)
    prof = build_stabilizing_profile(r, topo)
    for s in range(1, 5):
        assert prof.link(InputServer(s), topo.input_module_of(s)) == (0.5, 0.5)
    for row in (1, 2):
        m = Node(1, row)
        a, b = topo.next_hops(m)
        assert prof.link(m, a) == (0.5, 0.5)
        assert prof.link(m, b) == (0.5, 0.5)
    for p in topo.partition_nodes():
        assert prof.link(p, UPPER_SINK) == (1.0, 0.0)
        assert prof.link(p, LOWER_SINK) == (0.0, 1.0)


def test_profile_zero_rates():
    topo = build_benes(3)
    prof = build_stabilizing_profile(np.zeros((8, 8)), topo)
    assert all(up == 0.0 and low == 0.0 for _, (up, low) in prof.items())
    assert not verify_profile(prof, np.zeros((8, 8)), topo)


def test_profile_random_interior_samples():
    topo = build_benes(3)
    rng = np.random.default_rng(7)
    for _ in range(50):
        r = sample_interior_rates(3, rng)
        prof = build_stabilizing_profile(r, topo)
        assert verify_profile(prof, r, topo) == []


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_profile_verifies_across_orders(n):
    topo = build_benes(n)
    rng = np.random.default_rng(100 + n)
    for _ in range(20):
        r = sample_interior_rates(n, rng)
        assert verify_profile(build_stabilizing_profile(r, topo), r, topo) == []


def test_profile_rejects_outside_region():
    topo = build_benes(2)
    r = np.full((4, 4), 0.3)  # row sums 1.2
    with pytest.raises(ValueError):
        build_stabilizing_profile(r, topo)


def test_verify_reports_capacity_violation():
    topo = build_benes(2)
    r = np.full((4, 4), 0.25)
    prof = build_stabilizing_profile(r, topo)
    m = Node(1, 1)
    a, _ = topo.next_hops(m)
    prof.rates[(m, a)] = (1.0, 0.5)
    bad = verify_profile(prof, r, topo)
    assert any("capacity exceeded" in msg for msg in bad)


def test_verify_reports_split_asymmetry():
    topo = build_benes(2)
    r = np.full((4, 4), 0.2)
    prof = build_stabilizing_profile(r, topo)
    m = Node(1, 2)
    a, b = topo.next_hops(m)
    up, low = prof.rates[(m, a)]
    prof.rates[(m, a)] = (up + 0.05, low)
    bad = verify_profile(prof, r, topo)
    assert any("unequal split" in msg for msg in bad)


def test_verify_reports_missing_link():
    topo = build_benes(2)
    r = np.full((4, 4), 0.25)
    prof = build_stabilizing_profile(r, topo)
    del prof.rates[(InputServer(1), Node(1, 1))]
    assert any("missing link" in msg for msg in verify_profile(prof, r, topo))


def test_partition_inflow_matches_sink_rates():
    # constructed profiles conserve flow exactly at partition nodes
    n = 4
    topo = build_benes(n)
    rng = np.random.default_rng(11)
    r = sample_interior_rates(n, rng)
    prof = build_stabilizing_profile(r, topo)
    for p in topo.partition_nodes():
        in_up = sum(prof.link(q, p)[0] for q in topo.prev_hops(p))
        in_low = sum(prof.link(q, p)[1] for q in topo.prev_hops(p))
        assert in_up == pytest.approx(prof.link(p, UPPER_SINK)[0], abs=1e-9)
        assert in_low == pytest.approx(prof.link(p, LOWER_SINK)[1], abs=1e-9)


def test_profile_is_linear_in_rates():
    n = 3
    topo = build_benes(n)
    rng = np.random.default_rng(21)
    r = sample_interior_rates(n, rng)
    base = build_stabilizing_profile(r, topo)
    for alpha in (0.0, 0.25, 1.0):
        scaled = build_stabilizing_profile(alpha * r, topo)
        for key, (up, low) in base.items():
            su, sl = scaled.link(*key)
            assert su == pytest.approx(alpha * up, abs=1e-12)
            assert sl == pytest.approx(alpha * low, abs=1e-12)


def test_interior_samples_are_interior():
    rng = np.random.default_rng(3)
    for n in (2, 4):
        r = sample_interior_rates(n, rng)
        assert in_capacity_region(r, n, slack=0.0)
        assert r.sum(axis=0).max() < 1.0 and r.sum(axis=1).max() < 1.0

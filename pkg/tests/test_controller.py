import numpy as np
import pytest

from benesim.controller import (GbpParams, UtilitySpec, admission_decide, admissions,
                                auxiliary_rates, drift_bound_constant, link_weights,
                                max_weight_pair_grants, params_for, partition_grants,
                                partition_service, free_flow_grants, schedule_link,
                                select_auxiliary, utility_lower_bound)


def params(v=10.0, eta=0.01, a_max=2, beta=1.0):
    return GbpParams(v=v, eta=eta, a_max=a_max, beta=beta)


def grid_argmax(v, w, h, a_max, step=1e-4):
    # brute-force oracle for the auxiliary-rate optimizer
    grid = np.arange(0.0, a_max + step, step)
    obj = v * w * np.log1p(grid) - h * grid
    return grid[int(np.argmax(obj))], obj.max()


def test_auxiliary_stationary_point():
    assert select_auxiliary(4.0, 1.0, params()) == pytest.approx(1.5)


def test_auxiliary_empty_counter_takes_cap():
    assert select_auxiliary(0.0, 1.0, params()) == 2.0


def test_auxiliary_high_counter_shuts_off():
    p = params()
    assert select_auxiliary(p.v * 1.0, 1.0, p) == 0.0
    assert select_auxiliary(p.v * 1.0 + 5, 1.0, p) == 0.0


def test_auxiliary_against_grid_search():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        v = rng.uniform(1, 120)
        w = rng.uniform(0.1, 3)
        h = rng.uniform(0, 1.5 * v * w)
        p = params(v=v)
        g = select_auxiliary(h, w, p)
        _, best = grid_argmax(v, w, h, p.a_max)
        assert v * w * np.log1p(g) - h * g >= best - 1e-8


def test_auxiliary_golden_section_matches_closed_form():
    p = params(v=20.0)
    base = np.log1p
    for h in (0.0, 3.0, 8.0, 50.0):
        exact = select_auxiliary(h, 1.0, p)
        searched = select_auxiliary(h, 1.0, p, base=base)
        assert searched == pytest.approx(exact, abs=1e-9)


def test_auxiliary_vector_matches_scalar():
    rng = np.random.default_rng(5)
    h = rng.uniform(0, 30, size=(4, 4))
    w = rng.uniform(0, 2, size=(4, 4))
    w[0, 0] = 0.0
    spec = UtilitySpec(weights=w)
    p = params(v=12.0, beta=spec.beta)
    got = auxiliary_rates(h, spec, p)
    for s in range(4):
        for d in range(4):
            assert got[s, d] == pytest.approx(select_auxiliary(h[s, d], w[s, d], p))


def test_admission_examples():
    assert admission_decide(5.0, 1.0, 3.0, 2) == 2
    assert admission_decide(5.0, 2.0, 3.0, 2) == 0  # ties reject
    assert admission_decide(0.0, 0.0, 0.0, 2) == 0


def test_admission_monotone_in_counter():
    rng = np.random.default_rng(9)
    for _ in range(500):
        q, qd = rng.uniform(0, 10, size=2)
        h = rng.uniform(0, 20)
        first = admission_decide(h, q, qd, 2)
        assert admission_decide(h + rng.uniform(0, 5), q, qd, 2) >= first


def test_admissions_vector_matches_scalar():
    rng = np.random.default_rng(17)
    size = 4
    h = rng.uniform(0, 10, size=(size, size))
    qv = rng.uniform(0, 4, size=size)
    up = rng.uniform(0, 4, size=size)
    low = rng.uniform(0, 4, size=size)
    arr = rng.integers(0, 3, size=(size, size))
    got = admissions(h, qv, up, low, arr)
    for s in range(size):
        for d in range(size):
            div = up[s] if d < size // 2 else low[s]
            assert got[s, d] == admission_decide(h[s, d], qv[d], div, arr[s, d])


def test_link_weights_half_sum():
    w_u, w_l = link_weights(5.0, 0.0, (2.0, 4.0, 0.0, 0.0), partition_next=False)
    assert w_u == 2.0 and w_l == 0.0


def test_link_weights_clamped():
    w_u, _ = link_weights(1.0, 0.0, (3.0, 3.0, 0.0, 0.0), partition_next=False)
    assert w_u == 0.0


def test_link_weights_partition_case():
    w_u, w_l = link_weights(4.0, 2.0, (1.0, 5.0), partition_next=True)
    assert w_u == 3.0 and w_l == 0.0


def test_schedule_link_rules():
    assert schedule_link(2.0, 3.0) == (0, 1)
    assert schedule_link(0.0, 0.0) == (0, 0)
    assert schedule_link(2.0, 2.0) == (1, 0)  # fixed tie-break: upper division


def test_schedule_link_always_argmax():
    rng = np.random.default_rng(31)
    for _ in range(500):
        w_u, w_l = rng.uniform(0, 5, size=2) * rng.integers(0, 2, size=2)
        g_u, g_l = schedule_link(w_u, w_l)
        assert g_u + g_l <= 1
        if max(w_u, w_l) == 0:
            assert (g_u, g_l) == (0, 0)
        else:
            assert (g_u * w_u + g_l * w_l) == max(w_u, w_l)


def test_vector_grants_match_scalar_pipeline():
    rng = np.random.default_rng(77)
    own_a = rng.integers(0, 6, 64).astype(float)
    own_b = rng.integers(0, 6, 64).astype(float)
    cmp_a = rng.uniform(0, 5, 64)
    cmp_b = rng.uniform(0, 5, 64)
    g_a, g_b = max_weight_pair_grants(own_a, own_b, cmp_a, cmp_b)
    for k in range(64):
        w_a = max(own_a[k] - cmp_a[k], 0.0)
        w_b = max(own_b[k] - cmp_b[k], 0.0)
        assert (int(g_a[k]), int(g_b[k])) == schedule_link(w_a, w_b)


def test_decide_slot_composes_the_pieces():
    from benesim.controller import decide_slot
    rng = np.random.default_rng(13)
    size, rows, fh = 8, 4, 2
    spec = UtilitySpec.uniform_log(3)
    p = params(v=20.0, beta=spec.beta)
    kw = dict(
        admission=rng.uniform(0, 25, (size, size)),
        q_view=rng.uniform(0, 5, size),
        src_upper=rng.integers(0, 8, size).astype(float),
        src_lower=rng.integers(0, 8, size).astype(float),
        sw_uu=rng.integers(0, 8, (fh, rows)).astype(float),
        sw_ul=rng.integers(0, 8, (fh, rows)).astype(float),
        sw_lu=rng.integers(0, 8, (fh, rows)).astype(float),
        sw_ll=rng.integers(0, 8, (fh, rows)).astype(float),
        part_upper=rng.integers(0, 4, rows).astype(float),
        part_lower=rng.integers(0, 4, rows).astype(float),
        arrivals=np.full((size, size), 2),
        utility=spec, params=p,
        c1_of_server=np.arange(size) // 2,
        up_next=[np.array([0, 0, 2, 2]), np.array([0, 1, 0, 1])],
        low_next=[np.array([1, 1, 3, 3]), np.array([2, 3, 2, 3])],
    )
    act = decide_slot(**kw)
    assert np.array_equal(act.gamma, auxiliary_rates(kw["admission"], spec, p))
    assert np.array_equal(act.admit, admissions(kw["admission"], kw["q_view"],
                                                kw["src_upper"], kw["src_lower"],
                                                kw["arrivals"]))
    # per-link unit capacity: at most one division granted per link
    assert not (act.server_upper & act.server_lower).any()
    for g_uu, g_ul, g_lu, g_ll in act.link_grants:
        assert not (g_uu & g_lu).any()
        assert not (g_ul & g_ll).any()
    # last column weighs against the sink counters
    nu, nl = kw["part_upper"], kw["part_lower"]
    up = kw["up_next"][1]
    ref_uu, ref_lu = max_weight_pair_grants(kw["sw_uu"][1], kw["sw_lu"][1],
                                            nu[up], nl[up])
    assert np.array_equal(act.link_grants[1][0], ref_uu)
    assert np.array_equal(act.link_grants[1][2], ref_lu)
    assert np.array_equal(act.partition_upper, kw["part_upper"] > 0)


def test_partition_service():
    assert partition_service(3.0, 0.0) == (1, 0)
    assert partition_service(0.5, 2.0) == (1, 1)  # links are independent
    assert partition_service(0.0, 0.0) == (0, 0)
    g1, g2 = partition_grants(np.array([3.0, 0.0]), np.array([0.0, 1.0]))
    assert list(g1) == [True, False] and list(g2) == [False, True]


def test_free_flow_grants_constant():
    assert free_flow_grants() == (1, 1)


def test_drift_bound_values():
    assert drift_bound_constant(2, 2) == 292.0
    assert drift_bound_constant(4, 2) == 13616.0
    for n in (1, 3, 5):
        assert drift_bound_constant(n, 0) == 2 ** (n - 1) * (10 * n - 2)


def test_utility_lower_bound():
    p = params(v=100.0)
    got = utility_lower_bound(15.52, p, 4)
    assert got == pytest.approx(15.52 - 13616 / 100 - 16 * 1.0 * 0.01)
    # tightens as v grows
    assert utility_lower_bound(15.52, params(v=200.0), 4) > got
    # approaches the optimum in the limit
    huge = GbpParams(v=1e9, eta=1e-9, a_max=2, beta=1.0)
    assert utility_lower_bound(15.52, huge, 4) == pytest.approx(15.52, abs=1e-4)


def test_params_validation():
    with pytest.raises(ValueError):
        GbpParams(v=0.5, eta=0.01, a_max=2, beta=1.0)
    with pytest.raises(ValueError):
        GbpParams(v=10, eta=1.5, a_max=2, beta=1.0)
    spec = UtilitySpec.uniform_log(2, weight=2.5)
    assert params_for(10, 0.01, 2, spec).beta == 2.5


def test_utility_spec_beta_custom_base():
    spec = UtilitySpec(weights=np.full((4, 4), 2.0), base=lambda x: np.sqrt(1 + x) - 1)
    assert spec.beta == pytest.approx(1.0, rel=1e-5)  # 2 * (1/2)


def test_utility_spec_rejects_negative_weights():
    with pytest.raises(ValueError):
        UtilitySpec(weights=np.array([[-1.0]]))

import pytest

from drxlab import (
    DrxParams,
    EvalContext,
    GaConfig,
    LookupTable,
    LutKey,
    OptResult,
    PoissonTraffic,
    SearchSpace,
    TimeBase,
    analyze,
    default_inactivity_timer,
    enumerate_space,
    evaluate,
    exhaustive_search,
    genetic_search,
)

TRAFFIC = PoissonTraffic(0.02)
CTX = EvalContext(traffic=TRAFFIC)
REDUCED = SearchSpace.reduced(t_i=50)


def test_default_inactivity_timer():
    assert default_inactivity_timer(PoissonTraffic(0.02)) == 50
    assert default_inactivity_timer(PoissonTraffic(0.03)) == 34  # ceil(33.3)
    with pytest.raises(ValueError):
        default_inactivity_timer(PoissonTraffic(0.0))


def test_full_grid_count_matches_paper_arithmetic():
    full = SearchSpace(t_i=50)
    per_sleep_pairs = sum(640 - t_ss for t_ss in range(32, 161))
    assert per_sleep_pairs == 70_176
    assert full.size() == per_sleep_pairs * 16 == 1_122_816


def test_reduced_grid_size_matches_enumeration():
    assert REDUCED.size() == sum(1 for _ in enumerate_space(REDUCED)) == 755


def test_enumeration_respects_constraints_and_order():
    seen = list(enumerate_space(REDUCED))
    assert all(p.t_ss < p.t_ls <= 640 for p in seen)
    assert all(p.t_on == 8 and p.t_i == 50 for p in seen)
    keys = [(p.t_i, p.t_ss, p.t_ls, p.t_sc) for p in seen]
    assert keys == sorted(keys)


def test_single_point_space():
    space = SearchSpace(t_i=50, t_ss_min=100, t_ss_max=100, t_ls_max=101, t_sc_values=(4,))
    assert space.size() == 1
    (only,) = list(enumerate_space(space))
    assert (only.t_ss, only.t_ls, only.t_sc) == (100, 101, 4)


def test_inactivity_timer_as_search_dimension():
    space = SearchSpace(t_i=50, t_ss_min=32, t_ss_max=64, t_ss_stride=32,
                        t_ls_max=128, t_ls_stride=32, t_sc_values=(1, 2),
                        t_i_values=(10, 50))
    assert space.size() == 2 * sum(1 for _ in enumerate_space(
        SearchSpace(t_i=50, t_ss_min=32, t_ss_max=64, t_ss_stride=32,
                    t_ls_max=128, t_ls_stride=32, t_sc_values=(1, 2))))
    assert {p.t_i for p in enumerate_space(space)} == {10, 50}


def test_space_validation():
    with pytest.raises(ValueError):
        SearchSpace(t_i=50, t_ss_min=0)
    with pytest.raises(ValueError):
        SearchSpace(t_i=50, t_ss_max=31)
    with pytest.raises(ValueError):
        SearchSpace(t_i=50, t_ls_max=160)  # no room above the largest t_ss
    with pytest.raises(ValueError):
        SearchSpace(t_i=50, t_sc_values=())


def test_evaluate_analytic_matches_analyze():
    params = DrxParams(t_on=8, t_i=50, t_ss=48, t_ls=144, t_sc=4)
    ps, delay = evaluate(params, CTX)
    rep = analyze(params, TRAFFIC, TimeBase(1.0))
    assert (ps, delay) == (rep.ps, rep.mean_delay_ms)
    assert evaluate(params, CTX) == (ps, delay)  # deterministic


def test_evaluate_analytic_zero_rate_limit():
    params = DrxParams(t_on=8, t_i=50, t_ss=32, t_ls=640, t_sc=2)
    ps, _ = evaluate(params, EvalContext(traffic=PoissonTraffic(0.0)))
    assert ps == pytest.approx(640 / 648, abs=1e-12)


def test_evaluate_simulated_mode():
    params = DrxParams(t_on=8, t_i=50, t_ss=48, t_ls=144, t_sc=4)
    ctx = EvalContext(traffic=TRAFFIC, evaluator="simulated", sim_runs=4,
                      sim_horizon=10_000, sim_seed=5)
    ps, delay = evaluate(params, ctx)
    assert 0.0 < ps < 1.0
    assert delay > 0.0
    assert evaluate(params, ctx) == (ps, delay)


def test_exhaustive_matches_independent_rescan():
    result = exhaustive_search(REDUCED, 10.0, CTX)
    best = None
    for t_ss in range(32, 161, 16):
        t_ls = t_ss + 32
        while t_ls <= 640:
            for t_sc in (1, 2, 4, 8, 16):
                p = DrxParams(t_on=8, t_i=50, t_ss=t_ss, t_ls=t_ls, t_sc=t_sc)
                rep = analyze(p, TRAFFIC, TimeBase(1.0))
                if rep.mean_delay_ms <= 10.0:
                    cand = (-rep.ps, rep.mean_delay_ms, t_ss, t_ls, t_sc)
                    if best is None or cand < best:
                        best = cand
            t_ls += 32
    assert best is not None
    assert result.feasible
    assert (-result.ps, result.mean_delay_ms, result.best.t_ss,
            result.best.t_ls, result.best.t_sc) == best
    assert result.evaluations == REDUCED.size()


def test_exhaustive_deterministic():
    a = exhaustive_search(REDUCED, 10.0, CTX)
    b = exhaustive_search(REDUCED, 10.0, CTX)
    assert a == b


def test_infeasible_budget_reports_min_delay_fallback():
    result = exhaustive_search(REDUCED, 0.0, CTX)
    assert not result.feasible
    assert result.mean_delay_ms > 0.0
    # the fallback is the delay minimizer over the grid
    min_delay = min(evaluate(p, CTX)[1] for p in enumerate_space(REDUCED))
    assert result.mean_delay_ms == min_delay


def test_ga_budget_and_determinism():
    ga = GaConfig()
    a = genetic_search(REDUCED, 10.0, ga, CTX, seed=11)
    b = genetic_search(REDUCED, 10.0, ga, CTX, seed=11)
    assert a == b
    assert a.evaluations <= ga.generations * ga.population
    assert a.feasible and a.mean_delay_ms <= 10.0


def test_ga_cost_ratio_to_enumeration():
    full = SearchSpace(t_i=50)
    ratio = (200 * 50) / full.size()
    assert 0.0088 < ratio < 0.0090  # ~0.89% of the exhaustive cost


def test_ga_never_beats_exhaustive_and_stays_close():
    exh = exhaustive_search(REDUCED, 10.0, CTX)
    for seed in range(3):
        ga = genetic_search(REDUCED, 10.0, GaConfig(generations=60), CTX, seed=seed)
        assert ga.feasible
        assert ga.ps <= exh.ps + 1e-12
        assert ga.ps >= 0.90 * exh.ps


def test_ga_infeasible_budget():
    ga = genetic_search(REDUCED, 0.0, GaConfig(generations=10), CTX, seed=1)
    assert not ga.feasible


def test_ga_stall_cutoff_reduces_evaluations():
    frozen = genetic_search(REDUCED, 10.0, GaConfig(stall_generations=5), CTX, seed=4)
    full = genetic_search(REDUCED, 10.0, GaConfig(), CTX, seed=4)
    assert frozen.evaluations <= full.evaluations
    assert frozen.feasible


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population=3)
    with pytest.raises(ValueError):
        GaConfig(generations=0)
    with pytest.raises(ValueError):
        EvalContext(traffic=TRAFFIC, evaluator="oracle")


def _result(ps=0.123456789012345, delay=9.87654321098765):
    params = DrxParams(t_on=8, t_i=50, t_ss=48, t_ls=144, t_sc=4)
    return OptResult(params, ps, delay, True, 755, "analytic")


def test_lookup_table_round_trip(tmp_path):
    lut = LookupTable(str(tmp_path / "lut.txt"))
    key = LutKey("poisson", 0.02, 0.0, 1.0, 10.0)
    assert lut.get(key) is None
    result = _result()
    lut.put(key, result)
    assert lut.get(key) == result  # bit-exact floats via repr round trip
    assert LookupTable(str(tmp_path / "lut.txt")).get(key) == result  # durable


def test_lookup_table_overwrites_and_keeps_other_keys(tmp_path):
    lut = LookupTable(str(tmp_path / "lut.txt"))
    k1 = LutKey("poisson", 0.02, 0.0, 1.0, 10.0)
    k2 = LutKey("bursty", 0.00625, 0.5, 0.125, 10.0)
    lut.put(k1, _result())
    lut.put(k2, _result(ps=0.5))
    lut.put(k1, _result(ps=0.9))
    assert lut.get(k1).ps == 0.9
    assert lut.get(k2).ps == 0.5
    assert lut.get(LutKey("poisson", 0.05, 0.0, 1.0, 10.0)) is None


def test_lookup_table_rejects_malformed_records(tmp_path):
    path = tmp_path / "lut.txt"
    path.write_text("poisson 0.02 0.0\n")
    with pytest.raises(ValueError):
        LookupTable(str(path)).get(LutKey("poisson", 0.02, 0.0, 1.0, 10.0))


def test_lookup_table_populates_rate_tti_grid(tmp_path):
    # one offline sweep fills the whole (rate x TTI) key grid
    lut = LookupTable(str(tmp_path / "lut.txt"))
    keys = []
    for lam_s in (5.0, 10.0, 20.0, 50.0):
        for tti in (1.0, 0.5, 0.25, 0.125):
            key = LutKey("poisson", lam_s * tti / 1000.0, 0.0, tti, 10.0)
            lut.put(key, _result())
            keys.append(key)
    for key in keys:
        assert lut.get(key) is not None

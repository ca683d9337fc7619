import csv

import pytest

from drxlab import LookupTable, LutKey, PoissonTraffic, TimeBase, analyze
from drxlab.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, emit_csv, format_value, main
from drxlab.config import ConfigError, parse_config_text

BASE_CONFIG = """
# headline cell
traffic.model = poisson
traffic.lambda_pkt_s = 20
time.tti_ms = 1
drx.t_i = auto
drx.t_ss = 48
drx.t_ls = 144
drx.t_sc = 4
sim.horizon_ttis = 10000
sim.runs = 4
sim.seed = 99
opt.d_max_ms = 10
"""


def _write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_exit_codes_are_stable():
    assert (EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INFEASIBLE) == (0, 1, 2, 3)


def test_config_parser_defaults_and_overrides():
    cfg = parse_config_text(BASE_CONFIG)
    assert cfg.lambda_pkt_s == 20.0
    assert cfg.t_i is None  # auto
    assert cfg.runs == 4
    assert cfg.policy.name == "STANDARD"
    assert cfg.power_weights == (1.0, 1.0, 0.0)


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError):
        parse_config_text("traffic.lambada = 1\n")


def test_config_rejects_duplicates_and_bad_values():
    with pytest.raises(ConfigError):
        parse_config_text("sim.seed = 1\nsim.seed = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text("sim.runs = many\n")
    with pytest.raises(ConfigError):
        parse_config_text("sim.policy = psychic\n")
    with pytest.raises(ConfigError):
        parse_config_text("traffic.model = cbr\n")
    with pytest.raises(ConfigError):
        parse_config_text("this is not a key value line\n")


def test_format_value_nine_significant_digits():
    assert format_value(0.123456789123) == "0.123456789"
    assert format_value(316.04938271604937) == "316.049383"
    assert format_value(7) == "7"
    assert format_value(True) == "1"
    assert format_value("genie") == "genie"


def test_emit_csv_shapes(tmp_path):
    path = str(tmp_path / "empty.csv")
    emit_csv(path, ["a", "b"], [])
    assert open(path).read() == "a,b\n"
    emit_csv(path, ["a", "b"], [[1, 2.5]])
    assert open(path).read() == "a,b\n1,2.5\n"
    with pytest.raises(ValueError):
        emit_csv(path, ["a"], [[1, 2]])


def test_emit_csv_round_trip(tmp_path):
    path = str(tmp_path / "r.csv")
    value = 0.3883182424968623
    emit_csv(path, ["x"], [[value]])
    parsed = float(_read_csv(path)[0]["x"])
    assert parsed == pytest.approx(value, rel=1e-8)  # printed at 9 significant digits


def test_analytic_subcommand(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "analytic.csv")
    assert main(["analytic", "--config", cfg, "--out", out]) == EXIT_OK
    rows = _read_csv(out)
    assert len(rows) == 1
    from drxlab import DrxParams

    rep = analyze(DrxParams(t_on=8, t_i=50, t_ss=48, t_ls=144, t_sc=4),
                  PoissonTraffic(0.02), TimeBase(1.0))
    assert float(rows[0]["ps"]) == pytest.approx(rep.ps, rel=1e-8)
    assert float(rows[0]["mean_delay_ms"]) == pytest.approx(rep.mean_delay_ms, rel=1e-8)
    assert rows[0]["t_i"] == "50"  # auto = ceil(1/lambda)


def test_simulate_subcommand_writes_summary_and_delays(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "sim.csv")
    assert main(["simulate", "--config", cfg, "--out", out]) == EXIT_OK
    rows = _read_csv(out)
    assert len(rows) == 1
    assert 0.0 < float(rows[0]["power_mean"]) < 1.0
    delays = _read_csv(str(tmp_path / "sim.delays.csv"))
    assert len(delays) > 0
    assert float(delays[0]["delay_ms"]) >= 1.0


def test_byte_identical_reruns(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    outputs = []
    for name in ("a", "b"):
        out = str(tmp_path / f"{name}.csv")
        assert main(["simulate", "--config", cfg, "--out", out]) == EXIT_OK
        outputs.append(open(out, "rb").read() + open(str(tmp_path / f"{name}.delays.csv"), "rb").read())
    assert outputs[0] == outputs[1]


def test_seed_flag_changes_output(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    out1, out2 = str(tmp_path / "s1.csv"), str(tmp_path / "s2.csv")
    assert main(["simulate", "--config", cfg, "--out", out1, "--seed", "1"]) == EXIT_OK
    assert main(["simulate", "--config", cfg, "--out", out2, "--seed", "2"]) == EXIT_OK
    assert open(out1).read() != open(out2).read()


def test_optimize_subcommand_updates_lookup_table(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "opt.csv")
    assert main(["optimize", "--config", cfg, "--out", out]) == EXIT_OK
    row = _read_csv(out)[0]
    assert row["feasible"] == "1"
    assert (row["t_ss"], row["t_ls"], row["t_sc"]) == ("48", "144", "4")
    stored = LookupTable(str(tmp_path / "drx_lut.txt")).get(
        LutKey("poisson", 0.02, 0.0, 1.0, 10.0))
    assert stored is not None
    assert (stored.best.t_ss, stored.best.t_ls, stored.best.t_sc) == (48, 144, 4)


def test_optimize_infeasible_budget_exits_3(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG.replace("opt.d_max_ms = 10", "opt.d_max_ms = 0.001"))
    out = str(tmp_path / "opt.csv")
    assert main(["optimize", "--config", cfg, "--out", out]) == EXIT_INFEASIBLE
    assert _read_csv(out)[0]["feasible"] == "0"


def test_missing_or_broken_config_exits_1(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["analytic", "--config", str(tmp_path / "nope.cfg"), "--out", out]) == EXIT_CONFIG
    cfg = _write(tmp_path, "bogus.key = 1\n")
    assert main(["analytic", "--config", cfg, "--out", out]) == EXIT_CONFIG
    cfg = _write(tmp_path, "drx.t_ss = 200\ndrx.t_ls = 100\n")  # violates t_ss < t_ls
    assert main(["analytic", "--config", cfg, "--out", out]) == EXIT_CONFIG


def test_usage_errors_exit_1(tmp_path):
    assert main(["unknown-subcommand"]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG


def test_unwritable_output_exits_2(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "no" / "such" / "dir" / "x.csv")
    assert main(["analytic", "--config", cfg, "--out", out]) == EXIT_IO


def test_cdf_subcommand(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "cdf.csv")
    assert main(["cdf", "--config", cfg, "--out", out, "--runs", "3"]) == EXIT_OK
    rows = _read_csv(out)
    policies = {r["policy"] for r in rows}
    assert policies == {"standard", "intelligent"}
    for policy in policies:
        probs = [float(r["cum_prob"]) for r in rows if r["policy"] == policy]
        assert probs == sorted(probs)
        assert probs[-1] == pytest.approx(1.0)


def test_sweep_subcommand_emits_48_cells(tmp_path):
    cfg = _write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep", "--config", cfg, "--out", out, "--runs", "2"]) == EXIT_OK
    rows = _read_csv(out)
    assert len(rows) == 48  # 4 rates x 4 TTIs x 3 policies
    cells = {(r["lambda_pkt_s"], r["tti_ms"], r["policy"]) for r in rows}
    assert len(cells) == 48


def test_config_stride_overrides_narrow_the_search(tmp_path):
    text = BASE_CONFIG + "opt.t_ss_stride = 64\nopt.t_ls_stride = 128\nopt.t_sc_list = 1,16\n"
    cfg = _write(tmp_path, text)
    out = str(tmp_path / "opt.csv")
    assert main(["optimize", "--config", cfg, "--out", out]) == EXIT_OK
    row = _read_csv(out)[0]
    # t_ss in {32,96,160}, t_ls offsets of 128, t_sc in {1,16}
    evaluated = sum(
        len(range(t_ss + 128, 641, 128)) * 2 for t_ss in (32, 96, 160)
    )
    assert int(row["evaluations"]) == evaluated
    assert int(row["t_ss"]) in (32, 96, 160)
    assert int(row["t_sc"]) in (1, 16)


def test_delay_sweep_subcommand(tmp_path):
    text = BASE_CONFIG + "opt.delay_grid_ms = 8,12\nopt.ga_generations = 30\n"
    cfg = _write(tmp_path, text)
    out = str(tmp_path / "dsweep.csv")
    assert main(["delay-sweep", "--config", cfg, "--out", out, "--runs", "2"]) == EXIT_OK
    rows = _read_csv(out)
    assert [r["d_max_ms"] for r in rows] == ["8", "12"]
    for r in rows:
        if r["feasible_std"] == "1" and r["feasible_int"] == "1":
            assert 0.0 < float(r["relative_power"]) <= 1.5

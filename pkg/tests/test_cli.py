import csv
import io

import pytest

from csaloha.cli import PRESETS, ConfigParseError, dump_config, load_config, main, parse_config
from csaloha.model import ConfigError

GOOD = """\
# two classes
[users]
0.5 0.25
0.5 0.5   # worse channel
[slots]
1.0
[access]
3.0
0.5
[run]
epsilon = 0.1
"""


def test_presets():
    s1 = load_config("scenario1")
    assert s1.fractions.tolist() == [1.0] and s1.loss_probs.tolist() == [0.0]
    assert s1.slot_fractions.tolist() == [1.0]
    s2 = load_config("scenario2")
    assert s2.loss_probs.tolist() == [0.375]
    s3 = load_config("scenario3")
    assert s3.fractions.tolist() == [0.5, 0.5] and s3.loss_probs.tolist() == [0.25, 0.5]


def test_parse_good():
    cfg = parse_config(GOOD)
    assert cfg.access.alpha == ((3.0,), (0.5,))
    assert cfg.epsilon == 0.1


@pytest.mark.parametrize(
    "text, match",
    [
        (GOOD.replace("0.5 0.25", "0.5 abc"), r":3: users.loss_prob"),
        (GOOD.replace("epsilon = 0.1", "epsilom = 0.1"), "unknown key 'epsilom'"),
        (GOOD.replace("[run]\nepsilon = 0.1\n", ""), "missing key 'epsilon'"),
        (GOOD.replace("[slots]", "[slotz]"), r"unknown section \[slotz\]"),
        (GOOD.replace("3.0\n", "3.0 1.0\n"), "access row has 2 entries"),
        (GOOD.replace("0.5\n[run]", "[run]"), "access has 1 rows"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(ConfigParseError, match=match):
        parse_config(text)


def test_validation_errors_surface():
    with pytest.raises(ConfigError, match="user fractions sum"):
        parse_config(GOOD.replace("0.5 0.25", "0.6 0.25"))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_dump_round_trip(name, tmp_path):
    path = tmp_path / "c.cfg"
    assert main(["--preset", name, "--mode", "dump", "--out", str(path)]) == 0
    assert load_config(str(path)) == PRESETS[name]
    assert parse_config(dump_config(PRESETS[name])) == PRESETS[name]


def test_unknown_source_is_an_error(capsys):
    assert main(["--config", "/nonexistent/file.cfg"]) == 2
    assert "error" in capsys.readouterr().err


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["--preset", "scenario1", "--mode", "sweep", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == "m_over_n,throughput,resolution_prob,beta_1,alpha_1_1"
    rows = read_csv(out)
    best = max(rows, key=lambda r: float(r["throughput"]))
    assert float(best["throughput"]) == pytest.approx(0.87, abs=0.02)
    assert float(best["m_over_n"]) == pytest.approx(1.05, abs=0.05)
    assert "throughput T" in capsys.readouterr().out


def test_sweep_csv_columns_multiclass(tmp_path):
    out = tmp_path / "s3.csv"
    assert main(["--preset", "scenario3", "--mode", "sweep", "--eps-min", "-0.4", "--eps-max", "-0.2",
                 "--eps-steps", "3", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "m_over_n,throughput,resolution_prob,beta_1,alpha_1_1,alpha_2_1"
    assert len(read_csv(out)) == 3


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["--preset", "scenario1", "--mode", "simulate", "--n", "2000", "--trials", "5", "--seed", "1"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_csv(a)) == 5


def test_evolve_total_loss(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(GOOD.replace("0.5 0.25", "0.5 1.0").replace("0.5 0.5 ", "0.5 1.0 "))
    out = tmp_path / "traj.csv"
    assert main(["--config", str(cfg), "--mode", "evolve", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "throughput T 0\n" in text and "resolution P_R 0\n" in text
    assert out.read_text().splitlines()[0] == "iteration,y_1,y_2"


def test_optimize_with_infeasible_target(capsys):
    assert main(["--preset", "scenario3", "--mode", "optimize", "--target-pr", "1.0",
                 "--alpha-step", "0.5"]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_optimize_csv(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["--preset", "scenario3", "--mode", "optimize", "--out", str(out)]) == 0
    row = read_csv(out)[0]
    assert float(row["alpha_2_1"]) == 0.0
    assert float(row["m_over_n"]) == pytest.approx(0.7)


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "csaloha", "--preset", "scenario2", "--mode", "evolve"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "resolution P_R" in res.stdout

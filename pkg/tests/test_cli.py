import csv
import json
from pathlib import Path

import pytest

from catfeedback import cli
from catfeedback import config as cfgmod

ROOT = Path(__file__).resolve().parents[1]


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_defaults_resolve():
    cfg = cfgmod.resolve({})
    assert cfg["truncation.n_max"] == 32
    params = cfgmod.feedback_params(cfg)
    assert params.t0 == pytest.approx(600e-6)
    assert abs(cfgmod.alpha(cfg)) ** 2 == pytest.approx(3.3)


def test_nested_tables_equal_dotted_keys():
    assert cfgmod.resolve({"run": {"n_cycles": 4}}) == cfgmod.resolve({"run.n_cycles": 4})


@pytest.mark.parametrize("raw", [
    {"run.nonsense": 1},
    {"run.n_cycles": "five"},
    {"run.mode": "fast"},
    {"state.cat_sign": 0},
    {"wigner.enabled": 1},
])
def test_bad_values_rejected(raw):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.resolve(raw)


def test_exit_codes(tmp_path):
    assert cli.main(["run", "--config", str(_write(tmp_path, "run.bogus = 1\n"))]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--config", str(_write(tmp_path, "run.n_cycles = [\n"))]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG
    mc = _write(tmp_path, 'run.mode = "monte_carlo"\n')
    assert cli.main(["run", "--config", str(mc), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    small = _write(tmp_path, "truncation.n_max = 6\n")
    assert cli.main(["run", "--config", str(small), "--out", str(tmp_path / "o"), "--quiet"]) == cli.EXIT_NUMERIC
    neg = _write(tmp_path, "atoms.p1 = 0.0\n")
    assert cli.main(["timing", "--config", str(neg), "--out", str(tmp_path / "o"), "--quiet"]) == cli.EXIT_CONFIG


def test_run_zero_cycles(tmp_path):
    cfg = _write(tmp_path, "run.n_cycles = 0\nwigner.points = 11\n")
    out = tmp_path / "zero"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = _rows(out / "metrics.csv")
    assert len(rows) == 1 and rows[0]["cycle"] == "0"
    assert float(rows[0]["wigner_origin"]) == pytest.approx(-0.6366197723675814)
    assert sorted(p.name for p in (out / "snapshots").iterdir()) == ["rho_cycle0000.csv", "wigner_cycle0000.csv"]


def test_run_protocol_defaults(tmp_path):
    out = tmp_path / "pd"
    code = cli.main(["run", "--config", str(ROOT / "configs" / "protocol_defaults.toml"),
                     "--out", str(out), "--quiet"])
    assert code == 0
    rows = _rows(out / "metrics.csv")
    # cycle 0 plus the 13 cycle snapshots
    assert [int(r["cycle"]) for r in rows] == list(range(14))
    assert float(rows[-1]["wigner_origin"]) < 0
    assert float(rows[-1]["elapsed_cycles_s"]) == pytest.approx(13 * 8.04380808461446e-4, rel=1e-12)
    assert float(rows[-1]["elapsed_attempt_s"]) == pytest.approx(13 * 6.515484548537713e-4, rel=1e-12)
    rho = _rows(out / "snapshots" / "rho_cycle0013.csv")
    assert len(rho) == 33 * 33
    wig = _rows(out / "snapshots" / "wigner_cycle0013.csv")
    assert len(wig) == 81 * 81
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["run.n_cycles"] == 13
    assert manifest["config"]["output.dir"] == str(out)
    assert "numpy" in manifest["versions"]


def test_manifest_reruns_experiment(tmp_path):
    cfg = _write(tmp_path, 'run.n_cycles = 2\nwigner.enabled = false\n')
    a = tmp_path / "a"
    cli.main(["run", "--config", str(cfg), "--out", str(a), "--quiet"])
    manifest = json.loads((a / "manifest.json").read_text())
    b = tmp_path / "b"
    replay = dict(manifest["config"], **{"output.dir": str(b)})
    replay = {k: v for k, v in replay.items() if v is not None}
    lines = [f"{k} = {json.dumps(v)}" for k, v in replay.items()]
    cfg2 = _write(tmp_path, "\n".join(lines) + "\n", "replay.toml")
    cli.main(["run", "--config", str(cfg2), "--quiet"])
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()


def test_monte_carlo_determinism(tmp_path):
    cfg = _write(tmp_path, 'run.mode = "monte_carlo"\nrun.n_cycles = 3\nrun.n_trajectories = 6\n'
                           'run.seed = 11\nwigner.enabled = false\n')
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        outs.append(out)
    for f in ("metrics.csv", "trajectories.csv", "snapshots/rho_cycle0003.csv"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    manifests = [json.loads((o / "manifest.json").read_text()) for o in outs]
    for m in manifests:
        del m["config"]["output.dir"]
    assert manifests[0] == manifests[1]
    other = tmp_path / "r3"
    cli.main(["run", "--config", str(cfg), "--out", str(other), "--seed", "12", "--quiet"])
    assert (other / "metrics.csv").read_bytes() != (outs[0] / "metrics.csv").read_bytes()


def test_nofeedback(tmp_path):
    cfg = _write(tmp_path, "wigner.enabled = false\n")
    out = tmp_path / "nf"
    assert cli.main(["nofeedback", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = _rows(out / "nofeedback.csv")
    assert [r["label"] for r in rows] == ["t_rel", "t_rel", "t_rel", "t_dec"]
    assert float(rows[0]["cat_fidelity"]) == pytest.approx(1.0, abs=1e-10)
    assert float(rows[1]["wigner_origin"]) > -0.01
    for r in rows:
        assert abs(float(r["interference_measured"]) - float(r["interference_analytic"])) < 1e-6
        assert float(r["oracle_trace_distance"]) < 1e-8


def test_timing_and_oracle_checks(tmp_path):
    cfg = _write(tmp_path, "oracle.l_values = [0, 1]\noracle.q_values = [2]\n")
    assert cli.main(["timing", "--config", str(cfg), "--out", str(tmp_path / "t"), "--quiet"]) == 0
    summary = {r["quantity"]: float(r["value"]) for r in _rows(tmp_path / "t" / "timing_summary.csv")}
    assert summary["mean_cycle_time_s"] == pytest.approx(8.04380808461446e-4, rel=1e-12)
    assert cli.main(["oracle-check", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = _rows(tmp_path / "o" / "oracle_check.csv")
    assert len(rows) == 2 and all(r["passed"] == "true" for r in rows)


def test_failing_check_exit_code(tmp_path):
    cfg = _write(tmp_path, "physics.gamma_per_s = 1000.0\n")
    assert cli.main(["timing", "--config", str(cfg), "--out", str(tmp_path / "t"), "--quiet"]) == cli.EXIT_CHECK


def test_adiabatic_check_reports_transfer(tmp_path):
    cfg = _write(tmp_path, "adiabatic.max_phase_spread_rad = 1000.0\n")
    assert cli.main(["adiabatic-check", "--config", str(cfg), "--out", str(tmp_path / "a"), "--quiet"]) == 0
    rows = _rows(tmp_path / "a" / "adiabatic_check.csv")
    transfers = [float(r["value"]) for r in rows if r["check"].startswith("transfer")]
    assert len(transfers) == 6 and min(transfers) > 0.99

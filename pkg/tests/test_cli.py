import json

import numpy as np
import pytest

from tensorcp.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, SCHEMA_VERSION, build_parser, main
from tensorcp.io import write_csv_wide, write_tcpd
from tensorcp.mosum import piecewise_mean
from tensorcp.simgen import SimSpec
from tensorcp.tensor import TensorSeq


@pytest.fixture
def noiseless(tmp_path):
    seq = TensorSeq(piecewise_mean([np.zeros(4), np.full(4, 20.0)], [600], 1800))
    path = tmp_path / "step.tcpd"
    write_tcpd(path, seq)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_detect_text(capsys, noiseless):
    code, out, _ = run(capsys, "detect", noiseless, "--preset", "calibrated")
    assert code == EXIT_OK
    assert "K_hat = 1" in out and "z_1 = 601" in out and "kept" in out


def test_detect_json_schema(capsys, noiseless):
    code, out, _ = run(capsys, "detect", noiseless, "--json", "--rate", "100", "--ci", "--ci-paths", "10000")
    payload = json.loads(out)
    assert code == EXIT_OK and payload["schema_version"] == SCHEMA_VERSION
    assert {"n", "shape", "k_hat", "locations", "intervals", "config", "times", "confidence_intervals"} <= set(payload)
    assert payload["times"] == [z / 100 for z in payload["locations"]]
    assert payload["confidence_intervals"][0]["k"] == 1


def test_detect_is_deterministic(capsys, noiseless):
    first = run(capsys, "detect", noiseless, "--json", "--ci", "--ci-paths", "10000", "--seed", "3")[1]
    second = run(capsys, "detect", noiseless, "--json", "--ci", "--ci-paths", "10000", "--seed", "3")[1]
    assert first == second


def test_sfd_on_matrix_file_pools_elements(capsys, tmp_path):
    means = [np.zeros((3, 4)), np.full((3, 4), 20.0)]
    path = tmp_path / "m.tcpd"
    write_tcpd(path, TensorSeq(piecewise_mean(means, [600], 1800), (3, 4)))
    code, out, _ = run(capsys, "detect", path, "--mode", "sfd", "--json")
    assert code == EXIT_OK and json.loads(out)["k_hat"] == 1


def test_short_sequence_exit_2(capsys, tmp_path):
    path = tmp_path / "short.csv"
    write_csv_wide(path, TensorSeq(np.zeros((40, 2))))
    code, _, err = run(capsys, "detect", path, "--alpha", "20")
    assert code == EXIT_INVALID and "minimum n = 60" in err


def test_bad_magic_exit_2(capsys, tmp_path):
    path = tmp_path / "x.tcpd"
    path.write_bytes(b"JUNKJUNKJUNK")
    code, _, err = run(capsys, "detect", path)
    assert code == EXIT_INVALID and "not a TCPD file" in err


def test_missing_input_exit_2(capsys, tmp_path):
    assert run(capsys, "detect", tmp_path / "absent.tcpd")[0] == EXIT_INVALID


def test_bad_config_exit_2(capsys, noiseless, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("unknown_key = 3\n")
    assert run(capsys, "detect", noiseless, "--config", cfg)[0] == EXIT_INVALID


def test_config_from_environment(capsys, noiseless, tmp_path, monkeypatch):
    cfg = tmp_path / "env.cfg"
    cfg.write_text("preset = calibrated\ntau = 0.5\n")
    monkeypatch.setenv("TENSORCP_CONFIG", str(cfg))
    payload = json.loads(run(capsys, "detect", noiseless, "--json")[1])
    assert payload["tau"] == 0.5 and payload["config"]["s1"] == 0.1
    payload = json.loads(run(capsys, "detect", noiseless, "--json", "--tau", "0.6")[1])
    assert payload["tau"] == 0.6


def test_simulate_round_trip(capsys, tmp_path):
    out = tmp_path / "sim.tcpd"
    code, _, _ = run(capsys, "simulate", "--design", "dense", "--p", "20", "--signal", "1.0", "--seed", "2", "--out", out)
    assert code == EXIT_OK
    spec = SimSpec.from_json((tmp_path / "sim.tcpd.spec.json").read_text())
    payload = json.loads(run(capsys, "detect", out, "--preset", "calibrated", "--json")[1])
    assert payload["k_hat"] == spec.K
    assert max(abs(a - b) for a, b in zip(payload["locations"], spec.changepoints)) <= 21


def test_simulate_noiseless_spec_round_trip(capsys, tmp_path):
    spec = SimSpec(n=1800, shape=(4,), changepoints=[600, 1200],
                   means=[np.zeros(4), np.full(4, 20.0), np.zeros(4)])
    spec.noise.sigma = 0.0
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(spec.to_json())
    out = tmp_path / "s.tcpd"
    assert run(capsys, "simulate", "--spec", spec_path, "--out", out)[0] == EXIT_OK
    payload = json.loads(run(capsys, "detect", out, "--json")[1])
    assert payload["k_hat"] == 2
    assert all(abs(a - b) <= 1 for a, b in zip(payload["locations"], spec.changepoints))


def test_unwritable_output_exit_3(capsys, tmp_path):
    out = tmp_path / "missing_dir" / "x.tcpd"
    assert run(capsys, "simulate", "--out", out)[0] == EXIT_RUNTIME


def test_bench_json_and_jsonl(capsys, tmp_path):
    stream = tmp_path / "reps.jsonl"
    code, out, _ = run(capsys, "bench", "--design", "dense", "--reps", "3", "--preset", "calibrated",
                       "--json", "--jsonl", stream, "--threads", "2")
    payload = json.loads(out)
    assert code == EXIT_OK and payload["reps"] == 3 and payload["schema_version"] == SCHEMA_VERSION
    assert len(stream.read_text().splitlines()) == 4


def test_bench_table(capsys):
    code, out, _ = run(capsys, "bench", "--design", "null", "--shape", "10", "--reps", "2")
    assert code == EXIT_OK and out.splitlines()[0].startswith("design")


def test_plot_command(capsys, noiseless, tmp_path):
    svg = tmp_path / "p.svg"
    code, out, _ = run(capsys, "plot", noiseless, "--out", svg, "--title", "step")
    assert code == EXIT_OK and svg.exists() and "K_hat = 1" in out


def test_help_covers_every_flag(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for name, p in sub.items():
        text = p.format_help()
        for action in p._actions:
            for opt in action.option_strings:
                assert opt in text, (name, opt)
        assert action.help is not None or action.dest == "help"
    assert set(sub) == {"detect", "simulate", "bench", "plot"}

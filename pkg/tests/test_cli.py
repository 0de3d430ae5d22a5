import json
import subprocess
import sys

import pytest

from foreach_crdt.cli import main


def run_cli(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_pass(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--scenario", "fig1_bold", "--seed", "7")
    assert code == 0
    assert out.startswith("PASS fig1_bold")
    assert "jumped **over the lazy** dog" in out


def test_simulate_positions_table(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--scenario", "fig4_rotate")
    assert code == 0
    for label in ("rectangle", "circle", "triangle"):
        assert label in out


def test_simulate_report_counts_range_delete_traffic(capsys):
    counts = {}
    for name in ("fig3_delete_range", "fig3_delete_range_prior"):
        code, out, _ = run_cli(capsys, "simulate", "--scenario", name, "--json")
        assert code == 0
        rep = json.loads(out)
        counts[name] = next(t["envelopes"] for t in rep["traffic"] if t["op"] == "delete_range")
    assert counts == {"fig3_delete_range": 1, "fig3_delete_range_prior": 10}


def test_unknown_scenario_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "simulate", "--scenario", "nope")
    assert code == 2 and "nope" in err


@pytest.mark.parametrize("args", [["--ops", "0"], ["--replicas", "0"], ["--schedules", "-1"]])
def test_bad_fuzz_config_is_usage_error(capsys, args):
    code, _, _ = run_cli(capsys, "fuzz", *args)
    assert code == 2


def test_fuzz_passes(capsys):
    code, out, _ = run_cli(capsys, "fuzz", "--ops", "200", "--replicas", "4", "--seed", "1")
    assert code == 0 and out.startswith("PASS")


def test_skip_buffer_injection_is_detected_with_reproducer(capsys, tmp_path):
    log = tmp_path / "min.jsonl"
    code, out, _ = run_cli(
        capsys, "fuzz", "--ops", "60", "--seed", "1", "--inject-skip-buffer", "--log", str(log)
    )
    assert code == 1 and "divergences: 1" in out
    full = 60 * 4  # the unminimized run has at least one line per envelope and delivery
    assert 0 < len(log.read_text().splitlines()) < full
    code, out, _ = run_cli(capsys, "replay", "--log", str(log))
    assert code == 1 and out.startswith("FAIL")


def test_fuzz_and_simulate_are_deterministic(capsys, tmp_path):
    outputs = []
    for k in range(2):
        f = tmp_path / f"fuzz{k}.jsonl"
        s = tmp_path / f"sim{k}.jsonl"
        _, fuzz_out, _ = run_cli(capsys, "fuzz", "--ops", "80", "--seed", "3", "--json", "--log", str(f))
        _, sim_out, _ = run_cli(capsys, "simulate", "--scenario", "recipe_scale", "--seed", "5",
                                "--json", "--log", str(s))
        outputs.append((fuzz_out, sim_out, f.read_bytes(), s.read_bytes()))
    assert outputs[0] == outputs[1]
    assert outputs[0][2] and outputs[0][3]


def test_replay_in_a_fresh_process(capsys, tmp_path):
    log = tmp_path / "run.jsonl"
    code, _, _ = run_cli(capsys, "fuzz", "--ops", "100", "--seed", "9", "--log", str(log))
    assert code == 0
    code, here, _ = run_cli(capsys, "replay", "--log", str(log), "--json")
    assert code == 0
    proc = subprocess.run(
        [sys.executable, "-m", "foreach_crdt", "replay", "--log", str(log), "--json"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == here
    rep = json.loads(here)
    assert rep["converged"] and not rep["snapshot_mismatches"]
    assert any('"snapshot"' in line for line in log.read_text().splitlines())


def _scenario_log(capsys, tmp_path):
    log = tmp_path / "s.jsonl"
    assert run_cli(capsys, "simulate", "--scenario", "fig1_bold", "--log", str(log))[0] == 0
    return log, log.read_text().splitlines()


def test_replay_with_an_envelope_removed_names_the_gap(capsys, tmp_path):
    log, lines = _scenario_log(capsys, tmp_path)
    assert run_cli(capsys, "replay", "--log", str(log))[0] == 0
    gone = '"dot":{"clock":5,"sender":"A"},"kind"'
    log.write_text("\n".join(l for l in lines if gone not in l) + "\n")
    code, out, _ = run_cli(capsys, "replay", "--log", str(log))
    assert code == 1
    assert "missing A:5" in out


def test_corrupt_line_reports_line_number(capsys, tmp_path):
    log, lines = _scenario_log(capsys, tmp_path)
    lines[6] = "{garbage"
    log.write_text("\n".join(lines) + "\n")
    code, _, err = run_cli(capsys, "replay", "--log", str(log))
    assert code == 2 and "line 7" in err


def test_missing_log_is_usage_error(capsys, tmp_path):
    assert run_cli(capsys, "replay", "--log", str(tmp_path / "none.jsonl"))[0] == 2


def test_list_scenarios(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--list")
    assert code == 0 and "fig4_rotate" in out.split()

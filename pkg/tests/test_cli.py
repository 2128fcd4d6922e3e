import json
import subprocess
import sys

import pytest

from fluxanneal.cli import main
from fluxanneal.ising import gen_uniform_spinglass, read_instance
from fluxanneal.subsolvers import LoopbackServer


def test_gen_writes_instances(tmp_path, capsys):
    code = main(["gen", "--gen", "uniform-sg", "--n", "8", "--seed", "3", "--instances", "2",
                 "--out", str(tmp_path)])
    assert code == 0
    paths = capsys.readouterr().out.split()
    assert len(paths) == 2
    assert read_instance(paths[0]) == gen_uniform_spinglass(8, 3)


def test_run_hqa_writes_results(tmp_path, capsys):
    out = tmp_path / "res"
    code = main(["run", "--gen", "bimodal-complete", "--n", "14", "--instances", "2",
                 "--mirror-pairs", "--md-steps", "1000,2000", "--pipeline", "hqa",
                 "--n-ambivalent", "6", "--backend", "brute", "--baselines", "sa,tabu",
                 "--sa-sweeps", "100", "--inits", "2", "--out", str(out)])
    assert code == 0
    runs = [json.loads(l) for l in (out / "runs.jsonl").read_text().splitlines()]
    # 4 instances x 2 seeds x (2 steps x 2 pipelines + 2 baselines)
    assert len(runs) == 48
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["metadata"]["reference_cut"]["kind"] == "parisi_cut"
    assert "hqa(brute,6)" in capsys.readouterr().out


def test_run_from_instance_file_with_trajectory(tmp_path):
    main(["gen", "--gen", "uniform-sg", "--n", "6", "--out", str(tmp_path)])
    inst = tmp_path / "uniform-sg-n6-s0.ising"
    code = main(["run", "--instance", str(inst), "--md-steps", "500", "--window", "50",
                 "--record-stride", "100", "--out", str(tmp_path / "r")])
    assert code == 0
    assert (tmp_path / "r" / "trajectory.csv.gz").exists()


def test_sweep(tmp_path):
    code = main(["sweep", "--gen", "uniform-sg", "--n", "8", "--kappa2=-1,1",
                 "--md-steps", "300,600", "--window", "50", "--inits", "2",
                 "--out", str(tmp_path)])
    assert code == 0
    cells = json.loads((tmp_path / "adiabaticity.json").read_text())["cells"]
    assert len(cells) == 4
    assert [c["ratio"] for c in cells if c["kappa2"] == 1.0 and c["steps"] == 600] == [1.0]


def test_inspect_with_md(tmp_path, capsys):
    code = main(["inspect", "--gen", "bimodal-complete", "--n", "10", "--run-md",
                 "--md-steps", "1000", "--n-ambivalent", "3", "--out", str(tmp_path)])
    assert code == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n_sites"] == 10 and "offset_c0" in info and "md_energy" in info
    part = json.loads((tmp_path / "partition.json").read_text())
    assert part["n"] == 3 and len(part["frozen"]) == 7


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path)]) == 2
    assert main(["run", "--gen", "uniform-sg", "--n", "4", "--pipeline", "hqa",
                 "--n-ambivalent", "9", "--out", str(tmp_path)]) == 2
    assert main(["inspect", "--instance", str(tmp_path / "missing.ising")]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_bad_schedule_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["run", "--gen", "uniform-sg", "--n", "4", "--schedule", "1,2", "--out", "x"])
    assert info.value.code == 2


def test_divergence_exit_code(tmp_path):
    code = main(["run", "--gen", "uniform-sg", "--n", "20", "--seed", "1", "--md-steps", "2000",
                 "--time-scale", "50", "--out", str(tmp_path)])
    assert code == 3


def test_remote_failure_exit_codes(tmp_path):
    args = ["run", "--gen", "uniform-sg", "--n", "12", "--md-steps", "500", "--window", "50",
            "--pipeline", "hqa", "--n-ambivalent", "8", "--backend", "remote"]
    with LoopbackServer(max_sites=4) as srv:
        strict = main(args + ["--endpoint", srv.url, "--fallback", "none",
                              "--out", str(tmp_path / "a")])
        lenient = main(args + ["--endpoint", srv.url, "--out", str(tmp_path / "b")])
    assert strict == 4
    assert lenient == 0
    runs = [json.loads(l) for l in (tmp_path / "b" / "runs.jsonl").read_text().splitlines()]
    assert runs[1]["fallback"].startswith("tabu")


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "fluxanneal.cli", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for cmd in ("gen", "run", "sweep", "inspect"):
        assert cmd in out

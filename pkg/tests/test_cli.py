from __future__ import annotations

import csv
import io
import json
import math
import re
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from sperner import cli
from sperner import labeling as lab

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, schema: str, *argv: str) -> dict:
    code, out, _ = run(capsys, *argv)
    assert code == 0, out
    payload = json.loads(out)
    jsonschema.validate(payload, cli.load_schema(schema))
    return payload


def test_label_first_choice_stats(capsys):
    payload = run_json(capsys, "stats", "label", "--strategy", "first-choice", "--k", "3", "--q", "5", "--stats")
    assert payload["nonmono"] == 5 and payload["bound"] == 5 and payload["meets_bound"] is True
    assert payload["admissible"] is True
    assert payload["provenance"]["argv"][0] == "label"


def test_provenance_header_on_stderr(capsys):
    _, _, err = run(capsys, "verify-bound", "--k", "3", "--q", "4", "--seed", "9")
    assert re.match(r"# sperner \S+ argv=verify-bound --k 3 --q 4 --seed 9 seed=9", err)


def test_label_writes_file_format(capsys, tmp_path):
    target = tmp_path / "fc.labeling"
    code, out, _ = run(capsys, "label", "--k", "3", "--q", "5", "--out", str(target))
    assert code == 0 and out == ""
    assert lab.read_labeling(target.read_text()) == lab.first_choice(3, 5)
    assert target.read_bytes().count(b"\r") == 0


def test_out_dir_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
    code, _, _ = run(capsys, "label", "--k", "3", "--q", "3", "--out", "sub/x.labeling")
    assert code == 0 and (tmp_path / "sub" / "x.labeling").exists()


def test_stats_from_fixture(capsys):
    payload = run_json(capsys, "stats", "stats", "--in", str(FIXTURES / "injection_example.labeling"), "--phi")
    assert payload["mono"] == 10 and payload["nonmono"] == 5
    assert payload["phi"] == {"total": 10, "capacity": 10, "valid": True, "disjoint": True}


def test_stats_requires_input(capsys):
    code, _, err = run(capsys, "stats", "--k", "3")
    assert code == 2 and "--in" in err


def test_verify_bound(capsys):
    payload = run_json(capsys, "bound", "verify-bound", "--k", "4", "--q", "6")
    assert payload["bound"] == math.comb(7, 2)
    assert payload["identity_holds"] and payload["meets_bound"]


def test_enumerate(capsys):
    payload = run_json(capsys, "enumerate", "enumerate", "--k", "3", "--q", "5")
    assert payload["count"] == 21 and payload["points"][0] == [5, 0, 0]
    payload = run_json(capsys, "enumerate", "enumerate", "--k", "3", "--q", "5", "--cells")
    assert payload["count"] == 15
    code, out, _ = run(capsys, "enumerate", "--k", "2", "--q", "2", "--format", "text")
    assert out == "2 0\n1 1\n0 2\n"


def test_enumerate_csv(capsys):
    code, out, _ = run(capsys, "enumerate", "--k", "3", "--q", "2", "--format", "csv")
    assert code == 0
    assert out.startswith("a1,a2,a3\r\n2,0,0\r\n")
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 7


def test_csv_quoting(capsys):
    _, out, _ = run(capsys, "label", "--k", "3", "--q", "3", "--stats", "--format", "csv")
    header, values = list(csv.reader(io.StringIO(out)))
    record = dict(zip(header, values))
    assert record["nonmono"] == "3" and record["per_color_mono.1"] == "3"
    _, out, _ = run(capsys, "square-demo", "--format", "csv")
    assert '"[{""delta"": 0.2' in out
    header, values = list(csv.reader(io.StringIO(out)))
    assert json.loads(dict(zip(header, values))["family"])[0]["delta"] == 0.2


def test_search_exhaustive(capsys, tmp_path):
    witness = tmp_path / "w.labeling"
    payload = run_json(
        capsys, "search", "search", "--k", "3", "--q", "3", "--no-bound", "--workers", "1", "--out", str(witness)
    )
    assert payload["optimum"] == 3 and payload["proven_optimal"] is True and payload["bound"] == 3
    assert payload["witness_file"] == str(witness)
    labeling = lab.read_labeling(witness.read_text())
    assert lab.compute_stats(labeling).nonmonochromatic_count == 3


def test_search_budget_exit_code(capsys):
    code, out, _ = run(
        capsys, "search", "--k", "4", "--q", "3", "--no-bound", "--node-limit", "500", "--workers", "1"
    )
    assert code == 3
    payload = json.loads(out)
    jsonschema.validate(payload, cli.load_schema("search"))
    assert payload["proven_optimal"] is False


def test_search_unpruned_over_budget_is_usage_error(capsys):
    code, _, _ = run(capsys, "search", "--k", "4", "--q", "3", "--no-prune", "--node-limit", "10")
    assert code == 2


def test_heuristic_search(capsys):
    payload = run_json(
        capsys, "search", "search", "--k", "4", "--q", "16", "--objective", "min-max-colors",
        "--heuristic", "--iters", "500", "--restarts", "1",
    )
    assert payload["optimum"] <= 4 and payload["proven_optimal"] is False


def test_measure(capsys):
    payload = run_json(capsys, "measure", "measure", "--k", "4", "--eps", "0.001", "--samples", "1000000", "--seed", "7")
    assert payload["exact"] == pytest.approx(math.sqrt(2) / 2, rel=1e-12)
    assert abs(payload["sigmas_off"]) <= 3


def test_measure_custom_base_point(capsys):
    payload = run_json(capsys, "measure", "measure", "--k", "3", "--z", "0.5,0.3,0.2", "--samples", "100000", "--eps", "0.001")
    assert payload["z"] == [0.5, 0.3, 0.2]
    code, _, _ = run(capsys, "measure", "--k", "3", "--z", "0.5,0.5")
    assert code == 2


def test_square_demo(capsys):
    payload = run_json(capsys, "square", "square-demo")
    assert payload["voronoi_length"] == 2.0
    assert payload["diagonal_infimum"] == pytest.approx(math.sqrt(2), abs=1e-12)
    assert [f["delta"] for f in payload["family"]] == [0.2, 0.1, 0.05, 0.01]


def test_render_first_choice(capsys, tmp_path):
    target = tmp_path / "lattice.svg"
    payload = run_json(capsys, "render", "render", "--k", "3", "--q", "5", "--strategy", "first-choice", "--out", str(target))
    assert payload["vertices"] == 21 and payload["up_cells"] == 15
    assert payload["mono"] == 10 and payload["nonmono"] == 5
    svg = target.read_text()
    assert svg.count('class="vertex"') == 21
    assert svg.count('class="cell up') == 15
    assert svg.count('class="cell up mono color-1"') == 10
    assert svg.count('fill="#2ca02c"') == 10
    assert svg.count('class="cell up nonmono"') == 5
    assert svg.count('class="cell down') == 10


def test_render_voronoi_and_plain(capsys):
    code, out, _ = run(capsys, "render", "--voronoi")
    assert code == 0 and out.count('class="part color-') == 3
    code, out, _ = run(capsys, "render", "--q", "3")
    assert code == 0 and out.startswith("<?xml") and "{1,2}" in out


def test_render_rejects_k4(capsys):
    code, _, _ = run(capsys, "render", "--k", "4", "--q", "2", "--strategy", "first-choice")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        ["label", "--bogus"],
        ["label", "--k", "3"],
        ["label", "--strategy", "top-coordinate", "--k", "3", "--q", "9"],
        ["label", "--k", "1", "--q", "3"],
        ["enumerate", "--k", "3", "--q", "-1"],
        ["measure", "--k", "3", "--eps", "0.5"],
        ["measure", "--k", "3", "--samples", "0"],
        [],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_force_allows_out_of_domain(capsys):
    payload = run_json(
        capsys, "stats", "label", "--strategy", "top-coordinate", "--k", "3", "--q", "4", "--force", "--stats"
    )
    assert payload["admissible"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["label", "--strategy", "random", "--k", "4", "--q", "4", "--seed", "3", "--stats"],
        ["measure", "--k", "3", "--samples", "300000", "--seed", "11"],
        ["search", "--k", "3", "--q", "4", "--no-bound", "--objective", "min-max-colors"],
        ["render", "--q", "4", "--strategy", "random", "--seed", "2"],
        ["label", "--k", "3", "--q", "4", "--stats", "--format", "csv"],
    ],
)
def test_byte_identical_reruns(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_worker_count_does_not_change_output(capsys):
    base = ["search", "--k", "4", "--q", "2", "--no-bound"]
    _, one, _ = run(capsys, *base, "--workers", "1")
    _, two, _ = run(capsys, *base, "--workers", "2")
    strip = lambda s: {k: v for k, v in json.loads(s).items() if k != "provenance"}  # noqa: E731
    assert strip(one) == strip(two)


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sperner.cli", "verify-bound", "--k", "3", "--q", "5"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["bound"] == 5
    assert proc.stderr.startswith("# sperner")


def test_every_schema_is_valid():
    for name in ("stats", "search", "measure", "square", "bound", "enumerate", "render"):
        jsonschema.Draft202012Validator.check_schema(cli.load_schema(name))

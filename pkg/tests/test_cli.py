import json

import numpy as np
import pytest

from mabsim.cli import main
from mabsim.harness import read_aggregate


def test_run_creates_outputs(tmp_path):
    out = tmp_path / "r"
    code = main(["run", "--algo", "no-comm", "--agents", "1", "--arms", "2",
                 "--horizon", "1000", "--seed", "7", "--runs", "2", "--out", str(out)])
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"aggregate.csv", "runs.csv", "meta.json"}


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"horizon": 300, "runs": 1, "out": str(tmp_path / "o")}))
    code = main(["run", "--algo", "lcc-ucb", "--agents", "2", "--arms", "6",
                 "--horizon", "99999", "--config", str(cfg)])
    assert code == 0
    meta = json.loads((tmp_path / "o" / "meta.json").read_text())
    assert meta["config"]["horizon"] == 300


@pytest.mark.parametrize(
    "argv",
    [
        ["plot", "--out", "x.svg"],
        ["run", "--algo", "lcc-ucb-graph", "--agents", "3", "--arms", "9"],
        ["run", "--agents", "3", "--arms", "9"],
        ["run", "--algo", "lcc-ucb", "--agents", "3", "--arms", "9", "--topology", "path"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert "usage:" in capsys.readouterr().err


def test_unknown_flag_exits_nonzero():
    with pytest.raises(SystemExit) as info:
        main(["run", "--bogus"])
    assert info.value.code != 0


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["run", "--algo", "no-comm", "--agents", "1", "--arms", "2", "--config", str(cfg)]) == 2


def test_missing_topology_file(tmp_path, capsys):
    code = main(["run", "--algo", "lcc-ucb-neighbor", "--agents", "3", "--arms", "6", "--runs", "1",
                 "--horizon", "50", "--topology", f"file:{tmp_path / 'none.txt'}", "--out", str(tmp_path / "o")])
    assert code == 1
    assert "none.txt" in capsys.readouterr().err


def test_compare_ordering_matches_csvs(tmp_path):
    out = tmp_path / "cmp"
    code = main(["compare", "--agents", "4", "--arms", "24", "--horizon", "3000", "--runs", "3",
                 "--stride", "100", "--out", str(out)])
    assert code == 0
    rows = json.loads((out / "ordering.json").read_text())
    assert [r["algorithm"] for r in rows] and len(rows) == 3
    recomputed = {r["algorithm"]: read_aggregate(out / r["algorithm"]).final_median for r in rows}
    order = sorted(recomputed, key=recomputed.get)
    assert [r["algorithm"] for r in rows] == order
    assert (out / "compare.svg").exists()
    assert (out / "ordering.txt").read_text().startswith("1. ")


def test_compare_on_graph_defaults_to_graph_set(tmp_path):
    out = tmp_path / "g"
    assert main(["compare", "--agents", "6", "--arms", "18", "--horizon", "800", "--runs", "1",
                 "--topology", "path", "--out", str(out)]) == 0
    names = {r["algorithm"] for r in json.loads((out / "ordering.json").read_text())}
    assert names == {"lcc-ucb-graph", "lcc-ucb-neighbor", "full-comm", "no-comm"}
    assert main(["compare", "--agents", "6", "--arms", "18", "--topology", "path",
                 "--algos", "lcc-ucb", "--out", str(out)]) == 2


def test_plot_from_results(tmp_path):
    d = tmp_path / "r"
    main(["run", "--algo", "lcc-ucb", "--agents", "2", "--arms", "8", "--horizon", "500",
          "--runs", "2", "--out", str(d)])
    svg = tmp_path / "p.svg"
    assert main(["plot", "--inputs", str(d), "--out", str(svg), "--log-x"]) == 0
    assert "lcc-ucb" in svg.read_text()
    assert main(["plot", "--inputs", str(tmp_path / "missing"), "--out", str(svg)]) == 2


def test_run_output_is_reproducible(tmp_path):
    argv = ["run", "--algo", "lcc-ucb", "--agents", "3", "--arms", "9", "--horizon", "700", "--runs", "2"]
    main(argv + ["--out", str(tmp_path / "a")])
    main(argv + ["--out", str(tmp_path / "b")])
    for name in ("aggregate.csv", "runs.csv", "meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert np.isfinite(read_aggregate(tmp_path / "a").median).all()

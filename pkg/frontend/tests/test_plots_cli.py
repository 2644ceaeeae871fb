import json
import os

import pytest

from mpbandit_plots.cli import main


def test_render_full_figure_set(benchmark_outputs, tmp_path):
    """Regenerates every figure kind from benchmark outputs in one call."""
    spec_path = tmp_path / "figures.json"
    spec_path.write_text(json.dumps([
        {"kind": "curves",
         "inputs": [str(benchmark_outputs["compare"] / "curves.csv")],
         "out": "fig/regret_curves", "title": "mean regret"},
        {"kind": "curves-loglog",
         "inputs": [str(benchmark_outputs["compare"] / "curves.csv")],
         "out": "fig/regret_curves_loglog"},
        {"kind": "histogram",
         "inputs": [str(benchmark_outputs["selfish"] / "hist.csv")],
         "out": "fig/final_regret_hist"},
        {"kind": "lb-comparison",
         "inputs": [str(benchmark_outputs["bounds"] / "lower_bounds.csv")],
         "out": "fig/lower_bounds"}]))
    assert main(["render", "--spec", str(spec_path)]) == 0
    for base in ("regret_curves", "regret_curves_loglog",
                 "final_regret_hist", "lower_bounds"):
        for ext in (".png", ".svg"):
            path = tmp_path / "fig" / (base + ext)
            assert path.exists() and path.stat().st_size > 0


def test_relative_paths_resolve_against_spec_dir(benchmark_outputs, tmp_path):
    os.symlink(benchmark_outputs["bounds"] / "lower_bounds.csv",
               tmp_path / "lower_bounds.csv")
    spec_path = tmp_path / "one.json"
    spec_path.write_text(json.dumps(
        {"kind": "lb-comparison", "inputs": ["lower_bounds.csv"],
         "out": "bounds_fig"}))
    assert main(["render", "--spec", str(spec_path)]) == 0
    assert (tmp_path / "bounds_fig.png").exists()


def test_schema_mismatch_names_column(benchmark_outputs, tmp_path, capsys):
    broken = tmp_path / "curves.csv"
    lines = (benchmark_outputs["compare"] / "curves.csv").read_text().splitlines()
    header = lines[0].split(",")
    drop = header.index("lb_ours_times_logt")
    out = [",".join(v for i, v in enumerate(row.split(",")) if i != drop)
           for row in lines]
    broken.write_text("\n".join(out) + "\n")
    spec_path = tmp_path / "broken.json"
    spec_path.write_text(json.dumps(
        {"kind": "curves", "inputs": ["curves.csv"], "out": "x"}))
    assert main(["render", "--spec", str(spec_path)]) == 4
    assert "lb_ours_times_logt" in capsys.readouterr().err


def test_unknown_kind_exits_3(tmp_path, capsys):
    spec_path = tmp_path / "bad.json"
    spec_path.write_text(json.dumps(
        {"kind": "pie", "inputs": ["a.csv"], "out": "x"}))
    assert main(["render", "--spec", str(spec_path)]) == 3
    assert "unknown figure kind" in capsys.readouterr().err


def test_missing_spec_file_exits_3(tmp_path):
    assert main(["render", "--spec", str(tmp_path / "none.json")]) == 3


def test_invalid_json_exits_3(tmp_path):
    spec_path = tmp_path / "bad.json"
    spec_path.write_text("{not json")
    assert main(["render", "--spec", str(spec_path)]) == 3


def test_unknown_spec_key_exits_3(tmp_path):
    spec_path = tmp_path / "bad.json"
    spec_path.write_text(json.dumps(
        {"kind": "curves", "inputs": ["a.csv"], "out": "x", "color": "red"}))
    assert main(["render", "--spec", str(spec_path)]) == 3


def test_usage_error():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2

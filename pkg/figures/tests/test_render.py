import json
import xml.etree.ElementTree as ET

import pytest

from vmfigures.render import (
    RenderError,
    load_manifest,
    main,
    render_figure,
)
from vmlab.config import parse_config
from vmlab.experiments import run_figure

SVG_NS = "{http://www.w3.org/2000/svg}"

BASE = {
    "objective": "gauss_quad",
    "spectrum": [3.0] * 4,
    "gamma": 0.1,
    "horizon": 3.0,
    "seed": 3,
}


def make_run(tmp_path, figure, body=None):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(body or BASE))
    cfg = parse_config(cfg_path)
    out = tmp_path / f"run-{figure}"
    manifest = run_figure(cfg, figure, out_dir=out)
    return out / "manifest.json", manifest


def svg_groups(svg_path, prefix):
    root = ET.parse(svg_path).getroot()
    return [g for g in root.iter(f"{SVG_NS}g")
            if (g.get("id") or "").startswith(prefix)]


@pytest.fixture(scope="module")
def rendered(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("fig2")
    manifest_path, manifest = make_run(tmp_path, "fig2")
    out = tmp_path / "render"
    files = render_figure(manifest_path, "fig2", out)
    return manifest, files


class TestPanelGrid:
    def test_emits_png_and_svg(self, rendered):
        _, files = rendered
        exts = {f.suffix for f in files}
        assert exts == {".png", ".svg"}
        assert all(f.stat().st_size > 0 for f in files)

    def test_six_panels(self, rendered):
        _, files = rendered
        svg = [f for f in files if f.suffix == ".svg"][0]
        assert len(svg_groups(svg, "panel-")) == 6

    def test_series_count_matches_manifest(self, rendered):
        manifest, files = rendered
        svg = [f for f in files if f.suffix == ".svg"][0]
        series = svg_groups(svg, "series-")
        n_csv = len([f for f in manifest.files
                     if f.endswith(("_vs_cn.csv", "_vs_lm.csv",
                                    "_to_opt.csv"))])
        assert len(series) == n_csv

    def test_envelope_overlays_present_for_fig4(self, tmp_path):
        body = dict(BASE, objective="poly50_quad", horizon=2.0)
        manifest_path, manifest = make_run(tmp_path, "fig4", body)
        files = render_figure(manifest_path, "fig4", tmp_path / "r4")
        svg = [f for f in files if f.suffix == ".svg"][0]
        n_bounds = len([f for f in manifest.files
                        if f.endswith("_bound_vs_cn.csv")])
        assert len(svg_groups(svg, "envelope-")) == n_bounds


class TestTrajectoryOverlay:
    def test_fig1_right_overlay(self, tmp_path):
        body = dict(BASE, objective="quadratic", horizon=5.0)
        manifest_path, manifest = make_run(tmp_path, "fig1_right", body)
        files = render_figure(manifest_path, "fig1_right",
                              tmp_path / "r1")
        svg = [f for f in files if f.suffix == ".svg"][0]
        series = svg_groups(svg, "series-")
        n_traj = len([f for f in manifest.files
                      if f.endswith("_traj.csv") or f == "traj_cn.csv"])
        assert len(series) == n_traj == 4  # reference + three sweeps


class TestErrors:
    def test_missing_csv_names_entry(self, tmp_path):
        manifest_path, _ = make_run(tmp_path, "fig2")
        doc = json.loads(manifest_path.read_text())
        victim = next(n for n in doc["files"] if n.endswith("_vs_cn.csv"))
        (tmp_path / "run-fig2" / victim).unlink()
        with pytest.raises(RenderError, match=victim):
            render_figure(manifest_path, "fig2", tmp_path / "r")

    def test_empty_sweep_rejected(self, tmp_path):
        p = tmp_path / "manifest.json"
        p.write_text(json.dumps({"figure": "fig2", "out_dir": str(tmp_path),
                                 "config": {}, "files": {}}))
        with pytest.raises(RenderError):
            render_figure(p, "fig2", tmp_path / "r")
        # no half-written image left behind
        assert not (tmp_path / "r" / "fig2.svg").exists()

    def test_unknown_figure_rejected(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text("{}")
        with pytest.raises(RenderError):
            render_figure(p, "fig99", tmp_path)

    def test_bad_manifest(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text("not json")
        with pytest.raises(RenderError):
            load_manifest(p)


class TestReadOnly:
    def test_rendering_does_not_touch_run_dir(self, tmp_path):
        manifest_path, _ = make_run(tmp_path, "fig2")
        run_dir = manifest_path.parent
        before = {p.name: p.stat().st_mtime_ns
                  for p in run_dir.iterdir()}
        render_figure(manifest_path, "fig2", tmp_path / "r")
        after = {p.name: p.stat().st_mtime_ns for p in run_dir.iterdir()}
        assert before == after


class TestCli:
    def test_main_roundtrip(self, tmp_path, capsys):
        manifest_path, _ = make_run(tmp_path, "fig2")
        rc = main(["--manifest", str(manifest_path), "--figure", "fig2",
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 2

    def test_main_render_error_exit(self, tmp_path, capsys):
        p = tmp_path / "m.json"
        p.write_text("{}")
        rc = main(["--manifest", str(p), "--figure", "fig2",
                   "--out", str(tmp_path / "out")])
        assert rc == 1
        capsys.readouterr()

import json

import numpy as np
import pytest
import yaml

from wsurf import io as wio
from wsurf.cli import convergence_table, load_config, main, UsageError
from wsurf.core import NaturalChart
from wsurf.reconstruct import Frame, integrate_frame, cylinder_fixture

CLASS1 = {"class": 1, "preset": "liouville", "chart": {"u_range": [0.1, 0.7], "v_range": [0.1, 0.7], "n": 17}}
# nu = tan(lambda/2) > 0 needs 4 atan(e^v) < pi, i.e. v < 0
CLASS8 = {"class": 8, "preset": "kink", "chart": {"u_range": [0.0, 1.5], "v_range": [-1.5, -0.5], "n": 33}}


def write_cfg(tmp_path, cfg, name="run.yaml"):
    cfg = dict(cfg)
    cfg.setdefault("output", {"dir": str(tmp_path / "out")})
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


@pytest.fixture
def surface():
    return integrate_frame(cylinder_fixture(n_u=5, n_v=4), Frame.standard())


def test_obj_roundtrip(tmp_path, surface):
    wio.write_obj(tmp_path / "s.obj", surface)
    v, n, f = wio.read_obj(tmp_path / "s.obj")
    assert np.array_equal(v, surface.z.reshape(-1, 3))
    assert np.array_equal(n, surface.l.reshape(-1, 3))
    assert f.shape == (2 * 4 * 3, 3) and f.min() == 0 and f.max() == 19


def test_ply_roundtrip(tmp_path, surface):
    wio.write_ply(tmp_path / "s.ply", surface)
    v, n, f = wio.read_ply(tmp_path / "s.ply")
    assert np.allclose(v, surface.z.reshape(-1, 3), atol=1e-6)
    assert np.allclose(n, surface.l.reshape(-1, 3), atol=1e-6)
    assert np.array_equal(f, wio.grid_faces(5, 4))
    assert (tmp_path / "s.ply").read_bytes().startswith(b"ply\nformat binary_little_endian 1.0\n")


def test_write_mesh_dispatch(tmp_path, surface):
    with pytest.raises(ValueError):
        wio.write_mesh(tmp_path / "s.stl", surface)
    wio.write_mesh(tmp_path / "s.PLY", surface)
    assert (tmp_path / "s.PLY").exists()


def test_faces_orientation():
    f = wio.grid_faces(2, 2)
    assert f.tolist() == [[0, 2, 1], [1, 2, 3]]


def test_csv_and_bundle_roundtrip(tmp_path):
    ch = NaturalChart(1.0, 2.0, -0.5, (0, 1), (2, 3), 4, 3)
    U, V = ch.mesh()
    x = np.sin(U) + V / 3
    wio.write_field_csv(tmp_path / "x.csv", ch, x)
    u, v, y = wio.read_field_csv(tmp_path / "x.csv")
    assert np.array_equal(y, x) and np.array_equal(u, ch.u) and np.array_equal(v, ch.v)
    with pytest.raises(ValueError):
        wio.write_field_csv(tmp_path / "bad.csv", ch, x.T)
    wio.write_bundle(tmp_path / "b.json", ch, {"x": x}, {"class_id": 1})
    ch2, fields = wio.read_bundle(tmp_path / "b.json")
    assert ch2 == ch and np.array_equal(fields["x"], x)


def test_json_17_digits():
    x = 0.1 + 0.2
    assert json.loads(wio.dumps({"x": np.float64(x)}))["x"] == x


def test_config_unknown_key(tmp_path):
    p = write_cfg(tmp_path, {**CLASS1, "bogus": 1})
    with pytest.raises(UsageError):
        load_config(p)
    assert main(["solve", str(p)]) == 1


def test_config_requires_class_and_exact(tmp_path):
    with pytest.raises(UsageError):
        load_config(write_cfg(tmp_path, {"preset": "kink"}))
    with pytest.raises(UsageError):
        load_config(write_cfg(tmp_path, {"class": 1}))
    with pytest.raises(UsageError):
        load_config(write_cfg(tmp_path, {**CLASS1, "class": 12}))


def test_classify_exit_codes(capsys):
    assert main(["classify", "--alpha", "0", "--beta", "0", "--gamma", "-1", "--delta", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["class_id"] == 8
    assert main(["classify", "--alpha", "1", "--beta", "1", "--gamma", "0", "--delta", "0"]) == 2
    assert main(["classify", "--A", "1", "--B", "0", "--C", "0", "--D", "1"]) == 2
    assert main(["classify", "--alpha", "1"]) == 1
    assert main([]) == 1
    assert main(["nonsense"]) == 1


def test_classify_euclidean(capsys):
    assert main(["classify", "--alpha", "1", "--beta", "0", "--gamma", "0", "--delta", "0", "--euclidean"]) == 0
    cap = capsys.readouterr()
    out = json.loads(cap.out)
    assert out["euclidean"]["rhs"] == "-exp(lambda)"
    assert "class 1" in cap.err


def test_solve_reconstruct_verify_export(tmp_path, capsys):
    cfg = write_cfg(tmp_path, CLASS1)
    assert main(["solve", str(cfg)]) == 0
    bundle = tmp_path / "out" / "solution.json"
    assert bundle.exists() and (tmp_path / "out" / "solution.csv").exists()
    rep = wio.read_json(tmp_path / "out" / "solver_report.json")
    assert rep["solver"]["converged"] and rep["solution_err"] < 1e-3
    assert main(["reconstruct", str(bundle), "--mesh", str(tmp_path / "m.obj"),
                 "--frames", str(tmp_path / "fr.json")]) == 0
    assert wio.read_obj(tmp_path / "m.obj")[0].shape == (17 * 17, 3)
    capsys.readouterr()
    assert main(["verify", str(bundle)]) == 0
    assert "gauss_max" in json.loads(capsys.readouterr().out)
    assert main(["verify", str(bundle), "--tol", "1e-12"]) == 4
    assert main(["export", str(bundle), str(tmp_path / "m.ply")]) == 0
    assert main(["export", str(bundle), str(tmp_path / "x.csv")]) == 0
    assert main(["parallel", str(bundle), "--offset", "0.05", "--offset", "0.1"]) == 0
    assert main(["parallel", str(bundle)]) == 1
    assert main(["parallel", str(bundle), "--offset", str(1 / 2.3)]) == 4


def test_pipeline_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {**CLASS1, "offsets": [0.05], "output": {"dir": str(tmp_path / "o"),
                                                                        "mesh": "s.ply"}})
    assert main(["pipeline", str(cfg), "--n", "33"]) == 0
    d = tmp_path / "o"
    for name in ("s.ply", "solution.json", "verification.json", "solver_report.json", "parallel_family.json"):
        assert (d / name).exists(), name
    assert "gauss_max:" in capsys.readouterr().err


def test_pipeline_class8(tmp_path):
    assert main(["pipeline", str(write_cfg(tmp_path, CLASS8))]) == 0


def test_pipeline_verify_failure(tmp_path):
    cfg = write_cfg(tmp_path, {**CLASS1, "verify": {"gauss_max": 1e-12}})
    assert main(["pipeline", str(cfg)]) == 4


def test_solver_exit_code(tmp_path):
    assert main(["solve", str(write_cfg(tmp_path, CLASS1)), "--max-iter", "1"]) == 3


def test_convergence(tmp_path, capsys, monkeypatch):
    cfg = write_cfg(tmp_path, CLASS8)
    assert main(["convergence", str(cfg), "--levels", "17"]) == 1
    monkeypatch.setenv("WSURF_THREADS", "3")
    assert main(["convergence", str(cfg), "--levels", "33", "65", "129", "--json", str(tmp_path / "c.json")]) == 0
    tab = wio.read_json(tmp_path / "c.json")
    assert 1.8 < tab["order"] < 2.2
    assert "fitted order" in capsys.readouterr().out


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("WSURF_THREADS", "zero")
    assert main(["classify", "--alpha", "1", "--beta", "0", "--gamma", "0", "--delta", "0"]) == 1


def test_convergence_table_direct():
    cfg = load_config(overrides=CLASS1)
    tab = convergence_table(cfg, [17, 33, 65])
    assert len(tab["error"]) == 3 and tab["error"][0] > tab["error"][2]


def test_relation_config(tmp_path):
    cfg = write_cfg(tmp_path, {"relation": [0, 0, -1, 1], "preset": "kink",
                               "chart": {"u_range": [0, 1], "v_range": [0, 0.5], "n": 17}})
    assert main(["solve", str(cfg)]) == 0

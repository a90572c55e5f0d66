import json
import sys

import numpy as np
import pytest

from rex3d.cli import main
from rex3d.nifti import load_volume, save_volume
from rex3d.volume import make_phantom


@pytest.fixture
def phantom_file(tmp_path):
    vol, truth = make_phantom((16, 16, 16), (8, 8, 8), 3, 0.6, base=0.2,
                              noise=0.05, seed=1)
    path = tmp_path / "phantom.nii"
    save_volume(vol, path)
    truth_path = tmp_path / "truth.nii"
    save_volume(truth, truth_path)
    return path, truth_path


FAST = ["--iterations", "3", "--max-depth", "2", "--search-limit", "200"]


def run_explain(path, out, extra=()):
    return main(["explain", "--input", str(path),
                 "--oracle", "sphere:8,8,8,3,0.5", "--occlusion", "zero",
                 "--seed", "42", "--out", str(out), *FAST, *extra])


def test_explain_writes_artifacts(tmp_path, phantom_file):
    path, _ = phantom_file
    out = tmp_path / "run"
    assert run_explain(path, out) == 0
    assert (out / "respmap.nii").exists()
    assert (out / "explanation.nii").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 42
    assert manifest["run"]["model_calls"] <= 200 + 14
    mask = load_volume(out / "explanation.nii")
    assert set(np.unique(mask.data)) <= {0.0, 1.0}
    resp = load_volume(out / "respmap.nii")
    assert resp.data.max() == pytest.approx(1.0)


def test_explain_deterministic_outputs(tmp_path, phantom_file):
    path, _ = phantom_file
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_explain(path, a) == 0
    assert run_explain(path, b) == 0
    assert (a / "respmap.nii").read_bytes() == (b / "respmap.nii").read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    ma.pop("wall_ms"), mb.pop("wall_ms")
    assert ma == mb


def test_explain_missing_input_flag_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["explain", "--out", "x"])
    assert err.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_explain_unreadable_input_io_error(tmp_path):
    code = main(["explain", "--input", str(tmp_path / "missing.nii"),
                 "--oracle", "sphere:1,1,1,0,0.5", "--out",
                 str(tmp_path / "o")])
    assert code == 2


def test_explain_oracle_required(tmp_path, phantom_file):
    path, _ = phantom_file
    code = main(["explain", "--input", str(path), "--out",
                 str(tmp_path / "o")])
    assert code == 1


def test_explain_config_file_flags_override(tmp_path, phantom_file):
    path, _ = phantom_file
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "oracle": "sphere:8,8,8,3,0.5", "occlusion": "zero",
        "iterations": 3, "d_max": 2, "l_max": 200, "seed": 7,
    }))
    out = tmp_path / "run"
    assert main(["explain", "--input", str(path), "--config", str(config),
                 "--seed", "42", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 42  # flag beats file
    assert manifest["config"]["iterations"] == 3


def test_explain_external_model_parity(tmp_path, phantom_file):
    path, _ = phantom_file
    adapter = tmp_path / "adapter.py"
    adapter.write_text(ADAPTER_SPHERE)
    out_local = tmp_path / "local"
    out_remote = tmp_path / "remote"
    assert run_explain(path, out_local) == 0
    assert main(["explain", "--input", str(path),
                 "--model", f"cmd:{sys.executable} {adapter}",
                 "--occlusion", "zero", "--seed", "42",
                 "--out", str(out_remote), *FAST]) == 0
    assert (out_local / "respmap.nii").read_bytes() == \
        (out_remote / "respmap.nii").read_bytes()


def test_render_outputs_pngs(tmp_path, phantom_file):
    path, truth_path = phantom_file
    run_dir = tmp_path / "run"
    assert run_explain(path, run_dir) == 0
    out = tmp_path / "imgs"
    code = main(["render", "--input", str(path),
                 "--map", str(run_dir / "respmap.nii"),
                 "--explanation", str(run_dir / "explanation.nii"),
                 "--truth", str(truth_path),
                 "--plane", "all", "--slice", "mid", "--out", str(out)])
    assert code == 0
    for plane in ("axial", "sagittal", "coronal"):
        assert (out / f"{plane}.png").exists()


def test_render_dim_mismatch_exit_2(tmp_path, phantom_file):
    path, _ = phantom_file
    other = tmp_path / "small.nii"
    vol, _ = make_phantom((8, 8, 8), (4, 4, 4), 2, 0.5)
    save_volume(vol, other)
    assert main(["render", "--input", str(path), "--map", str(other),
                 "--out", str(tmp_path / "o")]) == 2


def test_eval_plan(tmp_path):
    plan = {
        "phantoms": [{"id": "p0", "dims": [16, 16, 16], "center": [8, 8, 8],
                      "radius": 3, "delta": 0.6, "base": 0.2, "noise": 0.05,
                      "seed": 1}],
        "oracles": ["sphere:8,8,8,3,0.5"],
        "occlusions": ["zero"],
        "seeds": [0, 1],
        "config": {"d_max": 2, "l_max": 200, "iterations": 3},
    }
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(plan))
    out = tmp_path / "results.csv"
    assert main(["eval", "--plan", str(plan_path), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 3  # header + 2 rows
    assert lines[0].startswith("phantom_id,")
    # resume leaves existing rows untouched
    before = out.read_text()
    assert main(["eval", "--plan", str(plan_path), "--out", str(out),
                 "--resume"]) == 0
    assert out.read_text() == before


def test_eval_empty_plan_exit_1(tmp_path):
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps({
        "phantoms": [], "oracles": [], "occlusions": [], "seeds": []}))
    assert main(["eval", "--plan", str(plan_path),
                 "--out", str(tmp_path / "o.csv")]) == 1


def test_eval_unreadable_plan_exit_2(tmp_path):
    assert main(["eval", "--plan", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o.csv")]) == 2


ADAPTER_SPHERE = """\
import json, sys
import numpy as np

stdin, stdout = sys.stdin.buffer, sys.stdout.buffer
hs = json.loads(stdin.readline())
shape = hs["shape"]
stdout.write(json.dumps({"proto": 1, "ok": True}).encode() + b"\\n")
stdout.flush()
nbytes = shape[0] * shape[1] * shape[2] * 4
xs = np.arange(shape[0])[:, None, None]
ys = np.arange(shape[1])[None, :, None]
zs = np.arange(shape[2])[None, None, :]
ball = (xs - 8) ** 2 + (ys - 8) ** 2 + (zs - 8) ** 2 <= 9
while True:
    header = json.loads(stdin.readline())
    if header["id"] == -1:
        break
    labels, confs = [], []
    for _ in range(header["count"]):
        v = np.frombuffer(stdin.read(nbytes), dtype="<f4").reshape(
            shape, order="F")
        stat = float(v[ball].mean(dtype=np.float64))
        labels.append(int(stat > 0.5))
        confs.append(float(1.0 / (1.0 + np.exp(-10.0 * (stat - 0.5)))))
    stdout.write(json.dumps({"id": header["id"], "labels": labels,
                             "confidences": confs}).encode() + b"\\n")
    stdout.flush()
"""

# Copyright 2026 The sphpsd Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

CLI = os.environ.get("SPHPSD_CLI", "sphpsd")
DATA = Path(os.environ.get("SPHPSD_DATA", Path(__file__).resolve().parents[2] / "data")).resolve()


def run(*args, ok=True):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if ok:
        assert p.returncode == 0, p.stderr
    return p


def make_config(tmp_path, name="run.json", **changes):
    cfg = json.loads((DATA / "default.json").read_text())
    cfg["geometry"] = str(DATA / "geometry" / "icosahedral32.json")
    cfg["scene"]["duration_s"] = 1.0
    for key, value in changes.items():
        cfg[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def load(path):
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sim")
    cfg = make_config(tmp)
    run("simulate", "--config", cfg, "--out", tmp / "sim", "--threads", 3)
    run("estimate", "--config", cfg, "--input", tmp / "sim" / "mixture.spec", "--out", tmp / "est")
    return tmp, cfg


def test_simulate_is_deterministic_across_threads(sim, tmp_path):
    tmp, cfg = sim
    run("simulate", "--config", cfg, "--out", tmp_path / "again", "--threads", 1)
    for name in ["mixture.wav", "mixture.spec", "manifest.json", "truth_source_0.csv", "stems/source_3.wav"]:
        assert (tmp / "sim" / name).read_bytes() == (tmp_path / "again" / name).read_bytes(), name


def test_seed_override_changes_output(sim, tmp_path):
    tmp, cfg = sim
    run("simulate", "--config", cfg, "--out", tmp_path / "other", "--seed", 99)
    assert (tmp / "sim" / "mixture.wav").read_bytes() != (tmp_path / "other" / "mixture.wav").read_bytes()


def test_missing_geometry_exit_code(tmp_path):
    cfg = make_config(tmp_path)
    p = run("simulate", "--config", cfg, "--geometry", tmp_path / "absent.json", "--out", tmp_path, ok=False)
    assert p.returncode == 2
    assert "absent.json" in p.stderr


def test_reverb_profile_lists_gamma_targets(tmp_path):
    cfg = json.loads((DATA / "examples" / "reverb_profile.json").read_text())
    cfg["geometry"] = str(DATA / "geometry" / "icosahedral32.json")
    cfg["scene"]["duration_s"] = 0.5
    path = tmp_path / "profile.json"
    path.write_text(json.dumps(cfg))
    run("simulate", "--config", path, "--out", tmp_path / "out")
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert len(manifest["gamma_targets"]) == 9
    assert load(tmp_path / "out" / "truth_gamma.csv").shape == (65, 18)


def test_estimate_outputs(sim):
    tmp, _ = sim
    manifest = json.loads((tmp / "est" / "manifest.json").read_text())
    frames, bins = manifest["frames"], manifest["bins"]
    for l in range(4):
        assert load(tmp / "est" / f"psd_source_{l}.csv").shape == (frames, bins)
    assert manifest["invariants"]["min_rectified"] >= 0.0
    assert load(tmp / "est" / "diagnostics.csv").shape == (bins, 9)


def test_wav_and_spectra_inputs_agree(sim, tmp_path):
    tmp, cfg = sim
    run("estimate", "--config", cfg, "--input", tmp / "sim" / "mixture.wav", "--out", tmp_path / "w")
    a = load(tmp / "est" / "psd_source_0.csv")
    b = load(tmp_path / "w" / "psd_source_0.csv")
    assert np.sum(np.abs(a - b)) / np.sum(a) < 0.5


def test_doa_count_mismatch_exit_code(tmp_path):
    cfg = make_config(tmp_path, num_sources=3)
    p = run("estimate", "--config", cfg, "--input", tmp_path / "x.wav", "--out", tmp_path, ok=False)
    assert p.returncode == 2
    assert "num_sources" in p.stderr


def test_channel_mismatch_exit_code(sim, tmp_path):
    tmp, cfg = sim
    p = run("estimate", "--config", cfg, "--input", tmp / "sim" / "origin.wav", "--out", tmp_path, ok=False)
    assert p.returncode == 2


def test_no_noise_column_flag_matches_config(sim, tmp_path):
    tmp, cfg = sim
    spec = tmp / "sim" / "mixture.spec"
    run("estimate", "--config", cfg, "--input", spec, "--out", tmp_path / "flag", "--no-noise-column")
    est = json.loads(Path(cfg).read_text())
    est["estimator"]["include_noise_column"] = False
    (tmp_path / "cfg.json").write_text(json.dumps(est))
    run("estimate", "--config", tmp_path / "cfg.json", "--input", spec, "--out", tmp_path / "key")
    assert not load(tmp_path / "flag" / "psd_noise.csv").any()
    for name in ["psd_source_0.csv", "psd_source_3.csv", "psd_noise.csv"]:
        assert (tmp_path / "flag" / name).read_bytes() == (tmp_path / "key" / name).read_bytes()


def test_separate_variants(sim, tmp_path):
    tmp, cfg = sim
    spec = tmp / "sim" / "mixture.spec"
    run("separate", "--config", cfg, "--input", spec, "--psd", tmp / "est", "--out", tmp_path / "md", "--gains")
    run("separate", "--config", cfg, "--input", spec, "--psd", tmp / "est", "--out", tmp_path / "ds",
        "--beamformer", "ds")
    run("separate", "--config", cfg, "--input", spec, "--out", tmp_path / "raw", "--bypass-wiener")
    samples = json.loads((tmp / "sim" / "manifest.json").read_text())["samples"]
    for d in ["md", "ds", "raw"]:
        assert len(list((tmp_path / d).glob("source_*.wav"))) == 4
        assert json.loads((tmp_path / d / "manifest.json").read_text())["samples"] == samples
    gains = load(tmp_path / "md" / "gain_0.csv")
    assert gains.min() >= 0.0 and gains.max() <= 1.0
    assert (tmp_path / "md" / "source_0.wav").read_bytes() != (tmp_path / "ds" / "source_0.wav").read_bytes()
    assert (tmp_path / "md" / "source_0.wav").read_bytes() != (tmp_path / "raw" / "source_0.wav").read_bytes()

    p = run("eval", "--truth", tmp / "sim", "--separated", tmp_path / "md", "--out", tmp_path / "ev")
    report = json.loads((tmp_path / "ev" / "report.json").read_text())
    assert np.median(report["separation"]["sir_gain_db"]) > 5.0


def test_eval_perfect_estimates_hit_the_floor(sim, tmp_path):
    tmp, _ = sim
    perfect = tmp_path / "perfect"
    shutil.copytree(tmp / "est", perfect)
    beta = json.loads((perfect / "manifest.json").read_text())["estimator"]["beta"]
    for l in range(4):
        truth = load(tmp / "sim" / f"truth_source_{l}.csv")
        smooth = np.zeros_like(truth)
        state = np.zeros(truth.shape[1])
        for t in range(truth.shape[0]):
            state = beta * state + (1 - beta) * truth[t]
            smooth[t] = state
        np.savetxt(perfect / f"psd_source_{l}.csv", smooth, delimiter=",", fmt="%.17g")
    run("eval", "--truth", tmp / "sim", "--estimate", perfect, "--out", tmp_path / "ev")
    report = json.loads((tmp_path / "ev" / "report.json").read_text())
    assert max(report["phi_err_db"]["sources"]) < -100.0 + 1e-9
    traces = load(tmp_path / "ev" / "eval_per_bin.csv")
    assert traces.shape == (65, 2 + 4 + 2)


def test_eval_manifest_mismatch_exit_code(sim, tmp_path):
    tmp, _ = sim
    cfg = make_config(tmp_path)
    other = json.loads(cfg.read_text())
    other["scene"]["duration_s"] = 0.5
    cfg.write_text(json.dumps(other))
    spec_dir = tmp_path / "short"
    run("simulate", "--config", cfg, "--out", spec_dir)
    run("estimate", "--config", cfg, "--input", spec_dir / "mixture.spec", "--out", tmp_path / "est")
    p = run("eval", "--truth", tmp / "sim", "--estimate", tmp_path / "est", "--out", tmp_path / "ev", ok=False)
    assert p.returncode == 2
    assert "frames" in p.stderr


def test_condsweep_grid(tmp_path):
    run("condsweep", "--out", tmp_path)
    grid = load(tmp_path / "condition_sweep.csv")
    assert grid.shape == (29, 3)
    n2 = dict(zip(grid[:, 0].astype(int), grid[:, 1]))
    assert max(n2[l] for l in range(2, 22)) < 1e4
    assert min(n2[l] for l in range(25, 31)) > 1e6
    assert grid[:, 2].max() < 1e4

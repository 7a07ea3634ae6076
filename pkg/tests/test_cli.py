import json

import numpy as np
import pytest

from flashlab import cli, dataset, formation, imgcore


def run(*argv):
    return cli.run(list(argv))


def test_synth_writes_manifest(tmp_path, capsys):
    out = tmp_path / "d"
    assert run("--seed", "7", "synth", "--count", "4", "--res", "32", "--out", str(out)) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["records"]) == 4
    recs = dataset.load_manifest(out)
    assert all(r.P.shape == (32, 32, 3) for r in recs)


def test_synth_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("--seed", "3", "synth", "--count", "2", "--res", "16", "--out", str(a)) == 0
    assert run("--seed", "3", "synth", "--count", "2", "--res", "16", "--out", str(b)) == 0
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    for rec in json.loads((a / "manifest.json").read_text())["records"]:
        for rel in rec["paths"].values():
            assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_usage_error_exit_1(capsys):
    assert run("train", "--task", "generation", "--data", "x", "--ckpt-out", "y") == 1
    err = capsys.readouterr().err
    assert "--decomposer" in err
    assert "usage" in err.lower()


def test_unknown_flag_exit_1(capsys):
    assert run("synth", "--count", "1", "--out", "d", "--bogus") == 1


def test_runtime_error_exit_2(tmp_path, capsys):
    missing = tmp_path / "absent"
    code = run("eval", "--ckpt", str(missing / "x.ckpt"), "--data", str(missing))
    assert code == 2
    assert capsys.readouterr().err.strip() != ""


def test_relight_ambient_only_equals_decomposed_ambient(tmp_path, capsys):
    data = tmp_path / "d"
    assert run("--seed", "1", "synth", "--count", "2", "--res", "24", "--out", str(data)) == 0
    rec = dataset.load_manifest(data)[0]
    out_png = tmp_path / "x.png"
    assert run("relight", "--data", str(data), "--scene", rec.id,
               "--kappa", "0", "--alpha", "1", "--kelvin", str(rec.kelvin),
               "--out", str(out_png)) == 0
    # kappa=0 leaves exactly the ambient estimate of the decomposition
    d = formation.split_illuminations(rec.P, rec.S_A, rec.S_F, rec.ambient)
    expect = imgcore.srgb_encode(d.A)
    got = imgcore.read_png(out_png)
    assert np.array_equal(got, expect)


def test_full_cli_round_trip_train_eval_decompose(tmp_path, capsys):
    data = tmp_path / "d"
    ck = tmp_path / "ck"
    assert run("--seed", "2", "synth", "--count", "6", "--res", "16", "--out", str(data)) == 0
    assert run("--seed", "2", "train", "--task", "decomposition", "--data", str(data),
               "--epochs", "1", "--batch-size", "2", "--base-width", "4",
               "--ckpt-out", str(ck)) == 0
    assert (ck / "loss.csv").exists()
    metrics_json = tmp_path / "m.json"
    assert run("eval", "--ckpt", str(ck / "final.ckpt"), "--data", str(data),
               "--split", "train", "--out", str(metrics_json)) == 0
    table = json.loads(metrics_json.read_text())
    assert table["task"] == "decomposition"
    rec_id = dataset.load_manifest(data)[0].id
    assert run("decompose", "--ckpt", str(ck / "final.ckpt"), "--data", str(data),
               "--scene", rec_id) == 0
    assert (data / rec_id / "decomp" / "meta.json").exists()


def test_generate_cli(tmp_path, capsys):
    data = tmp_path / "d"
    dec_ck = tmp_path / "dec"
    gen_ck = tmp_path / "gen"
    assert run("--seed", "3", "synth", "--count", "4", "--res", "16", "--out", str(data)) == 0
    assert run("--seed", "3", "train", "--task", "decomposition", "--data", str(data),
               "--epochs", "1", "--batch-size", "2", "--base-width", "4",
               "--ckpt-out", str(dec_ck)) == 0
    assert run("--seed", "3", "train", "--task", "generation", "--data", str(data),
               "--decomposer", str(dec_ck / "final.ckpt"), "--epochs", "1",
               "--batch-size", "2", "--base-width", "4", "--ckpt-out", str(gen_ck)) == 0
    rec = dataset.load_manifest(data)[0]
    out = tmp_path / "gen_out"
    assert run("generate", "--ckpt", str(gen_ck / "final.ckpt"), "--data", str(data),
               "--scene", rec.id, "--kelvin", "3000", "--out", str(out)) == 0
    p_hat = imgcore.read_pfm(out / "P.pfm")
    f_hat = imgcore.read_pfm(out / "F.pfm")
    # P_hat = F_hat + c_A * A by the generation equation
    c = formation.AmbientLight(3000).c_A.astype(np.float32)
    assert np.abs(p_hat - (f_hat + c * rec.A)).max() < 1e-6
    assert (out / "P.png").exists()


def test_relight_ground_truth_flag(tmp_path):
    data = tmp_path / "d"
    assert run("--seed", "5", "synth", "--count", "2", "--res", "24", "--out", str(data)) == 0
    rec = dataset.load_manifest(data)[0]
    out_png = tmp_path / "x.png"
    assert run("relight", "--data", str(data), "--scene", rec.id, "--ground-truth",
               "--kappa", "1", "--alpha", "1", "--kelvin", str(rec.kelvin),
               "--out", str(out_png)) == 0
    d = formation.split_illuminations(rec.P, rec.S_A, rec.S_F, rec.ambient)
    assert np.array_equal(imgcore.read_png(out_png), imgcore.srgb_encode(d.A + d.F))


def test_sr_cli(tmp_path, capsys):
    data = tmp_path / "d"
    ck = tmp_path / "ck"
    assert run("--seed", "4", "synth", "--count", "4", "--res", "32", "--out", str(data)) == 0
    assert run("--seed", "4", "train", "--task", "sr", "--data", str(data),
               "--epochs", "1", "--batch-size", "2", "--base-width", "4",
               "--sr-low-res", "8", "--ckpt-out", str(ck)) == 0
    rec = dataset.load_manifest(data)[0]
    low = tmp_path / "low.pfm"
    imgcore.write_pfm(imgcore.resize_to(rec.A, 8, 8), low)
    full = data / rec.id / "P.pfm"
    out = tmp_path / "up.pfm"
    assert run("sr", "--input", str(full), "--lowres", str(low),
               "--ckpt", str(ck / "final.ckpt"), "--out", str(out)) == 0
    assert imgcore.read_pfm(out).shape == (32, 32, 3)


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as e:
        run("synth", "--help")
    assert e.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--count", "--res", "--out"):
        assert flag in out

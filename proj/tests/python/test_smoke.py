"""Smoke test for the python bindings: every exported operation runs end to
end and the renderer matches the committed golden hash."""

import json
import os
import sys
import tempfile

import numpy as np

import iatfp

GOLDEN_DIR = os.environ["IATFP_GOLDEN_DIR"]

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK = (1 << 64) - 1


def fnv1a64(data):
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK
    return h


def read_kv(name):
    out = {}
    with open(os.path.join(GOLDEN_DIR, name)) as f:
        for line in f:
            if line.strip():
                key, value = line.split()
                out[key] = value
    return out


def test_profiles_and_sampling():
    a, b = iatfp.default_profiles()
    assert a["mac"] == "02:00:00:00:00:0a"
    assert b["mac"] == "02:00:00:00:00:0b"
    s1 = iatfp.sample_iats(a, 300)
    s2 = iatfp.sample_iats(a, 300)
    assert s1.shape == (300,)
    assert (s1 == s2).all()
    assert (s1 > 0).all()
    assert (iatfp.sample_iats(b, 10) != s1[:10]).any()


def test_split_arithmetic():
    assert iatfp.train_count(0.8, 636) == 509
    assert iatfp.train_count(0.8, 608) == 486


def test_render_golden():
    with open(os.path.join(GOLDEN_DIR, "seed42_window.txt")) as f:
        values = np.array([float(line) for line in f if line.strip()])
    assert values.shape == (100,)
    img = iatfp.rasterize(values)
    assert img.shape == (150, 150, 3)
    assert img.dtype == np.uint8
    expected = read_kv("seed42_raster.txt")["pixels_fnv1a64"]
    assert f"{fnv1a64(img.tobytes()):016x}" == expected

    flipped = iatfp.hflip(img)
    assert (iatfp.hflip(flipped) == img).all()
    assert (flipped != img).any()

    still = iatfp.augment_image(img, shear_range=0.0, zoom_range=0.0,
                                horizontal_flip=False)
    assert (still == img).all()


def test_capture_roundtrip(tmp):
    a, b = iatfp.default_profiles()
    pcap_path = os.path.join(tmp, "smoke.pcap")
    iatfp.generate_pcap([a, b], 300, pcap_path)
    windows = iatfp.ingest(pcap_path, "all", window_size=50)
    assert len(windows) == 10  # 299 IATs per device, 5 windows of 50 each
    devices = {w[0] for w in windows}
    assert devices == {a["mac"], b["mac"]}
    for device, index, values in windows:
        assert values.shape == (50,)
        assert (values > 0).all()


def test_cli_and_model(tmp):
    manifest = os.path.join(tmp, "w.jsonl")
    with open(manifest, "w") as f:
        for i in range(10):
            for mac, value in (("02:00:00:00:00:0a", 0.001),
                               ("02:00:00:00:00:0b", 0.1)):
                f.write(json.dumps({"device": mac, "window_index": i,
                                    "values": [value] * 8, "source": "smoke",
                                    "filter": "all"}) + "\n")
    out_dir = os.path.join(tmp, "run")
    config = os.path.join(tmp, "exp.json")
    with open(config, "w") as f:
        json.dump({
            "seed": 5,
            "paths": {"manifest": manifest, "out_dir": out_dir},
            "train": {"batch_size": 4, "epochs": 2, "learning_rate": 0.01},
            "augment": {"shear_range": 0, "zoom_range": 0,
                        "horizontal_flip": False},
            "plot_style": {"width": 8, "height": 8, "margin": 1,
                           "y_scale": "log_fixed"},
        }, f)

    assert iatfp.run_cli(["train", "--config", config, "--quiet"]) == 0
    assert iatfp.run_cli(["eval", "--model", os.path.join(out_dir, "model.iatm"),
                          "--manifest", manifest, "--quiet"]) == 0
    assert iatfp.run_cli(["bogus"]) == 2

    model = iatfp.Model.load(os.path.join(out_dir, "model.iatm"))
    assert model.loss_kind == "bce"
    img = iatfp.rasterize(np.full(8, 0.1), width=8, height=8, margin=1,
                          y_scale="log_fixed")
    p = model.predict(img)
    assert 0.0 <= p <= 1.0


def main():
    test_profiles_and_sampling()
    test_split_arithmetic()
    test_render_golden()
    with tempfile.TemporaryDirectory() as tmp:
        test_capture_roundtrip(tmp)
    with tempfile.TemporaryDirectory() as tmp:
        test_cli_and_model(tmp)
    print("smoke ok")


if __name__ == "__main__":
    sys.exit(main())

import numpy as np
import pytest

import kstrip


def test_fft2_matches_numpy():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 8, 16)) + 1j * rng.normal(size=(3, 8, 16))
    np.testing.assert_allclose(kstrip.fft2(a), np.fft.fft2(a), atol=1e-10)
    np.testing.assert_allclose(kstrip.ifft2(a), np.fft.ifft2(a), atol=1e-12)
    np.testing.assert_array_equal(kstrip.fftshift(a), np.fft.fftshift(a, axes=(-2, -1)))
    np.testing.assert_array_equal(kstrip.ifftshift(a), np.fft.ifftshift(a, axes=(-2, -1)))


def test_to_image_inverts_centered_kspace():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    k = np.fft.fftshift(np.fft.fft2(x))
    np.testing.assert_allclose(kstrip.to_image(k), x, atol=1e-10)


def test_mask_metrics():
    img = np.zeros((4, 4), complex)
    img[:, :2] = 1.0
    mask = kstrip.binarize(img)
    assert mask.dtype == bool
    np.testing.assert_array_equal(mask, np.abs(img) > 0.5)

    x = np.zeros((8, 8), bool)
    y = np.zeros((8, 8), bool)
    x[0, 0] = True
    y[3, 4] = True
    assert kstrip.directed_hausdorff(x, y) == 5.0
    assert kstrip.dice(x, x) == 100.0
    assert kstrip.dice(x, y) == 0.0

    truth = np.zeros((4, 4), bool)
    pred = np.zeros((4, 4), bool)
    truth[0, 0:3] = True
    pred[0, 0:2] = True
    pred[3, 3] = True
    c = kstrip.confusion(pred, truth)
    assert (c["tp"], c["fp"], c["fn"], c["tn"]) == (2, 1, 1, 12)
    assert c["accuracy"] == pytest.approx(87.5)
    assert kstrip.exclusion_threshold(64, 64) == 312


def test_errors_map_to_exception_types(tmp_path):
    with pytest.raises(kstrip.DimensionError):
        kstrip.dice(np.zeros((4, 4), bool), np.zeros((4, 5), bool))
    with pytest.raises(kstrip.IoError):
        kstrip.read_dataset(str(tmp_path / "missing.ksds"))
    assert issubclass(kstrip.ConfigError, kstrip.Error)
    assert issubclass(kstrip.Error, RuntimeError)


def test_dataset_roundtrip_and_oracle_eval(tmp_path):
    samples = kstrip.generate(10, 6, size=32, seed=3)
    assert len(samples) == 60
    s = samples[3]
    assert s.k_in.shape == (1, 32, 32)
    assert s.brain_mask.shape == (32, 32)
    assert s.brain_mask.sum() == s.brain_pixels

    path = str(tmp_path / "d.ksds")
    kstrip.write_dataset(samples, path)
    back = kstrip.read_dataset(path)
    np.testing.assert_array_equal(back[3].k_target, s.k_target)

    parts = [kstrip.split(samples, w, seed=3) for w in ("train", "val", "test")]
    assert sum(len(p) for p in parts) == len(samples)

    m = kstrip.evaluate(None, samples, split="all", split_seed=3)
    assert m["failures"] == 0
    assert m["phase_error"] < 1e-8
    assert m["dice"] > 95.0


def test_model_train_save_load(tmp_path):
    samples = kstrip.generate(10, 2, size=16, seed=1)
    model = kstrip.Model.build(size=16, base=2, levels=1, blocks=1, dropout=0.0, seed=4)
    assert model.config["bottleneck_channels"] == 4
    log = kstrip.train(model, samples, epochs=1, batch_size=4, split_seed=1)
    assert [r["split"] for r in log] == ["train", "val"]
    assert np.isfinite(log[0]["loss"])

    k = samples[0].k_in[0]
    pred = model.infer(k)
    assert pred.shape == (16, 16)
    path = str(tmp_path / "m.kstrip")
    model.save(path)
    np.testing.assert_array_equal(kstrip.Model.load(path).infer(k), pred)
    np.testing.assert_array_equal(model.infer(samples[0].k_in)[0], pred)

import numpy as np
import pytest

import pagsr


def tiny(l=1):
    return pagsr.ModelConfig(upsample_exponent=l, base_channels=8, rdb_layers=2,
                             growth_rate=4, guidance_channels=8, seed=3)


def test_bicubic_keeps_constants():
    out = pagsr.bicubic_resample(np.full((6, 5), 0.25, np.float32), 12, 10)
    assert out.shape == (12, 10)
    np.testing.assert_allclose(out, 0.25, atol=1e-6)


def test_degrade_shape_and_determinism():
    depth, _ = pagsr.synthetic_scene(32, 32, seed=1)
    a = pagsr.degrade(depth, 4, sigma=5.0, seed=7)
    b = pagsr.degrade(depth, 4, sigma=5.0, seed=7)
    assert a.shape == (8, 8)
    np.testing.assert_array_equal(a, b)


def test_rmse_constant_offset():
    a = np.full((4, 4), 0.5, np.float32)
    assert pagsr.rmse(a, a) == 0.0
    assert pagsr.rmse(a, a + 5 / 255) == pytest.approx(5.0, abs=1e-4)


def test_patch_count():
    assert pagsr.patch_count(320, 320) == 4
    assert pagsr.patch_count(512, 384) == 15


def test_zero_weights_reduce_to_bicubic():
    w = pagsr.Weights.zeros(tiny(2))
    depth, rgb = pagsr.synthetic_scene(16, 16, seed=2)
    lr = pagsr.degrade(depth, 4)
    out = pagsr.super_resolve(w, lr, rgb)
    np.testing.assert_array_equal(out, np.clip(pagsr.bicubic_resample(lr, 16, 16), 0, 1))


def test_weights_round_trip(tmp_path):
    w = pagsr.Weights.init(tiny())
    assert len(w) == 2 * len([n for n in w.names() if n.endswith(".weight")])
    assert sum(w.get(n).size for n in w.names()) == pagsr.parameter_count(tiny())
    w.save(tmp_path / "w.pagw")
    back = pagsr.Weights.load(tmp_path / "w.pagw")
    assert back.to_bytes() == w.to_bytes()
    with pytest.raises(pagsr.PagsrError, match="truncat"):
        pagsr.Weights.from_bytes(w.to_bytes()[:100])


def test_errors_are_typed():
    w = pagsr.Weights.init(tiny(2))
    with pytest.raises(pagsr.PagsrError, match="expected ratio 4"):
        pagsr.super_resolve(w, np.zeros((8, 8), np.float32), np.zeros((3, 16, 16), np.float32))
    with pytest.raises(pagsr.PagsrError):
        pagsr.ModelConfig(base_channels=7)


def test_image_round_trip(tmp_path):
    depth, rgb = pagsr.synthetic_scene(12, 10, seed=4)
    pagsr.save_image(depth, tmp_path / "d.png", 16)
    pagsr.save_image(rgb, tmp_path / "c.png", 8)
    back, bits = pagsr.load_image(tmp_path / "d.png")
    assert bits == 16
    np.testing.assert_allclose(back, depth, atol=0.5 / 65535 + 1e-7)
    colour, bits = pagsr.load_image(tmp_path / "c.png")
    assert colour.shape == (3, 12, 10) and bits == 8


def test_train_reduces_loss_and_is_reproducible():
    pairs = [pagsr.synthetic_scene(16, 16, seed=s) for s in range(2)]
    w1, w2 = pagsr.Weights.init(tiny()), pagsr.Weights.init(tiny())
    h1 = pagsr.train(w1, pairs, batch_size=2, learning_rate=1e-3, epochs=15, seed=1)
    h2 = pagsr.train(w2, pairs, batch_size=2, learning_rate=1e-3, epochs=15, seed=1)
    assert len(h1) == 15
    assert h1 == h2
    assert np.mean(h1[-5:]) < np.mean(h1[:5])

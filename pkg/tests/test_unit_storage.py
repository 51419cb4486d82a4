import numpy as np
import pytest

from src.exceptions import ContainerDtypeError, ContainerError, ShapeMismatchError
from src.models import ContrastImageStack
from src.repository import storage
from src.schemas import HashGridConfig
from src.services.network import evaluate_image, init_model
from src.services.operators import forward_model
from src.services.phantom import make_coil_maps
from src.services.sampling import complementary_mask_set


@pytest.fixture(scope="module")
def masks():
    return complementary_mask_set((16, 16), 2, None, 2, base_seed=4, tolerance=0.1)


def test_images_with_inversion_times(tmp_path):
    images = np.random.default_rng(0).standard_normal((2, 3, 8, 8)) * (1 + 1j)
    path = tmp_path / "images.mcir"
    storage.save_images(path, images, [26.0, 275.05, 524.1], dtype="complex128")
    loaded, meta = storage.load_images(path)
    np.testing.assert_array_equal(loaded, images)
    assert meta.ti == [26.0, 275.05, 524.1]
    assert storage.sidecar_path(path).name == "images.mcir.json"


def test_masks_keep_calibration(tmp_path, masks):
    path = tmp_path / "masks.mcir"
    storage.save_masks(path, masks)
    loaded = storage.load_masks(path)
    np.testing.assert_array_equal(loaded.bits, masks.bits)
    assert loaded.seeds == [4, 5]
    assert [mask.r0 for mask in loaded.masks] == [mask.r0 for mask in masks.masks]
    assert loaded.masks[1].target_r == 2


def test_masks_without_sidecar(tmp_path, masks):
    path = tmp_path / "masks.mcir"
    storage.save_masks(path, masks)
    storage.sidecar_path(path).unlink()
    loaded = storage.load_masks(path)
    assert [mask.contrast for mask in loaded.masks] == [0, 1]


def test_masks_need_bits(tmp_path):
    storage.save_images(tmp_path / "images.mcir", np.zeros((1, 4, 4)))
    with pytest.raises(ContainerDtypeError):
        storage.load_masks(tmp_path / "images.mcir")


def test_kspace_pairs_with_masks(tmp_path, masks):
    coils = make_coil_maps((16, 16), 2)
    rng = np.random.default_rng(1)
    slices = [forward_model(ContrastImageStack(rng.standard_normal((2, 16, 16)) + 0j), coils, masks) for _ in range(3)]
    path = tmp_path / "kspace.mcir"
    storage.save_kspace(path, slices, dtype="complex128")
    loaded = storage.load_kspace(path, masks)
    assert len(loaded) == 3
    np.testing.assert_array_equal(loaded[2].data, slices[2].data)

    storage.save_coils(tmp_path / "coils.mcir", coils, dtype="complex128")
    np.testing.assert_array_equal(storage.load_coils(tmp_path / "coils.mcir").maps, coils.maps)


def test_model_checkpoint(tmp_path):
    config = HashGridConfig(levels=2, table_size=64, base_resolution=4, finest_resolution=8)
    model = init_model(config, 2, hidden_width=8, seed=3)
    model.mlp.w2[:] = np.random.default_rng(2).standard_normal(model.mlp.w2.shape)
    storage.save_model(tmp_path / "model", model, scale=2.5)
    loaded, meta = storage.load_model(tmp_path / "model")
    assert meta.scale == 2.5
    assert meta.encoding == config
    np.testing.assert_array_equal(evaluate_image(loaded, (8, 8)).data, evaluate_image(model, (8, 8)).data)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(ContainerError):
        storage.load_model(tmp_path)


def test_losses(tmp_path):
    storage.save_losses(tmp_path / "losses.mcir", [3.0, 2.0, 1.5])
    np.testing.assert_array_equal(storage.load_losses(tmp_path / "losses.mcir"), [3.0, 2.0, 1.5])


def test_readout_decoupling():
    rng = np.random.default_rng(3)
    volume = rng.standard_normal((4, 2, 3, 8, 8)) + 1j * rng.standard_normal((4, 2, 3, 8, 8))
    slices = storage.decouple_readout(storage.recompose_readout(volume))
    np.testing.assert_allclose(slices, volume, atol=1e-12)
    single = storage.decouple_readout(np.ones((4, 1, 1, 2, 2)))
    np.testing.assert_allclose(single[2], 2.0)
    np.testing.assert_allclose(single[[0, 1, 3]], 0.0, atol=1e-15)
    with pytest.raises(ShapeMismatchError):
        storage.decouple_readout(np.ones((4, 4)))

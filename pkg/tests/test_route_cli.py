import numpy as np
import pytest

from main import main
from src.repository import storage
from src.repository.containers import read_container, write_container
from src.services.network import evaluate_image


def test_phantom(config_file, run_dir, capsys):
    assert main(["phantom", "--config", str(config_file)]) == 0
    assert "shape=1x2x16x16" in capsys.readouterr().out
    images, meta = storage.load_images(run_dir / "ground_truth.mcir")
    assert images.shape == (1, 2, 16, 16)
    assert meta.ti == [26.0, 900.0]
    assert read_container(run_dir / "support.mcir", expected="bool").any()


def test_mask(config_file, run_dir, capsys):
    assert main(["mask", "--config", str(config_file)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("contrast=0 seed=0 R=")
    assert lines[1].startswith("contrast=1 seed=1 R=")
    assert all(" psf=" in line for line in lines)
    assert (run_dir / "masks.png").is_file()
    assert storage.load_masks(run_dir / "masks.mcir").n_contrasts == 2


def test_simulate(config_file, run_dir, capsys):
    assert main(["simulate", "--config", str(config_file)]) == 0
    out = capsys.readouterr().out
    assert "slices=1" in out
    assert "coil_laplacian=" in out
    for name in ("ground_truth", "support", "coils", "masks", "kspace"):
        assert (run_dir / f"{name}.mcir").is_file()


def test_recon_zf(run_dir, capsys):
    assert main(["recon-zf", "--out", str(run_dir)]) == 0
    assert "recon_zf.mcir" in capsys.readouterr().out
    volume, _ = storage.load_images(run_dir / "recon_zf.mcir")
    assert volume.shape == (1, 2, 16, 16)


def test_recon_inr(config_file, run_dir, capsys):
    assert main(["recon-inr", "--config", str(config_file)]) == 0
    assert capsys.readouterr().out.startswith("slice=0 epochs=5 final_loss=")
    volume, _ = storage.load_images(run_dir / "recon_inr.mcir")
    assert volume.shape == (1, 2, 16, 16)
    assert (run_dir / "model_slice0" / "model.json").is_file()
    assert storage.load_losses(run_dir / "losses_slice0.mcir").shape == (5,)


def test_checkpoint_matches_reconstruction(run_dir):
    model, meta = storage.load_model(run_dir / "model_slice0")
    volume, _ = storage.load_images(run_dir / "recon_inr.mcir")
    image = evaluate_image(model, (16, 16)).data * meta.scale
    np.testing.assert_allclose(volume[0], image, rtol=0, atol=1e-5 * np.abs(image).max())


def test_metrics(run_dir, capsys):
    code = main(["metrics", str(run_dir / "ground_truth.mcir"), str(run_dir / "recon_zf.mcir"),
                 "--support", str(run_dir / "support.mcir"), "--R", "2", "--method", "zero-filled"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("method=zero-filled R=2 ssim_mean=")
    assert lines[1].startswith("method=zero-filled R=2 psnr_mean=")
    assert len(lines) == 2 + 2


def test_export_png(run_dir, capsys):
    out = run_dir / "png"
    assert main(["export-png", str(run_dir / "ground_truth.mcir"), "--out", str(out), "--title", "truth"]) == 0
    assert (out / "ground_truth.png").is_file()
    assert "wrote=" in capsys.readouterr().out


def test_ingest(run_dir, tmp_path, capsys):
    masks = storage.load_masks(run_dir / "masks.mcir")
    slices = [data.data for data in storage.load_kspace(run_dir / "kspace.mcir", masks)]
    write_container(tmp_path / "volume.mcir", storage.recompose_readout(np.stack(slices)))
    assert main(["ingest", str(tmp_path / "volume.mcir"), "--masks", str(run_dir / "masks.mcir"),
                 "--out", str(tmp_path / "ingested")]) == 0
    assert "slices=1" in capsys.readouterr().out
    ingested = storage.load_kspace(tmp_path / "ingested" / "kspace.mcir", masks)
    np.testing.assert_allclose(ingested[0].data, slices[0], atol=1e-5 * np.abs(slices[0]).max())


def test_pipeline_is_deterministic(config_file, tmp_path, capsys):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["pipeline", "--config", str(config_file), "--out", str(out)]) == 0
        outputs.append(out)
    printed = capsys.readouterr().out
    assert "method=inr R=2" in printed
    assert "method=zero-filled R=2" in printed
    first, second = outputs
    assert (first / "metrics.txt").read_text() == (second / "metrics.txt").read_text()
    for name in ("masks.mcir", "ground_truth.mcir", "kspace.mcir", "recon_inr.mcir"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    for name in ("montage_ground_truth.png", "montage_inr.png", "montage_zero_filled.png", "masks.png"):
        assert (first / name).is_file()


def test_seed_changes_masks(config_file, tmp_path):
    assert main(["mask", "--config", str(config_file), "--out", str(tmp_path / "a")]) == 0
    assert main(["mask", "--config", str(config_file), "--out", str(tmp_path / "b"), "--seed", "9"]) == 0
    assert storage.load_masks(tmp_path / "b" / "masks.mcir").seeds == [9, 10]
    assert (tmp_path / "a" / "masks.mcir").read_bytes() != (tmp_path / "b" / "masks.mcir").read_bytes()


def test_sweep(config_file, tmp_path, capsys):
    assert main(["sweep", "--config", str(config_file), "--out", str(tmp_path), "--R", "2", "3"]) == 0
    table = (tmp_path / "sweep.txt").read_text()
    assert "R=2" in table and "R=3" in table
    assert "4.49" in table.splitlines()[-1]
    assert "zero-filled" in capsys.readouterr().out


def test_invalid_acceleration(config_file, tmp_path, capsys):
    assert main(["mask", "--config", str(config_file), "--out", str(tmp_path), "--R", "0.5"]) == 2
    assert capsys.readouterr().err.startswith("error code=validation detail=")


def test_calibration_failure(config_file, tmp_path, capsys):
    assert main(["mask", "--config", str(config_file), "--out", str(tmp_path), "--R", "500"]) == 3
    err = capsys.readouterr().err.strip()
    assert err.startswith("error code=calibration detail=")
    assert "achievable" in err
    assert len(err.splitlines()) == 1


def test_corrupt_container(run_dir, tmp_path, capsys):
    broken = tmp_path / "broken.mcir"
    broken.write_bytes(b"NOPE" * 10)
    assert main(["metrics", str(run_dir / "ground_truth.mcir"), str(broken)]) == 4
    assert capsys.readouterr().err.startswith("error code=container_magic")


def test_missing_config(tmp_path, capsys):
    assert main(["phantom", "--config", str(tmp_path / "absent.json")]) == 2
    assert "error code=validation" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["teleport"])
    assert exit_info.value.code == 2
    assert capsys.readouterr().err.startswith("error code=usage")

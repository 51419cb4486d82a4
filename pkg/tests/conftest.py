import json

import numpy as np
import pytest

from src.models import ContrastImageStack, KSpaceData, MaskSet, SamplingMask
from src.services.operators import distance_weights, forward_model
from src.services.phantom import make_coil_maps


TINY_CONFIG = {
    "grid": [16, 16],
    "slices": 1,
    "ti_schedule": [26.0, 900.0],
    "coils": {"coils": 2, "smoothness": 1.0},
    "masks": {"acceleration": 2, "alpha": 2.5, "tolerance": 0.1},
    "noise": {"relative_sigma": 0.005},
    "train": {
        "epochs": 5,
        "hidden_width": 8,
        "log_every": 1,
        "encoding": {"levels": 2, "features": 2, "table_size": 256, "base_resolution": 4, "finest_resolution": 32},
    },
    "seed": 0,
}


@pytest.fixture(scope="module")
def tiny_config():
    return json.loads(json.dumps(TINY_CONFIG))


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("run")


@pytest.fixture(scope="module")
def config_file(tmp_path_factory, tiny_config, run_dir):
    path = tmp_path_factory.mktemp("configs") / "tiny.json"
    path.write_text(json.dumps({**tiny_config, "out_dir": str(run_dir)}), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def problem():
    """Random 8x8 problem with two coils, two contrasts and random masks."""
    rng = np.random.default_rng(7)
    grid = (8, 8)
    coils = make_coil_maps(grid, 2, seed=3)
    bits = rng.random((2, *grid)) < 0.5
    masks = MaskSet([SamplingMask(bits[n], contrast=n) for n in range(2)])
    truth = ContrastImageStack(rng.standard_normal((2, *grid)) + 1j * rng.standard_normal((2, *grid)))
    target = forward_model(truth, coils, masks)
    noisy = KSpaceData((target.data + 0.1 * rng.standard_normal(target.data.shape)) * bits[None], masks)
    return {"grid": grid, "coils": coils, "masks": masks, "truth": truth, "target": noisy,
            "weights": distance_weights(grid)}

import numpy as np
import pytest

from csisense import dataset as ds
from csisense import synth


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory):
    """Small synthetic dataset on disk: 16 locations x 6 activities x 2 reps."""
    d = tmp_path_factory.mktemp("tiny")
    cfg = synth.SynthConfig(reps=2, discard=0)
    synth.build_dataset(str(d / "dataset.csit"), str(d / "manifest.csv"), seed=11, cfg=cfg)
    ds.write_default_coords(str(d / "coords.csv"))
    return d


@pytest.fixture(scope="session")
def tiny_loaded(tiny_dataset_dir):
    fps, manifest = ds.load_dataset(
        str(tiny_dataset_dir / "dataset.csit"), str(tiny_dataset_dir / "manifest.csv")
    )
    fps = ds.standardize(fps, manifest)
    return fps, manifest


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

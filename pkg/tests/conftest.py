import numpy as np
import pytest

from filmgrain.frame_io import Frame, VideoFormat
from filmgrain.patterns import build_database

DB_SEED = 1234


@pytest.fixture(scope="session")
def db():
    """One pattern database shared by every test that needs one."""
    return build_database(DB_SEED)


def noise_frame(fmt: VideoFormat, y_base: int, sigma: float, seed: int) -> Frame:
    """Flat frame with iid Gaussian noise added to every plane."""
    rng = np.random.default_rng(seed)
    mid = 1 << (fmt.bit_depth - 1)
    cw, ch = fmt.chroma_size

    def plane(shape, base):
        vals = base + rng.normal(0.0, sigma, size=shape)
        return np.clip(np.rint(vals), 0, fmt.max_value).astype(fmt.dtype)

    return Frame(
        fmt,
        plane((fmt.height, fmt.width), y_base),
        plane((ch, cw), mid),
        plane((ch, cw), mid),
    )


def random_frame(fmt: VideoFormat, seed: int) -> Frame:
    """Uniformly random samples over the full legal range."""
    rng = np.random.default_rng(seed)
    cw, ch = fmt.chroma_size
    hi = fmt.max_value + 1
    return Frame(
        fmt,
        rng.integers(0, hi, size=(fmt.height, fmt.width), dtype=np.uint16).astype(fmt.dtype),
        rng.integers(0, hi, size=(ch, cw), dtype=np.uint16).astype(fmt.dtype),
        rng.integers(0, hi, size=(ch, cw), dtype=np.uint16).astype(fmt.dtype),
    )

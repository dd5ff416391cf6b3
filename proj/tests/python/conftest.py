import os
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

REPO = Path(__file__).resolve().parents[2]


def _find_cli():
    env = os.environ.get("TECO_CLI")
    if env:
        return Path(env)
    for candidate in (REPO / "build" / "tools" / "teco", shutil.which("teco")):
        if candidate and Path(candidate).is_file():
            return Path(candidate)
    return None


@pytest.fixture(scope="session")
def cli():
    path = _find_cli()
    if path is None:
        pytest.skip("teco executable not found (set TECO_CLI)")

    def run(*args):
        proc = subprocess.run([str(path), "--threads", "1", *map(str, args)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        return proc.stdout

    return run


def write_sequence(directory, frames):
    """Writes 8-bit PNGs and returns the frames exactly as the library reads them."""
    directory.mkdir(parents=True, exist_ok=True)
    loaded = []
    for i, f in enumerate(frames):
        q = np.clip(np.rint(f * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(q.squeeze()).save(directory / f"{i:04d}.png")
        loaded.append(q.astype(np.float32) / np.float32(255.0))
    return np.stack(loaded)


def read_flo(path):
    raw = Path(path).read_bytes()
    assert raw[:4] == b"PIEH"
    w, h = np.frombuffer(raw[4:12], dtype="<i4")
    return np.frombuffer(raw[12:], dtype="<f4").reshape(h, w, 2)


def moving_sequence(rng, n=5, h=24, w=32, c=3):
    """Smooth random texture drifting by a random sub-pixel velocity, plus noise."""
    base = rng.random((h + 8, w + 8, c))
    for axis in (0, 1):
        base = (base + np.roll(base, 1, axis) + np.roll(base, -1, axis)) / 3.0
    vy, vx = rng.uniform(-1.5, 1.5, size=2)
    frames = []
    for t in range(n):
        y0 = int(round(4 + vy * t)) % 8
        x0 = int(round(4 + vx * t)) % 8
        f = base[y0:y0 + h, x0:x0 + w] + rng.normal(0, 0.02, (h, w, c))
        frames.append(np.clip(f, 0, 1).astype(np.float32))
    return np.stack(frames)

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mpseg.synth import SynthConfig, generate  # noqa: E402


@pytest.fixture(scope="session")
def small_synth():
    """A small mixed RCA/LCA dataset with pixel buffers (96x96 canvas)."""
    cfg = SynthConfig(n_images=10, canvas=96, branch_width_range=(4, 8), seed=11)
    return generate(cfg)


@pytest.fixture()
def write_json(tmp_path):
    def _write(doc, name="annotations.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return path

    return _write

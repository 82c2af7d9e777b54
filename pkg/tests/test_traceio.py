import numpy as np
import pytest

from banditogd.engine import RunConfig, run
from banditogd.errors import ConfigError
from banditogd.geometry import ConvexBody
from banditogd.losses import AdversarySpec
from banditogd.traceio import read_trace, write_trace


@pytest.mark.parametrize("kind", ["fixed", "shifting", "adaptive"])
def test_roundtrip_exact(tmp_path, kind):
    adv = AdversarySpec(kind=kind, center=[0.5, -0.2, 0.1], slope=[0.1, 0, 0]) if kind == "fixed" else AdversarySpec(kind=kind)
    tr = run(RunConfig(3, 150, ConvexBody.box([1.0, 0.7, 1.3]), adv, seed=8))
    csv_path, json_path = write_trace(tr, tmp_path / "t.csv")
    back = read_trace(csv_path)
    assert back.config == tr.config
    for f in ("x", "u", "value_plus", "value_minus", "g", "g_norm_sq", "eta", "centers", "curvature", "slope"):
        assert np.array_equal(getattr(back, f), getattr(tr, f)), f


def test_version_guard(tmp_path):
    tr = run(RunConfig(2, 10, ConvexBody.ball(2, 1.0)))
    csv_path, json_path = write_trace(tr, tmp_path / "t.csv")
    json_path.write_text(json_path.read_text().replace('"format_version": 1', '"format_version": 99'))
    with pytest.raises(ConfigError, match="99"):
        read_trace(csv_path)

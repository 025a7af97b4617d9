import re
from dataclasses import replace

import numpy as np
import pytest

from tensorcp.detector import DetectorConfig, detect
from tensorcp.mosum import piecewise_mean
from tensorcp.plot import plot_detection
from tensorcp.tensor import TensorSeq


def _gids(path):
    return re.findall(r'id="([a-z]+(?:-[a-z]+)*(?:-\d+)?)"', path.read_text())


def _count(ids, prefix):
    return sum(1 for i in ids if re.fullmatch(prefix + r"-\d+", i))


def test_single_change_has_one_dip_and_spike(tmp_path):
    seq = TensorSeq(piecewise_mean([np.zeros(5), np.full(5, 20.0)], [600], 1800))
    det = detect(seq, DetectorConfig.preset("calibrated"))
    out = plot_detection(det, tmp_path / "one.svg", title="one change")
    ids = _gids(out)
    assert "t-curve" in ids and "tau-line" in ids
    assert _count(ids, "dip") == 1 and _count(ids, "spike") == 1
    assert _count(ids, "interval-kept") == 1 and _count(ids, "interval-pruned") == 0
    r = det.minimizers[0]
    assert det.series.at(r) < det.tau
    assert det.series.t[r : r + det.alpha].max() > 10


def test_pruned_intervals_are_drawn(tmp_path):
    alpha = 61
    z = [300 + j * (2 * alpha + 9) for j in range(4)]
    seq = TensorSeq(piecewise_mean([np.full(10, 1.0 + 1.5 * (j % 2)) for j in range(5)], z, 1800))
    det = detect(seq, DetectorConfig.preset("recommended"))
    ids = _gids(plot_detection(det, tmp_path / "c2.svg"))
    assert _count(ids, "interval-kept") == det.k_hat == 4
    assert _count(ids, "interval-pruned") == sum(iv.pruned for iv in det.intervals) > 0
    assert _count(ids, "dip") == 4


def test_requires_series(tmp_path):
    seq = TensorSeq(np.zeros((300, 2)))
    det = replace(detect(seq), series=None)
    with pytest.raises(ValueError):
        plot_detection(det, tmp_path / "x.svg")

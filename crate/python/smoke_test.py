#!/usr/bin/env python3
"""Smoke test for the sigbench_py extension module.

Builds the cdylib with cargo, copies it next to this script under the
importable name, and exercises the main types and operations end to end.

    python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "sigbench-py"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "libsigbench_py.so"
    if not built.exists():  # macOS spelling
        built = ROOT / "target" / "release" / "libsigbench_py.dylib"
    target = Path(__file__).resolve().parent / "sigbench_py.so"
    shutil.copy2(built, target)
    return target


def main() -> None:
    module_path = build_extension()
    sys.path.insert(0, str(module_path.parent))
    import sigbench_py as sb

    # alignment: identity and a hand-checked pair
    cost, norm, path = sb.dtw([[0.0], [1.0], [2.0]], [[0.0], [1.0], [2.0]])
    assert cost == 0.0 and norm == 0.0 and path == [(0, 0), (1, 1), (2, 2)]
    cost, norm, _ = sb.dtw([[0.0], [0.0]], [[1.0], [1.0]])
    assert cost == 2.0 and norm == 1.0
    print("dtw: ok")

    # soft-dtw tracks classical dtw with squared cost as gamma -> 0
    a = [[0.0, 0.0], [1.0, 0.5], [2.0, 1.0]]
    b = [[0.1, 0.0], [1.1, 0.4], [2.1, 1.1]]
    value, grad = sb.soft_dtw(a, b, 1e-3)
    assert len(grad) == len(a) and len(grad[0]) == 2
    loss = sb.triplet_loss(a, a, b, 1.0, 0.5)
    assert loss >= 0.0
    print("soft_dtw: ok (value %.6f)" % value)

    # path signature: level-1 terms are the total increments
    terms = sb.path_signature([(0.0, 0.0), (1.0, 2.0), (3.0, 1.0)], 2)
    assert abs(terms[0] - 3.0) < 1e-12 and abs(terms[1] - 1.0) < 1e-12
    square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]
    sq = sb.path_signature(square, 2)
    levy = (sq[3] - sq[4]) / 2.0  # terms: [x, y, xx, xy, yx, yy]
    assert abs(abs(levy) - 1.0) < 1e-10
    print("path_signature: ok")

    # EER on separated and inverted fixtures
    eer, _ = sb.compute_eer([0.8, 0.9], [0.1, 0.2])
    assert eer == 0.0
    eer, _ = sb.compute_eer([0.4], [0.6])
    assert eer == 100.0
    print("compute_eer: ok")

    assert abs(sb.tanh_normalize(5.0, 5.0, 2.0) - 0.5) < 1e-12
    fused = sb.fuse_scores([0.3, 0.9], [0.5, 0.5], [0.1, 0.1], [1.0, 0.0])
    assert 0.0 < fused < 1.0
    print("tanh_normalize / fuse_scores: ok")

    ranking = sb.rank_teams(
        {
            "alpha": {1: 2.0, 2: 3.0, 3: 4.0},
            "beta": {1: 5.0, 2: 1.0, 3: 6.0},
            "gamma": {1: 9.0},
        }
    )
    assert ranking[0] == ("alpha", 8)  # two golds + one silver
    print("rank_teams: ok")

    # signature round trip + features through a temp dataset
    with tempfile.TemporaryDirectory() as tmp:
        manifest = sb.generate_dataset(7, 2, tmp)
        assert manifest["n_subjects"] == 2
        first = Path(tmp) / manifest["signature_files"][0]
        sig = sb.Signature.load(str(first))
        assert len(sig) >= 250
        assert sig.input in ("stylus", "finger")
        tf = sig.time_functions()
        assert set(tf) == {
            "x", "y", "dx", "dy", "ddx", "ddy", "v", "dv", "a", "theta", "p", "dp",
        }
        feats = sig.global_features("extended")
        assert len(feats) == 12 and not any(math.isnan(v) for v in feats.values())

        copy_path = Path(tmp) / "copy.sig"
        sig.save(str(copy_path))
        again = sb.Signature.load(str(copy_path))
        assert again.xs == sig.xs and again.timestamps_ms == sig.timestamps_ms

        norm = sig.normalized("symmetric")
        assert max(norm.xs) <= 1.0 + 1e-12 and min(norm.xs) >= -1.0 - 1e-12

        self_score = sb.baseline_score(norm, norm)
        assert self_score == 1.0
    print("Signature / generate_dataset / baseline_score: ok")

    custom = sb.Signature.from_channels(
        [0.0, 1.0, 2.0],
        [0.0, 1.0, 0.0],
        [0, 10, 20],
        [3.0, 4.0, 5.0],
        subject="demo",
    )
    assert custom.duration_ms == 20
    print("from_channels: ok")

    print("smoke test passed")


if __name__ == "__main__":
    main()

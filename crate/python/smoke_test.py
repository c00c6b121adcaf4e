"""Smoke test for the compiled extension.

Build and install next to this file:
    cargo build -p roomsynth-py --features extension-module --release
    cp target/release/libroomsynth_py.so python/roomsynth_py.so
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import roomsynth_py as rs  # noqa: E402


def test_presets_and_energy():
    assert "furnished_bedroom" in rs.preset_names()
    layout, constraints = rs.preset("bedroom")
    energy = rs.total_energy(layout, constraints)
    assert energy["total"] > 0.0
    try:
        rs.preset("castle")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")


def test_anneal_removes_overlap():
    layout, constraints = rs.preset("bedroom")
    result = rs.anneal(layout, 3, constraints, max_iterations=8000)
    assert result["best_energy"]["bbox"] == 0.0
    again = rs.anneal(layout, 3, constraints, max_iterations=8000)
    assert again["best_layout"] == result["best_layout"]


def test_render_corrupt_evaluate():
    layout, _ = rs.preset("furnished_bedroom")
    frame = rs.render(layout, [2.25, 2.5, 1.4], -1.5708, -0.3)
    w, h = frame["width"], frame["height"]
    assert len(frame["depth"]) == w * h == len(frame["labels"])
    assert all(d == 0.0 or 0.4 <= d <= 8.0 for d in frame["depth"])
    noisy, filled = rs.corrupt(frame["depth"], w, h, 5)
    assert len(noisy) == len(filled) == w * h
    assert all(d > 0.0 for d in filled)
    report = rs.evaluate(frame["labels"], frame["labels"], w, h)
    assert report["global"] == 1.0 and report["mean_class"] == 1.0
    try:
        rs.corrupt([0.0] * (w * h), w, h, 1)
    except rs.RoomsynthError as e:
        assert "all_invalid" in str(e)
    else:
        raise AssertionError("all-invalid frame accepted")


def test_generate():
    with tempfile.TemporaryDirectory() as tmp:
        config = os.path.join(tmp, "config.json")
        with open(config, "w") as f:
            json.dump({"seed": 2, "frames": 2}, f)
        manifest = rs.generate(config, output=os.path.join(tmp, "out"))
        assert manifest["frames"] == 2
        assert os.path.isfile(os.path.join(tmp, "out", "labels", "000001.png"))


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")

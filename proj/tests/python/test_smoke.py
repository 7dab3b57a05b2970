"""Smoke tests for the Python bindings.

The native module is located either through an installed `tinygaze` package or
via the TINYGAZE_MODULE_DIR environment variable pointing at the CMake build
output (how ctest runs this file).
"""

import importlib
import os
import sys

import pytest


def _load_module():
    module_dir = os.environ.get("TINYGAZE_MODULE_DIR")
    if module_dir and module_dir not in sys.path:
        sys.path.insert(0, module_dir)
    try:
        return importlib.import_module("_tinygaze")
    except ImportError:
        return importlib.import_module("tinygaze")


tg = _load_module()


def test_default_session_has_240_trials():
    log_text, manifest_text = tg.generate_session(subjects=4, reps=3, seed=7)
    trials = tg.segment_log(log_text)
    assert len(trials) == 240
    assert len(manifest_text.strip().splitlines()) == 240
    participants = {t[0] for t in trials}
    assert participants == {"P0", "P1", "P2", "P3"}
    gestures = {t[1] for t in trials}
    assert gestures == {"V", "H", "L0", "L270", "Z0"}


def test_session_is_deterministic():
    a = tg.generate_session(subjects=2, reps=1, seed=11)
    b = tg.generate_session(subjects=2, reps=1, seed=11)
    assert a == b


def test_param_count_bands():
    tiny = tg.count_params("tinyhar", 32, 48, 5)
    dcl = tg.count_params("deepconvlstm", 32, 48, 5)
    sahar = tg.count_params("sahar", 32, 48, 5)
    assert 30_000 <= tiny <= 60_000
    assert dcl / tiny >= 15
    assert sahar / tiny >= 6
    with pytest.raises(ValueError):
        tg.count_params("lenet")


def test_window_starts():
    assert list(tg.window_starts(64, 32, 0.5)) == [0, 16, 32]
    assert len(tg.window_starts(64, 32, 0.9)) == 12


def test_metrics():
    perfect = [[3, 0], [0, 2]]
    assert tg.accuracy(perfect) == 1.0
    assert tg.macro_f1(perfect) == 1.0
    assert tg.weighted_f1(perfect) == 1.0
    skewed = [[5, 1], [2, 2]]
    assert tg.accuracy(skewed) == pytest.approx(0.7)
    assert tg.macro_f1(skewed) == pytest.approx((2 * 25 / 65 + 2 * 2 / 7) / 2)


def test_latency_probe_runs():
    p50 = tg.measure_latency_us("tinyhar", iterations=15)
    assert p50 > 0

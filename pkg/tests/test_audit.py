import math

import numpy as np
import pytest

from fishtank import infotheory
from fishtank.harness import audit
from fishtank.harness.audit import run_fishmonger_audit


def test_validation():
    with pytest.raises(ValueError):
        run_fishmonger_audit(32, 1000, 1)
    with pytest.raises(ValueError):
        run_fishmonger_audit(64, 1000, 1, mode="bogus")
    with pytest.raises(ValueError):
        run_fishmonger_audit(64, 0, 1)


def test_checkpoints():
    assert audit.checkpoints_for(1000) == [1, 2, 4, 8, 16, 32, 64, 128, 256, 512]
    assert audit.checkpoints_for(1024)[-1] == 1024


def test_event_and_stream_modes_agree_in_law():
    ev = run_fishmonger_audit(64, 20_000, 30, seed=2, mode="events")
    st = run_fishmonger_audit(64, 20_000, 30, seed=2, mode="stream")
    for rep in (ev, st):
        assert rep.revert_count == 0
        assert rep.within_budget
        assert set(k for k, _, _ in rep.checkpoint_table()) == set(audit.checkpoints_for(20_000))
    assert ev.payload_per_row == pytest.approx(st.payload_per_row, rel=0.05)
    assert ev.mean_ratio == pytest.approx(st.mean_ratio, abs=0.06)


def test_stream_trial_matches_final_state_size():
    rep = run_fishmonger_audit(64, 3000, 2, seed=4, mode="stream")
    for tr in rep.traces:
        assert tr.checkpoints[2048] <= tr.max_size_bits <= rep.budget_bits + rep.header_bits


def test_final_mode_accuracy_small():
    rep = run_fishmonger_audit(256, 10**5, 200, seed=1, mode="final")
    assert rep.std_error == pytest.approx(0.77969 / math.sqrt(256), rel=0.15)
    assert abs(rep.mean_ratio - 1) < 0.02
    assert infotheory.h0() - 0.25 <= rep.payload_per_row <= infotheory.h0() + 0.35


def test_report_rows_deterministic():
    a = run_fishmonger_audit(64, 5000, 3, seed=8).rows()
    b = run_fishmonger_audit(64, 5000, 3, seed=8).rows()
    assert a == b
    stats = {s for _, s, _ in a}
    assert {"max_size_bits", "revert_count", "std_error", "bits_per_inverse_variance"} <= stats

import numpy as np
import pytest

from graspsim.contact import (
    ContactConfig,
    ContactVector,
    ThresholdScore,
    calibrate_threshold,
    composite_scores,
    contact_vector,
    default_contact_config,
    detect_contact,
    sensor_activation,
)
from graspsim.errors import ConfigurationError
from graspsim.fingertips import FingertipKind
from graspsim.filtering import NormalizedFrame


def _frame(values, kind=FingertipKind.BIOTAC_SP, ts=0):
    return NormalizedFrame(kind=kind, timestamp_us=ts, values=np.asarray(values, dtype=float))


def test_sensor_activation_boundary_inclusive():
    assert sensor_activation(60.0, 60.0) == 1
    assert sensor_activation(0.0, 60.0) == 0
    assert sensor_activation(0.0, 0.0) == 1
    assert sensor_activation(123.0, 0.0) == 1


def test_detect_contact_requires_min_count():
    cfg = ContactConfig(FingertipKind.BIOTAC_SP, activation_threshold=60.0, min_active_count=5)
    values = np.zeros(28)
    values[:5] = 60.0
    assert detect_contact(_frame(values), cfg) is True
    values[4] = 59.9
    assert detect_contact(_frame(values), cfg) is False


def test_detect_contact_wts_three_cells():
    cfg = ContactConfig(FingertipKind.WTS_FT, activation_threshold=1229.0, min_active_count=3)
    values = np.zeros(32)
    values[[3, 10, 20]] = 1500.0
    assert detect_contact(_frame(values, kind=FingertipKind.WTS_FT), cfg) is True


def test_detect_contact_kind_mismatch():
    cfg = default_contact_config("biotac")
    with pytest.raises(ConfigurationError):
        detect_contact(_frame(np.zeros(32), kind=FingertipKind.WTS_FT), cfg)


def test_contact_vector_per_finger():
    cfg = ContactConfig(FingertipKind.BIOTAC_SP, activation_threshold=50.0, min_active_count=5)
    quiet = np.zeros(28)
    loud = np.full(28, 80.0)
    cv = contact_vector([_frame(loud), _frame(quiet), _frame(quiet)], cfg)
    assert cv.flags == (True, False, False)
    assert cv.thumb and not cv.index and not cv.ring
    cv = contact_vector([_frame(loud)] * 3, cfg)
    assert cv.all_in_contact()
    cv = contact_vector([_frame(quiet)] * 3, cfg)
    assert cv.flags == (False, False, False)


def test_contact_vector_arity():
    cfg = default_contact_config("biotac")
    with pytest.raises(ConfigurationError):
        contact_vector([_frame(np.zeros(28))] * 2, cfg)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ContactConfig(FingertipKind.BIOTAC_SP, activation_threshold=-1.0, min_active_count=5)
    with pytest.raises(ConfigurationError):
        ContactConfig(FingertipKind.BIOTAC_SP, activation_threshold=10.0, min_active_count=0)
    with pytest.raises(ConfigurationError):
        ContactConfig(FingertipKind.WTS_FT, activation_threshold=10.0, min_active_count=33)


def test_oracle_equivalence_random_frames():
    # naive per-value counting oracle, implemented independently
    rng = np.random.default_rng(123)
    cfg = ContactConfig(FingertipKind.BIOTAC_SP, activation_threshold=60.0, min_active_count=5)
    for _ in range(2000):
        values = rng.uniform(0, 200, size=28)
        frame = _frame(values)
        count = 0
        for v in values:
            if v >= cfg.activation_threshold:
                count += 1
        assert detect_contact(frame, cfg) == (count >= cfg.min_active_count)


def test_monotone_in_threshold_and_count():
    rng = np.random.default_rng(5)
    values = rng.uniform(0, 200, size=28)
    frame = _frame(values)
    previous = True
    for zeta in np.linspace(0, 210, 40):
        cfg = ContactConfig(FingertipKind.BIOTAC_SP, float(zeta), 5)
        current = detect_contact(frame, cfg)
        assert previous or not current   # once false, stays false as zeta rises
        previous = current
    previous = True
    for psi in range(1, 29):
        cfg = ContactConfig(FingertipKind.BIOTAC_SP, 60.0, psi)
        current = detect_contact(frame, cfg)
        assert previous or not current
        previous = current


class _TableRig:
    """Scripted rig: criteria looked up from a fixed table."""

    def __init__(self, table):
        self.table = table

    def score_threshold(self, threshold):
        return self.table[threshold]


def test_calibrate_threshold_matches_exhaustive_rescoring():
    table = {
        0.0: ThresholdScore(deformation_mm=0.0, efficiency=0.0, slip_mm=50.0),
        30.0: ThresholdScore(deformation_mm=4.0, efficiency=1.0, slip_mm=9.0),
        60.0: ThresholdScore(deformation_mm=6.0, efficiency=1.0, slip_mm=2.0),
        120.0: ThresholdScore(deformation_mm=9.0, efficiency=1.0, slip_mm=0.5),
        240.0: ThresholdScore(deformation_mm=14.0, efficiency=0.4, slip_mm=0.1),
    }
    rig = _TableRig(table)
    candidates = sorted(table)
    chosen = calibrate_threshold(rig, candidates)

    # independent exhaustive re-scoring with the documented tie rule
    composites = composite_scores([table[c] for c in candidates])
    best_score = max(composites)
    expect = max(c for c, s in zip(candidates, composites) if s == best_score)
    assert chosen == expect
    assert chosen != 0.0   # degenerate threshold rejected


def test_calibrate_threshold_tie_breaks_upward():
    same = ThresholdScore(deformation_mm=1.0, efficiency=1.0, slip_mm=1.0)
    rig = _TableRig({10.0: same, 20.0: same})
    assert calibrate_threshold(rig, [10.0, 20.0]) == 20.0


def test_calibrate_threshold_rejects_bad_grid():
    rig = _TableRig({})
    with pytest.raises(ConfigurationError):
        calibrate_threshold(rig, [])
    with pytest.raises(ConfigurationError):
        calibrate_threshold(rig, [20.0, 10.0])


def test_contact_vector_is_immutable():
    cv = ContactVector((True, False, True))
    with pytest.raises(AttributeError):
        cv.flags = (False, False, False)

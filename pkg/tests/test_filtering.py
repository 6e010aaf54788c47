import numpy as np
import pytest

from graspsim.errors import ConfigurationError, StateError
from graspsim.fingertips import ContactField, FingertipKind, biotac_layout, synthesize_frame, wts_layout
from graspsim.filtering import (
    FilterState,
    NormalizedFrame,
    lowpass_step,
    normalize_delta,
    pipeline_for,
)


def _biotac_frame(depth, ts=0, layout=None):
    layout = layout or biotac_layout(noise_sigma=0.0)
    return synthesize_frame(layout, ContactField.uniform(depth, 24), ts)


def _wts_frame(depth, ts=0):
    return synthesize_frame(wts_layout(), ContactField.uniform(depth, 32), ts)


def test_retention_validation():
    with pytest.raises(ConfigurationError):
        FilterState(retention=1.5)
    with pytest.raises(ConfigurationError):
        FilterState(retention=-0.1)


def test_first_frame_seeds_state():
    state = FilterState(retention=0.8)
    frame = _biotac_frame(7.0)
    lowpass_step(state, frame)
    assert state.initialized
    np.testing.assert_array_equal(state.values, frame.channel_values())


def test_retention_zero_passes_input_exactly():
    state = FilterState(retention=0.0)
    lowpass_step(state, _biotac_frame(6.0))
    frame = _biotac_frame(9.0, ts=1)
    lowpass_step(state, frame)
    np.testing.assert_array_equal(state.values, frame.channel_values())


def test_retention_one_holds_state_exactly():
    state = FilterState(retention=1.0)
    first = _biotac_frame(6.0)
    lowpass_step(state, first)
    lowpass_step(state, _biotac_frame(12.0, ts=1))
    np.testing.assert_array_equal(state.values, first.channel_values())


def test_halfway_retention_direct_value():
    # previous 100, incoming 50, P=0.5 -> 75
    state = FilterState(retention=0.5, values=np.full(32, 100.0), initialized=True)
    frame = _wts_frame(0.0)
    frame = type(frame)(frame.kind, frame.timestamp_us, (50,) * 32)
    lowpass_step(state, frame)
    np.testing.assert_array_equal(state.values, np.full(32, 75.0))


def test_normalize_requires_initialized_state():
    with pytest.raises(StateError):
        normalize_delta(FilterState(retention=0.5), _biotac_frame(5.0))


def test_normalize_zero_when_equal():
    state = FilterState(retention=0.8)
    frame = _biotac_frame(7.0)
    lowpass_step(state, frame)
    out = normalize_delta(state, frame)
    np.testing.assert_array_equal(out.values, np.zeros(28))


def test_normalize_direct_and_clamped_values():
    state = FilterState(retention=0.5, values=np.full(32, 120.0), initialized=True)
    frame = type(_wts_frame(0.0))(FingertipKind.WTS_FT, 3, (50,) * 32)
    out = normalize_delta(state, frame, delta_cap=200.0)
    np.testing.assert_array_equal(out.values, np.full(32, 70.0))
    state.values = np.full(32, 300.0)
    out = normalize_delta(state, frame, delta_cap=200.0)
    np.testing.assert_array_equal(out.values, np.full(32, 200.0))


def test_output_always_within_cap():
    rng = np.random.default_rng(7)
    state = FilterState(retention=0.9)
    layout = biotac_layout()
    for ts in range(50):
        depth = float(rng.uniform(0, 12))
        frame = synthesize_frame(layout, ContactField.uniform(depth, 24), ts, noise_seed=ts)
        lowpass_step(state, frame)
        out = normalize_delta(state, frame)
        assert np.all(out.values >= 0.0)
        assert np.all(out.values <= 200.0)


def test_dc_convergence_geometric_bound():
    # under constant input the error shrinks by exactly P per step
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = float(rng.uniform(0.05, 0.95))
        a0 = rng.uniform(0, 4095, size=28)
        r = rng.uniform(0, 4095, size=28)
        k = int(rng.integers(1, 40))
        state = FilterState(retention=p, values=a0.copy(), initialized=True)
        frame_values = tuple(int(v) for v in np.rint(r))
        frame = synthesize_frame(biotac_layout(noise_sigma=0.0),
                                 ContactField.uniform(0.0, 24), 0)
        r_exact = None
        for step in range(k):
            frame = type(frame)(FingertipKind.BIOTAC_SP, step, frame_values[:24],
                                pac=frame_values[24], pdc=frame_values[25],
                                tac=frame_values[26], tdc=frame_values[27])
            lowpass_step(state, frame)
            r_exact = frame.channel_values()
        bound = p ** k * np.abs(a0 - r_exact)
        err = np.abs(state.values - r_exact)
        assert np.all(err <= bound * (1 + 1e-9) + 1e-9)


def test_pipeline_chain_descriptors():
    assert pipeline_for("biotac").stages == ("lowpass", "normalize")
    assert pipeline_for("wts").stages == ("identity",)


def test_wts_identity_pipeline_passes_raw_values():
    pipe = pipeline_for("wts")
    frame = _wts_frame(40.0, ts=2)
    out = pipe.process(frame)
    np.testing.assert_array_equal(out.values, frame.channel_values())
    assert out.timestamp_us == 2


def test_pipeline_mode_override():
    pipe = pipeline_for("biotac", mode="passthrough")
    frame = _biotac_frame(8.0)
    np.testing.assert_array_equal(pipe.process(frame).values, frame.channel_values())


def test_replay_equivalence_same_stream_twice():
    layout = biotac_layout()
    frames = [synthesize_frame(layout, ContactField.uniform(d, 24), i, noise_seed=i)
              for i, d in enumerate((0.0, 2.0, 6.0, 9.0, 9.0, 3.0))]

    def run():
        pipe = pipeline_for("biotac")
        return [pipe.process(f).values for f in frames]

    first, second = run(), run()
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)


def test_filter_is_causal():
    # outputs over a prefix equal the prefix of outputs over the full stream
    layout = biotac_layout()
    frames = [synthesize_frame(layout, ContactField.uniform(d, 24), i, noise_seed=i)
              for i, d in enumerate((0.0, 3.0, 7.0, 9.5, 4.0, 0.0, 6.0))]

    def outputs(stream):
        pipe = pipeline_for("biotac")
        return [pipe.process(f).values for f in stream]

    full = outputs(frames)
    prefix = outputs(frames[:4])
    for a, b in zip(prefix, full[:4]):
        np.testing.assert_array_equal(a, b)


def test_shape_mismatch_is_configuration_error():
    state = FilterState(retention=0.5)
    lowpass_step(state, _biotac_frame(5.0))
    with pytest.raises(ConfigurationError):
        lowpass_step(state, _wts_frame(5.0))


def test_normalized_frame_rejects_negative_values():
    with pytest.raises(ConfigurationError):
        NormalizedFrame(FingertipKind.WTS_FT, 0, np.array([-1.0] * 32))

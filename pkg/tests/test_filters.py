import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal as sp_signal

from oracles import (
    butterworth_bandpass_magnitude, butterworth_bandstop_magnitude,
    butterworth_lowpass_magnitude,
)
from vibci.errors import DesignError, LengthError, RangeError
from vibci.filters import (
    STABILITY_MARGIN, FilterSpec, apply_zero_phase, default_chain, design_butterworth,
    extract_window, filtfilt_array, format_sections, parse_sections, preprocess,
)
from vibci.signal_model import Recording, TrialDescriptor, get_protocol, vi
from vibci.spectral import welch_psd

RATE = 256.0
GRID = np.linspace(0.01, 127.99, 4001)


def db(x):
    return 20 * np.log10(np.abs(x))


def _recording(x):
    return Recording(np.tile(np.asarray(x, float), (15, 1)), RATE)


@pytest.mark.parametrize("order,cutoff", [(2, 10.0), (4, 60.0), (7, 33.3), (12, 100.0)])
def test_lowpass_matches_analytic_magnitude(order, cutoff):
    f = design_butterworth(FilterSpec("lowpass", order, (cutoff,), RATE))
    np.testing.assert_allclose(np.abs(f.response(GRID)),
                               butterworth_lowpass_magnitude(GRID, cutoff, order, RATE),
                               atol=1e-9)


@pytest.mark.parametrize("order,band", [(8, (2.0, 36.0)), (2, (8.0, 12.0)), (5, (1.0, 90.0))])
def test_bandpass_matches_analytic_magnitude(order, band):
    f = design_butterworth(FilterSpec("bandpass", order, band, RATE))
    np.testing.assert_allclose(np.abs(f.response(GRID)),
                               butterworth_bandpass_magnitude(GRID, *band, order, RATE),
                               atol=1e-9)


@pytest.mark.parametrize("order,band", [(4, (48.0, 52.0)), (3, (20.0, 30.0))])
def test_bandstop_matches_analytic_magnitude(order, band):
    f = design_butterworth(FilterSpec("bandstop", order, band, RATE))
    np.testing.assert_allclose(np.abs(f.response(GRID)),
                               butterworth_bandstop_magnitude(GRID, *band, order, RATE),
                               atol=1e-9)


def test_highpass_edge_nyquist_and_dc():
    f = design_butterworth(FilterSpec("highpass", 4, (20.0,), RATE))
    assert abs(db(f.response([20.0]))[0] + 3.0103) < 1e-6
    assert abs(np.abs(f.response([RATE / 2]))[0] - 1.0) < 1e-9
    assert np.abs(f.response([0.0]))[0] < 1e-12


@pytest.mark.parametrize("spec", [
    FilterSpec("lowpass", 4, (60.0,)), FilterSpec("bandpass", 8, (2.0, 36.0)),
    FilterSpec("bandstop", 4, (48.0, 52.0)), FilterSpec("highpass", 3, (1.0,)),
])
def test_matches_scipy_butter(spec):
    edges = spec.edges[0] if len(spec.edges) == 1 else spec.edges
    ref = sp_signal.butter(spec.order, edges, btype=spec.kind, fs=spec.rate, output="sos")
    _, h_ref = sp_signal.sosfreqz(ref, worN=GRID, fs=spec.rate)
    np.testing.assert_allclose(design_butterworth(spec).response(GRID), h_ref, atol=1e-9)


def test_bandpass_edges_are_minus_3_db():
    f = design_butterworth(FilterSpec("bandpass", 8, (2.0, 36.0), RATE))
    edges = db(f.response([2.0, 36.0]))
    assert np.all(np.abs(edges + 3.0) <= 0.1)
    assert len(f.sections) == 8


def test_lowpass_dc_gain_is_one():
    f = design_butterworth(FilterSpec("lowpass", 4, (60.0,), RATE))
    assert abs(np.abs(f.response([0.0]))[0] - 1.0) < 1e-12


def test_notch_depth():
    f = design_butterworth(FilterSpec("notch", 4, (48.0, 52.0), RATE))
    assert f.spec.kind == "bandstop"
    assert db(f.response([50.0]))[0] <= -20.0


@pytest.mark.parametrize("spec", default_chain(RATE))
def test_builtin_chain_is_stable(spec):
    f = design_butterworth(spec)
    assert np.all(f.sections[:, 3] == 1.0)
    assert np.all(np.abs(f.poles) < 1 - STABILITY_MARGIN)


@st.composite
def specs(draw):
    kind = draw(st.sampled_from(["lowpass", "highpass", "bandpass", "bandstop"]))
    order = draw(st.integers(1, 16))
    if kind in ("lowpass", "highpass"):
        return FilterSpec(kind, order, (draw(st.floats(0.5, 120.0)),), RATE)
    lo = draw(st.floats(0.5, 110.0))
    hi = draw(st.floats(lo + 1.0, 125.0))
    return FilterSpec(kind, order, (lo, hi), RATE)


@settings(max_examples=100, deadline=None)
@given(specs())
def test_random_designs_are_stable_and_finite(spec):
    f = design_butterworth(spec)
    assert np.all(np.abs(f.poles) < 1 - STABILITY_MARGIN)
    assert np.all(np.isfinite(f.response(GRID)))


def test_lowpass_magnitude_is_monotone():
    for order, cutoff in [(1, 5.0), (4, 60.0), (9, 30.0), (16, 100.0)]:
        mag = np.abs(design_butterworth(FilterSpec("lowpass", order, (cutoff,))).response(GRID))
        assert np.all(np.diff(mag) <= 1e-12)


@pytest.mark.parametrize("kind,edges", [
    ("lowpass", (128.0,)), ("lowpass", (0.0,)), ("bandpass", (36.0, 2.0)),
    ("bandpass", (2.0,)), ("comb", (5.0,)),
])
def test_invalid_specs(kind, edges):
    with pytest.raises(DesignError):
        FilterSpec(kind, 4, edges, RATE)


def test_order_limits():
    with pytest.raises(DesignError):
        FilterSpec("lowpass", 17, (10.0,))
    with pytest.raises(DesignError):
        FilterSpec("lowpass", 0, (10.0,))


def test_section_text_round_trip():
    f = design_butterworth(FilterSpec("bandpass", 8, (2.0, 36.0)))
    text = format_sections(f)
    assert len(text.splitlines()) == 8
    assert np.array_equal(parse_sections(text), f.sections)


# -- zero-phase application -------------------------------------------------

def test_filtfilt_matches_scipy_odd_padding():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((3, 2000))
    spec = FilterSpec("bandpass", 8, (2.0, 36.0))
    f = design_butterworth(spec)
    ref = sp_signal.sosfiltfilt(np.array(f.sections), x, padtype="odd",
                                padlen=3 * spec.total_order)
    np.testing.assert_allclose(filtfilt_array(f, x), ref, atol=1e-12)


def test_sinusoid_gets_squared_gain_and_no_lag():
    f = design_butterworth(FilterSpec("bandpass", 8, (2.0, 36.0)))
    t = np.arange(4096) / RATE
    x = np.sin(2 * np.pi * 10 * t)
    y = apply_zero_phase(f, _recording(x)).data[0]
    core = slice(1024, 3072)
    expected = np.abs(f.response([10.0]))[0] ** 2
    amp = np.sqrt(2) * np.std(y[core])
    assert abs(amp / expected - 1) <= 0.02
    lags = np.arange(-20, 21)
    xc = [np.dot(x[core], np.roll(y, -k)[core]) for k in lags]
    assert lags[int(np.argmax(xc))] == 0


def test_zero_in_zero_out():
    assert np.array_equal(preprocess(_recording(np.zeros(2048))).data, np.zeros((15, 2048)))


def test_linearity():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 15, 1500))
    f = design_butterworth(FilterSpec("bandstop", 4, (48.0, 52.0)))
    lhs = filtfilt_array(f, 2.0 * a - 3.0 * b)
    rhs = 2.0 * filtfilt_array(f, a) - 3.0 * filtfilt_array(f, b)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_chain_removes_line_noise():
    t = np.arange(8192) / RATE
    x = np.sin(2 * np.pi * 50 * t)
    y = preprocess(_recording(x)).data[0]
    core = slice(1024, -1024)
    ratio = np.sqrt(np.mean(y[core] ** 2) / np.mean(x[core] ** 2))
    assert ratio <= 0.01
    assert 20 * np.log10(ratio) <= -40


def test_chain_confines_white_noise_to_band():
    x = np.random.default_rng(2).standard_normal(256 * 120)
    y = preprocess(_recording(x)).data[:1]
    psd = welch_psd(y, RATE, 512)
    p = psd.power[0]
    inside = (psd.freqs >= 2) & (psd.freqs <= 36)
    assert p[~inside].sum() <= 0.05 * p.sum()


def test_chain_removes_dc_offset():
    x = 100.0 + np.random.default_rng(3).standard_normal(256 * 20)
    y = preprocess(_recording(x)).data[0]
    assert abs(y.mean()) <= 0.5


def test_short_signal_raises_length_error():
    f = design_butterworth(FilterSpec("bandpass", 8, (2.0, 36.0)))
    with pytest.raises(LengthError):
        filtfilt_array(f, np.zeros(96))
    filtfilt_array(f, np.zeros(97))


def test_rate_mismatch():
    f = design_butterworth(FilterSpec("lowpass", 4, (60.0,), 512.0))
    with pytest.raises(DesignError):
        apply_zero_phase(f, _recording(np.zeros(2048)))


# -- windows ----------------------------------------------------------------

def _trial(protocol_id, seconds, start=0):
    p = get_protocol(protocol_id)
    return TrialDescriptor(0, p.classes[0], start, int(seconds * RATE), p.id), p


@pytest.mark.parametrize("pid,bounds", [("P1a", (512, 1536)), ("P3a", (768, 1792))])
def test_window_positions(pid, bounds):
    trial, p = _trial(pid, get_protocol(pid).trial_duration)
    n = trial.duration_samples
    rec = Recording(np.tile(np.arange(n, dtype=float), (15, 1)), RATE)
    seg = extract_window(rec, trial, p)
    assert seg.shape == (15, 1024)
    assert (seg[0, 0], seg[0, -1] + 1) == bounds


def test_window_past_trial_end():
    trial, p = _trial("P1a", 5.0)
    rec = Recording(np.zeros((15, 2000)), RATE)
    with pytest.raises(RangeError):
        extract_window(rec, trial, p)


def test_trial_past_recording_end():
    p = get_protocol("P3a")
    trial = TrialDescriptor(0, vi(5), 1000, 2304, "P3a")
    with pytest.raises(RangeError):
        extract_window(Recording(np.zeros((15, 3000)), RATE), trial, p)

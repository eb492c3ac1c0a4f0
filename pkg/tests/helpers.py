"""Test-signal generators shared by the unit and acceptance tests."""

import numpy as np

RATE = 256.0


def random_tonal_signal(rng, n=1024, rate=RATE):
    """1-5 well separated tones in [3, 120] Hz plus a white floor at 10% amplitude.

    Tones are kept at least 1.5 Hz apart so that no two of them beat within a
    1024-sample record; pure white noise at this length has a sample variance
    that itself wanders by more than 5% from its expectation.
    """
    k = int(rng.integers(1, 6))
    freqs = []
    while len(freqs) < k:
        f = rng.uniform(3.0, 120.0)
        if all(abs(f - g) >= 1.5 for g in freqs):
            freqs.append(f)
    amps = rng.uniform(0.5, 5.0, k)
    phases = rng.uniform(0, 2 * np.pi, k)
    t = np.arange(n) / rate
    x = sum(a * np.sin(2 * np.pi * f * t + p) for a, f, p in zip(amps, freqs, phases))
    x = x + 0.1 * np.sqrt(np.mean(x ** 2)) * rng.standard_normal(n)
    return x


def sinusoid(freq, amplitude=1.0, n=1024, rate=RATE, phase=0.0):
    t = np.arange(n) / rate
    return amplitude * np.sin(2 * np.pi * freq * t + phase)

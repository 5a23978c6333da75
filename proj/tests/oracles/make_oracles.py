#!/usr/bin/env python3
"""Regenerates tests/data: WAV pairs plus reference values from pystoi and
scipy. Run from the repository root:

    python3 tests/oracles/make_oracles.py

Needs numpy, scipy and pystoi.
"""
import csv
import os

import numpy as np
from pystoi import stoi
from scipy import signal, stats
from scipy.io import wavfile

FS = 16000
OUT = os.path.join(os.path.dirname(__file__), "..", "data")


def syllables(rng, seconds):
    n = int(seconds * FS)
    x = np.zeros(n)
    pos = int(rng.uniform(0.0, 0.05) * FS)
    while pos < n:
        length = int(rng.uniform(0.12, 0.3) * FS)
        f0a = rng.uniform(90, 220)
        f0b = f0a * rng.uniform(0.8, 1.25)
        f1 = rng.uniform(300, 900)
        f2 = rng.uniform(900, 2500)
        amp = rng.uniform(0.4, 1.0)
        m = min(length, n - pos)
        u = np.arange(m) / length
        phase = np.cumsum(2 * np.pi * (f0a + (f0b - f0a) * u) / FS)
        s = np.zeros(m)
        for h in range(1, int(4000 / max(f0a, f0b)) + 1):
            f = (f0a + f0b) / 2 * h
            g = 1 / (1 + ((f - f1) / 120) ** 2) + 0.6 / (1 + ((f - f2) / 200) ** 2)
            s += g * np.sin(h * phase) / np.sqrt(h)
        x[pos:pos + m] += amp * np.sin(np.pi * u) ** 2 * s
        pos += length + int(rng.uniform(0.03, 0.12) * FS)
    x += 1e-4 * rng.standard_normal(n)
    return 0.5 * x / np.max(np.abs(x))


def quantize(x):
    return np.clip(np.round(x * 32768), -32768, 32767).astype(np.int16)


def at_snr(clean, noise, snr_db):
    g = np.sqrt(np.mean(clean ** 2) / (np.mean(noise ** 2) * 10 ** (snr_db / 10)))
    return clean + g * noise


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = np.random.default_rng(20240611)
    rows = []
    for k in range(5):
        clean = syllables(rng, 1.5)
        cq = quantize(clean)
        wavfile.write(os.path.join(OUT, "clean_%d.wav" % k), FS, cq)
        white = rng.standard_normal(len(clean))
        other = syllables(rng, 1.5)
        degraded = [
            ("white_%ddB" % (5 * k - 5), at_snr(clean, white, 5 * k - 5)),
            ("talker_%ddB" % (3 * k), at_snr(clean, other, 3 * k)),
        ]
        if k == 4:
            b, a = signal.butter(4, 1000, fs=FS)
            degraded[1] = ("lowpass_1k", signal.lfilter(b, a, clean))
        for name, d in degraded:
            d = 0.9 * d / max(1.0, np.max(np.abs(d)))
            dq = quantize(d)
            fname = "deg_%d_%s.wav" % (k, name)
            wavfile.write(os.path.join(OUT, fname), FS, dq)
            ref = stoi(cq / 32768.0, dq / 32768.0, FS, extended=False)
            rows.append(("clean_%d.wav" % k, fname, "%.12f" % ref))
    with open(os.path.join(OUT, "stoi_reference.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["clean", "degraded", "stoi"])
        w.writerows(rows)

    # Band-2 envelope of clean_0: scipy band-pass, rectify, low-pass, decimate.
    _, x = wavfile.read(os.path.join(OUT, "clean_0.wav"))
    x = x / 32768.0
    bp = signal.butter(4, [457, 1202], btype="bandpass", fs=FS, output="sos")
    lp = signal.butter(4, 50, fs=FS, output="sos")
    env = np.maximum(signal.sosfilt(lp, np.abs(signal.sosfilt(bp, x)))[::160], 0.0)
    with open(os.path.join(OUT, "envelope_reference.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["index", "value"])
        for i in range(0, len(env), 7):
            w.writerow([i, "%.17g" % env[i]])

    # Two-tailed Student t p-values at df = 19, and a paired test on 20 fixed
    # pairs of group means.
    with open(os.path.join(OUT, "t_reference.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "df", "p"])
        for t in [0.0, 0.1, 0.5, 1.0, 1.729, 2.093, 2.5, 3.0, 4.0, 6.0, -2.0]:
            w.writerow([t, 19, "%.17g" % (2 * stats.t.sf(abs(t), 19))])
    a = np.array([0.1 * i + 0.05 * np.sin(i) for i in range(20)])
    b = np.array([0.1 * i + 0.03 * np.cos(2 * i) for i in range(20)])
    r = stats.ttest_rel(a, b)
    with open(os.path.join(OUT, "paired_reference.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "p"])
        w.writerow(["%.17g" % r.statistic, "%.17g" % r.pvalue])


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""PESQ scorer for `mosanet label` and `mosanet enhance`.

Usage: pesq_adapter.py CLEAN.wav DEGRADED.wav

Prints one score. The mode comes from MOSANET_PESQ_MODE ("wb", default, or
"nb"). Needs the `pesq` and `scipy` packages.
"""
import os
import sys

import numpy as np
from pesq import pesq
from scipy.io import wavfile


def load(path):
    rate, data = wavfile.read(path)
    if data.ndim > 1:
        data = data[:, 0]
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    return rate, data.astype(np.float64)


def main(argv):
    if len(argv) != 3:
        sys.stderr.write(__doc__)
        return 1
    rate_c, clean = load(argv[1])
    rate_d, degraded = load(argv[2])
    if rate_c != rate_d:
        sys.stderr.write("sample rates differ\n")
        return 1
    n = min(len(clean), len(degraded))
    mode = os.environ.get("MOSANET_PESQ_MODE", "wb")
    print("%.6f" % pesq(rate_c, clean[:n], degraded[:n], mode))
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

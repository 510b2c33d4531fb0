"""
From a raw signal to bags
=========================

A vibration-like signal is corrupted at a chosen SNR, cut into windows and
the windows are grouped into bags.
"""

import numpy as np

from milstroud.data import BagCompositionSpec, Insertion, WindowingSpec, compose_bags, corrupt_snr, window_signal

t = np.arange(48_000) / 12_000
healthy = np.sin(2 * np.pi * 50 * t)
damaged = healthy + 0.6 * np.sign(np.sin(2 * np.pi * 7 * t))

for snr in (20, 10, 5, 1):
    noisy = corrupt_snr(healthy, snr, seed=snr)
    noise = noisy - healthy
    print("target %2d dB, measured %.2f dB" % (snr, 10 * np.log10(np.mean(healthy ** 2) / np.mean(noise ** 2))))

spec = WindowingSpec(400)
normal_windows = window_signal(corrupt_snr(healthy, 10, seed=0), spec)
damaged_windows = window_signal(corrupt_snr(damaged, 10, seed=1), spec)
print(len(normal_windows), "normal windows,", len(damaged_windows), "damaged windows")

X = np.array([w.features for w in normal_windows + damaged_windows])
labels = [0] * len(normal_windows) + [1] * len(damaged_windows)
runs = ["healthy"] * len(normal_windows) + ["damaged"] * len(damaged_windows)
data = compose_bags(X, labels, BagCompositionSpec(10, 10, Insertion.CONTIGUOUS_BY_LABEL, n_train_bags=6),
                    run_ids=runs)
print([(b.id, b.label.name, len(b)) for b in data.test_bags])

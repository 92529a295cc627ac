"""Fit the 4-10-5-1 ReLU throughput demo network.

Usage:
    specforge synth timeseries --len 2000 --seed 0 --out trace.csv
    python scripts/fit_throughput_net.py trace.csv crates/cli/assets/networks/throughput_4_10_5_1.json

Training runs in units of the peak; the scaling is folded into the first and
last layers so the saved network reads and writes raw throughput.
"""

import json
import sys

import numpy as np


def load(path):
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    return data[:, :-1], data[:, -1]


def init(rng, sizes):
    layers = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))
        layers.append([w, np.zeros(n_out)])
    return layers


def forward(layers, x):
    acts = [x]
    for i, (w, b) in enumerate(layers):
        z = acts[-1] @ w.T + b
        acts.append(np.maximum(z, 0.0) if i < len(layers) - 1 else z)
    return acts


def train(x, y, epochs=3000, lr=1e-2, seed=0):
    rng = np.random.default_rng(seed)
    layers = init(rng, [x.shape[1], 10, 5, 1])
    m = [[np.zeros_like(w), np.zeros_like(b)] for w, b in layers]
    v = [[np.zeros_like(w), np.zeros_like(b)] for w, b in layers]
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, epochs + 1):
        acts = forward(layers, x)
        grad = 2.0 * (acts[-1][:, 0] - y)[:, None] / len(y)
        for i in reversed(range(len(layers))):
            w, _ = layers[i]
            gw = grad.T @ acts[i]
            gb = grad.sum(axis=0)
            if i > 0:
                grad = (grad @ w) * (acts[i] > 0)
            for j, g in enumerate((gw, gb)):
                m[i][j] = b1 * m[i][j] + (1 - b1) * g
                v[i][j] = b2 * v[i][j] + (1 - b2) * g * g
                mh = m[i][j] / (1 - b1**t)
                vh = v[i][j] / (1 - b2**t)
                layers[i][j] = layers[i][j] - lr * mh / (np.sqrt(vh) + eps)
    mse = float(np.mean((forward(layers, x)[-1][:, 0] - y) ** 2))
    return layers, mse


def main():
    src, dst = sys.argv[1], sys.argv[2]
    x, y = load(src)
    scale = float(y.max())
    layers, mse = train(x / scale, y / scale)
    layers[0][0] = layers[0][0] / scale
    layers[-1][0] = layers[-1][0] * scale
    layers[-1][1] = layers[-1][1] * scale
    doc = {
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist(), "relu": i < len(layers) - 1}
            for i, (w, b) in enumerate(layers)
        ]
    }
    with open(dst, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    print(f"normalised mse {mse:.5f}")


if __name__ == "__main__":
    main()

"""Reference logits for full-width torchvision models with formula weights.

Every tensor (ordinal k in state-dict order, flat index i) is filled from an
integer hash, so the Rust side can rebuild identical weights without
shipping them. Writes tests/fixtures/torchvision_logits.json.
"""
import json
import math
import sys

import numpy as np
import torch
import torchvision.models as tvm


def splitmix(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def wave(k, n):
    """Uniform in [-1, 1) from splitmix64 of (k << 32 | i)."""
    i = np.arange(n, dtype=np.uint64) | (np.uint64(k) << np.uint64(32))
    return (splitmix(i) >> np.uint64(11)).astype(np.float64) / 2.0**52 - 1.0


def fill(model, gain):
    sd = model.state_dict()
    k = 0
    for name, t in sd.items():
        if name.endswith("num_batches_tracked"):
            continue
        s = wave(k, t.numel())
        if name.endswith("running_var"):
            v = 1.0 + 0.5 * s * s
        elif name.endswith("running_mean") or name.endswith("bias"):
            v = 0.1 * s
        elif t.dim() == 1:
            v = 1.0 + 0.2 * s
        else:
            fan_in = t[0].numel()
            v = s * math.sqrt(gain / fan_in)
        t.copy_(torch.from_numpy(v.astype(np.float32)).reshape(t.shape))
        k += 1


def inputs(n, size):
    x = wave(1 << 20, n * 3 * size * size)
    return torch.from_numpy(x.astype(np.float32)).reshape(n, 3, size, size)


def main(out):
    cases = {
        "alexnet": (tvm.alexnet(num_classes=14), 63, 6.0),
        "resnet152": (tvm.resnet152(num_classes=14), 64, 3.0),
        "inception_v3": (
            tvm.inception_v3(num_classes=14, aux_logits=False, init_weights=False),
            75,
            6.0,
        ),
    }
    data = {}
    torch.set_grad_enabled(False)
    for name, (model, size, gain) in cases.items():
        fill(model, gain)
        model.eval()
        logits = model.double()(inputs(2, size).double())
        data[name] = {
            "input_size": size,
            "batch": 2,
            "gain": gain,
            "logits": logits.tolist(),
        }
    with open(out, "w") as f:
        json.dump(data, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])

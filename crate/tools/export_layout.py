"""Dump torchvision state-dict names and shapes (14-class heads) as JSON.

Used to produce tests/fixtures/torchvision_layout.json. Requires torch and
torchvision; no weights are downloaded.
"""
import json
import sys

import torchvision.models as tvm


def layout(model):
    return [
        [name, list(t.shape)]
        for name, t in model.state_dict().items()
        if not name.endswith("num_batches_tracked")
    ]


def main(out):
    models = {
        "alexnet": tvm.alexnet(num_classes=14),
        "resnet152": tvm.resnet152(num_classes=14),
        "inception_v3": tvm.inception_v3(num_classes=14, aux_logits=False, init_weights=False),
    }
    data = {k: layout(m) for k, m in models.items()}
    with open(out, "w") as f:
        json.dump(data, f, separators=(",", ":"))
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])

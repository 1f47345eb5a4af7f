from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ShapeError
from . import layers as L


@dataclass
class ModelSpec:
    """Ordered layer list; each entry is ``(kind, options)``.

    Kinds: ``conv`` (in, out), ``relu``, ``pool``, ``flatten``,
    ``dropout`` (rate), ``dense`` (in, out), ``softmax_ce`` (the loss head).
    """

    layers: list = field(default_factory=list)
    input_shape: tuple = (1, 28, 28)

    def validate(self):
        """Propagate shapes through the stack; returns the logits width."""
        heads = [i for i, (kind, _) in enumerate(self.layers) if kind == "softmax_ce"]
        if heads != [len(self.layers) - 1]:
            raise ShapeError("spec needs exactly one softmax_ce head, placed last")
        shape = tuple(self.input_shape)
        for kind, opt in self.layers[:-1]:
            if kind == "conv":
                if len(shape) != 3 or shape[0] != opt["in"]:
                    raise ShapeError(f"conv expects {opt['in']} channels, got shape {shape}")
                k, s, p = opt.get("kernel", 3), opt.get("stride", 1), opt.get("padding", 1)
                shape = (opt["out"], (shape[1] + 2 * p - k) // s + 1, (shape[2] + 2 * p - k) // s + 1)
            elif kind == "pool":
                if len(shape) != 3 or shape[1] % 2 or shape[2] % 2:
                    raise ShapeError(f"pool needs even spatial dims, got {shape}")
                shape = (shape[0], shape[1] // 2, shape[2] // 2)
            elif kind == "flatten":
                n = 1
                for d in shape:
                    n *= d
                shape = (n,)
            elif kind == "dense":
                if shape != (opt["in"],):
                    raise ShapeError(f"dense expects ({opt['in']},), got {shape}")
                shape = (opt["out"],)
            elif kind not in ("relu", "dropout"):
                raise ShapeError(f"unknown layer kind {kind!r}")
        if len(shape) != 1:
            raise ShapeError(f"loss head needs flat logits, got {shape}")
        return shape[0]


def mnist_cnn_spec(hidden=128, dropout=0.25):
    return ModelSpec([
        ("conv", {"in": 1, "out": 16}),
        ("relu", {}),
        ("pool", {}),
        ("conv", {"in": 16, "out": 32}),
        ("relu", {}),
        ("pool", {}),
        ("flatten", {}),
        ("dropout", {"rate": dropout}),
        ("dense", {"in": 32 * 7 * 7, "out": hidden}),
        ("relu", {}),
        ("dense", {"in": hidden, "out": 10}),
        ("softmax_ce", {}),
    ])


def build_model(spec, rng):
    """Instantiate ``spec`` with weights drawn from ``rng``.

    Weights come from ``rng.child(0)``, dropout masks from ``rng.child(1)``,
    so changing one never shifts the other.
    """
    spec.validate()
    init = rng.child(0)
    counts = {}
    layers = []
    for kind, opt in spec.layers[:-1]:
        counts[kind] = counts.get(kind, 0) + 1
        name = {"conv": "conv", "dense": "fc"}.get(kind, kind) + str(counts[kind])
        if kind == "conv":
            layers.append(L.Conv2d(opt["in"], opt["out"], init, kernel=opt.get("kernel", 3),
                                   stride=opt.get("stride", 1), padding=opt.get("padding", 1),
                                   name=name))
        elif kind == "dense":
            layers.append(L.Dense(opt["in"], opt["out"], init, name=name))
        elif kind == "relu":
            layers.append(L.ReLU(name))
        elif kind == "pool":
            layers.append(L.MaxPool2x2(name))
        elif kind == "flatten":
            layers.append(L.Flatten(name))
        elif kind == "dropout":
            layers.append(L.Dropout(opt.get("rate", 0.25), name=name))
    model = L.Sequential(layers, spec)
    model.set_rng(rng.child(1))
    return model


def build_mnist_cnn(rng, hidden=128, dropout=0.25):
    """The two-conv digit classifier; 206,922 parameters at hidden=128."""
    return build_model(mnist_cnn_spec(hidden, dropout), rng)

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

INPUTS = ("proprio", "vision", "force")
OUTPUTS = ("proprio", "force", "flow")

DEFAULT_WEIGHTS = {"proprio": 1.0, "force": 1.0, "flow": 1.0 / (64 * 64 * 2)}


@dataclass(frozen=True)
class ModalityConfig:
    """Which sensors go in and come out, latent size and loss weights.

    Reconstruction terms are per-sample sums of squared errors in
    normalised units, so the default flow weight turns its sum over
    64*64*2 elements into a per-element mean.
    """

    inputs: tuple[str, ...] = ("proprio",)
    outputs: tuple[str, ...] = ("proprio", "force")
    latent_dim: int = 16
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    beta: float = 1e-3
    batch_size: int = 128
    lr: float = 1e-3
    val_fraction: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.inputs:
            raise ValueError("at least one input modality is required")
        if not self.outputs:
            raise ValueError("at least one output modality is required")
        bad = [m for m in self.inputs if m not in INPUTS]
        if bad:
            raise ValueError(f"unknown input modalities {bad}; choose from {INPUTS}")
        bad = [m for m in self.outputs if m not in OUTPUTS]
        if bad:
            raise ValueError(f"unknown output modalities {bad}; choose from {OUTPUTS}")
        if len(set(self.inputs)) != len(self.inputs) or len(set(self.outputs)) != len(self.outputs):
            raise ValueError("duplicate modality")
        if self.latent_dim <= 0:
            raise ValueError(f"latent_dim must be positive, got {self.latent_dim}")
        w = dict(DEFAULT_WEIGHTS)
        w.update(self.weights)
        object.__setattr__(self, "weights", w)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inputs"] = list(self.inputs)
        d["outputs"] = list(self.outputs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModalityConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)

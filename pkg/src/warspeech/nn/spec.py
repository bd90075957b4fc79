"""Model, optimizer, and training configuration types."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from ..errors import ConfigError

MODEL_KINDS = ("mlp", "lstm", "lstm_attention")
LOSS_KINDS = ("binary_cross_entropy", "sparse_categorical_cross_entropy")
INIT_KINDS = ("glorot_uniform", "he_normal", "orthogonal", "zeros")
OPTIMIZER_KINDS = ("sgd_nesterov", "adam")

# probability clamp inside both losses; avoids log(0)
PROB_EPS = 1e-7


@dataclass
class ModelSpec:
    """Architecture description.

    For the recurrent kinds the input vector is viewed as ``timesteps``
    chunks of ``input_dim / timesteps`` features; ``timesteps=1`` feeds the
    whole vector as a single step.
    """

    kind: str
    input_dim: int
    timesteps: int = 1
    hidden_sizes: tuple[int, int] = (256, 64)  # mlp only
    lstm_units: int = 128
    dense_units: int = 64
    mlp_dropout: float = 0.2
    lstm_dropout: float = 0.1
    recurrent_dropout: float = 0.1
    dense_dropout: float = 0.1
    l2: float | None = None  # resolved per kind when None
    output_units: int = 1  # 1 = sigmoid head, 2 = softmax pair
    activation: str = "relu"
    kernel_init: str = "glorot_uniform"
    recurrent_init: str = "orthogonal"
    dense_init: str = "he_normal"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.input_dim < 1:
            raise ConfigError("input_dim must be >= 1")
        if self.output_units not in (1, 2):
            raise ConfigError(f"output_units must be 1 or 2, got {self.output_units}")
        if self.activation != "relu":
            raise ConfigError(f"unsupported hidden activation {self.activation!r}")
        for tag in (self.kernel_init, self.recurrent_init, self.dense_init):
            if tag not in INIT_KINDS:
                raise ConfigError(f"unknown initializer {tag!r}")
        rates = {
            "mlp_dropout": self.mlp_dropout,
            "lstm_dropout": self.lstm_dropout,
            "recurrent_dropout": self.recurrent_dropout,
            "dense_dropout": self.dense_dropout,
        }
        for name, rate in rates.items():
            if not (0.0 <= rate < 1.0):
                raise ConfigError(f"{name} must be in [0, 1), got {rate}")
        if self.l2 is None:
            self.l2 = 0.01 if self.kind == "mlp" else 0.1
        if self.l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")
        if self.kind in ("lstm", "lstm_attention"):
            if self.timesteps < 1:
                raise ConfigError("timesteps must be >= 1")
            if self.input_dim % self.timesteps:
                raise ConfigError(
                    f"input_dim {self.input_dim} not divisible by timesteps {self.timesteps}"
                )
        if self.kind == "mlp" and len(self.hidden_sizes) != 2:
            raise ConfigError("mlp takes exactly two hidden sizes")

    @property
    def step_dim(self) -> int:
        return self.input_dim // self.timesteps

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        d["hidden_sizes"] = tuple(d.get("hidden_sizes", (256, 64)))
        return cls(**d)


@dataclass
class OptimizerConfig:
    kind: str = "sgd_nesterov"
    learning_rate: float = 0.001
    momentum: float = 0.99
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clipnorm: float | None = None

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ConfigError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError("momentum must be in [0, 1)")
        for name, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not (0.0 < b < 1.0):
                raise ConfigError(f"{name} must be in (0, 1)")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be > 0")
        if self.clipnorm is not None and self.clipnorm <= 0:
            raise ConfigError("clipnorm must be > 0 when set")


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    shuffle_seed: int = 0
    loss: str = "binary_cross_entropy"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if len(self.fractions) != 3 or abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {self.fractions}")
        if any(f < 0 for f in self.fractions):
            raise ConfigError("split fractions must be nonnegative")
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainReport:
    """Per-epoch curves plus the final parameter digest.

    Wall-clock timings are informational and excluded from artifacts and
    equality, so identical seeds reproduce identical reports.
    """

    epochs: list[EpochStats] = field(default_factory=list)
    wall_clock: list[float] = field(default_factory=list)
    param_digest: str = ""
    seeds: dict = field(default_factory=dict)

    def curves_dict(self) -> list[dict]:
        return [
            {
                "epoch": e.epoch,
                "train_loss": e.train_loss,
                "train_acc": e.train_acc,
                "val_loss": e.val_loss,
                "val_acc": e.val_acc,
            }
            for e in self.epochs
        ]

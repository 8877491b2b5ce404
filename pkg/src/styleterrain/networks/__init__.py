from .bundle import ModelBundle, ModelConfig, load_bundle, new_bundle, save_bundle
from .latents import LatentW, LatentWPlus, LatentZ
from .inference import (broadcast, encode, map_latent, mean_w, sample_wplus,
                        synthesize)
from .training import (EncoderTrainConfig, GanTrainConfig, train_encoder,
                       train_generator)

__all__ = [
    "ModelBundle", "ModelConfig", "load_bundle", "new_bundle", "save_bundle",
    "LatentZ", "LatentW", "LatentWPlus",
    "map_latent", "broadcast", "synthesize", "encode", "mean_w", "sample_wplus",
    "GanTrainConfig", "EncoderTrainConfig", "train_generator", "train_encoder",
]

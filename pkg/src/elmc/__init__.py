"""Surrogate models for spatial field prediction.

Learns mappings from low-dimensional design inputs to high-dimensional
spatial fields by combining an MLP autoencoder with PCA-based linear
coregionalization and per-latent Gaussian processes, alongside the
plain PCA-GP and direct-MLP baselines.
"""

from .data import AffineTransform, FieldDataset, fit_normalizer, load_dataset, save_dataset, split
from .datagen import GeneratorSpec, generate_dataset
from .models import (
    ElmcModel,
    LmcModel,
    MlpBaselineModel,
    TrainingConfig,
    evaluate_mse,
    load_model,
    predict_elmc,
    predict_lmc,
    predict_mlp_baseline,
    save_model,
    train_elmc,
    train_lmc,
    train_mlp_baseline,
)

__version__ = "0.1.0"

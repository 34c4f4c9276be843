"""Robust classification under image corruptions."""

from .corruptions import (CORRUPTION_SETS, CheckerboardBackground, Corruption, CorruptionSet, GradientBackground,
                          Identity, PixelNoise, Shrink, ShrinkBoth, ShrinkH, ShrinkV, TintBackground, apply_corruption)
from .data import LabeledDataset, load_mnist, split_dataset
from .mlp import MlpParams, forward, loss_and_grad, weighted_loss_and_grad
from .robust import (COMPOSITE, HYBRID, LOSS_CAP, CorruptedCopies, LearningRun, TrainConfig, baseline_even_split,
                     baseline_individual, baseline_uniform, ensemble_bottleneck_loss, ensemble_predict,
                     individual_bottleneck_loss, robust_train, train_oracle_composite, train_oracle_hybrid)

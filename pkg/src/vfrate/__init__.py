"""Quality-driven variable frame-rate decisions for 120 fps video.

Chunks of four frames are described by 32 spatio-temporal features and
classified by two cascaded random forests into 30, 60 or 120 fps.
"""

from .cascade import CascadeModel, FrameRate, build_training_sets, load_model, save_model, train_cascade
from .features import FEATURE_NAMES, FeatureConfig, FeatureVector, extract_chunk_features, extract_features
from .forest import RandomForest, TrainConfig, gini, train_forest
from .pipeline import (DecisionTimeline, GopPlan, decide_sequence, decimate, duplicate_upsample,
                       frames_dropped_report, gop_skip_plan)
from .selection import ConfusionMatrix, kfold_cv, m_crit, macro_metrics, rfe, score_weighted
from .stats import ScoreTable, dmos, pairwise_table, welch_t
from .video_io import Chunk, Frame, chunk_frames, read_yuv, write_yuv

__version__ = "0.1.0"

"""Noise-robust F0 tracking by waveform-to-sinusoid regression."""
from .baseline import YinConfig, acf_track, yin_track
from .evaluate import EvalReport, aggregate, score
from .neural import RecurrentModel, TrainConfig, init_model, load_checkpoint, save_checkpoint, train
from .signal import FrameSequence, Waveform, frame_signal
from .targets import GroundTruthF0, build_target
from .tracker import DecoderConfig, F0Estimate, F0Track, decode_f0, detect_voicing, track

__version__ = "0.1.0"

__all__ = [
    "DecoderConfig", "EvalReport", "F0Estimate", "F0Track", "FrameSequence", "GroundTruthF0",
    "RecurrentModel", "TrainConfig", "Waveform", "YinConfig", "acf_track", "aggregate",
    "build_target", "decode_f0", "detect_voicing", "frame_signal", "init_model",
    "load_checkpoint", "save_checkpoint", "score", "track", "train", "yin_track",
]

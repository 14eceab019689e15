"""Dataset plumbing: audio and ground-truth I/O, manifests, synthesis, corpora."""
from .audio import align_to_frames, load_audio, load_ground_truth, trim_edges, write_audio, write_ground_truth
from .manifest import UtteranceRecord, build_noisy_set, expansion_count, load_record, read_manifest, write_manifest
from .synth import SynthSpec, make_noise, random_spec, synth_utterance

__all__ = [
    "SynthSpec", "UtteranceRecord", "align_to_frames", "build_noisy_set", "expansion_count",
    "load_audio", "load_ground_truth", "load_record", "make_noise", "random_spec",
    "read_manifest", "synth_utterance", "trim_edges", "write_audio", "write_ground_truth",
    "write_manifest",
]

"""Corpus-level pipeline: manifest ingestion, persisted artifacts, CLI."""

from .config import RunConfig
from .manifest import ManifestEntry, read_manifest, write_manifest
from .stages import estimate, morph_token, plot_artifact, preprocess, run_tests
from .synth import default_spec, synth_corpus

__all__ = ["RunConfig", "ManifestEntry", "read_manifest", "write_manifest", "preprocess",
           "estimate", "run_tests", "morph_token", "plot_artifact", "synth_corpus",
           "default_spec"]

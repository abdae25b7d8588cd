"""Paths to the data files bundled with the package (taxonomy, manifests,
question banks, demo cassette)."""
from __future__ import annotations

from importlib import resources
from pathlib import Path


def data_path(name: str) -> Path:
    return Path(str(resources.files("atomiclo").joinpath("data", name)))


TAXONOMY_MECHANICS = "taxonomy_mechanics.json"
MANIFEST_MECHANICS = "manifest_mechanics.json"
QUESTIONS_ENERGY = "questions_energy.jsonl"
QUESTIONS_SAMPLE = "questions_sample.jsonl"
CASSETTE_ENERGY_DEMO = "cassette_energy_demo.json"

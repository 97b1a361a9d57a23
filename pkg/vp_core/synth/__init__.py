"""
Synth Module

Seeded synthetic line scenes with exact vanishing points, and an endpoint-based oracle.
"""

from .generator import (
    clip_segment,
    dataset_scenes,
    generate_scene,
    rasterize,
    sample_directions,
    scene_seed,
    write_dataset,
)
from .models import DatasetSpec, Rasterizer, SceneSpec, SceneTruth, Segment
from .oracle import oracle_vps

__all__ = [
    "DatasetSpec",
    "Rasterizer",
    "SceneSpec",
    "SceneTruth",
    "Segment",
    "clip_segment",
    "dataset_scenes",
    "generate_scene",
    "oracle_vps",
    "rasterize",
    "sample_directions",
    "scene_seed",
    "write_dataset",
]

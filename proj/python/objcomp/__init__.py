"""Python bindings for the objcomp scene-composition library."""

import json

from . import _objcomp
from ._objcomp import (
    ObjcompError,
    effective_sample_size,
    hidden_object_probability,
    mann_whitney_u,
    synthesize_grasp,
)

__all__ = [
    "ObjcompError",
    "effective_sample_size",
    "generate_scene",
    "hidden_object_probability",
    "load_scene",
    "mann_whitney_u",
    "run_episode",
    "sample_compositions",
    "synthesize_grasp",
    "validate_scene",
]


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def generate_scene(seed, config=None):
    """Scene dict (composition-scene/1) drawn from the generator."""
    return json.loads(_objcomp.generate_scene_json(_dump(config), seed))


def load_scene(path):
    with open(path) as f:
        scene = json.load(f)
    validate_scene(scene)
    return scene


def validate_scene(scene):
    _objcomp.validate_scene_json(json.dumps(scene))


def sample_compositions(scene, h_size=2000, n_ess_target=200, seed=0):
    """Edge assignments for the scene's candidate edges, listed in `edges` order."""
    return json.loads(_objcomp.sample_json(json.dumps(scene), h_size, n_ess_target, seed))


def run_episode(method, seed=0, scene=None, generator=None, generator_seed=0, config=None):
    """One closed-loop episode on a scene dict or on a generated world."""
    source = scene if scene is not None else (generator or {})
    return json.loads(_objcomp.episode_json(json.dumps(source), generator_seed, method, _dump(config), seed))

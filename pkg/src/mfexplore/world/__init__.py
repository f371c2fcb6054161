from .generate import generate_world
from .motion import MotionCommand, StairTracker, TransitionEvent, step_agent
from .sensing import detect_stairs, sense
from .types import (
    MultiFloorWorld,
    OracleNoise,
    Pose,
    SensorFrame,
    StairLink,
    WorldSpec,
    make_stair_link,
    validate_world,
)
from .worldio import load_world, save_world

__all__ = [
    "MultiFloorWorld",
    "OracleNoise",
    "Pose",
    "SensorFrame",
    "StairLink",
    "WorldSpec",
    "MotionCommand",
    "StairTracker",
    "TransitionEvent",
    "generate_world",
    "sense",
    "detect_stairs",
    "step_agent",
    "make_stair_link",
    "validate_world",
    "load_world",
    "save_world",
]

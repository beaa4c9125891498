"""Gradient-optimized exploration paths over a voxel occupancy map."""

from .autodiff import AdScalar
from .camera import CameraModel, Pose, visible_frontier_count
from .diff_ig import FuzzyConfig, fuzzy_filter, grad_ig_path, ig_path, ig_view
from .frontier import FrontierSet, rebuild, surrounding_shell, update_after_scan
from .global_planner import Path, densify, plan_rrt
from .path_optimizer import ObjectiveWeights, optimize_path, path_length_cost
from .view_quality import SafetyZones, next_best_view, view_quality
from .voxel_map import Aabb, VoxelMap, key_of, raycast_voxels

__version__ = "0.1.0"

__all__ = [
    "AdScalar", "CameraModel", "Pose", "visible_frontier_count", "FuzzyConfig", "fuzzy_filter",
    "grad_ig_path", "ig_path", "ig_view", "FrontierSet", "rebuild", "surrounding_shell",
    "update_after_scan", "Path", "densify", "plan_rrt", "ObjectiveWeights", "optimize_path",
    "path_length_cost", "SafetyZones", "next_best_view", "view_quality", "Aabb", "VoxelMap",
    "key_of", "raycast_voxels",
]

"""Normal section profiles of surfaces of revolution from pose-free multi-line laser scans.

Each viewpoint contributes a few general section profiles (plane cuts that
need not contain the axis). The revolution axis is estimated from point
correspondences between them, the profiles are rotated into the axis frame,
and the partial normal profiles of several viewpoints are registered into a
complete one.
"""
from .errors import *  # noqa: F401,F403
from .geometry import (
    Axis,
    GeneralSectionProfile,
    LaserPlane,
    NormalSectionProfile,
    PlanarPoint,
    profile_to_normal,
    project_points,
    project_to_axis_frame,
)
from .axis import CorrespondenceSet, brute_force_axis, estimate_axis
from .features import FeatureConfig, initial_correspondences
from .reconstruction import ReconstructionConfig, ReconstructionResult, fuse_profiles, refine
from .registration import RegistrationConfig, RegistrationResult, Rigid2D, icp_2d, register_partials
from .evaluation import accuracy, pointwise_error, segment_summary, summarize
from .kernels import BACKEND

__version__ = "0.1.0"

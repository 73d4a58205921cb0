"""Gauss-Newton pose-graph optimization with additive overlapping Schwarz preconditioned CG."""

from .errors import (
    CGBreakdownError,
    ConvergenceError,
    DDSlamError,
    G2oFormatError,
    NotPositiveDefiniteError,
    PartitionError,
)
from .gauss_newton import GnConfig, GnReport, solve
from .graph import Edge, EdgeKind, PoseGraph
from .linalg import BlockSparseMatrix, CgReport, pcg
from .pose import Pose2, RelPose
from .schwarz import SchwarzPreconditioner, SubdomainPartition, loop_partition
from .synth import SynthConfig, SynthOutput, generate

__version__ = "0.1.0"

__all__ = [
    "BlockSparseMatrix",
    "CGBreakdownError",
    "CgReport",
    "ConvergenceError",
    "DDSlamError",
    "Edge",
    "EdgeKind",
    "G2oFormatError",
    "GnConfig",
    "GnReport",
    "NotPositiveDefiniteError",
    "PartitionError",
    "Pose2",
    "PoseGraph",
    "RelPose",
    "SchwarzPreconditioner",
    "SubdomainPartition",
    "SynthConfig",
    "SynthOutput",
    "generate",
    "loop_partition",
    "pcg",
    "solve",
]

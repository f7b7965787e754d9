"""Exception types shared across the toolkit."""


class PartGraspError(Exception):
    """Base class for all toolkit errors."""


class ParseError(PartGraspError):
    """Input file is missing, unreadable, or malformed."""


class DegenerateMesh(PartGraspError):
    """Mesh has zero total area or otherwise unusable geometry."""


class IndexOutOfRange(PartGraspError):
    """A face references a vertex that does not exist."""


class ViewMismatch(PartGraspError):
    """A detection references a view with no rendered buffer."""


class DimensionMismatch(PartGraspError):
    """Score matrix, mesh, or decomposition shapes disagree."""


class LengthMismatch(PartGraspError):
    """A per-face array does not match the mesh face count."""


class UnknownPrompt(PartGraspError):
    """A detection names a prompt absent from the prompt set."""


class BadQuaternion(PartGraspError):
    """Grasp quaternion norm deviates too far from 1."""


class NoValidGrasps(PartGraspError):
    """Antipodal sampling found no feasible contact pair."""


class EmptySelection(PartGraspError):
    """No grasp candidate landed on the target part."""


class EmptyInput(PartGraspError):
    """Metric called with an empty collection."""

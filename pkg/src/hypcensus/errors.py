"""Exception hierarchy shared by all modules."""


class HypCensusError(Exception):
    """Base class for every error raised by this package."""


class NonConvergence(HypCensusError):
    pass


class DegenerateTetrahedron(HypCensusError):
    pass


class BranchUndefined(HypCensusError):
    pass


class NotIdeal(HypCensusError):
    pass


class NotFiniteSymmetric(HypCensusError):
    pass


class UnsupportedSize(HypCensusError):
    pass


class InvalidPairing(HypCensusError):
    pass


class NonManifold(HypCensusError):
    pass


class InconsistentMarks(HypCensusError):
    pass


class AnsatzInapplicable(HypCensusError):
    pass


class DegenerateEmbedding(HypCensusError):
    pass


class NonMatchingFace(HypCensusError):
    pass


class MoveBudgetExhausted(HypCensusError):
    pass


class MixedDegenerate(HypCensusError):
    pass


class VolumeMismatchOnMerge(HypCensusError):
    pass

"""Domain error hierarchy.

Every failure mode that callers are expected to catch gets its own class;
names follow the failure they report, grouped by the subsystem that raises
them first (several are shared across modules, e.g. ExceptionalPoint).
"""


class TwistlabError(Exception):
    """Base class for all domain errors."""


# linear algebra kernels
class DefectiveMatrix(TwistlabError):
    """Eigenvectors coalesce beyond tolerance (exceptional point of a 2x2)."""


class NotPositive(TwistlabError):
    """Matrix expected PSD has an eigenvalue below -tolerance."""


class IllConditioned(TwistlabError):
    """Sylvester denominator (b_i + b_j) vanishes relative to the spectrum."""


# model / topology
class ExceptionalPoint(TwistlabError):
    """Discriminant vanishes: eigenvalues and eigenvectors coalesce."""


class OnBoundary(TwistlabError):
    """Parameter point sits on a phase boundary curve."""


class TrackingAmbiguous(TwistlabError):
    """Band continuity tracking failed even after grid refinement."""


class BranchJump(TwistlabError):
    """A single Berry-phase step exceeds pi/2: momentum grid too coarse."""


class NearDegenerate(TwistlabError):
    """Discriminant winding cannot satisfy the step bound by refinement."""


class Inconsistent(TwistlabError):
    """Independent knot classifiers disagree."""


# dilation / dynamics
class PositivityLost(TwistlabError):
    """R(t) - I stopped being positive definite: the dilation expired.

    Carries the last time at which positivity still held (`horizon`).
    """

    def __init__(self, msg, horizon=None):
        super().__init__(msg)
        self.horizon = horizon


class UnsupportedStructure(TwistlabError):
    """Operator has weight outside the expected Pauli-product span."""


class StepTooCoarse(TwistlabError):
    """Halving the integrator step moved the final state beyond tolerance."""


class SlowConvergence(TwistlabError):
    """Decay preparation did not reach the fidelity threshold.

    Carries the imaginary gap Im(E1) - Im(E2) that set the decay rate.
    """

    def __init__(self, msg, gap=None):
        super().__init__(msg)
        self.gap = gap


# tomography
class SingularCalibration(TwistlabError):
    """Photoluminescence flip matrix is not invertible."""


class NoConvergence(TwistlabError):
    """Constrained MLE descent hit the iteration cap.

    Carries the remaining projected-gradient residual.
    """

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class EmptySubspace(TwistlabError):
    """Postselected population P_b1 + P_b3 vanished; Bloch ratio undefined."""


# learn
class DegenerateEmbedding(TwistlabError):
    """All embedded points coincide; clustering is meaningless."""


class NonContiguous(TwistlabError):
    """Cluster labels alternate along the m1 sweep."""


class IncompleteGrid(TwistlabError):
    """A feature sample is missing momentum grid points."""

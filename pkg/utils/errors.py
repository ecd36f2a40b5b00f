"""
Exception hierarchy for the PFM library
Every numerical routine raises one of these; the experiment layer catches
PFMError per replicate and records it in the report's failure ledger.
"""

from typing import List, Optional


class PFMError(Exception):
    """Base class for all library errors"""


class InvalidInput(PFMError):
    """Input violates a documented precondition (shape, finiteness, structure)"""


class DegenerateProjection(PFMError):
    """Projection onto the manifold is not unique (singular value or eigengap too small)"""


class DegenerateSpectrum(PFMError):
    """A spectral gap required by a formula is below tolerance"""


class DegenerateFrame(PFMError):
    """Leading eigenvectors of an axial tuple are (numerically) linearly dependent"""


class NotConverged(PFMError):
    """An iterative solver hit its iteration cap"""


class SingularH(PFMError):
    """The H matrix of the sandwich covariance could not be inverted"""


class AnchorResidual(PFMError):
    """A datum coincides with the ambient median; drop or jitter it"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class SamplerStalled(PFMError):
    """Acceptance-rejection sampler fell below its minimum acceptance rate"""


class AlignmentUndefined(PFMError):
    """Procrustes phase alignment is undefined for orthogonal inputs"""


class ParseError(PFMError):
    """Malformed input file; carries the 1-based line and column"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ConfigError(PFMError):
    """Experiment configuration failed schema validation"""

    def __init__(self, messages: List[str]):
        super().__init__("; ".join(messages))
        self.messages = list(messages)

"""Exception types raised by the library."""


class StructuralError(ValueError):
    """Inputs have incompatible shapes, groups or systems."""


class CentralityError(ValueError):
    """An element expected to be central is not."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class DomainError(ValueError):
    """An element is not supported on the ideal a map is defined on."""

    def __init__(self, message, blocks=()):
        super().__init__(message)
        self.blocks = tuple(blocks)


class GroupAxiomError(ValueError):
    """A Cayley table does not define a group."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class CertificationError(ValueError):
    """A precondition certificate (CP, PD, invariance, ...) failed."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate

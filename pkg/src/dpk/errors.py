"""Exception and warning classes shared by all modules.

Parse errors map to CLI exit code 2, everything else derived from
:class:`DpkError` to exit code 1.
"""


class DpkError(ValueError):
    """Base class of every toolkit error."""


class ParseError(DpkError):
    """Raised when an input file does not conform to its format."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ingest
class MalformedLine(ParseError):
    pass


class NonFiniteValue(ParseError):
    pass


class SingularLattice(ParseError):
    pass


class UnknownSpecies(ParseError):
    pass


class DimensionMismatch(ParseError):
    pass


class ImaginaryMode(ParseError):
    def __init__(self, index, line=None):
        self.index = index
        super().__init__(f"mode {index} has negative (imaginary) frequency", line)


class NonOrthonormal(ParseError):
    def __init__(self, pair, deviation):
        self.pair = pair
        self.deviation = deviation
        super().__init__(
            f"eigenvectors {pair[0]} and {pair[1]} deviate from orthonormality by {deviation:.3g}"
        )


class CountMismatch(ParseError):
    pass


class NormalizationError(ParseError):
    def __init__(self, measured, expected):
        self.measured = measured
        self.expected = expected
        super().__init__(f"normalization {measured:.6g} differs from expected {expected:.6g} by more than 5%")


class MissingKey(ParseError):
    def __init__(self, name, line=None):
        self.name = name
        super().__init__(f"missing required key {name!r}", line)


class InvalidOccupation(ParseError):
    pass


class GapInverted(ParseError):
    pass


# lineshape
class AtomCountMismatch(DpkError):
    pass


class SpeciesMismatch(DpkError):
    pass


class DisplacementTooLarge(DpkError):
    pass


class ZeroFrequencyMode(DpkError):
    pass


class SmearingNonPositive(DpkError):
    pass


class GridTooCoarse(DpkError):
    pass


class NegativeTemperature(DpkError):
    pass


# photophysics
class GridMismatch(DpkError):
    pass


class KindMismatch(DpkError):
    pass


class NonPhysicalInput(DpkError):
    pass


class OrderViolation(DpkError):
    pass


# spinham
class WrongTotalSpin(DpkError):
    pass


class NucleusOutsideGrid(DpkError):
    pass


class ExclusionRadiusTooLarge(DpkError):
    pass


class FieldTooLarge(DpkError):
    pass


# levels
class MissingChemicalPotential(DpkError):
    def __init__(self, species):
        self.species = species
        super().__init__(f"no chemical potential for species {species!r}")


class UnknownEntry(DpkError):
    pass


class MissingEntry(UnknownEntry):
    pass


class SameCharge(DpkError):
    pass


# kinetics
class SelectionRuleViolation(DpkError):
    pass


class NegativeRate(DpkError):
    pass


class Reducible(DpkError):
    pass


class NonConvergent(DpkError):
    pass


class StepFailure(DpkError):
    pass


class NoSuchPair(DpkError):
    pass


# warnings
class NormalizationWarning(UserWarning):
    """Grid normalization deviates by 2-5% from the declared value."""


class NegativeBindingWarning(UserWarning):
    """Exciton binding energy came out negative (unbound exciton)."""


class EmptySelectionWarning(UserWarning):
    """Band-filling correction found no states beyond the band edge."""


class LevelOutsideGapWarning(UserWarning):
    """Transition level lies outside the band gap."""

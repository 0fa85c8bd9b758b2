"""Exception types shared across the toolkit."""
from __future__ import annotations


class ToolkitError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class ValidationError(ToolkitError):
    """Malformed or inconsistent input data."""


class DisconnectedComplexError(ValidationError):
    def __init__(self, u: int, v: int):
        self.vertices = (u, v)
        super().__init__(f"complex is disconnected: no edge path joins vertex {u} to vertex {v}")


class OverlapConditionError(ValidationError):
    """A chart pair whose potential difference is not locally constant."""

    def __init__(self, alpha, beta, component, witness_a, witness_b, value_a, value_b):
        self.alpha = alpha
        self.beta = beta
        self.component = tuple(component)
        self.witnesses = (witness_a, witness_b)
        self.values = (value_a, value_b)
        super().__init__(
            f"charts ({alpha}, {beta}): difference not constant on component "
            f"{sorted(component)}: vertex {witness_a} gives {value_a}, vertex {witness_b} gives {value_b}"
        )


class TruncationError(ToolkitError):
    """An operation left the materialized region of a truncated cover."""


class DegenerateCoverError(ToolkitError):
    """Radius-0 materialization of a cover with nontrivial deck group."""


class NotSimplyConnectedError(ToolkitError):
    def __init__(self, generator):
        self.generator = generator
        super().__init__(f"complex is not simply connected: nontrivial generator from edge {generator}")


class HolonomyObstruction(ToolkitError):
    """A chart-graph cycle with nonzero log-holonomy: no flat section exists."""

    def __init__(self, cycle, holonomy):
        self.cycle = tuple(cycle)
        self.holonomy = holonomy
        super().__init__(
            f"no flat trivializing section: chart cycle {list(cycle)} has log-holonomy {holonomy}"
        )


class HomothetyError(ToolkitError):
    """Deck action fails the homothety hypothesis."""

    def __init__(self, word, chart, detail):
        self.word = word
        self.chart = chart
        super().__init__(f"deck word {word} is not a homothety on chart {chart}: {detail}")


class GridBoundsError(ToolkitError):
    """Point or region too close to the grid boundary (stencil needs margin 2)."""


class EstimateError(ToolkitError):
    """Levi constants would be nonpositive (input not strongly psh where required)."""

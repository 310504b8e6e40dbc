"""Time-dependent scalar signals with exact derivatives.

Disturbances, the reference trajectory, and the constraint envelopes are
all drawn from a small compositional family (constant, sinusoid,
exponential decay, sum). Every member carries an analytic derivative, so
nothing downstream ever needs numerical differentiation of an envelope
or reference.

All members are bounded on [0, inf) by construction, which is enforced
at construction time (an exponential with negative decay rate is
rejected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


class SignalError(ValueError):
    """Signal constructed with unusable parameters."""


@dataclass(frozen=True)
class Constant:
    """c for all t."""

    c: float

    def value(self, t: float) -> float:
        return self.c

    def derivative(self, t: float) -> float:
        return 0.0


@dataclass(frozen=True)
class Sinusoid:
    """amplitude * sin(w*t + phase), or cos for kind="cos"."""

    amplitude: float
    angular_frequency: float
    phase: float = 0.0
    kind: str = "sin"

    def __post_init__(self) -> None:
        if self.kind not in ("sin", "cos"):
            raise SignalError(f"sinusoid kind must be 'sin' or 'cos', got {self.kind!r}")

    def value(self, t: float) -> float:
        arg = self.angular_frequency * t + self.phase
        if self.kind == "sin":
            return self.amplitude * math.sin(arg)
        return self.amplitude * math.cos(arg)

    def derivative(self, t: float) -> float:
        arg = self.angular_frequency * t + self.phase
        if self.kind == "sin":
            return self.amplitude * self.angular_frequency * math.cos(arg)
        return -self.amplitude * self.angular_frequency * math.sin(arg)


@dataclass(frozen=True)
class ExpDecay:
    """a * exp(-b*t) + c with b >= 0, so the signal stays bounded for t >= 0."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if self.b < 0:
            raise SignalError(f"exponential rate must be >= 0 for boundedness, got {self.b}")

    def value(self, t: float) -> float:
        return self.a * math.exp(-self.b * t) + self.c

    def derivative(self, t: float) -> float:
        return -self.a * self.b * math.exp(-self.b * t)


@dataclass(frozen=True)
class SignalSum:
    """Pointwise sum of one or more member signals."""

    terms: tuple

    def __post_init__(self) -> None:
        if len(self.terms) < 1:
            raise SignalError("sum signal needs at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))

    def value(self, t: float) -> float:
        total = 0.0
        for term in self.terms:
            total += term.value(t)
        return total

    def derivative(self, t: float) -> float:
        total = 0.0
        for term in self.terms:
            total += term.derivative(t)
        return total


TimeSignal = Union[Constant, Sinusoid, ExpDecay, SignalSum]

_SIN_KINDS = ("sin", "cos")


def signal_to_dict(sig: TimeSignal) -> dict:
    """Serialize a signal as a tagged record, e.g. {"kind": "expdecay", ...}."""
    if isinstance(sig, Constant):
        return {"kind": "constant", "c": sig.c}
    if isinstance(sig, Sinusoid):
        return {
            "kind": sig.kind,
            "amplitude": sig.amplitude,
            "angular_frequency": sig.angular_frequency,
            "phase": sig.phase,
        }
    if isinstance(sig, ExpDecay):
        return {"kind": "expdecay", "a": sig.a, "b": sig.b, "c": sig.c}
    if isinstance(sig, SignalSum):
        return {"kind": "sum", "terms": [signal_to_dict(term) for term in sig.terms]}
    raise SignalError(f"not a known signal type: {type(sig).__name__}")


def _number(record: dict, key: str, path: str) -> float:
    if key not in record:
        raise SignalError(f"{path}: missing key {key!r}")
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SignalError(f"{path}.{key}: expected a number, got {value!r}")
    return float(value)


def signal_from_dict(record: object, path: str = "signal") -> TimeSignal:
    """Parse a tagged signal record. Unknown keys or kinds are errors."""
    if not isinstance(record, dict):
        raise SignalError(f"{path}: expected a tagged record, got {record!r}")
    kind = record.get("kind")
    if kind == "constant":
        allowed = {"kind", "c"}
        sig: TimeSignal = Constant(_number(record, "c", path))
    elif kind in _SIN_KINDS:
        allowed = {"kind", "amplitude", "angular_frequency", "phase"}
        sig = Sinusoid(
            amplitude=_number(record, "amplitude", path),
            angular_frequency=_number(record, "angular_frequency", path),
            phase=_number(record, "phase", path) if "phase" in record else 0.0,
            kind=kind,
        )
    elif kind == "expdecay":
        allowed = {"kind", "a", "b", "c"}
        sig = ExpDecay(
            a=_number(record, "a", path),
            b=_number(record, "b", path),
            c=_number(record, "c", path),
        )
    elif kind == "sum":
        allowed = {"kind", "terms"}
        terms = record.get("terms")
        if not isinstance(terms, list) or not terms:
            raise SignalError(f"{path}.terms: expected a non-empty list")
        sig = SignalSum(tuple(signal_from_dict(term, f"{path}.terms[{i}]") for i, term in enumerate(terms)))
    else:
        raise SignalError(f"{path}.kind: unknown signal kind {kind!r}")
    unknown = set(record) - allowed
    if unknown:
        raise SignalError(f"{path}: unknown keys {sorted(unknown)}")
    return sig

"""Arc-standard transition system: configurations, moves, and the static oracle.

A configuration is a (stack, buffer, arcs) triple over token indices, with
the artificial root (index 0) at the stack bottom. Three moves apply:

* shift      -- push the first buffer token onto the stack
* right_arc  -- attach the stack top to the token below it, pop the top
* left_arc   -- attach the token below the top to the top, remove it

Configurations are immutable; :func:`apply` returns a new one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

SHIFT = "shift"
LEFT_ARC = "left_arc"
RIGHT_ARC = "right_arc"
KINDS = (SHIFT, LEFT_ARC, RIGHT_ARC)


class OracleError(Exception):
    """No gold-consistent transition exists (non-projective tree or a
    configuration off the gold path)."""


class Arc(NamedTuple):
    head: int
    dep: int
    label: str


@dataclass(frozen=True)
class Transition:
    kind: str
    label: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transition kind {self.kind!r}")
        if (self.label is None) != (self.kind == SHIFT):
            raise ValueError(f"{self.kind} transition with label {self.label!r}")

    def __str__(self):
        return self.kind if self.label is None else f"{self.kind}:{self.label}"

    @classmethod
    def from_string(cls, text: str) -> "Transition":
        kind, sep, label = text.partition(":")
        return cls(kind, label if sep else None)


@dataclass(frozen=True)
class Configuration:
    stack: tuple[int, ...]
    buffer: tuple[int, ...]
    arcs: tuple[Arc, ...]


def initial_config(sentence) -> Configuration:
    """Stack holds only the root, buffer holds every token in order."""
    n = len(sentence)
    if n == 0:
        raise ValueError("cannot initialize a configuration for an empty sentence")
    return Configuration(stack=(0,), buffer=tuple(range(1, n + 1)), arcs=())


def legal(config: Configuration) -> set[str]:
    """Kinds applicable in ``config``.

    Shift needs a non-empty buffer; right_arc needs two stack items;
    left_arc additionally requires that the item below the top is not the
    root (the root is never made a dependent).
    """
    kinds = set()
    if config.buffer:
        kinds.add(SHIFT)
    if len(config.stack) >= 2:
        kinds.add(RIGHT_ARC)
        if config.stack[-2] != 0:
            kinds.add(LEFT_ARC)
    return kinds


def apply(config: Configuration, t: Transition) -> Configuration:
    """Apply ``t`` to ``config``, returning the successor configuration."""
    if t.kind == SHIFT:
        if not config.buffer:
            raise ValueError("shift requires a non-empty buffer")
        return Configuration(
            stack=config.stack + (config.buffer[0],),
            buffer=config.buffer[1:],
            arcs=config.arcs,
        )
    if len(config.stack) < 2:
        raise ValueError(f"{t.kind} requires at least two stack items")
    s0, s1 = config.stack[-1], config.stack[-2]
    if t.kind == RIGHT_ARC:
        return Configuration(
            stack=config.stack[:-1],
            buffer=config.buffer,
            arcs=config.arcs + (Arc(s1, s0, t.label),),
        )
    if t.kind == LEFT_ARC:
        if s1 == 0:
            raise ValueError("left_arc may not make the root a dependent")
        return Configuration(
            stack=config.stack[:-2] + (s0,),
            buffer=config.buffer,
            arcs=config.arcs + (Arc(s0, s1, t.label),),
        )
    raise ValueError(f"unknown transition kind {t.kind!r}")


def is_terminal(config: Configuration) -> bool:
    return not config.buffer and config.stack == (0,)


def oracle(config: Configuration, gold) -> Transition:
    """The gold transition for an on-path configuration.

    left_arc when the token below the top is a gold dependent of the top;
    right_arc when the top is a gold dependent of the token below it *and*
    all of the top's own gold dependents are already attached; otherwise
    shift. Raises :class:`OracleError` when none applies.
    """
    heads = [0] * (len(gold) + 1)
    labels = [""] * (len(gold) + 1)
    gold_dep_count = [0] * (len(gold) + 1)
    for tok in gold:
        heads[tok.index] = tok.gold_head
        labels[tok.index] = tok.gold_label
        gold_dep_count[tok.gold_head] += 1

    if len(config.stack) >= 2:
        s0, s1 = config.stack[-1], config.stack[-2]
        if s1 != 0 and heads[s1] == s0:
            return Transition(LEFT_ARC, labels[s1])
        if heads[s0] == s1:
            attached = sum(1 for arc in config.arcs if arc.head == s0)
            if attached == gold_dep_count[s0]:
                return Transition(RIGHT_ARC, labels[s0])
    if config.buffer:
        return Transition(SHIFT)
    raise OracleError(
        "no gold-consistent transition: non-projective tree or off-path "
        f"configuration (stack={config.stack}, buffer={config.buffer})"
    )


def derive_sequence(sentence) -> list[tuple[Configuration, Transition]]:
    """Run the oracle from the initial configuration to termination.

    Returns the visited (configuration, transition) pairs; the replayed
    arc set equals the gold arcs and the sequence has length 2N.
    """
    steps = []
    config = initial_config(sentence)
    limit = 2 * len(sentence)
    while not is_terminal(config):
        if len(steps) >= limit:
            raise OracleError("oracle failed to terminate in 2N transitions")
        t = oracle(config, sentence)
        steps.append((config, t))
        config = apply(config, t)
    derived = {(a.head, a.dep, a.label) for a in config.arcs}
    if derived != sentence.gold_arcs():
        raise OracleError("derived arcs do not match the gold tree")
    return steps

"""Feature extraction over parser configurations.

Three feature groups are supported and freely combined:

* baseline templates over word forms, POS tags, and partial-tree context
  (33 templates: 20 single-word, 6 two-word, 7 three-word);
* best-supertag templates over each token's 1-best supertag
  (16 templates: 8 single-word, 4 two-word, 4 three-word);
* a dense block holding the PCA-projected supertag distributions of two
  addressed tokens (2k real values).

Template addresses name stack/buffer positions (``s0``, ``b1``) with
optional steps into the partially built tree (``.ld``, ``.rd``, ``.h``);
attributes are ``w`` (form), ``t`` (POS), ``r`` (relation to head in the
partial tree), and ``bs`` (best supertag). An address that does not
resolve yields the reserved value ``NULL``, which is itself an observable
feature value. The root token resolves ``w``/``t``/``bs`` to ``ROOT``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import pca as pca_mod
from .transition import Configuration

NULL_VALUE = "NULL"
ROOT_VALUE = "ROOT"
SEP = "\x1f"  # joins component values of conjoined templates

ATTRIBUTES = ("w", "t", "r", "bs")
STEPS = ("ld", "rd", "h")


class AddressedValue(NamedTuple):
    """One resolved template component: where we looked, what attribute,
    and the value found (None when the address does not resolve)."""

    address: str
    attribute: str
    value: str | None


class TemplatePart(NamedTuple):
    base: str  # "s" or "b"
    index: int
    steps: tuple[str, ...]
    attribute: str

    @property
    def address(self) -> str:
        return ".".join([f"{self.base}{self.index}", *self.steps])


class Template(NamedTuple):
    name: str
    parts: tuple[TemplatePart, ...]


def compile_template(name: str) -> Template:
    """Parse a template name like ``s0.ld.r`` or ``s0.t:s1.t``."""
    parts = []
    for chunk in name.split(":"):
        fields = chunk.split(".")
        base = fields[0]
        if len(fields) < 2 or base[0] not in "sb" or not base[1:].isdigit():
            raise ValueError(f"bad template component {chunk!r} in {name!r}")
        *steps, attr = fields[1:]
        if attr not in ATTRIBUTES or any(s not in STEPS for s in steps):
            raise ValueError(f"bad template component {chunk!r} in {name!r}")
        parts.append(TemplatePart(base[0], int(base[1:]), tuple(steps), attr))
    return Template(name, tuple(parts))


def _compile_all(names) -> tuple[Template, ...]:
    return tuple(compile_template(n) for n in names)


BASELINE_TEMPLATES = _compile_all(
    [
        # single-word
        "s0.w", "s1.w", "s2.w", "b0.w", "b1.w",
        "s0.ld.w", "s0.ld.t", "s0.rd.t", "s1.ld.t", "s1.rd.t",
        "s0.ld.r", "s0.rd.r", "s0.rd.w",
        "s0.t", "s1.t", "s2.t", "s3.t", "b0.t", "b1.t", "b2.t",
        # two-word
        "s0.t:s1.t", "s0.w:b0.w", "s0.t:s0.w", "s1.t:s1.w", "b0.t:b0.w",
        "s1.rd.r:s0.ld.r",
        # three-word
        "s0.t:s1.t:b0.t", "s0.t:s1.t:s2.t", "s0.t:b0.t:b1.t",
        "b0.t:b1.t:b2.t", "b1.t:b2.t:b3.t",
        "s1.rd.t:s1.ld.t:s1.t", "s1.t:s1.ld.r:s1.rd.r",
    ]
)

BEST_SUPERTAG_TEMPLATES = _compile_all(
    [
        # single-word
        "s0.bs", "s1.bs", "s2.bs", "s3.bs",
        "b0.bs", "b1.bs", "b2.bs", "b3.bs",
        # two-word
        "s0.bs:s1.bs", "s0.bs:s0.w", "s1.bs:s1.w", "b0.bs:b0.w",
        # three-word
        "s0.bs:s1.bs:b0.bs", "s0.bs:s1.bs:s2.bs", "s0.bs:b0.bs:b1.bs",
        "b1.bs:b2.bs:b3.bs",
    ]
)

RESTRICTED_TEMPLATES = {
    "FORM": _compile_all(["s0.w", "s1.w"]),
    "POS": _compile_all(["s0.t", "s1.t"]),
    "SUPERTAG": _compile_all(["s0.bs", "s1.bs"]),
}

SD_ADDRESS_CHOICES = {"s0s1": ("s0", "s1"), "s0b0": ("s0", "b0")}


class _ArcIndex:
    """Per-configuration lookup tables over the partial arc set."""

    __slots__ = ("head", "label", "left", "right")

    def __init__(self, arcs):
        self.head = {}
        self.label = {}
        self.left = {}  # head -> lowest dependent index
        self.right = {}  # head -> highest dependent index
        for h, d, lab in arcs:
            self.head[d] = h
            self.label[d] = lab
            if d < self.left.get(h, d + 1):
                self.left[h] = d
            if d > self.right.get(h, d - 1):
                self.right[h] = d


def _resolve(config: Configuration, arc_index: _ArcIndex, part: TemplatePart):
    """Token index a template part points at, or None."""
    if part.base == "s":
        if part.index >= len(config.stack):
            return None
        tok = config.stack[-1 - part.index]
    else:
        if part.index >= len(config.buffer):
            return None
        tok = config.buffer[part.index]
    for step in part.steps:
        if step == "ld":
            tok = arc_index.left.get(tok)
        elif step == "rd":
            tok = arc_index.right.get(tok)
        else:
            tok = arc_index.head.get(tok)
        if tok is None:
            return None
    return tok


def _attr_value(sentence, inventory, arc_index, tok, attr):
    if tok is None:
        return None
    if tok == 0:
        return ROOT_VALUE if attr in ("w", "t", "bs") else None
    token = sentence.token(tok)
    if attr == "w":
        return token.form
    if attr == "t":
        return token.pos
    if attr == "r":
        return arc_index.label.get(tok)
    best = token.best_supertag
    if best is None:
        return None
    return inventory.name_of(best) if inventory is not None else str(best)


def instantiate(
    config: Configuration, sentence, templates, inventory=None
) -> list[tuple[AddressedValue, ...]]:
    """Resolve every template against a configuration.

    Returns one tuple of :class:`AddressedValue` per template, in template
    order; extraction is a pure function of its arguments.
    """
    arc_index = _ArcIndex(config.arcs)
    out = []
    for template in templates:
        vals = tuple(
            AddressedValue(
                part.address,
                part.attribute,
                _attr_value(
                    sentence,
                    inventory,
                    arc_index,
                    _resolve(config, arc_index, part),
                    part.attribute,
                ),
            )
            for part in template.parts
        )
        out.append(vals)
    return out


def template_value(instantiation) -> str:
    """Joined string value of one template instantiation, with ``NULL``
    standing in for unresolved components."""
    return SEP.join(
        av.value if av.value is not None else NULL_VALUE for av in instantiation
    )


def extract_baseline(config, sentence, inventory=None):
    """The 33 baseline template instantiations for one configuration."""
    return instantiate(config, sentence, BASELINE_TEMPLATES, inventory)


def extract_bs(config, sentence, inventory=None):
    """The 16 best-supertag template instantiations for one configuration."""
    return instantiate(config, sentence, BEST_SUPERTAG_TEMPLATES, inventory)


def extract_sd(
    config, sentence, pca_model, addresses=("s0", "s1")
) -> np.ndarray:
    """Dense block: concatenated k-vector projections of the supertag
    distributions at the two addressed tokens.

    A token that is missing, is the root, or carries no distribution
    contributes an all-zero k-block.
    """
    arc_index = _ArcIndex(config.arcs)
    k = pca_model.k
    out = np.zeros(2 * k)
    for slot, addr in enumerate(addresses):
        part = TemplatePart(addr[0], int(addr[1:]), (), "w")
        tok = _resolve(config, arc_index, part)
        if tok is None or tok == 0:
            continue
        dist = sentence.token(tok).supertag_dist
        if dist is None:
            continue
        if dist.n != pca_model.n:
            raise ValueError(
                f"distribution dimension {dist.n} does not match "
                f"PCA model n={pca_model.n}"
            )
        out[slot * k : (slot + 1) * k] = pca_mod.project(
            pca_model, dist.ids, dist.probs
        )
    return out


class FeatureDictionary:
    """Injective map from (template id, value string) pairs to dense ids.

    While unfrozen, unseen pairs allocate the next id; once frozen,
    lookups of unseen pairs return None and nothing is allocated.
    """

    def __init__(self):
        self._map: dict[tuple[int, str], int] = {}
        self.frozen = False

    def __len__(self) -> int:
        return len(self._map)

    def id_for(self, template_id: int, value: str) -> int | None:
        key = (template_id, value)
        found = self._map.get(key)
        if found is None and not self.frozen:
            found = len(self._map)
            self._map[key] = found
        return found

    def freeze(self) -> None:
        self.frozen = True

    def to_arrays(self):
        """(template ids, values) parallel lists ordered by feature id."""
        items = sorted(self._map.items(), key=lambda kv: kv[1])
        return (
            np.array([tid for (tid, _), _ in items], dtype=np.int32),
            [value for (_, value), _ in items],
        )

    @classmethod
    def from_arrays(cls, template_ids, values) -> "FeatureDictionary":
        d = cls()
        for tid, value in zip(template_ids, values):
            d._map[(int(tid), value)] = len(d._map)
        d.freeze()
        return d


@dataclass(frozen=True)
class FeatureVector:
    """Sorted active sparse feature ids plus the dense block (length 2k,
    or 0 when the distribution features are disabled)."""

    sparse: np.ndarray
    dense: np.ndarray

    def __post_init__(self):
        if len(self.sparse) and np.any(np.diff(self.sparse) <= 0):
            raise ValueError("sparse ids must be strictly increasing")


def assemble(
    instantiations, dictionary: FeatureDictionary, dense: np.ndarray
) -> FeatureVector:
    """Map template instantiations through the dictionary into a
    :class:`FeatureVector`; position in the list is the template id."""
    found = []
    for tid, inst in enumerate(instantiations):
        fid = dictionary.id_for(tid, template_value(inst))
        if fid is not None:
            found.append(fid)
    found.sort()
    return FeatureVector(
        sparse=np.asarray(found, dtype=np.int32),
        dense=np.asarray(dense, dtype=np.float64),
    )


@dataclass(frozen=True)
class FeatureModel:
    """Which features a trained model extracts: the ordered sparse
    template list, whether the dense block is on, and its shape."""

    name: str
    templates: tuple[Template, ...]
    use_sd: bool
    k: int = 0
    sd_addresses: tuple[str, str] = ("s0", "s1")

    @property
    def dense_dim(self) -> int:
        return 2 * self.k if self.use_sd else 0

    @classmethod
    def from_name(
        cls, name: str, k: int = 0, sd_addresses: str = "s0s1"
    ) -> "FeatureModel":
        """Build from a ``+``-joined component name.

        Components: BL (baseline), BS (best supertag), SD (distribution
        block), and the restricted two-word sets FORM, POS, SUPERTAG.
        """
        addresses = SD_ADDRESS_CHOICES.get(sd_addresses)
        if addresses is None:
            raise ValueError(
                f"sd_addresses must be one of {sorted(SD_ADDRESS_CHOICES)}"
            )
        templates: list[Template] = []
        use_sd = False
        parts = [p.strip().upper() for p in name.split("+") if p.strip()]
        if not parts:
            raise ValueError("empty feature model name")
        for part in parts:
            if part == "BL":
                templates.extend(BASELINE_TEMPLATES)
            elif part == "BS":
                templates.extend(BEST_SUPERTAG_TEMPLATES)
            elif part == "SD":
                use_sd = True
            elif part in RESTRICTED_TEMPLATES:
                templates.extend(RESTRICTED_TEMPLATES[part])
            else:
                raise ValueError(f"unknown feature model component {part!r}")
        if use_sd and k < 1:
            raise ValueError("SD features require k >= 1")
        return cls(
            name="+".join(parts),
            templates=tuple(templates),
            use_sd=use_sd,
            k=k if use_sd else 0,
            sd_addresses=addresses,
        )

    def needs_supertags(self) -> bool:
        if self.use_sd:
            return True
        return any(
            part.attribute == "bs" for t in self.templates for part in t.parts
        )


def extract_features(
    config,
    sentence,
    model: FeatureModel,
    dictionary: FeatureDictionary,
    pca_model=None,
    inventory=None,
) -> FeatureVector:
    """Full extraction for one configuration under a feature model.

    The value-building fast path avoids the per-component
    :class:`AddressedValue` records; semantics match
    :func:`instantiate` + :func:`assemble` exactly.
    """
    arc_index = _ArcIndex(config.arcs)
    found = []
    for tid, template in enumerate(model.templates):
        vals = []
        for part in template.parts:
            v = _attr_value(
                sentence,
                inventory,
                arc_index,
                _resolve(config, arc_index, part),
                part.attribute,
            )
            vals.append(v if v is not None else NULL_VALUE)
        fid = dictionary.id_for(tid, SEP.join(vals))
        if fid is not None:
            found.append(fid)
    found.sort()
    if model.use_sd:
        if pca_model is None:
            raise ValueError("feature model has SD enabled but no PCA model given")
        dense = extract_sd(config, sentence, pca_model, model.sd_addresses)
    else:
        dense = np.zeros(0)
    return FeatureVector(
        sparse=np.asarray(found, dtype=np.int32), dense=dense
    )

"""Edit tensors built from multilinear basis vectors.

A :class:`SelectorSpec` is a sparse list of weighted terms. First-order
terms broadcast one basis vector along every fiber of its mode; second- and
third-order terms are outer products of basis vectors from different modes,
with an absent mode filled by the ones-vector.

Text form, one term per line::

    order:modes:indices:alpha      e.g.  1:C:3:2.5   3:CHW:0,1,2:-1.0

Indices are zero-based basis-column indices. Blank lines and ``#`` comments
are ignored.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import ContractError, DimensionError
from .tensor import TensorShape3

MODE_LETTERS = "CHW"


@dataclass(frozen=True)
class SelectorTerm:
    modes: Tuple[int, ...]  # zero-based, strictly increasing
    indices: Tuple[int, ...]
    alpha: float

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        indices = tuple(int(i) for i in self.indices)
        if not 1 <= len(modes) <= 3 or len(set(modes)) != len(modes):
            raise ContractError(f"modes must be 1-3 distinct entries, got {modes}")
        if any(m not in (0, 1, 2) for m in modes) or list(modes) != sorted(modes):
            raise ContractError(f"modes must be sorted channel < height < width, got {modes}")
        if len(indices) != len(modes):
            raise ContractError(f"{len(modes)} modes but {len(indices)} indices")
        if any(i < 0 for i in indices):
            raise ContractError(f"negative basis index in {indices}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def order(self):
        return len(self.modes)

    @property
    def key(self):
        return (self.order, self.modes, self.indices)

    @classmethod
    def parse(cls, line):
        parts = line.strip().split(":")
        if len(parts) != 4:
            raise ContractError(f"selector term {line!r} is not order:modes:indices:alpha")
        order_s, letters, idx_s, alpha_s = parts
        try:
            order = int(order_s)
            modes = tuple(MODE_LETTERS.index(ch) for ch in letters.strip().upper())
            indices = tuple(int(i) for i in idx_s.split(","))
            alpha = float(alpha_s)
        except ValueError as exc:
            raise ContractError(f"malformed selector term {line!r}: {exc}") from None
        if order != len(modes):
            raise ContractError(f"order {order} disagrees with modes {letters!r}")
        return cls(modes, indices, alpha)

    def format(self):
        letters = "".join(MODE_LETTERS[m] for m in self.modes)
        return f"{self.order}:{letters}:{','.join(map(str, self.indices))}:{self.alpha!r}"


@dataclass(frozen=True)
class SelectorSpec:
    """Terms with duplicate ``(order, modes, indices)`` merged by summing weights."""

    terms: Tuple[SelectorTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        merged = {}
        for t in self.terms:
            merged[t.key] = merged.get(t.key, 0.0) + t.alpha
        terms = tuple(SelectorTerm(k[1], k[2], a) for k, a in merged.items())
        object.__setattr__(self, "terms", terms)

    @classmethod
    def parse(cls, text):
        lines = (ln.split("#", 1)[0].strip() for ln in text.splitlines())
        return cls(tuple(SelectorTerm.parse(ln) for ln in lines if ln))

    def format(self):
        return "".join(t.format() + "\n" for t in self.terms)

    def scaled(self, factor):
        return SelectorSpec(tuple(SelectorTerm(t.modes, t.indices, factor * t.alpha)
                                  for t in self.terms))

    def by_order(self, order):
        return SelectorSpec(tuple(t for t in self.terms if t.order == order))

    def __len__(self):
        return len(self.terms)


def _factor_vectors(term, basis, shape):
    shape = TensorShape3.of(shape)
    if tuple(basis.shape) != tuple(shape):
        raise DimensionError(f"basis shape {tuple(basis.shape)} != edit shape {tuple(shape)}")
    vecs = [np.ones(extent) for extent in shape]
    for mode, index in zip(term.modes, term.indices):
        u = basis.factors[mode].U
        if index >= u.shape[1]:
            raise ContractError(
                f"index {index} out of range for {MODE_LETTERS[mode]} basis with {u.shape[1]} columns"
            )
        vecs[mode] = u[:, index]
    return vecs


def _outer(term, basis, shape):
    u, v, w = _factor_vectors(term, basis, shape)
    return term.alpha * (u[:, None, None] * v[None, :, None] * w[None, None, :])


def build_first_order(term, basis, shape):
    """``alpha * u_i`` broadcast along every other mode (``S_n x_n U^(n)``)."""
    if term.order != 1:
        raise ContractError(f"first-order builder got an order-{term.order} term")
    return _outer(term, basis, shape)


def build_interaction(term, basis, shape):
    """Rank-1 mixing term: outer product of the selected basis vectors.

    Second-order terms are replicated along the unlisted mode.
    """
    if term.order not in (2, 3):
        raise ContractError(f"interaction builder got an order-{term.order} term")
    return _outer(term, basis, shape)


def build_term(term, basis, shape):
    return build_first_order(term, basis, shape) if term.order == 1 else \
        build_interaction(term, basis, shape)


def assemble_edit_tensor(spec, basis, shape=None):
    """Sum of all terms of ``spec``, accumulated in term order."""
    shape = TensorShape3.of(basis.shape if shape is None else shape)
    out = np.zeros(shape)
    for term in spec.terms:
        out += build_term(term, basis, shape)
    return out

"""Generalized memory polynomial (GMP) basis, model, least-squares fit and text I/O.

Term order is canonical everywhere: all a-terms (p ascending, then lag),
then b-terms (p, lag, shift), then c-terms (p, lag, shift). The same basis
serves the PA model and the receiver-side feature extractor.
"""

from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from blindeq.core.exceptions import ConfigurationError, InvalidParameterError, RankDeficientError
from blindeq.dsp.signal import ComplexSignal

TermKind = Literal["a", "b", "c"]
Term = tuple[TermKind, int, int, int]

GMP_TEXT_HEADER = "# blindeq gmp v1: kind p l m re im"


class GmpIndexSets(BaseModel):
    """Orders, lags and cross-term shifts of a GMP.

    ``a_lags[p]`` is the lag set of the aligned term x[k-l]|x[k-l]|^(p-1);
    ``b_lags[p]`` with ``b_shifts`` the lagging envelope x[k-l]|x[k-l-m]|^(p-1);
    ``c_lags[p]`` with ``c_shifts`` the leading envelope x[k-l]|x[k-l+m]|^(p-1).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    a_lags: dict[int, tuple[int, ...]]
    b_lags: dict[int, tuple[int, ...]] = {}
    b_shifts: tuple[int, ...] = ()
    c_lags: dict[int, tuple[int, ...]] = {}
    c_shifts: tuple[int, ...] = ()

    @field_validator("a_lags", "b_lags", "c_lags", mode="before")
    @classmethod
    def normalize_lags(cls, v: Any) -> dict[int, tuple[int, ...]]:
        if v is None:
            return {}
        out = {int(p): tuple(sorted({int(l) for l in lags})) for p, lags in dict(v).items()}
        return {p: out[p] for p in sorted(out)}

    @model_validator(mode="after")
    def validate_orders(self) -> "GmpIndexSets":
        for table in (self.a_lags, self.b_lags, self.c_lags):
            for p, lags in table.items():
                if p < 1:
                    raise ValueError(f"nonlinear orders must be >= 1, got {p}")
                if not lags:
                    raise ValueError(f"order {p} has an empty lag set")
        if self.b_lags and not self.b_shifts:
            raise ValueError("b-terms need at least one shift")
        if self.c_lags and not self.c_shifts:
            raise ValueError("c-terms need at least one shift")
        return self

    @classmethod
    def uniform(
        cls,
        orders_a: list[int],
        lags_a: list[int],
        orders_b: list[int] | None = None,
        lags_b: list[int] | None = None,
        shifts_b: list[int] | None = None,
        orders_c: list[int] | None = None,
        lags_c: list[int] | None = None,
        shifts_c: list[int] | None = None,
    ) -> "GmpIndexSets":
        """Build index sets where every order shares one lag set per term family."""
        return cls(
            a_lags={p: tuple(lags_a) for p in orders_a},
            b_lags={p: tuple(lags_b or ()) for p in orders_b or []},
            b_shifts=tuple(shifts_b or ()),
            c_lags={p: tuple(lags_c or ()) for p in orders_c or []},
            c_shifts=tuple(shifts_c or ()),
        )

    @property
    def is_memory_polynomial(self) -> bool:
        return not self.b_lags and not self.c_lags

    def terms(self) -> list[Term]:
        out: list[Term] = []
        for p, lags in self.a_lags.items():
            out.extend(("a", p, l, 0) for l in lags)
        for p, lags in self.b_lags.items():
            out.extend(("b", p, l, m) for l in lags for m in self.b_shifts)
        for p, lags in self.c_lags.items():
            out.extend(("c", p, l, m) for l in lags for m in self.c_shifts)
        return out

    def expected_size(self) -> int:
        """Closed-form term count; must equal len(terms())."""
        return (
            sum(len(lags) for lags in self.a_lags.values())
            + sum(len(lags) for lags in self.b_lags.values()) * len(self.b_shifts)
            + sum(len(lags) for lags in self.c_lags.values()) * len(self.c_shifts)
        )

    @property
    def size(self) -> int:
        return self.expected_size()

    def index_of(self, term: Term) -> int:
        return self.terms().index(term)

    def max_shift(self) -> int:
        """Largest |sample offset| any term touches."""
        reach = [abs(l) for lags in self.a_lags.values() for l in lags]
        for lags_table, shifts in ((self.b_lags, self.b_shifts), (self.c_lags, self.c_shifts)):
            for lags in lags_table.values():
                reach.extend(abs(l) + abs(m) for l in lags for m in shifts)
        return max(reach) if reach else 0


def _envelope_offset(kind: TermKind, l: int, m: int) -> int:
    # Sample offset d of the envelope sample x[k - d].
    if kind == "a":
        return l
    if kind == "b":
        return l + m
    return l - m


def gmp_basis(x: np.ndarray, index_sets: GmpIndexSets, rows: np.ndarray | None = None) -> np.ndarray:
    """Regressor matrix of shape (len(rows), n_terms); samples outside ``x`` count as zero."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    rows = np.arange(n) if rows is None else np.asarray(rows, dtype=np.int64)
    pad = index_sets.max_shift()
    xp = np.concatenate([np.zeros(pad, dtype=np.complex128), x, np.zeros(pad, dtype=np.complex128)])
    mag = np.abs(xp)

    def at(d: int) -> np.ndarray:
        return rows - d + pad

    out = np.empty((rows.size, index_sets.size), dtype=np.complex128)
    for j, (kind, p, l, m) in enumerate(index_sets.terms()):
        carrier = xp[at(l)]
        if p == 1:
            out[:, j] = carrier
        else:
            out[:, j] = carrier * mag[at(_envelope_offset(kind, l, m))] ** (p - 1)
    return out


def mp_term(u: np.ndarray, p: int) -> np.ndarray:
    """u |u|^(p-1)."""
    if p == 1:
        return u.copy()
    return u * np.abs(u) ** (p - 1)


def mp_term_wirtinger(u: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Wirtinger derivatives (d/du, d/du*) of u |u|^(p-1)."""
    mag = np.abs(u)
    if p == 1:
        return np.ones_like(u), np.zeros_like(u)
    d_u = (p + 1) / 2.0 * mag ** (p - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        d_conj = np.where(mag > 0, (p - 1) / 2.0 * u**2 * mag ** (p - 3.0), 0.0)
    return d_u.astype(np.complex128), d_conj.astype(np.complex128)


class GmpModel(BaseModel):
    """Index sets plus one complex coefficient per canonical term."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    index_sets: GmpIndexSets
    coeffs: Any

    @field_validator("coeffs", mode="before")
    @classmethod
    def validate_coeffs(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.complex128).reshape(-1)

    @model_validator(mode="after")
    def validate_size(self) -> "GmpModel":
        if self.coeffs.size != self.index_sets.size:
            raise ValueError(f"expected {self.index_sets.size} coefficients, got {self.coeffs.size}")
        return self

    @classmethod
    def from_terms(cls, index_sets: GmpIndexSets, values: dict[Term, complex]) -> "GmpModel":
        terms = index_sets.terms()
        coeffs = np.zeros(len(terms), dtype=np.complex128)
        for term, value in values.items():
            if term not in terms:
                raise InvalidParameterError(f"term {term} is not in the declared index sets")
            coeffs[terms.index(term)] = value
        return cls(index_sets=index_sets, coeffs=coeffs)

    def _family(self, kind: TermKind) -> dict[tuple[int, ...], complex]:
        out: dict[tuple[int, ...], complex] = {}
        for (k, p, l, m), c in zip(self.index_sets.terms(), self.coeffs):
            if k == kind:
                out[(p, l) if kind == "a" else (p, l, m)] = complex(c)
        return out

    @property
    def coeffs_a(self) -> dict[tuple[int, ...], complex]:
        return self._family("a")

    @property
    def coeffs_b(self) -> dict[tuple[int, ...], complex]:
        return self._family("b")

    @property
    def coeffs_c(self) -> dict[tuple[int, ...], complex]:
        return self._family("c")

    def taps_by_order(self, lag_span: range) -> dict[int, np.ndarray]:
        """a-term coefficients as dense per-order tap vectors over ``lag_span``."""
        if not self.index_sets.is_memory_polynomial:
            raise InvalidParameterError("tap view needs a memory polynomial (a-terms only)")
        lags = list(lag_span)
        taps = {p: np.zeros(len(lags), dtype=np.complex128) for p in self.index_sets.a_lags}
        for (_, p, l, _), c in zip(self.index_sets.terms(), self.coeffs):
            if l not in lag_span:
                raise InvalidParameterError(f"lag {l} outside span {lag_span}")
            taps[p][lags.index(l)] = c
        return taps


def gmp_apply(input: ComplexSignal, model: GmpModel) -> ComplexSignal:
    """Evaluate the GMP on every sample of ``input``."""
    return input.replace(gmp_basis(input.samples, model.index_sets) @ model.coeffs)


def gmp_fit(input: ComplexSignal, output: ComplexSignal, index_sets: GmpIndexSets) -> GmpModel:
    """Least-squares GMP coefficients mapping ``input`` to ``output``."""
    if len(input) != len(output):
        raise InvalidParameterError(
            f"input and output lengths differ ({len(input)} vs {len(output)})",
        )
    if len(input) < index_sets.size:
        raise InvalidParameterError(
            f"{len(input)} samples cannot determine {index_sets.size} coefficients",
            {"samples": len(input), "n_coeffs": index_sets.size},
        )
    basis = gmp_basis(input.samples, index_sets)
    coeffs, _, rank, _ = np.linalg.lstsq(basis, output.samples, rcond=None)
    if rank < index_sets.size:
        raise RankDeficientError(int(rank), index_sets.size)
    return GmpModel(index_sets=index_sets, coeffs=coeffs)


def save_gmp_text(model: GmpModel, path: Path) -> None:
    """One line per term: ``kind p l m re im``."""
    lines = [GMP_TEXT_HEADER]
    for (kind, p, l, m), c in zip(model.index_sets.terms(), model.coeffs):
        lines.append(f"{kind} {p} {l} {m} {c.real:.17g} {c.imag:.17g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_gmp_text(path: Path) -> GmpModel:
    a_lags: dict[int, list[int]] = {}
    b_lags: dict[int, list[int]] = {}
    c_lags: dict[int, list[int]] = {}
    b_shifts: list[int] = []
    c_shifts: list[int] = []
    values: dict[Term, complex] = {}

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6 or parts[0] not in ("a", "b", "c"):
            raise ConfigurationError(f"{path}: malformed GMP line", line=lineno)
        try:
            p, l, m = (int(v) for v in parts[1:4])
            value = complex(float(parts[4]), float(parts[5]))
        except ValueError as e:
            raise ConfigurationError(f"{path}: {e}", line=lineno) from e
        kind: TermKind = parts[0]  # type: ignore[assignment]
        table = {"a": a_lags, "b": b_lags, "c": c_lags}[kind]
        if l not in table.setdefault(p, []):
            table[p].append(l)
        if kind == "b" and m not in b_shifts:
            b_shifts.append(m)
        if kind == "c" and m not in c_shifts:
            c_shifts.append(m)
        values[(kind, p, l, m)] = value

    try:
        index_sets = GmpIndexSets(
            a_lags=a_lags, b_lags=b_lags, b_shifts=tuple(sorted(b_shifts)),
            c_lags=c_lags, c_shifts=tuple(sorted(c_shifts)),
        )
    except ValueError as e:
        raise ConfigurationError(f"{path}: inconsistent index sets: {e}") from e
    if index_sets.size != len(values):
        raise ConfigurationError(
            f"{path}: {len(values)} terms do not form a full index-set product ({index_sets.size})",
        )
    return GmpModel.from_terms(index_sets, values)

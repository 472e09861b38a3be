"""Local Hamiltonians as sums of row-sparse terms with norm bounds.

A Hamiltonian on n qubits is a list of local terms, each either a real
coefficient times a Pauli string or a dense Hermitian block on a few qubits.
Every term embeds into the full 2^n dimension as a row-query handle that never
materializes the big matrix: a Pauli term is a signed permutation (one nonzero
per row), a k-qubit block has at most 2^k nonzeros per row.

Qubit convention is little-endian: qubit q corresponds to bit q of the basis
index, and the leftmost character of a Pauli string acts on qubit 0.
"""

import json
import math
import os
import re

import numpy as np

from .errors import (
    DenseLimitError,
    HamiltonianFormatError,
    ValidationError,
    ZeroKappaError,
)

# Dense eigendecomposition of a single term is allowed up to this many qubits.
DENSE_TERM_LIMIT = 12

_PAULI_CHARS = "IXYZ"


class LocalTerm:
    """One term of a local Hamiltonian.

    Exactly one of the two shapes is populated:
      * pauli: real coefficient times a length-n string over I, X, Y, Z;
      * block: dense Hermitian 2^k x 2^k matrix acting on `support`.

    kappa_override, when given, replaces the computed spectral norm as the
    term's norm bound; it may only loosen the bound, never undercut it.
    """

    __slots__ = ("support", "block", "pauli", "coeff", "kappa_override")

    def __init__(self, support, block, pauli, coeff, kappa_override=None):
        self.support = tuple(support)
        self.block = block
        self.pauli = pauli
        self.coeff = coeff
        self.kappa_override = kappa_override

    @classmethod
    def from_pauli(cls, coeff, string, kappa=None):
        coeff = float(coeff)
        for ch in string:
            if ch not in _PAULI_CHARS:
                raise HamiltonianFormatError(
                    f"unexpected character {ch!r} in Pauli string", field="pauli"
                )
        support = tuple(q for q, ch in enumerate(string) if ch != "I")
        if kappa is not None:
            kappa = _check_kappa_override(kappa, abs(coeff))
        return cls(support, None, string, coeff, kappa)

    @classmethod
    def from_block(cls, qubits, block, kappa=None):
        qubits = tuple(int(q) for q in qubits)
        if len(set(qubits)) != len(qubits):
            raise ValidationError(f"duplicate qubits in block support {qubits}")
        if any(q < 0 for q in qubits):
            raise ValidationError(f"negative qubit index in support {qubits}")
        k = len(qubits)
        block = np.asarray(block, dtype=complex)
        if block.shape != (2**k, 2**k):
            raise ValidationError(
                f"block on {k} qubits must be {2**k}x{2**k}, got {block.shape}"
            )
        herm_gap = np.max(np.abs(block - block.conj().T)) if block.size else 0.0
        if herm_gap > 1e-10:
            raise ValidationError(
                f"block on qubits {qubits} is not Hermitian "
                f"(max |B - B*| = {herm_gap:.3e})"
            )
        block = block.copy()
        block.flags.writeable = False
        if kappa is not None and k <= DENSE_TERM_LIMIT:
            kappa = _check_kappa_override(kappa, float(np.linalg.norm(block, 2)))
        elif kappa is not None:
            kappa = float(kappa)
        return cls(qubits, block, None, 1.0, kappa)

    @property
    def is_pauli(self):
        return self.pauli is not None

    def __repr__(self):
        if self.is_pauli:
            return f"LocalTerm({self.coeff!r} * {self.pauli!r})"
        return f"LocalTerm(block on qubits {self.support})"


def _check_kappa_override(kappa, norm):
    kappa = float(kappa)
    if kappa < norm - 1e-9:
        raise ValidationError(
            f"norm bound override {kappa} is below the term norm {norm}"
        )
    return kappa


def compute_term_norm(term, dense_limit=DENSE_TERM_LIMIT):
    """Spectral norm of a single term.

    |coefficient| for a Pauli term; the largest singular value of the dense
    block otherwise. Blocks beyond `dense_limit` qubits are refused.
    """
    if term.is_pauli:
        return abs(term.coeff)
    k = len(term.support)
    if k > dense_limit:
        raise DenseLimitError(
            f"term acts on {k} qubits; dense norm limited to {dense_limit}"
        )
    return float(np.linalg.norm(term.block, 2))


class SparseTermHandle:
    """Row-query access to one N x N term.

    Subclasses fill in dimension, sparsity (a bound on nonzeros per row) and
    the two row queries. Handles are immutable and queries are pure.
    """

    dimension = None
    sparsity = None

    # Set on signed-permutation handles (exactly one nonzero per row with
    # column = row XOR perm_xmask and value = perm_phase * (-1)^parity(row &
    # perm_signmask)); the vectorized chain tracer keys off these.
    perm_xmask = None
    perm_signmask = None
    perm_phase = None

    def row_nnz(self, i):
        raise NotImplementedError

    def row_entry(self, i, ell):
        raise NotImplementedError

    def row(self, i):
        """Iterate (column, value) pairs of row i."""
        for ell in range(self.row_nnz(i)):
            yield self.row_entry(i, ell)


def _parity(v):
    """Parity of the set bits of v (int or uint64 ndarray)."""
    v = v ^ (v >> 32)
    v = v ^ (v >> 16)
    v = v ^ (v >> 8)
    v = v ^ (v >> 4)
    v = v ^ (v >> 2)
    v = v ^ (v >> 1)
    return v & 1


class PauliTermHandle(SparseTermHandle):
    """Signed-permutation handle for coeff times a Pauli string."""

    def __init__(self, string, coeff, n):
        if len(string) != n:
            raise ValidationError(
                f"Pauli string length {len(string)} does not match n={n}"
            )
        self.n = n
        self.dimension = 2**n
        self.string = string
        self.coeff = float(coeff)
        xmask = zmask = ymask = 0
        for q, ch in enumerate(string):
            bit = 1 << q
            if ch == "X":
                xmask |= bit
            elif ch == "Y":
                xmask |= bit
                ymask |= bit
            elif ch == "Z":
                zmask |= bit
            elif ch != "I":
                raise ValidationError(f"unexpected character {ch!r} in Pauli string")
        ny = bin(ymask).count("1")
        phase = complex(self.coeff) * (-1j) ** ny
        self.perm_xmask = xmask
        self.perm_signmask = zmask | ymask
        self.perm_phase = phase
        self.sparsity = 1

    def row_nnz(self, i):
        return 1 if self.perm_phase != 0 else 0

    def row_entry(self, i, ell):
        if ell != 0 or self.perm_phase == 0:
            raise IndexError(f"row {i} has no entry {ell}")
        sign = -1.0 if _parity(i & self.perm_signmask) else 1.0
        return i ^ self.perm_xmask, self.perm_phase * sign


class IdentityHandle(SparseTermHandle):
    """scale times the identity, as a 1-sparse diagonal handle."""

    def __init__(self, dimension, scale=1.0):
        self.dimension = dimension
        self.scale = complex(scale)
        self.sparsity = 1
        self.perm_xmask = 0
        self.perm_signmask = 0
        self.perm_phase = self.scale

    def row_nnz(self, i):
        return 1 if self.scale != 0 else 0

    def row_entry(self, i, ell):
        if ell != 0 or self.scale == 0:
            raise IndexError(f"row {i} has no entry {ell}")
        return i, self.scale


class BlockTermHandle(SparseTermHandle):
    """Embedding of a dense k-qubit block into the full 2^n dimension.

    Row i touches only columns that agree with i outside the support, so the
    handle answers queries from the precomputed nonzero pattern of the small
    block without ever forming the Kronecker product.
    """

    def __init__(self, term, n):
        support = term.support
        k = len(support)
        if any(q >= n for q in support):
            raise ValidationError(
                f"support {support} does not fit in {n} qubits"
            )
        self.n = n
        self.dimension = 2**n
        self.support = support
        self.block = term.block
        # scatter[b] = bits of the small index b placed at the support qubits
        scatter = np.zeros(2**k, dtype=np.int64)
        for b in range(2**k):
            pos = 0
            for p, q in enumerate(support):
                if (b >> p) & 1:
                    pos |= 1 << q
            scatter[b] = pos
        self._scatter = scatter
        self._support_mask = int(scatter[-1]) if k else 0
        rows_cols = []
        rows_vals = []
        for a in range(2**k):
            nz = np.nonzero(term.block[a])[0]
            rows_cols.append(nz)
            rows_vals.append(term.block[a, nz])
        self._rows_cols = rows_cols
        self._rows_vals = rows_vals
        self.sparsity = max((len(c) for c in rows_cols), default=0)

    def _small_row(self, i):
        a = 0
        for p, q in enumerate(self.support):
            if (i >> q) & 1:
                a |= 1 << p
        return a

    def row_nnz(self, i):
        return len(self._rows_cols[self._small_row(i)])

    def row_entry(self, i, ell):
        a = self._small_row(i)
        cols = self._rows_cols[a]
        if ell >= len(cols):
            raise IndexError(f"row {i} has no entry {ell}")
        col = (i & ~self._support_mask) | int(self._scatter[cols[ell]])
        return col, complex(self._rows_vals[a][ell])


class ScaledTermHandle(SparseTermHandle):
    """A handle times a scalar factor."""

    def __init__(self, inner, factor):
        self.inner = inner
        self.factor = complex(factor)
        self.dimension = inner.dimension
        self.sparsity = inner.sparsity
        if inner.perm_xmask is not None:
            self.perm_xmask = inner.perm_xmask
            self.perm_signmask = inner.perm_signmask
            self.perm_phase = inner.perm_phase * self.factor

    def row_nnz(self, i):
        return self.inner.row_nnz(i)

    def row_entry(self, i, ell):
        col, val = self.inner.row_entry(i, ell)
        return col, val * self.factor


class ExplicitSparseHandle(SparseTermHandle):
    """Handle over explicit per-row (columns, values) data."""

    def __init__(self, rows, dimension=None):
        self._rows = [
            (np.asarray(cols, dtype=np.int64), np.asarray(vals, dtype=complex))
            for cols, vals in rows
        ]
        self.dimension = dimension if dimension is not None else len(self._rows)
        if len(self._rows) != self.dimension:
            raise ValidationError("row data does not cover the stated dimension")
        self.sparsity = max((len(c) for c, _ in self._rows), default=0)

    def row_nnz(self, i):
        return len(self._rows[i][0])

    def row_entry(self, i, ell):
        cols, vals = self._rows[i]
        if ell >= len(cols):
            raise IndexError(f"row {i} has no entry {ell}")
        return int(cols[ell]), complex(vals[ell])


def term_to_sparse(term, n):
    """Embed one local term into the full 2^n dimension as a row handle."""
    if term.is_pauli:
        return PauliTermHandle(term.pauli, term.coeff, n)
    return BlockTermHandle(term, n)


class Decomposition:
    """A matrix as a sum of row-sparse terms with per-term norm bounds.

    kappa_i[i] upper-bounds the spectral norm of term i, kappa is their sum,
    and s is the largest per-row nonzero count over the terms.
    """

    def __init__(self, terms, kappa_i):
        terms = list(terms)
        kappa_i = [float(k) for k in kappa_i]
        if len(terms) != len(kappa_i):
            raise ValidationError("one norm bound per term required")
        if any(k < 0 for k in kappa_i):
            raise ValidationError("norm bounds must be nonnegative")
        dims = {t.dimension for t in terms}
        if len(dims) > 1:
            raise ValidationError(f"terms disagree on dimension: {sorted(dims)}")
        self.terms = terms
        self.kappa_i = kappa_i
        self.kappa = float(sum(kappa_i))
        self.s = max((t.sparsity for t in terms), default=0)
        self.dimension = dims.pop() if dims else 0

    @property
    def m(self):
        return len(self.terms)

    def __repr__(self):
        return (
            f"Decomposition(m={self.m}, s={self.s}, kappa={self.kappa:.6g}, "
            f"N={self.dimension})"
        )


def build_decomposition(n, local_terms, dense_limit=DENSE_TERM_LIMIT):
    """Embed local terms on n qubits into a Decomposition.

    Norm bounds are the exact per-term spectral norms unless a term carries an
    override (which has already been validated to dominate the norm).
    """
    handles = []
    bounds = []
    for idx, term in enumerate(local_terms):
        try:
            handles.append(term_to_sparse(term, n))
        except ValidationError as exc:
            raise ValidationError(f"term {idx}: {exc}") from None
        if term.kappa_override is not None:
            bounds.append(term.kappa_override)
        else:
            bounds.append(compute_term_norm(term, dense_limit))
    return Decomposition(handles, bounds)


def shift_rescale(decomp):
    """Decomposition of (I + A/kappa)/2, whose spectrum lies in [0, 1].

    Keeps each original term scaled by 1/(2 kappa) and adds the identity as
    its own 1-sparse term with bound 1/2; the new bounds sum to 1.
    """
    if decomp.kappa <= 0:
        raise ZeroKappaError("shift/rescale requires kappa > 0")
    half = 1.0 / (2.0 * decomp.kappa)
    terms = [IdentityHandle(decomp.dimension, 0.5)]
    bounds = [0.5]
    for handle, ki in zip(decomp.terms, decomp.kappa_i):
        terms.append(ScaledTermHandle(handle, half))
        bounds.append(ki * half)
    return Decomposition(terms, bounds)


# ---------------------------------------------------------------------------
# File formats


def load_hamiltonian(source):
    """Parse a Hamiltonian from a file path or raw text.

    Text format: one header line ``n=<int>``, then per line either
    ``<coeff> <IXYZ string>`` or ``BLOCK q=<comma list> <re,im pairs>``,
    each optionally suffixed ``KAPPA_I=<real>``; ``#`` starts a comment.
    Files named ``*.json`` (or text whose first character is ``{``) use the
    JSON equivalent. Returns (n, list of LocalTerm).
    """
    text, is_json = _read_source(source)
    if is_json:
        return _load_json(text)
    return _load_text(text)


def _read_source(source):
    source = os.fspath(source) if hasattr(source, "__fspath__") else source
    if isinstance(source, str) and "\n" not in source and os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
        return text, source.endswith(".json")
    if not isinstance(source, str):
        raise HamiltonianFormatError(f"cannot read Hamiltonian from {type(source)}")
    stripped = source.lstrip()
    return source, stripped.startswith("{")


def _load_text(text):
    n = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            match = re.fullmatch(r"n\s*=\s*([0-9]+)", line)
            if match is None:
                raise HamiltonianFormatError(
                    f"expected header 'n=<int>', got {line!r}", line=lineno
                )
            n = int(match.group(1))
            if n < 1:
                raise HamiltonianFormatError("qubit count must be >= 1", line=lineno)
            continue
        tokens = line.split()
        kappa = None
        if tokens and tokens[-1].startswith("KAPPA_I="):
            kappa = _parse_real(tokens[-1][len("KAPPA_I="):], lineno, "KAPPA_I")
            tokens = tokens[:-1]
        try:
            if tokens and tokens[0] == "BLOCK":
                terms.append(_parse_block_line(tokens, n, lineno, kappa))
            else:
                terms.append(_parse_pauli_line(tokens, n, lineno, kappa))
        except (ValidationError, HamiltonianFormatError) as exc:
            if isinstance(exc, HamiltonianFormatError) and exc.line is not None:
                raise
            raise HamiltonianFormatError(str(exc), line=lineno) from None
    if n is None:
        raise HamiltonianFormatError("empty input: missing 'n=<int>' header")
    return n, terms


def _parse_real(token, lineno, field):
    try:
        value = float(token)
    except ValueError:
        raise HamiltonianFormatError(
            f"expected a real number for {field}, got {token!r}",
            line=lineno,
            field=field,
        ) from None
    if not math.isfinite(value):
        raise HamiltonianFormatError(
            f"{field} must be finite, got {token!r}", line=lineno, field=field
        )
    return value


def _parse_pauli_line(tokens, n, lineno, kappa):
    if len(tokens) != 2:
        raise HamiltonianFormatError(
            f"expected '<coeff> <Pauli string>', got {' '.join(tokens)!r}",
            line=lineno,
        )
    coeff = _parse_real(tokens[0], lineno, "coefficient")
    string = tokens[1]
    if len(string) != n:
        raise HamiltonianFormatError(
            f"Pauli string {string!r} has length {len(string)}, expected n={n}",
            line=lineno,
        )
    for ch in string:
        if ch not in _PAULI_CHARS:
            raise HamiltonianFormatError(
                f"unexpected character {ch!r} in Pauli string {string!r}",
                line=lineno,
                field="pauli",
            )
    return LocalTerm.from_pauli(coeff, string, kappa)


def _parse_block_line(tokens, n, lineno, kappa):
    if len(tokens) < 2 or not tokens[1].startswith("q="):
        raise HamiltonianFormatError(
            "BLOCK line must start 'BLOCK q=<comma list>'", line=lineno
        )
    try:
        qubits = [int(part) for part in tokens[1][2:].split(",") if part != ""]
    except ValueError:
        raise HamiltonianFormatError(
            f"bad qubit list {tokens[1]!r}", line=lineno, field="qubits"
        ) from None
    if not qubits:
        raise HamiltonianFormatError("BLOCK needs at least one qubit", line=lineno)
    if any(q < 0 or q >= n for q in qubits):
        raise HamiltonianFormatError(
            f"qubit list {qubits} outside [0, {n})", line=lineno, field="qubits"
        )
    k = len(qubits)
    expected = 4**k
    raw_entries = tokens[2:]
    if len(raw_entries) != expected:
        raise HamiltonianFormatError(
            f"block on {k} qubits needs {expected} re,im entries, "
            f"got {len(raw_entries)}",
            line=lineno,
        )
    values = []
    for token in raw_entries:
        parts = token.split(",")
        if len(parts) != 2:
            raise HamiltonianFormatError(
                f"expected 're,im' pair, got {token!r}", line=lineno
            )
        values.append(
            complex(
                _parse_real(parts[0], lineno, "block entry"),
                _parse_real(parts[1], lineno, "block entry"),
            )
        )
    block = np.array(values, dtype=complex).reshape(2**k, 2**k)
    return LocalTerm.from_block(qubits, block, kappa)


def _load_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HamiltonianFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict) or "n" not in data or "terms" not in data:
        raise HamiltonianFormatError("JSON Hamiltonian needs 'n' and 'terms'")
    n = data["n"]
    if not isinstance(n, int) or n < 1:
        raise HamiltonianFormatError(f"'n' must be a positive integer, got {n!r}")
    terms = []
    for idx, entry in enumerate(data["terms"]):
        if not isinstance(entry, dict):
            raise HamiltonianFormatError(f"term {idx} is not an object")
        kappa = entry.get("kappa")
        try:
            if "pauli" in entry:
                string = entry["pauli"]
                if not isinstance(string, str) or len(string) != n:
                    raise HamiltonianFormatError(
                        f"term {idx}: Pauli string must have length n={n}"
                    )
                terms.append(
                    LocalTerm.from_pauli(entry.get("coeff", 1.0), string, kappa)
                )
            elif "block" in entry:
                block = _json_block(entry["block"], idx)
                terms.append(
                    LocalTerm.from_block(entry.get("qubits", []), block, kappa)
                )
            else:
                raise HamiltonianFormatError(
                    f"term {idx} needs either 'pauli' or 'qubits'+'block'"
                )
        except ValidationError as exc:
            raise HamiltonianFormatError(f"term {idx}: {exc}") from None
        if terms[-1].is_pauli is False and any(
            q >= n for q in terms[-1].support
        ):
            raise HamiltonianFormatError(
                f"term {idx}: qubits {terms[-1].support} outside [0, {n})"
            )
    return n, terms


def _json_block(rows, idx):
    def scalar(entry):
        if isinstance(entry, (int, float)):
            return complex(entry)
        if isinstance(entry, list) and len(entry) == 2:
            return complex(entry[0], entry[1])
        raise HamiltonianFormatError(
            f"term {idx}: block entries must be numbers or [re, im] pairs"
        )

    return [[scalar(entry) for entry in row] for row in rows]

"""Finite fields GF(2^m) and GF(p), matrix rank, and RLNC decodability.

Elements are plain ints in ``range(q)``. Binary extension fields encode a
polynomial over GF(2) as a bitmask (bit i is the coefficient of x^i).
Multiplication goes through log/antilog tables; ``clmul_mod`` is the
table-free shift-and-xor reference.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _backend

__all__ = [
    "DivisionByZero",
    "Unrepresentable",
    "FieldSpec",
    "GfMatrix",
    "field",
    "is_prime",
    "is_irreducible",
    "default_polynomial",
    "clmul_mod",
    "rank",
    "batch_rank",
    "random_matrices",
    "full_rank_prob_exact",
    "decode_prob_paper",
    "decode_prob_mc",
    "McEstimate",
]

MAX_ORDER = 1 << 16


class DivisionByZero(ZeroDivisionError):
    pass


class Unrepresentable(ArithmeticError):
    """A closed form evaluated to something that is not a probability."""

    def __init__(self, value, message=None):
        self.value = value
        super().__init__(message or f"value {value} is outside [0, 1]")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _prime_factors(n):
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def _degree(poly: int) -> int:
    return poly.bit_length() - 1


def _poly_mod(a: int, m: int) -> int:
    dm = _degree(m)
    while a and _degree(a) >= dm:
        a ^= m << (_degree(a) - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Exhaustive divisor check over GF(2)[x]."""
    m = _degree(poly)
    if m < 1:
        return False
    for d in range(1, m // 2 + 1):
        for divisor in range(1 << d, 1 << (d + 1)):
            if _poly_mod(poly, divisor) == 0:
                return False
    return True


@functools.lru_cache(maxsize=None)
def default_polynomial(m: int) -> int:
    """Lexicographically smallest irreducible polynomial of degree ``m``."""
    for poly in range(1 << m, 1 << (m + 1)):
        if is_irreducible(poly):
            return poly
    raise AssertionError("unreachable: irreducibles exist in every degree")


def clmul_mod(a: int, b: int, poly: int) -> int:
    """Carry-less product of ``a`` and ``b`` reduced modulo ``poly``."""
    m = _degree(poly)
    top = 1 << m
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return out


class FieldSpec:
    """GF(q) for q = 2^m (1 <= m <= 16) or prime q < 2^16.

    Prefer :func:`field`, which caches instances so tables are built once.
    """

    def __init__(self, order: int, reduction_polynomial: int | None = None):
        order = int(order)
        if order < 2 or order > MAX_ORDER:
            raise ValueError(f"field order must be in [2, 2^16], got {order}")
        if order & (order - 1) == 0:
            m = order.bit_length() - 1
            if reduction_polynomial is None:
                reduction_polynomial = default_polynomial(m)
            reduction_polynomial = int(reduction_polynomial)
            if _degree(reduction_polynomial) != m:
                raise ValueError(
                    f"reduction polynomial {reduction_polynomial:#x} does not have degree {m}"
                )
            if not is_irreducible(reduction_polynomial):
                raise ValueError(f"reduction polynomial {reduction_polynomial:#x} is reducible")
            self.binary = True
            self.degree = m
        elif is_prime(order):
            if reduction_polynomial is not None:
                raise ValueError("prime fields take no reduction polynomial")
            self.binary = False
            self.degree = 1
        else:
            raise ValueError(f"unsupported field order {order}: need 2^m or a prime")
        self.order = order
        self.reduction_polynomial = reduction_polynomial
        self._build_tables()

    def __repr__(self):
        if self.binary:
            return f"FieldSpec(order={self.order}, reduction_polynomial={self.reduction_polynomial:#x})"
        return f"FieldSpec(order={self.order})"

    def __eq__(self, other):
        return (isinstance(other, FieldSpec) and self.order == other.order
                and self.reduction_polynomial == other.reduction_polynomial)

    def __hash__(self):
        return hash((self.order, self.reduction_polynomial))

    def _slow_mul(self, a, b):
        if self.binary:
            return clmul_mod(a, b, self.reduction_polynomial) if self.degree > 1 else a & b
        return a * b % self.order

    def _slow_pow(self, a, e):
        out = 1
        while e:
            if e & 1:
                out = self._slow_mul(out, a)
            a = self._slow_mul(a, a)
            e >>= 1
        return out

    def _build_tables(self):
        q1 = self.order - 1
        factors = _prime_factors(q1) if q1 > 1 else []
        gen = next(
            g for g in range(1, self.order)
            if all(self._slow_pow(g, q1 // r) != 1 for r in factors)
        )
        exp = np.empty(3 * q1, dtype=np.int32)
        log = np.zeros(self.order, dtype=np.int32)
        x = 1
        for i in range(q1):
            exp[i] = x
            log[x] = i
            x = self._slow_mul(x, gen)
        exp[q1:2 * q1] = exp[:q1]
        exp[2 * q1:] = exp[:q1]
        exp.setflags(write=False)
        log.setflags(write=False)
        self.generator = gen
        self.exp_table = exp
        self.log_table = log

    def _check(self, a):
        a = int(a)
        if not 0 <= a < self.order:
            raise ValueError(f"{a} is not an element of GF({self.order})")
        return a

    def add(self, a, b):
        a, b = self._check(a), self._check(b)
        return a ^ b if self.binary else (a + b) % self.order

    def sub(self, a, b):
        a, b = self._check(a), self._check(b)
        return a ^ b if self.binary else (a - b) % self.order

    def neg(self, a):
        return self.sub(0, a)

    def mul(self, a, b):
        a, b = self._check(a), self._check(b)
        if a == 0 or b == 0:
            return 0
        return int(self.exp_table[self.log_table[a] + self.log_table[b]])

    def inv(self, a):
        a = self._check(a)
        if a == 0:
            raise DivisionByZero(f"0 has no inverse in GF({self.order})")
        return int(self.exp_table[(self.order - 1) - self.log_table[a]])

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e):
        a = self._check(a)
        if e < 0:
            return self.pow(self.inv(a), -e)
        if a == 0:
            return 1 if e == 0 else 0
        return int(self.exp_table[(int(self.log_table[a]) * e) % (self.order - 1)])


@functools.lru_cache(maxsize=None)
def field(order: int, reduction_polynomial: int | None = None) -> FieldSpec:
    return FieldSpec(order, reduction_polynomial)


def _as_field(spec):
    if isinstance(spec, FieldSpec):
        return spec
    return field(int(spec))


@dataclass(frozen=True)
class GfMatrix:
    entries: np.ndarray
    spec: FieldSpec

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.int64, ndmin=2)
        if arr.ndim != 2:
            raise ValueError("GfMatrix needs a 2-D array")
        if arr.size and (arr.min() < 0 or arr.max() >= self.spec.order):
            raise ValueError(f"entries must lie in [0, {self.spec.order})")
        arr = arr.astype(np.uint16)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]

    def rank(self) -> int:
        return rank(self)


def batch_rank(mats, spec) -> np.ndarray:
    """Ranks of a ``(batch, n, k)`` stack of matrices; input is not modified."""
    spec = _as_field(spec)
    work = np.array(mats, dtype=np.uint16, order="C", copy=True)
    if work.ndim != 3:
        raise ValueError("expected a (batch, rows, cols) array")
    if work.shape[1] == 0 or work.shape[2] == 0:
        return np.zeros(work.shape[0], dtype=np.int32)
    return np.asarray(
        _backend.batch_rank(work, spec.log_table, spec.exp_table, spec.order, spec.binary)
    )


def rank(matrix: GfMatrix, spec: FieldSpec | None = None) -> int:
    """Rank over the matrix's field by Gaussian elimination."""
    if not isinstance(matrix, GfMatrix):
        matrix = GfMatrix(matrix, _as_field(spec))
    return int(batch_rank(matrix.entries[None], matrix.spec)[0])


def random_matrices(rng: np.random.Generator, count: int, n: int, k: int, spec) -> np.ndarray:
    """``count`` uniformly random ``n x k`` coefficient matrices."""
    spec = _as_field(spec)
    return rng.integers(0, spec.order, size=(count, n, k), dtype=np.uint16)


def full_rank_prob_exact(n_received: int, k: int, spec) -> float:
    """P(a uniformly random ``n_received x k`` matrix over GF(q) has rank k).

    ``spec`` may be a FieldSpec, an int order, or ``None`` for an ideal decoder
    (q -> infinity: decodable iff at least k packets arrive).
    """
    n, k = int(n_received), int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        return 0.0
    if spec is None:
        return 1.0
    q = spec.order if isinstance(spec, FieldSpec) else int(spec)
    if q < 2:
        raise ValueError("field order must be >= 2")
    log_p = math.fsum(math.log1p(-(float(q) ** (i - n))) for i in range(k))
    return math.exp(log_p)


def decode_prob_paper(n: int, k: int, spec) -> Fraction:
    """The printed closed form for P_dec(N, K, q), evaluated exactly.

    sum_{j=0}^{N-K} (-1)^j C(N, j) prod_{i=0}^{K-1} (q^N - q^i) / (q^K - 1)^N

    The product does not involve j. Raises Unrepresentable, carrying the exact
    value, when the result is not in [0, 1].
    """
    n, k = int(n), int(k)
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    q = spec.order if isinstance(spec, FieldSpec) else int(spec)
    alternating = sum((-1) ** j * math.comb(n, j) for j in range(n - k + 1))
    product = math.prod(q**n - q**i for i in range(k))
    value = Fraction(alternating * product, (q**k - 1) ** n)
    if not 0 <= value <= 1:
        raise Unrepresentable(value)
    return value


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    trials: int


def decode_prob_mc(n: int, k: int, spec, trials: int, seed, chunk: int = 1 << 15) -> McEstimate:
    """Fraction of random ``n x k`` matrices with full column rank."""
    spec = _as_field(spec)
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        ranks = batch_rank(random_matrices(rng, m, n, k, spec), spec)
        hits += int(np.count_nonzero(ranks == k))
        done += m
    p = hits / trials
    return McEstimate(p, math.sqrt(p * (1.0 - p) / trials), trials)

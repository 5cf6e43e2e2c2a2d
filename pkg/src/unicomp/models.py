"""Contextless symbol models used as escape targets by PPM and LZW.

Three distributions are provided: uniform, the distribution implied by UTF-8
code word lengths, and an adaptive Polya tree whose prior can be calibrated to
any target distribution with an O(1) range-mass query.

Symbols are integer ids in ``[0, alphabet.size)`` minus the alphabet's holes.
The escape coders (:class:`UniformBase`, :class:`PolyaBase`) only ever code a
symbol the first time it appears, with every previously coded symbol excluded.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from .coder import Decoder, Encoder, ProbabilityRange
from .tokens import BYTE_BASE, EOF_ID, ID_LIMIT, SURROGATE_HI, SURROGATE_LO

QUANT_BITS = 20
QUANT_TOTAL = 1 << QUANT_BITS


class ModelError(ValueError):
    pass


class CalibrationError(ModelError):
    pass


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol alphabet over ids ``[0, size)`` with unoccupied holes."""

    name: str
    size: int
    eof: int
    holes: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_node_sizes", {})

    @property
    def n_symbols(self) -> int:
        return self.size - sum(hi - lo for lo, hi in self.holes)

    def __contains__(self, s) -> bool:
        if not isinstance(s, int) or not 0 <= s < self.size:
            return False
        return not any(lo <= s < hi for lo, hi in self.holes)

    def count(self, lo: int, hi: int) -> int:
        """Number of symbols with id in ``[lo, hi)``."""
        lo = max(lo, 0)
        hi = min(hi, self.size)
        if hi <= lo:
            return 0
        n = hi - lo
        for a, b in self.holes:
            n -= max(0, min(hi, b) - max(lo, a))
        return n

    def rank(self, s: int) -> int:
        """Position of ``s`` among the symbols, in id order."""
        return s - sum(max(0, min(s, b) - a) for a, b in self.holes)

    def unrank(self, r: int) -> int:
        s = r
        for a, b in self.holes:
            if s >= a:
                s += b - a
        return s

    def node_size(self, lo: int, hi: int) -> int:
        """Memoised :meth:`count` for tree nodes, which recur constantly."""
        cache = self._node_sizes
        n = cache.get((lo, hi))
        if n is None:
            n = cache[(lo, hi)] = self.count(lo, hi)
        return n

    def check(self, s: int) -> None:
        if s not in self:
            raise ModelError(f"symbol {s!r} is not in the {self.name} alphabet")


BYTE_ALPHABET = Alphabet("byte", 257, eof=256)
TOKEN_ALPHABET = Alphabet("token", ID_LIMIT, eof=EOF_ID,
                          holes=((SURROGATE_LO, SURROGATE_HI),))


def small_alphabet(n: int) -> Alphabet:
    """Plain alphabet ``0..n-1`` whose last symbol doubles as EOF."""
    return Alphabet(f"small{n}", n, eof=n - 1)


# -- uniform --------------------------------------------------------------

def _uniform_slot(k: int, n: int) -> ProbabilityRange:
    # totals below 2**20 are spread over 2**20 quanta, the remainder going to
    # the lowest-ranked symbols; larger alphabets get one quantum each
    total = max(QUANT_TOTAL, n)
    q, r = divmod(total, n)
    low = k * q + min(k, r)
    return ProbabilityRange(low, low + q + (1 if k < r else 0), total)


def _uniform_find(target: int, n: int) -> int:
    total = max(QUANT_TOTAL, n)
    q, r = divmod(total, n)
    split = r * (q + 1)
    if target < split:
        return target // (q + 1)
    return r + (target - split) // q


def uniform_probability(alphabet: Alphabet, s: int) -> ProbabilityRange:
    alphabet.check(s)
    return _uniform_slot(alphabet.rank(s), alphabet.n_symbols)


class UniformTarget:
    """Uniform distribution exposed through range-mass queries."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet

    def probability(self, s: int) -> float:
        self.alphabet.check(s)
        return 1.0 / self.alphabet.n_symbols

    def range_mass(self, lo: int, hi: int) -> float:
        if hi < lo:
            raise ModelError(f"reversed range [{lo}, {hi})")
        return self.alphabet.count(lo, hi) / self.alphabet.n_symbols


# -- UTF-8 implicit -------------------------------------------------------

# (first id, end id, code word length); the surrogate hole is carved out of the
# three-byte class by the alphabet count.
_LENGTH_CLASSES = (
    (0x0, 0x80, 1),
    (0x80, 0x800, 2),
    (0x800, 0x10000, 3),
    (0x10000, 0x110000, 4),
)
NON_CHAR_TOKENS = EOF_ID + 1 - BYTE_BASE  # 256 bytes + EOF
DEFAULT_NON_CHAR_MASS = Fraction(1, 1 << 16)


def _class_counts():
    return [(lo, hi, l, TOKEN_ALPHABET.count(lo, hi)) for lo, hi, l in _LENGTH_CLASSES]


# sum over characters of 256**-length
UTF8_NORMALIZER = sum(Fraction(n, 256 ** l) for _, _, l, n in _class_counts())


class Utf8Implicit:
    """``P(c) = k / 256**len(c)`` over characters.

    Byte and EOF tokens share ``non_char_mass`` equally; ``k`` absorbs the
    rest so that the total is exactly one.
    """

    def __init__(self, non_char_mass=DEFAULT_NON_CHAR_MASS):
        self.non_char_mass = Fraction(non_char_mass)
        if not 0 <= self.non_char_mass < 1:
            raise ModelError("non_char_mass must lie in [0, 1)")
        self.k_exact = (1 - self.non_char_mass) / UTF8_NORMALIZER
        self.k = float(self.k_exact)
        self._class_weight = [(lo, hi, self.k_exact / 256 ** l) for lo, hi, l in _LENGTH_CLASSES]
        self._class_weight_f = [(lo, hi, float(w)) for lo, hi, w in self._class_weight]
        self._non_char_each = self.non_char_mass / NON_CHAR_TOKENS
        self._non_char_each_f = float(self._non_char_each)

    def probability(self, s: int) -> float:
        TOKEN_ALPHABET.check(s)
        if s >= BYTE_BASE:
            return self._non_char_each_f
        for lo, hi, w in self._class_weight_f:
            if s < hi:
                return w
        raise AssertionError(s)

    def range_mass(self, lo: int, hi: int) -> float:
        if hi < lo:
            raise ModelError(f"reversed range [{lo}, {hi})")
        mass = 0.0
        count = TOKEN_ALPHABET.count
        for a, b, w in self._class_weight_f:
            if lo < b and hi > a:
                mass += count(max(lo, a), min(hi, b)) * w
        if hi > BYTE_BASE:
            mass += count(max(lo, BYTE_BASE), hi) * self._non_char_each_f
        return mass

    def range_mass_exact(self, lo: int, hi: int) -> Fraction:
        if hi < lo:
            raise ModelError(f"reversed range [{lo}, {hi})")
        count = TOKEN_ALPHABET.count
        mass = Fraction(0)
        for a, b, w in self._class_weight:
            if lo < b and hi > a:
                mass += count(max(lo, a), min(hi, b)) * w
        if hi > BYTE_BASE:
            mass += count(max(lo, BYTE_BASE), hi) * self._non_char_each
        return mass

    def quantized(self, s: int) -> ProbabilityRange:
        """Cumulative interval of ``s`` out of 2**30 quanta, floor one each.

        Exact for every symbol but only materialised for the one asked for.
        """
        TOKEN_ALPHABET.check(s)
        total = 1 << 30
        n = TOKEN_ALPHABET.n_symbols
        spare = total - n
        rank = TOKEN_ALPHABET.rank(s)
        low = rank + int(self.range_mass(0, s) * spare)
        if s == TOKEN_ALPHABET.size - 1:
            return ProbabilityRange(low, total, total)
        high = rank + 1 + int(self.range_mass(0, s + 1) * spare)
        return ProbabilityRange(low, high, total)


# -- Polya tree -----------------------------------------------------------

Node = Tuple[int, int]


def _left_prob(alpha: float, beta: float, left: int, right: int) -> float:
    return (alpha + left) / (alpha + beta + left + right)


class PolyaTree:
    """Finite Polya tree over an alphabet's id range.

    Node ``[lo, hi)`` splits at ``(lo + hi) // 2``.  A node whose one side
    holds no symbols routes deterministically and carries no counts.  Only
    nodes that have been visited by an observation are stored.
    """

    def __init__(self, alphabet: Alphabet, prior: Callable[[Node], Tuple[float, float]]):
        self.alphabet = alphabet
        self._prior_fn = prior
        self._prior: Dict[Node, Tuple[float, float]] = {}
        self.counts: Dict[Node, List[int]] = {}

    def prior(self, node: Node) -> Tuple[float, float]:
        ab = self._prior.get(node)
        if ab is None:
            ab = self._prior_fn(node)
            self._prior[node] = ab
        return ab

    def path(self, s: int) -> List[Tuple[Node, int]]:
        """Branching nodes from the root to ``s`` and the branch taken (0 = left)."""
        self.alphabet.check(s)
        count = self.alphabet.node_size
        lo, hi = 0, self.alphabet.size
        out = []
        while hi - lo > 1:
            mid = (lo + hi) // 2
            go_right = s >= mid
            if count(lo, mid) and count(mid, hi):
                out.append(((lo, hi), int(go_right)))
            if go_right:
                lo = mid
            else:
                hi = mid
        return out

    def branch_left(self, node: Node) -> float:
        """Posterior probability of taking the left branch at ``node``."""
        alpha, beta = self.prior(node)
        left, right = self.counts.get(node, (0, 0))
        return _left_prob(alpha, beta, left, right)

    def predict(self, s: int) -> float:
        p = 1.0
        for node, bit in self.path(s):
            q = self.branch_left(node)
            p *= (1.0 - q) if bit else q
        return p

    def predict_exact(self, s: int) -> Fraction:
        """Same as :meth:`predict` with rational arithmetic (priors taken as exact)."""
        p = Fraction(1)
        for node, bit in self.path(s):
            alpha, beta = (Fraction(v) for v in self.prior(node))
            left, right = self.counts.get(node, (0, 0))
            q = (alpha + left) / (alpha + beta + left + right)
            p *= (1 - q) if bit else q
        return p

    def observe(self, s: int) -> None:
        for node, bit in self.path(s):
            c = self.counts.get(node)
            if c is None:
                c = self.counts[node] = [0, 0]
            c[bit] += 1

    def subtree_mass(self, node: Node) -> float:
        """Predictive mass of all symbols below ``node``."""
        lo, hi = node
        p = 1.0
        a, b = 0, self.alphabet.size
        count = self.alphabet.node_size
        while (a, b) != (lo, hi):
            if b - a <= 1 or not (a <= lo and hi <= b):
                raise ModelError(f"{node} is not a tree node")
            mid = (a + b) // 2
            right = lo >= mid
            if count(a, mid) and count(mid, b):
                q = self.branch_left((a, b))
                p *= (1.0 - q) if right else q
            if right:
                a = mid
            else:
                b = mid
        return p


def path_product(tree: PolyaTree, s: int, theta: Callable[[Node], float]) -> float:
    """Probability of ``s`` for fixed left-branch probabilities ``theta(node)``."""
    p = 1.0
    for node, bit in tree.path(s):
        t = theta(node)
        p *= t if bit == 0 else 1.0 - t
    return p


def calibrate_prior(alphabet: Alphabet, target, concentration: float = 1.0) -> PolyaTree:
    """Polya tree whose zero-count predictive distribution equals ``target``.

    ``target`` needs a ``range_mass(lo, hi)`` method.  At each branching node
    the prior pseudo-counts sum to ``concentration`` and split in proportion
    to the target mass on either side.
    """
    if not concentration > 0:
        raise CalibrationError("concentration must be positive")
    c = float(concentration)

    def prior(node):
        lo, hi = node
        mid = (lo + hi) // 2
        left = target.range_mass(lo, mid)
        right = target.range_mass(mid, hi)
        if not (left > 0 and right > 0):
            raise CalibrationError(
                f"target has zero mass on one side of node [{lo:#x}, {hi:#x})")
        return c * left / (left + right), c * right / (left + right)

    tree = PolyaTree(alphabet, prior)
    if alphabet.size <= 1 << 16:
        _touch_all(tree)
    return tree


def _touch_all(tree: PolyaTree) -> None:
    count = tree.alphabet.node_size
    stack = [(0, tree.alphabet.size)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo <= 1:
            continue
        mid = (lo + hi) // 2
        if count(lo, mid) and count(mid, hi):
            tree.prior((lo, hi))
        stack.append((lo, mid))
        stack.append((mid, hi))


def fixed_prior_tree(alphabet: Alphabet, alpha: float, beta: float) -> PolyaTree:
    """Tree with the same Beta(alpha, beta) prior at every node."""
    return PolyaTree(alphabet, lambda node: (alpha, beta))


# -- escape coders --------------------------------------------------------

BINARY_TOTAL = QUANT_TOTAL


def _quantize_binary(p_left: float) -> int:
    f = int(p_left * BINARY_TOTAL + 0.5)
    return min(max(f, 1), BINARY_TOTAL - 1)


class UniformBase:
    """Uniform escape model: codes a novel symbol among all not yet seen."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self._seen: List[int] = []  # sorted ranks

    @property
    def seen(self) -> int:
        return len(self._seen)

    def is_excluded(self, s: int) -> bool:
        r = self.alphabet.rank(s)
        i = bisect.bisect_left(self._seen, r)
        return i < len(self._seen) and self._seen[i] == r

    def _slot(self, s: int) -> Tuple[ProbabilityRange, int]:
        self.alphabet.check(s)
        r = self.alphabet.rank(s)
        i = bisect.bisect_left(self._seen, r)
        if i < len(self._seen) and self._seen[i] == r:
            raise ModelError(f"symbol {s} has already been coded by the base model")
        n = self.alphabet.n_symbols - len(self._seen)
        return _uniform_slot(r - i, n), r

    def probability(self, s: int) -> float:
        return self._slot(s)[0].probability

    def encode(self, enc: Encoder, s: int) -> None:
        rng, r = self._slot(s)
        enc.encode(*rng)
        bisect.insort(self._seen, r)

    def decode(self, dec: Decoder) -> int:
        n = self.alphabet.n_symbols - len(self._seen)
        if n <= 0:
            raise ModelError("base model has no symbols left")
        rng = _uniform_slot(0, n)
        k = _uniform_find(dec.decode_target(rng.total), n)
        dec.decode_range(_uniform_slot(k, n))
        # k-th rank not yet seen
        r = k
        for e in self._seen:
            if e <= r:
                r += 1
            else:
                break
        bisect.insort(self._seen, r)
        return self.alphabet.unrank(r)


class PolyaBase:
    """Polya tree escape model with exclusion of every symbol already coded.

    A symbol is coded as its sequence of branching decisions.  At each node
    the left/right split is the posterior branch probability reweighted by the
    predictive mass still available (not excluded) on each side; a side with
    no symbols left is never taken and costs nothing.  Coding a symbol both
    observes it in the tree and excludes it.
    """

    def __init__(self, tree: PolyaTree):
        self.tree = tree
        self.alphabet = tree.alphabet
        self._remaining: Dict[Node, float] = {}
        self._excluded: Dict[Node, int] = {}
        self._seen = set()

    @property
    def seen(self) -> int:
        return len(self._seen)

    def is_excluded(self, s: int) -> bool:
        return s in self._seen

    def _side_state(self, lo: int, hi: int) -> Tuple[float, bool]:
        """Remaining conditional mass of ``[lo, hi)`` and whether any symbol survives."""
        node = (lo, hi)
        alive = self.alphabet.node_size(lo, hi) - self._excluded.get(node, 0) > 0
        if hi - lo == 1:
            return (1.0 if alive else 0.0), alive
        return self._remaining.get(node, 1.0), alive

    def _decisions(self, lo: int, hi: int):
        """For a node: (branching?, p_left reweighted, left alive, right alive)."""
        mid = (lo + hi) // 2
        rl, al = self._side_state(lo, mid)
        rr, ar = self._side_state(mid, hi)
        return mid, rl, al, rr, ar

    def _walk(self, s: Optional[int], dec: Optional[Decoder], enc: Optional[Encoder]):
        tree = self.tree
        count = self.alphabet.node_size
        lo, hi = 0, self.alphabet.size
        p = 1.0
        while hi - lo > 1:
            mid, rl, al, rr, ar = self._decisions(lo, hi)
            if not (al or ar):
                raise ModelError("base model has no symbols left")
            branching = count(lo, mid) and count(mid, hi)
            if al and ar and branching:
                q = tree.branch_left((lo, hi))
                wl = q * rl
                wr = (1.0 - q) * rr
                p_left = wl / (wl + wr) if wl + wr > 0 else 0.5
                f = _quantize_binary(p_left)
                if dec is not None:
                    go_right = dec.decode_target(BINARY_TOTAL) >= f
                else:
                    go_right = s >= mid
                lo_f, hi_f = (f, BINARY_TOTAL) if go_right else (0, f)
                if enc is not None:
                    enc.encode(lo_f, hi_f, BINARY_TOTAL)
                elif dec is not None:
                    dec.decode_commit(lo_f, hi_f, BINARY_TOTAL)
                p *= (1.0 - p_left) if go_right else p_left
            else:
                go_right = not al
                if s is not None and dec is None and (s >= mid) != go_right:
                    return 0.0, None
            if go_right:
                lo = mid
            else:
                hi = mid
        return p, lo

    def probability(self, s: int) -> float:
        """Real-valued probability of ``s`` given the current exclusions."""
        self.alphabet.check(s)
        if s in self._seen:
            return 0.0
        return self._walk(s, None, None)[0]

    def encode(self, enc: Encoder, s: int) -> None:
        self.alphabet.check(s)
        if s in self._seen:
            raise ModelError(f"symbol {s} has already been coded by the base model")
        self._walk(s, None, enc)
        self._learn(s)

    def decode(self, dec: Decoder) -> int:
        _, s = self._walk(None, dec, None)
        if s in self._seen or s not in self.alphabet:
            raise ModelError(f"decoded unavailable symbol {s}")
        self._learn(s)
        return s

    def _learn(self, s: int) -> None:
        self.tree.observe(s)
        self._seen.add(s)
        # bottom-up refresh of excluded counts and remaining mass along the path
        lo, hi = 0, self.alphabet.size
        nodes = []
        while hi - lo > 1:
            nodes.append((lo, hi))
            mid = (lo + hi) // 2
            if s >= mid:
                lo = mid
            else:
                hi = mid
        self._excluded[(s, s + 1)] = 1
        count = self.alphabet.node_size
        for lo, hi in reversed(nodes):
            node = (lo, hi)
            self._excluded[node] = self._excluded.get(node, 0) + 1
            mid, rl, al, rr, ar = self._decisions(lo, hi)
            if count(lo, mid) and count(mid, hi):
                q = self.tree.branch_left(node)
                self._remaining[node] = q * rl + (1.0 - q) * rr
            else:
                self._remaining[node] = rl if count(lo, mid) else rr


def make_polya_base(concentration: float = 1.0, non_char_mass=DEFAULT_NON_CHAR_MASS) -> PolyaBase:
    tree = calibrate_prior(TOKEN_ALPHABET, Utf8Implicit(non_char_mass), concentration)
    return PolyaBase(tree)

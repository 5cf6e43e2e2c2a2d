"""PPM with PPMG symbol/escape probabilities.

In a context with symbol counts ``n_x`` (total ``N``, ``U`` distinct symbols)
a seen symbol gets ``(n_x - beta) / (N + alpha)`` and the escape gets
``(U * beta + alpha) / (N + alpha)``.  Coding cascades from the longest
available context down to the empty one, masking symbols already ruled out by
an escape; a symbol absent even from the empty context is handed to the base
model.  Counts are updated with update exclusion: only the context that coded
the symbol and the longer ones above it are incremented.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .coder import Decoder, Encoder, MAX_TOTAL
from .models import ModelError

ESC = -1


@dataclass(frozen=True)
class PPMParams:
    depth: int
    alpha: float
    beta: float

    def __post_init__(self):
        if not isinstance(self.depth, int) or not 0 <= self.depth <= 255:
            raise ModelError(f"depth must be an integer in [0, 255], got {self.depth!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ModelError(f"beta must lie in [0, 1], got {self.beta}")
        # strict: with alpha == -beta a context holding one symbol cannot escape
        if not self.alpha > -self.beta:
            raise ModelError(f"alpha must exceed -beta, got alpha={self.alpha} beta={self.beta}")


PRESETS = {
    "uniform_byte": PPMParams(6, 0.095, 0.409),
    "uniform_token": PPMParams(5, -0.001, 0.514),
    "polya_token": PPMParams(5, 0.0, 0.513),
}


class Context:
    __slots__ = ("counts", "total", "children", "index")

    def __init__(self):
        self.counts: Dict[int, int] = {}
        self.total = 0
        self.children: Optional[Dict[int, "Context"]] = None
        self.index: Optional["_Index"] = None


def ppmg_distribution(counts: Dict[int, int], params: PPMParams,
                      excluded: Iterable[int] = ()) -> Tuple[Dict[int, float], float]:
    """Real-valued PPMG distribution over the surviving seen symbols and ESC."""
    excluded = set(excluded)
    survivors = {x: n for x, n in counts.items() if n > 0 and x not in excluded}
    total = sum(survivors.values())
    if total == 0:
        return {}, 1.0
    denom = total + params.alpha
    probs = {x: (n - params.beta) / denom for x, n in survivors.items()}
    p_esc = (len(survivors) * params.beta + params.alpha) / denom
    return probs, p_esc


SCALE_BITS = 24
LARGE_CONTEXT = 48  # distinct symbols before a context gets a Fenwick index


def frequency_scale(n_total: int, params: PPMParams) -> Tuple[int, int, int]:
    """Fixed-point multipliers ``(a, b, c)`` for a context with ``n_total`` survivors.

    A survivor with count ``n`` gets frequency ``a*n - b`` and the escape gets
    ``max(1, U*b + c)``, so the integer total is about ``2**24``.
    """
    a = (1 << SCALE_BITS) // (n_total + 1 + max(0, math.ceil(params.alpha)))
    if a < 2:
        a = 2
    b = int(params.beta * a + 0.5)
    if b >= a:
        b = a - 1
    c = math.floor(params.alpha * a + 0.5)
    return a, b, c


def quantize(counts: Dict[int, int], params: PPMParams,
             excluded: Optional[Set[int]] = None) -> Tuple[List[int], List[int], int]:
    """Integer frequencies for the survivors, in count-table order, plus ESC last.

    Returns ``(symbols, cumulative, total)`` with ``cumulative`` holding
    ``len(symbols) + 2`` boundaries; ESC occupies the final interval.  Every
    frequency is at least one.  Empty if nothing survives.
    """
    if excluded:
        items = [(x, n) for x, n in counts.items() if x not in excluded]
    else:
        items = list(counts.items())
    if not items:
        return [], [0], 0
    a, b, c = frequency_scale(sum(n for _, n in items), params)
    syms = []
    cum = [0]
    acc = 0
    for x, n in items:
        syms.append(x)
        acc += a * n - b
        cum.append(acc)
    esc = len(items) * b + c
    acc += esc if esc > 0 else 1
    cum.append(acc)
    if acc > MAX_TOTAL:
        raise ModelError("frequency total overflow")
    return syms, cum, acc


class _Index:
    """Fenwick tree of counts by insertion position, for large contexts."""

    __slots__ = ("syms", "pos", "tree")

    def __init__(self, counts: Dict[int, int]):
        self.syms: List[int] = []
        self.pos: Dict[int, int] = {}
        self.tree: List[int] = [0]
        for x, n in counts.items():
            self.append(x, n)

    def prefix(self, i: int) -> int:
        """Sum of counts at positions ``< i``."""
        tree = self.tree
        s = 0
        while i > 0:
            s += tree[i]
            i &= i - 1
        return s

    def append(self, x: int, n: int) -> None:
        i = len(self.syms) + 1
        self.pos[x] = i - 1
        self.syms.append(x)
        # node i covers positions (i - lowbit(i), i]
        self.tree.append(n + self.prefix(i - 1) - self.prefix(i - (i & -i)))

    def add(self, p: int, n: int) -> None:
        tree = self.tree
        i = p + 1
        size = len(tree)
        while i < size:
            tree[i] += n
            i += i & -i

    def find(self, target: int, a: int, b: int) -> int:
        """Position ``p`` whose interval ``[a*C(p) - b*p, a*C(p+1) - b*(p+1))`` holds ``target``.

        ``C(p)`` is the count prefix; assumes no exclusions.
        """
        tree = self.tree
        size = len(tree) - 1
        step = 1 << size.bit_length()
        i = 0
        cnt = 0
        while step:
            j = i + step
            if j <= size:
                c = cnt + tree[j]
                if a * c - b * j <= target:
                    i = j
                    cnt = c
            step >>= 1
        return i


class PPMModel:
    def __init__(self, params: PPMParams, base):
        self.params = params
        self.base = base
        self.root = Context()
        self.history: deque = deque(maxlen=params.depth)
        self.last_order: Optional[int] = None  # order that coded the last symbol, -1 = base

    def _contexts(self) -> List[Context]:
        node = self.root
        out = [node]
        h = self.history
        for k in range(1, len(h) + 1):
            ch = node.children
            if ch is None:
                break
            node = ch.get(h[-k])
            if node is None:
                break
            out.append(node)
        return out

    @staticmethod
    def _survivors(node: Context, excluded: Optional[Set[int]]) -> Tuple[int, int, list]:
        """Survivor count total, survivor distinct count, excluded (pos, count) pairs."""
        counts = node.counts
        if not excluded:
            return node.total, len(counts), []
        n_total = node.total
        u = len(counts)
        gone = []
        if node.index is not None:
            pos = node.index.pos
            for x in excluded:
                n = counts.get(x)
                if n is not None:
                    n_total -= n
                    u -= 1
                    gone.append((pos[x], n))
            gone.sort()
        else:
            for x in excluded:
                n = counts.get(x)
                if n is not None:
                    n_total -= n
                    u -= 1
        return n_total, u, gone

    def encode(self, enc: Encoder, s: int) -> None:
        ctxs = self._contexts()
        params = self.params
        excluded: Optional[Set[int]] = None
        coded = -1
        for order in range(len(ctxs) - 1, -1, -1):
            node = ctxs[order]
            counts = node.counts
            n_total, u, gone = self._survivors(node, excluded)
            if u == 0:
                continue  # forced escape, costs nothing
            a, b, c = frequency_scale(n_total, params)
            esc = u * b + c
            if esc < 1:
                esc = 1
            cum_all = a * n_total - b * u
            total = cum_all + esc
            n_s = counts.get(s)
            if n_s is not None and not (excluded and s in excluded):
                index = node.index
                if index is None:
                    low = 0
                    for x, n in counts.items():
                        if x == s:
                            break
                        if excluded and x in excluded:
                            continue
                        low += a * n - b
                else:
                    p = index.pos[s]
                    low = a * index.prefix(p) - b * p
                    for q, n in gone:
                        if q >= p:
                            break
                        low -= a * n - b
                enc.encode(low, low + a * n_s - b, total)
                coded = order
                break
            enc.encode(cum_all, total, total)
            if order:
                if excluded is None:
                    excluded = set(counts)
                else:
                    excluded.update(counts)
        else:
            self.base.encode(enc, s)
        self._update(ctxs, coded, s)

    def decode(self, dec: Decoder) -> int:
        ctxs = self._contexts()
        params = self.params
        excluded: Optional[Set[int]] = None
        for order in range(len(ctxs) - 1, -1, -1):
            node = ctxs[order]
            counts = node.counts
            n_total, u, gone = self._survivors(node, excluded)
            if u == 0:
                continue
            a, b, c = frequency_scale(n_total, params)
            esc = u * b + c
            if esc < 1:
                esc = 1
            cum_all = a * n_total - b * u
            total = cum_all + esc
            target = dec.decode_target(total)
            if target < cum_all:
                s, low, width = self._locate(node, excluded, gone, target, a, b)
                dec.decode_commit(low, low + width, total)
                self._update(ctxs, order, s)
                return s
            dec.decode_commit(cum_all, total, total)
            if order:
                if excluded is None:
                    excluded = set(counts)
                else:
                    excluded.update(counts)
        s = self.base.decode(dec)
        self._update(ctxs, -1, s)
        return s

    @staticmethod
    def _locate(node: Context, excluded, gone, target: int, a: int, b: int):
        """Surviving symbol whose interval holds ``target``: (symbol, low, width)."""
        index = node.index
        if index is None:
            low = 0
            for x, n in node.counts.items():
                if excluded and x in excluded:
                    continue
                w = a * n - b
                if target < low + w:
                    return x, low, w
                low += w
            raise ModelError("target beyond symbol intervals")
        # excluded items have zero width: shift the target past every one that
        # precedes the answer, until stable
        shift = 0
        k = 0
        while True:
            p = index.find(target + shift, a, b)
            moved = False
            while k < len(gone) and gone[k][0] <= p:
                shift += a * gone[k][1] - b
                k += 1
                moved = True
            if not moved:
                break
        x = index.syms[p]
        n = node.counts[x]
        low = a * index.prefix(p) - b * p - shift
        return x, low, a * n - b

    def _update(self, ctxs: List[Context], coded: int, s: int) -> None:
        self.last_order = coded
        h = self.history
        start = coded if coded > 0 else 0
        node = ctxs[start - 1] if start else None
        for order in range(start, len(h) + 1):
            if order < len(ctxs):
                node = ctxs[order]
            else:
                ch = node.children
                if ch is None:
                    ch = node.children = {}
                key = h[-order]
                nxt = ch.get(key)
                if nxt is None:
                    nxt = ch[key] = Context()
                node = nxt
            counts = node.counts
            n = counts.get(s)
            index = node.index
            if n is None:
                counts[s] = 1
                if index is not None:
                    index.append(s, 1)
                elif len(counts) > LARGE_CONTEXT:
                    node.index = _Index(counts)
            else:
                counts[s] = n + 1
                if index is not None:
                    index.add(index.pos[s], 1)
            node.total += 1
        h.append(s)

    def context_stats(self) -> Dict[Tuple[int, ...], Dict[int, int]]:
        """Every stored context (oldest symbol first) mapped to its counts."""
        out = {}
        stack = [((), self.root)]
        while stack:
            key, node = stack.pop()
            out[key] = dict(node.counts)
            if node.children:
                for sym, child in node.children.items():
                    stack.append(((sym,) + key, child))
        return out


def encode_symbols(symbols: Iterable[int], params: PPMParams, base, eof: int) -> bytes:
    model = PPMModel(params, base)
    enc = Encoder()
    seen_eof = False
    for s in symbols:
        if seen_eof:
            raise ModelError("symbols after EOF")
        model.encode(enc, s)
        seen_eof = s == eof
    if not seen_eof:
        raise ModelError("symbol stream must end with EOF")
    return enc.finish()


def decode_symbols(payload: bytes, params: PPMParams, base, eof: int) -> List[int]:
    model = PPMModel(params, base)
    dec = Decoder(payload)
    out = []
    while True:
        s = model.decode(dec)
        out.append(s)
        if s == eof:
            break
    dec.check_finished()
    return out

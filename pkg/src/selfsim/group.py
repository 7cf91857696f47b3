"""Mealy automata, self-similar group elements and the word problem.

Elements are stored as tuples of signed generator codes: state ``i`` is
``i + 1`` and its inverse is ``-(i + 1)``.  The empty tuple is the identity.
Words act on the left, so ``g h`` acts on a tree word ``v`` as ``g(h(v))``
and sections obey ``(gh)|_v = g|_{h(v)} h|_v``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

IDENTITY_NAME = "e"

Word = tuple  # tuple[int, ...] of signed generator codes


class AutomatonError(ValueError):
    """Raised for malformed or non-invertible automaton definitions."""


class WordProblemUndecided(RuntimeError):
    """The bounded word-problem search could not settle an equality."""


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise AutomatonError(f"alphabet size must be >= 2, got {self.size}")

    @property
    def letters(self) -> range:
        return range(self.size)

    def check(self, v: Sequence[int]) -> tuple:
        v = tuple(int(x) for x in v)
        for x in v:
            if not 0 <= x < self.size:
                raise ValueError(f"letter {x} outside alphabet 0..{self.size - 1}")
        return v


@dataclass(frozen=True)
class Portrait:
    """Permutations at the internal vertices of the tree down to ``depth``.

    ``perms`` lists vertices level by level, each level in lexicographic order.
    """

    depth: int
    d: int
    perms: tuple

    def __post_init__(self):
        expected = (self.d ** self.depth - 1) // (self.d - 1)
        if len(self.perms) != expected:
            raise ValueError("portrait node count does not match depth")
        for p in self.perms:
            if sorted(p) != list(range(self.d)):
                raise ValueError(f"{p} is not a permutation")

    def is_trivial(self) -> bool:
        ident = tuple(range(self.d))
        return all(p == ident for p in self.perms)


@dataclass(frozen=True)
class TrivialityVerdict:
    verdict: str  # "trivial" | "nontrivial" | "unknown"
    witness: tuple | None = None  # tree word moved by the element
    explored: int = 0

    def __bool__(self):
        raise TypeError("use .verdict; a verdict may be 'unknown'")


class MealyAutomaton:
    """Finite invertible transducer; its states generate a self-similar group.

    ``outputs[i][x]`` is the letter written by state ``i`` on input ``x`` and
    ``sections[i][x]`` the next state (``-1`` for the identity).
    """

    def __init__(self, d: int, names: Sequence[str], outputs, sections, name: str = ""):
        self.alphabet = Alphabet(int(d))
        self.name = name
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise AutomatonError("duplicate state names")
        if IDENTITY_NAME in self.names:
            raise AutomatonError(f"state name {IDENTITY_NAME!r} is reserved for the identity")
        self.outputs = tuple(tuple(int(y) for y in row) for row in outputs)
        self.sections = tuple(tuple(int(s) for s in row) for row in sections)
        if len(self.outputs) != len(self.names) or len(self.sections) != len(self.names):
            raise AutomatonError("outputs/sections must have one row per state")
        for nm, out, sec in zip(self.names, self.outputs, self.sections):
            if len(out) != self.d or len(sec) != self.d:
                raise AutomatonError(f"state {nm}: rows must have {self.d} entries")
            if sorted(out) != list(range(self.d)):
                raise AutomatonError(f"state {nm}: output row {list(out)} is not a permutation")
            for s in sec:
                if not -1 <= s < len(self.names):
                    raise AutomatonError(f"state {nm}: dangling section index {s}")
        self._build_tables()
        # relations discovered through the word problem, never assumed
        self._trivial_states = frozenset()
        self._involutions = frozenset()
        self._trivial_states = frozenset(
            i for i in range(len(self.names))
            if self.triviality((i + 1,), depth_bound=64).verdict == "trivial"
        )
        self._involutions = frozenset(
            i for i in range(len(self.names))
            if i not in self._trivial_states
            and self.triviality((i + 1, i + 1), depth_bound=64).verdict == "trivial"
        )
        self._eq_cache: dict = {}

    @property
    def d(self) -> int:
        return self.alphabet.size

    def _build_tables(self):
        # index tables by signed code; code 0 is unused
        k = len(self.names)
        self._out = {}
        self._sec = {}
        for i in range(k):
            out, sec = self.outputs[i], self.sections[i]
            self._out[i + 1] = out
            self._sec[i + 1] = tuple(s + 1 if s >= 0 else 0 for s in sec)
            inv_out = [0] * self.d
            inv_sec = [0] * self.d
            for x, y in enumerate(out):
                inv_out[y] = x
                inv_sec[y] = -(sec[x] + 1) if sec[x] >= 0 else 0
            self._out[-(i + 1)] = tuple(inv_out)
            self._sec[-(i + 1)] = tuple(inv_sec)

    # ----------------------------------------------------------------- words

    @property
    def letters(self) -> tuple:
        return tuple(range(1, len(self.names) + 1)) + tuple(-i for i in range(1, len(self.names) + 1))

    def reduce(self, word: Iterable[int]) -> Word:
        """Free reduction, dropping states proven trivial and folding proven involutions."""
        out: list = []
        triv, invol = self._trivial_states, self._involutions
        for s in word:
            if s == 0:
                continue
            i = abs(s) - 1
            if i in triv:
                continue
            if i in invol:
                s = i + 1
            if out and out[-1] == -s:
                out.pop()
            elif out and s > 0 and (s - 1) in invol and out[-1] == s:
                out.pop()
            else:
                out.append(s)
        return tuple(out)

    def inverse(self, word: Word) -> Word:
        return self.reduce(-s for s in reversed(word))

    def multiply(self, *words: Word) -> Word:
        return self.reduce(s for w in words for s in w)

    def parse_word(self, text: str) -> Word:
        """Parse ``"ab'c"``-style words; ``e`` or ``1`` or the empty string is the identity."""
        text = text.strip()
        if text in ("", IDENTITY_NAME, "1"):
            return ()
        index = {nm: i for i, nm in enumerate(self.names)}
        names = sorted(self.names, key=len, reverse=True)
        pos, out = 0, []
        while pos < len(text):
            ch = text[pos]
            if ch.isspace() or ch == "*":
                pos += 1
                continue
            if text.startswith(IDENTITY_NAME, pos) and not any(text.startswith(n, pos) for n in names):
                pos += len(IDENTITY_NAME)
                continue
            for nm in names:
                if text.startswith(nm, pos):
                    pos += len(nm)
                    code = index[nm] + 1
                    if pos < len(text) and text[pos] == "'":
                        code = -code
                        pos += 1
                    out.append(code)
                    break
            else:
                raise ValueError(f"unknown generator at {text[pos:]!r} (states: {', '.join(self.names)})")
        return self.reduce(out)

    def format_word(self, word: Word) -> str:
        if not word:
            return IDENTITY_NAME
        return "".join(self.names[abs(s) - 1] + ("'" if s < 0 else "") for s in word)

    # ---------------------------------------------------------------- action

    def first_level(self, word: Word) -> tuple:
        """Permutation of X induced by the element: entry x is g(x)."""
        perm = list(range(self.d))
        for s in reversed(word):
            out = self._out[s]
            perm = [out[y] for y in perm]
        return tuple(perm)

    def step(self, word: Word, x: int) -> tuple:
        """Return ``(g(x), g|_x)`` for a single letter."""
        secs = []
        for s in reversed(word):
            sec = self._sec[s][x]
            if sec:
                secs.append(sec)
            x = self._out[s][x]
        secs.reverse()
        return x, self.reduce(secs)

    def act(self, word: Word, v: Sequence[int]) -> tuple:
        v = self.alphabet.check(v)
        out = []
        for x in v:
            y, word = self.step(word, x)
            out.append(y)
        return tuple(out)

    def section(self, word: Word, v: Sequence[int]) -> Word:
        v = self.alphabet.check(v)
        for x in v:
            _, word = self.step(word, x)
        return word

    def wreath_decompose(self, word: Word) -> tuple:
        perm = self.first_level(word)
        return perm, tuple(self.step(word, x)[1] for x in range(self.d))

    def portrait(self, word: Word, depth: int) -> Portrait:
        perms = []
        level = [word]
        for _ in range(depth):
            nxt = []
            for w in level:
                perms.append(self.first_level(w))
                nxt.extend(self.step(w, x)[1] for x in range(self.d))
            level = nxt
        return Portrait(depth, self.d, tuple(perms))

    @lru_cache(maxsize=None)
    def _letter_perm(self, s: int, n: int) -> np.ndarray:
        d = self.d
        if n == 0:
            return np.zeros(1, dtype=np.int64)
        block = d ** (n - 1)
        out, sec = self._out[s], self._sec[s]
        p = np.empty(d ** n, dtype=np.int64)
        for x in range(d):
            sub = self._letter_perm(sec[x], n - 1) if sec[x] else np.arange(block)
            p[x * block:(x + 1) * block] = out[x] * block + sub
        p.flags.writeable = False
        return p

    def level_permutation(self, word: Word, n: int) -> np.ndarray:
        """Image index of every length-``n`` word (first letter most significant)."""
        p = np.arange(self.d ** n, dtype=np.int64)
        for s in reversed(word):
            p = self._letter_perm(s, n)[p]
        return p

    # ---------------------------------------------------------- word problem

    def triviality(self, word: Word, depth_bound: int = 32, max_nodes: int = 200_000) -> TrivialityVerdict:
        """Decide whether ``word`` is the identity.

        Explores the set of sections of the element level by level.  A vertex
        moved on the first level of some section gives a certified witness.  If
        the set of distinct section words closes up, every element in it fixes
        every level, which certifies triviality exactly.  Running out of levels
        or nodes first gives ``unknown``.
        """
        word = self.reduce(word)
        if not word:
            return TrivialityVerdict("trivial", explored=1)
        paths = {word: ()}
        frontier = [word]
        for _ in range(depth_bound):
            nxt = []
            for w in frontier:
                perm = self.first_level(w)
                for x in range(self.d):
                    if perm[x] != x:
                        return TrivialityVerdict("nontrivial", paths[w] + (x,), len(paths))
                for x in range(self.d):
                    child = self.step(w, x)[1]
                    if child and child not in paths:
                        paths[child] = paths[w] + (x,)
                        nxt.append(child)
            if not nxt:
                return TrivialityVerdict("trivial", explored=len(paths))
            if len(paths) > max_nodes:
                break
            frontier = nxt
        return TrivialityVerdict("unknown", explored=len(paths))

    def is_trivial(self, word: Word, depth_bound: int = 32) -> str:
        return self.triviality(word, depth_bound).verdict

    def equal(self, u: Word, w: Word, depth_bound: int = 32) -> bool:
        u, w = self.reduce(u), self.reduce(w)
        if u == w:
            return True
        key = (u, w) if u < w else (w, u)
        hit = self._eq_cache.get(key)
        if hit is None:
            verdict = self.triviality(self.multiply(u, self.inverse(w)), depth_bound).verdict
            if verdict == "unknown":
                raise WordProblemUndecided(
                    f"cannot decide {self.format_word(u)} == {self.format_word(w)} within {depth_bound} levels")
            hit = verdict == "trivial"
            self._eq_cache[key] = hit
        return hit

    @cached_property
    def _signature_depth(self) -> int:
        return max(1, int(math.log(64, self.d) + 1e-9))

    def signature(self, word: Word) -> bytes:
        """Action on a fixed tree level; equal elements share signatures."""
        return self.level_permutation(word, self._signature_depth).tobytes()

    def classify(self, words: Iterable[Word], depth_bound: int = 32) -> dict:
        """Map each word to the shortlex-least word of its class among ``words``."""
        ordered = sorted({self.reduce(w) for w in words}, key=shortlex_key)
        buckets: dict = {}
        rep_of = {}
        for w in ordered:
            bucket = buckets.setdefault(self.signature(w), [])
            for r in bucket:
                if self.equal(w, r, depth_bound):
                    rep_of[w] = r
                    break
            else:
                bucket.append(w)
                rep_of[w] = w
        return rep_of

    # --------------------------------------------------------------- export

    def to_document(self) -> dict:
        states = {}
        for nm, out, sec in zip(self.names, self.outputs, self.sections):
            states[nm] = {
                "output": list(out),
                "sections": [self.names[s] if s >= 0 else IDENTITY_NAME for s in sec],
            }
        return {"alphabet_size": self.d, "states": states}

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=2) + "\n"

    def element(self, spec) -> "GroupElement":
        if isinstance(spec, GroupElement):
            return spec
        if isinstance(spec, str):
            return GroupElement(self, self.parse_word(spec))
        return GroupElement(self, self.reduce(spec))

    @property
    def generators(self) -> tuple:
        return tuple(GroupElement(self, (i + 1,)) for i in range(len(self.names)))

    @property
    def identity(self) -> "GroupElement":
        return GroupElement(self, ())

    def __repr__(self):
        return f"MealyAutomaton({self.name or '?'}, d={self.d}, states={list(self.names)})"


def shortlex_key(word: Word) -> tuple:
    # generators before their inverses, then by state index
    return (len(word), tuple((abs(s), s < 0) for s in word))


@dataclass(frozen=True)
class GroupElement:
    """Freely reduced word over the states of an automaton."""

    automaton: MealyAutomaton
    word: Word

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.automaton, self.automaton.multiply(self.word, other.word))

    def inverse(self) -> "GroupElement":
        return GroupElement(self.automaton, self.automaton.inverse(self.word))

    def __pow__(self, k: int) -> "GroupElement":
        base = self if k >= 0 else self.inverse()
        out = self.automaton.identity
        for _ in range(abs(k)):
            out = out * base
        return out

    def act(self, v: Sequence[int]) -> tuple:
        return self.automaton.act(self.word, v)

    def section(self, v: Sequence[int]) -> "GroupElement":
        return GroupElement(self.automaton, self.automaton.section(self.word, v))

    def wreath(self) -> tuple:
        perm, secs = self.automaton.wreath_decompose(self.word)
        return perm, tuple(GroupElement(self.automaton, s) for s in secs)

    def portrait(self, depth: int) -> Portrait:
        return self.automaton.portrait(self.word, depth)

    def is_trivial(self, depth_bound: int = 32) -> str:
        return self.automaton.is_trivial(self.word, depth_bound)

    def equals(self, other: "GroupElement", depth_bound: int = 32) -> bool:
        return self.automaton.equal(self.word, other.word, depth_bound)

    def __len__(self):
        return len(self.word)

    def __str__(self):
        return self.automaton.format_word(self.word)

    def __repr__(self):
        return f"<{self.automaton.name or 'G'}:{self}>"

    def __eq__(self, other):
        # syntactic equality of reduced words; use .equals() for the group relation
        return isinstance(other, GroupElement) and other.automaton is self.automaton and other.word == self.word

    def __hash__(self):
        return hash(self.word)


# ------------------------------------------------------------------ parsing

def parse_automaton(text: str, name: str = "") -> MealyAutomaton:
    """Build an automaton from its JSON definition document.

    The document has ``alphabet_size`` and ``states``; each state record has
    ``output`` (the letter written for each input letter) and ``sections``
    (state names, ``"e"`` for the identity).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AutomatonError(f"syntax error: {exc}") from None
    return automaton_from_document(doc, name)


def automaton_from_document(doc: dict, name: str = "") -> MealyAutomaton:
    if not isinstance(doc, dict) or "alphabet_size" not in doc or "states" not in doc:
        raise AutomatonError("document needs 'alphabet_size' and 'states'")
    d = doc["alphabet_size"]
    if not isinstance(d, int) or isinstance(d, bool):
        raise AutomatonError("alphabet_size must be an integer")
    states = doc["states"]
    if not isinstance(states, dict) or not states:
        raise AutomatonError("'states' must be a non-empty map")
    # a declared identity state is accepted if it really is trivial
    declared_identity = states.get(IDENTITY_NAME)
    if declared_identity is not None:
        if (list(declared_identity.get("output", [])) != list(range(d))
                or any(s != IDENTITY_NAME for s in declared_identity.get("sections", []))):
            raise AutomatonError(f"state {IDENTITY_NAME!r} is reserved for the identity")
    names = sorted(nm for nm in states if nm != IDENTITY_NAME)
    index = {nm: i for i, nm in enumerate(names)}
    outputs, sections = [], []
    for nm in names:
        rec = states[nm]
        if not isinstance(rec, dict) or "output" not in rec or "sections" not in rec:
            raise AutomatonError(f"state {nm}: needs 'output' and 'sections'")
        out, sec = rec["output"], rec["sections"]
        if len(out) != d or len(sec) != d:
            raise AutomatonError(f"state {nm}: rows must have {d} entries")
        for y in out:
            if not isinstance(y, int) or not 0 <= y < d:
                raise AutomatonError(f"state {nm}: output letter {y!r} out of range")
        row = []
        for s in sec:
            if s == IDENTITY_NAME:
                row.append(-1)
            elif s in index:
                row.append(index[s])
            else:
                raise AutomatonError(f"state {nm}: dangling state name {s!r}")
        outputs.append(out)
        sections.append(row)
    return MealyAutomaton(d, names, outputs, sections, name=name)


# ------------------------------------------------------------------ nucleus

@dataclass
class NucleusResult:
    success: bool
    elements: tuple = ()
    rounds: int = 0
    candidates: int = 0
    witness: str = ""
    message: str = ""


def _section_closure(aut: MealyAutomaton, seeds, canon) -> dict:
    graph: dict = {}
    stack = [canon(w) for w in seeds]
    while stack:
        w = stack.pop()
        if w in graph:
            continue
        kids = tuple(canon(aut.step(w, x)[1]) for x in range(aut.d))
        graph[w] = kids
        stack.extend(k for k in kids if k not in graph)
    return graph


def _recurrent_part(graph: dict) -> set:
    """Vertices reachable from a cycle of the section graph."""

    def reach(start):
        seen, stack = set(), list(graph[start])
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(graph[v])
        return seen

    on_cycle = [v for v in graph if v in reach(v)]
    out = set(on_cycle)
    for v in on_cycle:
        out |= reach(v)
    return out


class WordCanonicalizer:
    """Maps words to class representatives; the first word seen in a class represents it.

    Raises WordProblemUndecided when an equality cannot be settled.
    """

    def __init__(self, aut: MealyAutomaton, depth_bound: int = 32):
        self.aut, self.depth_bound = aut, depth_bound
        self.buckets: dict = {}
        self.memo: dict = {}

    def __call__(self, w):
        w = self.aut.reduce(w)
        hit = self.memo.get(w)
        if hit is not None:
            return hit
        bucket = self.buckets.setdefault(self.aut.signature(w), [])
        for r in bucket:
            if self.aut.equal(w, r, self.depth_bound):
                self.memo[w] = r
                return r
        bucket.append(w)
        self.memo[w] = w
        return w


def _growth_failure(aut, grown, rnd, max_size):
    longest = max(grown, key=shortlex_key)
    return NucleusResult(False, rounds=rnd, candidates=len(grown), witness=aut.format_word(longest),
                         message=f"candidate set grew to {len(grown)} > {max_size}")


def compute_nucleus(aut: MealyAutomaton, max_rounds: int = 20, depth_bound: int = 32,
                    max_size: int = 50) -> NucleusResult:
    """Closure iteration for the nucleus of a contracting group.

    Starts from generators, inverses and the identity, keeps the part of the
    section graph reachable from cycles, and adds the recurrent sections of all
    pairwise products until nothing changes.
    """
    if max_rounds < 1 or depth_bound < 1:
        raise ValueError("bounds must be >= 1")
    canon = WordCanonicalizer(aut, depth_bound)
    seeds = [()] + [(s,) for s in aut.letters]
    try:
        cand = _recurrent_part(_section_closure(aut, seeds, canon)) | {()}
        for rnd in range(1, max_rounds + 1):
            grown = set(cand)
            ordered = sorted(cand, key=shortlex_key)
            for g in ordered:
                for h in ordered:
                    grown |= _recurrent_part(_section_closure(aut, [aut.multiply(g, h)], canon))
                    if len(grown) > max_size:
                        return _growth_failure(aut, grown, rnd, max_size)
            grown = _recurrent_part(_section_closure(aut, grown, canon)) | {()}
            if len(grown) > max_size:
                return _growth_failure(aut, grown, rnd, max_size)
            if grown == cand:
                elems = tuple(sorted(cand, key=shortlex_key))
                return NucleusResult(True, elems, rnd, len(elems))
            cand = grown
    except WordProblemUndecided as exc:
        return NucleusResult(False, candidates=len(canon.memo), message=f"word problem: {exc}")
    longest = max(cand, key=shortlex_key)
    return NucleusResult(False, rounds=max_rounds, candidates=len(cand),
                         witness=aut.format_word(longest), message="no fixed point within max_rounds")

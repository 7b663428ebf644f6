"""Words in free groups, their matrix images, and integer abelianization.

A word is a plain ``str``: lowercase letters are generators and the
matching uppercase letters their inverses (``A`` = a^-1). Word text may use
``^n`` powers on letters or parenthesized groups, e.g. ``b^3ab`` or
``(YX)^2Y``; :func:`parse` expands and freely reduces it.
"""

from __future__ import annotations

import math
import re
from collections import OrderedDict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import FormMismatch, UnknownLetter, WordSyntaxError
from .hermitian import GroupElement

Word = str
IntegerMatrix = list[list[int]]


def inverse(w: Word) -> Word:
    return w[::-1].swapcase()


def reduce(w: Iterable[str], alphabet: str | None = None) -> Word:
    """Freely reduce a letter sequence (stack cancellation)."""
    out: list[str] = []
    for ch in w:
        if not ch.isalpha() or (alphabet is not None and ch.lower() not in alphabet):
            raise UnknownLetter(f"letter {ch!r} not in alphabet {alphabet!r}")
        if out and out[-1] == ch.swapcase():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


_TOKEN = re.compile(r"\s*(?:(?P<letter>[a-zA-Z])|(?P<open>\()|(?P<close>\))|(?P<pow>\^\s*(?P<exp>[+-]?\d+)))")


def parse(text: str, alphabet: str | None = None) -> Word:
    """Expand ``^n`` powers and parentheses, then freely reduce."""
    stack: list[list[str]] = [[]]
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise WordSyntaxError(f"cannot parse {text!r} at position {pos}")
        pos = m.end()
        if m.group("letter"):
            stack[-1].append(m.group("letter"))
        elif m.group("open"):
            stack.append([])
        elif m.group("close"):
            if len(stack) == 1:
                raise WordSyntaxError(f"unbalanced ')' in {text!r}")
            group = "".join(stack.pop())
            stack[-1].append(group)
        else:
            if not stack[-1]:
                raise WordSyntaxError(f"power with nothing to raise in {text!r}")
            base = stack[-1].pop()
            k = int(m.group("exp"))
            stack[-1].append(base * k if k >= 0 else inverse(base) * (-k))
    if len(stack) != 1:
        raise WordSyntaxError(f"unbalanced '(' in {text!r}")
    return reduce("".join(stack[0]), alphabet)


def power(w: Word, k: int) -> Word:
    return reduce(w * k if k >= 0 else inverse(w) * (-k))


def letters(alphabet: str) -> list[str]:
    """Generators followed by their inverses, interleaved: a, A, b, B, ..."""
    out = []
    for g in alphabet:
        out += [g, g.upper()]
    return out


def enumerate_reduced(alphabet: str, max_len: int, prefix: str = "") -> Iterator[Word]:
    """Every freely reduced word of length 1..max_len, by increasing length.

    With ``prefix`` only words starting with it are produced (sharding by
    first letter).
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    alpha = letters(alphabet)
    prefix = reduce(prefix, alphabet)
    level = [prefix] if prefix else [""]
    if prefix and len(prefix) <= max_len:
        yield prefix
    for _ in range(len(prefix), max_len):
        nxt = []
        for w in level:
            for ch in alpha:
                if w and w[-1] == ch.swapcase():
                    continue
                nxt.append(w + ch)
        yield from nxt
        level = nxt


def count_reduced(k: int, n: int) -> int:
    return 2 * k * (2 * k - 1) ** (n - 1) if n >= 1 else 1


class WordEvaluator:
    """Left-to-right matrix images of words with an LRU prefix cache.

    Evaluating a stream of words in prefix order costs one matrix product per
    emitted letter.
    """

    def __init__(self, assign: Mapping[str, GroupElement], cache_size: int = 2**20):
        assign = dict(assign)
        if not assign:
            raise ValueError("empty generator assignment")
        forms = [g.form for g in assign.values()]
        if not all(f.same_as(forms[0]) for f in forms):
            raise FormMismatch("generator images preserve different forms")
        self.form = forms[0]
        self.det_normalized = all(g.det_normalized for g in assign.values())
        self._letter: dict[str, np.ndarray] = {}
        for g, el in assign.items():
            self._letter[g] = el.matrix
            self._letter[g.upper()] = el.inverse().matrix
        self.cache_size = cache_size
        self._cache: OrderedDict[str, np.ndarray] = OrderedDict()

    @property
    def alphabet(self) -> str:
        return "".join(ch for ch in self._letter if ch.islower())

    def matrix(self, w: Word) -> np.ndarray:
        for ch in w:
            if ch not in self._letter:
                raise UnknownLetter(f"letter {ch!r} has no assigned image")
        k = len(w)
        while k > 0 and w[:k] not in self._cache:
            k -= 1
        m = self._cache[w[:k]] if k else np.eye(3, dtype=complex)
        if k:
            self._cache.move_to_end(w[:k])
        for i in range(k, len(w)):
            m = m @ self._letter[w[i]]
            self._remember(w[: i + 1], m)
        return m

    def _remember(self, key: str, m: np.ndarray):
        self._cache[key] = m
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)

    def __call__(self, w: Word) -> GroupElement:
        return GroupElement(self.matrix(w), self.form, self.det_normalized, check=False)


def evaluate(w: Word, assign: Mapping[str, GroupElement]) -> GroupElement:
    return WordEvaluator(assign)(w)


# --- abelianization ------------------------------------------------------

def abelianization_matrix(relators: Sequence[Word], generators: Sequence[str]) -> IntegerMatrix:
    gens = list(generators)
    rows = []
    for r in relators:
        row = [0] * len(gens)
        for ch in r:
            try:
                j = gens.index(ch.lower())
            except ValueError:
                raise UnknownLetter(f"letter {ch!r} not among generators {gens}") from None
            row[j] += 1 if ch.islower() else -1
        rows.append(row)
    return rows


@dataclass(frozen=True)
class AbelianGroup:
    """Z^free_rank + sum of Z/d for d in torsion (each d > 1, d_i | d_i+1)."""

    torsion: tuple[int, ...] = ()
    free_rank: int = 0

    def __str__(self):
        parts = ["Z"] * self.free_rank + [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"

    @property
    def finite(self) -> bool:
        return self.free_rank == 0


def smith_diagonal(M: IntegerMatrix, n_cols: int | None = None) -> list[int]:
    """Nonzero diagonal of the Smith normal form (exact Python ints)."""
    A = [list(map(int, row)) for row in M]
    m = len(A)
    n = n_cols if n_cols is not None else (len(A[0]) if A else 0)
    diag = []
    t = 0
    while t < min(m, n):
        piv = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] and (piv is None or abs(A[i][j]) < abs(A[piv[0]][piv[1]])):
                    piv = (i, j)
        if piv is None:
            break
        i, j = piv
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            p = A[t][t]
            for i in range(t + 1, m):
                q = A[i][t] // p
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
            for j in range(t + 1, n):
                q = A[t][j] // p
                if q:
                    for row in A:
                        row[j] -= q * row[t]
            rest = [(i, t) for i in range(t + 1, m) if A[i][t]] + [(t, j) for j in range(t + 1, n) if A[t][j]]
            if rest:
                i, j = min(rest, key=lambda ij: abs(A[ij[0]][ij[1]]))
                if j == t:
                    A[t], A[i] = A[i], A[t]
                else:
                    for row in A:
                        row[t], row[j] = row[j], row[t]
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            A[t] = [a + b for a, b in zip(A[t], A[bad])]
        diag.append(abs(A[t][t]))
        t += 1
    return diag


def smith_invariants(M: IntegerMatrix, n_cols: int | None = None) -> AbelianGroup:
    """Cokernel of the relator matrix: invariant factors > 1 and free rank."""
    n = n_cols if n_cols is not None else (len(M[0]) if M else 0)
    diag = smith_diagonal(M, n)
    return AbelianGroup(tuple(d for d in diag if d != 1), n - len(diag))


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def surjects_onto(source: AbelianGroup, target: AbelianGroup) -> bool:
    """Whether some homomorphism source -> target is onto.

    Free factors of the source cover target free factors first; the spare
    ones can hit any cyclic factor. Then, prime by prime, each target
    p-power level needs at least as many source factors reaching it.
    """
    spare = source.free_rank - target.free_rank
    if spare < 0:
        return False
    primes = sorted({p for d in target.torsion for p in _prime_factors(d)})
    for p in primes:
        j = 1
        while True:
            pj = p**j
            need = sum(1 for d in target.torsion if d % pj == 0)
            if need == 0:
                break
            have = sum(1 for d in source.torsion if d % pj == 0) + spare
            if need > have:
                return False
            j += 1
    return True


def cyclic(n: int) -> AbelianGroup:
    return AbelianGroup((n,), 0) if n > 1 else AbelianGroup()


def triangle_abelianization(n) -> AbelianGroup:
    """Lambda_2(3,3,n)^ab = <x, y | 3x, 3y, n(x+y)> (last relator absent for n = inf)."""
    rows = [[3, 0], [0, 3]]
    if n != math.inf:
        rows.append([int(n), int(n)])
    return smith_invariants(rows, 2)

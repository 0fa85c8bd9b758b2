"""Edge-path presentations of fundamental groups, words, coset enumeration.

Words are tuples of nonzero ints: +k is generator k-1, -k its inverse.
Generators of the edge-path presentation are the non-tree edges of a
breadth-first spanning tree from the basepoint (ties broken by ascending
vertex index); relations come from triangle boundaries rewritten through
the tree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .complexes import EdgePath, SimplicialComplex
from .errors import DisconnectedComplexError, ValidationError
from .scalars import OVERLAP_TOL, Scalar, all_exact, coerce, scalars_equal

Word = tuple[int, ...]

IDENTITY: Word = ()


def reduce_word(letters: Iterable[int]) -> Word:
    out: list[int] = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def invert_word(word: Word) -> Word:
    return tuple(-x for x in reversed(word))


def concat_words(*words: Word) -> Word:
    return reduce_word(itertools.chain.from_iterable(words))


def _letter_rank(x: int) -> int:
    # shortlex letter order: +1 < -1 < +2 < -2 < ...
    return 2 * (abs(x) - 1) + (0 if x > 0 else 1)


def shortlex_key(word: Word):
    return (len(word), tuple(_letter_rank(x) for x in word))


@dataclass(frozen=True)
class PresentedGroup:
    """Edge-path presentation of the fundamental group of a 2-complex."""

    complex: SimplicialComplex
    basepoint: int
    generators: tuple[tuple[int, int], ...]          # non-tree edges (u, v), u < v
    relations: tuple[Word, ...]                      # triangle boundary words, reduced
    tree_parent: tuple[Optional[int], ...]           # BFS parent per vertex

    @property
    def rank(self) -> int:
        return len(self.generators)

    def tree_path(self, v: int) -> tuple[int, ...]:
        """Vertex sequence of the spanning-tree path basepoint -> v."""
        seq = [v]
        while seq[-1] != self.basepoint:
            parent = self.tree_parent[seq[-1]]
            assert parent is not None
            seq.append(parent)
        return tuple(reversed(seq))

    def edge_label(self, u: int, v: int) -> Word:
        """Word contributed by traversing u -> v; empty for tree edges."""
        key = tuple(sorted((u, v)))
        gen = _generator_index(self).get(key)
        if gen is None:
            if not self.complex.has_edge(u, v):
                raise ValidationError(f"({u}, {v}) is not an edge")
            return IDENTITY
        g = gen + 1
        return (g,) if (u, v) == key else (-g,)

    def word_of_path(self, path: EdgePath) -> Word:
        letters: list[int] = []
        for u, v in zip(path.vertices, path.vertices[1:]):
            letters.extend(self.edge_label(u, v))
        return reduce_word(letters)

    def generator_loop(self, index: int) -> EdgePath:
        """The based loop tree(u) + edge(u,v) + reversed tree(v) for generator (u, v)."""
        u, v = self.generators[index]
        up = self.tree_path(u)
        down = tuple(reversed(self.tree_path(v)))
        return EdgePath(self.complex, up + down)

    def simplified(self) -> tuple[int, tuple[Word, ...]]:
        """Tietze-simplified (generator count, relations), for reporting."""
        return tietze_simplify(self.rank, self.relations)


def _generator_index(pres: PresentedGroup) -> dict[tuple[int, int], int]:
    # tiny helper cache; dataclass is frozen so stash on the instance dict via object.__setattr__
    cache = pres.__dict__.get("_gen_index")
    if cache is None:
        cache = {e: i for i, e in enumerate(pres.generators)}
        object.__setattr__(pres, "_gen_index", cache)
    return cache


def edge_path_group(cx: SimplicialComplex, basepoint: int) -> PresentedGroup:
    """Spanning-tree presentation of the edge-path group at the basepoint."""
    if not 0 <= basepoint < cx.n_vertices:
        raise ValidationError(f"basepoint {basepoint} out of range")
    parent: list[Optional[int]] = [None] * cx.n_vertices
    seen = [False] * cx.n_vertices
    seen[basepoint] = True
    order = [basepoint]
    queue = [basepoint]
    tree_edges: set[tuple[int, int]] = set()
    while queue:
        u = queue.pop(0)
        for w in cx.neighbors(u):
            if not seen[w]:
                seen[w] = True
                parent[w] = u
                tree_edges.add(tuple(sorted((u, w))))
                order.append(w)
                queue.append(w)
    for v in cx.vertices:
        if not seen[v]:
            raise DisconnectedComplexError(basepoint, v)

    generators = tuple(sorted(e for e in cx.edges if e not in tree_edges))
    pres = PresentedGroup(cx, basepoint, generators, (), tuple(parent))

    relations = []
    for a, b, c in cx.triangles:
        word = concat_words(pres.edge_label(a, b), pres.edge_label(b, c), pres.edge_label(c, a))
        word = cyclically_reduce(word)
        if word:
            relations.append(word)
    return PresentedGroup(cx, basepoint, generators, tuple(relations), tuple(parent))


def cyclically_reduce(word: Word) -> Word:
    word = reduce_word(word)
    while len(word) >= 2 and word[0] == -word[-1]:
        word = word[1:-1]
    return word


def tietze_simplify(n_gens: int, relations: tuple[Word, ...]) -> tuple[int, tuple[Word, ...]]:
    """Crude Tietze simplification: drop killed generators, substitute ones
    that occur exactly once in some relator, renumber densely."""
    gens = set(range(1, n_gens + 1))
    rels = [cyclically_reduce(r) for r in relations if cyclically_reduce(r)]

    def substitute(rels, g, replacement):
        out = []
        for r in rels:
            letters: list[int] = []
            for x in r:
                if x == g:
                    letters.extend(replacement)
                elif x == -g:
                    letters.extend(invert_word(replacement))
                else:
                    letters.append(x)
            rr = cyclically_reduce(tuple(letters))
            if rr:
                out.append(rr)
        return out

    changed = True
    while changed:
        changed = False
        rels = sorted(set(cyclically_reduce(r) for r in rels if cyclically_reduce(r)), key=shortlex_key)
        # kill generators forced trivial by a length-1 relator
        for r in rels:
            if len(r) == 1:
                g = abs(r[0])
                gens.discard(g)
                rels = substitute(rels, g, IDENTITY)
                changed = True
                break
        if changed:
            continue
        # eliminate a generator occurring exactly once in some relator
        for r in rels:
            counts: dict[int, int] = {}
            for x in r:
                counts[abs(x)] = counts.get(abs(x), 0) + 1
            target = next((g for g in sorted(counts) if counts[g] == 1), None)
            if target is None:
                continue
            i = next(i for i, x in enumerate(r) if abs(x) == target)
            rest = r[i + 1 :] + r[:i]   # r = ... g rest  =>  g = rest^-1 (up to sign)
            replacement = invert_word(rest) if r[i] > 0 else rest
            gens.discard(target)
            rels = [rr for rr in rels if rr != r]
            rels = substitute(rels, target, replacement)
            changed = True
            break

    renumber = {g: i + 1 for i, g in enumerate(sorted(gens))}
    out_rels = []
    for r in rels:
        out_rels.append(tuple((1 if x > 0 else -1) * renumber[abs(x)] for x in r))
    return len(gens), tuple(sorted(set(out_rels), key=shortlex_key))


# ---------------------------------------------------------------------------
# Todd-Coxeter coset enumeration (HLT with coincidence handling)
# ---------------------------------------------------------------------------


@dataclass
class CosetTable:
    """Complete right-action table on cosets of the trivial subgroup.

    Cosets are 0..n-1 with 0 the identity, renumbered in BFS order over
    letters +1, -1, +2, -2, ...  ``rows[c][col]`` with col = 2*(g-1) for +g
    and 2*(g-1)+1 for -g.
    """

    n_generators: int
    rows: list[list[int]]
    representatives: list[Word] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.rows)

    def act(self, coset: int, letter: int) -> int:
        col = 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)
        return self.rows[coset][col]

    def trace(self, coset: int, word: Word) -> int:
        for x in word:
            coset = self.act(coset, x)
        return coset


class _TooManyCosets(Exception):
    pass


def coset_enumeration(n_gens: int, relations: Iterable[Word], max_cosets: int = 20000) -> Optional[CosetTable]:
    """Enumerate cosets of the trivial subgroup; None if max_cosets exceeded."""
    if n_gens == 0:
        return CosetTable(0, [[]], [IDENTITY])
    ncols = 2 * n_gens
    relators: list[Word] = []
    for r in relations:
        r = cyclically_reduce(r)
        if r:
            relators.append(r)

    table: list[list[Optional[int]]] = [[None] * ncols]
    alive: list[bool] = [True]
    forward: dict[int, int] = {}

    def col(letter: int) -> int:
        return 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)

    def inv_col(c: int) -> int:
        return c ^ 1

    def rep(c: int) -> int:
        while c in forward:
            c = forward[c]
        return c

    def define(c: int, letter: int) -> int:
        if len(table) >= max_cosets:
            raise _TooManyCosets
        table.append([None] * ncols)
        alive.append(True)
        d = len(table) - 1
        table[c][col(letter)] = d
        table[d][inv_col(col(letter))] = c
        return d

    def merge(a: int, b: int) -> None:
        # stale entries are tolerated everywhere: reads resolve through rep()
        queue = [(a, b)]
        while queue:
            x, y = queue.pop()
            x, y = rep(x), rep(y)
            if x == y:
                continue
            if y < x:
                x, y = y, x
            forward[y] = x
            alive[y] = False
            for cc in range(ncols):
                d = table[y][cc]
                if d is None:
                    continue
                e = table[x][cc]
                if e is None:
                    table[x][cc] = d
                elif rep(e) != rep(d):
                    queue.append((e, d))

    def scan_and_fill(c: int, word: Word) -> None:
        # scan forward as far as possible, then backward; fill the gap
        f, i = c, 0
        n = len(word)
        while i < n:
            nxt = table[rep(f)][col(word[i])]
            if nxt is None:
                break
            f = rep(nxt)
            i += 1
        if i == n:
            if rep(f) != rep(c):
                merge(f, c)
            return
        b, j = c, n
        while j > i:
            prev = table[rep(b)][inv_col(col(word[j - 1]))]
            if prev is None:
                break
            b = rep(prev)
            j -= 1
        if j == i:
            merge(f, b)
        elif j == i + 1:
            fr, br = rep(f), rep(b)
            table[fr][col(word[i])] = br
            table[br][inv_col(col(word[i]))] = fr
        else:
            define(rep(f), word[i])
            scan_and_fill(c, word)

    try:
        idx = 0
        while idx < len(table):
            if not alive[idx] or rep(idx) != idx:
                idx += 1
                continue
            for r in relators:
                scan_and_fill(idx, r)
                if not alive[idx] or rep(idx) != idx:
                    break
            if alive[idx] and rep(idx) == idx:
                for letter in range(1, n_gens + 1):
                    for signed in (letter, -letter):
                        if table[idx][col(signed)] is None:
                            define(idx, signed)
            idx += 1
        # belt and suspenders: rescan everything until no further coincidences
        stable = False
        while not stable:
            stable = True
            for c in range(len(table)):
                if not alive[c] or rep(c) != c:
                    continue
                for r in relators:
                    before = len(forward)
                    scan_and_fill(c, r)
                    if len(forward) != before:
                        stable = False
    except _TooManyCosets:
        return None

    live = sorted(c for c in range(len(table)) if rep(c) == c)
    remap = {c: i for i, c in enumerate(live)}
    for c in live:
        if any(entry is None for entry in table[c]):
            raise AssertionError("coset table left incomplete")
    rows = [[remap[rep(table[c][cc])] for cc in range(ncols)] for c in live]

    # standardize: renumber in BFS order from coset 0 over +1, -1, +2, -2, ...
    order: list[int] = [0]
    pos = {0: 0}
    qi = 0
    while qi < len(order):
        c = order[qi]
        qi += 1
        for cc in range(ncols):
            d = rows[c][cc]
            if d not in pos:
                pos[d] = len(order)
                order.append(d)
    final = [[pos[rows[c][cc]] for cc in range(ncols)] for c in order]

    reps: list[Word] = [IDENTITY] * len(final)
    seen = [False] * len(final)
    seen[0] = True
    queue = [0]
    letters = [x for g in range(1, n_gens + 1) for x in (g, -g)]
    while queue:
        c = queue.pop(0)
        for x in letters:
            d = final[c][2 * (abs(x) - 1) + (0 if x > 0 else 1)]
            if not seen[d]:
                seen[d] = True
                reps[d] = reps[c] + (x,)
                queue.append(d)
    return CosetTable(n_gens, final, reps)


# ---------------------------------------------------------------------------
# Bounded word-ball materialization for groups that do not close
# ---------------------------------------------------------------------------


class _UnionFind:
    def __init__(self):
        self.parent: dict[Word, Word] = {}

    def find(self, w: Word) -> Word:
        root = w
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while self.parent.get(w, w) != w:
            self.parent[w], w = root, self.parent[w]
        return root

    def union(self, a: Word, b: Word) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if shortlex_key(rb) < shortlex_key(ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def word_ball(n_gens: int, relations: Iterable[Word], radius: int) -> dict[Word, Word]:
    """Freely reduced words of length <= radius, identified by relator moves
    that stay inside the ball.  Maps each word to its canonical (shortlex
    least) representative.  Sound: merges only relation-forced equalities."""
    words: list[Word] = [IDENTITY]
    frontier: list[Word] = [IDENTITY]
    for _ in range(radius):
        nxt: list[Word] = []
        for w in frontier:
            for g in range(1, n_gens + 1):
                for x in (g, -g):
                    if w and w[-1] == -x:
                        continue
                    nxt.append(w + (x,))
        words.extend(nxt)
        frontier = nxt

    rotations: list[Word] = []
    for r in relations:
        r = cyclically_reduce(r)
        if not r:
            continue
        for rr in (r, invert_word(r)):
            for i in range(len(rr)):
                rotations.append(rr[i:] + rr[:i])

    uf = _UnionFind()
    in_ball = set(words)
    if rotations:
        changed = True
        while changed:
            changed = False
            for w in words:
                for rot in rotations:
                    t = reduce_word(w + rot)
                    if t in in_ball and uf.union(w, t):
                        changed = True
    return {w: uf.find(w) for w in words}


def bounded_triviality(pres: PresentedGroup, max_cosets: int = 20000) -> Optional[bool]:
    """True/False if bounded coset enumeration decides triviality, None if it cannot."""
    if pres.rank == 0:
        return True
    if not pres.relations:
        return False  # free of positive rank
    table = coset_enumeration(pres.rank, pres.relations, max_cosets)
    if table is None:
        return None
    return table.size == 1


# ---------------------------------------------------------------------------
# Characters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Character:
    """Additive character of a presented group, stored on generators.

    Multiplicative values e^value are available on demand; relation words
    must evaluate to zero (exactly in rational mode, within tol otherwise).
    """

    group: PresentedGroup
    values: tuple[Scalar, ...]
    tol: float = OVERLAP_TOL

    def __post_init__(self):
        if len(self.values) != self.group.rank:
            raise ValidationError(
                f"character needs {self.group.rank} generator values, got {len(self.values)}"
            )
        object.__setattr__(self, "values", tuple(coerce(v) for v in self.values))
        exact = all_exact(self.values)
        for r in self.group.relations:
            val = self.evaluate(r)
            if not scalars_equal(val, Fraction(0), exact, self.tol):
                raise ValidationError(f"not a homomorphism: relation {r} evaluates to {val}")

    @property
    def exact(self) -> bool:
        return all_exact(self.values)

    def evaluate(self, word: Word) -> Scalar:
        total: Scalar = Fraction(0)
        for x in word:
            v = self.values[abs(x) - 1]
            total = total + v if x > 0 else total - v
        return total

    def multiplicative(self, word: Word) -> float:
        import math

        return math.exp(float(self.evaluate(word)))

    def is_trivial(self) -> bool:
        exact = self.exact
        return all(scalars_equal(v, Fraction(0), exact, self.tol) for v in self.values)

    def negated(self) -> "Character":
        return Character(self.group, tuple(-v for v in self.values), self.tol)

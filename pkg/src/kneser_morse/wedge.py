"""Layer matchings on the full Kneser complex and the sphere count.

The neighborhood complex of the full triple graph is filtered by three
nested subcomplexes: the stable-graph complex, the mixed-graph complex,
and the mixed complex together with every face missing exactly four
ground elements.  A face lies in the mixed complex exactly when all of
its members are stable or a stable triple fits inside the missed part
of the ground set, so a face outside it misses three or four elements
and the missed set contains no stable triple: it is an adjacent pair
{i, i+1} plus one more element j, or two disjoint adjacent pairs
{i, i+1} and {j, j+1} (pairs may wrap, runs of three or four read as
the shape starting at the lower pair, see ``parse_three``).

Grouping the outside faces by their missed set gives the families
matched here.  Each family splits along the lex-least unstable member
of a face; inside one such sub-fiber a fixed list of toggle triples is
applied in lex order, pairing a face with its toggle partner whenever
both sides are still free.  What survives each run is empty or a single
closed-form cell, one per label in ``c_set``.  Families with a missed
pair other than {1, 2} are rotated copies of a {1, 2} family, and the
four-element families pull back, along the rotation that moves the
second pair onto {k+5, k+6}, to three-element families one parameter
down.  Summing the survivors over all families counts the spheres in
the wedge: t = (k+1)(k+3)(k+4)(k+6)/4 + 1 of dimension k+1 after the
final free collapse, which ``theorem3_counts`` reports together with a
mechanical census of every family.

Faces of one family are stored as bitmasks over the lex-ordered triples
inside the family support, so a toggle is a single XOR and the covered
part of the ground set comes from a subset table built once per family.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

from . import graphs
from .collapse import MatchingError, index_I, index_J, pair_of, parse_four, parse_three
from .complexes import NbhdComplex, complement_set, complex_for, face_key
from .morse import Matching, element_matching, face_dim, is_acyclic, is_cover

SCAN_BITS = 22  # largest family support scanned exhaustively: C(9,3)=84 choose-3 masks is far out of reach, C(k+3,3) <= 22 keeps k <= 3


def level1_contains(sigma, k: int) -> bool:
    """Membership in the mixed-graph complex, via the missed set.

    A face of the full complex lies in the complex of the mixed graph iff
    all of its members are stable (any triple inside the missed set is then
    a common neighbor there) or some stable triple avoids its support (that
    triple is a common stable neighbor).  Cheaper than an is_face query and
    independent of it; the two are compared in the tests.
    """
    fk = face_key(sigma)
    if not fk:
        raise ValueError("the empty face belongs to every stage")
    comp = complement_set(fk, k).complement
    if len(comp) < 3:
        raise ValueError("%r misses only %d ground elements; not a face of the full complex"
                         % (sigma, len(comp)))
    if all(graphs.is_stable(v, k) for v in fk):
        return True
    return any(graphs.is_stable(t, k) for t in itertools.combinations(comp, 3))


def _level2_extras(k: int) -> list[list[tuple]]:
    """Generating faces added at the middle stage: per missed 4-set with no
    stable triple inside (two disjoint adjacent pairs), all triples avoiding
    it.  Missed 4-sets containing a stable triple add nothing new."""
    n = graphs.ground_size(k)
    out = []
    for i in range(1, k + 5):
        for j in index_J(i, k):
            miss = set(pair_of(i, k)) | set(pair_of(j, k))
            support = [x for x in range(1, n + 1) if x not in miss]
            face = list(itertools.combinations(support, 3))
            if face:
                out.append(face)
    return out


def filtration(k: int, level: int) -> NbhdComplex:
    """The four nested complexes over ground set [k+6].

    Level 0 is the complex of the stable-only graph, level 1 the complex of
    the mixed graph, level 3 the full complex.  Level 2 sits in between:
    level 1 plus every face of the full complex that misses exactly four
    ground elements.
    """
    if level not in (0, 1, 2, 3):
        raise ValueError("level must be one of 0..3, got %r" % (level,))
    return _filtration(k, level)


@lru_cache(maxsize=None)
def _filtration(k: int, level: int) -> NbhdComplex:
    if level == 0:
        return complex_for('sg', k)
    if level == 1:
        return complex_for('s', k)
    if level == 3:
        return complex_for('kg', k)
    base = complex_for('s', k)
    gens = [list(m) for m in base.maximal] + _level2_extras(k)
    return NbhdComplex.from_maximal(k, gens)


class PQTag(NamedTuple):
    """Which family a face outside the mixed complex belongs to."""
    family: str   # 'P' misses three ground elements, 'Q' misses four
    i: int        # the missed adjacent pair is {i, i+1} (cyclically)
    j: int        # the third missed element ('P') or start of the second pair ('Q')
    fiber: tuple  # lex-least unstable member, the sub-fiber label


def pq_classify(sigma, k: int) -> PQTag:
    """Locate a face of the full complex outside the mixed one.

    The missed set determines (family, i, j) uniquely: runs of three or
    four are read starting at the lower adjacent pair, and any other shape
    would put the face inside level 1 or break the partition, which raises.
    """
    fk = face_key(graphs.check_vertex(v, k) for v in sigma)
    if not fk:
        raise MatchingError("the empty face carries no tag")
    comp = complement_set(fk, k).complement
    if len(comp) < 3:
        raise MatchingError("%r misses only %d ground elements; not a face of the full complex"
                            % (sigma, len(comp)))
    if level1_contains(fk, k):
        raise MatchingError("%r lies in the mixed complex; the families cover only the outside"
                            % (sigma,))
    least = min(v for v in fk if not graphs.is_stable(v, k))
    if len(comp) == 3:
        parsed = parse_three(comp, k)
        if parsed is None:
            raise MatchingError("missed set %r holds no adjacent pair; the partition is broken"
                                % (comp,))
        return PQTag('P', parsed[0], parsed[1], least)
    if len(comp) == 4:
        parsed = parse_four(comp, k)
        if parsed is None:
            raise MatchingError("missed set %r is not two disjoint adjacent pairs; the partition is broken"
                                % (comp,))
        return PQTag('Q', parsed[0], parsed[1], least)
    raise MatchingError("missed set %r has five or more elements yet no stable triple" % (comp,))


def _validate_j1(j: int, k: int) -> None:
    if j not in index_I(1, k):
        raise ValueError("j=%r cannot accompany the pair {1, 2} at k=%d" % (j, k))


def nc_set(j: int, k: int) -> list[tuple]:
    """Sub-fiber labels whose toggle run clears the sub-fiber completely.

    Generated straight from the shape, so tests can compare it with the
    case classifier: {q, s-1, s} with q in 4..k+4 and s in q+2..k+6, both
    avoiding {j, j+1}.
    """
    _validate_j1(j, k)
    n = graphs.ground_size(k)
    out = []
    for q in range(4, k + 5):
        if q in (j, j + 1):
            continue
        for s in range(q + 2, n + 1):
            if s in (j, j + 1):
                continue
            out.append((q, s - 1, s))
    return sorted(out)


def c_set(j: int, k: int) -> list[tuple]:
    """Sub-fiber labels that keep one critical cell: the unstable triples
    avoiding {1, 2, j} that do not fall in ``nc_set``.  There are
    (k+1)(k+2)/2 of them for every admissible j."""
    _validate_j1(j, k)
    ncs = set(nc_set(j, k))
    return sorted(t for t in graphs.all_triples(k)
                  if not graphs.is_stable(t, k)
                  and not set(t) & {1, 2, j}
                  and t not in ncs)


def w_case(v, j: int, k: int) -> str:
    """Which toggle-list shape the sub-fiber of label v takes.

    'blocked'  v meets {1, 2, j}: the sub-fiber is empty.
    'cleared'  v = {q, s, s+1}, q not 3 or j+1: the run matches everything.
    'low-run'  v = {3, s, s+1}: one survivor.
    'after-j'  v = {j+1, s, s+1}: one survivor.
    'split'    v = {q, q+1, s} with s > q+2: one survivor.

    The three surviving shapes are exactly the labels of ``c_set``, the
    cleared shape is ``nc_set``.
    """
    t = graphs.check_vertex(v, k)
    if graphs.is_stable(t, k):
        raise ValueError("%r is stable; sub-fibers are labelled by unstable triples" % (v,))
    _validate_j1(j, k)
    if set(t) & {1, 2, j}:
        return 'blocked'
    s1, s2, s3 = t
    if s3 == s2 + 1:
        if s1 == 3:
            return 'low-run'
        if s1 == j + 1:
            return 'after-j'
        return 'cleared'
    # 1 is never a member here, so the adjacent pair cannot wrap and must
    # sit at the bottom of the triple
    if s2 != s1 + 1:
        raise AssertionError("unstable %r has no adjacent pair" % (v,))
    return 'split'


def w_set(v, j: int, k: int) -> tuple:
    """The toggle list of one sub-fiber, lex sorted.

    Every toggle avoids {1, 2, j} and exceeds v, so applying it neither
    leaves the family support nor changes the lex-least unstable member.
    The base shape is {t, s2, s3} for the free third elements t; 'cleared'
    adds toggles {t, s1, s3} for small t and 'after-j' adds {t, j+1, s3}
    (which drop s2), the arms that sweep away what the base shape misses.
    """
    case = w_case(v, j, k)
    n = graphs.ground_size(k)
    s1, s2, s3 = graphs.check_vertex(v, k)
    out: list[tuple] = []
    if case == 'cleared':
        skip = set(range(1, s1 + 1)) | {j, s2, s3}
        out += [tuple(sorted((t, s2, s3))) for t in range(1, n + 1) if t not in skip]
        out += [(t, s1, s3) for t in range(3, s1 - 1) if t != j]
    elif case == 'low-run':
        skip = {1, 2, 3, j, s2, s3}
        out += [tuple(sorted((t, s2, s3))) for t in range(1, n + 1) if t not in skip]
    elif case == 'after-j':
        skip = set(range(1, j + 2)) | {s2, s3}
        out += [tuple(sorted((t, s2, s3))) for t in range(1, n + 1) if t not in skip]
        out += [(t, j + 1, s3) for t in range(3, j)]
    elif case == 'split':
        skip = {1, 2, j, s1, s2, s3}
        out += [tuple(sorted((t, s2, s3))) for t in range(1, n + 1) if t not in skip]
    else:
        return ()
    ws = sorted(set(out))
    if len(ws) != len(out):
        raise AssertionError("duplicate toggles for label %r" % (v,))
    return tuple(ws)


def critical_form(v, j: int, k: int) -> tuple | None:
    """The survivor of the toggle run of label v, in closed form.

    None when the run clears the sub-fiber or the sub-fiber is empty.
    'low-run' and 'split' keep every triple {t, s2, s3} with t free;
    'after-j' keeps {t, j+1, s3} for t below j together with {t, s2, s3}
    for t above j.  Always k+1 members, a cell of dimension k.
    """
    case = w_case(v, j, k)
    n = graphs.ground_size(k)
    s1, s2, s3 = graphs.check_vertex(v, k)
    if case in ('low-run', 'split'):
        skip = {1, 2, j, s2, s3}
        cell = [tuple(sorted((t, s2, s3))) for t in range(1, n + 1) if t not in skip]
    elif case == 'after-j':
        cell = [(t, j + 1, s3) for t in range(3, j)]
        cell += [tuple(sorted((t, s2, s3))) for t in range(j + 1, n + 1) if t not in (s2, s3)]
    else:
        return None
    cell.sort()
    if len(cell) != k + 1:
        raise AssertionError("closed form for %r has %d members, wanted %d" % (v, len(cell), k + 1))
    return tuple(cell)


class FamilyFaces(NamedTuple):
    """One family enumerated as bitmasks.

    Bit b of a face stands for ``triples[b]``; ``unstable`` collects the
    bits whose triple is unstable; ``cover[m]`` is the ground-element mask
    covered by the bit set m, for every subset of the universe.
    """
    triples: tuple
    unstable: int
    faces: list
    cover: list


def family_faces(k: int, cset: Iterable[int]) -> FamilyFaces:
    """Every face missing exactly ``cset`` that has an unstable member.

    The missed set must contain no stable triple, otherwise the family
    would sit inside the mixed complex and be empty here.  The subset
    table is exponential in the number of triples of the support, hence
    the hard cap of ``SCAN_BITS``.
    """
    n = graphs.ground_size(k)
    cs = sorted(set(cset))
    if not cs or cs[0] < 1 or cs[-1] > n:
        raise ValueError("missed set %r leaves the ground set 1..%d" % (cset, n))
    if any(graphs.is_stable(t, k) for t in itertools.combinations(cs, 3)):
        raise ValueError("missed set %r contains a stable triple; that family is empty" % (cset,))
    support = [x for x in range(1, n + 1) if x not in cs]
    triples = tuple(itertools.combinations(support, 3))
    m = len(triples)
    if m > SCAN_BITS:
        raise ValueError("support of %d elements spans %d triples; subset scan beyond %d bits refused"
                         % (len(support), m, SCAN_BITS))
    elem = [graphs.vertex_mask(t) for t in triples]
    full = graphs.vertex_mask(support)
    unstable = 0
    for b, t in enumerate(triples):
        if not graphs.is_stable(t, k):
            unstable |= 1 << b
    cover = [0] * (1 << m)
    faces = []
    append = faces.append
    for s in range(1, 1 << m):
        low = s & -s
        c = cover[s ^ low] | elem[low.bit_length() - 1]
        cover[s] = c
        if c == full and s & unstable:
            append(s)
    return FamilyFaces(triples, unstable, faces, cover)


def split_fibers(fam: FamilyFaces) -> dict[int, list[int]]:
    """Family faces keyed by the bit of their lex-least unstable member.

    Bit order agrees with lex order on triples, so ascending keys walk the
    sub-fibers in the order the labels are processed.  Empty sub-fibers do
    not appear.
    """
    fibers: dict[int, list[int]] = {}
    for f in fam.faces:
        u = f & fam.unstable
        fibers.setdefault((u & -u).bit_length() - 1, []).append(f)
    return dict(sorted(fibers.items()))


def toggle_run(faces: Iterable, wbits: list) -> tuple[list, set, dict]:
    """Run the element matchings of an ordered toggle list.

    Stage t pairs a face with its t-th toggle when both sides are still
    unmatched; later stages only see the leftovers.  Returns (pairs,
    survivors, stage) where stage maps every face to the stage that
    matched it, 1-based, survivors getting len(wbits) + 1.  Works on
    bitmask faces with one-bit toggles and on tuple faces with triple
    toggles alike.
    """
    remaining = set(faces)
    pairs: list = []
    stage: dict = {}
    for t, wb in enumerate(wbits, start=1):
        m, matched = element_matching(remaining, wb)
        pairs.extend(m.pairs)
        for f in matched:
            stage[f] = t
        remaining -= matched
    last = len(wbits) + 1
    for f in remaining:
        stage[f] = last
    return pairs, remaining, stage


class FiberRecord(NamedTuple):
    """Shape of one processed sub-fiber.  For a rotated family the label is
    the image of the base label, not the lex-least member in the new frame."""
    vertex: tuple
    case: str
    size: int
    pairs: int
    critical: int


@dataclass
class FamilyMatching:
    """An acyclic matching on one family, with its audit trail.

    ``triples`` is the bit dictionary of the masks in ``faces``, ``pairs``
    and ``critical``; ``fibers`` records the sub-fiber runs in processing
    order; ``checked`` is 'full' (independent re-enumeration, survivor
    forms, residue identity, acyclicity of the whole family) or 'spot'
    (seeded sample audit of a rotated copy).
    """
    k: int
    family: str
    i: int
    j: int
    cset: tuple
    triples: tuple
    faces: list
    pairs: list
    critical: list
    fibers: list
    checked: str

    def decode(self, mask: int) -> tuple:
        return _decode(mask, self.triples)

    def decoded_pairs(self) -> list[tuple]:
        return [(self.decode(a), self.decode(b)) for a, b in self.pairs]

    def decoded_critical(self) -> list[tuple]:
        return [self.decode(c) for c in self.critical]

    def matching(self) -> Matching:
        return Matching(self.pairs)


def _decode(mask: int, triples: tuple) -> tuple:
    out = []
    while mask:
        low = mask & -mask
        out.append(triples[low.bit_length() - 1])
        mask ^= low
    return tuple(out)


def p_complement(k: int, i: int, j: int) -> tuple:
    """The missed set {i, i+1, j} of a three-element family, validated."""
    n = graphs.ground_size(k)
    if not 1 <= i <= n:
        raise ValueError("pair start i=%r leaves the ground set 1..%d" % (i, n))
    if j not in index_I(i, k):
        raise ValueError("j=%r cannot accompany the pair {%d, %d}" % (j, i, i % n + 1))
    return tuple(sorted(set(pair_of(i, k)) | {j}))


def q_complement(k: int, i: int, j: int) -> tuple:
    """The missed set {i, i+1, j, j+1} of a four-element family, validated."""
    if not 1 <= i <= k + 4:
        raise ValueError("first pair start i=%r must lie in 1..%d" % (i, k + 4))
    if j not in index_J(i, k):
        raise ValueError("second pair start j=%r is not admissible after i=%d" % (j, i))
    return tuple(sorted(set(pair_of(i, k)) | set(pair_of(j, k))))


def _family_rng(seed: int, i: int, j: int) -> random.Random:
    return random.Random(seed * 1000003 + i * 101 + j)


def matching_P(k: int, i: int, j: int, *, verify: str | None = None,
               seed: int = 0) -> FamilyMatching:
    """Acyclic matching on the family missing {i, i+1, j}.

    For i = 1 the family is built directly: it splits along lex-least
    unstable members and every sub-fiber runs its toggle list, leaving one
    closed-form cell per ``c_set`` label, (k+1)(k+2)/2 cells of dimension
    k in total.  Other i come from rotating the i = 1 family with the
    matching j by i - 1; rotation respects missed sets and covering, so
    acyclicity carries over.

    verify='full' (the default except for rotated families at k >= 3)
    re-enumerates the family independently, checks every survivor against
    its closed form and every cleared run against the direct residue
    identity, and tests acyclicity of the family as a whole.
    verify='spot' audits a seeded 1% sample of the rotated pairs plus all
    rotated critical cells instead.
    """
    cset = p_complement(k, i, j)
    if verify is None:
        verify = 'spot' if (i != 1 and k >= 3) else 'full'
    if verify not in ('full', 'spot'):
        raise ValueError("verify must be 'full' or 'spot', got %r" % (verify,))
    if i == 1:
        return _matching_p1(k, j, cset, 'full')
    jp = graphs.rotate(j, 1 - i, k)
    base = _matching_p1(k, jp, p_complement(k, 1, jp), 'full')
    return _rotate_family(base, k, i, j, cset, verify, seed)


def _matching_p1(k: int, j: int, cset: tuple, checked: str) -> FamilyMatching:
    fam = family_faces(k, cset)
    idx = {t: b for b, t in enumerate(fam.triples)}
    full = fam.cover[-1]
    retain = set(c_set(j, k))
    clear = set(nc_set(j, k))
    allpairs: list = []
    criticals: list = []
    records: list = []
    for b, faces in split_fibers(fam).items():
        v = fam.triples[b]
        case = w_case(v, j, k)
        wbits = []
        for w in w_set(v, j, k):
            wb = idx.get(w)
            if wb is None:
                raise MatchingError("toggle %r of label %r leaves the support of %r" % (w, v, cset))
            wbits.append(1 << wb)
        pairs, residue, _ = toggle_run(faces, wbits)
        # direct residue identity: a survivor holds every toggle and loses
        # full coverage as soon as any one toggle is removed
        wall = 0
        for wb in wbits:
            wall |= wb
        ident = {f for f in faces
                 if f & wall == wall and all(fam.cover[f & ~wb] != full for wb in wbits)}
        if residue != ident:
            raise MatchingError("toggle run of label %r disagrees with the residue identity (j=%d)"
                                % (v, j))
        if v in retain:
            want = critical_form(v, j, k)
            if len(residue) != 1 or _decode(next(iter(residue)), fam.triples) != want:
                raise MatchingError("label %r kept %d cells instead of its closed form (j=%d)"
                                    % (v, len(residue), j))
        elif v in clear:
            if residue:
                raise MatchingError("label %r should clear but kept %d cells (j=%d)"
                                    % (v, len(residue), j))
        else:
            raise MatchingError("label %r owns a sub-fiber yet is neither kind (j=%d)" % (v, j))
        allpairs.extend(pairs)
        criticals.extend(sorted(residue))
        records.append(FiberRecord(v, case, len(faces), len(pairs), len(residue)))
    present = {rec.vertex for rec in records}
    if not retain <= present:
        raise MatchingError("labels %r should retain a cell but own no face (j=%d)"
                            % (sorted(retain - present), j))
    if 2 * len(allpairs) + len(criticals) != len(fam.faces):
        raise MatchingError("matched pairs and critical cells do not partition the family (j=%d)" % (j,))
    result = FamilyMatching(k, 'P', 1, j, cset, fam.triples, fam.faces,
                            allpairs, criticals, records, checked)
    ok, cyc = is_acyclic(result.matching(), cells=fam.faces)
    if not ok:
        raise MatchingError("family (1, %d) matching has a directed cycle through %r"
                            % (j, [result.decode(a) for a, _ in cyc[:3]]))
    return result


def _bit_perm(base_triples: tuple, idx: dict, shift: int, k: int) -> list[int]:
    return [idx[graphs.rotate(t, shift, k)] for t in base_triples]


def _remap(mask: int, perm: list[int]) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= 1 << perm[low.bit_length() - 1]
        mask ^= low
    return out


def _rotate_family(base: FamilyMatching, k: int, i: int, j: int, cset: tuple,
                   verify: str, seed: int) -> FamilyMatching:
    n = graphs.ground_size(k)
    shift = i - 1
    support = [x for x in range(1, n + 1) if x not in set(cset)]
    triples = tuple(itertools.combinations(support, 3))
    idx = {t: b for b, t in enumerate(triples)}
    perm = _bit_perm(base.triples, idx, shift, k)
    faces = sorted(_remap(f, perm) for f in base.faces)
    pairs = [(_remap(a, perm), _remap(b, perm)) for a, b in base.pairs]
    crit = sorted(_remap(c, perm) for c in base.critical)
    fibers = [rec._replace(vertex=graphs.rotate(rec.vertex, shift, k)) for rec in base.fibers]
    result = FamilyMatching(k, 'P', i, j, cset, triples, faces, pairs, crit, fibers, verify)
    if verify == 'full':
        fam = family_faces(k, cset)
        if faces != fam.faces:
            raise MatchingError("rotated family (%d, %d) differs from the direct enumeration" % (i, j))
        ok, cyc = is_acyclic(result.matching(), cells=faces)
        if not ok:
            raise MatchingError("rotated family (%d, %d) has a directed cycle" % (i, j))
    else:
        audit = _audit_context(k, 'P', i, j, cset, triples)
        rng = _family_rng(seed, i, j)
        for t in _sample_indices(rng, len(pairs)):
            a, b = pairs[t]
            if not is_cover(a, b):
                raise MatchingError("sampled pair %d of family (%d, %d) is not covering" % (t, i, j))
            audit(a)
            audit(b)
        for c in crit:
            audit(c)
            if face_dim(c) != k:
                raise MatchingError("critical cell of family (%d, %d) has dimension %d, wanted %d"
                                    % (i, j, face_dim(c), k))
    return result


def _sample_indices(rng: random.Random, total: int, fraction: float = 0.01) -> list[int]:
    if total == 0:
        return []
    count = min(total, max(1, int(total * fraction)))
    return sorted(rng.sample(range(total), count))


def _audit_context(k: int, family: str, i: int, j: int, cset: tuple, triples: tuple):
    """A membership check for sampled masks of one family: exact missed set,
    an unstable member, and the right partition tag."""
    n = graphs.ground_size(k)
    elem = [graphs.vertex_mask(t) for t in triples]
    support_mask = graphs.vertex_mask([x for x in range(1, n + 1) if x not in set(cset)])
    ubits = 0
    for b, t in enumerate(triples):
        if not graphs.is_stable(t, k):
            ubits |= 1 << b

    def audit(mask: int) -> None:
        cov = 0
        m = mask
        while m:
            low = m & -m
            cov |= elem[low.bit_length() - 1]
            m ^= low
        if cov != support_mask:
            raise MatchingError("sampled face of family (%s, %d, %d) does not miss exactly %r"
                                % (family, i, j, cset))
        if not mask & ubits:
            raise MatchingError("sampled face of family (%s, %d, %d) has no unstable member"
                                % (family, i, j))
        tag = pq_classify(_decode(mask, triples), k)
        if (tag.family, tag.i, tag.j) != (family, i, j):
            raise MatchingError("sampled face classifies as %r, not (%s, %d, %d)"
                                % (tag, family, i, j))

    return audit


def matching_Q(k: int, i: int, j: int, *, verify: str = 'full') -> FamilyMatching:
    """Acyclic matching on the family missing {i, i+1} and {j, j+1}.

    Rotating by k+5-j moves the second pair onto {k+5, k+6}; every member
    of a rotated face then avoids the top two ground elements, and a triple
    inside [k+4] is stable mod k+6 iff it is stable mod k+5, so the rotated
    faces are exactly the faces of a three-element family one parameter
    down (missed set the image of {i, i+1, j, j+1} minus k+6, which always
    reads as an adjacent pair plus one element).  The matching is that
    family's, pulled back through the rotation: k(k+1)/2 critical cells of
    dimension k-1.  Verification re-enumerates the family directly, which
    confirms the transport, and checks acyclicity; families here are small
    enough that 'full' is always used.
    """
    if k < 1:
        raise ValueError("every four-element missed set at k=0 leaves a two-point support; "
                         "the families are empty and carry no matching")
    cset = q_complement(k, i, j)
    if verify != 'full':
        raise ValueError("matching_Q only supports verify='full', got %r" % (verify,))
    n = graphs.ground_size(k)
    shift = k + 5 - j
    down = sorted(graphs.rotate(x, shift, k) for x in cset)
    if down[-2:] != [k + 5, k + 6]:
        raise AssertionError("rotation by %d failed to move the second pair on top" % (shift,))
    parsed = parse_three(down[:3], k - 1)
    if parsed is None:
        raise MatchingError("image missed set %r does not parse one parameter down" % (down,))
    i2, j2 = parsed
    base = matching_P(k - 1, i2, j2)
    support = [x for x in range(1, n + 1) if x not in set(cset)]
    triples = tuple(itertools.combinations(support, 3))
    idx = {t: b for b, t in enumerate(triples)}
    perm = _bit_perm(base.triples, idx, -shift, k)
    faces = sorted(_remap(f, perm) for f in base.faces)
    pairs = [(_remap(a, perm), _remap(b, perm)) for a, b in base.pairs]
    crit = sorted(_remap(c, perm) for c in base.critical)
    fibers = [rec._replace(vertex=graphs.rotate(rec.vertex, -shift, k)) for rec in base.fibers]
    result = FamilyMatching(k, 'Q', i, j, cset, triples, faces, pairs, crit, fibers, verify)
    fam = family_faces(k, cset)
    if faces != fam.faces:
        raise MatchingError("pulled-back family (%d, %d) differs from the direct enumeration" % (i, j))
    want = k * (k + 1) // 2
    if len(crit) != want:
        raise MatchingError("family (Q, %d, %d) kept %d cells, wanted %d" % (i, j, len(crit), want))
    for c in crit:
        if face_dim(c) != k - 1:
            raise MatchingError("critical cell of family (Q, %d, %d) has dimension %d, wanted %d"
                                % (i, j, face_dim(c), k - 1))
    ok, cyc = is_acyclic(result.matching(), cells=faces)
    if not ok:
        raise MatchingError("family (Q, %d, %d) matching has a directed cycle" % (i, j))
    return result


def label_order_I(i: int, k: int) -> list[int]:
    """The admissible third elements for the pair {i, i+1} in processing
    order: starting at i+2 and walking the cycle round to i-2.  Reports and
    census rows use this order; nothing else depends on it."""
    n = graphs.ground_size(k)
    js = [(i + 1 + t) % n + 1 for t in range(n - 3)]
    if sorted(js) != index_I(i, k):
        raise AssertionError("label order walked off the admissible set for i=%d" % (i,))
    return js


def p_indices(k: int) -> list[tuple[int, int]]:
    """All (i, j) of three-element families in processing order; there are
    (k+3)(k+6) of them."""
    n = graphs.ground_size(k)
    out = [(i, j) for i in range(1, n + 1) for j in label_order_I(i, k)]
    if len(out) != (k + 3) * (k + 6):
        raise MatchingError("found %d three-element families, wanted (k+3)(k+6) = %d"
                            % (len(out), (k + 3) * (k + 6)))
    return out


def q_indices(k: int) -> list[tuple[int, int]]:
    """All (i, j) of four-element families in processing order; there are
    (k+3)(k+6)/2 of them."""
    out = [(i, j) for i in range(1, k + 5) for j in index_J(i, k)]
    want, rem = divmod((k + 3) * (k + 6), 2)
    if rem:
        raise AssertionError("(k+3)(k+6) is odd at k=%d" % (k,))
    if len(out) != want:
        raise MatchingError("found %d four-element families, wanted (k+3)(k+6)/2 = %d"
                            % (len(out), want))
    return out


def _census_rotation(base: FamilyMatching, k: int, i: int, j: int, seed: int) -> None:
    """Sample-audit the rotation of a verified family without materialising
    it: remap a seeded 1% of the pairs and every critical cell, and check
    membership and tags in the target frame.  Raises ``MatchingError`` on
    any discrepancy; counts are preserved by the bijection."""
    cset = p_complement(k, i, j)
    n = graphs.ground_size(k)
    support = [x for x in range(1, n + 1) if x not in set(cset)]
    triples = tuple(itertools.combinations(support, 3))
    idx = {t: b for b, t in enumerate(triples)}
    perm = _bit_perm(base.triples, idx, i - 1, k)
    audit = _audit_context(k, 'P', i, j, cset, triples)
    rng = _family_rng(seed, i, j)
    for t in _sample_indices(rng, len(base.pairs)):
        a, b = base.pairs[t]
        a2, b2 = _remap(a, perm), _remap(b, perm)
        if not is_cover(a2, b2):
            raise MatchingError("sampled pair %d of family (%d, %d) is not covering" % (t, i, j))
        audit(a2)
        audit(b2)
    for c in base.critical:
        c2 = _remap(c, perm)
        audit(c2)
        if face_dim(c2) != k:
            raise MatchingError("critical cell of family (%d, %d) has dimension %d, wanted %d"
                                % (i, j, face_dim(c2), k))


def _compose_layer(k: int, pairs: list, crit: list, upper: int, lower: int, tag: str) -> None:
    """Check one whole layer at once: the union of the family matchings is
    acyclic over the faces of the upper stage, and what it leaves unmatched
    is the lower stage plus the counted critical cells."""
    cells = filtration(k, upper).all_faces()
    m = Matching(pairs)
    ok, cyc = is_acyclic(m, cells=cells)
    if not ok:
        raise MatchingError("%s layer matching has a directed cycle through %r" % (tag, cyc[:2]))
    left = cells - m.matched()
    want = filtration(k, lower).all_faces() | set(crit)
    if left != want:
        raise MatchingError("%s layer survivors are not stage %d plus the counted cells "
                            "(%d unexpected, %d missing)"
                            % (tag, lower, len(left - want), len(want - left)))


def theorem3_counts(k: int, *, census: bool | None = None, seed: int = 0) -> dict:
    """Closed-form critical-cell counts with a mechanical census.

    Returns a dict with the layer totals and the sphere count they imply:
    ``extra_k_cells`` = (k+1)(k+2)(k+3)(k+6)/2 survivors of dimension k
    outside the middle stage, ``extra_km1_cells`` = k(k+1)(k+3)(k+6)/4 of
    dimension k-1 between the mixed stage and the middle one, and
    ``predicted_t`` = extra_k_cells - extra_km1_cells + 1 =
    (k+1)(k+3)(k+4)(k+6)/4 + 1, the number of (k+1)-spheres in the wedge.
    ``rows`` lists (family, i, j, cells, critical, dim) per family.

    With census (the default up to k=3) every family matching is built and
    its critical count compared against the closed form; a mismatch raises
    ``MatchingError`` naming the family.  Up to k=2 every family is
    verified in full and the two layers are composed and checked for
    acyclicity as single matchings; at k=3 the i=1 families are verified
    in full and their rotations are sample-audited with the given seed.
    Beyond k=3 pass census=False for the formula values alone.
    """
    if k < 0:
        raise ValueError("k must be nonnegative, got %r" % (k,))
    if census is None:
        census = k <= 3
    extra_k = (k + 1) * (k + 2) * (k + 3) * (k + 6)
    if extra_k % 2:
        raise AssertionError("(k+1)(k+2)(k+3)(k+6) is odd at k=%d" % (k,))
    extra_k //= 2
    extra_km1 = k * (k + 1) * (k + 3) * (k + 6)
    if extra_km1 % 4:
        raise AssertionError("k(k+1)(k+3)(k+6) is not a multiple of 4 at k=%d" % (k,))
    extra_km1 //= 4
    predicted = (k + 1) * (k + 3) * (k + 4) * (k + 6)
    if predicted % 4:
        raise AssertionError("(k+1)(k+3)(k+4)(k+6) is not a multiple of 4 at k=%d" % (k,))
    predicted = predicted // 4 + 1
    if predicted != extra_k - extra_km1 + 1:
        raise MatchingError("the layer totals do not telescope to the sphere count at k=%d" % (k,))
    out = {
        'k': k,
        'extra_k_cells': extra_k,
        'extra_km1_cells': extra_km1,
        'predicted_t': predicted,
        'censused': census,
        'seed': seed,
        'rows': [],
        'observed_k_cells': None,
        'observed_km1_cells': None,
    }
    if not census:
        return out
    if k > 3:
        raise ValueError("the census at k=%d is out of scan budget; pass census=False "
                         "for the formula values" % (k,))
    per_p = (k + 1) * (k + 2) // 2
    per_q = k * (k + 1) // 2
    rows: list[tuple] = []
    observed_k = 0
    p_pairs_dec: list = []
    p_crit_dec: list = []
    if k <= 2:
        for i, j in p_indices(k):
            fm = matching_P(k, i, j)
            if len(fm.critical) != per_p:
                raise MatchingError("family (P, %d, %d) kept %d cells, wanted %d"
                                    % (i, j, len(fm.critical), per_p))
            rows.append(('P', i, j, len(fm.faces), len(fm.critical), k))
            observed_k += len(fm.critical)
            p_pairs_dec.extend(fm.decoded_pairs())
            p_crit_dec.extend(fm.decoded_critical())
        _compose_layer(k, p_pairs_dec, p_crit_dec, 3, 2, "top")
    else:
        by_base: dict[int, list] = {}
        order: dict[tuple, int] = {}
        for pos, (i, j) in enumerate(p_indices(k)):
            order[(i, j)] = pos
            by_base.setdefault(graphs.rotate(j, 1 - i, k), []).append((i, j))
        placed: dict[tuple, tuple] = {}
        for jp in label_order_I(1, k):
            base = matching_P(k, 1, jp)
            if len(base.critical) != per_p:
                raise MatchingError("family (P, 1, %d) kept %d cells, wanted %d"
                                    % (jp, len(base.critical), per_p))
            for i, j in by_base[jp]:
                if i != 1:
                    _census_rotation(base, k, i, j, seed)
                placed[(i, j)] = ('P', i, j, len(base.faces), len(base.critical), k)
                observed_k += len(base.critical)
            del base
        rows.extend(placed[key] for key in sorted(placed, key=order.__getitem__))
    if observed_k != extra_k:
        raise MatchingError("dimension-k survivors total %d, formula says %d" % (observed_k, extra_k))
    observed_km1 = 0
    q_pairs_dec: list = []
    q_crit_dec: list = []
    for i, j in q_indices(k):
        if k == 0:
            fam = family_faces(k, q_complement(k, i, j))
            if fam.faces:
                raise MatchingError("family (Q, %d, %d) should be empty at k=0" % (i, j))
            rows.append(('Q', i, j, 0, 0, k - 1))
            continue
        fm = matching_Q(k, i, j)
        if len(fm.critical) != per_q:
            raise MatchingError("family (Q, %d, %d) kept %d cells, wanted %d"
                                % (i, j, len(fm.critical), per_q))
        rows.append(('Q', i, j, len(fm.faces), len(fm.critical), k - 1))
        observed_km1 += len(fm.critical)
        if k <= 2:
            q_pairs_dec.extend(fm.decoded_pairs())
            q_crit_dec.extend(fm.decoded_critical())
    if k <= 2 and k >= 1:
        _compose_layer(k, q_pairs_dec, q_crit_dec, 2, 1, "middle")
    if observed_km1 != extra_km1:
        raise MatchingError("dimension-(k-1) survivors total %d, formula says %d"
                            % (observed_km1, extra_km1))
    out['rows'] = rows
    out['observed_k_cells'] = observed_k
    out['observed_km1_cells'] = observed_km1
    return out

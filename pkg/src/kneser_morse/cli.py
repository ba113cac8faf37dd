"""Command line driver: build complexes, verify matchings, compute homology.

Three subcommands.  ``build`` prints size and maximal-face data for one
neighborhood complex.  ``verify`` runs the named verification target and
reports one pass/fail result per check; the process exits 0 iff every
check passed, and on failure the first line written to standard error
names the failing check.  ``betti`` prints a reduced Betti table from
the exact homology oracle.

Reports carry {command, k, results, seed, elapsed_ms}; everything except
elapsed_ms is byte-deterministic for a fixed (command, k, format, seed).
Parameters are capped to keep desk-scale runtimes (verification depth
'full-snf' stops at k=2, 'acyclicity' at k=3, 'counts' at k=5) and
--allow-large lifts the cap for anyone with time to spare.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

from . import collapse, graphs, wedge
from .complexes import complex_for
from .homology import betti, relative_betti

K_CAPS = {'counts': 5, 'acyclicity': 3, 'full-snf': 2}
KINDS = ('kg', 's', 'sg')


class Refusal(RuntimeError):
    """A parameter outside the default caps without --allow-large."""


def _check_cap(name: str, k: int, cap: int, allow_large: bool) -> None:
    if k > cap and not allow_large:
        raise Refusal(
            "%s refused at k=%d: the default cap is k <= %d because the face "
            "families grow combinatorially; pass --allow-large to run anyway"
            % (name, k, cap))


def _result(name: str, k: int, passed: bool, **detail) -> dict:
    return {'name': name, 'k': k, 'pass': bool(passed), 'detail': detail}


# ---------------------------------------------------------------- build

def cmd_build(args) -> tuple[list[dict], bool]:
    _check_cap("build %s" % args.kind, args.k, K_CAPS['counts'], args.allow_large)
    g = graphs.graph(args.kind, args.k)
    cx = complex_for(args.kind, args.k)
    sizes: dict[int, int] = {}
    for m in cx.maximal:
        sizes[len(m)] = sizes.get(len(m), 0) + 1
    res = _result(
        'build-%s' % args.kind, args.k, True,
        vertices=len(g.verts),
        edges=sum(1 for _ in g.edges()),
        maximal_faces=len(cx.maximal),
        dim=cx.dim(),
        maximal_by_size={str(s): c for s, c in sorted(sizes.items())},
    )
    return [res], True


# ---------------------------------------------------------------- verify

def _verify_theorem2(k: int, seed: int, depth: str) -> list[dict]:
    report = collapse.theorem2_matching(k)
    recs = [{'lemma': r.lemma, 'fiber': r.fiber, 'cells': r.cells, 'pairs': r.pairs,
             'acyclic': r.acyclic, 'perfect': r.perfect,
             'critical_count': r.critical_count} for r in report.records]
    total = recs[-1] if recs else {}
    return [_result('theorem2-collapse', k, report.ok,
                    cells=total.get('cells', 0), pairs=total.get('pairs', 0),
                    critical=len(report.critical), records=recs)]


def _verify_theorem3(k: int, seed: int, depth: str) -> list[dict]:
    census = k <= 3
    counts = wedge.theorem3_counts(k, census=census, seed=seed)
    out = [_result('theorem3-census' if census else 'theorem3-formula', k, True,
                   extra_k_cells=counts['extra_k_cells'],
                   extra_km1_cells=counts['extra_km1_cells'],
                   predicted_t=counts['predicted_t'],
                   censused=counts['censused'],
                   families=len(counts['rows']) or None,
                   rows=[list(r) for r in counts['rows']])]
    if depth == 'full-snf':
        t = counts['predicted_t']
        kg = betti(complex_for('kg', k), max_dim=k + 1)
        want = tuple(t if d == k else 0 for d in range(k + 2))
        out.append(_result('theorem3-betti', k, kg.numbers == want,
                           numbers=list(kg.numbers), wanted=list(want)))
        top = relative_betti(wedge.filtration(k, 3), wedge.filtration(k, 2), max_dim=k + 1)
        wt = tuple(counts['extra_k_cells'] if d == k else 0 for d in range(k + 2))
        out.append(_result('theorem3-relative-top', k, top.numbers == wt,
                           numbers=list(top.numbers), wanted=list(wt)))
        mid = relative_betti(wedge.filtration(k, 2), wedge.filtration(k, 1), max_dim=max(k, 1))
        wm = tuple(counts['extra_km1_cells'] if d == k - 1 else 0 for d in range(max(k, 1) + 1))
        out.append(_result('theorem3-relative-mid', k, mid.numbers == wm,
                           numbers=list(mid.numbers), wanted=list(wm)))
    return out


def _verify_records(k: int, seed: int, lemma: str) -> list[dict]:
    report = collapse.theorem2_matching(k)
    out = []
    for r in report.records:
        if r.lemma != lemma:
            continue
        ok = r.acyclic and (r.perfect or r.lemma in ('sg-matching', 's3k-collapse'))
        out.append(_result(lemma, k, ok, fiber=r.fiber, cells=r.cells,
                           pairs=r.pairs, critical=r.critical_count))
    if not out:
        out.append(_result(lemma, k, False, error="no fibers of this kind at k=%d" % k))
    return out


def _verify_filtration(k: int, seed: int, depth: str) -> list[dict]:
    stages = [wedge.filtration(k, lv).all_faces() for lv in range(4)]
    nested = stages[0] <= stages[1] <= stages[2] <= stages[3]
    return [_result('filtration-nesting', k, nested,
                    sizes=[len(s) for s in stages])]


def _verify_p_families(k: int, seed: int, depth: str) -> list[dict]:
    counts = wedge.theorem3_counts(k, census=True, seed=seed)
    rows = [r for r in counts['rows'] if r[0] == 'P']
    return [_result('p-families', k, True, families=len(rows),
                    critical_total=counts['observed_k_cells'])]


def _verify_q_families(k: int, seed: int, depth: str) -> list[dict]:
    counts = wedge.theorem3_counts(k, census=True, seed=seed)
    rows = [r for r in counts['rows'] if r[0] == 'Q']
    return [_result('q-families', k, True, families=len(rows),
                    critical_total=counts['observed_km1_cells'])]


LEMMAS = {
    'sg-matching': lambda k, seed, depth: _verify_records(k, seed, 'sg-matching'),
    'a-matching': lambda k, seed, depth: _verify_records(k, seed, 'a-matching'),
    'b-matching': lambda k, seed, depth: _verify_records(k, seed, 'b-matching'),
    'c-matching': lambda k, seed, depth: _verify_records(k, seed, 'c-matching'),
    's3k-collapse': lambda k, seed, depth: _verify_records(k, seed, 's3k-collapse'),
    'filtration-nesting': _verify_filtration,
    'p-families': _verify_p_families,
    'q-families': _verify_q_families,
}

THEOREM2_CAP = 2
THEOREM3_CENSUS_CAP = 3


def cmd_verify(args) -> tuple[list[dict], bool]:
    target = args.target
    k, seed, depth = args.k, args.seed, args.depth
    results: list[dict] = []
    if target in ('theorem2', 'all'):
        _check_cap('verify theorem2', k, THEOREM2_CAP, args.allow_large)
    if target in ('theorem3', 'all'):
        cap = K_CAPS['counts'] if depth == 'counts' else THEOREM3_CENSUS_CAP
        if depth == 'full-snf':
            cap = K_CAPS['full-snf']
        _check_cap('verify theorem3', k, cap, args.allow_large)
    if target == 'lemma':
        if not args.lemma:
            raise Refusal("verify lemma needs --lemma; known names: %s"
                          % ", ".join(sorted(LEMMAS)))
        _check_cap('verify lemma %s' % args.lemma, k, K_CAPS['acyclicity'],
                   args.allow_large)

    def run(name, fn):
        try:
            results.extend(fn(k, seed, depth))
        except Exception as e:  # a failed check, not a crash of the driver
            results.append(_result(name, k, False, error="%s: %s"
                                   % (type(e).__name__, e)))

    if target in ('theorem2', 'all'):
        run('theorem2-collapse', _verify_theorem2)
    if target in ('theorem3', 'all'):
        run('theorem3-census', _verify_theorem3)
    if target == 'all':
        for name in ('filtration-nesting', 'p-families', 'q-families'):
            run(name, LEMMAS[name])
    if target == 'lemma':
        run(args.lemma, LEMMAS[args.lemma])
    ok = all(r['pass'] for r in results)
    return results, ok


# ---------------------------------------------------------------- betti

def cmd_betti(args) -> tuple[list[dict], bool]:
    _check_cap("betti %s" % args.kind, args.k, K_CAPS['full-snf'], args.allow_large)
    max_dim = args.max_dim if args.max_dim is not None else args.k + 1
    b = betti(complex_for(args.kind, args.k), max_dim=max_dim)
    res = _result('betti-%s' % args.kind, args.k, True,
                  numbers=list(b.numbers),
                  torsion=[list(t) for t in b.torsion],
                  cells=list(b.cells), reduced=b.reduced)
    return [res], True


# ---------------------------------------------------------------- output

def _render_text(report: dict, ok: bool) -> str:
    lines = []
    head = "ok" if ok else "FAIL %s" % next(
        r['name'] for r in report['results'] if not r['pass'])
    lines.append("%s %s k=%d seed=%d elapsed_ms=%d"
                 % (head, report['command'], report['k'], report['seed'],
                    report['elapsed_ms']))
    for r in report['results']:
        bits = " ".join("%s=%s" % (key, _short(val))
                        for key, val in r['detail'].items())
        lines.append("  %s %s %s" % ("pass" if r['pass'] else "FAIL", r['name'], bits))
    return "\n".join(lines) + "\n"


def _short(val) -> str:
    s = json.dumps(val, separators=(",", ":"), sort_keys=True) \
        if isinstance(val, (dict, list)) else str(val)
    return s if len(s) <= 120 else s[:117] + "..."


def _render_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    rows = None
    for r in report['results']:
        if 'rows' in r['detail'] and r['detail']['rows']:
            rows = r['detail']['rows']
    if rows is not None:
        w.writerow(['k', 'family', 'i', 'j', 'cells', 'critical', 'dim'])
        for fam, i, j, cells, critical, dim in rows:
            w.writerow([report['k'], fam, i, j, cells, critical, dim])
    elif report['command'] == 'betti':
        w.writerow(['dim', 'betti', 'torsion'])
        det = report['results'][0]['detail']
        for d, n in enumerate(det['numbers']):
            w.writerow([d, n, ";".join(map(str, det['torsion'][d]))])
    else:
        w.writerow(['name', 'k', 'pass', 'detail'])
        for r in report['results']:
            w.writerow([r['name'], r['k'], int(r['pass']),
                        json.dumps(r['detail'], sort_keys=True)])
    return buf.getvalue()


def _emit(report: dict, ok: bool, args) -> None:
    if args.format == 'json':
        text = json.dumps(report, indent=2) + "\n"
    elif args.format == 'csv':
        text = _render_csv(report)
    else:
        text = _render_text(report, ok)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        first = next(r['name'] for r in report['results'] if not r['pass'])
        print("FAIL %s" % first, file=sys.stderr)


# ---------------------------------------------------------------- driver

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kneser-morse",
        description="Build, verify and measure the triple-graph neighborhood complexes.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, kind=False):
        sp.add_argument("--k", type=int, required=True, help="ground set is 1..k+6")
        if kind:
            sp.add_argument("--kind", choices=KINDS, default="kg",
                            help="kg: all triples; s: mixed edges; sg: stable only")
        sp.add_argument("--format", choices=("json", "csv", "text"), default="text")
        sp.add_argument("--seed", type=int, default=0,
                        help="seed for the sampled audits; echoed in the report")
        sp.add_argument("--allow-large", action="store_true",
                        help="lift the default k caps")
        sp.add_argument("--out", metavar="PATH", default=None,
                        help="write the report here instead of stdout")

    sp = sub.add_parser("build", help="sizes and maximal faces of one complex")
    common(sp, kind=True)
    sp.set_defaults(fn=cmd_build, depth='counts')

    sp = sub.add_parser("verify", help="run a verification target")
    sp.add_argument("target", choices=("theorem2", "theorem3", "lemma", "all"))
    sp.add_argument("--lemma", choices=sorted(LEMMAS), default=None,
                    help="which named check to run (target 'lemma')")
    sp.add_argument("--depth", choices=("counts", "acyclicity", "full-snf"),
                    default="acyclicity",
                    help="counts: formulas and censuses; acyclicity: adds the "
                         "matching checks (default); full-snf: adds the exact "
                         "homology cross-checks")
    common(sp)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("betti", help="reduced Betti table of one complex")
    common(sp, kind=True)
    sp.add_argument("--max-dim", type=int, default=None,
                    help="highest dimension to report (default k+1)")
    sp.set_defaults(fn=cmd_betti, depth='full-snf')
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.k < 0:
        print("refused: k must be nonnegative", file=sys.stderr)
        return 2
    t0 = time.monotonic()
    try:
        results, ok = args.fn(args)
    except Refusal as e:
        print("refused: %s" % e, file=sys.stderr)
        return 2
    report = {
        'command': args.command,
        'k': args.k,
        'results': results,
        'seed': args.seed,
        'elapsed_ms': int((time.monotonic() - t0) * 1000),
    }
    _emit(report, ok, args)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

"""Batch command-line front end.

Exit codes: 0 success or Conjugate, 1 NotConjugate (or a failed check),
2 OutsideScope/Unknown, 64 usage errors, 65 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import hnn, miller, randmeasure
from .fgword import Alphabet, ParseError, solve_power_equation

EXIT_OK = 0
EXIT_NO = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_DATA = 65

SCHEMA_FILE = "cli_schema.json"


class UsageError(Exception):
    pass


@dataclass
class Presentation:
    kind: str
    group: object
    lets: Dict[str, tuple] = field(default_factory=dict)

    def parse_word(self, text: str):
        text = text.strip()
        if text in self.lets:
            return self.lets[text]
        return self.group.parse(text)

    def format(self, w) -> str:
        return self.group.format(w)


def _split_list(value: str, line: int, col: int):
    """Split ``w1 ; w2`` keeping the column of each item."""
    items = []
    pos = 0
    for part in value.split(";"):
        lead = len(part) - len(part.lstrip())
        if part.strip():
            items.append((part.strip(), col + pos + lead))
        pos += len(part) + 1
    return items


def parse_presentation(text: str) -> Presentation:
    """Parse a ``kind: miller`` or ``kind: hnn`` presentation file."""
    fields: Dict[str, tuple] = {}
    lets: List[tuple] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = re.match(r"^\s*let\s+([A-Za-z_][A-Za-z0-9_]*)\s*=(.*)$", line)
        if m:
            lets.append((m.group(1), m.group(2), lineno, m.start(2) + 1))
            continue
        m = re.match(r"^\s*([A-Za-z]+)\s*:(.*)$", line)
        if not m:
            raise ParseError("expected 'key: value' or 'let name = word'", lineno, 1)
        key = m.group(1)
        if key in fields:
            raise ParseError(f"duplicate field {key!r}", lineno, m.start(1) + 1)
        fields[key] = (m.group(2), lineno, m.start(2) + 1)

    def need(key):
        if key not in fields:
            raise ParseError(f"missing '{key}:' line", 1, 1)
        return fields[key]

    kind, kl, kc = need("kind")
    kind = kind.strip()
    gens, gl, gc = need("generators")
    names = gens.split()
    if not names:
        raise ParseError("no generators", gl, gc)
    try:
        if kind == "miller":
            allowed = {"kind", "generators", "relators"}
            rtext, rl, rc = need("relators")
            h = Alphabet(names)
            rels = [h.parse(w, rl, c) for w, c in _split_list(rtext, rl, rc)]
            for (w, c), r in zip(_split_list(rtext, rl, rc), rels):
                if not r:
                    raise ParseError("empty relator", rl, c)
            group = miller.build_miller(names, rels)
        elif kind == "hnn":
            allowed = {"kind", "generators", "stable", "A", "B"}
            stable, sl, sc = need("stable")
            stable = stable.strip()
            if not re.match(r"^[A-Za-z0-9_]+$", stable):
                raise ParseError("bad stable letter", sl, sc)
            base = Alphabet(names)
            at, al, ac = need("A")
            bt, bl, bc = need("B")
            A = [base.parse(w, al, c) for w, c in _split_list(at, al, ac)]
            B = [base.parse(w, bl, c) for w, c in _split_list(bt, bl, bc)]
            if len(A) != len(B):
                raise ParseError(f"A has {len(A)} generators but B has {len(B)}", bl, bc)
            group = hnn.HnnPresentation(names, stable, A, B)
        else:
            raise ParseError(f"unknown kind {kind!r}", kl, kc)
    except ValueError as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e), gl, gc) from None
    for key, (_, line, col) in fields.items():
        if key not in allowed:
            raise ParseError(f"unexpected field {key!r} for kind {kind}", line, 1)
    pres = Presentation(kind, group)
    for name, body, line, col in lets:
        pres.lets[name] = group.alphabet.parse(body, line, col)
    return pres


def load_presentation(path: str) -> Presentation:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    try:
        return parse_presentation(text)
    except ParseError as e:
        raise ParseError(f"{path}: {e.message}", e.line, e.column) from None


def _emit_json(obj) -> None:
    print(json.dumps(obj, sort_keys=True, ensure_ascii=False))


def _miller_nf_fields(G, nf) -> dict:
    return {
        "u": G.format(nf.u),
        "s0": G.format(nf.s0),
        "syllables": [[e, G.format(s)] for e, s in nf.syllables],
        "k": nf.length,
        "length": len(nf.u) + len(nf.f_part()),
        "word": nf.format(G),
    }


def _miller_nf_line(G, nf) -> str:
    parts = [f"u={G.format(nf.u)}", f"s0={G.format(nf.s0)}"]
    if nf.syllables:
        parts.append("syll=" + " ".join(f"({e:+d},{G.format(s)})" for e, s in nf.syllables))
    parts.append(f"k={nf.length}")
    parts.append(f"length={len(nf.u) + len(nf.f_part())}")
    return " | ".join(parts)


def cmd_nf(args) -> int:
    pres = load_presentation(args.presentation)
    w = pres.parse_word(args.word)
    if pres.kind == "miller":
        G = pres.group
        nf = miller.normal_form_miller(G, w)
        if args.json:
            _emit_json(dict(command="nf", kind="miller", **_miller_nf_fields(G, nf)))
        else:
            print(_miller_nf_line(G, nf))
    else:
        nf = hnn.normal_form(pres.group, w)
        if args.json:
            _emit_json(dict(command="nf", kind="hnn", **_hnn_nf_fields(pres.group, nf)))
        else:
            print(nf.format(pres.group))
    return EXIT_OK


def _hnn_nf_fields(P, nf) -> dict:
    base = P.base
    return {
        "h0": base.format(nf.h0),
        "syllables": [[e, base.format(s)] for e, s in nf.syllables],
        "k": nf.length,
        "word": nf.format(P),
    }


_HNN_VERDICT = {"conjugate": "Conjugate", "not_conjugate": "NotConjugate", "unknown": "Unknown"}
_EXIT = {"Conjugate": EXIT_OK, "NotConjugate": EXIT_NO, "OutsideScope": EXIT_UNKNOWN, "Unknown": EXIT_UNKNOWN}


def certificate_record(kind: str, verdict: str, conjugator_text: Optional[str], trace, reason="",
                       permutation_index=None, exponent=None, verified=None, timings=None) -> dict:
    rec = {
        "command": "conj",
        "kind": kind,
        "verdict": verdict,
        "conjugator": conjugator_text,
        "trace": list(trace),
        "permutation_index": permutation_index,
        "exponent": exponent,
        "reason": reason,
        "verified": verified,
    }
    if timings is not None:
        rec["timings"] = timings
    return rec


def record_to_certificate(G, rec: dict) -> miller.ConjugacyCertificate:
    """Rebuild a Miller certificate from its JSON record."""
    x = G.parse(rec["conjugator"]) if rec.get("conjugator") is not None else None
    return miller.ConjugacyCertificate(rec["verdict"], x, tuple(rec["trace"]),
                                       rec.get("permutation_index"), rec.get("exponent"), rec.get("reason", ""))


def _print_record(rec, as_json: bool) -> None:
    if as_json:
        _emit_json(rec)
        return
    print(f"verdict: {rec['verdict']}")
    if rec["conjugator"] is not None:
        print(f"conjugator: {rec['conjugator']}")
    if rec["trace"]:
        print("trace: " + ", ".join(rec["trace"]))
    if rec["permutation_index"] is not None:
        print(f"permutation: {rec['permutation_index']}")
    if rec["exponent"] is not None:
        print(f"l: {rec['exponent']}")
    if rec["reason"]:
        print(f"reason: {rec['reason']}")
    if rec["verified"] is not None:
        print(f"verified: {'yes' if rec['verified'] else 'NO'}")
    if "timings" in rec:
        print(f"time: {rec['timings']['search_s']:.6f}s")


def _hnn_conj(args, pres) -> int:
    P = pres.group
    g, u = pres.parse_word(args.g), pres.parse_word(args.u)
    t0 = time.perf_counter()
    try:
        out = hnn.conjugacy_search_regular(P, g, u, branch_cap=args.branch_cap, max_chain=args.max_chain)
        verdict = _HNN_VERDICT[out.verdict]
        x, trace, reason = out.conjugator, out.trace, out.reason
    except hnn.SingularElementError as e:
        verdict, x, trace, reason = "OutsideScope", None, ("singular",), str(e)
    except hnn.ResourceLimitError as e:
        verdict, x, trace, reason = "Unknown", None, ("branch-cap",), str(e)
    elapsed = time.perf_counter() - t0
    verified = hnn.is_conjugate_by(P, g, u, x) if args.verify and x is not None else None
    rec = certificate_record("hnn", verdict, P.format(x) if x is not None else None, trace, reason,
                             verified=verified, timings={"search_s": elapsed} if args.timings else None)
    _print_record(rec, args.json)
    if verified is False:
        return EXIT_NO
    return _EXIT[verdict]


def cmd_conj(args) -> int:
    pres = load_presentation(args.presentation)
    if pres.kind == "hnn":
        return _hnn_conj(args, pres)
    G = pres.group
    g, u = pres.parse_word(args.g), pres.parse_word(args.u)
    t0 = time.perf_counter()
    cert = miller.conjugacy_search_miller(G, g, u)
    elapsed = time.perf_counter() - t0
    verified = miller.verify_certificate(G, g, u, cert) if args.verify and cert.verdict == miller.CONJUGATE else None
    rec = certificate_record(
        "miller", cert.verdict, G.format(cert.conjugator) if cert.conjugator is not None else None,
        cert.trace, cert.reason, cert.permutation_index, cert.exponent, verified,
        {"search_s": elapsed} if args.timings else None)
    _print_record(rec, args.json)
    if verified is False:
        return EXIT_NO
    return _EXIT[cert.verdict]


def cmd_density(args) -> int:
    if args.m <= 1:
        raise UsageError("m > 1 required")
    if args.n < 1 or args.kmax < 1:
        raise UsageError("n >= 1 and kmax >= 1 required")
    rows = randmeasure.density_table(args.n, args.m, args.kmax)
    ok = all(r[3] for r in rows)
    if args.json:
        _emit_json({
            "command": "density", "n": args.n, "m": args.m, "kmax": args.kmax, "holds": ok,
            "rows": [{"k": k, "f": randmeasure.fraction_str(f), "bound": randmeasure.fraction_str(b),
                      "margin": randmeasure.fraction_str(b - f), "holds": h,
                      "f_decimal": randmeasure.decimal_str(f), "bound_decimal": randmeasure.decimal_str(b)}
                     for k, f, b, h in rows],
        })
    elif args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["k", "f_k", "bound", "margin", "f_k_decimal", "bound_decimal", "margin_decimal", "holds"])
        for k, f, b, h in rows:
            w.writerow([k, randmeasure.fraction_str(f), randmeasure.fraction_str(b),
                        randmeasure.fraction_str(b - f), randmeasure.decimal_str(f),
                        randmeasure.decimal_str(b), randmeasure.decimal_str(b - f), int(h)])
    else:
        for k, f, b, h in rows:
            fs, bs = randmeasure.fraction_str(f), randmeasure.fraction_str(b)
            if args.decimal:
                fs, bs = randmeasure.decimal_str(f), randmeasure.decimal_str(b)
            print(f"k={k} f={fs} bound={bs} {'ok' if h else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NO


def _sigma(x: str) -> float:
    v = float(x)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("sigma must lie in (0, 1]")
    return v


class _NotStronglySingular:
    """Picklable predicate on K-elements: ``u = 1``."""

    def __call__(self, k):
        return not k.u


class _KSampler:
    def __init__(self, G, s1, s2):
        self.G, self.s1, self.s2 = G, s1, s2

    def __call__(self, rng):
        return randmeasure.sample_K(self.G, self.s1, self.s2, rng)


def cmd_sample(args) -> int:
    pres = load_presentation(args.presentation)
    if pres.kind != "miller":
        raise UsageError("sample needs a miller presentation")
    G = pres.group
    frac, (lo, hi) = randmeasure.estimate_density(_NotStronglySingular(), _KSampler(G, args.sigma1, args.sigma2),
                                                  args.samples, seed=args.seed, workers=args.workers)
    sd = (args.sigma1 * (1 - args.sigma1) / args.samples) ** 0.5
    within = abs(frac - args.sigma1) <= 3 * sd
    if args.json:
        _emit_json({"command": "sample", "sigma1": args.sigma1, "sigma2": args.sigma2, "N": args.samples,
                    "seed": args.seed, "workers": args.workers, "fraction": frac, "ci95": [lo, hi],
                    "three_sigma": 3 * sd, "within_three_sigma": within})
    else:
        print(f"strongly singular fraction: {frac:.6f} (N={args.samples}, seed={args.seed})")
        print(f"95% Wilson interval: [{lo:.6f}, {hi:.6f}]")
        print(f"expected sigma1={args.sigma1}: |diff|={abs(frac - args.sigma1):.6f} "
              f"{'<=' if within else '>'} 3sd={3 * sd:.6f}")
    return EXIT_OK


def cmd_hnn(args) -> int:
    pres = load_presentation(args.presentation)
    if pres.kind != "hnn":
        raise UsageError("hnn subcommands need a 'kind: hnn' presentation")
    P = pres.group
    op = args.op
    if op == "conj":
        return _hnn_conj(args, pres)
    w = pres.parse_word(args.word)
    if op == "nf":
        nf = hnn.normal_form(P, w)
        if args.json:
            _emit_json(dict(command="hnn-nf", **_hnn_nf_fields(P, nf)))
        else:
            print(nf.format(P))
    elif op == "cyc":
        nf, x = hnn.cyc_reduce(P, w)
        if args.json:
            _emit_json(dict(command="hnn-cyc", conjugator=P.format(x), **_hnn_nf_fields(P, nf)))
        else:
            print(nf.format(P))
            print(f"conjugator: {P.format(x)}")
    elif op == "regular":
        try:
            reg = hnn.is_regular(P, w, branch_cap=args.branch_cap)
        except hnn.ResourceLimitError as e:
            print(f"unknown: {e}", file=sys.stderr)
            return EXIT_UNKNOWN
        if args.json:
            _emit_json({"command": "hnn-regular", "word": P.format(w), "regular": reg})
        else:
            print("regular" if reg else "singular")
    return EXIT_OK


def cmd_solve_albl(args) -> int:
    texts = [args.a, args.b, args.d]
    if args.alphabet:
        names = args.alphabet.split()
    else:
        names = []
        for t in texts:
            for tok in t.split():
                name = tok.split("^", 1)[0]
                if name != "1" and name not in names:
                    names.append(name)
        names = names or ["x"]
    alpha = Alphabet(names)
    a, b, d = (alpha.parse(t) for t in texts)
    sol = solve_power_equation(a, b, d)
    label = {"none": "NoSolution", "all": "AllIntegers"}.get(sol.tag, f"Unique({sol.l})")
    if args.json:
        _emit_json({"command": "solve-albl", "a": alpha.format(a), "b": alpha.format(b), "d": alpha.format(d),
                    "solution": {"none": "NoSolution", "all": "AllIntegers", "unique": "Unique"}[sol.tag],
                    "l": sol.l})
    else:
        print(label)
    return EXIT_OK if sol.tag != "none" else EXIT_NO


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _conj_flags(p):
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--verify", action="store_true", help="re-check a Conjugate verdict by normal forms")
    p.add_argument("--timings", action="store_true", help="report search time")
    p.add_argument("--max-chain", type=int, default=None, help="horizon of the A∪B chain search (hnn)")
    p.add_argument("--branch-cap", type=int, default=16, help="longest principal system to solve (hnn)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hnnconj", description="Normal forms, conjugacy and densities in HNN-extensions and Miller groups.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("nf", help="normal form of a word")
    p.add_argument("presentation")
    p.add_argument("word")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_nf)

    p = sub.add_parser("conj", help="conjugacy search: find x with x^-1 g x = u")
    p.add_argument("presentation")
    p.add_argument("g")
    p.add_argument("u")
    _conj_flags(p)
    p.set_defaults(func=cmd_conj)

    p = sub.add_parser("density", help="exact strong-black-hole frequencies and their bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--decimal", action="store_true", help="print decimals instead of exact fractions")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("sample", help="Monte-Carlo strongly singular fraction of K")
    p.add_argument("presentation")
    p.add_argument("--sigma1", type=_sigma, default=0.1)
    p.add_argument("--sigma2", type=_sigma, default=0.3)
    p.add_argument("--samples", "-N", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("hnn", help="operations in a free-base HNN-extension")
    hsub = p.add_subparsers(dest="op", required=True, parser_class=_Parser)
    for op in ("nf", "cyc", "regular"):
        q = hsub.add_parser(op)
        q.add_argument("presentation")
        q.add_argument("word")
        q.add_argument("--json", action="store_true")
        q.add_argument("--branch-cap", type=int, default=16)
        q.set_defaults(func=cmd_hnn)
    q = hsub.add_parser("conj")
    q.add_argument("presentation")
    q.add_argument("g")
    q.add_argument("u")
    _conj_flags(q)
    q.set_defaults(func=cmd_hnn)

    p = sub.add_parser("solve-albl", help="solve a^l b^l = d in a free group")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("d")
    p.add_argument("--alphabet", default=None, help="generator names, space separated")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve_albl)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_DATA
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``opp <verb> [options]``.

Reports go to standard output, as ``key: value`` lines or, with ``--json``, as
one JSON object with sorted keys.  Exit status is 0 on success or PASS, 1 on a
FAIL verdict and 2 on any error (reported as a one-line JSON object).
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys

from . import __version__, analysis, corpus, oracles, popa, wsts
from .constructions import (
    Sigma2Oracle, compile_decider, compile_sigma2, emptiness_gadget, exactly_one_semidecider,
    handshake_transform, ordered_semidecider, parse_sigma2,
)
from .errors import BudgetExceeded, OppError, UnknownName
from .protocol import (
    BaseProtocol, Opinion, Protocol, dump_protocol, parse_word, read_protocol, render_config,
)
from .rng import SplitMix64
from .sre import render_union, sre_member
from .tm import a_plus_machine, compile_tm, load_tm, tm_accepts

MAX_POPA_WORD = 64

# generated protocols shipped next to the hand-written corpus
GENERATED = {
    "ordered2": lambda: ordered_semidecider(2),
    "exactly_one_a": lambda: exactly_one_semidecider(("a", "b"), "a"),
}
POPA_FILES = {f"popa_{name}": name for name in ("median", "median_complement",
                                                 "codyck", "codyck_complement")}


class UsageError(OppError):
    code = "USAGE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        usage = " ".join(self.format_usage().split())
        raise UsageError(f"{message} ({usage})")


# --- loading --------------------------------------------------------------

def load_protocol_arg(spec: str) -> BaseProtocol:
    """``corpus:<name>``, ``builtin:<name>`` or a protocol file."""
    for prefix in ("corpus:", "builtin:"):
        if spec.startswith(prefix):
            name = spec[len(prefix):]
            if name in GENERATED:
                return GENERATED[name]()
            return corpus.protocol(name)
    return read_protocol(spec)


def _read_json(path: str):
    return oracles._read_json(path)


def _load_tm(spec: str):
    if spec == "builtin:a_plus":
        return a_plus_machine()
    if spec.startswith("builtin:"):
        raise UnknownName(f"unknown built-in machine {spec!r}", name=spec)
    with open(spec, encoding="utf-8") as fh:
        return load_tm(fh.read())


def _word_text(w) -> str:
    w = [str(x) for x in w]
    return "".join(w) if all(len(x) == 1 for x in w) else ",".join(w)


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required for {args.verb}")


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _verdicts(p, results) -> tuple:
    outcome = "PASS"
    for v in results:
        if v.outcome != "PASS":
            outcome = v.outcome
            break
    return outcome, [v.to_dict(p) for v in results]


def _checked_lengths(check, lo: int, hi: int) -> list:
    """Run ``check(n)`` for n = lo..hi, stopping after the first non-PASS."""
    out = []
    for n in range(lo, hi + 1):
        v = check(n)
        out.append(v)
        if v.outcome != "PASS":
            break
    return out


# --- verbs ----------------------------------------------------------------

def cmd_validate(args) -> dict:
    if args.automaton:
        a = popa.load_popa(args.automaton)
        return {"kind": "popa", "states": len(a.states), "transitions": len(a.transitions),
                "variables": list(a.variables), "valid": True}
    if args.tm:
        m = _load_tm(args.tm)
        return {"kind": "tm", "states": len(m.states), "transitions": len(m.delta), "valid": True}
    if args.expr:
        terms, alphabet = parse_sigma2(_read_json(args.expr))
        return {"kind": "sigma2", "terms": [t.render() for t in terms],
                "alphabet": list(alphabet), "valid": True}
    _need(args, "protocol")
    p = load_protocol_arg(args.protocol)
    out = {"kind": "protocol", "name": p.name, "letters": [str(x) for x in p.letters],
           "immediate_observation": p.is_immediate_observation(),
           "predicates": sorted(x.value for x in p.predicates()), "valid": True}
    if isinstance(p, Protocol):
        out["states"] = len(p.states)
        out["rules"] = len(p.rules)
    return out


def cmd_simulate(args) -> dict:
    _need(args, "protocol", "word")
    p = load_protocol_arg(args.protocol)
    w = parse_word(p, args.word)
    trace = analysis.simulate_fair_run(p, w, args.seed, args.max_steps, args.budget)
    return trace.to_dict(p)


def cmd_explore(args) -> dict:
    _need(args, "protocol", "word")
    p = load_protocol_arg(args.protocol)
    w = parse_word(p, args.word)
    g = analysis.explore(p, [p.word_config(w)], args.budget)
    rep = analysis.bscc_condensation(g)
    bottoms = []
    for cid in rep.bottom:
        b = rep.consensus[cid]
        bottoms.append({"configs": [render_config(p, g.node(v)) for v in rep.components[cid]],
                        "consensus": b.value if b is not None else None})
    if args.dot:
        _write(args.dot, analysis.export_dot(g, rep))
    return {"nodes": len(g), "edges": g.edge_count, "bottom_sccs": bottoms,
            "accepted": any(b is Opinion.TOP for b in rep.stable)}


def cmd_check_decider(args) -> dict:
    _need(args, "protocol")
    p = load_protocol_arg(args.protocol)
    hi = args.max_length or 5
    results = _checked_lengths(lambda n: analysis.check_decider_at_length(p, n, args.budget),
                               args.min_length, hi)
    outcome, verdicts = _verdicts(p, results)
    return {"outcome": outcome, "verdicts": verdicts}


def cmd_check_semidecider(args) -> dict:
    _need(args, "protocol", "oracle")
    p = load_protocol_arg(args.protocol)
    oracle = oracles.resolve_oracle(args.oracle, p.letters)
    hi = args.max_length or 5
    results = _checked_lengths(
        lambda n: analysis.check_semidecider_at_length(p, n, oracle, args.budget),
        args.min_length, hi)
    outcome, verdicts = _verdicts(p, results)
    return {"outcome": outcome, "verdicts": verdicts}


def cmd_language(args) -> dict:
    _need(args, "protocol")
    p = load_protocol_arg(args.protocol)
    n = args.max_length or 5
    accepted = analysis.language_up_to(p, n, args.budget)
    out = {"accepted": sorted((_word_text(w) for w in accepted), key=lambda s: (len(s), s)),
           "count": len(accepted)}
    if args.oracle:
        oracle = oracles.resolve_oracle(args.oracle, p.letters)
        v = analysis.compare_oracle(accepted, oracle, n, p.letters)
        out["outcome"] = v.outcome
        out["comparison"] = v.to_dict(p)
    return out


def cmd_stable_set(args) -> dict:
    _need(args, "protocol")
    p = load_protocol_arg(args.protocol)
    b = Opinion.parse(args.opinion)
    s = wsts.stable_set(p, b)
    out = {"opinion": b.value,
           "unstable_basis": [render_config(p, v) for v in s.unstable.basis],
           "sre": render_union(s.sre) if s.sre else "(empty)",
           "max_stars": s.max_stars}
    if args.max_length:
        mismatches = []
        for n in range(1, args.max_length + 1):
            stable = analysis.stable_configs_at_length(p, n, b, args.budget)
            for c in itertools.product(p.states, repeat=n):
                if (c in stable) != sre_member(c, s.sre):
                    mismatches.append(render_config(p, c))
        out["outcome"] = "FAIL" if mismatches else "PASS"
        out["mismatches"] = mismatches[:20]
    return out


def cmd_pumping(args) -> dict:
    _need(args, "protocol")
    p = load_protocol_arg(args.protocol)
    k = wsts.pumping_m(p)
    m = args.m or k.m
    out = {"k_top": k.k_top, "k_bot": k.k_bot, "m": k.m}
    if args.word:
        w = parse_word(p, args.word)
        pat = wsts.find_reducible_pattern(w, m)
        if pat is None:
            out["pattern"] = None
            return out
        out["pattern"] = {"start": pat.start, "end": pat.end,
                          "blocks": [_word_text(x) for x in pat.blocks],
                          "middle": _word_text(pat.middle), "reduced": _word_text(pat.reduced)}
        same = analysis.membership(p, w, args.budget) == analysis.membership(p, pat.reduced, args.budget)
        out["outcome"] = "PASS" if same else "FAIL"
        return out
    rng = SplitMix64(args.seed)
    failures, checked = [], 0
    for _ in range(args.samples):
        inst = wsts.sample_pumping_instance(rng, p.letters, m, args.max_total)
        if inst is None:
            break
        checked += 1
        if analysis.membership(p, inst.short, args.budget) != analysis.membership(p, inst.long, args.budget):
            failures.append({"short": _word_text(inst.short), "long": _word_text(inst.long)})
    out.update({"samples": checked, "failures": failures,
                "outcome": "FAIL" if failures else ("PASS" if checked else "SKIP")})
    return out


def _compiled_report(p, args, oracle, decider: bool) -> dict:
    out = {"name": p.name, "letters": [str(x) for x in p.letters],
           "immediate_observation": p.is_immediate_observation()}
    if args.out:
        _write(args.out, dump_protocol(p))
        out["written"] = args.out
    if args.max_length:
        if decider:
            check = lambda n: analysis.check_decider_at_length(p, n, args.budget)
        else:
            check = lambda n: analysis.check_semidecider_at_length(p, n, oracle, args.budget)
        results = _checked_lengths(check, args.min_length, args.max_length)
        out["outcome"], out["verdicts"] = _verdicts(p, results)
        if decider and out["outcome"] == "PASS":
            accepted = analysis.language_up_to(p, args.max_length, args.budget)
            v = analysis.compare_oracle(accepted, oracle, args.max_length, p.letters)
            out["outcome"] = v.outcome
            out["comparison"] = v.to_dict(p)
    return out


def cmd_compile_sigma2(args) -> dict:
    _need(args, "expr")
    terms, alphabet = parse_sigma2(_read_json(args.expr))
    p = compile_sigma2(terms, alphabet)
    out = _compiled_report(p, args, Sigma2Oracle(terms, alphabet), decider=False)
    out["terms"] = [t.render() for t in terms]
    return out


def cmd_compile_decider(args) -> dict:
    _need(args, "expr", "complement")
    pos, alphabet = parse_sigma2(_read_json(args.expr))
    neg, alphabet2 = parse_sigma2(_read_json(args.complement))
    letters = tuple(sorted(set(alphabet) | set(alphabet2)))
    p = compile_decider(pos, neg, letters)
    out = _compiled_report(p, args, Sigma2Oracle(pos, letters), decider=True)
    out["terms"] = [t.render() for t in pos]
    out["complement_terms"] = [t.render() for t in neg]
    return out


def cmd_transform_handshake(args) -> dict:
    _need(args, "protocol")
    p = load_protocol_arg(args.protocol)
    q = handshake_transform(p)
    out = {"name": q.name, "changed": q is not p,
           "immediate_observation": q.is_immediate_observation()}
    if isinstance(q, Protocol):
        out["states"] = len(q.states)
        out["rules"] = len(q.rules)
        out["markers"] = q.metadata.get("handshake", [])
    if args.out:
        _write(args.out, dump_protocol(q))
        out["written"] = args.out
    if args.max_length:
        before = analysis.language_up_to(p, args.max_length, args.budget)
        after = analysis.language_up_to(q, args.max_length, args.budget)
        diff = sorted((_word_text(w) for w in before ^ after), key=lambda s: (len(s), s))
        out["outcome"] = "FAIL" if diff else "PASS"
        out["differences"] = diff
    return out


def cmd_compile_tm(args) -> dict:
    _need(args, "tm")
    m = _load_tm(args.tm)
    p = compile_tm(m)
    out = {"name": p.name, "letters": [str(x) for x in p.letters],
           "immediate_observation": p.is_immediate_observation()}
    words = []
    if args.word:
        words = [parse_word(p, args.word)]
    elif args.max_length:
        for n in range(args.min_length, args.max_length + 1):
            words += list(itertools.product(p.letters, repeat=n))
    if words:
        rows, outcome = [], "PASS"
        for w in words:
            want = tm_accepts(m, w)
            try:
                got = analysis.membership(p, w, args.budget)
            except BudgetExceeded as e:
                rows.append({"word": _word_text(w), "expected": want, "skipped": str(e)})
                if outcome == "PASS":
                    outcome = "SKIP"
                break
            rows.append({"word": _word_text(w), "expected": want, "accepted": got})
            if got != want:
                outcome = "FAIL"
                break
        out["outcome"] = outcome
        out["words"] = rows
    return out


def cmd_emptiness_gadget(args) -> dict:
    _need(args, "protocol")
    p = load_protocol_arg(args.protocol)
    g = emptiness_gadget(p)
    out = {"name": g.name, "states": len(g.states), "rules": len(g.rules),
           "immediate_observation": g.is_immediate_observation()}
    if args.out:
        _write(args.out, dump_protocol(g))
        out["written"] = args.out
    if args.max_length:
        results = _checked_lengths(lambda n: analysis.check_decider_at_length(g, n, args.budget),
                                   args.min_length, args.max_length)
        out["outcome"], out["verdicts"] = _verdicts(g, results)
    return out


def cmd_popa_run(args) -> dict:
    _need(args, "automaton", "word")
    a = popa.load_popa(args.automaton)
    word = popa._parse_letters(a, args.word)
    if len(word) > MAX_POPA_WORD:
        raise UsageError(f"words are limited to {MAX_POPA_WORD} letters")
    runs = popa.popa_membership(a, word)
    return {"accepting_runs": runs, "accepted": runs > 0}


def cmd_popa_unambiguous(args) -> dict:
    _need(args, "automaton")
    a = popa.load_popa(args.automaton)
    n = 7 if args.max_length is None else args.max_length
    if n > MAX_POPA_WORD:
        raise UsageError(f"words are limited to {MAX_POPA_WORD} letters")
    v = popa.weak_unambiguity_up_to(a, n)
    out = v.to_dict()
    if "word" in out:
        out["word"] = _word_text(out["word"])
    return out


def corpus_entries() -> dict:
    """File name -> JSON text for every shipped example."""
    out = {}
    for name in corpus.PROTOCOLS:
        out[f"{name}.json"] = dump_protocol(corpus.protocol(name))
    for name, make in GENERATED.items():
        out[f"{name}.json"] = dump_protocol(make())
    for fname, name in POPA_FILES.items():
        out[f"{fname}.json"] = json.dumps(popa.dump_popa(popa.builtin_popa(name)), indent=1) + "\n"
    return out


def cmd_corpus(args) -> dict:
    entries = corpus_entries()
    if args.name:
        key = f"{args.name}.json"
        if key not in entries:
            raise UnknownName(f"unknown corpus entry {args.name!r}", name=args.name)
        entries = {key: entries[key]}
    os.makedirs(args.out, exist_ok=True)
    written = []
    for fname, text in sorted(entries.items()):
        path = os.path.join(args.out, fname)
        _write(path, text)
        written.append(path)
    return {"written": written}


VERBS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "explore": cmd_explore,
    "check-decider": cmd_check_decider,
    "check-semidecider": cmd_check_semidecider,
    "language": cmd_language,
    "stable-set": cmd_stable_set,
    "pumping": cmd_pumping,
    "compile-sigma2": cmd_compile_sigma2,
    "compile-decider": cmd_compile_decider,
    "transform-handshake": cmd_transform_handshake,
    "compile-tm": cmd_compile_tm,
    "emptiness-gadget": cmd_emptiness_gadget,
    "popa-run": cmd_popa_run,
    "popa-unambiguous": cmd_popa_unambiguous,
    "corpus": cmd_corpus,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opp", description="Analyse ordered population protocols and poPA.")
    parser.add_argument("--version", action="version", version=f"opp {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb in VERBS:
        sp = sub.add_parser(verb)
        sp.add_argument("--json", action="store_true", help="print the report as JSON")
        sp.add_argument("--budget", type=int, default=analysis.DEFAULT_BUDGET,
                        help="node budget per exploration")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-length", type=int)
        sp.add_argument("--min-length", type=int, default=1)
        sp.add_argument("--oracle", help="builtin:<name>, dfa:<file>, sigma2:<file>, tm:<file>")
        sp.add_argument("--dot", help="write the configuration graph here")
        if verb == "corpus":
            sp.add_argument("name", nargs="?")
            sp.add_argument("--out", default="corpus")
            continue
        sp.add_argument("--protocol")
        sp.add_argument("--word")
        sp.add_argument("--out", help="write the resulting protocol here")
        if verb in ("validate", "popa-run", "popa-unambiguous"):
            sp.add_argument("--automaton", help="builtin:<name> or a poPA file")
        if verb in ("validate", "compile-sigma2", "compile-decider"):
            sp.add_argument("--expr", help="expression file")
        if verb == "compile-decider":
            sp.add_argument("--complement", help="expression file for the complement")
        if verb in ("validate", "compile-tm"):
            sp.add_argument("--tm", help="machine file or builtin:a_plus")
        if verb == "simulate":
            sp.add_argument("--max-steps", type=int, default=1000)
        if verb == "stable-set":
            sp.add_argument("--opinion", default="TOP")
        if verb == "pumping":
            sp.add_argument("--m", type=int, help="override the computed constant")
            sp.add_argument("--samples", type=int, default=100)
            sp.add_argument("--max-total", type=int, default=12)
    return parser


def _render_text(report: dict) -> str:
    lines = []
    for key in sorted(report):
        value = report[key]
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True, ensure_ascii=False)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif value is None:
            value = "null"
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def run(argv) -> tuple:
    """Execute one command; returns (exit code, text for standard output)."""
    argv = list(argv)
    try:
        args = build_parser().parse_args(argv)
        if args.budget < 1:
            raise UsageError("--budget must be positive")
        report = VERBS[args.verb](args)
    except OppError as e:
        return 2, json.dumps(e.as_dict(), sort_keys=True, default=str)
    except (OSError, ValueError, KeyError) as e:
        code = "IO" if isinstance(e, OSError) else "INVALID_INPUT"
        return 2, json.dumps({"error": code, "message": str(e)}, sort_keys=True)
    report = dict(report)
    report["verb"] = args.verb
    report["tool_version"] = __version__
    report["inputs"] = {k: v for k, v in sorted(vars(args).items()) if k != "verb"}
    code = 1 if report.get("outcome") == "FAIL" else 0
    if args.json:
        return code, json.dumps(report, sort_keys=True, ensure_ascii=False)
    return code, _render_text(report)


def main(argv=None) -> int:
    code, text = run(sys.argv[1:] if argv is None else argv)
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

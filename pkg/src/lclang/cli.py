"""Command-line front end.

Subcommands: ``check`` (typecheck definitions), ``normalize`` (evaluate to
the algebraic normal value, optionally tracing every step), ``denote``
(matrix denotation, delimited text or JSON, optional heatmap render),
``equiv`` (contextual-equivalence test over a generated corpus of
elimination contexts), ``gen`` (seeded stream of well-typed definitions).

Exit codes are a stable contract: 0 ok, 1 type error, 2 parse error,
3 fuel exhausted, 4 not equivalent.  Results go to stdout, diagnostics to
stderr; identical inputs and seed produce byte-identical stdout.

Input files are parsed on top of the bundled prelude (``LC_PRELUDE``
overrides its path) unless the input *is* the prelude file itself.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import denote as dn
from . import gen
from .parser import Definition, ParseError, Program, parse_program, pretty
from .rewrite import FuelExhausted, TraceStep, normalize
from .syntax import Boxed, Fragment, One, Proposition, Term
from .typecheck import TypingError, check_term

EXIT_OK = 0
EXIT_TYPE = 1
EXIT_PARSE = 2
EXIT_FUEL = 3
EXIT_INEQUIV = 4


@dataclass(frozen=True)
class CliConfig:
    command: str
    path: str | None = None
    name: str | None = None
    fuel: int = 100000
    seed: int = 0
    tol: float = 1e-9
    fmt: str = "text"
    trace: bool = False
    plot: str | None = None
    left: str | None = None
    right: str | None = None
    contexts: int = 20
    count: int = 10
    max_depth: int = 3

    def __post_init__(self) -> None:
        if self.fuel <= 0:
            raise ValueError("fuel must be positive")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


def prelude_path() -> Path:
    env = os.environ.get("LC_PRELUDE")
    return Path(env) if env else Path(__file__).with_name("prelude.lc")


def load_prelude() -> Program:
    path = prelude_path()
    return parse_program(path.read_text(), str(path))


def load_program(path: str) -> Program:
    src = Path(path).read_text()
    # The prelude cannot sit on top of itself: its names would collide.
    if Path(path).resolve() == prelude_path().resolve():
        return parse_program(src, path)
    return parse_program(src, path, prelude=load_prelude())


def _pick(prog: Program, name: str | None) -> Definition:
    """Select the named definition, defaulting to the last one (the file's
    "main", since later definitions may use earlier ones)."""
    if name is None:
        if not prog.definitions:
            raise ParseError("file contains no definitions")
        return prog.definitions[-1]
    try:
        return prog.get(name)
    except KeyError:
        raise ParseError(f"no definition named '{name}'") from None


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}j"


def _trace_json(step: TraceStep) -> str:
    return json.dumps(
        {
            "kind": step.kind,
            "rule": step.rule,
            "path": list(step.path),
            "before": pretty(step.before),
            "after": pretty(step.after),
        },
        sort_keys=True,
    )


def cmd_check(cfg: CliConfig) -> int:
    prog = load_program(cfg.path)
    defs = [_pick(prog, cfg.name)] if cfg.name else list(prog.definitions)
    checked = []
    for d in defs:
        try:
            check_term(d.body, d.prop)
        except TypingError as e:
            print(json.dumps({"ok": False, "error": "type",
                              "definition": d.name, "message": str(e)},
                             sort_keys=True))
            print(f"lc: type error in '{d.name}': {e}", file=sys.stderr)
            return EXIT_TYPE
        checked.append(d)
    if cfg.fmt == "json":
        print(json.dumps({"ok": True,
                          "definitions": [d.name for d in checked]},
                         sort_keys=True))
    else:
        for d in checked:
            print(f"ok {d.name}")
    return EXIT_OK


def cmd_normalize(cfg: CliConfig) -> int:
    prog = load_program(cfg.path)
    d = _pick(prog, cfg.name)
    der = check_term(d.body, d.prop)
    value, trace = normalize(der.term, fuel=cfg.fuel)
    if cfg.fmt == "json":
        out = {"definition": d.name, "value": pretty(value),
               "steps": len(trace)}
        if cfg.trace:
            out["trace"] = [json.loads(_trace_json(s)) for s in trace]
        print(json.dumps(out, sort_keys=True))
    else:
        if cfg.trace:
            for s in trace:
                print(_trace_json(s))
        print(pretty(value))
    return EXIT_OK


def cmd_denote(cfg: CliConfig) -> int:
    prog = load_program(cfg.path)
    d = _pick(prog, cfg.name)
    der = check_term(d.body, d.prop)
    den = dn.denote_full(der)
    if cfg.plot:
        _render_heatmap(den.matrix, d.name, cfg.plot)
        print(f"lc: wrote {cfg.plot}", file=sys.stderr)
    if cfg.fmt == "json":
        print(json.dumps({"definition": d.name, **den.to_json()},
                         sort_keys=True))
    else:
        for row in np.asarray(den.matrix, dtype=complex):
            print("\t".join(_fmt_complex(z) for z in row))
    return EXIT_OK


def _render_heatmap(matrix: np.ndarray, title: str, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    m = np.abs(np.asarray(matrix, dtype=complex))
    # A column vector renders illegibly thin; keep at least 2 display cols.
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(m, cmap="viridis", aspect="auto")
    ax.set_title(title)
    ax.set_xlabel("source index")
    ax.set_ylabel("target index")
    fig.colorbar(im, ax=ax, label="magnitude")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _observable(hole: Proposition) -> Proposition:
    # Pure contexts close off at 1, mixed ones at B(1); see gen.context_corpus.
    pure = Fragment.PURE
    return One(pure) if hole.fragment is pure else Boxed(One(pure))


def _observe(ctx: gen.ElimContext, term: Term, obs: Proposition,
             fuel: int) -> complex:
    plugged = check_term(ctx.plug(term), obs)
    value, _ = normalize(plugged.term, fuel=fuel)
    return complex(dn.denote(check_term(value, obs))[0, 0])


def cmd_equiv(cfg: CliConfig) -> int:
    prog = load_program(cfg.path)
    left = _pick(prog, cfg.left)
    right = _pick(prog, cfg.right)
    if left.prop != right.prop:
        raise TypingError(
            f"cannot compare '{left.name}' and '{right.name}': "
            f"their declared types differ")
    lder = check_term(left.body, left.prop)
    rder = check_term(right.body, right.prop)
    corpus = gen.context_corpus(random.Random(cfg.seed), left.prop,
                                count=cfg.contexts)
    obs = _observable(left.prop)
    for i, ctx in enumerate(corpus):
        a = _observe(ctx, lder.term, obs, cfg.fuel)
        b = _observe(ctx, rder.term, obs, cfg.fuel)
        if abs(a - b) > cfg.tol:
            if cfg.fmt == "json":
                print(json.dumps({"equivalent": False, "context": i,
                                  "body": pretty(ctx.body),
                                  "left": _fmt_complex(a),
                                  "right": _fmt_complex(b)},
                                 sort_keys=True))
            else:
                print(f"distinguished by context {i}: {pretty(ctx.body)}")
                print(f"left: {_fmt_complex(a)}  right: {_fmt_complex(b)}")
            return EXIT_INEQUIV
    if cfg.fmt == "json":
        print(json.dumps({"equivalent": True, "contexts": len(corpus)},
                         sort_keys=True))
    else:
        print(f"equivalent across {len(corpus)} contexts")
    return EXIT_OK


def cmd_gen(cfg: CliConfig) -> int:
    config = gen.GenConfig(max_depth=cfg.max_depth)
    print(gen.generate_definitions(cfg.seed, cfg.count, config), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lc",
        description="Typecheck, normalize, and evaluate two-fragment "
                    "linear lambda terms.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, deff: bool = True) -> None:
        p.add_argument("file", help="program file (.lc)")
        if deff:
            p.add_argument("--def", dest="name", metavar="NAME",
                           help="definition to operate on "
                                "(default: last in file)")
        p.add_argument("--json", action="store_true",
                       help="JSON output instead of text")

    p = sub.add_parser("check", help="typecheck all (or one) definitions")
    common(p)

    p = sub.add_parser("normalize", help="evaluate to the normal value")
    common(p)
    p.add_argument("--trace", action="store_true",
                   help="emit every reduction step as a JSON line")
    p.add_argument("--fuel", type=int, default=100000,
                   help="step budget (default 100000)")

    p = sub.add_parser("denote", help="print the matrix denotation")
    common(p)
    p.add_argument("--plot", metavar="PATH",
                   help="also render a magnitude heatmap to PATH")

    p = sub.add_parser("equiv",
                       help="contextual equivalence over generated contexts")
    p.add_argument("file", help="program file (.lc)")
    p.add_argument("--left", required=True, metavar="NAME")
    p.add_argument("--right", required=True, metavar="NAME")
    p.add_argument("--contexts", type=int, default=20,
                   help="corpus size per hole type (default 20)")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="observation tolerance (default 1e-9)")
    p.add_argument("--fuel", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("gen", help="emit seeded well-typed definitions")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=3, dest="max_depth")

    return ap


def _config(args: argparse.Namespace) -> CliConfig:
    get = lambda k, d: getattr(args, k, d)
    return CliConfig(
        command=args.command,
        path=get("file", None),
        name=get("name", None),
        fuel=get("fuel", 100000),
        seed=get("seed", 0),
        tol=get("tol", 1e-9),
        fmt="json" if get("json", False) else "text",
        trace=get("trace", False),
        plot=get("plot", None),
        left=get("left", None),
        right=get("right", None),
        contexts=get("contexts", 20),
        count=get("count", 10),
        max_depth=get("max_depth", 3),
    )


_DISPATCH = {
    "check": cmd_check,
    "normalize": cmd_normalize,
    "denote": cmd_denote,
    "equiv": cmd_equiv,
    "gen": cmd_gen,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
    except ValueError as e:
        print(f"lc: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return _DISPATCH[cfg.command](cfg)
    except ParseError as e:
        if cfg.fmt == "json":
            print(json.dumps({"ok": False, "error": "parse",
                              "message": str(e)}, sort_keys=True))
        print(f"lc: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        print(f"lc: {e}", file=sys.stderr)
        return EXIT_PARSE
    except TypingError as e:
        if cfg.fmt == "json":
            print(json.dumps({"ok": False, "error": "type",
                              "message": str(e)}, sort_keys=True))
        print(f"lc: type error: {e}", file=sys.stderr)
        return EXIT_TYPE
    except FuelExhausted as e:
        print(f"lc: fuel exhausted: {e}", file=sys.stderr)
        return EXIT_FUEL


if __name__ == "__main__":
    sys.exit(main())

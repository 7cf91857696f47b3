"""Command-line entry point ``sss``.

Every subcommand writes its full output to ``--out`` (a default file name in
the working directory otherwise) and prints one summary line on stdout.
Exit status: 0 success, 1 threshold breach or failed computation, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import catalog
from .catalog import UnknownName

EXIT_OK, EXIT_BREACH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------ arg parsing

def parse_levels(text: str) -> list:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        levels = list(range(int(lo), int(hi) + 1))
    else:
        levels = [int(t) for t in text.split(",") if t]
    if not levels or min(levels) < 0:
        raise UsageError(f"bad level range {text!r}")
    return levels


def parse_number(text: str):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_params(items) -> dict:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if "=" not in part:
                raise UsageError(f"parameter must be name=value, got {part!r}")
            k, v = part.split("=", 1)
            out[k.strip()] = parse_number(v)
    return out


def parse_grid(items) -> dict:
    """``name=lo:hi:count`` (inclusive linspace) or ``name=v1,v2,...``."""
    grid = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"grid must be name=lo:hi:count or name=v1,v2, got {item!r}")
        k, v = item.split("=", 1)
        if ":" in v:
            lo, hi, cnt = v.split(":")
            grid[k.strip()] = [float(x) for x in np.linspace(float(parse_number(lo)), float(parse_number(hi)), int(cnt))]
        elif v.strip():
            grid[k.strip()] = [float(parse_number(x)) for x in v.split(",")]
        else:
            grid[k.strip()] = []
    return grid


def parse_point(text: str) -> tuple:
    return tuple(parse_number(t) for t in text.split(","))


def resolve_seed(args, required: bool):
    seed = args.seed
    if seed is None and os.environ.get("SSS_SEED"):
        try:
            seed = int(os.environ["SSS_SEED"])
        except ValueError:
            raise UsageError("SSS_SEED must be an integer") from None
    if seed is None and required:
        raise UsageError("this subcommand is stochastic: pass --seed or set SSS_SEED")
    return seed


def load_group(args):
    if getattr(args, "automaton", None):
        from .group import parse_automaton

        try:
            with open(args.automaton, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read automaton file: {exc}") from None
        return parse_automaton(text, name=os.path.splitext(os.path.basename(args.automaton))[0])
    if not args.group:
        raise UsageError("--group or --automaton is required")
    return catalog.get_automaton(args.group)


def write_output(args, text: str, default: str) -> str:
    path = args.out or default
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


# ------------------------------------------------------------- subcommands

def cmd_group(args):
    aut = load_group(args)
    if args.dry_run:
        return EXIT_OK, f"dry-run group={aut.name} states={len(aut.names)} d={aut.d}"
    doc = {"automaton": aut.to_document(), "name": aut.name}
    summary = [f"group name={aut.name} states={len(aut.names)} d={aut.d}"]
    if args.element is not None:
        g = aut.element(args.element)
        info = {"element": str(g)}
        perm, secs = g.wreath()
        info["wreath"] = {"permutation": list(perm), "sections": [str(s) for s in secs]}
        if args.act is not None:
            v = tuple(int(c) for c in args.act)
            try:
                info["act"] = "".join(map(str, g.act(v)))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            summary.append(f"act={info['act']}")
        if args.section is not None:
            v = tuple(int(c) for c in args.section)
            try:
                info["section"] = str(g.section(v))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            summary.append(f"section={info['section']}")
        if args.portrait is not None:
            info["portrait"] = [list(p) for p in g.portrait(args.portrait).perms]
        verdict = aut.triviality(g.word, args.depth_bound)
        info["triviality"] = {"verdict": verdict.verdict,
                              "witness": "".join(map(str, verdict.witness)) if verdict.witness else None}
        summary.append(f"element={g} verdict={verdict.verdict}")
        doc["query"] = info
    path = write_output(args, json.dumps(doc, sort_keys=True, indent=2) + "\n", "group.json")
    return EXIT_OK, " ".join(summary) + f" out={path}"


def _operator_pencil(args, aut, spectral=None):
    from .schur import Pencil

    if args.pencil:
        if args.group is None:
            raise UsageError("--pencil needs --group")
        return catalog.get_pencil(args.group, args.pencil)
    if not args.operator:
        raise UsageError("--operator or --pencil is required")
    params = sorted(parse_params(args.param)) if getattr(args, "param", None) else []
    body = args.operator
    if spectral:
        params = sorted(set(params) | {spectral})
        body = f"({body}) - {spectral}*e"
    return Pencil.from_expressions(aut, body, params, name="operator")


def cmd_expand(args):
    from .algebra import AlgebraElement, expand_combination
    from .expr import parse_combination

    aut = load_group(args)
    values = parse_params(args.param)
    if not args.operator:
        raise UsageError("--operator is required")
    if args.level < 0:
        raise UsageError("level must be >= 0")
    symbolic = parse_combination(aut, args.operator, sorted(values))
    if args.dry_run:
        return EXIT_OK, f"dry-run expand terms={len(symbolic)} level={args.level}"
    import sympy as sp

    subs = {sp.Symbol(k): sp.Rational(v.numerator, v.denominator) for k, v in values.items()}
    elem = AlgebraElement.from_symbolic(aut, symbolic, subs, args.mode)
    m = expand_combination(elem, args.level)
    path = write_output(args, m.export(), "expand.txt")
    nnz = len(m.entries())
    return EXIT_OK, f"expand level={m.level} dim={m.dim} nnz={nnz} zero={str(m.is_zero()).lower()} out={path}"


def cmd_spectrum(args):
    from .spectra import level_spectrum

    aut = load_group(args)
    spectral = args.spectral
    pencil = _operator_pencil(args, aut, None if args.pencil else spectral)
    fixed = parse_params(args.param)
    fixed = {k: float(v) for k, v in fixed.items() if k != spectral}
    if args.dry_run:
        pencil.split_affine(spectral)
        return EXIT_OK, f"dry-run spectrum pencil={pencil.name} level={args.level}"
    sl = level_spectrum(pencil, fixed, spectral, args.level)
    head = " ".join([f"# pencil={pencil.name}", f"level={args.level}"] + [f"{k}={fmt(v)}" for k, v in sorted(fixed.items())])
    lines = [head, "eigenvalue"]
    lines += [fmt(_clean(v)) for v in sl.eigenvalues]
    path = write_output(args, "\n".join(lines) + "\n", "spectrum.csv")
    ev = sl.eigenvalues
    return EXIT_OK, f"spectrum level={args.level} count={len(ev)} min={fmt(_clean(ev[0]))} max={fmt(_clean(ev[-1]))} out={path}"


def _clean(v, digits=12):
    # strip rounding noise so integer eigenvalues print stably
    r = round(float(v), digits)
    return 0.0 if r == 0 else r


def cmd_sweep(args):
    from .spectra import curve_residual, spectrum_sweep

    aut = load_group(args)
    pencil = _operator_pencil(args, aut)
    grid = parse_grid(args.grid)
    if args.dry_run:
        pencil.split_affine(args.spectral)
        return EXIT_OK, f"dry-run sweep pencil={pencil.name} level={args.level} grid={sum(len(v) for v in grid.values())}"
    cloud = spectrum_sweep(pencil, grid, args.spectral, args.level, workers=args.workers)
    path = write_output(args, cloud.csv(), "sweep.csv")
    summary = f"sweep level={args.level} points={len(cloud)} out={path}"
    status = EXIT_OK
    if args.curves:
        fam = catalog.get_curve_family(args.group, args.level)
        rep = curve_residual(cloud, fam)
        summary += f" curve_max_residual={rep.max_residual!r}"
        if rep.max_residual > args.tol:
            status = EXIT_BREACH
    if args.svg:
        from .plotting import write_scatter

        cols = cloud.columns
        write_scatter(args.svg, cloud.points[:, 0] if len(cloud) else [], cloud.points[:, -1] if len(cloud) else [],
                      xlabel=cols[0], ylabel=cols[-1], title=f"{pencil.name} level {args.level}",
                      viewport=_viewport(args.viewport))
        summary += f" svg={args.svg}"
    return status, summary


def _viewport(text):
    if not text:
        return None
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 4:
        raise UsageError("viewport is xmin,xmax,ymin,ymax")
    return vals


def cmd_schur_verify(args):
    from .schur import verify_self_similarity

    seed = resolve_seed(args, required=True)
    aut = load_group(args)
    if not args.pencil or not args.map:
        raise UsageError("--pencil and --map are required")
    pencil = catalog.get_pencil(args.group, args.pencil)
    rmap = catalog.get_map(args.map)
    levels = parse_levels(args.levels)
    reason = catalog.UNSUPPORTED.get((aut.name, pencil.name, args.block))
    if reason:
        print(f"unsupported: {reason}", file=sys.stderr)
        return EXIT_USAGE, f"UNSUPPORTED block={args.block} pencil={pencil.name}"
    info = catalog.get_renormalization(aut.name, pencil.name, args.map) or {}
    if info and info["block"] != args.block:
        print(f"note: catalog pairs map {args.map} with block {info['block']}", file=sys.stderr)
    block = info.get("letters", args.block) if info.get("block") == args.block else args.block
    scale = args.scale or (info.get("scale") if info.get("block") == args.block else None)
    if pencil.k > 1 and not isinstance(block, tuple):
        block = (args.block,) * pencil.k
    if rmap.arity != len(pencil.params):
        raise UsageError(f"map {rmap.name} has arity {rmap.arity}, pencil {pencil.name} has {len(pencil.params)}")
    if args.dry_run:
        return EXIT_OK, f"dry-run schur-verify pencil={pencil.name} map={rmap.name} levels={levels[0]}..{levels[-1]}"
    rep = verify_self_similarity(pencil, rmap, block, levels, samples=args.samples, seed=seed, scale=scale,
                                 tol=args.tol, delta=args.delta, workers=args.workers)
    path = write_output(args, rep.text(), "schur-verify.txt")
    status = EXIT_OK if rep.passed else EXIT_BREACH
    return status, f"MAX_DEV {rep.max_deviation!r} failures={len(rep.failures)} rejected={rep.rejected} out={path}"


def cmd_dynamics(args):
    from .dynamics import (attractor_cloud, backward_orbit_1d, check_identity, check_semiconjugacy, eval_map)

    action = args.action
    stochastic = action in ("identity", "semiconj", "attractor")
    seed = resolve_seed(args, required=stochastic)
    if action == "list":
        if args.dry_run:
            return EXIT_OK, "dry-run dynamics list"
        lines = []
        for name in catalog.map_names():
            m = catalog.get_map(name)
            lines.append(f"{name}\tarity={m.arity}\t" + "; ".join(m.formulas()))
        path = write_output(args, "\n".join(lines) + "\n", "maps.txt")
        return EXIT_OK, f"dynamics list maps={len(lines)} out={path}"
    if not args.map:
        raise UsageError("--map is required")
    if action == "eval":
        m = catalog.get_map(args.map)
        pt = parse_point(args.point or "")
        if len(pt) != m.arity:
            raise UsageError(f"map {m.name} takes {m.arity} coordinates")
        if args.dry_run:
            return EXIT_OK, f"dry-run dynamics eval map={m.name}"
        from .dynamics import SingularLocusError

        try:
            val = eval_map(m, pt, "exact" if args.exact else "float")
        except SingularLocusError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_BREACH, f"dynamics eval map={m.name} singular factor={exc.factor}"
        text = ",".join(fmt(v) for v in val)
        path = write_output(args, text + "\n", "eval.txt")
        return EXIT_OK, f"dynamics eval map={m.name} value={text} out={path}"
    if action == "identity":
        lhs = [catalog.get_map(n) for n in args.map.split(",")]
        rhs = catalog.get_map(args.rhs) if args.rhs and args.rhs != "id" else None
        if rhs is None:
            from .dynamics import RationalMapND

            rhs = RationalMapND.identity(lhs[0].variables)
        if args.dry_run:
            return EXIT_OK, f"dry-run dynamics identity lhs={args.map} rhs={args.rhs or 'id'}"
        rep = check_identity(lhs, rhs, samples=args.samples, seed=seed)
        text = f"lhs={args.map} rhs={args.rhs or 'id'} samples={rep.samples} rejected={rep.rejected}\nMAX_RESIDUAL {rep.max_residual!r}\n"
        path = write_output(args, text, "identity.txt")
        status = EXIT_OK if rep.max_residual <= args.tol else EXIT_BREACH
        return status, f"MAX_RESIDUAL {rep.max_residual!r} samples={rep.samples} out={path}"
    if action == "semiconj":
        s = catalog.get_semiconjugacy(args.map)
        if args.dry_run:
            return EXIT_OK, f"dry-run dynamics semiconj map={args.map}"
        rep = check_semiconjugacy(s, samples=args.samples, seed=seed)
        text = f"map={args.map} psi={s.psi} samples={rep.samples} rejected={rep.rejected}\nMAX_RESIDUAL {rep.max_residual!r}\n"
        path = write_output(args, text, "semiconj.txt")
        status = EXIT_OK if rep.max_residual <= args.tol else EXIT_BREACH
        return status, f"MAX_RESIDUAL {rep.max_residual!r} samples={rep.samples} out={path}"
    if action == "orbit":
        m = catalog.get_map(args.map)
        seeds = [float(parse_number(s)) for s in (args.seeds or "0").split(",")]
        if args.dry_run:
            return EXIT_OK, f"dry-run dynamics orbit map={m.name} depth={args.depth}"
        res = backward_orbit_1d(m, seeds, args.depth)
        text = f"# map={m.name} seeds={','.join(map(repr, seeds))} depth={args.depth} complex_dropped={res.complex_dropped}\n"
        text += "".join(f"{v!r}\n" for v in res.values)
        path = write_output(args, text, "orbit.txt")
        return EXIT_OK, f"dynamics orbit map={m.name} points={len(res.values)} dropped={res.complex_dropped} out={path}"
    if action == "attractor":
        m = catalog.get_map(args.map)
        if m.arity not in (2, 3):
            raise UsageError("attractor clouds need a map of arity 2 or 3")
        if args.dry_run:
            return EXIT_OK, f"dry-run dynamics attractor map={m.name} points={args.points}"
        box = tuple(float(v) for v in args.box.split(","))
        if len(box) != 2 or not box[0] < box[1]:
            raise UsageError("box is lo,hi with lo < hi")
        cloud = attractor_cloud(m, args.points, args.burn_in, seed, box=box)
        path = write_output(args, cloud.csv(), "attractor.csv")
        summary = f"dynamics attractor map={m.name} points={len(cloud.points)} escaped={cloud.escaped} singular={cloud.singular} out={path}"
        if args.svg and len(cloud.points):
            from .plotting import write_scatter

            write_scatter(args.svg, cloud.points[:, 0], cloud.points[:, 1], xlabel=m.variables[0],
                          ylabel=m.variables[1], title=f"{m.name} attractor", viewport=_viewport(args.viewport))
            summary += f" svg={args.svg}"
        return (EXIT_OK if len(cloud.points) else EXIT_BREACH), summary
    raise UsageError(f"unknown dynamics action {action!r}")


def cmd_walk(args):
    from . import walks

    action = args.action
    seed = resolve_seed(args, required=action == "simulate")
    fam = None
    if args.family:
        try:
            fam = walks.get_family(args.family)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        if args.value is None:
            raise UsageError("--family needs --value")
        value = parse_number(args.value)
        try:
            mu = fam.measure(value)
        except walks.MeasureError as exc:
            raise UsageError(str(exc)) from None
    elif args.measure:
        aut = load_group(args)
        try:
            mu = walks.MeasureOnG.from_text(aut, args.measure)
        except Exception as exc:  # parse or weight errors
            raise UsageError(f"bad measure: {exc}") from None
    else:
        raise UsageError("--family/--value or --group/--measure is required")
    i = args.letter
    if not 0 <= i < mu.automaton.d:
        raise UsageError(f"letter {i} outside the alphabet")
    if args.dry_run:
        return EXIT_OK, f"dry-run walk action={action} letter={i}"
    name = mu.automaton.name
    if action == "matrix":
        mm = walks.measure_matrix(mu)
        text = ""
        for y in range(mm.d):
            for x in range(mm.d):
                text += f"## entry {y} {x}\n" + mm.entries[y][x].dumps(name)
        path = write_output(args, text, "walk-matrix.txt")
        return EXIT_OK, f"walk matrix total_mass={mm.total_mass} out={path}"
    if action == "schur":
        res = walks.probabilistic_schur(mu, i, policy=args.policy, mass_tol=args.mass_tol, details=True)
        path = write_output(args, res.measure.dumps(name), "walk-schur.txt")
        return EXIT_OK, f"walk schur letter={i} policy={args.policy} support={len(res.measure.weights)} deficit={res.deficit!r} out={path}"
    if action == "strip":
        try:
            out, atom = walks.strip_atom(mu)
        except walks.MeasureError as exc:
            raise UsageError(str(exc)) from None
        path = write_output(args, out.dumps(name), "walk-strip.txt")
        return EXIT_OK, f"walk strip atom={atom} out={path}"
    if action == "simulate":
        res = walks.simulate_first_hit(mu, i, args.samples, args.max_steps, seed, workers=args.workers)
        exact = walks.probabilistic_schur(mu, i, policy=args.policy, mass_tol=args.mass_tol)
        tv = walks.tv_distance(res.measure, exact)
        text = res.measure.dumps(name) + f"# samples={res.samples} lost={res.lost} seed={seed} tv_to_schur={tv!r}\n"
        path = write_output(args, text, "walk-simulate.txt")
        status = EXIT_OK if tv <= args.tol else EXIT_BREACH
        return status, f"walk simulate letter={i} samples={res.samples} lost={res.lost} tv={tv!r} out={path}"
    if action == "family-map":
        if fam is None:
            raise UsageError("family-map needs --family")
        try:
            v = walks.family_schur_map(fam.name, i, parse_number(args.value))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        path = write_output(args, f"{v}\n", "walk-family.txt")
        return EXIT_OK, f"walk family-map family={fam.name} letter={i} value={v} out={path}"
    if action == "search":
        if fam is not None:
            res = walks.self_affine_search(parse_number(args.value), i, tol=args.search_tol,
                                           max_iters=args.max_iters, family=fam.name)
        else:
            res = walks.self_affine_search(mu, i, tol=args.search_tol, max_iters=args.max_iters)
        text = ""
        if res.measure is not None:
            text += res.measure.dumps(name)
        text += f"# converged={res.converged} degenerate={res.degenerate} iterations={res.iterations} coefficient={res.coefficient} value={res.value}\n"
        path = write_output(args, text, "walk-search.txt")
        status = EXIT_OK if res.converged else EXIT_BREACH
        return status, (f"walk search converged={str(res.converged).lower()} degenerate={str(res.degenerate).lower()} "
                        f"iterations={res.iterations} coefficient={res.coefficient} out={path}")
    if action == "entropy":
        prof = walks.entropy_profile(mu, args.steps)
        text = "step,entropy_rate\n" + "".join(f"{k + 1},{h!r}\n" for k, h in enumerate(prof))
        path = write_output(args, text, "walk-entropy.csv")
        return EXIT_OK, f"walk entropy steps={args.steps} last={prof[-1]!r} out={path}"
    raise UsageError(f"unknown walk action {action!r}")


def cmd_nucleus(args):
    from .group import compute_nucleus

    aut = load_group(args)
    if args.max_rounds < 1 or args.depth_bound < 1:
        raise UsageError("bounds must be >= 1")
    if args.dry_run:
        return EXIT_OK, f"dry-run nucleus group={aut.name}"
    res = compute_nucleus(aut, args.max_rounds, args.depth_bound, args.max_size)
    if res.success:
        names = [aut.format_word(w) for w in res.elements]
        path = write_output(args, "\n".join(names) + "\n", "nucleus.txt")
        return EXIT_OK, f"nucleus group={aut.name} size={len(names)} elements={','.join(names)} out={path}"
    text = f"# failure: {res.message}\n# candidates={res.candidates} rounds={res.rounds} witness={res.witness}\n"
    path = write_output(args, text, "nucleus.txt")
    return EXIT_BREACH, f"nucleus group={aut.name} failed candidates={res.candidates} witness={res.witness} out={path}"


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sss", description="Self-similar groups, Schur renormalization and random walks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_):
        sp_.add_argument("--dry-run", action="store_true", help="validate the configuration only")
        sp_.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to SSS_SEED)")
        sp_.add_argument("--workers", type=int, default=1)
        sp_.add_argument("--out", default=None, help="output file")
        sp_.add_argument("--group", default=None, help=f"catalog group: {', '.join(catalog.group_names())}")
        sp_.add_argument("--automaton", default=None, help="automaton definition file (JSON)")
        return sp_

    g = common(sub.add_parser("group", help="inspect an automaton and one element"))
    g.add_argument("--element")
    g.add_argument("--act", help="tree word, e.g. 011")
    g.add_argument("--section", help="tree word")
    g.add_argument("--portrait", type=int)
    g.add_argument("--depth-bound", type=int, default=32)
    g.set_defaults(func=cmd_group)

    e = common(sub.add_parser("expand", help="level-n matrix of a group-algebra element"))
    e.add_argument("--operator", required=False)
    e.add_argument("--param", action="append", help="name=value")
    e.add_argument("--level", type=int, default=1)
    e.add_argument("--mode", choices=["exact", "complex"], default="exact")
    e.set_defaults(func=cmd_expand)

    s = common(sub.add_parser("spectrum", help="eigenvalues of a level matrix"))
    s.add_argument("--operator")
    s.add_argument("--pencil")
    s.add_argument("--spectral", default="s")
    s.add_argument("--param", action="append")
    s.add_argument("--level", type=int, default=1)
    s.set_defaults(func=cmd_spectrum)

    w = common(sub.add_parser("sweep", help="singular set of a pencil on a parameter grid"))
    w.add_argument("--operator")
    w.add_argument("--pencil")
    w.add_argument("--param", action="append")
    w.add_argument("--spectral", required=True)
    w.add_argument("--grid", action="append", help="name=lo:hi:count or name=v1,v2")
    w.add_argument("--level", type=int, default=1)
    w.add_argument("--curves", action="store_true", help="fit the catalog curve family")
    w.add_argument("--tol", type=float, default=1e-6)
    w.add_argument("--svg")
    w.add_argument("--viewport")
    w.set_defaults(func=cmd_sweep)

    v = common(sub.add_parser("schur-verify", help="check a pencil renormalization"))
    v.add_argument("--pencil")
    v.add_argument("--map")
    v.add_argument("--block", type=int, default=0)
    v.add_argument("--levels", default="1..3")
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--scale", default=None, help="projective factor (default: catalog value, else fitted)")
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--delta", type=float, default=1e-3)
    v.set_defaults(func=cmd_schur_verify)

    d = common(sub.add_parser("dynamics", help="renormalization maps"))
    d.add_argument("action", choices=["list", "eval", "identity", "semiconj", "orbit", "attractor"])
    d.add_argument("--map", help="map name; for identity a comma list composed right to left")
    d.add_argument("--rhs")
    d.add_argument("--point")
    d.add_argument("--exact", action="store_true")
    d.add_argument("--samples", type=int, default=1000)
    d.add_argument("--tol", type=float, default=1e-10)
    d.add_argument("--seeds")
    d.add_argument("--depth", type=int, default=1)
    d.add_argument("--points", type=int, default=10_000)
    d.add_argument("--burn-in", type=int, default=100)
    d.add_argument("--box", default="-4,4", help="initial points are uniform in box^k")
    d.add_argument("--svg")
    d.add_argument("--viewport")
    d.set_defaults(func=cmd_dynamics)

    k = common(sub.add_parser("walk", help="probabilistic Schur maps and first-hit walks"))
    k.add_argument("action", choices=["matrix", "schur", "strip", "simulate", "family-map", "search", "entropy"])
    k.add_argument("--family")
    k.add_argument("--value")
    k.add_argument("--measure", help='e.g. "1/3 a + 1/12 b + 1/12 c + 1/12 d + 5/12 e"')
    k.add_argument("--letter", type=int, default=0)
    k.add_argument("--policy", choices=["exact", "neumann"], default="exact")
    k.add_argument("--mass-tol", type=float, default=1e-6)
    k.add_argument("--samples", type=int, default=100_000)
    k.add_argument("--max-steps", type=int, default=10_000)
    k.add_argument("--tol", type=float, default=0.02)
    k.add_argument("--search-tol", type=float, default=1e-12)
    k.add_argument("--max-iters", type=int, default=200)
    k.add_argument("--steps", type=int, default=6)
    k.set_defaults(func=cmd_walk)

    n = common(sub.add_parser("nucleus", help="nucleus of a contracting group"))
    n.add_argument("--max-rounds", type=int, default=20)
    n.add_argument("--depth-bound", type=int, default=32)
    n.add_argument("--max-size", type=int, default=50)
    n.set_defaults(func=cmd_nucleus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        status, summary = args.func(args)
    except (UsageError, UnknownName) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except ValueError as exc:
        # malformed expressions, automata and out-of-range letters
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREACH
    print(summary)
    return status


if __name__ == "__main__":
    sys.exit(main())

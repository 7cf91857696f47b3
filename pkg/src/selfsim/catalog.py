"""Built-in automata, pencils, renormalization maps and curve families."""

from __future__ import annotations

import json
from functools import lru_cache

from .group import MealyAutomaton, parse_automaton


def _doc(d, states):
    return json.dumps(
        {"alphabet_size": d,
         "states": {k: {"output": out, "sections": sec} for k, (out, sec) in states.items()}},
        sort_keys=True, indent=2) + "\n"


# state -> (output row, sections); "e" is the identity
AUTOMATON_DOCS = {
    "grigorchuk": _doc(2, {
        "a": ([1, 0], ["e", "e"]),
        "b": ([0, 1], ["a", "c"]),
        "c": ([0, 1], ["a", "d"]),
        "d": ([0, 1], ["e", "b"]),
    }),
    "adding-machine": _doc(2, {
        "a": ([1, 0], ["e", "a"]),
    }),
    "basilica": _doc(2, {
        "a": ([0, 1], ["e", "b"]),
        "b": ([1, 0], ["e", "a"]),
    }),
    "hanoi": _doc(3, {
        "a": ([1, 0, 2], ["e", "e", "a"]),
        "b": ([2, 1, 0], ["e", "b", "e"]),
        "c": ([0, 2, 1], ["c", "e", "e"]),
    }),
    "sidki": _doc(2, {
        "a": ([0, 1], ["b", "b"]),
        "b": ([1, 0], ["a", "c"]),
        "c": ([1, 0], ["c", "a"]),
    }),
    "c2c2c2": _doc(2, {
        "a": ([1, 0], ["b", "b"]),
        "b": ([0, 1], ["a", "c"]),
        "c": ([0, 1], ["c", "a"]),
    }),
    "gw": _doc(2, {
        "a": ([1, 0], ["e", "e"]),
        "b": ([0, 1], ["a", "c"]),
        "c": ([0, 1], ["e", "b"]),
    }),
    "img-z2+i": _doc(2, {
        "a": ([1, 0], ["e", "e"]),
        "b": ([0, 1], ["a", "c"]),
        "c": ([0, 1], ["b", "e"]),
    }),
    "trivial": json.dumps({"alphabet_size": 2, "states": {"t": {"output": [0, 1], "sections": ["t", "t"]}}},
                          sort_keys=True, indent=2) + "\n",
}


class UnknownName(KeyError):
    def __init__(self, kind, name, available):
        super().__init__(name)
        self.kind, self.name, self.available = kind, name, sorted(available)

    def __str__(self):
        return f"unknown {self.kind} {self.name!r}; available: {', '.join(self.available)}"


def _lookup(table, kind, name):
    try:
        return table[name]
    except KeyError:
        raise UnknownName(kind, name, table) from None


@lru_cache(maxsize=None)
def get_automaton(name: str) -> MealyAutomaton:
    return parse_automaton(_lookup(AUTOMATON_DOCS, "group", name), name=name)


def group_names():
    return sorted(AUTOMATON_DOCS)


# pencils: (group, parameters, expression or block rows of expressions)
PENCILS = {
    "grigorchuk": {
        "R": ("lam mu", "-lam*a + b + c + d - (mu + 1)*e"),
        "M5": ("x y z u v", "x*a + y*b + z*c + u*d + v*e"),
        "M": ("", "a + b + c + d"),
    },
    "basilica": {
        "R": ("lam mu", "a + a' + lam*(b + b') - mu*e"),
        "M": ("", "a + a' + b + b'"),
    },
    "hanoi": {
        "Delta": ("x y", [["c - x", "y", "y"], ["y", "b - x", "y"], ["y", "y", "a - x"]]),
        "M": ("", "a + b + c"),
    },
    "img-z2+i": {
        "M": ("y z lam", "a + y*b + z*c - lam*e"),
    },
    "sidki": {
        "M": ("", "a + a' + b + b' + c + c'"),
    },
    "c2c2c2": {
        "M": ("", "a + b + c"),
    },
    "gw": {
        "M": ("", "a + b + c"),
    },
    "adding-machine": {
        "M": ("", "a + a'"),
    },
    "trivial": {
        "M": ("", "e"),
    },
}

# aliases accepted on the command line: R2 etc. name the same pencil
PENCIL_ALIASES = {"R2": "R", "R1": "R"}


def get_pencil(group: str, name: str):
    from .schur import Pencil

    table = _lookup(PENCILS, "group", group)
    name = PENCIL_ALIASES.get(name, name) if name not in table else name
    params, body = _lookup(table, "pencil", name)
    return Pencil.from_expressions(get_automaton(group), body, params.split(), name=name)


# rational maps: variables and component formulas
MAPS = {
    "F": ("lam mu", ["2*(4 - mu**2)/lam**2", "-mu - mu*(4 - mu**2)/lam**2"]),
    "G": ("lam mu", ["2*lam**2/(4 - mu**2)", "mu + mu*lam**2/(4 - mu**2)"]),
    "H": ("lam mu", ["4/lam", "-2*mu/lam"]),
    "S1hat": ("x y z u v", [
        "z + y",
        "x**2*(2*y*z*v - u*(y**2 + z**2 - u**2 + v**2))/Q",
        "x**2*(2*z*u*v - y*(-y**2 + z**2 + u**2 + v**2))/Q",
        "x**2*(2*y*u*v - z*(y**2 - z**2 + u**2 + v**2))/Q",
        "u + v + x**2*(2*y*z*u - v*(y**2 + z**2 + u**2 - v**2))/Q",
    ]),
    "S2hat": ("x y z u v", [
        "x**2*(y + z)/((u + v + y + z)*(u + v - y - z))",
        "u",
        "y",
        "z",
        "v - x**2*(u + v)/((u + v + y + z)*(u + v - y - z))",
    ]),
    "hanoi": ("x y", [
        "x - 2*(x**2 - x - y**2)*y**2/((x - y - 1)*(x**2 - 1 + y - y**2))",
        "(x + y - 1)*y**2/((x - y - 1)*(x**2 - 1 + y - y**2))",
    ]),
    "basilica": ("lam mu", ["(mu - 2)/lam**2", "-2 + mu*(mu - 2)/lam**2"]),
    "Phi": ("y z lam", [
        "z/y",
        "1/((z - lam - y)*(z - lam + y))",
        "(-lam*y**2 + lam*(z - lam)**2 + z - lam)/(y*(z - lam - y)*(z - lam + y))",
    ]),
    # one-dimensional factors and family maps
    "q": ("x", ["2*x**2 - 1"]),
    "alpha": ("t", ["1 - 2*t**2"]),
    "hanoi-f": ("x", ["x**2 - x - 3"]),
    "Lambda": ("z", ["1/(4*z)"]),
    "basilica-r": ("r", ["2/r"]),
    "phi1": ("alpha", ["(1 - alpha)/2"]),
    "phi2": ("alpha", ["alpha/2"]),
    "halve": ("x y", ["x/2", "y/2"]),
}

MAP_SUBSTITUTIONS = {
    "S1hat": {"Q": "(y + z + u + v)*(y + z - u - v)*(y - z + u - v)*(-y + z + u - v)"},
}


@lru_cache(maxsize=None)
def get_map(name: str):
    from .dynamics import RationalMapND

    variables, comps = _lookup(MAPS, "map", name)
    subs = MAP_SUBSTITUTIONS.get(name, {})
    return RationalMapND.from_strings(name, variables.split(), comps, subs)


def map_names():
    return sorted(MAPS)


# pencil renormalizations: S_block(P_{n+1}(z)) = scale(z) * P_n(map(z))
# "letters" gives the kept first letter inside each diagonal block of a block pencil
RENORMALIZATIONS = {
    ("grigorchuk", "R", "F"): {"block": 0, "scale": "-lam**2/(4 - mu**2)"},
    ("grigorchuk", "R", "G"): {"block": 1, "scale": "1"},
    ("grigorchuk", "M5", "S1hat"): {"block": 0, "scale": "1"},
    ("grigorchuk", "M5", "S2hat"): {"block": 1, "scale": "1"},
    ("hanoi", "Delta", "hanoi"): {"block": 0, "letters": (0, 1, 2), "scale": "1"},
    ("basilica", "R", "basilica"): {"block": 1, "scale": "lam**2/(mu - 2)"},
    ("img-z2+i", "M", "Phi"): {"block": 0, "scale": "y"},
}

# pairs known not to close up under the given Schur complement
UNSUPPORTED = {
    ("basilica", "R", 0): "the complementary block b + b' - mu has no finitely supported inverse",
    ("img-z2+i", "M", 1): "the complementary block y*a + z*b - lam has no finitely supported inverse",
}


def get_renormalization(group, pencil, map_name):
    pencil = PENCIL_ALIASES.get(pencil, pencil) if pencil not in PENCILS.get(group, {}) else pencil
    return RENORMALIZATIONS.get((group, pencil, map_name))


# semiconjugacies psi o map = factor o psi
SEMICONJUGACIES = {
    "F": ("F", "(4 - mu**2 + lam**2)/(4*lam)", "q"),
    # the displayed psi_G fails this identity; psi_F is H-invariant and serves G too
    "G": ("G", "(4 - lam**2 + mu**2)/(4*mu)", "q"),
    "G-corrected": ("G", "(4 - mu**2 + lam**2)/(4*lam)", "q"),
    # fitted by a low-degree rational ansatz, exact up to symbolic simplification
    "hanoi": ("hanoi", "(x**2 - x*y - 2*y**2 - 1)/y", "hanoi-f"),
}


def get_semiconjugacy(name):
    from .dynamics import SemiConjugacy

    src, psi, factor = _lookup(SEMICONJUGACIES, "semiconjugacy", name)
    return SemiConjugacy.from_strings(get_map(src), psi, get_map(factor))


# implicit curve families fitting singular sets
CURVE_FAMILIES = {
    "grigorchuk": {
        "variables": "lam mu",
        "lines": ["lam + mu - 2"],
        "template": "4 - mu**2 + lam**2 + 4*lam*theta",
        "theta_map": "alpha",
        "theta_seeds": [1],
        # level n needs preimages down to depth n - 1
        "depth_offset": -1,
    },
    "hanoi": {
        "variables": "y x",
        "lines": ["x - 1 - 2*y", "x + 1 + y", "x - 1 + y"],
        "template": "x**2 - x*y - 2*y**2 - theta*y - 1",
        "theta_map": "hanoi-f",
        "theta_seeds": [-2, 0],
        "depth_offset": 0,
    },
}


def get_curve_family(group: str, level: int):
    from .dynamics import CurveFamily, backward_orbit_1d

    spec = _lookup(CURVE_FAMILIES, "curve family", group)
    depth = max(level + spec["depth_offset"], 0)
    thetas = backward_orbit_1d(get_map(spec["theta_map"]), spec["theta_seeds"], depth).values
    return CurveFamily.from_strings(spec["variables"].split(), spec["template"], thetas, spec["lines"])

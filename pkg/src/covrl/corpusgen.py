"""Seeded generator of small valid toy-target programs.

Used to build the shipped starting corpus and the larger fixture corpora in
the test suite.  Programs are assembled from templates that only reference
variables already declared, so nearly every draw parses and runs cleanly;
each candidate is verified against the interpreter and retried with a
derived seed when it does not pass.
"""

from __future__ import annotations

from random import Random

from . import toy_target

_NAMES = ["a", "b", "c", "i", "n", "s", "t", "u", "x", "y", "z", "arr", "acc"]
_WORDS = ['"a"', '"b"', '"ab"', '"xy"', '"abc"', '"hello"', '"a b"', '"%41"', '"%0"', '"%00"', '"7"', '"42"']
_SAFE_STR = ['"a"', '"b"', '"ab"', '"xy"', '"abc"', '"hello"', '"7"', '"42"']
_NUMS = ["0", "1", "2", "3", "4", "5", "7", "8", "10", "13", "42", "100", "0x1f", "2.5", "1e3"]


class _Gen:
    def __init__(self, rng: Random):
        self.rng = rng
        self.numbers: list[str] = []
        self.strings: list[str] = []
        self.arrays: list[str] = []

    def _fresh(self) -> str | None:
        used = set(self.numbers) | set(self.strings) | set(self.arrays)
        free = [n for n in _NAMES if n not in used]
        return self.rng.choice(free) if free else None

    def _num_expr(self) -> str:
        rng = self.rng
        roll = rng.random()
        if roll < 0.4 or not self.numbers:
            return rng.choice(_NUMS)
        if roll < 0.7:
            return rng.choice(self.numbers)
        op = rng.choice(["+", "-", "*"])
        return f"{rng.choice(self.numbers)} {op} {rng.choice(_NUMS[:10])}"

    def _str_expr(self) -> str:
        rng = self.rng
        if self.strings and rng.random() < 0.4:
            return f"{rng.choice(self.strings)} + {rng.choice(_SAFE_STR)}"
        return rng.choice(_WORDS)

    def _arr_literal(self, depth: int) -> str:
        rng = self.rng
        elems = []
        for _ in range(rng.randint(1, 3)):
            if depth > 1 and rng.random() < 0.5:
                elems.append(self._arr_literal(depth - 1))
            else:
                elems.append(rng.choice(_NUMS[:8]))
        return "[ " + " , ".join(elems) + " ]"

    def statements(self, count: int) -> list[str]:
        rng = self.rng
        stmts: list[str] = []
        while len(stmts) < count:
            kind = rng.randrange(12)
            if kind == 0 or not (self.numbers or self.strings):
                name = self._fresh()
                if name:
                    stmts.append(f"let {name} = {self._num_expr()} ;")
                    self.numbers.append(name)
                continue
            if kind == 1:
                name = self._fresh()
                if name:
                    stmts.append(f"let {name} = {self._str_expr()} ;")
                    self.strings.append(name)
                continue
            if kind == 2:
                name = self._fresh()
                if name:
                    depth = rng.choice((1, 1, 2, 3, 4))
                    stmts.append(f"let {name} = {self._arr_literal(depth)} ;")
                    self.arrays.append(name)
                continue
            if kind == 3 and self.numbers:
                v = rng.choice(self.numbers)
                stmts.append(f"{v} = {v} {rng.choice(['+', '-', '*'])} {rng.choice(_NUMS[:8])} ;")
                continue
            if kind == 4 and self.numbers:
                v = rng.choice(self.numbers)
                body = f"{v} = {v} + 1 ;"
                stmts.append(
                    f"if ( {v} < {rng.choice(['10', '100', '5'])} ) {{ {body} }}"
                    + (" else { " + f"{v} = 0 ;" + " }" if rng.random() < 0.4 else "")
                )
                continue
            if kind == 5 and self.numbers:
                v = rng.choice(self.numbers)
                limit = rng.choice(["3", "5", "8"])
                stmts.append(f"{v} = 0 ; while ( {v} < {limit} ) {{ {v} = {v} + 1 ; }}")
                continue
            if kind == 6:
                call = rng.choice(
                    [
                        "print ( {n} )",
                        "print ( abs ( 0 - {n} ) )",
                        "print ( min ( {n} , 9 ) + max ( 1 , {n} ) )",
                        "print ( sqrt ( 16 ) )",
                        "print ( floor ( 2.5 ) )",
                        "print ( parseInt ( \"42\" ) )",
                    ]
                ).format(n=self._num_expr())
                stmts.append(call + " ;")
                continue
            if kind == 7 and self.strings:
                s = rng.choice(self.strings)
                stmts.append(
                    rng.choice(
                        [
                            f"print ( len ( {s} ) ) ;",
                            f"print ( {s} + \"!\" ) ;",
                            f"print ( charAt ( {s} , 0 ) ) ;",
                            f"print ( repeat ( {s} , {rng.choice(['2', '3'])} ) ) ;",
                            f"print ( str ( len ( {s} ) ) ) ;",
                        ]
                    )
                )
                continue
            if kind == 8:
                stmts.append(
                    rng.choice(
                        [
                            'print ( decodeURI ( "%41%42" ) ) ;',
                            'print ( decodeURI ( "a%20b" ) ) ;',
                            'print ( encodeURI ( "a b" ) ) ;',
                            'print ( encodeURI ( "x/y" ) ) ;',
                            'let q = "%0" ; print ( len ( q ) ) ;',
                            'print ( repeat ( "ab" , 3 ) ) ;',
                            'print ( repeat ( "xy" , 2 ) + "!" ) ;',
                        ]
                    )
                )
                continue
            if kind == 9 and self.arrays:
                a = rng.choice(self.arrays)
                stmts.append(
                    rng.choice(
                        [
                            f"push ( {a} , {rng.choice(_NUMS[:8])} ) ;",
                            f"print ( len ( {a} ) ) ;",
                            f"if ( len ( {a} ) > 0 ) {{ print ( {a} [ 0 ] ) ; }}",
                        ]
                    )
                )
                continue
            if kind == 10 and self.numbers:
                x = rng.choice(self.numbers)
                y = self._num_expr()
                cmp_op = rng.choice(["<", ">", "<=", ">=", "==", "!="])
                stmts.append(f"print ( {x} {cmp_op} {y} ) ;")
                continue
            if kind == 11:
                stmts.append(
                    rng.choice(
                        [
                            "if ( true && ! false ) { print ( 1 ) ; }",
                            "if ( false || true ) { print ( 2 ) ; }",
                            "print ( ( 1 + 2 ) * 3 ) ;",
                            'print ( "id" == "id" ) ;',
                            "; ",
                            # shallow touches of the remaining expression
                            # families, so campaign coverage growth measures
                            # guidance rather than which run first stumbles
                            # into division or string indexing
                            f"print ( {rng.choice(['8 / 2', '7 / 2', '5 / 5', '3 / 1'])} ) ;",
                            f'let w = "wxy" ; print ( w [ {rng.choice(["0", "1", "2"])} ] ) ;',
                            'let sa = [ "p" , "q" ] ; push ( sa , "r" ) ; print ( pop ( sa ) ) ;',
                            "print ( ( ( ( 4 ) ) ) ) ;",
                            "print ( 1e3 * 1e3 ) ;",
                            "print ( 1 / 4 ) ;",
                            "print ( str ( \"s\" ) + str ( null ) ) ;",
                            "let lc = 0 ; while ( lc < 60 ) { lc = lc + 1 ; }",
                            "print ( floor ( 7 ) + floor ( 0 - 2.5 ) ) ;",
                        ]
                    )
                )
                continue
        return stmts


def generate_program(rng: Random, min_stmts: int = 3, max_stmts: int = 8) -> str:
    gen = _Gen(rng)
    return "\n".join(gen.statements(rng.randint(min_stmts, max_stmts)))


# builtin-call statements with literal arguments.  Programs built from these
# keep every argument one token wide, so a masked slot lands on an argument
# far more often than in the variable-driven templates above.
_API_STMTS = [
    'print ( repeat ( {s} , {n} ) ) ;',
    'print ( repeat ( "ab" , {n} ) + {s} ) ;',
    'print ( decodeURI ( {u} ) ) ;',
    'print ( len ( decodeURI ( {u} ) ) ) ;',
    'print ( encodeURI ( {s} ) ) ;',
    'print ( charAt ( {s} , 0 ) ) ;',
    'print ( parseInt ( {d} ) ) ;',
    'print ( sqrt ( {m} ) ) ;',
    'print ( floor ( 2.5 ) + abs ( 0 - {n} ) ) ;',
    'print ( min ( {n} , {m} ) + max ( {m} , {n} ) ) ;',
    'print ( str ( {n} ) + {s} ) ;',
    'let arr = [ {n} , {m} ] ; push ( arr , {n} ) ; print ( pop ( arr ) ) ;',
]
_API_STR = ['"ab"', '"xy"', '"abc"', '"a b"', '"hello"']
_API_URI = ['"%41%42"', '"a%20b"', '"%41"', '"x%42y"', '"%00"', '"%41%42%43"']
_API_NUM = ["2", "3", "4", "5", "8"]
_API_DIGITS = ['"42"', '"7"', '"100"', '"13"']


def generate_api_probe(rng: Random, min_stmts: int = 2, max_stmts: int = 3) -> str:
    # probes stay short on purpose: the fewer tokens a program has, the more
    # often a masked slot lands on a builtin argument instead of scaffolding
    n = rng.randint(min_stmts, max_stmts)
    picks = rng.sample(_API_STMTS, min(n, len(_API_STMTS)))
    return "\n".join(
        t.format(
            s=rng.choice(_API_STR),
            u=rng.choice(_API_URI),
            d=rng.choice(_API_DIGITS),
            n=rng.choice(_API_NUM),
            m=rng.choice(_API_NUM),
        )
        for t in picks
    )


def generate_valid_program(seed: int, min_stmts: int = 3, max_stmts: int = 8) -> str:
    """A program that parses and passes; retries derived seeds if needed."""
    for attempt in range(50):
        rng = Random((seed, attempt))
        source = generate_program(rng, min_stmts, max_stmts)
        result = toy_target.run(source)
        if result.exit_code == 0:
            return source
    raise RuntimeError(f"could not generate a valid program for seed {seed}")


def generate_valid_api_probe(seed: int, **kwargs) -> str:
    for attempt in range(50):
        rng = Random((seed, "api", attempt))
        source = generate_api_probe(rng, **kwargs)
        result = toy_target.run(source)
        if result.exit_code == 0:
            return source
    raise RuntimeError(f"could not generate a valid api probe for seed {seed}")


# Fixed programs that pin down the easy one-off behaviors: numeric
# coincidences, shallow nesting records, container edge cases.  Shipping
# them in every corpus means campaign comparisons measure search, not who
# gets lucky on trivia.  Percent-escape and repeat depths stay out on
# purpose; those are the behaviors worth searching for.
FLOOR_PROGRAMS = [
    "print ( sqrt ( 4 ) + sqrt ( 2 ) + sqrt ( 1 ) + sqrt ( 0 ) ) ; "
    "print ( abs ( 3 ) + abs ( 0 ) + floor ( 5 ) + floor ( 0 - 2.5 ) ) ; "
    "print ( min ( 2 , 2 ) + max ( 3 , 3 ) + min ( 1 , 4 ) + max ( 4 , 1 ) ) ;",
    "print ( 6 / 1 ) ; print ( 5 / 5 ) ; print ( 7 / 2 ) ; print ( 1 / 4 ) ; "
    "print ( 0 - 8 / 2 ) ; print ( 5000 / 1 ) ; print ( 7 % 3 ) ; "
    "print ( 6 % 3 ) ; print ( ( 0 - 7 ) % 3 ) ;",
    "if ( 1 < 2 ) { if ( 2 < 3 ) { if ( 3 < 4 ) { print ( 1 ) ; } } } "
    "let q1 = 0 ; while ( q1 < 2 ) { let q2 = 0 ; while ( q2 < 2 ) { "
    "let q3 = 0 ; while ( q3 < 2 ) { q3 = q3 + 1 ; } q2 = q2 + 1 ; } q1 = q1 + 1 ; }",
    "print ( ( ( ( ( ( ( ( ( 1 ) ) ) ) ) ) ) ) ) ;",
    "let d6 = [ [ [ [ [ [ 1 ] ] ] ] ] ] ; "
    "print ( d6 [ 0 ] [ 0 ] [ 0 ] [ 0 ] [ 0 ] [ 0 ] ) ;",
    'let sl = "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa" ; '
    "print ( len ( sl ) ) ; print ( sl ) ; "
    'if ( "a" ) { print ( 2 ) ; } if ( 1 + 1 ) { print ( 3 ) ; } '
    "print ( str ( true ) + str ( [ 1 , 2 ] ) ) ;",
    "let pc = 0 ; while ( pc < 21 ) { print ( pc ) ; pc = pc + 1 ; }",
    'let po = [ 1 , 2 ] ; print ( pop ( po ) ) ; print ( pop ( po ) ) ; '
    "print ( [ 1 ] == [ 1 ] ) ; print ( [ ] ) ;",
    'print ( parseInt ( "500" ) + parseInt ( "42" ) + parseInt ( "7" ) ) ; '
    'print ( parseInt ( "0" ) + parseInt ( "-3" ) ) ;',
    'let pf = [ 1 ] ; push ( pf , "s" ) ; push ( pf , [ 2 ] ) ; '
    "push ( pf , true ) ; print ( len ( pf ) ) ;",
    "let a4 = [ 1 , 2 , 3 , 4 ] ; let a8 = [ 1 , 2 , 3 , 4 , 5 , 6 , 7 , 8 ] ; "
    "print ( str ( a8 ) ) ; push ( a8 , 9 ) ; print ( len ( a8 ) ) ;",
    "let b16 = [ 1 , 2 , 3 , 4 , 5 , 6 , 7 , 8 , 9 , 10 , 11 , 12 , 13 , 14 , 15 , 16 ] ; "
    "let c32 = [ " + " , ".join(["0"] * 32) + " ] ; "
    "print ( len ( b16 ) + len ( c32 ) ) ;",
    "let w = 0 ; while ( w < 2 ) { if ( w ) { print ( w ) ; } w = w + 1 ; } "
    'if ( len ( "a" ) ) { print ( 1 ) ; } '
    "if ( 0 ) { print ( 0 ) ; } else if ( 1 ) { print ( 2 ) ; }",
    " ".join(f"let v{i} = {i} ;" for i in range(16)) + " print ( v0 + v15 ) ;",
    'print ( "ab" < "abc" ) ; print ( - 5 ) ; '
    "print ( ( 0 - 2 ) + ( 0 - 3 ) ) ; print ( ( 0 - 2 ) * ( 0 - 3 ) ) ; "
    "print ( 0.5 * 0.5 ) ;",
    "let it = 0 ; while ( it < 150 ) { it = it + 1 ; } print ( it ) ;",
]


def generate_corpus(
    count: int,
    base_seed: int = 0,
    api_share: float = 0.0,
    include_floor: bool = True,
    **kwargs,
) -> list[str]:
    """api_share sets the fraction of programs built from builtin-call
    statements with literal arguments; the rest use the general templates."""
    floor = list(FLOOR_PROGRAMS[:count]) if include_floor else []
    rest = count - len(floor)
    n_api = round(rest * api_share)
    out = floor + [
        generate_valid_program(base_seed * 1_000_003 + i, **kwargs)
        for i in range(rest - n_api)
    ]
    out += [
        generate_valid_api_probe(base_seed * 1_000_003 + i)
        for i in range(rest - n_api, rest)
    ]
    return out

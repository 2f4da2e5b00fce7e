"""Self-instrumented toy interpreter used as the hermetic fuzzing target.

The language is a small JavaScript-flavored subset: numbers, strings,
booleans, null, arrays, let/assignment, if/else, while, and calls to a
fixed table of builtins.  Every parser production and evaluator branch
hits a statically allocated edge id, giving a few hundred distinct edges
whose discovery order rewards progressively deeper inputs.

Errors mirror the engine taxonomy: SyntaxError at parse time, and
TypeError / ReferenceError / RangeError / URIError / InternalError at run
time, all printed as "<Kind>: <message>" with exit status 1.

Three crash bugs are planted behind specific deep paths; they emit a fake
sanitizer report (with run-varying addresses) and, when run as a process,
re-raise the corresponding signal after flushing coverage.  Coverage for a
given input is deterministic; only the crash-report addresses vary.

Process interface:  covrl-toy FILE
  COVRL_COV_PATH      write the final counter map to this file at exit
  COVRL_SHM_PATH      mmap this pre-sized file and add counters into it
  COVRL_MAP_EXPONENT  log2 of the map size for either channel (default 16)
  COVRL_TRACE=1       append one "edge <id> <name>" line per hit to stderr
"""

from __future__ import annotations

import os
import sys
import time
from random import Random

from .tokenizer import (
    KIND_IDENTIFIER,
    KIND_KEYWORD,
    KIND_NUMBER,
    KIND_PUNCTUATOR,
    KIND_REGEX,
    KIND_STRING,
    KIND_TEMPLATE,
    tokenize,
)

DEFAULT_FUEL = 200          # while-loop iterations per run
STMT_BUDGET = 2000          # executed statements per run
MAX_STR_LEN = 4096
MAX_ARR_LEN = 256
MAX_EXPR_DEPTH = 32
CRASH_ARRAY_DEPTH = 7       # array literals nested this deep hit bug 1

SIG_ARRAY = 11   # "stack smash" in the array-literal parser
SIG_REPEAT = 6   # "heap overflow" in the repeat builtin
SIG_URI = 4      # "decoder corruption" in decodeURI

_INF = float("inf")
_NEG_INF = float("-inf")

EDGE_NAMES: list[str] = []


def _edge(name: str) -> int:
    EDGE_NAMES.append(name)
    return len(EDGE_NAMES) - 1


def _ladder(name: str, levels) -> list[int]:
    return [_edge(f"{name}_{lvl}") for lvl in levels]


# ----- program shape ---------------------------------------------------
E_START = _edge("start")
E_EMPTY = _edge("empty_program")
E_DONE = _edge("done")
E_STMTS_PARSED = _ladder("stmts_parsed", ("1", "2", "4", "8"))
E_STMTS_RUN = _ladder("stmts_run", ("2", "5", "10", "20"))

# ----- parse: statements ------------------------------------------------
P_LET = _edge("p_let")
P_ASSIGN = _edge("p_assign")
P_IF = _edge("p_if")
P_ELSE = _edge("p_else")
P_WHILE = _edge("p_while")
P_EXPR_STMT = _edge("p_expr_stmt")
P_BLOCK = _edge("p_block")
P_EMPTY_STMT = _edge("p_empty_stmt")

# ----- parse: expressions ----------------------------------------------
P_OR = _edge("p_or")
P_AND = _edge("p_and")
P_EQ = _edge("p_eq")
P_NE = _edge("p_ne")
P_LT = _edge("p_lt")
P_GT = _edge("p_gt")
P_LE = _edge("p_le")
P_GE = _edge("p_ge")
P_ADD = _edge("p_add")
P_SUB = _edge("p_sub")
P_MUL = _edge("p_mul")
P_DIV = _edge("p_div")
P_MOD = _edge("p_mod")
P_NEG = _edge("p_neg")
P_NOT = _edge("p_not")
P_POS = _edge("p_pos")
P_INDEX = _edge("p_index")
P_CALL = _edge("p_call")
P_CALL_ARGS = _ladder("p_call_args", ("0", "1", "2", "3plus"))
P_CALL_DEPTH = _ladder("p_call_depth", range(1, 5))
P_PAREN = _edge("p_paren")
P_PAREN_DEPTH = _ladder("p_paren_depth", range(1, 9))
P_ARRAY = _edge("p_array")
P_ARRAY_ARITY = _ladder("p_array_arity", ("0", "1", "2", "3plus"))
P_ARRAY_DEPTH = _ladder("p_array_depth", range(1, CRASH_ARRAY_DEPTH))
P_VAR = _edge("p_var_ref")
P_TRUE = _edge("p_true")
P_FALSE = _edge("p_false")
P_NULL = _edge("p_null")
P_NUM = _edge("p_number")
P_NUM_KIND = {
    "zero": _edge("p_num_zero"),
    "one": _edge("p_num_one"),
    "small": _edge("p_num_small"),
    "medium": _edge("p_num_medium"),
    "big": _edge("p_num_big"),
    "huge": _edge("p_num_huge"),
    "fraction": _edge("p_num_fraction"),
    "hex": _edge("p_num_hex"),
    "exponent": _edge("p_num_exponent"),
}
P_STR = _edge("p_string")
P_STR_EMPTY = _edge("p_str_empty")
P_STR_SHORT = _edge("p_str_short")
P_STR_LONG = _edge("p_str_long")
P_STR_ESCAPE = _edge("p_str_escape")
P_STR_PERCENT = _edge("p_str_percent")

# ----- parse: failures --------------------------------------------------
SYN_PRIMARY = _edge("syn_bad_primary")
SYN_PAREN = _edge("syn_missing_paren")
SYN_BRACKET = _edge("syn_missing_bracket")
SYN_BRACE = _edge("syn_missing_brace")
SYN_SEMI = _edge("syn_missing_semi")
SYN_TARGET = _edge("syn_bad_assign_target")
SYN_EOF = _edge("syn_unexpected_eof")
SYN_DEEP = _edge("syn_too_deep")
SYN_TEMPLATE = _edge("syn_template_unsupported")
SYN_REGEX = _edge("syn_regex_unsupported")
SYN_KEYWORD = _edge("syn_keyword_misuse")

# ----- eval: statements -------------------------------------------------
EV_LET = _edge("ev_let")
EV_LET_NUM = _edge("ev_let_num")
EV_LET_STR = _edge("ev_let_str")
EV_LET_ARR = _edge("ev_let_arr")
EV_LET_OTHER = _edge("ev_let_other")
EV_ASSIGN = _edge("ev_assign")
EV_ASSIGN_UNDECLARED = _edge("ev_assign_undeclared")
EV_IF_TAKEN = _edge("ev_if_taken")
EV_IF_SKIPPED = _edge("ev_if_skipped")
EV_ELSE_TAKEN = _edge("ev_else_taken")
EV_WHILE_ENTER = _edge("ev_while_enter")
EV_WHILE_SKIP = _edge("ev_while_skip")
EV_WHILE_ITERS = _ladder("ev_while_iters", ("1", "2", "5", "10"))
EV_EXPR_STMT = _edge("ev_expr_stmt")
EV_VAR_COUNT = _ladder("ev_var_count", ("2", "4", "6"))

# ----- eval: operators --------------------------------------------------
EV_ADD_NUM = _edge("ev_add_num")
EV_ADD_STR = _edge("ev_add_str")
EV_ADD_STR_NUM = _edge("ev_add_str_num")
EV_ADD_NUM_STR = _edge("ev_add_num_str")
EV_ADD_BAD = _edge("ev_add_type_error")
EV_SUB = _edge("ev_sub")
EV_MUL = _edge("ev_mul")
EV_DIV = _edge("ev_div")
EV_DIV_FRACTION = _edge("ev_div_fraction")
EV_DIV_ZERO = _edge("ev_div_zero")
EV_MOD = _edge("ev_mod")
EV_MOD_ZERO = _edge("ev_mod_zero")
EV_ARITH_BAD = _edge("ev_arith_type_error")
EV_ARITH_NEG = _edge("ev_result_negative")
EV_ARITH_BIG = _edge("ev_result_big")
EV_ARITH_HUGE = _edge("ev_result_huge")
EV_CMP_NUM = _edge("ev_cmp_num")
EV_CMP_STR = _edge("ev_cmp_str")
EV_CMP_BAD = _edge("ev_cmp_type_error")
EV_CMP_TRUE = _edge("ev_cmp_true")
EV_CMP_FALSE = _edge("ev_cmp_false")
EV_CMP_OP = {
    "<": _edge("ev_cmp_lt"),
    ">": _edge("ev_cmp_gt"),
    "<=": _edge("ev_cmp_le"),
    ">=": _edge("ev_cmp_ge"),
}
EV_EQ_TRUE = _edge("ev_eq_true")
EV_EQ_FALSE = _edge("ev_eq_false")
EV_AND_SHORT = _edge("ev_and_short")
EV_AND_FULL = _edge("ev_and_full")
EV_OR_SHORT = _edge("ev_or_short")
EV_OR_FULL = _edge("ev_or_full")
EV_NOT = _edge("ev_not")
EV_NEG = _edge("ev_neg")
EV_NEG_BAD = _edge("ev_neg_type_error")
EV_POS = _edge("ev_pos")
EV_TRUTH_BOOL = _edge("ev_truth_bool")
EV_TRUTH_NUM = _edge("ev_truth_num")
EV_TRUTH_STR = _edge("ev_truth_str")
EV_TRUTH_NULL = _edge("ev_truth_null")
EV_TRUTH_ARR = _edge("ev_truth_arr")

# ----- eval: indexing and variables --------------------------------------
EV_IDX_ARR = _edge("ev_index_array")
EV_IDX_ARR_OOB = _edge("ev_index_array_oob")
EV_IDX_STR = _edge("ev_index_string")
EV_IDX_STR_OOB = _edge("ev_index_string_oob")
EV_IDX_NONINT = _edge("ev_index_nonint")
EV_IDX_BAD_BASE = _edge("ev_index_bad_base")
EV_IDX_NESTED = _edge("ev_index_nested_array")
EV_VAR_READ = _edge("ev_var_read")
EV_VAR_UNDEF = _edge("ev_var_undefined")
EV_ARR_NUM = _edge("ev_array_of_numbers")
EV_ARR_STR = _edge("ev_array_of_strings")
EV_ARR_NESTED = _edge("ev_array_nested")
EV_ARR_MIXED = _edge("ev_array_mixed")
EV_STR_LEN = _ladder("ev_str_len", ("8", "32", "128"))
EV_STR_EMPTY_RESULT = _edge("ev_str_empty_result")

# ----- builtins ----------------------------------------------------------
BUILTIN_EDGE = {
    name: _edge(f"bi_{name}")
    for name in (
        "print len abs min max sqrt floor parseInt str push pop charAt "
        "repeat decodeURI encodeURI".split()
    )
}
BI_ARITY = _edge("bi_arity_error")
BI_TYPE = _edge("bi_type_error")
BI_UNKNOWN = _edge("bi_unknown_function")
BI_PRINT_NUM = _edge("bi_print_num")
BI_PRINT_STR = _edge("bi_print_str")
BI_PRINT_ARR = _edge("bi_print_arr")
BI_PRINT_OTHER = _edge("bi_print_other")
BI_LEN_STR = _edge("bi_len_str")
BI_LEN_ARR = _edge("bi_len_arr")
BI_ABS_NEG = _edge("bi_abs_neg")
BI_SQRT_NEG = _edge("bi_sqrt_neg")
BI_FLOOR_FRAC = _edge("bi_floor_frac")
BI_PARSEINT_STR = _edge("bi_parseint_str")
BI_PARSEINT_NUM = _edge("bi_parseint_num")
BI_PARSEINT_FAIL = _edge("bi_parseint_fail")
BI_STR_NUM = _edge("bi_str_of_num")
BI_STR_ARR = _edge("bi_str_of_arr")
BI_PUSH_4 = _edge("bi_push_len_4")
BI_PUSH_8 = _edge("bi_push_len_8")
BI_PUSH_FULL = _edge("bi_push_overflow")
BI_POP_EMPTY = _edge("bi_pop_empty")
BI_CHARAT_OOB = _edge("bi_charat_oob")
BI_REPEAT_NEG = _edge("bi_repeat_negative")
BI_REPEAT_BIG = _edge("bi_repeat_big")
BI_REPEAT_LONG = _edge("bi_repeat_too_long")
BI_DECODE_PLAIN = _edge("bi_decode_plain")
BI_DECODE_ESCAPE = _edge("bi_decode_escape")
BI_DECODE_BAD = _edge("bi_decode_malformed")
BI_ENCODE_PLAIN = _edge("bi_encode_plain")
BI_ENCODE_ESCAPED = _edge("bi_encode_escaped")

# ----- limits and crashes -------------------------------------------------
EV_FUEL_OUT = _edge("ev_loop_budget_exhausted")
EV_STMT_OUT = _edge("ev_stmt_budget_exhausted")
EV_STR_OVERFLOW = _edge("ev_string_too_long")
EV_ARR_OVERFLOW = _edge("ev_array_too_long")
CRASH_ARRAY = _edge("crash_deep_array")
CRASH_REPEAT = _edge("crash_repeat_13")
CRASH_URI = _edge("crash_uri_nul")

# ----- deep value coverage -------------------------------------------------
# Everything below fires only on successfully evaluated operations, so this
# block is only reachable through semantically valid programs.  It is the
# bulk of the map by design: like a real engine, most distinct behavior
# lives past the parser.

# |result| magnitude ladder for every successful arithmetic op
EV_VAL = _ladder(
    "ev_val", ("zero", "below_1", "1_10", "10_100", "100_1k", "1k_10k", "10k_1m", "1m_up")
)

# per-operator fine structure
EV_ADD_BOTH_NEG = _edge("ev_add_both_negative")
EV_ADD_MIXED_SIGN = _edge("ev_add_mixed_sign")
EV_ADD_ZERO_RESULT = _edge("ev_add_zero_result")
EV_SUB_ZERO_RESULT = _edge("ev_sub_zero_result")
EV_SUB_NEG_MINUEND = _edge("ev_sub_negative_minuend")
EV_MUL_BY_ZERO = _edge("ev_mul_by_zero")
EV_MUL_BY_ONE = _edge("ev_mul_by_one")
EV_MUL_BOTH_NEG = _edge("ev_mul_both_negative")
EV_MUL_FRAC = _edge("ev_mul_fraction_result")
EV_DIV_EXACT = _edge("ev_div_exact")
EV_DIV_BY_ONE = _edge("ev_div_by_one")
EV_DIV_SELF = _edge("ev_div_self")
EV_MOD_ZERO_RESULT = _edge("ev_mod_zero_result")
EV_MOD_NEG_OPERAND = _edge("ev_mod_negative_operand")

# string results: longer ladder plus content classes
EV_STR_LEN_EXT = _ladder("ev_str_len", ("256", "512", "1024", "2048"))
EV_STR_HAS_DIGIT = _edge("ev_str_has_digit")
EV_STR_HAS_ALPHA = _edge("ev_str_has_alpha")
EV_STR_HAS_PUNCT = _edge("ev_str_has_punct")
EV_STR_HAS_SPACE = _edge("ev_str_has_space")
EV_STR_HAS_PERCENT = _edge("ev_str_has_percent")
EV_STR_RUN8 = _edge("ev_str_char_run_8")

# control flow depth and volume
EV_WHILE_ITERS_EXT = _ladder("ev_while_iters", ("20", "50", "100", "150"))
EV_LOOP_NEST_2 = _edge("ev_loop_nest_2")
EV_LOOP_NEST_3 = _edge("ev_loop_nest_3")
EV_LOOPS_TWO = _edge("ev_two_loops_run")
EV_IF_IN_LOOP = _edge("ev_if_inside_loop")
EV_IF_NEST_2 = _edge("ev_if_nest_2")
EV_IF_NEST_3 = _edge("ev_if_nest_3")
EV_ELSE_IF = _edge("ev_else_if_chain")
EV_IF_COND = {
    "lit": _edge("ev_if_cond_literal"),
    "var": _edge("ev_if_cond_var"),
    "cmp": _edge("ev_if_cond_compare"),
    "logic": _edge("ev_if_cond_logic"),
    "call": _edge("ev_if_cond_call"),
    "other": _edge("ev_if_cond_other"),
}

# variable state
EV_VAR_COUNT_EXT = _ladder("ev_var_count", ("8", "12", "16"))
EV_LET_SHADOW = _edge("ev_let_shadow")
EV_ASSIGN_3 = _edge("ev_assign_3")
EV_ASSIGN_10 = _edge("ev_assign_10")

# arrays as values
EV_ARR_LEN = _ladder("ev_array_len", ("4", "8", "16", "32", "64", "128"))
EV_ARR_VAL_DEPTH = _ladder("ev_array_value_depth", ("2", "3", "4", "5", "6"))
EV_IDX_FIRST = _edge("ev_index_first")
EV_IDX_LAST = _edge("ev_index_last")
EV_IDX_MIDDLE = _edge("ev_index_middle")

# comparison fine structure
EV_CMP_STR_EQ_LEN = _edge("ev_cmp_str_same_length")
EV_CMP_STR_PREFIX = _edge("ev_cmp_str_prefix")
EV_EQ_BOOL_NUM = _edge("ev_eq_bool_vs_num")
EV_EQ_ARR = _edge("ev_eq_arrays")

# builtin argument/result buckets
BI_PARSEINT_VAL = _ladder(
    "bi_parseint_val", ("neg", "zero", "1_9", "10_99", "100_up", "huge")
)
BI_PARSEINT_WS = _edge("bi_parseint_whitespace")
BI_ABS_ZERO = _edge("bi_abs_zero")
BI_ABS_NOOP = _edge("bi_abs_noop")
BI_MIN_LEFT = _edge("bi_min_left")
BI_MIN_RIGHT = _edge("bi_min_right")
BI_MIN_TIE = _edge("bi_min_tie")
BI_MAX_LEFT = _edge("bi_max_left")
BI_MAX_RIGHT = _edge("bi_max_right")
BI_MAX_TIE = _edge("bi_max_tie")
BI_SQRT_PERFECT = _edge("bi_sqrt_perfect")
BI_SQRT_FRAC = _edge("bi_sqrt_fraction")
BI_SQRT_ZERO = _edge("bi_sqrt_zero")
BI_SQRT_ONE = _edge("bi_sqrt_one")
BI_FLOOR_NOOP = _edge("bi_floor_noop")
BI_FLOOR_NEG = _edge("bi_floor_negative")
BI_LEN_VAL = _ladder("bi_len_val", ("0", "1", "2_8", "9_32", "33_up"))
BI_CHARAT_FIRST = _edge("bi_charat_first")
BI_CHARAT_LAST = _edge("bi_charat_last")
BI_CHARAT_MID = _edge("bi_charat_mid")
BI_CHARAT_DIGIT = _edge("bi_charat_digit")
BI_CHARAT_ALPHA = _edge("bi_charat_alpha")
BI_CHARAT_OTHER = _edge("bi_charat_other")
BI_REPEAT_COUNT = _ladder(
    "bi_repeat_count", ("0", "1", "2_4", "5_8", "9_16", "17_64", "65_up")
)
BI_REPEAT_EMPTY = _edge("bi_repeat_empty_string")
BI_DECODE_ESCAPES = _ladder("bi_decode_escapes", ("1", "2", "3_8", "9_up"))
BI_ENCODE_GROWTH = _ladder("bi_encode_escapes", ("1", "2_4", "5_16", "17_up"))
BI_PRINT_INT = _edge("bi_print_int")
BI_PRINT_FRAC = _edge("bi_print_fraction")
BI_PRINT_NEG = _edge("bi_print_negative")
BI_PRINT_EMPTY_STR = _edge("bi_print_empty_string")
BI_PRINT_LONG_STR = _edge("bi_print_long_string")
BI_PRINT_BOOL = _edge("bi_print_bool")
BI_PRINT_NULL = _edge("bi_print_null")
BI_PRINT_EMPTY_ARR = _edge("bi_print_empty_array")
BI_PRINT_NESTED_ARR = _edge("bi_print_nested_array")
BI_PRINT_COUNT = _ladder("bi_print_count", ("2", "5", "10", "20"))
BI_STR_BOOL = _edge("bi_str_of_bool")
BI_STR_NULL = _edge("bi_str_of_null")
BI_STR_NOOP = _edge("bi_str_of_str")
BI_STR_ARR_LONG = _edge("bi_str_of_long_arr")
BI_PUSH_NUM = _edge("bi_push_num")
BI_PUSH_STR = _edge("bi_push_str")
BI_PUSH_ARR = _edge("bi_push_arr")
BI_PUSH_OTHER = _edge("bi_push_other")
BI_PUSH_LEN_EXT = _ladder("bi_push_len", ("16", "32", "64", "128"))
BI_POP_NUM = _edge("bi_pop_num")
BI_POP_STR = _edge("bi_pop_str")
BI_POP_ARR = _edge("bi_pop_arr")
BI_POP_TO_EMPTY = _edge("bi_pop_to_empty")

# the value domain holds finite floats only
SYN_NUM_OVERFLOW = _edge("syn_number_overflow")
EV_NUM_OVERFLOW = _edge("ev_number_overflow")

# deep behavior families: each group sits behind one doorway (percent
# escapes, repeat, division, indexing) and pays out over many distinct
# rungs once entered.  Mining a family takes sustained attention to its
# doorway tokens, which is the kind of progress coverage feedback can
# actually steer.
DECODE_KIND = {
    "control": _edge("bi_decode_kind_control"),
    "digit": _edge("bi_decode_kind_digit"),
    "upper": _edge("bi_decode_kind_upper"),
    "lower": _edge("bi_decode_kind_lower"),
    "punct": _edge("bi_decode_kind_punct"),
    "high": _edge("bi_decode_kind_high"),
}
DECODE_LEN = _ladder("bi_decode_out_len", ("4", "16", "64"))
DECODE_MIXED = _edge("bi_decode_mixed_kinds")
ENCODE_LEN = _ladder("bi_encode_out_len", ("8", "32", "128"))
ENCODE_ROUNDTRIP = _edge("bi_encode_of_escaped")

REPEAT_OUT_LEN = _ladder("bi_repeat_out_len", ("8", "32", "128", "512", "2048"))
REPEAT_MULTI = _edge("bi_repeat_multichar")
REPEAT_OF_REPEAT = _edge("bi_repeat_stacked")

DIV_BELOW_ONE = _edge("ev_div_below_one")
DIV_NEG = _edge("ev_div_negative")
DIV_HUGE = _edge("ev_div_huge")
MOD_NONZERO_RESULT = _edge("ev_mod_nonzero_result")
MOD_NEG_RESULT = _edge("ev_mod_negative_result")

IDX_CHAR_DIGIT = _edge("ev_index_char_digit")
IDX_CHAR_ALPHA = _edge("ev_index_char_alpha")
IDX_CHAR_OTHER = _edge("ev_index_char_other")
IDX_CHAIN = _ladder("ev_index_chain", ("2", "3"))

EDGE_COUNT = len(EDGE_NAMES)


class ToyError(Exception):
    """Interpreter-level error carrying its taxonomy kind."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message


class ToyCrash(Exception):
    """A planted bug fired; carries the signal and fake report lines."""

    def __init__(self, signal: int, lines: list[str]):
        super().__init__(f"crash signal {signal}")
        self.signal = signal
        self.lines = lines


class _Timeout(Exception):
    pass


class ToyResult:
    __slots__ = ("hits", "stdout", "stderr", "exit_code", "signal", "timed_out")

    def __init__(self, hits, stdout, stderr, exit_code, signal, timed_out):
        self.hits = hits
        self.stdout = stdout
        self.stderr = stderr
        self.exit_code = exit_code
        self.signal = signal
        self.timed_out = timed_out


def _crash_report(rng: Random, what: str, frames: list[str]) -> list[str]:
    pid = rng.randrange(1000, 99999)
    lines = [
        f"=={pid}==ERROR: ToySanitizer: {what} on address 0x{rng.randrange(1 << 44):012x}"
    ]
    for i, frame_name in enumerate(frames):
        lines.append(
            f"    #{i} 0x{rng.randrange(1 << 36):09x} in {frame_name}"
        )
    lines.append(f"=={pid}==ABORTING")
    return lines


_NUM_BUCKETS = (
    (0.0, "zero"),
    (1.0, "one"),
)


def _arr_depth(values, limit: int = 10) -> int:
    # push(a, a) makes arrays self-referential, so the walk must be bounded
    if limit <= 0:
        return 0
    depth = 1
    for v in values:
        if isinstance(v, list):
            depth = max(depth, 1 + _arr_depth(v, limit - 1))
            if depth >= limit:
                break
    return depth


class _Interp:
    def __init__(self, hits: list[int], fuel: int, deadline: float | None, noise: Random):
        self.hits = hits
        self.hit = hits.append
        self.fuel = fuel
        self.deadline = deadline
        self.noise = noise
        self.tokens: list[str] = []
        self.kinds: list[str] = []
        self.pos = 0
        self.n = 0
        self.expr_depth = 0
        self.paren_depth = 0
        self.array_depth = 0
        self.call_depth = 0
        self.env: dict[str, object] = {}
        self.out: list[str] = []
        self.stmt_budget = STMT_BUDGET
        self.var_count_hit = 0
        self.loop_depth = 0
        self.loops_entered = 0
        self.if_depth = 0
        self.assign_count = 0
        self.print_count = 0

    # ---------------- parsing ----------------

    def parse(self, source: str):
        ts = tokenize(source)
        self.tokens = ts.tokens
        self.kinds = ts.kinds
        self.n = len(ts.tokens)
        self.pos = 0
        stmts = []
        while self.pos < self.n:
            stmts.append(self.parse_stmt())
        count = len(stmts)
        if count >= 1:
            self.hit(E_STMTS_PARSED[0])
        if count >= 2:
            self.hit(E_STMTS_PARSED[1])
        if count >= 4:
            self.hit(E_STMTS_PARSED[2])
        if count >= 8:
            self.hit(E_STMTS_PARSED[3])
        return stmts

    def _peek(self):
        return self.tokens[self.pos] if self.pos < self.n else None

    def _syntax(self, edge: int, message: str):
        self.hit(edge)
        raise ToyError("SyntaxError", message)

    def _expect(self, tok: str, edge: int):
        if self.pos >= self.n:
            self._syntax(SYN_EOF, f"unexpected end of input, expected '{tok}'")
        if self.tokens[self.pos] != tok:
            self._syntax(edge, f"expected '{tok}' but found '{self.tokens[self.pos]}'")
        self.pos += 1

    def parse_stmt(self):
        tok = self._peek()
        if tok is None:
            self._syntax(SYN_EOF, "unexpected end of input")
        kind = self.kinds[self.pos]
        if tok == ";":
            self.hit(P_EMPTY_STMT)
            self.pos += 1
            return ("empty",)
        if tok == "{":
            self.hit(P_BLOCK)
            self.pos += 1
            body = []
            while self._peek() != "}":
                if self.pos >= self.n:
                    self._syntax(SYN_BRACE, "unterminated block")
                body.append(self.parse_stmt())
            self.pos += 1
            return ("block", body)
        if tok == "let" or tok == "var" or tok == "const":
            self.hit(P_LET)
            self.pos += 1
            if self.pos >= self.n or self.kinds[self.pos] != KIND_IDENTIFIER:
                self._syntax(SYN_TARGET, "expected a name after 'let'")
            name = self.tokens[self.pos]
            self.pos += 1
            self._expect("=", SYN_TARGET)
            value = self.parse_expr()
            self._expect(";", SYN_SEMI)
            return ("let", name, value)
        if tok == "if":
            self.hit(P_IF)
            self.pos += 1
            self._expect("(", SYN_PAREN)
            cond = self.parse_expr()
            self._expect(")", SYN_PAREN)
            then = self.parse_stmt()
            alt = None
            if self._peek() == "else":
                self.hit(P_ELSE)
                self.pos += 1
                alt = self.parse_stmt()
            return ("if", cond, then, alt)
        if tok == "while":
            self.hit(P_WHILE)
            self.pos += 1
            self._expect("(", SYN_PAREN)
            cond = self.parse_expr()
            self._expect(")", SYN_PAREN)
            body = self.parse_stmt()
            return ("while", cond, body)
        if kind == KIND_IDENTIFIER and self.pos + 1 < self.n and self.tokens[self.pos + 1] == "=":
            self.hit(P_ASSIGN)
            name = tok
            self.pos += 2
            value = self.parse_expr()
            self._expect(";", SYN_SEMI)
            return ("assign", name, value)
        if kind == KIND_KEYWORD and tok not in ("true", "false", "null", "typeof"):
            self._syntax(SYN_KEYWORD, f"'{tok}' is not supported here")
        self.hit(P_EXPR_STMT)
        expr = self.parse_expr()
        self._expect(";", SYN_SEMI)
        return ("expr", expr)

    def parse_expr(self):
        self.expr_depth += 1
        if self.expr_depth > MAX_EXPR_DEPTH:
            self._syntax(SYN_DEEP, "expression nests too deeply")
        try:
            return self.parse_or()
        finally:
            self.expr_depth -= 1

    def parse_or(self):
        node = self.parse_and()
        while self._peek() == "||":
            self.hit(P_OR)
            self.pos += 1
            node = ("or", node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_cmp()
        while self._peek() == "&&":
            self.hit(P_AND)
            self.pos += 1
            node = ("and", node, self.parse_cmp())
        return node

    _CMP_EDGES = {"==": P_EQ, "!=": P_NE, "<": P_LT, ">": P_GT, "<=": P_LE, ">=": P_GE}

    def parse_cmp(self):
        node = self.parse_add()
        while True:
            tok = self._peek()
            edge = self._CMP_EDGES.get(tok)
            if edge is None:
                return node
            self.hit(edge)
            self.pos += 1
            node = ("cmp", tok, node, self.parse_add())

    def parse_add(self):
        node = self.parse_mul()
        while True:
            tok = self._peek()
            if tok == "+":
                self.hit(P_ADD)
            elif tok == "-":
                self.hit(P_SUB)
            else:
                return node
            self.pos += 1
            node = ("bin", tok, node, self.parse_mul())

    def parse_mul(self):
        node = self.parse_unary()
        while True:
            tok = self._peek()
            if tok == "*":
                self.hit(P_MUL)
            elif tok == "/":
                self.hit(P_DIV)
            elif tok == "%":
                self.hit(P_MOD)
            else:
                return node
            self.pos += 1
            node = ("bin", tok, node, self.parse_unary())

    def parse_unary(self):
        tok = self._peek()
        if tok == "-":
            self.hit(P_NEG)
            self.pos += 1
            return ("neg", self.parse_unary())
        if tok == "!":
            self.hit(P_NOT)
            self.pos += 1
            return ("not", self.parse_unary())
        if tok == "+":
            self.hit(P_POS)
            self.pos += 1
            return ("pos", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        node = self.parse_primary()
        while self._peek() == "[":
            self.hit(P_INDEX)
            self.pos += 1
            idx = self.parse_expr()
            self._expect("]", SYN_BRACKET)
            node = ("index", node, idx)
        return node

    def parse_primary(self):
        if self.pos >= self.n:
            self._syntax(SYN_EOF, "unexpected end of input in expression")
        tok = self.tokens[self.pos]
        kind = self.kinds[self.pos]
        if kind == KIND_NUMBER:
            self.pos += 1
            return self._number_literal(tok)
        if kind == KIND_STRING:
            self.pos += 1
            return self._string_literal(tok)
        if kind == KIND_TEMPLATE:
            self._syntax(SYN_TEMPLATE, "template literals are not supported")
        if kind == KIND_REGEX:
            self._syntax(SYN_REGEX, "regex literals are not supported")
        if tok == "true":
            self.hit(P_TRUE)
            self.pos += 1
            return ("lit", True)
        if tok == "false":
            self.hit(P_FALSE)
            self.pos += 1
            return ("lit", False)
        if tok == "null":
            self.hit(P_NULL)
            self.pos += 1
            return ("lit", None)
        if tok == "(":
            self.hit(P_PAREN)
            self.paren_depth += 1
            if self.paren_depth <= 8:
                self.hit(P_PAREN_DEPTH[self.paren_depth - 1])
            self.pos += 1
            node = self.parse_expr()
            self._expect(")", SYN_PAREN)
            self.paren_depth -= 1
            return node
        if tok == "[":
            return self._array_literal()
        if kind == KIND_IDENTIFIER:
            if self.pos + 1 < self.n and self.tokens[self.pos + 1] == "(":
                return self._call(tok)
            self.hit(P_VAR)
            self.pos += 1
            return ("var", tok)
        self._syntax(SYN_PRIMARY, f"unexpected token '{tok}'")

    def _array_literal(self):
        self.hit(P_ARRAY)
        self.array_depth += 1
        depth = self.array_depth
        if depth >= CRASH_ARRAY_DEPTH:
            self.hit(CRASH_ARRAY)
            raise ToyCrash(
                SIG_ARRAY,
                _crash_report(
                    self.noise,
                    "stack-buffer-overflow",
                    [
                        "toy_parse_array_literal toy_parse.c:217",
                        "toy_parse_primary toy_parse.c:188",
                        "toy_parse_expr toy_parse.c:102",
                    ],
                ),
            )
        self.hit(P_ARRAY_DEPTH[depth - 1])
        self.pos += 1
        elems = []
        if self._peek() != "]":
            elems.append(self.parse_expr())
            while self._peek() == ",":
                self.pos += 1
                elems.append(self.parse_expr())
        self._expect("]", SYN_BRACKET)
        self.array_depth -= 1
        count = len(elems)
        self.hit(P_ARRAY_ARITY[min(count, 3)])
        return ("array", elems)

    def _call(self, name: str):
        self.hit(P_CALL)
        self.call_depth += 1
        if self.call_depth <= 4:
            self.hit(P_CALL_DEPTH[self.call_depth - 1])
        self.pos += 2
        args = []
        if self._peek() != ")":
            args.append(self.parse_expr())
            while self._peek() == ",":
                self.pos += 1
                args.append(self.parse_expr())
        self._expect(")", SYN_PAREN)
        self.call_depth -= 1
        self.hit(P_CALL_ARGS[min(len(args), 3)])
        return ("call", name, args)

    def _number_literal(self, tok: str):
        self.hit(P_NUM)
        text = tok[:-1] if tok.endswith("n") else tok
        try:
            if text[:2] in ("0x", "0X"):
                self.hit(P_NUM_KIND["hex"])
                value = float(int(text, 16))
            elif text[:2] in ("0b", "0B"):
                value = float(int(text, 2))
            elif text[:2] in ("0o", "0O"):
                value = float(int(text, 8))
            else:
                if "e" in text or "E" in text:
                    self.hit(P_NUM_KIND["exponent"])
                value = float(text)
        except (ValueError, OverflowError):
            self._syntax(SYN_PRIMARY, f"bad number literal '{tok}'")
        if value != value or value in (float("inf"), float("-inf")):
            self._syntax(SYN_NUM_OVERFLOW, f"number literal too large '{tok}'")
        if value == 0.0:
            self.hit(P_NUM_KIND["zero"])
        elif value == 1.0:
            self.hit(P_NUM_KIND["one"])
        elif value != int(value):
            self.hit(P_NUM_KIND["fraction"])
        elif value < 10:
            self.hit(P_NUM_KIND["small"])
        elif value < 100:
            self.hit(P_NUM_KIND["medium"])
        elif value < 1000:
            self.hit(P_NUM_KIND["big"])
        else:
            self.hit(P_NUM_KIND["huge"])
        return ("lit", value)

    _ESCAPES = {"n": "\n", "t": "\t", "r": "\r"}

    def _string_literal(self, tok: str):
        self.hit(P_STR)
        body = tok[1:-1]
        if "\\" in body:
            self.hit(P_STR_ESCAPE)
            chars = []
            i = 0
            while i < len(body):
                c = body[i]
                if c == "\\" and i + 1 < len(body):
                    chars.append(self._ESCAPES.get(body[i + 1], body[i + 1]))
                    i += 2
                else:
                    chars.append(c)
                    i += 1
            value = "".join(chars)
        else:
            value = body
        if not value:
            self.hit(P_STR_EMPTY)
        elif len(value) <= 4:
            self.hit(P_STR_SHORT)
        else:
            self.hit(P_STR_LONG)
        if "%" in value:
            self.hit(P_STR_PERCENT)
        return ("lit", value)

    # ---------------- evaluation ----------------

    def run_stmts(self, stmts):
        executed = 0
        for s in stmts:
            executed = self.exec_stmt(s, executed)
        if executed >= 2:
            self.hit(E_STMTS_RUN[0])
        if executed >= 5:
            self.hit(E_STMTS_RUN[1])
        if executed >= 10:
            self.hit(E_STMTS_RUN[2])
        if executed >= 20:
            self.hit(E_STMTS_RUN[3])

    def exec_stmt(self, node, executed: int) -> int:
        self.stmt_budget -= 1
        if self.stmt_budget <= 0:
            self.hit(EV_STMT_OUT)
            raise ToyError("InternalError", "statement budget exhausted")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout()
        executed += 1
        op = node[0]
        if op == "empty":
            return executed
        if op == "block":
            for s in node[1]:
                executed = self.exec_stmt(s, executed)
            return executed
        if op == "let":
            self.hit(EV_LET)
            value = self.eval(node[2])
            if isinstance(value, float):
                self.hit(EV_LET_NUM)
            elif isinstance(value, str):
                self.hit(EV_LET_STR)
            elif isinstance(value, list):
                self.hit(EV_LET_ARR)
            else:
                self.hit(EV_LET_OTHER)
            is_new = node[1] not in self.env
            if not is_new:
                self.hit(EV_LET_SHADOW)
            self.env[node[1]] = value
            if is_new:
                count = len(self.env)
                if count >= 2 and self.var_count_hit < 1:
                    self.hit(EV_VAR_COUNT[0])
                    self.var_count_hit = 1
                if count >= 4 and self.var_count_hit < 2:
                    self.hit(EV_VAR_COUNT[1])
                    self.var_count_hit = 2
                if count >= 6 and self.var_count_hit < 3:
                    self.hit(EV_VAR_COUNT[2])
                    self.var_count_hit = 3
                if count >= 8 and self.var_count_hit < 4:
                    self.hit(EV_VAR_COUNT_EXT[0])
                    self.var_count_hit = 4
                if count >= 12 and self.var_count_hit < 5:
                    self.hit(EV_VAR_COUNT_EXT[1])
                    self.var_count_hit = 5
                if count >= 16 and self.var_count_hit < 6:
                    self.hit(EV_VAR_COUNT_EXT[2])
                    self.var_count_hit = 6
            return executed
        if op == "assign":
            name = node[1]
            if name not in self.env:
                self.hit(EV_ASSIGN_UNDECLARED)
                raise ToyError("ReferenceError", f"{name} is not defined")
            self.hit(EV_ASSIGN)
            self.env[name] = self.eval(node[2])
            self.assign_count += 1
            if self.assign_count >= 3:
                self.hit(EV_ASSIGN_3)
            if self.assign_count >= 10:
                self.hit(EV_ASSIGN_10)
            return executed
        if op == "if":
            cond = node[1]
            kind = cond[0]
            if kind == "lit":
                self.hit(EV_IF_COND["lit"])
            elif kind == "var":
                self.hit(EV_IF_COND["var"])
            elif kind == "cmp":
                self.hit(EV_IF_COND["cmp"])
            elif kind in ("and", "or", "not"):
                self.hit(EV_IF_COND["logic"])
            elif kind == "call":
                self.hit(EV_IF_COND["call"])
            else:
                self.hit(EV_IF_COND["other"])
            if self.loop_depth > 0:
                self.hit(EV_IF_IN_LOOP)
            self.if_depth += 1
            if self.if_depth >= 2:
                self.hit(EV_IF_NEST_2)
            if self.if_depth >= 3:
                self.hit(EV_IF_NEST_3)
            try:
                if self.truthy(self.eval(cond)):
                    self.hit(EV_IF_TAKEN)
                    return self.exec_stmt(node[2], executed)
                if node[3] is not None:
                    self.hit(EV_ELSE_TAKEN)
                    if node[3][0] == "if":
                        self.hit(EV_ELSE_IF)
                    return self.exec_stmt(node[3], executed)
                self.hit(EV_IF_SKIPPED)
                return executed
            finally:
                self.if_depth -= 1
        if op == "while":
            iters = 0
            if not self.truthy(self.eval(node[1])):
                self.hit(EV_WHILE_SKIP)
                return executed
            self.hit(EV_WHILE_ENTER)
            self.loops_entered += 1
            if self.loops_entered >= 2:
                self.hit(EV_LOOPS_TWO)
            self.loop_depth += 1
            if self.loop_depth >= 2:
                self.hit(EV_LOOP_NEST_2)
            if self.loop_depth >= 3:
                self.hit(EV_LOOP_NEST_3)
            try:
                while True:
                    self.fuel -= 1
                    if self.fuel <= 0:
                        self.hit(EV_FUEL_OUT)
                        raise ToyError("InternalError", "loop budget exhausted")
                    if self.deadline is not None and time.monotonic() > self.deadline:
                        raise _Timeout()
                    iters += 1
                    executed = self.exec_stmt(node[2], executed)
                    if not self.truthy(self.eval(node[1])):
                        break
            finally:
                self.loop_depth -= 1
            if iters >= 1:
                self.hit(EV_WHILE_ITERS[0])
            if iters >= 2:
                self.hit(EV_WHILE_ITERS[1])
            if iters >= 5:
                self.hit(EV_WHILE_ITERS[2])
            if iters >= 10:
                self.hit(EV_WHILE_ITERS[3])
            if iters >= 20:
                self.hit(EV_WHILE_ITERS_EXT[0])
            if iters >= 50:
                self.hit(EV_WHILE_ITERS_EXT[1])
            if iters >= 100:
                self.hit(EV_WHILE_ITERS_EXT[2])
            if iters >= 150:
                self.hit(EV_WHILE_ITERS_EXT[3])
            return executed
        # expression statement
        self.hit(EV_EXPR_STMT)
        self.eval(node[1])
        return executed

    def truthy(self, value) -> bool:
        if isinstance(value, bool):
            self.hit(EV_TRUTH_BOOL)
            return value
        if isinstance(value, float):
            self.hit(EV_TRUTH_NUM)
            return value != 0.0
        if isinstance(value, str):
            self.hit(EV_TRUTH_STR)
            return len(value) > 0
        if value is None:
            self.hit(EV_TRUTH_NULL)
            return False
        self.hit(EV_TRUTH_ARR)
        return True

    def _check_str_len(self, s: str) -> str:
        if len(s) > MAX_STR_LEN:
            self.hit(EV_STR_OVERFLOW)
            raise ToyError("RangeError", "string too long")
        n = len(s)
        if n == 0:
            self.hit(EV_STR_EMPTY_RESULT)
            return s
        if n >= 8:
            self.hit(EV_STR_LEN[0])
        if n >= 32:
            self.hit(EV_STR_LEN[1])
        if n >= 128:
            self.hit(EV_STR_LEN[2])
        if n >= 256:
            self.hit(EV_STR_LEN_EXT[0])
        if n >= 512:
            self.hit(EV_STR_LEN_EXT[1])
        if n >= 1024:
            self.hit(EV_STR_LEN_EXT[2])
        if n >= 2048:
            self.hit(EV_STR_LEN_EXT[3])
        # content classes over a bounded prefix
        has_digit = has_alpha = has_punct = has_space = False
        for c in s[:64]:
            if c.isdigit():
                has_digit = True
            elif c.isalpha():
                has_alpha = True
            elif c in " \t":
                has_space = True
            else:
                has_punct = True
        if has_digit:
            self.hit(EV_STR_HAS_DIGIT)
        if has_alpha:
            self.hit(EV_STR_HAS_ALPHA)
        if has_punct:
            self.hit(EV_STR_HAS_PUNCT)
        if has_space:
            self.hit(EV_STR_HAS_SPACE)
        if "%" in s[:64]:
            self.hit(EV_STR_HAS_PERCENT)
        run = 1
        prev = ""
        for c in s[:256]:
            if c == prev:
                run += 1
                if run >= 8:
                    self.hit(EV_STR_RUN8)
                    break
            else:
                prev = c
                run = 1
        return s

    def _num_result(self, value: float) -> float:
        # finite in, finite out: inf and nan never enter the value domain
        if value != value or value == _INF or value == _NEG_INF:
            self.hit(EV_NUM_OVERFLOW)
            raise ToyError("RangeError", "number overflow")
        return value

    def _magnitude(self, v: float) -> float:
        if v < 0:
            self.hit(EV_ARITH_NEG)
        a = v if v >= 0 else -v
        if a >= 100.0:
            self.hit(EV_ARITH_BIG)
        if a >= 1000.0:
            self.hit(EV_ARITH_HUGE)
        if a == 0.0:
            self.hit(EV_VAL[0])
        elif a < 1.0:
            self.hit(EV_VAL[1])
        elif a < 10.0:
            self.hit(EV_VAL[2])
        elif a < 100.0:
            self.hit(EV_VAL[3])
        elif a < 1000.0:
            self.hit(EV_VAL[4])
        elif a < 10000.0:
            self.hit(EV_VAL[5])
        elif a < 1000000.0:
            self.hit(EV_VAL[6])
        else:
            self.hit(EV_VAL[7])
        return v

    def eval(self, node):
        op = node[0]
        if op == "lit":
            return node[1]
        if op == "var":
            name = node[1]
            if name not in self.env:
                self.hit(EV_VAR_UNDEF)
                raise ToyError("ReferenceError", f"{name} is not defined")
            self.hit(EV_VAR_READ)
            return self.env[name]
        if op == "bin":
            return self.eval_bin(node[1], self.eval(node[2]), self.eval(node[3]))
        if op == "cmp":
            return self.eval_cmp(node[1], self.eval(node[2]), self.eval(node[3]))
        if op == "and":
            left = self.eval(node[1])
            if not self.truthy(left):
                self.hit(EV_AND_SHORT)
                return left
            self.hit(EV_AND_FULL)
            return self.eval(node[2])
        if op == "or":
            left = self.eval(node[1])
            if self.truthy(left):
                self.hit(EV_OR_SHORT)
                return left
            self.hit(EV_OR_FULL)
            return self.eval(node[2])
        if op == "not":
            self.hit(EV_NOT)
            return not self.truthy(self.eval(node[1]))
        if op == "neg":
            value = self.eval(node[1])
            if not isinstance(value, float) or isinstance(value, bool):
                self.hit(EV_NEG_BAD)
                raise ToyError("TypeError", "unary '-' needs a number")
            self.hit(EV_NEG)
            return -value
        if op == "pos":
            value = self.eval(node[1])
            if not isinstance(value, float) or isinstance(value, bool):
                self.hit(EV_NEG_BAD)
                raise ToyError("TypeError", "unary '+' needs a number")
            self.hit(EV_POS)
            return value
        if op == "index":
            chain = 1
            inner = node[1]
            while inner[0] == "index":
                chain += 1
                inner = inner[1]
            if chain >= 3:
                self.hit(IDX_CHAIN[1])
            elif chain == 2:
                self.hit(IDX_CHAIN[0])
            return self.eval_index(self.eval(node[1]), self.eval(node[2]))
        if op == "array":
            values = [self.eval(e) for e in node[1]]
            if len(values) > MAX_ARR_LEN:
                self.hit(EV_ARR_OVERFLOW)
                raise ToyError("RangeError", "array too long")
            if values:
                if all(isinstance(v, float) and not isinstance(v, bool) for v in values):
                    self.hit(EV_ARR_NUM)
                elif all(isinstance(v, str) for v in values):
                    self.hit(EV_ARR_STR)
                elif any(isinstance(v, list) for v in values):
                    self.hit(EV_ARR_NESTED)
                else:
                    self.hit(EV_ARR_MIXED)
            # highest rung only: a deep or long literal is one discovery,
            # not a sweep of every bucket below it
            n = len(values)
            rung = -1
            for i, bound in enumerate((4, 8, 16, 32, 64, 128)):
                if n >= bound:
                    rung = i
            if rung >= 0:
                self.hit(EV_ARR_LEN[rung])
            depth = _arr_depth(values)
            rung = -1
            for i, bound in enumerate((2, 3, 4, 5, 6)):
                if depth >= bound:
                    rung = i
            if rung >= 0:
                self.hit(EV_ARR_VAL_DEPTH[rung])
            return values
        if op == "call":
            return self.eval_call(node[1], [self.eval(a) for a in node[2]])
        raise AssertionError(f"unknown node {op}")

    def eval_bin(self, op: str, left, right):
        lnum = isinstance(left, float) and not isinstance(left, bool)
        rnum = isinstance(right, float) and not isinstance(right, bool)
        if op == "+":
            if lnum and rnum:
                self.hit(EV_ADD_NUM)
                value = self._num_result(left + right)
                if left < 0 and right < 0:
                    self.hit(EV_ADD_BOTH_NEG)
                elif (left < 0) != (right < 0):
                    self.hit(EV_ADD_MIXED_SIGN)
                if value == 0.0:
                    self.hit(EV_ADD_ZERO_RESULT)
                return self._magnitude(value)
            if isinstance(left, str) and isinstance(right, str):
                self.hit(EV_ADD_STR)
                return self._check_str_len(left + right)
            if isinstance(left, str) and rnum:
                self.hit(EV_ADD_STR_NUM)
                return self._check_str_len(left + _fmt(right))
            if lnum and isinstance(right, str):
                self.hit(EV_ADD_NUM_STR)
                return self._check_str_len(_fmt(left) + right)
            self.hit(EV_ADD_BAD)
            raise ToyError("TypeError", "'+' cannot combine these values")
        if not lnum or not rnum:
            self.hit(EV_ARITH_BAD)
            raise ToyError("TypeError", f"'{op}' needs numbers")
        if op == "-":
            self.hit(EV_SUB)
            if left == right:
                self.hit(EV_SUB_ZERO_RESULT)
            if left < 0:
                self.hit(EV_SUB_NEG_MINUEND)
            return self._magnitude(self._num_result(left - right))
        if op == "*":
            self.hit(EV_MUL)
            if left == 0.0 or right == 0.0:
                self.hit(EV_MUL_BY_ZERO)
            elif left == 1.0 or right == 1.0:
                self.hit(EV_MUL_BY_ONE)
            if left < 0 and right < 0:
                self.hit(EV_MUL_BOTH_NEG)
            value = self._num_result(left * right)
            if value != int(value):
                self.hit(EV_MUL_FRAC)
            return self._magnitude(value)
        if op == "/":
            if right == 0.0:
                self.hit(EV_DIV_ZERO)
                raise ToyError("RangeError", "division by zero")
            self.hit(EV_DIV)
            if right == 1.0:
                self.hit(EV_DIV_BY_ONE)
            if left == right:
                self.hit(EV_DIV_SELF)
            value = self._num_result(left / right)
            if value != int(value):
                self.hit(EV_DIV_FRACTION)
            else:
                self.hit(EV_DIV_EXACT)
            if value < 0.0:
                self.hit(DIV_NEG)
            a = value if value >= 0 else -value
            if 0.0 < a < 1.0:
                self.hit(DIV_BELOW_ONE)
            if a >= 1000.0:
                self.hit(DIV_HUGE)
            return self._magnitude(value)
        # op == "%"
        if right == 0.0:
            self.hit(EV_MOD_ZERO)
            raise ToyError("RangeError", "modulo by zero")
        self.hit(EV_MOD)
        if left < 0 or right < 0:
            self.hit(EV_MOD_NEG_OPERAND)
        quotient = self._num_result(left / right)
        value = self._num_result(left - right * float(int(quotient)))
        if value == 0.0:
            self.hit(EV_MOD_ZERO_RESULT)
        else:
            self.hit(MOD_NONZERO_RESULT)
            if value < 0.0:
                self.hit(MOD_NEG_RESULT)
        return self._magnitude(value)

    def eval_cmp(self, op: str, left, right):
        if op == "==" or op == "!=":
            eq = _loose_eq(left, right)
            result = eq if op == "==" else not eq
            self.hit(EV_EQ_TRUE if result else EV_EQ_FALSE)
            if isinstance(left, bool) != isinstance(right, bool) and (
                isinstance(left, (bool, float)) and isinstance(right, (bool, float))
            ):
                self.hit(EV_EQ_BOOL_NUM)
            if isinstance(left, list) and isinstance(right, list):
                self.hit(EV_EQ_ARR)
            return result
        lnum = isinstance(left, float) and not isinstance(left, bool)
        rnum = isinstance(right, float) and not isinstance(right, bool)
        if lnum and rnum:
            self.hit(EV_CMP_NUM)
        elif isinstance(left, str) and isinstance(right, str):
            self.hit(EV_CMP_STR)
            if len(left) == len(right) and left:
                self.hit(EV_CMP_STR_EQ_LEN)
            if left and right and left != right and (
                left.startswith(right) or right.startswith(left)
            ):
                self.hit(EV_CMP_STR_PREFIX)
        else:
            self.hit(EV_CMP_BAD)
            raise ToyError("TypeError", f"'{op}' cannot compare these values")
        self.hit(EV_CMP_OP[op])
        if op == "<":
            result = left < right
        elif op == ">":
            result = left > right
        elif op == "<=":
            result = left <= right
        else:
            result = left >= right
        self.hit(EV_CMP_TRUE if result else EV_CMP_FALSE)
        return result

    def eval_index(self, base, idx):
        if not isinstance(idx, float) or isinstance(idx, bool) or idx != int(idx):
            self.hit(EV_IDX_NONINT)
            raise ToyError("TypeError", "index must be an integer")
        i = int(idx)
        if isinstance(base, list):
            if 0 <= i < len(base):
                self.hit(EV_IDX_ARR)
                self._index_position(i, len(base))
                value = base[i]
                if isinstance(value, list):
                    self.hit(EV_IDX_NESTED)
                return value
            self.hit(EV_IDX_ARR_OOB)
            raise ToyError("RangeError", f"array index {i} out of range")
        if isinstance(base, str):
            if 0 <= i < len(base):
                self.hit(EV_IDX_STR)
                self._index_position(i, len(base))
                ch = base[i]
                if ch.isdigit():
                    self.hit(IDX_CHAR_DIGIT)
                elif ch.isalpha():
                    self.hit(IDX_CHAR_ALPHA)
                else:
                    self.hit(IDX_CHAR_OTHER)
                return ch
            self.hit(EV_IDX_STR_OOB)
            raise ToyError("RangeError", f"string index {i} out of range")
        self.hit(EV_IDX_BAD_BASE)
        raise ToyError("TypeError", "only arrays and strings can be indexed")

    def _index_position(self, i: int, length: int) -> None:
        if i == 0:
            self.hit(EV_IDX_FIRST)
        elif i == length - 1:
            self.hit(EV_IDX_LAST)
        else:
            self.hit(EV_IDX_MIDDLE)

    # ---------------- builtins ----------------

    def eval_call(self, name: str, args: list):
        edge = BUILTIN_EDGE.get(name)
        if edge is None:
            self.hit(BI_UNKNOWN)
            raise ToyError("ReferenceError", f"{name} is not a function")
        self.hit(edge)
        method = getattr(self, f"_bi_{name}", None)
        return method(args)

    def _arity(self, args, n, name):
        if len(args) != n:
            self.hit(BI_ARITY)
            raise ToyError("TypeError", f"{name} takes {n} argument(s)")

    def _num_arg(self, args, i, name):
        v = args[i]
        if not isinstance(v, float) or isinstance(v, bool):
            self.hit(BI_TYPE)
            raise ToyError("TypeError", f"{name}: argument {i + 1} must be a number")
        return v

    def _str_arg(self, args, i, name):
        v = args[i]
        if not isinstance(v, str):
            self.hit(BI_TYPE)
            raise ToyError("TypeError", f"{name}: argument {i + 1} must be a string")
        return v

    def _arr_arg(self, args, i, name):
        v = args[i]
        if not isinstance(v, list):
            self.hit(BI_TYPE)
            raise ToyError("TypeError", f"{name}: argument {i + 1} must be an array")
        return v

    def _bi_print(self, args):
        self._arity(args, 1, "print")
        v = args[0]
        if isinstance(v, float) and not isinstance(v, bool):
            self.hit(BI_PRINT_NUM)
            self.hit(BI_PRINT_INT if v == int(v) else BI_PRINT_FRAC)
            if v < 0:
                self.hit(BI_PRINT_NEG)
        elif isinstance(v, str):
            self.hit(BI_PRINT_STR)
            if not v:
                self.hit(BI_PRINT_EMPTY_STR)
            elif len(v) >= 32:
                self.hit(BI_PRINT_LONG_STR)
        elif isinstance(v, list):
            self.hit(BI_PRINT_ARR)
            if not v:
                self.hit(BI_PRINT_EMPTY_ARR)
            elif any(isinstance(x, list) for x in v):
                self.hit(BI_PRINT_NESTED_ARR)
        else:
            self.hit(BI_PRINT_OTHER)
            if isinstance(v, bool):
                self.hit(BI_PRINT_BOOL)
            elif v is None:
                self.hit(BI_PRINT_NULL)
        self.out.append(_fmt(v))
        self.print_count += 1
        for bound, edge in zip((2, 5, 10, 20), BI_PRINT_COUNT):
            if self.print_count >= bound:
                self.hit(edge)
        return None

    def _bi_len(self, args):
        self._arity(args, 1, "len")
        v = args[0]
        if isinstance(v, str):
            self.hit(BI_LEN_STR)
        elif isinstance(v, list):
            self.hit(BI_LEN_ARR)
        else:
            self.hit(BI_TYPE)
            raise ToyError("TypeError", "len needs a string or an array")
        n = len(v)
        if n == 0:
            self.hit(BI_LEN_VAL[0])
        elif n == 1:
            self.hit(BI_LEN_VAL[1])
        elif n <= 8:
            self.hit(BI_LEN_VAL[2])
        elif n <= 32:
            self.hit(BI_LEN_VAL[3])
        else:
            self.hit(BI_LEN_VAL[4])
        return float(n)

    def _bi_abs(self, args):
        self._arity(args, 1, "abs")
        v = self._num_arg(args, 0, "abs")
        if v < 0:
            self.hit(BI_ABS_NEG)
        elif v == 0:
            self.hit(BI_ABS_ZERO)
        else:
            self.hit(BI_ABS_NOOP)
        return v if v >= 0 else -v

    def _bi_min(self, args):
        self._arity(args, 2, "min")
        a = self._num_arg(args, 0, "min")
        b = self._num_arg(args, 1, "min")
        if a < b:
            self.hit(BI_MIN_LEFT)
        elif b < a:
            self.hit(BI_MIN_RIGHT)
        else:
            self.hit(BI_MIN_TIE)
        return a if a <= b else b

    def _bi_max(self, args):
        self._arity(args, 2, "max")
        a = self._num_arg(args, 0, "max")
        b = self._num_arg(args, 1, "max")
        if a > b:
            self.hit(BI_MAX_LEFT)
        elif b > a:
            self.hit(BI_MAX_RIGHT)
        else:
            self.hit(BI_MAX_TIE)
        return a if a >= b else b

    def _bi_sqrt(self, args):
        self._arity(args, 1, "sqrt")
        v = self._num_arg(args, 0, "sqrt")
        if v < 0:
            self.hit(BI_SQRT_NEG)
            raise ToyError("RangeError", "sqrt of a negative number")
        root = v ** 0.5
        if v == 0:
            self.hit(BI_SQRT_ZERO)
        elif v == 1:
            self.hit(BI_SQRT_ONE)
        elif root == int(root):
            self.hit(BI_SQRT_PERFECT)
        else:
            self.hit(BI_SQRT_FRAC)
        return root

    def _bi_floor(self, args):
        self._arity(args, 1, "floor")
        v = self._num_arg(args, 0, "floor")
        f = float(int(v)) if v >= 0 or v == int(v) else float(int(v) - 1)
        if f != v:
            self.hit(BI_FLOOR_FRAC)
        else:
            self.hit(BI_FLOOR_NOOP)
        if v < 0:
            self.hit(BI_FLOOR_NEG)
        return f

    def _bi_parseInt(self, args):
        self._arity(args, 1, "parseInt")
        v = args[0]
        if isinstance(v, float) and not isinstance(v, bool):
            self.hit(BI_PARSEINT_NUM)
            return self._parseint_bucket(float(int(v)))
        if isinstance(v, str):
            text = v.strip()
            if text != v:
                self.hit(BI_PARSEINT_WS)
            sign = 1.0
            if text[:1] in ("+", "-"):
                if text[0] == "-":
                    sign = -1.0
                text = text[1:]
            if text.isdigit():
                self.hit(BI_PARSEINT_STR)
                try:
                    value = sign * float(int(text))
                except OverflowError:
                    self.hit(EV_NUM_OVERFLOW)
                    raise ToyError("RangeError", "number overflow") from None
                return self._parseint_bucket(value)
            self.hit(BI_PARSEINT_FAIL)
            raise ToyError("TypeError", f"parseInt: cannot parse {v!r}")
        self.hit(BI_TYPE)
        raise ToyError("TypeError", "parseInt needs a string or number")

    def _parseint_bucket(self, value: float) -> float:
        a = abs(value)
        if value < 0:
            self.hit(BI_PARSEINT_VAL[0])
        elif value == 0:
            self.hit(BI_PARSEINT_VAL[1])
        if 1 <= a <= 9:
            self.hit(BI_PARSEINT_VAL[2])
        elif 10 <= a <= 99:
            self.hit(BI_PARSEINT_VAL[3])
        elif a >= 100:
            self.hit(BI_PARSEINT_VAL[4])
        if a >= 1e6:
            self.hit(BI_PARSEINT_VAL[5])
        return value

    def _bi_str(self, args):
        self._arity(args, 1, "str")
        v = args[0]
        if isinstance(v, float) and not isinstance(v, bool):
            self.hit(BI_STR_NUM)
        elif isinstance(v, list):
            self.hit(BI_STR_ARR)
            if len(v) >= 8:
                self.hit(BI_STR_ARR_LONG)
        elif isinstance(v, bool):
            self.hit(BI_STR_BOOL)
        elif v is None:
            self.hit(BI_STR_NULL)
        else:
            self.hit(BI_STR_NOOP)
        return self._check_str_len(_fmt(v))

    def _bi_push(self, args):
        self._arity(args, 2, "push")
        arr = self._arr_arg(args, 0, "push")
        if len(arr) >= MAX_ARR_LEN:
            self.hit(BI_PUSH_FULL)
            raise ToyError("RangeError", "array too long")
        value = args[1]
        if isinstance(value, float) and not isinstance(value, bool):
            self.hit(BI_PUSH_NUM)
        elif isinstance(value, str):
            self.hit(BI_PUSH_STR)
        elif isinstance(value, list):
            self.hit(BI_PUSH_ARR)
        else:
            self.hit(BI_PUSH_OTHER)
        arr.append(value)
        if len(arr) >= 4:
            self.hit(BI_PUSH_4)
        if len(arr) >= 8:
            self.hit(BI_PUSH_8)
        for bound, edge in zip((16, 32, 64, 128), BI_PUSH_LEN_EXT):
            if len(arr) >= bound:
                self.hit(edge)
        return float(len(arr))

    def _bi_pop(self, args):
        self._arity(args, 1, "pop")
        arr = self._arr_arg(args, 0, "pop")
        if not arr:
            self.hit(BI_POP_EMPTY)
            raise ToyError("RangeError", "pop from an empty array")
        value = arr.pop()
        if isinstance(value, float) and not isinstance(value, bool):
            self.hit(BI_POP_NUM)
        elif isinstance(value, str):
            self.hit(BI_POP_STR)
        elif isinstance(value, list):
            self.hit(BI_POP_ARR)
        if not arr:
            self.hit(BI_POP_TO_EMPTY)
        return value

    def _bi_charAt(self, args):
        self._arity(args, 2, "charAt")
        s = self._str_arg(args, 0, "charAt")
        i = self._num_arg(args, 1, "charAt")
        if i != int(i) or not 0 <= int(i) < len(s):
            self.hit(BI_CHARAT_OOB)
            raise ToyError("RangeError", f"charAt index {_fmt(i)} out of range")
        pos = int(i)
        if pos == 0:
            self.hit(BI_CHARAT_FIRST)
        elif pos == len(s) - 1:
            self.hit(BI_CHARAT_LAST)
        else:
            self.hit(BI_CHARAT_MID)
        c = s[pos]
        if c.isdigit():
            self.hit(BI_CHARAT_DIGIT)
        elif c.isalpha():
            self.hit(BI_CHARAT_ALPHA)
        else:
            self.hit(BI_CHARAT_OTHER)
        return c

    def _bi_repeat(self, args):
        self._arity(args, 2, "repeat")
        s = self._str_arg(args, 0, "repeat")
        n = self._num_arg(args, 1, "repeat")
        if n < 0 or n != int(n):
            self.hit(BI_REPEAT_NEG)
            raise ToyError("RangeError", "repeat count must be a non-negative integer")
        count = int(n)
        if count >= 9 and len(s) >= 2:
            self.hit(CRASH_REPEAT)
            raise ToyCrash(
                SIG_REPEAT,
                _crash_report(
                    self.noise,
                    "heap-buffer-overflow",
                    [
                        "toy_repeat_copy toy_strings.c:88",
                        "toy_builtin_dispatch toy_eval.c:412",
                        "toy_eval_call toy_eval.c:371",
                    ],
                ),
            )
        if count > 8:
            self.hit(BI_REPEAT_BIG)
        if len(s) * count > MAX_STR_LEN:
            self.hit(BI_REPEAT_LONG)
            raise ToyError("RangeError", "repeated string too long")
        if count == 0:
            self.hit(BI_REPEAT_COUNT[0])
        elif count == 1:
            self.hit(BI_REPEAT_COUNT[1])
        elif count <= 4:
            self.hit(BI_REPEAT_COUNT[2])
        elif count <= 8:
            self.hit(BI_REPEAT_COUNT[3])
        elif count <= 16:
            self.hit(BI_REPEAT_COUNT[4])
        elif count <= 64:
            self.hit(BI_REPEAT_COUNT[5])
        else:
            self.hit(BI_REPEAT_COUNT[6])
        if not s:
            self.hit(BI_REPEAT_EMPTY)
        result = s * count
        rung = -1
        for i, bound in enumerate((8, 32, 128, 512, 2048)):
            if len(result) >= bound:
                rung = i
        if rung >= 0:
            self.hit(REPEAT_OUT_LEN[rung])
        if len(set(s)) >= 2:
            self.hit(REPEAT_MULTI)
        if count >= 2 and len(s) >= 1 and s == s[: len(s) // 2] * 2:
            self.hit(REPEAT_OF_REPEAT)
        return self._check_str_len(result)

    def _bi_decodeURI(self, args):
        self._arity(args, 1, "decodeURI")
        s = self._str_arg(args, 0, "decodeURI")
        if "%" not in s:
            self.hit(BI_DECODE_PLAIN)
            return s
        out = []
        i = 0
        n = len(s)
        escapes = 0
        kinds: set[str] = set()
        while i < n:
            c = s[i]
            if c == "%":
                hex_part = s[i + 1 : i + 3]
                if len(hex_part) < 2 or any(
                    ch not in "0123456789abcdefABCDEF" for ch in hex_part
                ):
                    self.hit(BI_DECODE_BAD)
                    raise ToyError("URIError", f"malformed escape at position {i}")
                ch = chr(int(hex_part, 16))
                out.append(ch)
                escapes += 1
                if ch < " ":
                    kinds.add("control")
                elif ch.isdigit():
                    kinds.add("digit")
                elif "A" <= ch <= "Z":
                    kinds.add("upper")
                elif "a" <= ch <= "z":
                    kinds.add("lower")
                elif ch > "\x7f":
                    kinds.add("high")
                else:
                    kinds.add("punct")
                i += 3
            else:
                out.append(c)
                i += 1
        decoded = "".join(out)
        self.hit(BI_DECODE_ESCAPE)
        # highest matching rung only, so rung counts stay discoveries
        rung = -1
        for i, bound in enumerate((1, 2, 3, 9)):
            if escapes >= bound:
                rung = i
        if rung >= 0:
            self.hit(BI_DECODE_ESCAPES[rung])
        for kind in kinds:
            self.hit(DECODE_KIND[kind])
        if len(kinds) >= 2:
            self.hit(DECODE_MIXED)
        rung = -1
        for i, bound in enumerate((4, 16, 64)):
            if len(decoded) >= bound:
                rung = i
        if rung >= 0:
            self.hit(DECODE_LEN[rung])
        if "\x00" in decoded:
            self.hit(CRASH_URI)
            raise ToyCrash(
                SIG_URI,
                _crash_report(
                    self.noise,
                    "illegal-instruction",
                    [
                        "toy_uri_decode toy_uri.c:54",
                        "toy_builtin_dispatch toy_eval.c:412",
                        "toy_eval_call toy_eval.c:371",
                    ],
                ),
            )
        return self._check_str_len(decoded)

    def _bi_encodeURI(self, args):
        self._arity(args, 1, "encodeURI")
        s = self._str_arg(args, 0, "encodeURI")
        out = []
        escaped = 0
        for c in s:
            if c.isalnum() or c in "_.~-":
                out.append(c)
            else:
                out.append(f"%{ord(c) & 0xFF:02X}")
                escaped += 1
        self.hit(BI_ENCODE_ESCAPED if escaped else BI_ENCODE_PLAIN)
        rung = -1
        for i, bound in enumerate((1, 2, 5, 17)):
            if escaped >= bound:
                rung = i
        if rung >= 0:
            self.hit(BI_ENCODE_GROWTH[rung])
        encoded = "".join(out)
        if escaped and "%" in s:
            self.hit(ENCODE_ROUNDTRIP)
        rung = -1
        for i, bound in enumerate((8, 32, 128)):
            if len(encoded) >= bound:
                rung = i
        if rung >= 0:
            self.hit(ENCODE_LEN[rung])
        return self._check_str_len(encoded)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, float):
        return str(int(v)) if abs(v) < 1e15 and v == int(v) else repr(v)
    if isinstance(v, list):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return v


def _loose_eq(a, b) -> bool:
    if isinstance(a, bool):
        a = 1.0 if a else 0.0
    if isinstance(b, bool):
        b = 1.0 if b else 0.0
    if type(a) is not type(b):
        return False
    if isinstance(a, list):
        return len(a) == len(b) and all(_loose_eq(x, y) for x, y in zip(a, b))
    return a == b


def run(
    source,
    *,
    fuel: int = DEFAULT_FUEL,
    deadline: float | None = None,
    noise_rng: Random | None = None,
) -> ToyResult:
    """Interpret one source; never raises for target-level failures."""
    if isinstance(source, (bytes, bytearray)):
        source = source.decode("utf-8", "replace")
    hits: list[int] = []
    interp = _Interp(hits, fuel, deadline, noise_rng or Random())
    interp.hit(E_START)
    try:
        stmts = interp.parse(source)
        if not stmts:
            interp.hit(E_EMPTY)
        interp.run_stmts(stmts)
        interp.hit(E_DONE)
        return ToyResult(hits, "\n".join(interp.out), "", 0, None, False)
    except ToyError as err:
        return ToyResult(hits, "\n".join(interp.out), str(err), 1, None, False)
    except ToyCrash as crash:
        return ToyResult(
            hits, "\n".join(interp.out), "\n".join(crash.lines), None, crash.signal, False
        )
    except _Timeout:
        return ToyResult(hits, "\n".join(interp.out), "", None, None, True)
    except RecursionError:
        return ToyResult(
            hits, "\n".join(interp.out), "InternalError: interpreter recursion", 1, None, False
        )


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: covrl-toy FILE", file=sys.stderr)
        return 2
    try:
        with open(argv[0], "rb") as fp:
            source = fp.read()
    except OSError as exc:
        print(f"cannot read {argv[0]}: {exc}", file=sys.stderr)
        return 2

    exponent = int(os.environ.get("COVRL_MAP_EXPONENT", "16"))
    size = 1 << exponent
    result = run(source)

    counters = bytearray(size)
    for edge in result.hits:
        idx = edge & (size - 1)
        if counters[idx] != 255:
            counters[idx] += 1

    if os.environ.get("COVRL_TRACE") == "1":
        for edge in result.hits:
            print(f"edge {edge} {EDGE_NAMES[edge]}", file=sys.stderr)

    cov_path = os.environ.get("COVRL_COV_PATH")
    if cov_path:
        with open(cov_path, "wb") as fp:
            fp.write(counters)
    shm_path = os.environ.get("COVRL_SHM_PATH")
    if shm_path:
        import mmap

        with open(shm_path, "r+b") as fp:
            with mmap.mmap(fp.fileno(), size) as region:
                for i, c in enumerate(counters):
                    if c:
                        cur = region[i]
                        total = cur + c
                        region[i] = total if total < 255 else 255

    if result.stdout:
        print(result.stdout)
    if result.stderr:
        print(result.stderr, file=sys.stderr)
    sys.stderr.flush()
    sys.stdout.flush()

    if result.signal is not None:
        os.kill(os.getpid(), result.signal)
    return 0 if result.exit_code == 0 else 1


if __name__ == "__main__":
    sys.exit(main())

"""Symbolic holes for a typed SSA IR: encoding, type-changing replacement
of holes, verification, interpretation and an enumerative synthesis client."""

from .errors import (ConfigError, FillError, FuelExhausted, HoleIRError, InterpError,
                     NotAHole, NotFound, ParseError, PolicyInfeasible, ScopeError,
                     StillInUse, TypeConflict, TypeMismatch, UnknownValue, UnresolvedHoles)
from .holes import (HoleInfo, HoleOp, find_hole, list_hole_ops, list_holes, new_hole,
                    new_hole_op, new_hole_select)
from .interp import (Counterexample, Equivalent, Exhaustive, RunResult, Sampled,
                     check_equiv, run)
from .ir import (HOLE, I1, VOID, Argument, Block, Constant, FnType, Function, HoleType,
                 Instruction, IntType, IRBuilder, Module, VoidType, clone, erase, rauw,
                 uses_of)
from .rewrite import (OperandSlot, ParamSlot, RewriteReport, TypeClasses, materialize,
                      rauw_nt, resolve_class)
from .synth import CandidatePools, Solution, SynthConfig, default_pools, fill, superopt
from .textio import (Assignment, AssignmentSet, Diagnostic, OpExpr, ValueRef,
                     format_assignments, parse_assignments, parse_module, print_module)
from .verifier import dominators, is_closed, verify

__version__ = "0.1.0"

"""Toolkit for the Kmelia multi-service component model.

Parse component specifications, assemble components by binding required
to provided services over channels, verify behavioural compatibility
(matching communication pairs, deadlock freedom, reachability), simulate
assemblies with runtime contract checking, and model the service
registry lifecycle.
"""

from .analysis import (
    Verdict,
    check_protocol_compatibility,
    check_reachability,
    detect_deadlocks,
)
from .assembly import (
    Assembly,
    DependencyReport,
    DuplicateChannel,
    Link,
    SignatureMismatch,
    UnresolvedEndpoint,
    check_dependencies,
    link,
    load_assembly,
    load_assembly_file,
)
from .errors import IncompleteProductWarning, KmeliaError
from .exprs import (
    UNKNOWN,
    BinOp,
    BoolLit,
    Expr,
    IntLit,
    Not,
    TypeMismatch,
    UnboundVariable,
    Var,
    eval_expr,
    render_expr,
)
from .flattening import DepthExceeded, flatten_behavior
from .model import (
    Assign,
    BehaviorELTS,
    CALLER_REF,
    Comm,
    Component,
    Dependency,
    Label,
    Named,
    SELF_REF,
    ServiceSpec,
    Signature,
    Transition,
    VarDecl,
    empty_behavior,
)
from .product import ProductLTS, UnknownEntry, synchronized_product
from .registry import (
    Binding,
    DuplicateRegistration,
    FederatedRegistry,
    Query,
    Registry,
    ServiceDescriptor,
    StaleBinding,
    UnknownId,
    entails,
)
from .semantics import Configuration, Engine, SyncLabel
from .simulator import (
    ContractViolation,
    MissingArgument,
    SimSession,
    TraceEvent,
    init_session,
    replay_witness,
    run,
    step,
    write_trace,
)
from .syntax import ParseError, parse_component_file, parse_predicate, render_component
from .validation import ValidationIssue, ValidationReport, validate_component

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

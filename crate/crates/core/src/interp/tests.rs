use super::*;
use crate::game::{LocationId, SlotIndex};
use alloc::vec;

fn v(n: u8) -> Command {
    Command::Visit(LocationId::new(n).unwrap())
}
fn p(n: u8) -> Command {
    Command::Pick(SlotIndex::new(n).unwrap())
}
fn d(n: u8) -> Command {
    Command::Drop(SlotIndex::new(n).unwrap())
}

const WORKED_EXAMPLE: &str = "\
int locations[5] = {5, 6, 7, 8, 9};
V(0);  // Visit starting location to grab items
P(3);  // Pick up coffee (index 3 at Location 0)
P(1);  // Pick up milk (index 1 at Location 0)

int i;
for (i = 0; i < 5; i++) {
    V(*(locations + i));
    if (*(locations + i) == 6)
        D(0); // Drop coffee (first picked up -> index 0)
    if (*(locations + i) == 8)
        D(1); // Drop milk (second picked up -> index 1)
}
";

fn compile_err(src: &str) -> ParseError {
    compile(src).expect_err("expected a compile error")
}

fn run_err(src: &str) -> ExecError {
    let prog = compile(src).unwrap();
    execute(&prog, Limits::default()).expect_err("expected a runtime error")
}

#[test]
fn minimal_pointer_program_has_three_statements() {
    let prog = compile("int x = 5; int *p = &x; V(*p);").unwrap();
    assert_eq!(prog.statements().len(), 3);
    assert_eq!(trace_of("int x = 5; int *p = &x; V(*p);").unwrap(), vec![v(5)]);
}

#[test]
fn worked_example_structure() {
    let prog = compile(WORKED_EXAMPLE).unwrap();
    let stmts = prog.statements();
    assert!(matches!(&stmts[0].kind, ast::StmtKind::Decl(d) if d[0].ty.array_len == Some(5)));
    let calls = stmts.iter().filter(|s| matches!(&s.kind, ast::StmtKind::Expr(e) if matches!(e.kind, ast::ExprKind::Call(..)))).count();
    assert_eq!(calls, 3);
    let ast::StmtKind::For { body, .. } = &stmts[5].kind else { panic!("expected for loop") };
    let ast::StmtKind::Block(inner) = &body.kind else { panic!("expected block") };
    assert_eq!(inner.iter().filter(|s| matches!(s.kind, ast::StmtKind::If { .. })).count(), 2);
}

#[test]
fn worked_example_trace() {
    assert_eq!(
        trace_of(WORKED_EXAMPLE).unwrap(),
        vec![v(0), p(3), p(1), v(5), v(6), d(0), v(7), v(8), d(1), v(9)]
    );
}

#[test]
fn missing_semicolon_in_loop_header_is_rejected() {
    let src = WORKED_EXAMPLE.replace("i < 5; i++", "i < 5 i++");
    let err = compile_err(&src);
    assert_eq!(err.line, 7);
    assert!(err.message.contains("';'"), "{}", err.message);
    let bare = compile_err("int i; for (i = 0; i < 5 i++) V(0);");
    assert_eq!((bare.line, bare.col), (1, 26));
}

#[test]
fn single_intrinsic() {
    assert_eq!(trace_of("V(0);").unwrap(), vec![v(0)]);
}

#[test]
fn pointer_increment_moves_one_cell() {
    assert_eq!(trace_of("int a[3]={4,5,6}; int *p=a; p++; V(*p);").unwrap(), vec![v(5)]);
}

#[test]
fn constraint_examples() {
    let prog = compile(WORKED_EXAMPLE).unwrap();
    assert_eq!(check_constraints(&prog, &[ConstraintTag::UsesPointerArithmetic])[&ConstraintTag::UsesPointerArithmetic], true);
    let plain = compile("V(5);").unwrap();
    assert!(!check_constraints(&plain, &[ConstraintTag::UsesArray])[&ConstraintTag::UsesArray]);
    let void_cast = compile("int x = 3; void *v = &x; V(*(int*)v);").unwrap();
    assert!(check_constraints(&void_cast, &[ConstraintTag::UsesVoidCast])[&ConstraintTag::UsesVoidCast]);
    assert_eq!(
        check_constraint_names(&plain, &["usesGoto"]).unwrap_err(),
        UnknownTag("usesGoto".into())
    );
}

#[test]
fn indexing_alone_is_not_pointer_arithmetic() {
    let prog = compile("int a[2] = {1, 2}; V(a[1]);").unwrap();
    let found = check_constraints(&prog, &ConstraintTag::ALL);
    assert!(found[&ConstraintTag::UsesArray]);
    assert!(!found[&ConstraintTag::UsesPointerArithmetic]);
    assert!(!found[&ConstraintTag::UsesPointer]);
}

#[test]
fn function_pointers() {
    let src = "void (*go)(int) = V; void (*take)(int) = &P; go(2); (*take)(1); take = D; take(0);";
    assert_eq!(trace_of(src).unwrap(), vec![v(2), p(1), d(0)]);
    let prog = compile(src).unwrap();
    assert!(ConstraintTag::UsesFunctionPointer.holds(&prog.facts()));
}

#[test]
fn function_pointer_table() {
    let src = "void (*ops[3])(int) = {V, P, D}; int args[3] = {4, 0, 0}; int k; for (k = 0; k < 3; k++) ops[k](args[k]);";
    assert_eq!(trace_of(src).unwrap(), vec![v(4), p(0), d(0)]);
}

#[test]
fn double_and_triple_pointers() {
    let src = "int x = 7; int *p = &x; int **pp = &p; int ***ppp = &pp; V(**pp); ***ppp = 9; V(x);";
    assert_eq!(trace_of(src).unwrap(), vec![v(7), v(9)]);
    assert!(ConstraintTag::UsesDoubleIndirection.holds(&compile(src).unwrap().facts()));
}

#[test]
fn void_pointer_rules() {
    let e = compile_err("int x = 1; void *v = &x; V(*v);");
    assert!(e.message.contains("void pointer"), "{}", e.message);
    let e = compile_err("int a[2] = {1, 2}; void *v = a; v++;");
    assert!(e.message.contains("void"), "{}", e.message);
    let e = compile_err("int a[2] = {1, 2}; void *v = a; V(*(v + 1));");
    assert!(e.message.contains("cast"), "{}", e.message);
    assert_eq!(trace_of("int a[2] = {1, 2}; void *v = a; V(*((int *)v + 1));").unwrap(), vec![v(2)]);
}

#[test]
fn type_errors_are_teachable() {
    let e = compile_err("int x = 3; int *p = x;");
    assert!(e.message.contains("&"), "{}", e.message);
    let e = compile_err("int x = 3; int *p = &x; V(p);");
    assert!(e.message.contains("dereference"), "{}", e.message);
    let e = compile_err("int x = V(1);");
    assert!(e.message.contains("return a value"), "{}", e.message);
    assert!(compile_err("V(y);").message.contains("not declared"));
    assert!(compile_err("int x; int x;").message.contains("already declared"));
    assert!(compile_err("void x;").message.contains("void"));
    assert!(compile_err("int a[2][2];").message.contains("multi-dimensional"));
    assert!(compile_err("int main() { V(0); }").message.contains("function definitions"));
    assert!(compile_err("int ****p;").message.contains("three levels"));
    assert!(compile_err("break;").message.contains("loop"));
    assert!(compile_err("int a[2] = {1, 2, 3};").message.contains("too many"));
    assert!(compile_err("int (*f)(int) = V;").message.contains("void (*)(int)"));
    assert!(compile_err("V(1, 2);").message.contains("exactly one"));
    assert!(compile_err("int a[2]; int b[2]; a = b;").message.contains("array"));
}

#[test]
fn runtime_errors() {
    let e = run_err("int *p = 0; V(*p);");
    assert_eq!(e.kind, ExecErrorKind::Runtime);
    assert!(e.message.contains("NULL"));
    assert!(run_err("int x; V(x);").message.contains("never initialized"));
    let e = run_err("V(16);");
    assert!(e.message.contains("between 0 and 15"), "{}", e.message);
    assert!(run_err("P(4);").message.contains("between 0 and 3"));
    assert!(run_err("D(-1);").message.contains("between 0 and 3"));
    assert!(run_err("int a[2] = {1, 2}; V(a[2]);").message.contains("out of bounds"));
    assert!(run_err("int z = 0; V(4 / z);").message.contains("division by zero"));
    let e = run_err("V(1); void (*f)(int) = 0; f(2);");
    assert_eq!(e.partial_trace, vec![v(1)]);
    assert_eq!(e.line, 1);
}

#[test]
fn infinite_loop_hits_budget() {
    let prog = compile("while (1) { }").unwrap();
    let e = execute(&prog, Limits::default()).unwrap_err();
    assert_eq!(e.kind, ExecErrorKind::BudgetExceeded);
    assert_eq!(e.steps, DEFAULT_STEP_BUDGET + 1);
    let e = execute(&compile("int i; for (i = 0; ; i++) V(0);").unwrap(), Limits { max_steps: 50 }).unwrap_err();
    assert_eq!(e.kind, ExecErrorKind::BudgetExceeded);
}

#[test]
fn control_flow() {
    let src = "int i; for (i = 0; i < 10; i++) { if (i == 2) continue; if (i == 4) break; V(i); } \
               int j = 3; while (j > 0) { j -= 1; V(j); } if (j) V(15); else V(14);";
    assert_eq!(trace_of(src).unwrap(), vec![v(0), v(1), v(3), v(2), v(1), v(0), v(14)]);
}

#[test]
fn block_scoping_and_shadowing() {
    let src = "int x = 1; { int x = 2; V(x); } V(x); for (int k = 3; k < 4; k++) V(k);";
    assert_eq!(trace_of(src).unwrap(), vec![v(2), v(1), v(3)]);
}

#[test]
fn pointer_comparisons_and_differences() {
    let src = "int a[4] = {1, 2, 3, 4}; int *end = a + 4; int *q; for (q = a; q < end; q++) V(*q); V(end - a); \
               int *n = 0; if (n == 0) V(0); if (!n) V(1);";
    assert_eq!(trace_of(src).unwrap(), vec![v(1), v(2), v(3), v(4), v(4), v(0), v(1)]);
}

#[test]
fn partial_initializer_zero_fills() {
    assert_eq!(trace_of("int a[3] = {2}; V(a[1]); V(a[2]);").unwrap(), vec![v(0), v(0)]);
    assert_eq!(trace_of("int a[] = {7, 8}; V(a[1]);").unwrap(), vec![v(8)]);
}

#[test]
fn unused_variable_warning() {
    let prog = compile("int unused = 1; V(0);").unwrap();
    let r = execute(&prog, Limits::default()).unwrap();
    assert_eq!(r.diagnostics.len(), 1);
    assert_eq!(alloc::format!("{}", r.diagnostics[0]), "1:5: warning: variable 'unused' is declared but never used");
}

#[test]
fn no_intrinsics_no_trace() {
    let r = trace_of("int a[2] = {1, 2}; int *p = a; p = p + 1; int s = *p + a[0];").unwrap();
    assert!(r.is_empty());
}

#[test]
fn diagnostic_rendering() {
    let e = compile_err("int x = ;");
    assert_eq!(alloc::format!("{}", e.to_diagnostic()), "1:9: error: expected an expression, found ';'");
}

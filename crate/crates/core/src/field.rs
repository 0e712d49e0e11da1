//! Scalar fields on `R x R^d` with eagerly cached partial derivatives.
//!
//! A [`Field`] owns the base expression plus every symbolic partial
//! derivative up to a maximum total order, each compiled to a flat stack
//! program. The cache is keyed on the multi-index, so mixed partials are
//! computed once regardless of differentiation order, and all reads after
//! construction are lock-free.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{parse, Expr, ParseError};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FieldError {
    #[error("expression uses variable index {index} but dimension {dim} allows at most {max}")]
    VariableOutOfRange {
        index: usize,
        dim: usize,
        max: usize,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Const(f64),
    Var(u32),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow(i32),
    Sin,
    Cos,
    Exp,
}

/// Flat postorder compilation of an [`Expr`]. Evaluation performs exactly the
/// same IEEE operations in the same order as the recursive tree walk, so the
/// two routes agree bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    instrs: Vec<Instr>,
    max_stack: usize,
}

impl Program {
    pub fn compile(expr: &Expr) -> Program {
        let mut instrs = Vec::new();
        let max_stack = emit(expr, &mut instrs);
        Program { instrs, max_stack }
    }

    pub fn max_stack(&self) -> usize {
        self.max_stack
    }

    /// Evaluates with a caller-provided stack buffer so hot loops do not
    /// allocate. The buffer is cleared before use.
    pub fn evaluate_with(&self, point: &[f64], stack: &mut Vec<f64>) -> f64 {
        stack.clear();
        stack.reserve(self.max_stack);
        for instr in &self.instrs {
            match instr {
                Instr::Const(c) => stack.push(*c),
                Instr::Var(i) => stack.push(point[*i as usize]),
                Instr::Add => binary(stack, |a, b| a + b),
                Instr::Sub => binary(stack, |a, b| a - b),
                Instr::Mul => binary(stack, |a, b| a * b),
                Instr::Div => binary(stack, |a, b| a / b),
                Instr::Neg => unary(stack, |a| -a),
                Instr::Pow(k) => {
                    let k = *k;
                    unary(stack, |a| a.powi(k));
                }
                Instr::Sin => unary(stack, f64::sin),
                Instr::Cos => unary(stack, f64::cos),
                Instr::Exp => unary(stack, f64::exp),
            }
        }
        stack.pop().expect("program leaves one value")
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        let mut stack = Vec::with_capacity(self.max_stack);
        self.evaluate_with(point, &mut stack)
    }
}

#[inline]
fn binary(stack: &mut Vec<f64>, op: impl Fn(f64, f64) -> f64) {
    let b = stack.pop().expect("rhs");
    let a = stack.last_mut().expect("lhs");
    *a = op(*a, b);
}

#[inline]
fn unary(stack: &mut [f64], op: impl Fn(f64) -> f64) {
    let a = stack.last_mut().expect("operand");
    *a = op(*a);
}

fn emit(expr: &Expr, out: &mut Vec<Instr>) -> usize {
    match expr {
        Expr::Const(c) => {
            out.push(Instr::Const(*c));
            1
        }
        Expr::Var(i) => {
            out.push(Instr::Var(*i as u32));
            1
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let da = emit(a, out);
            let db = emit(b, out);
            out.push(match expr {
                Expr::Add(..) => Instr::Add,
                Expr::Sub(..) => Instr::Sub,
                Expr::Mul(..) => Instr::Mul,
                _ => Instr::Div,
            });
            da.max(db + 1)
        }
        Expr::Neg(a) => {
            let d = emit(a, out);
            out.push(Instr::Neg);
            d
        }
        Expr::Pow(a, k) => {
            let d = emit(a, out);
            out.push(Instr::Pow(*k as i32));
            d
        }
        Expr::Sin(a) => {
            let d = emit(a, out);
            out.push(Instr::Sin);
            d
        }
        Expr::Cos(a) => {
            let d = emit(a, out);
            out.push(Instr::Cos);
            d
        }
        Expr::Exp(a) => {
            let d = emit(a, out);
            out.push(Instr::Exp);
            d
        }
    }
}

/// A scalar function of `(x, y_1, .., y_d)` with all partial derivatives up
/// to a requested total order available as compiled programs.
#[derive(Debug, Clone)]
pub struct Field {
    dim: usize,
    max_order: usize,
    slots: BTreeMap<Vec<usize>, usize>,
    exprs: Vec<Expr>,
    programs: Vec<Program>,
}

impl Field {
    /// Wraps an expression, eagerly differentiating to `max_order`.
    pub fn new(base: Expr, dim: usize, max_order: usize) -> Result<Field, FieldError> {
        if let Some(index) = base.max_var_index() {
            if index > dim {
                return Err(FieldError::VariableOutOfRange {
                    index,
                    dim,
                    max: dim,
                });
            }
        }
        let axes = dim + 1;
        let mut slots = BTreeMap::new();
        let mut exprs = Vec::new();

        let root = vec![0usize; axes];
        slots.insert(root.clone(), 0);
        exprs.push(base);

        // Breadth-first over total order; each key is produced by
        // differentiating the key with its first positive axis decremented,
        // so mixed partials are derived in one canonical variable order.
        let mut frontier = vec![root];
        for _ in 1..=max_order {
            let mut next = Vec::new();
            for key in &frontier {
                for axis in 0..axes {
                    let mut derived = key.clone();
                    derived[axis] += 1;
                    if slots.contains_key(&derived) {
                        continue;
                    }
                    let parent_slot = slots[key];
                    let expr = exprs[parent_slot].differentiate(axis);
                    slots.insert(derived.clone(), exprs.len());
                    exprs.push(expr);
                    next.push(derived);
                }
            }
            frontier = next;
        }

        let programs = exprs.iter().map(Program::compile).collect();
        Ok(Field {
            dim,
            max_order,
            slots,
            exprs,
            programs,
        })
    }

    /// Parses `text` over `x, y_1..y_d` and wraps it.
    pub fn from_str(text: &str, dim: usize, max_order: usize) -> Result<Field, FieldError> {
        Field::new(parse(text, dim)?, dim, max_order)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn base(&self) -> &Expr {
        &self.exprs[0]
    }

    /// The cached symbolic derivative for a multi-index of length `d + 1`.
    pub fn derivative_expr(&self, key: &[usize]) -> Option<&Expr> {
        self.slots.get(key).map(|&slot| &self.exprs[slot])
    }

    pub fn has_derivative(&self, key: &[usize]) -> bool {
        self.slots.contains_key(key)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.programs[0].evaluate(point)
    }

    /// Evaluates the derivative selected by `key` (length `d + 1`).
    pub fn eval_derivative(&self, key: &[usize], point: &[f64]) -> Option<f64> {
        self.slots
            .get(key)
            .map(|&slot| self.programs[slot].evaluate(point))
    }

    pub(crate) fn slot(&self, key: &[usize]) -> Option<usize> {
        self.slots.get(key).copied()
    }

    pub(crate) fn eval_slot(&self, slot: usize, point: &[f64], stack: &mut Vec<f64>) -> f64 {
        self.programs[slot].evaluate_with(point, stack)
    }

    pub(crate) fn max_stack(&self) -> usize {
        self.programs
            .iter()
            .map(Program::max_stack)
            .max()
            .unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    #[test]
    fn caches_all_derivatives_up_to_order() {
        let field = Field::from_str("(1+x)*y/(1+x^2)", 1, 3).unwrap();
        for l in 0..=3usize {
            for j in 0..=(3 - l) {
                assert!(field.has_derivative(&[l, j]), "missing ({l},{j})");
            }
        }
        assert!(!field.has_derivative(&[4, 0]));
        assert!(!field.has_derivative(&[2, 2]));
    }

    #[test]
    fn cached_derivatives_match_direct_differentiation() {
        let base = parse("sin(x)*cos(y)", 1).unwrap();
        let field = Field::new(base.clone(), 1, 2).unwrap();
        let direct = base.differentiate(0).differentiate(1);
        let point = [0.37, -0.91];
        assert_eq!(
            field.eval_derivative(&[1, 1], &point).unwrap(),
            direct.evaluate(&point)
        );
    }

    #[test]
    fn rejects_out_of_dimension_variables() {
        let expr = parse("y2", 3).unwrap();
        assert!(Field::new(expr, 1, 0).is_err());
    }

    #[test]
    fn two_dimensional_field() {
        let field = Field::from_str("x*y1+y2^2", 2, 2).unwrap();
        assert_eq!(field.eval(&[2.0, 3.0, 4.0]), 22.0);
        assert_eq!(
            field.eval_derivative(&[0, 0, 1], &[0.0, 0.0, 5.0]),
            Some(10.0)
        );
        assert_eq!(
            field.eval_derivative(&[1, 1, 0], &[0.0, 0.0, 0.0]),
            Some(1.0)
        );
    }

    proptest! {
        /// The compiled program is the independent tree walk, bit for bit.
        #[test]
        fn compiled_matches_tree_walk(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let exprs = [
                "(1+x)*y/(1+x^2)",
                "sin(x)*cos(y)",
                "exp(x*y)-x^3/(1+y^2)",
                "-x^2+2*x*y-sin(y)^2",
            ];
            for text in exprs {
                let e = parse(text, 1).unwrap();
                let program = Program::compile(&e);
                let tree = e.evaluate(&[x, y]);
                let compiled = program.evaluate(&[x, y]);
                prop_assert!(
                    tree == compiled || (tree.is_nan() && compiled.is_nan()),
                    "{text}: {tree} vs {compiled}"
                );
            }
        }
    }
}

//! Expression AST for user-defined metric components, embeddings and test
//! functions, evaluated over jets.

use crate::error::{Error, Result};
use crate::jets::jet::Jet;
use crate::scalar::Real;

/// Variable label as written in the grammar: `x1..x9` or `u1..u9`.
///
/// In an ambient chart with a distinguished k-dimensional submanifold the two
/// families alias the same coordinates: `x_j` is axis j-1 and `u_j` is axis
/// k+j-1. Plain charts bind only the `x` family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X(u8),
    U(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Atan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Fun(UnaryFn, Box<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Number(x)
    }

    pub fn var(axis0: usize) -> Expr {
        Expr::Var(Var::X(axis0 as u8 + 1))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

/// Jets bound to the variable families of an expression.
pub struct Bindings<'a, T: Real> {
    pub x: &'a [Jet<T>],
    pub u: &'a [Jet<T>],
}

impl<'a, T: Real> Bindings<'a, T> {
    /// Chart bindings: `x1..xd` map to the given jets, `u` unbound.
    pub fn chart(x: &'a [Jet<T>]) -> Self {
        Bindings { x, u: &[] }
    }

    /// Ambient bindings with submanifold split k: `u_j` aliases axis k+j-1.
    pub fn ambient(all: &'a [Jet<T>], k: usize) -> Self {
        Bindings {
            x: all,
            u: &all[k..],
        }
    }

    fn lookup(&self, var: Var) -> Result<&Jet<T>> {
        let (family, slots, j) = match var {
            Var::X(j) => ("x", self.x, j as usize),
            Var::U(j) => ("u", self.u, j as usize),
        };
        slots.get(j - 1).ok_or_else(|| {
            Error::Spec(format!(
                "variable {family}{j} is not bound in this chart ({} {family}-slots)",
                slots.len()
            ))
        })
    }
}

/// Evaluate an expression over jets; all bound jets must share dim and order.
pub fn eval<T: Real>(expr: &Expr, bind: &Bindings<T>) -> Result<Jet<T>> {
    let out = eval_rec(expr, bind)?;
    out.assert_finite("expression evaluation")?;
    Ok(out)
}

fn eval_rec<T: Real>(expr: &Expr, bind: &Bindings<T>) -> Result<Jet<T>> {
    let (dim, order) = shape(bind);
    Ok(match expr {
        Expr::Number(x) => Jet::constant(dim, order, T::of(*x)),
        Expr::Pi => Jet::constant(dim, order, T::PI()),
        Expr::Var(v) => bind.lookup(*v)?.clone(),
        Expr::Neg(a) => -eval_rec(a, bind)?,
        Expr::Add(a, b) => eval_rec(a, bind)? + eval_rec(b, bind)?,
        Expr::Sub(a, b) => eval_rec(a, bind)? - eval_rec(b, bind)?,
        Expr::Mul(a, b) => eval_rec(a, bind)? * eval_rec(b, bind)?,
        Expr::Div(a, b) => eval_rec(a, bind)?.try_div(&eval_rec(b, bind)?)?,
        Expr::Pow(a, e) => eval_rec(a, bind)?.powi(*e)?,
        Expr::Fun(f, a) => {
            let a = eval_rec(a, bind)?;
            match f {
                UnaryFn::Sin => a.sin(),
                UnaryFn::Cos => a.cos(),
                UnaryFn::Exp => a.exp(),
                UnaryFn::Log => a.try_ln()?,
                UnaryFn::Sqrt => a.try_sqrt()?,
                UnaryFn::Tanh => a.tanh(),
                UnaryFn::Atan => a.atan(),
            }
        }
    })
}

fn shape<T: Real>(bind: &Bindings<T>) -> (usize, usize) {
    let j = bind
        .x
        .first()
        .or_else(|| bind.u.first())
        .expect("bindings must contain at least one jet");
    (j.dim(), j.order())
}

/// Variable jets for a chart point, one per coordinate.
pub fn point_jets<T: Real>(point: &[T], order: usize) -> Vec<Jet<T>> {
    point
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(i, v, point.len(), order).expect("axis in range"))
        .collect()
}

/// Evaluate an expression of `x1..xd` at a chart point.
pub fn evaluate<T: Real>(expr: &Expr, point: &[T], order: usize) -> Result<Jet<T>> {
    let jets = point_jets(point, order);
    eval(expr, &Bindings::chart(&jets))
}

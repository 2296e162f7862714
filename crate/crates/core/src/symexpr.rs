//! Symbolic parameter expressions.
//!
//! An [`Expr`] is an immutable tree whose leaves are numeric constants or
//! named [`Parameter`]s. Parameters come in three kinds: fixed (carrying their
//! own value), variational (trainable) and feature (supplied as input data).
//! Expressions evaluate against a [`Values`] map and can be differentiated
//! analytically with respect to any leaf name.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Numeric assignment of parameter names.
pub type Values = BTreeMap<String, f64>;

/// Builds a [`Values`] map from `(name, value)` pairs.
pub fn values<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Values {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamKind {
    Fixed(f64),
    Variational,
    Feature,
}

impl ParamKind {
    pub fn is_trainable(&self) -> bool {
        matches!(self, ParamKind::Variational)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub kind: ParamKind,
}

impl Parameter {
    pub fn variational(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ParamKind::Variational }
    }

    pub fn feature(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ParamKind::Feature }
    }

    pub fn fixed(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), kind: ParamKind::Fixed(value) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Acos,
    Exp,
    Sqrt,
    Ln,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Acos => "acos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Param(Parameter),
    Const(f64),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    Pow(Expr, Expr),
    Neg(Expr),
    Apply(Func, Expr),
}

/// Immutable symbolic expression. Cloning is cheap (reference counted).
#[derive(Debug, Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(value: f64) -> Self {
        Self::node(Node::Const(value))
    }

    pub fn param(p: Parameter) -> Self {
        Self::node(Node::Param(p))
    }

    /// Trainable parameter leaf.
    pub fn var(name: impl Into<String>) -> Self {
        Self::param(Parameter::variational(name))
    }

    /// Input-data parameter leaf.
    pub fn feature(name: impl Into<String>) -> Self {
        Self::param(Parameter::feature(name))
    }

    /// Named leaf with a frozen value.
    pub fn fixed(name: impl Into<String>, value: f64) -> Self {
        Self::param(Parameter::fixed(name, value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn pi() -> Self {
        Self::constant(std::f64::consts::PI)
    }

    pub fn sin(&self) -> Self {
        Self::node(Node::Apply(Func::Sin, self.clone()))
    }

    pub fn cos(&self) -> Self {
        Self::node(Node::Apply(Func::Cos, self.clone()))
    }

    pub fn acos(&self) -> Self {
        Self::node(Node::Apply(Func::Acos, self.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::node(Node::Apply(Func::Exp, self.clone()))
    }

    pub fn sqrt(&self) -> Self {
        Self::node(Node::Apply(Func::Sqrt, self.clone()))
    }

    pub fn ln(&self) -> Self {
        Self::node(Node::Apply(Func::Ln, self.clone()))
    }

    pub fn pow(&self, exponent: impl Into<Expr>) -> Self {
        Self::node(Node::Pow(self.clone(), exponent.into()))
    }

    /// Returns the value if this expression is a bare numeric constant.
    pub fn as_constant(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// True when the expression contains no variational or feature leaves.
    pub fn is_numeric(&self) -> bool {
        self.collect_parameters()
            .iter()
            .all(|p| matches!(p.kind, ParamKind::Fixed(_)))
    }

    pub fn evaluate(&self, values: &Values) -> Result<f64> {
        match &*self.0 {
            Node::Const(v) => Ok(*v),
            Node::Param(p) => match p.kind {
                ParamKind::Fixed(v) => Ok(v),
                _ => values
                    .get(&p.name)
                    .copied()
                    .ok_or_else(|| Error::MissingParameter(p.name.clone())),
            },
            Node::Add(a, b) => Ok(a.evaluate(values)? + b.evaluate(values)?),
            Node::Mul(a, b) => Ok(a.evaluate(values)? * b.evaluate(values)?),
            Node::Neg(a) => Ok(-a.evaluate(values)?),
            Node::Pow(base, exponent) => {
                let b = base.evaluate(values)?;
                let e = exponent.evaluate(values)?;
                if b == 0.0 && e < 0.0 {
                    return Err(Error::DomainError(format!("0^{e}")));
                }
                if b < 0.0 && e.fract() != 0.0 {
                    return Err(Error::DomainError(format!("({b})^{e}")));
                }
                Ok(b.powf(e))
            }
            Node::Apply(f, arg) => {
                let x = arg.evaluate(values)?;
                match f {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Exp => Ok(x.exp()),
                    Func::Acos => {
                        if !(-1.0..=1.0).contains(&x) {
                            return Err(Error::DomainError(format!("acos({x})")));
                        }
                        Ok(x.acos())
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(Error::DomainError(format!("sqrt({x})")));
                        }
                        Ok(x.sqrt())
                    }
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(Error::DomainError(format!("ln({x})")));
                        }
                        Ok(x.ln())
                    }
                }
            }
        }
    }

    /// True if the named non-fixed leaf occurs in the tree.
    pub fn depends_on(&self, name: &str) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Param(p) => p.name == name && !matches!(p.kind, ParamKind::Fixed(_)),
            Node::Add(a, b) | Node::Mul(a, b) | Node::Pow(a, b) => {
                a.depends_on(name) || b.depends_on(name)
            }
            Node::Neg(a) | Node::Apply(_, a) => a.depends_on(name),
        }
    }

    /// Analytic partial derivative with respect to the leaf called `wrt`.
    ///
    /// Fixed leaves are constants. Only `0·x`, `1·x` and `0 + x` are folded.
    pub fn differentiate(&self, wrt: &str) -> Expr {
        if !self.depends_on(wrt) {
            return Expr::zero();
        }
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Param(_) => Expr::one(),
            Node::Add(a, b) => fold_add(a.differentiate(wrt), b.differentiate(wrt)),
            Node::Mul(a, b) => fold_add(
                fold_mul(a.differentiate(wrt), b.clone()),
                fold_mul(a.clone(), b.differentiate(wrt)),
            ),
            Node::Neg(a) => fold_neg(a.differentiate(wrt)),
            Node::Pow(base, exponent) => {
                let du = base.differentiate(wrt);
                if !exponent.depends_on(wrt) {
                    let reduced = base.pow(exponent.clone() - 1.0);
                    fold_mul(fold_mul(exponent.clone(), reduced), du)
                } else {
                    let dv = exponent.differentiate(wrt);
                    let inner = fold_add(
                        fold_mul(dv, base.ln()),
                        fold_mul(fold_mul(exponent.clone(), du), base.pow(-1.0)),
                    );
                    fold_mul(self.clone(), inner)
                }
            }
            Node::Apply(f, u) => {
                let du = u.differentiate(wrt);
                let outer = match f {
                    Func::Sin => u.cos(),
                    Func::Cos => fold_neg(u.sin()),
                    Func::Acos => fold_neg((Expr::one() - u.clone() * u.clone()).pow(-0.5)),
                    Func::Exp => self.clone(),
                    Func::Sqrt => fold_mul(Expr::constant(0.5), u.pow(-0.5)),
                    Func::Ln => u.pow(-1.0),
                };
                fold_mul(outer, du)
            }
        }
    }

    /// Every distinct leaf parameter, sorted by name.
    pub fn collect_parameters(&self) -> Vec<Parameter> {
        let mut out = BTreeMap::new();
        self.collect_into(&mut out);
        out.into_values().collect()
    }

    pub(crate) fn collect_into(&self, out: &mut BTreeMap<String, Parameter>) {
        match &*self.0 {
            Node::Const(_) => {}
            Node::Param(p) => {
                out.entry(p.name.clone()).or_insert_with(|| p.clone());
            }
            Node::Add(a, b) | Node::Mul(a, b) | Node::Pow(a, b) => {
                a.collect_into(out);
                b.collect_into(out);
            }
            Node::Neg(a) | Node::Apply(_, a) => a.collect_into(out),
        }
    }

    /// Names of the non-fixed leaves.
    pub fn free_parameter_names(&self) -> Vec<String> {
        self.collect_parameters()
            .into_iter()
            .filter(|p| !matches!(p.kind, ParamKind::Fixed(_)))
            .map(|p| p.name)
            .collect()
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    e.as_constant() == Some(v)
}

fn fold_mul(a: Expr, b: Expr) -> Expr {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        Expr::zero()
    } else if is_const(&a, 1.0) {
        b
    } else if is_const(&b, 1.0) {
        a
    } else {
        Expr::node(Node::Mul(a, b))
    }
}

fn fold_add(a: Expr, b: Expr) -> Expr {
    if is_const(&a, 0.0) {
        b
    } else if is_const(&b, 0.0) {
        a
    } else {
        Expr::node(Node::Add(a, b))
    }
}

fn fold_neg(a: Expr) -> Expr {
    if is_const(&a, 0.0) {
        a
    } else {
        Expr::node(Node::Neg(a))
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

/// Bare strings become variational parameters.
impl From<&str> for Expr {
    fn from(name: &str) -> Self {
        Expr::var(name)
    }
}

impl From<String> for Expr {
    fn from(name: String) -> Self {
        Expr::var(name)
    }
}

impl From<&Expr> for Expr {
    fn from(e: &Expr) -> Self {
        e.clone()
    }
}

impl From<Parameter> for Expr {
    fn from(p: Parameter) -> Self {
        Expr::param(p)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $build:expr) => {
        impl<R: Into<Expr>> $trait<R> for Expr {
            type Output = Expr;
            fn $method(self, rhs: R) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self, rhs.into())
            }
        }
        impl<R: Into<Expr>> $trait<R> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: R) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self.clone(), rhs.into())
            }
        }
        impl $trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(Expr::constant(self), rhs)
            }
        }
    };
}

binary_op!(Add, add, |a, b| Expr::node(Node::Add(a, b)));
binary_op!(Mul, mul, |a, b| Expr::node(Node::Mul(a, b)));
binary_op!(Sub, sub, |a, b| Expr::node(Node::Add(a, Expr::node(Node::Neg(b)))));
binary_op!(Div, div, |a, b| Expr::node(Node::Mul(a, b.pow(-1.0))));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::node(Node::Neg(self))
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::node(Node::Neg(self.clone()))
    }
}

/// Canonical S-expression text, e.g. `(mul (acos (add (var theta) (feat phi))) (const 3.14))`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(v) => write!(f, "(const {v})"),
            Node::Param(p) => match p.kind {
                ParamKind::Variational => write!(f, "(var {})", p.name),
                ParamKind::Feature => write!(f, "(feat {})", p.name),
                ParamKind::Fixed(v) => write!(f, "(fixed {} {v})", p.name),
            },
            Node::Add(a, b) => write!(f, "(add {a} {b})"),
            Node::Mul(a, b) => write!(f, "(mul {a} {b})"),
            Node::Pow(a, b) => write!(f, "(pow {a} {b})"),
            Node::Neg(a) => write!(f, "(neg {a})"),
            Node::Apply(func, a) => write!(f, "({} {a})", func.name()),
        }
    }
}

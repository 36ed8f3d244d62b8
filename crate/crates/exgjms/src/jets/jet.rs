//! Truncated multivariate Taylor values ("jets").
//!
//! A jet of dimension d and order J stores one coefficient per multi-index I
//! with |I| <= J, under the Taylor convention `coeff(I) = d^I f(x0) / I!`.
//! Arithmetic is exact truncated-polynomial arithmetic, so every derivative
//! read out of a jet downstream is exact to roundoff.

use crate::error::{Error, Result};
use crate::jets::table::{table, IndexTable};
use crate::scalar::Real;

/// A multi-index of partial-derivative orders, one entry per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u8>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// I! as an exact integer (orders are small).
    pub fn factorial(&self) -> u64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u64).product::<u64>())
            .product()
    }
}

/// Truncated Taylor expansion of a scalar at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    dim: usize,
    order: usize,
    coeffs: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(dim: usize, order: usize, value: T) -> Self {
        let mut coeffs = vec![T::zero(); table(dim, order).len()];
        coeffs[0] = value;
        Jet { dim, order, coeffs }
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        Jet {
            dim,
            order,
            coeffs: vec![T::zero(); table(dim, order).len()],
        }
    }

    /// The coordinate function of variable `axis` (0-based), seeded with unit
    /// first derivative.
    pub fn variable(axis: usize, value: T, dim: usize, order: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::IndexOutOfRange { axis, dim });
        }
        let mut jet = Self::zero(dim, order);
        jet.coeffs[0] = value;
        if order >= 1 {
            // degree-1 block is enumerated in axis order
            let tb = table(dim, order);
            jet.coeffs[tb.degree_start[1] + axis] = T::one();
        }
        Ok(jet)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    fn tb(&self) -> &'static IndexTable {
        table(self.dim, self.order)
    }

    /// Taylor coefficient of the multi-index (i.e. `d^I f / I!`).
    pub fn coeff(&self, idx: &MultiIndex) -> Result<T> {
        if idx.0.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "multi-index has {} entries, jet dimension is {}",
                idx.0.len(),
                self.dim
            )));
        }
        let degree = idx.degree();
        if degree > self.order {
            return Err(Error::OrderExceeded {
                degree,
                order: self.order,
            });
        }
        let pos = self.tb().position(&idx.0).expect("index in range");
        Ok(self.coeffs[pos])
    }

    /// Exact partial derivative `d^I f(x0) = I! * coeff(I)`.
    pub fn partial(&self, idx: &MultiIndex) -> Result<T> {
        Ok(self.coeff(idx)? * T::of(idx.factorial() as f64))
    }

    /// First-derivative coefficients, one per variable (zeros at order 0).
    pub fn gradient(&self) -> Vec<T> {
        if self.order == 0 {
            return vec![T::zero(); self.dim];
        }
        let start = self.tb().degree_start[1];
        self.coeffs[start..start + self.dim].to_vec()
    }

    /// Partial derivative as a jet of one order less.
    pub fn derivative(&self, axis: usize) -> Result<Jet<T>> {
        if axis >= self.dim {
            return Err(Error::IndexOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        if self.order == 0 {
            return Err(Error::InsufficientOrder {
                what: "jet derivative",
                needed: 1,
                available: 0,
            });
        }
        let parent = self.tb();
        let order = self.order - 1;
        let len = parent.len_at(order);
        let mut coeffs = vec![T::zero(); len];
        for (p, c) in coeffs.iter_mut().enumerate() {
            let src = parent.shift_up[axis][p] as usize;
            let mult = parent.indices[p][axis] as f64 + 1.0;
            *c = self.coeffs[src] * T::of(mult);
        }
        Ok(Jet {
            dim: self.dim,
            order,
            coeffs,
        })
    }

    /// Prefix copy at a lower order (no-op if already at or below `order`).
    pub fn truncated(&self, order: usize) -> Jet<T> {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            dim: self.dim,
            order,
            coeffs: self.coeffs[..self.tb().len_at(order)].to_vec(),
        }
    }

    pub fn scale(&self, s: T) -> Jet<T> {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: T) -> Jet<T> {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `self += s * other` over the common prefix.
    pub fn add_scaled_assign(&mut self, other: &Jet<T>, s: T) {
        debug_assert_eq!(self.dim, other.dim);
        let len = self.coeffs.len().min(other.coeffs.len());
        for i in 0..len {
            self.coeffs[i] += s * other.coeffs[i];
        }
    }

    pub fn try_div(&self, rhs: &Jet<T>) -> Result<Jet<T>> {
        if rhs.value() == T::zero() {
            return Err(Error::DivisionByZero);
        }
        if self.order.min(rhs.order) == 0 {
            // single rounding, matching scalar arithmetic exactly
            return Ok(Jet::constant(self.dim, 0, self.value() / rhs.value()));
        }
        Ok(self * &rhs.recip_unchecked())
    }

    pub fn try_recip(&self) -> Result<Jet<T>> {
        if self.value() == T::zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.recip_unchecked())
    }

    fn recip_unchecked(&self) -> Jet<T> {
        let a0 = self.value();
        let mut d = vec![T::zero(); self.order + 1];
        d[0] = a0.recip();
        for m in 1..=self.order {
            d[m] = -d[m - 1] / a0;
        }
        self.unary_series(&d)
    }

    /// Integer power; negative exponents require a nonzero value.
    pub fn powi(&self, exp: i32) -> Result<Jet<T>> {
        if exp == 0 {
            return Ok(Jet::constant(self.dim, self.order, T::one()));
        }
        let base = if exp < 0 {
            self.try_recip()?
        } else {
            self.clone()
        };
        let mut e = exp.unsigned_abs();
        let mut acc: Option<Jet<T>> = None;
        let mut sq = base;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => &a * &sq,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            sq = &sq * &sq;
        }
        Ok(acc.expect("nonzero exponent"))
    }

    pub fn exp(&self) -> Jet<T> {
        let e0 = self.value().exp();
        let mut d = vec![T::zero(); self.order + 1];
        d[0] = e0;
        for m in 1..=self.order {
            d[m] = d[m - 1] / T::usize(m);
        }
        self.unary_series(&d)
    }

    pub fn try_ln(&self) -> Result<Jet<T>> {
        let a0 = self.value();
        if a0 <= T::zero() {
            return Err(Error::Domain {
                func: "log",
                value: format!("{a0}"),
            });
        }
        let mut d = vec![T::zero(); self.order + 1];
        d[0] = a0.ln();
        if self.order >= 1 {
            d[1] = a0.recip();
        }
        for m in 2..=self.order {
            d[m] = -d[m - 1] * T::usize(m - 1) / (T::usize(m) * a0);
        }
        Ok(self.unary_series(&d))
    }

    pub fn try_sqrt(&self) -> Result<Jet<T>> {
        let a0 = self.value();
        if a0 <= T::zero() {
            return Err(Error::Domain {
                func: "sqrt",
                value: format!("{a0}"),
            });
        }
        let mut d = vec![T::zero(); self.order + 1];
        d[0] = a0.sqrt();
        for m in 1..=self.order {
            // binomial(1/2, m) recurrence
            d[m] = d[m - 1] * (T::ratio(3, 2) - T::usize(m)) / (T::usize(m) * a0);
        }
        Ok(self.unary_series(&d))
    }

    pub fn sin(&self) -> Jet<T> {
        self.circular(true)
    }

    pub fn cos(&self) -> Jet<T> {
        self.circular(false)
    }

    fn circular(&self, sine: bool) -> Jet<T> {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cycle = if sine { [s, c, -s, -c] } else { [c, -s, -c, s] };
        let mut d = vec![T::zero(); self.order + 1];
        let mut fact = T::one();
        for (m, dm) in d.iter_mut().enumerate() {
            if m > 0 {
                fact = fact / T::usize(m);
            }
            *dm = cycle[m % 4] * fact;
        }
        self.unary_series(&d)
    }

    pub fn tanh(&self) -> Jet<T> {
        // y' = 1 - y^2 termwise
        let mut y = vec![T::zero(); self.order + 1];
        y[0] = self.value().tanh();
        for m in 0..self.order {
            let mut conv = T::zero();
            for i in 0..=m {
                conv += y[i] * y[m - i];
            }
            let one = if m == 0 { T::one() } else { T::zero() };
            y[m + 1] = (one - conv) / T::usize(m + 1);
        }
        self.unary_series(&y)
    }

    pub fn atan(&self) -> Jet<T> {
        let a0 = self.value();
        // w = 1/(1 + x^2) as a univariate series about a0, then integrate
        let q = [T::one() + a0 * a0, T::of(2.0) * a0, T::one()];
        let mut w = vec![T::zero(); self.order + 1];
        if self.order >= 1 {
            w[0] = q[0].recip();
            for m in 1..self.order {
                let mut s = T::zero();
                for i in 1..=m.min(2) {
                    s += q[i] * w[m - i];
                }
                w[m] = -s / q[0];
            }
        }
        let mut d = vec![T::zero(); self.order + 1];
        d[0] = a0.atan();
        for m in 1..=self.order {
            d[m] = w[m - 1] / T::usize(m);
        }
        self.unary_series(&d)
    }

    /// Evaluate the univariate series `sum d[m] * t^m` at the nilpotent part
    /// `t = self - value`, by Horner's rule.
    fn unary_series(&self, d: &[T]) -> Jet<T> {
        let mut t = self.clone();
        t.coeffs[0] = T::zero();
        let mut acc = Jet::constant(self.dim, self.order, d[self.order]);
        for m in (0..self.order).rev() {
            acc = &acc * &t;
            acc.coeffs[0] += d[m];
        }
        acc
    }

    /// Composition: treat `self` (dimension n) as a function of its expansion
    /// point offsets and substitute the n given jets, which must have exactly
    /// zero value (offsets vanish at the new base point). The result order is
    /// the minimum of `self.order` and the argument order.
    pub fn compose(&self, deltas: &[Jet<T>]) -> Result<Jet<T>> {
        if deltas.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "composition needs {} arguments, got {}",
                self.dim,
                deltas.len()
            )));
        }
        let xdim = deltas[0].dim;
        let mut xorder = self.order;
        for d in deltas {
            if d.dim != xdim {
                return Err(Error::DimensionMismatch(
                    "composition arguments disagree in dimension".into(),
                ));
            }
            if d.value() != T::zero() {
                return Err(Error::InvalidParameter(
                    "composition arguments must have zero value".into(),
                ));
            }
            xorder = xorder.min(d.order);
        }
        let args: Vec<Jet<T>> = deltas.iter().map(|d| d.truncated(xorder)).collect();
        // powers[i][e] = args[i]^e for e >= 1
        let powers: Vec<Vec<Jet<T>>> = args
            .iter()
            .map(|a| {
                let mut p = vec![a.clone()];
                for _ in 1..xorder.max(1) {
                    let next = p.last().expect("nonempty") * a;
                    p.push(next);
                }
                p
            })
            .collect();
        let tb = self.tb();
        let mut acc = Jet::zero(xdim, xorder);
        for pos in 0..tb.len_at(xorder) {
            let c = self.coeffs[pos];
            if c == T::zero() {
                continue;
            }
            let idx = &tb.indices[pos];
            let mut term: Option<Jet<T>> = None;
            for (i, &e) in idx.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let p = &powers[i][e as usize - 1];
                term = Some(match term {
                    None => p.clone(),
                    Some(t) => &t * p,
                });
            }
            match term {
                None => acc.coeffs[0] += c,
                Some(t) => acc.add_scaled_assign(&t, c),
            }
        }
        Ok(acc)
    }

    /// Hard error on any non-finite coefficient.
    pub fn assert_finite(&self, what: &'static str) -> Result<()> {
        if self.coeffs.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }
}

fn add_impl<T: Real>(a: &Jet<T>, b: &Jet<T>, sub: bool) -> Jet<T> {
    assert_eq!(a.dim, b.dim, "jet dimension mismatch");
    let order = a.order.min(b.order);
    let len = table(a.dim, order).len();
    let mut coeffs = Vec::with_capacity(len);
    for i in 0..len {
        coeffs.push(if sub {
            a.coeffs[i] - b.coeffs[i]
        } else {
            a.coeffs[i] + b.coeffs[i]
        });
    }
    Jet {
        dim: a.dim,
        order,
        coeffs,
    }
}

fn mul_impl<T: Real>(a: &Jet<T>, b: &Jet<T>) -> Jet<T> {
    assert_eq!(a.dim, b.dim, "jet dimension mismatch");
    let order = a.order.min(b.order);
    let tb = table(a.dim, order);
    let mut coeffs = vec![T::zero(); tb.len()];
    for &(i, j, k) in &tb.pairs {
        coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
    }
    Jet {
        dim: a.dim,
        order,
        coeffs,
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $f:expr) => {
        impl<'a, 'b, T: Real> std::ops::$trait<&'b Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &'b Jet<T>) -> Jet<T> {
                $f(self, rhs)
            }
        }
        impl<T: Real> std::ops::$trait<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                $f(&self, &rhs)
            }
        }
        impl<'a, T: Real> std::ops::$trait<&'a Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &'a Jet<T>) -> Jet<T> {
                $f(&self, rhs)
            }
        }
        impl<'a, T: Real> std::ops::$trait<Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                $f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| add_impl(a, b, false));
binop!(Sub, sub, |a, b| add_impl(a, b, true));
binop!(Mul, mul, mul_impl);

impl<T: Real> std::ops::Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> std::ops::Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

//! Factorization of the extrinsic operators over minimal submanifolds of
//! Einstein manifolds, with exact rational coefficient arithmetic. This is
//! the independent oracle against which the closed-form and normal-form
//! routes are validated.

use crate::error::{Error, Result};
use crate::geometry::LeviCivita;
use crate::jets::Jet;
use crate::scalar::Real;
use num_rational::Ratio;

pub type Rational = Ratio<i64>;

/// Factor shifts `c_j = (k/2 + j - 1)(k/2 - j)` for j = 1..l: the operator
/// on a minimal k-submanifold of an Einstein manifold with `Ric = lambda
/// (n-1) g` factors as the product of `-Lap + lambda c_j`.
pub fn c_coefficients(k: u32, l: u32) -> Vec<Rational> {
    let half_k = Rational::new(k as i64, 2);
    (1..=l as i64)
        .map(|j| (half_k + (j - 1)) * (half_k - j))
        .collect()
}

/// Closed-form Q-curvature for the Einstein/minimal case at unit Einstein
/// constant: `prod_{j=1}^{2l-1} (k/2 - l + j)`. At the critical order
/// `2l = k` this is `(k-1)!`.
pub fn q_closed_form_exact(k: u32, l: u32) -> Rational {
    let half_k = Rational::new(k as i64, 2);
    (1..=(2 * l as i64 - 1))
        .map(|j| half_k - (l as i64) + j)
        .product()
}

/// `Q_{2l} = lambda^l prod (k/2 - l + j)` as a float.
pub fn q_closed_form(k: u32, l: u32, lambda: f64) -> f64 {
    let q = q_closed_form_exact(k, l);
    lambda.powi(l as i32) * (*q.numer() as f64) / (*q.denom() as f64)
}

/// Iterated application `prod_j (-Lap + lambda c_j) f` at the chart point of
/// `lc_h`. Factor order is irrelevant (the shifts are constants).
pub fn factorized_apply<T: Real>(
    lc_h: &LeviCivita<T>,
    lambda: T,
    l: u32,
    f: &Jet<T>,
) -> Result<T> {
    if f.order() < 2 * l as usize {
        return Err(Error::InsufficientOrder {
            what: "factorized operator",
            needed: 2 * l as usize,
            available: f.order(),
        });
    }
    let shifts = c_coefficients(lc_h.dim as u32, l);
    let mut u = f.clone();
    for c in &shifts {
        let cj = T::ratio(*c.numer(), *c.denom());
        u = -lc_h.laplacian(&u)? + u.scale(lambda * cj);
    }
    Ok(u.value())
}

/// Spectrum of the factorized operator on the unit k-sphere: the degree-m
/// spherical harmonic eigenvalue is `prod_j (m(m+k-1) + c_j)`.
pub fn sphere_eigenvalue(k: u32, m: u32, l: u32) -> Rational {
    let lap = Rational::from_integer((m * (m + k - 1)) as i64);
    c_coefficients(k, l).into_iter().map(|c| lap + c).product()
}

/// Same with an Einstein constant: each factor scales linearly in lambda.
pub fn sphere_eigenvalue_lambda(k: u32, m: u32, l: u32, lambda: f64) -> f64 {
    let ev = sphere_eigenvalue(k, m, l);
    lambda.powi(l as i32) * (*ev.numer() as f64) / (*ev.denom() as f64)
}

/// Normal-form expansion coefficients of the canonical Einstein family,
/// as multiples of the induced metric: `(1 - lambda r^2 / 4)^2` expands to
/// `1 - (lambda/2) r^2 + (lambda^2/16) r^4`.
pub fn canonical_family_coefficients(lambda: f64) -> (f64, f64) {
    (-lambda / 2.0, lambda * lambda / 16.0)
}

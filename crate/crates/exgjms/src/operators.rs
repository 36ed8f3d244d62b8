//! The second- and fourth-order extrinsic operators in closed form, their
//! intrinsic counterparts, the extrinsic-minus-intrinsic decomposition, and
//! the conformal-covariance verifiers.

use crate::error::{Error, Result};
use crate::geometry::{curvature_pack, LeviCivita, MetricChart};
use crate::jets::{eval, Bindings, Expr, Jet};
use crate::scalar::Real;
use crate::submanifold::{embedded_geometry, fialkow_pack, EmbeddedGeometry, Embedding};
use crate::tensor::{indices, sq_norm2, sq_norm_mixed, sum_jets, Tensor2};

/// Existence rule for the order-2l operator on a k-submanifold of an
/// n-manifold: all l when both dimensions are odd; l < n/2 when only n is
/// even; l <= k/2 + 1 when k is even, with n > k + 2 additionally required in
/// the borderline case l = k/2 + 1 when n is even.
pub fn admissible(k: usize, n: usize, l: usize) -> Result<bool> {
    if n < 3 || k < 1 || k > n - 1 || l < 1 {
        return Err(Error::InvalidParameter(format!(
            "admissible(k, n, l) needs n >= 3, 1 <= k <= n-1, l >= 1; got k = {k}, n = {n}, l = {l}"
        )));
    }
    let ok = if n % 2 == 1 && k % 2 == 1 {
        true
    } else if n % 2 == 0 && k % 2 == 1 {
        2 * l < n
    } else {
        // k even
        if 2 * l < k + 2 {
            true
        } else if 2 * l == k + 2 {
            n % 2 == 1 || n > k + 2
        } else {
            false
        }
    };
    Ok(ok)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Closed forms in ambient curvature and extrinsic data.
    Extrinsic,
    /// Intrinsic operators of the induced metric.
    Intrinsic,
    /// Extrinsic-minus-intrinsic correction terms.
    Tilde,
    /// Built directly from normal-form expansion coefficients.
    NormalForm,
}

/// Coefficient fields of the pair (P_2, P_4) on the surface chart:
/// `P_2 = -Lap + (k-2)/2 Q_2` and
/// `P_4 = Lap^2 + div(T grad) + (k-4)/2 Q_4`.
///
/// In the intrinsic flavor the q2 slot holds the Schouten trace of the
/// induced metric, and in the tilde flavor the Fialkow scalar, so the three
/// flavors add slotwise.
#[derive(Clone, Debug)]
pub struct OperatorCoefficients<T: Real> {
    pub k: usize,
    pub n: usize,
    pub flavor: Flavor,
    pub q2: Jet<T>,
    pub t: Tensor2<T>,
    pub q4: Jet<T>,
}

/// Second-order coefficient alone: `Q_2 = P_a^a + k |H|^2 / 2`. Defined for
/// every n (no Bach term).
pub fn extrinsic_q2<T: Real>(eg: &EmbeddedGeometry<T>) -> Jet<T> {
    let half_k = T::usize(eg.k) * T::ratio(1, 2);
    eg.schouten_t_trace() + eg.ext.h_mean_sq().scale(half_k)
}

/// Coefficient pack carrying only the second-order data (valid for every n,
/// including n = 4 where the fourth-order fields do not exist).
pub fn q2_only_coefficients<T: Real>(eg: &EmbeddedGeometry<T>) -> OperatorCoefficients<T> {
    OperatorCoefficients {
        k: eg.k,
        n: eg.n,
        flavor: Flavor::Extrinsic,
        q2: extrinsic_q2(eg),
        t: Tensor2::zeros([eg.k, eg.k], eg.k, 0),
        q4: Jet::zero(eg.k, 0),
    }
}

/// Full closed-form coefficients (needs n != 4 because of the Bach term).
pub fn extrinsic_coefficients<T: Real>(
    eg: &EmbeddedGeometry<T>,
) -> Result<OperatorCoefficients<T>> {
    let (k, n, nk) = (eg.k, eg.n, eg.n - eg.k);
    if n == 4 {
        return Err(Error::Inadmissible { k, n, l: 2 });
    }
    let ext = &eg.ext;
    let xo = ext.lc_h.order;
    let q2 = extrinsic_q2(eg);

    let p_tt = eg.schouten_tt();
    let p_trace = eg.schouten_t_trace();
    let h_sq = ext.h_mean_sq();

    // H^{a'} L_{ab a'}
    let hl = Tensor2::from_fn([k, k], |[a, b]| {
        sum_jets(k, xo, (0..nk).map(|ap| &ext.h_mean[ap] * &ext.l[[ap, a, b]]))
    });

    // T_ab = 4 P_ab + 4 H L_ab - [(k-2) P_c^c + (k^2 - 2k + 4)|H|^2 / 2] h_ab
    let kf = k as f64;
    let bracket = p_trace.scale(T::of(kf - 2.0))
        + h_sq.scale(T::of(kf * kf - 2.0 * kf + 4.0) * T::ratio(1, 2));
    let t = Tensor2::from_fn([k, k], |[a, b]| {
        (&p_tt[[a, b]] + &hl[[a, b]]).scale(T::of(4.0)) - &bracket * &ext.lc_h.g[[a, b]]
    });

    // Q_4 assembled termwise
    let lap_q2 = ext.lc_h.laplacian(&q2)?;

    // P_ab + H L_ab - |H|^2 h_ab / 2
    let gc1_lhs = Tensor2::from_fn([k, k], |[a, b]| {
        &(&p_tt[[a, b]] + &hl[[a, b]]) - &h_sq.scale(T::ratio(1, 2)) * &ext.lc_h.g[[a, b]]
    });
    let term_gc1 = sq_norm2(&gc1_lhs, &ext.lc_h.g_inv);

    // P_{a a'} - D_a H_{a'}
    let p_tn = eg.schouten_tn();
    let dh = eg.nabla_h_mean()?;
    let gc2_lhs = Tensor2::from_fn([k, nk], |[a, ap]| &p_tn[[a, ap]] - &dh[[a, ap]]);
    let term_gc2 = sq_norm_mixed(&gc2_lhs, &ext.lc_h.g_inv);

    let w_nn = eg.weyl_nn_trace();
    let term_w = sum_jets(
        k,
        xo,
        indices([nk, nk]).map(|[ap, bp]| {
            &(&w_nn[[ap, bp]] * &ext.h_mean[ap]) * &ext.h_mean[bp]
        }),
    );
    let cot = eg.cotton_t_trace();
    let term_c = sum_jets(k, xo, (0..nk).map(|ap| &cot[ap] * &ext.h_mean[ap]));
    let term_b = eg.bach_t_trace();

    let q4 = -lap_q2 - term_gc1.scale(T::of(2.0))
        + term_gc2.scale(T::of(2.0))
        + (&q2 * &q2).scale(T::usize(k) * T::ratio(1, 2))
        - term_w.scale(T::of(2.0))
        - term_c.scale(T::of(4.0))
        - term_b.scale(T::of(2.0) / T::of(n as f64 - 4.0));

    Ok(OperatorCoefficients {
        k,
        n,
        flavor: Flavor::Extrinsic,
        q2,
        t,
        q4,
    })
}

/// Intrinsic coefficients of a chart metric: the q2 slot is the Schouten
/// trace, `Tbar = 4 Pbar - (k-2) Jbar h` and
/// `Qbar_4 = -Lap Jbar - 2 |Pbar|^2 + k Jbar^2 / 2`. Needs k >= 3.
pub fn intrinsic_coefficients<T: Real>(lc_h: &LeviCivita<T>) -> Result<OperatorCoefficients<T>> {
    let k = lc_h.dim;
    if k < 3 {
        return Err(Error::UnsupportedDimension(format!(
            "intrinsic fourth-order coefficients need k >= 3, got {k}"
        )));
    }
    let pack = curvature_pack(lc_h.clone())?;
    let jbar = pack.j.clone();
    let t = Tensor2::from_fn([k, k], |[a, b]| {
        pack.schouten[[a, b]].scale(T::of(4.0)) - &jbar.scale(T::usize(k - 2)) * &lc_h.g[[a, b]]
    });
    let p_sq = sq_norm2(&pack.schouten, &lc_h.g_inv);
    let q4 = -lc_h.laplacian(&jbar)? - p_sq.scale(T::of(2.0))
        + (&jbar * &jbar).scale(T::usize(k) * T::ratio(1, 2));
    Ok(OperatorCoefficients {
        k,
        n: k,
        flavor: Flavor::Intrinsic,
        q2: jbar,
        t,
        q4,
    })
}

/// Correction coefficients carrying the extrinsic data: the q2 slot is the
/// Fialkow scalar, `Ttilde = 4 F - (k-2) G h`, and `Qtilde_4` collects the
/// Fialkow, normal-derivative and ambient Weyl/Cotton/Bach contributions.
/// Needs k >= 3 and n != 4.
pub fn tilde_coefficients<T: Real>(eg: &EmbeddedGeometry<T>) -> Result<OperatorCoefficients<T>> {
    let (k, n, nk) = (eg.k, eg.n, eg.n - eg.k);
    if k < 3 {
        return Err(Error::UnsupportedDimension(format!(
            "decomposition coefficients need k >= 3, got {k}"
        )));
    }
    if n == 4 {
        return Err(Error::Inadmissible { k, n, l: 2 });
    }
    let ext = &eg.ext;
    let xo = ext.lc_h.order;
    let fp = fialkow_pack(eg)?;
    let f = fp.f.as_ref().expect("k >= 3");
    let g = fp.g.clone();

    let t = Tensor2::from_fn([k, k], |[a, b]| {
        f[[a, b]].scale(T::of(4.0)) - &g.scale(T::usize(k - 2)) * &ext.lc_h.g[[a, b]]
    });

    let intrinsic = eg.intrinsic_pack()?;
    let pbar_up = Tensor2::from_fn([k, k], |[a, b]| {
        sum_jets(
            k,
            xo,
            indices([k, k]).map(|[c, d]| {
                &(&ext.lc_h.g_inv[[a, c]] * &ext.lc_h.g_inv[[b, d]]) * &intrinsic.schouten[[c, d]]
            }),
        )
    });
    let f_dot_pbar = sum_jets(
        k,
        xo,
        indices([k, k]).map(|[a, b]| &f[[a, b]] * &pbar_up[[a, b]]),
    );
    let f_sq = sq_norm2(f, &ext.lc_h.g_inv);
    let d_sq = sq_norm_mixed(&fp.d, &ext.lc_h.g_inv);

    let w_nn = eg.weyl_nn_trace();
    let term_w = sum_jets(
        k,
        xo,
        indices([nk, nk]).map(|[ap, bp]| &(&w_nn[[ap, bp]] * &ext.h_mean[ap]) * &ext.h_mean[bp]),
    );
    let cot = eg.cotton_t_trace();
    let term_c = sum_jets(k, xo, (0..nk).map(|ap| &cot[ap] * &ext.h_mean[ap]));
    let term_b = eg.bach_t_trace();

    let q4 = -ext.lc_h.laplacian(&g)? - f_sq.scale(T::of(2.0))
        + (&g * &g).scale(T::usize(k) * T::ratio(1, 2))
        - f_dot_pbar.scale(T::of(4.0))
        + (&g * &intrinsic.j).scale(T::usize(k))
        + d_sq.scale(T::of(2.0))
        - term_w.scale(T::of(2.0))
        - term_c.scale(T::of(4.0))
        - term_b.scale(T::of(2.0) / T::of(n as f64 - 4.0));

    Ok(OperatorCoefficients {
        k,
        n,
        flavor: Flavor::Tilde,
        q2: g,
        t,
        q4,
    })
}

/// Pointwise residuals of the slotwise decomposition
/// extrinsic = intrinsic + tilde.
#[derive(Clone, Debug)]
pub struct DecompositionResiduals<T> {
    pub q2: T,
    pub t: T,
    pub q4: T,
}

pub fn decomposition_residuals<T: Real>(
    eg: &EmbeddedGeometry<T>,
) -> Result<DecompositionResiduals<T>> {
    let full = extrinsic_coefficients(eg)?;
    let bar = intrinsic_coefficients(&eg.ext.lc_h)?;
    let tilde = tilde_coefficients(eg)?;
    let k = eg.k;
    let q2 = (full.q2.value() - bar.q2.value() - tilde.q2.value()).abs();
    let q4 = (full.q4.value() - bar.q4.value() - tilde.q4.value()).abs();
    let mut t = T::zero();
    for [a, b] in indices([k, k]) {
        t = t.max(
            (full.t[[a, b]].value() - bar.t[[a, b]].value() - tilde.t[[a, b]].value()).abs(),
        );
    }
    Ok(DecompositionResiduals { q2, t, q4 })
}

// ---------------------------------------------------------------------------
// application of the operators to functions on the surface chart
// ---------------------------------------------------------------------------

/// `P_2 f = -Lap f + (k-2)/2 Q_2 f` at the chart point.
pub fn apply_p2<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    lc_h: &LeviCivita<T>,
    f: &Jet<T>,
) -> Result<T> {
    let lap = lc_h.laplacian(f)?;
    let c = T::of(coeffs.k as f64 - 2.0) * T::ratio(1, 2);
    Ok(-lap.value() + c * (coeffs.q2.value() * f.value()))
}

/// `P_4 f = Lap^2 f + D^a (T_ab D^b f) + (k-4)/2 Q_4 f` at the chart point.
pub fn apply_p4<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    lc_h: &LeviCivita<T>,
    f: &Jet<T>,
) -> Result<T> {
    if f.order() < 4 {
        return Err(Error::InsufficientOrder {
            what: "fourth-order operator",
            needed: 4,
            available: f.order(),
        });
    }
    let k = coeffs.k;
    let lap = lc_h.laplacian(f)?;
    let bilap = lc_h.laplacian(&lap)?;

    // V_a = T_ab h^{bc} d_c f, then the divergence h^{ab} D_b V_a
    let df: Vec<Jet<T>> = (0..k).map(|a| f.derivative(a)).collect::<Result<_>>()?;
    let grad_up: Vec<Jet<T>> = (0..k)
        .map(|b| {
            sum_jets(
                k,
                df[0].order(),
                (0..k).map(|c| &lc_h.g_inv[[b, c]] * &df[c]),
            )
        })
        .collect();
    let v: Vec<Jet<T>> = (0..k)
        .map(|a| {
            sum_jets(
                k,
                df[0].order(),
                (0..k).map(|b| &coeffs.t[[a, b]] * &grad_up[b]),
            )
        })
        .collect();
    let div_tv = lc_h.divergence_oneform(&v)?;

    let c = T::of(k as f64 - 4.0) * T::ratio(1, 2);
    Ok(bilap.value() + div_tv.value() + c * (coeffs.q4.value() * f.value()))
}

/// `P_{2l} f - (k/2 - l) Q_{2l} f`: the operator with its zeroth-order part
/// removed.
pub fn apply_p_reduced<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    lc_h: &LeviCivita<T>,
    level: usize,
    f: &Jet<T>,
) -> Result<T> {
    let (p, q) = match level {
        1 => (apply_p2(coeffs, lc_h, f)?, coeffs.q2.value()),
        2 => (apply_p4(coeffs, lc_h, f)?, coeffs.q4.value()),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "operator level must be 1 or 2, got {level}"
            )))
        }
    };
    let c = T::of(coeffs.k as f64 / 2.0 - level as f64);
    Ok(p - c * q * f.value())
}

// ---------------------------------------------------------------------------
// conformal covariance checks (full re-run under the rescaled metric)
// ---------------------------------------------------------------------------

/// Both sides of the covariance law
/// `Phat_{2l} f = e^{(-k/2-l) omega} P_{2l}(e^{(k/2-l) omega} f)` at a point.
#[derive(Clone, Debug)]
pub struct CovarianceCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    /// `1 + |lhs|`, the mixed absolute/relative denominator.
    pub denom: T,
}

fn operator_value<T: Real>(
    eg: &EmbeddedGeometry<T>,
    level: usize,
    f: &Jet<T>,
) -> Result<T> {
    match level {
        1 => apply_p2(&q2_only_coefficients(eg), &eg.ext.lc_h, f),
        2 => {
            let coeffs = extrinsic_coefficients(eg)?;
            apply_p4(&coeffs, &eg.ext.lc_h, f)
        }
        _ => Err(Error::InvalidParameter(format!(
            "operator level must be 1 or 2, got {level}"
        ))),
    }
}

/// Verify the transformation law at one point by rebuilding the entire
/// geometry stack under `ghat = e^{2 omega} g`.
pub fn covariance_residual<T: Real>(
    metric: &MetricChart,
    emb: &Embedding,
    omega: &Expr,
    f: &Expr,
    x: &[T],
    level: usize,
    order: usize,
) -> Result<CovarianceCheck<T>> {
    if !admissible(emb.k, emb.n, level)? {
        return Err(Error::Inadmissible {
            k: emb.k,
            n: emb.n,
            l: level,
        });
    }
    let eg = embedded_geometry(metric, emb, x, order)?;
    let f_jet = eval(f, &Bindings::chart(&crate::jets::point_jets(x, order)))?;
    let om_sigma = eval(omega, &Bindings::ambient(&eg.ext.iota, eg.k))?;

    let metric_hat = metric.conformal_rescale(omega);
    let eg_hat = embedded_geometry(&metric_hat, emb, x, order)?;
    let lhs = operator_value(&eg_hat, level, &f_jet)?;

    let kh = T::of(emb.k as f64 / 2.0);
    let l_t = T::usize(level);
    let weight_in = om_sigma.scale(kh - l_t).exp();
    let f_weighted = &weight_in * &f_jet;
    let p_val = operator_value(&eg, level, &f_weighted)?;
    let rhs = (-(kh + l_t) * om_sigma.value()).exp() * p_val;

    let residual = (lhs - rhs).abs();
    Ok(CovarianceCheck {
        lhs,
        rhs,
        residual,
        denom: T::one() + lhs.abs(),
    })
}

/// Verify the Q-curvature transformation law at one point.
///
/// Critical case (k = 2l): `e^{k omega} Qhat_k = Q_k + P_k(omega)`.
/// Noncritical: `e^{2l omega} Qhat = Q + (k/2-l)^{-1} e^{(l-k/2) omega}
/// Pred(e^{(k/2-l) omega})` with `Pred` the operator minus its zeroth-order
/// part.
pub fn q_covariance_residual<T: Real>(
    metric: &MetricChart,
    emb: &Embedding,
    omega: &Expr,
    x: &[T],
    level: usize,
    order: usize,
) -> Result<CovarianceCheck<T>> {
    let (k, n) = (emb.k, emb.n);
    if !admissible(k, n, level)? {
        return Err(Error::Inadmissible { k, n, l: level });
    }
    let critical = k == 2 * level;
    let eg = embedded_geometry(metric, emb, x, order)?;
    let om_sigma = eval(omega, &Bindings::ambient(&eg.ext.iota, k))?;
    let metric_hat = metric.conformal_rescale(omega);
    let eg_hat = embedded_geometry(&metric_hat, emb, x, order)?;

    let q_of = |g: &EmbeddedGeometry<T>| -> Result<(OperatorCoefficients<T>, T)> {
        if level == 1 && n == 4 {
            // Q_2 exists for every n; build a coefficients pack without Q_4
            let coeffs = q2_only_coefficients(g);
            let q = coeffs.q2.value();
            Ok((coeffs, q))
        } else {
            let coeffs = extrinsic_coefficients(g)?;
            let q = if level == 1 {
                coeffs.q2.value()
            } else {
                coeffs.q4.value()
            };
            Ok((coeffs, q))
        }
    };
    let (coeffs, q_val) = q_of(&eg)?;
    let (_, q_hat) = q_of(&eg_hat)?;

    let (lhs, rhs);
    if critical {
        // e^{2l omega} Qhat = Q + P(omega)
        lhs = (T::usize(2 * level) * om_sigma.value()).exp() * q_hat;
        let p_om = match level {
            1 => apply_p2(&coeffs, &eg.ext.lc_h, &om_sigma)?,
            _ => apply_p4(&coeffs, &eg.ext.lc_h, &om_sigma)?,
        };
        rhs = q_val + p_om;
    } else {
        lhs = (T::usize(2 * level) * om_sigma.value()).exp() * q_hat;
        let c = T::of(k as f64 / 2.0 - level as f64);
        let arg = om_sigma.scale(c).exp();
        let p_red = apply_p_reduced(&coeffs, &eg.ext.lc_h, level, &arg)?;
        rhs = q_val + (-c * om_sigma.value()).exp() * p_red / c;
    }
    let residual = (lhs - rhs).abs();
    Ok(CovarianceCheck {
        lhs,
        rhs,
        residual,
        denom: T::one() + lhs.abs(),
    })
}

//! Ambient Riemannian tensor calculus on a coordinate chart, jet-valued.
//!
//! Sign conventions: spheres have positive scalar curvature, `R_ij = R^k_ikj`,
//! the Schouten tensor is `P = (Ric - R g / (2(n-1))) / (n-2)` and the Weyl
//! tensor is the remainder of `Riem = W + P (x) g` in the usual Kulkarni-
//! Nomizu pattern. The Cotton tensor is `C_ijk = D_k P_ij - D_j P_ik` and the
//! Bach tensor `B_ij = D^k C_ijk - P^kl W_kijl`.

use crate::error::{Error, Result};
use crate::jets::{eval, point_jets, Bindings, Expr, Jet};
use crate::scalar::Real;
use crate::tensor::{indices, sum_jets, Tensor2, Tensor3, Tensor4};

/// Pivot threshold for the jet-valued Gauss elimination, relative to the
/// largest value-layer entry of the metric.
const PIVOT_TOL: f64 = 1e-12;

/// Symmetric matrix of expressions `g_ij(z)` defining a metric on a chart.
#[derive(Clone, Debug)]
pub struct MetricChart {
    pub n: usize,
    /// Upper triangle, packed row-major: entry (i, j) with i <= j.
    upper: Vec<Expr>,
}

impl MetricChart {
    /// Build from rows. Each row `i` may list all `n` entries or only the
    /// upper part `j >= i`; when both triangles are given they must agree.
    pub fn new(n: usize, rows: Vec<Vec<Expr>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::Spec(format!(
                "metric needs {n} rows, got {}",
                rows.len()
            )));
        }
        let mut full: Vec<Vec<Option<Expr>>> = vec![vec![None; n]; n];
        for (i, row) in rows.into_iter().enumerate() {
            let offset = if row.len() == n {
                0
            } else if row.len() == n - i {
                i
            } else {
                return Err(Error::Spec(format!(
                    "metric row {} must have {} or {} entries, got {}",
                    i + 1,
                    n,
                    n - i,
                    row.len()
                )));
            };
            for (jj, e) in row.into_iter().enumerate() {
                full[i][offset + jj] = Some(e);
            }
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                let e = match (&full[i][j], &full[j][i]) {
                    (Some(a), Some(b)) if i != j && a != b => {
                        return Err(Error::Spec(format!(
                            "metric entries ({},{}) and ({},{}) differ",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        )))
                    }
                    (Some(a), _) | (None, Some(a)) => a.clone(),
                    (None, None) => {
                        return Err(Error::Spec(format!(
                            "metric entry ({},{}) missing",
                            i + 1,
                            j + 1
                        )))
                    }
                };
                upper.push(e);
            }
        }
        Ok(MetricChart { n, upper })
    }

    /// Euclidean metric on R^n.
    pub fn euclidean(n: usize) -> MetricChart {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Expr::num(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        MetricChart::new(n, rows).expect("constant metric")
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        // row a starts after a full rows of decreasing length
        let offset = a * self.n - a * (a + 1) / 2 + b;
        &self.upper[offset]
    }

    /// Conformally rescaled chart with components `e^{2 omega} g_ij`.
    pub fn conformal_rescale(&self, omega: &Expr) -> MetricChart {
        let factor = Expr::Fun(
            crate::jets::UnaryFn::Exp,
            Box::new(Expr::Mul(Box::new(Expr::num(2.0)), Box::new(omega.clone()))),
        );
        MetricChart {
            n: self.n,
            upper: self
                .upper
                .iter()
                .map(|e| Expr::Mul(Box::new(factor.clone()), Box::new(e.clone())))
                .collect(),
        }
    }

    /// Evaluate the components over bound jets into a symmetric tensor.
    pub fn eval_components<T: Real>(&self, bind: &Bindings<T>) -> Result<Tensor2<T>> {
        let mut cached: Vec<Option<Jet<T>>> = vec![None; self.upper.len()];
        let mut get = |i: usize, j: usize, bind: &Bindings<T>| -> Result<Jet<T>> {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            let offset = a * self.n - a * (a + 1) / 2 + b;
            if cached[offset].is_none() {
                cached[offset] = Some(eval(&self.upper[offset], bind)?);
            }
            Ok(cached[offset].clone().expect("just filled"))
        };
        let mut entries = Vec::with_capacity(self.n * self.n);
        for [i, j] in indices([self.n, self.n]) {
            entries.push(get(i, j, bind)?);
        }
        let mut it = entries.into_iter();
        Ok(Tensor2::from_fn([self.n, self.n], |_| {
            it.next().expect("sized")
        }))
    }

    /// Levi-Civita data at a chart point (variables bound as `x1..xn`).
    pub fn levi_civita<T: Real>(&self, point: &[T], order: usize) -> Result<LeviCivita<T>> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, chart dimension is {}",
                point.len(),
                self.n
            )));
        }
        let jets = point_jets(point, order);
        let g = self.eval_components(&Bindings::chart(&jets))?;
        LeviCivita::from_metric(g)
    }
}

/// Metric, inverse and Christoffel symbols at a point, jet-valued.
#[derive(Clone, Debug)]
pub struct LeviCivita<T: Real> {
    pub dim: usize,
    pub order: usize,
    pub g: Tensor2<T>,
    pub g_inv: Tensor2<T>,
    /// `gamma[[k, i, j]] = Gamma^k_ij`, one order below the metric.
    pub gamma: Tensor3<T>,
}

impl<T: Real> LeviCivita<T> {
    pub fn from_metric(g: Tensor2<T>) -> Result<Self> {
        let n = g.shape[0];
        let order = g[[0, 0]].order();
        if order < 1 {
            return Err(Error::InsufficientOrder {
                what: "Christoffel symbols",
                needed: 1,
                available: order,
            });
        }
        for [i, j] in indices([n, n]) {
            g[[i, j]].assert_finite("metric components")?;
        }
        cholesky_values(&g)?;
        let g_inv = invert_jets(&g)?;

        let mut dg = Tensor3::zeros([n, n, n], g[[0, 0]].dim(), order - 1);
        for [i, j, k] in indices([n, n, n]) {
            dg[[i, j, k]] = g[[i, j]].derivative(k)?;
        }
        let gamma = Tensor3::from_fn([n, n, n], |[k, i, j]| {
            let half = T::ratio(1, 2);
            sum_jets(
                g[[0, 0]].dim(),
                order - 1,
                (0..n).map(|l| {
                    let sym = &(&dg[[l, j, i]] + &dg[[l, i, j]]) - &dg[[i, j, l]];
                    &g_inv[[k, l]] * &sym
                }),
            )
            .scale(half)
        });
        Ok(LeviCivita {
            dim: n,
            order,
            g,
            g_inv,
            gamma,
        })
    }

    /// Laplace-Beltrami of a scalar jet: `g^{ij}(d^2_ij f - Gamma^k_ij d_k f)`.
    pub fn laplacian(&self, f: &Jet<T>) -> Result<Jet<T>> {
        if f.order() < 2 {
            return Err(Error::InsufficientOrder {
                what: "Laplacian",
                needed: 2,
                available: f.order(),
            });
        }
        let n = self.dim;
        let df: Vec<Jet<T>> = (0..n).map(|i| f.derivative(i)).collect::<Result<_>>()?;
        let mut out = Jet::zero(f.dim(), f.order().saturating_sub(2));
        for [i, j] in indices([n, n]) {
            let mut hess = df[i].derivative(j)?;
            for (k, dfk) in df.iter().enumerate() {
                hess = hess - &self.gamma[[k, i, j]] * dfk;
            }
            out = out + &self.g_inv[[i, j]] * &hess;
        }
        Ok(out)
    }

    /// Covariant Hessian `D^2_ij f` of a scalar jet.
    pub fn hessian(&self, f: &Jet<T>) -> Result<Tensor2<T>> {
        let n = self.dim;
        let df: Vec<Jet<T>> = (0..n).map(|i| f.derivative(i)).collect::<Result<_>>()?;
        let mut out = Tensor2::zeros([n, n], f.dim(), f.order().saturating_sub(2));
        for [i, j] in indices([n, n]) {
            let mut h = df[i].derivative(j)?;
            for (k, dfk) in df.iter().enumerate() {
                h = h - &self.gamma[[k, i, j]] * dfk;
            }
            out[[i, j]] = h;
        }
        Ok(out)
    }

    /// Covariant derivative `D_k a_i` of a one-form.
    pub fn nabla_oneform(&self, a: &[Jet<T>]) -> Result<Tensor2<T>> {
        let n = self.dim;
        let mut out = Tensor2::zeros([n, n], a[0].dim(), a[0].order().saturating_sub(1));
        for [i, k] in indices([n, n]) {
            let mut d = a[i].derivative(k)?;
            for (m, am) in a.iter().enumerate() {
                d = d - &self.gamma[[m, k, i]] * am;
            }
            out[[i, k]] = d;
        }
        Ok(out)
    }

    /// Divergence `g^{ij} D_j a_i` of a one-form.
    pub fn divergence_oneform(&self, a: &[Jet<T>]) -> Result<Jet<T>> {
        let na = self.nabla_oneform(a)?;
        Ok(trace_with(&na, &self.g_inv))
    }
}

fn trace_with<T: Real>(a: &Tensor2<T>, inv: &Tensor2<T>) -> Jet<T> {
    crate::tensor::trace2(a, inv)
}

/// Value-layer Cholesky; fails if the metric is not positive definite.
fn cholesky_values<T: Real>(g: &Tensor2<T>) -> Result<()> {
    let n = g.shape[0];
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[[i, j]].value();
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if s <= T::zero() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(())
}

/// Jet-valued matrix inverse by Gauss elimination with partial pivoting on
/// the value layer.
fn invert_jets<T: Real>(g: &Tensor2<T>) -> Result<Tensor2<T>> {
    let n = g.shape[0];
    let dim = g[[0, 0]].dim();
    let order = g[[0, 0]].order();
    let mut a: Vec<Vec<Jet<T>>> = (0..n)
        .map(|i| (0..n).map(|j| g[[i, j]].clone()).collect())
        .collect();
    let mut inv: Vec<Vec<Jet<T>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet::constant(dim, order, if i == j { T::one() } else { T::zero() }))
                .collect()
        })
        .collect();
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(T::zero(), |m, (i, j)| m.max(g[[i, j]].value().abs()));
    let tol = T::of(PIVOT_TOL) * scale;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| {
                a[p][col]
                    .value()
                    .abs()
                    .partial_cmp(&a[q][col].value().abs())
                    .expect("finite")
            })
            .expect("nonempty");
        if a[pivot][col].value().abs() <= tol {
            return Err(Error::SingularMetric);
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let diag = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].try_div(&diag)?;
            inv[col][j] = inv[col][j].try_div(&diag)?;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col].clone();
            if factor.value() == T::zero() && factor == Jet::zero(dim, order) {
                continue;
            }
            for j in 0..n {
                a[row][j] = &a[row][j] - &(&factor * &a[col][j]);
                inv[row][j] = &inv[row][j] - &(&factor * &inv[col][j]);
            }
        }
    }
    Ok(Tensor2::from_fn([n, n], |[i, j]| inv[i][j].clone()))
}

/// Riemann, Ricci and scalar curvature (any dimension, order >= 2).
#[derive(Clone, Debug)]
pub struct CurvatureCore<T: Real> {
    /// `R_ijkl`, fully lowered.
    pub riem: Tensor4<T>,
    pub ric: Tensor2<T>,
    pub scal: Jet<T>,
}

pub fn curvature_core<T: Real>(lc: &LeviCivita<T>) -> Result<CurvatureCore<T>> {
    let n = lc.dim;
    if lc.order < 2 {
        return Err(Error::InsufficientOrder {
            what: "curvature",
            needed: 2,
            available: lc.order,
        });
    }
    let jdim = lc.g[[0, 0]].dim();
    let r_order = lc.order - 2;
    let gamma_t = lc.gamma.map(|j| j.truncated(r_order));

    // R^m_jkl, antisymmetric in (k, l)
    let mut upper = Tensor4::zeros([n, n, n, n], jdim, r_order);
    for [m, j, k] in indices([n, n, n]) {
        for l in (k + 1)..n {
            let mut r = &lc.gamma[[m, l, j]].derivative(k)? - &lc.gamma[[m, k, j]].derivative(l)?;
            for p in 0..n {
                r = r + &gamma_t[[m, k, p]] * &gamma_t[[p, l, j]]
                    - &gamma_t[[m, l, p]] * &gamma_t[[p, k, j]];
            }
            upper[[m, j, k, l]] = r.clone();
            upper[[m, j, l, k]] = -r;
        }
    }
    let g_t = lc.g.map(|j| j.truncated(r_order));
    let mut riem = Tensor4::zeros([n, n, n, n], jdim, r_order);
    for [i, j, k] in indices([n, n, n]) {
        for l in (k + 1)..n {
            let low = sum_jets(
                jdim,
                r_order,
                (0..n).map(|m| &g_t[[i, m]] * &upper[[m, j, k, l]]),
            );
            riem[[i, j, k, l]] = low.clone();
            riem[[i, j, l, k]] = -low;
        }
    }
    let ginv_t = lc.g_inv.map(|j| j.truncated(r_order));
    let ric = Tensor2::from_fn([n, n], |[i, j]| {
        sum_jets(
            jdim,
            r_order,
            indices([n, n]).map(|[k, l]| &ginv_t[[k, l]] * &riem[[k, i, l, j]]),
        )
    });
    let scal = trace_with(&ric, &ginv_t);
    Ok(CurvatureCore { riem, ric, scal })
}

/// The full conformal curvature zoo (dimension >= 3, order >= 4).
#[derive(Clone, Debug)]
pub struct CurvaturePack<T: Real> {
    pub lc: LeviCivita<T>,
    pub core: CurvatureCore<T>,
    pub schouten: Tensor2<T>,
    /// Schouten trace `J = P_i^i`.
    pub j: Jet<T>,
    pub weyl: Tensor4<T>,
    /// `D_k P_ij`, indexed `[i][j][k]`.
    pub schouten_deriv: Tensor3<T>,
    /// `C_ijk = D_k P_ij - D_j P_ik`.
    pub cotton: Tensor3<T>,
    pub bach: Tensor2<T>,
}

pub fn curvature_pack<T: Real>(lc: LeviCivita<T>) -> Result<CurvaturePack<T>> {
    let n = lc.dim;
    if n < 3 {
        return Err(Error::UnsupportedDimension(format!(
            "conformal curvature tensors need dimension >= 3, got {n}"
        )));
    }
    if lc.order < 4 {
        return Err(Error::InsufficientOrder {
            what: "curvature pack (Bach tensor)",
            needed: 4,
            available: lc.order,
        });
    }
    let core = curvature_core(&lc)?;
    let jdim = lc.g[[0, 0]].dim();
    let r_order = lc.order - 2;

    let g_t = lc.g.map(|j| j.truncated(r_order));
    let coef = T::one() / T::usize(n - 2);
    let scal_coef = T::one() / (T::of(2.0) * T::usize(n - 1));
    let schouten = Tensor2::from_fn([n, n], |[i, j]| {
        (&core.ric[[i, j]] - &(&core.scal * &g_t[[i, j]]).scale(scal_coef)).scale(coef)
    });
    let ginv_t = lc.g_inv.map(|j| j.truncated(r_order));
    let j_trace = trace_with(&schouten, &ginv_t);

    let weyl = Tensor4::from_fn([n, n, n, n], |[i, j, k, l]| {
        &core.riem[[i, j, k, l]]
            - &(&(&schouten[[i, k]] * &g_t[[j, l]]) - &(&schouten[[j, k]] * &g_t[[i, l]])
                - &(&schouten[[i, l]] * &g_t[[j, k]])
                + &(&schouten[[j, l]] * &g_t[[i, k]]))
    });

    // D_k P_ij at order - 3
    let sd_order = lc.order - 3;
    let gamma_s = lc.gamma.map(|j| j.truncated(sd_order));
    let mut schouten_deriv = Tensor3::zeros([n, n, n], jdim, sd_order);
    for [i, j, k] in indices([n, n, n]) {
        let mut d = schouten[[i, j]].derivative(k)?;
        for m in 0..n {
            d = d - &gamma_s[[m, k, i]] * &schouten[[m, j]]
                - &gamma_s[[m, k, j]] * &schouten[[i, m]];
        }
        schouten_deriv[[i, j, k]] = d;
    }
    let cotton = Tensor3::from_fn([n, n, n], |[i, j, k]| {
        &schouten_deriv[[i, j, k]] - &schouten_deriv[[i, k, j]]
    });

    // B_ij = g^{kl} D_l C_ijk - P^{kl} W_kijl at order - 4
    let b_order = lc.order - 4;
    let gamma_b = lc.gamma.map(|j| j.truncated(b_order));
    let ginv_b = lc.g_inv.map(|j| j.truncated(b_order));
    let mut div_c = Tensor2::zeros([n, n], jdim, b_order);
    for [i, j] in indices([n, n]) {
        let mut acc = Jet::zero(jdim, b_order);
        for [k, l] in indices([n, n]) {
            let mut d = cotton[[i, j, k]].derivative(l)?;
            for m in 0..n {
                d = d - &gamma_b[[m, l, i]] * &cotton[[m, j, k]]
                    - &gamma_b[[m, l, j]] * &cotton[[i, m, k]]
                    - &gamma_b[[m, l, k]] * &cotton[[i, j, m]];
            }
            acc = acc + &ginv_b[[k, l]] * &d;
        }
        div_c[[i, j]] = acc;
    }
    let p_up = Tensor2::from_fn([n, n], |[k, l]| {
        sum_jets(
            jdim,
            b_order,
            indices([n, n]).map(|[a, b]| {
                &(&ginv_b[[k, a]] * &ginv_b[[l, b]]) * &schouten[[a, b]].truncated(b_order)
            }),
        )
    });
    let bach = Tensor2::from_fn([n, n], |[i, j]| {
        &div_c[[i, j]]
            - &sum_jets(
                jdim,
                b_order,
                indices([n, n]).map(|[k, l]| &p_up[[k, l]] * &weyl[[k, i, j, l]]),
            )
    });

    Ok(CurvaturePack {
        lc,
        core,
        schouten,
        j: j_trace,
        weyl,
        schouten_deriv,
        cotton,
        bach,
    })
}

/// Scalar-curvature-based Schouten trace `R / (2(k-1))`, defined for any
/// chart dimension >= 2 (unlike the Schouten tensor itself).
pub fn schouten_trace_from_scalar<T: Real>(lc: &LeviCivita<T>) -> Result<Jet<T>> {
    let k = lc.dim;
    if k < 2 {
        return Err(Error::UnsupportedDimension(
            "Schouten trace needs dimension >= 2".into(),
        ));
    }
    let core = curvature_core(lc)?;
    Ok(core
        .scal
        .scale(T::one() / (T::of(2.0) * T::usize(k - 1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::parse;

    fn round_sphere_chart(n: usize) -> MetricChart {
        let sq: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
        let denom = format!("(1+{})^2", sq.join("+"));
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            parse(&format!("4/{denom}")).unwrap()
                        } else {
                            Expr::num(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        MetricChart::new(n, rows).unwrap()
    }

    #[test]
    fn flat_christoffels_vanish() {
        let m = MetricChart::euclidean(3);
        let lc = m.levi_civita(&[0.3f64, -0.1, 0.7], 4).unwrap();
        for [k, i, j] in indices([3, 3, 3]) {
            assert!(lc.gamma[[k, i, j]].value().abs() < 1e-15);
        }
    }

    #[test]
    fn conformal_flat_christoffels() {
        // g = e^{2 x1} delta on R^2 at the origin
        let e = parse("exp(2*x1)").unwrap();
        let rows = vec![
            vec![e.clone(), Expr::num(0.0)],
            vec![Expr::num(0.0), e],
        ];
        let m = MetricChart::new(2, rows).unwrap();
        let lc = m.levi_civita(&[0.0f64, 0.0], 3).unwrap();
        let expect = |k: usize, i: usize, j: usize| -> f64 {
            match (k, i, j) {
                (0, 0, 0) => 1.0,
                (0, 1, 1) => -1.0,
                (1, 0, 1) | (1, 1, 0) => 1.0,
                _ => 0.0,
            }
        };
        for [k, i, j] in indices([2, 2, 2]) {
            assert!(
                (lc.gamma[[k, i, j]].value() - expect(k, i, j)).abs() < 1e-12,
                "Gamma^{k}_{i}{j}"
            );
        }
    }

    #[test]
    fn sphere_christoffels_vanish_at_origin() {
        let m = round_sphere_chart(3);
        let lc = m.levi_civita(&[0.0f64, 0.0, 0.0], 4).unwrap();
        for [k, i, j] in indices([3, 3, 3]) {
            assert!(lc.gamma[[k, i, j]].value().abs() < 1e-14);
        }
    }

    #[test]
    fn metricity_holds_as_jets() {
        let m = round_sphere_chart(3);
        let lc = m.levi_civita(&[0.2f64, -0.3, 0.1], 5).unwrap();
        // D_k g_ij = d_k g_ij - Gamma^m_ki g_mj - Gamma^m_kj g_im = 0
        for [k, i, j] in indices([3, 3, 3]) {
            let mut d = lc.g[[i, j]].derivative(k).unwrap();
            for mm in 0..3 {
                d = d - &lc.gamma[[mm, k, i]] * &lc.g[[mm, j]]
                    - &lc.gamma[[mm, k, j]] * &lc.g[[i, mm]];
            }
            for c in 0..=d.order() {
                // every Taylor coefficient of the residual jet vanishes
                let grad_zero = d.truncated(c).gradient().iter().all(|g| g.abs() < 1e-10);
                assert!(d.value().abs() < 1e-12 && grad_zero);
            }
        }
    }

    #[test]
    fn flat_curvature_vanishes() {
        let m = MetricChart::euclidean(3);
        let lc = m.levi_civita(&[0.3f64, -0.1, 0.7], 6).unwrap();
        let pack = curvature_pack(lc).unwrap();
        assert!(pack.core.scal.value().abs() < 1e-13);
        assert!(pack.core.riem.max_abs_value() < 1e-13);
        assert!(pack.bach.max_abs_value() < 1e-13);
    }

    #[test]
    fn round_sphere_pack() {
        let m = round_sphere_chart(3);
        let lc = m.levi_civita(&[0.0f64, 0.0, 0.0], 6).unwrap();
        let pack = curvature_pack(lc).unwrap();
        assert!((pack.core.scal.value() - 6.0).abs() < 1e-10);
        for [i, j] in indices([3, 3]) {
            let want = 0.5 * pack.lc.g[[i, j]].value();
            assert!((pack.schouten[[i, j]].value() - want).abs() < 1e-10);
        }
        assert!(pack.weyl.max_abs_value() < 1e-9);
        assert!(pack.cotton.max_abs_value() < 1e-9);
        assert!(pack.bach.max_abs_value() < 1e-9);
    }

    #[test]
    fn einstein_chart_off_origin() {
        // round S^5 away from the chart center: Cotton and Bach still vanish,
        // and the scalar curvature is parallel
        let m = round_sphere_chart(5);
        let lc = m
            .levi_civita(&[0.21f64, -0.13, 0.08, 0.17, -0.29], 6)
            .unwrap();
        let pack = curvature_pack(lc).unwrap();
        assert!((pack.core.scal.value() - 20.0).abs() < 1e-9);
        for d in pack.core.scal.gradient() {
            assert!(d.abs() < 1e-9);
        }
        assert!(pack.cotton.max_abs_value() < 1e-9);
        assert!(pack.bach.max_abs_value() < 1e-9);
        assert!(pack.weyl.max_abs_value() < 1e-9);
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let om = parse("0.04*x1*x2 - 0.03*x3^2 + 0.02*x1*x3").unwrap();
        let m = MetricChart::euclidean(3).conformal_rescale(&om);
        let lc = m.levi_civita(&[0.11f64, -0.21, 0.13], 6).unwrap();
        let pack = curvature_pack(lc).unwrap();
        let r = &pack.core.riem;
        let tol = 1e-11;
        for [i, j, k, l] in indices([3, 3, 3, 3]) {
            let v = r[[i, j, k, l]].value();
            assert!((v + r[[j, i, k, l]].value()).abs() < tol);
            assert!((v + r[[i, j, l, k]].value()).abs() < tol);
            assert!((v - r[[k, l, i, j]].value()).abs() < tol);
            let bianchi =
                v + r[[i, k, l, j]].value() + r[[i, l, j, k]].value();
            assert!(bianchi.abs() < tol);
        }
    }

    #[test]
    fn weyl_and_cotton_traces_vanish() {
        let om = parse("0.05*x1^2*x2 - 0.02*x2*x3 + 0.03*x3^3").unwrap();
        let m = MetricChart::euclidean(4).conformal_rescale(&om);
        let lc = m.levi_civita(&[0.12f64, -0.08, 0.2, 0.05], 6).unwrap();
        let pack = curvature_pack(lc).unwrap();
        let n = 4;
        // single trace of Weyl over the (1,3) slots
        for [j, l] in indices([n, n]) {
            let tr: f64 = indices([n, n])
                .map(|[i, k]| pack.lc.g_inv[[i, k]].value() * pack.weyl[[i, j, k, l]].value())
                .sum();
            assert!(tr.abs() < 1e-10 * (1.0 + pack.weyl.max_abs_value()));
        }
        // Cotton antisymmetry and tracelessness
        for [i, j, k] in indices([n, n, n]) {
            assert!(
                (pack.cotton[[i, j, k]].value() + pack.cotton[[i, k, j]].value()).abs() < 1e-12
            );
        }
        for k in 0..n {
            let tr: f64 = indices([n, n])
                .map(|[i, j]| pack.lc.g_inv[[i, j]].value() * pack.cotton[[i, j, k]].value())
                .sum();
            assert!(tr.abs() < 1e-10);
        }
        // Bach is trace-free in every dimension with these conventions
        let trb: f64 = indices([n, n])
            .map(|[i, j]| pack.lc.g_inv[[i, j]].value() * pack.bach[[i, j]].value())
            .sum();
        assert!(trb.abs() < 1e-9);
    }

    #[test]
    fn conformal_rescale_basics() {
        let m = MetricChart::euclidean(2);
        // omega = 0 leaves evaluation unchanged
        let m0 = m.conformal_rescale(&Expr::num(0.0));
        let lc = m0.levi_civita(&[0.4f64, 0.1], 4).unwrap();
        assert!((lc.g[[0, 0]].value() - 1.0).abs() < 1e-15);

        // omega = log 2 scales by 4 and keeps curvature flat
        let m4 = m.conformal_rescale(&parse("log(2)").unwrap());
        let lc = m4.levi_civita(&[0.4f64, 0.1], 4).unwrap();
        assert!((lc.g[[0, 0]].value() - 4.0).abs() < 1e-14);
        let core = curvature_core(&lc).unwrap();
        assert!(core.scal.value().abs() < 1e-13);
    }

    #[test]
    fn schouten_conformal_transformation_law() {
        // Phat = P - Hess(omega) + d omega (x) d omega - |d omega|^2 g / 2
        let base = parse("0.03*x1^2 - 0.05*x2*x3 + 0.01*x3^3 + 0.02*x1").unwrap();
        let m = MetricChart::euclidean(3).conformal_rescale(&base);
        let om = parse("0.07*x1*x3 - 0.04*x2^2 + 0.05*x2").unwrap();
        let mh = m.conformal_rescale(&om);
        let pt = [0.15f64, -0.1, 0.2];

        let lc = m.levi_civita(&pt, 6).unwrap();
        let pack = curvature_pack(lc).unwrap();
        let lch = mh.levi_civita(&pt, 6).unwrap();
        let packh = curvature_pack(lch).unwrap();

        let om_jet = crate::jets::evaluate::<f64>(&om, &pt, 6).unwrap();
        let hess = pack.lc.hessian(&om_jet).unwrap();
        let dom: Vec<Jet<f64>> = (0..3).map(|i| om_jet.derivative(i).unwrap()).collect();
        let grad_sq = sum_jets(
            3,
            5,
            indices([3, 3]).map(|[i, j]| &(&pack.lc.g_inv[[i, j]] * &dom[i]) * &dom[j]),
        );
        for [i, j] in indices([3, 3]) {
            let want = pack.schouten[[i, j]].value() - hess[[i, j]].value()
                + dom[i].value() * dom[j].value()
                - 0.5 * grad_sq.value() * pack.lc.g[[i, j]].value();
            assert!(
                (packh.schouten[[i, j]].value() - want).abs() < 1e-9,
                "component ({i},{j})"
            );
        }
    }

    #[test]
    fn conformally_flat_weyl_and_cotton_identity() {
        // 20 random cubic conformal factors on flat R^4: Weyl vanishes and the
        // Cotton tensor matches the antisymmetrized Schouten derivative.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let mut terms = Expr::num(0.0);
            for _ in 0..6 {
                let c: f64 = rng.gen_range(-0.05..0.05);
                let i = rng.gen_range(0..4);
                let j = rng.gen_range(0..4);
                let k = rng.gen_range(0..4);
                let mono = Expr::mul(
                    Expr::num(c),
                    Expr::mul(Expr::var(i), Expr::mul(Expr::var(j), Expr::var(k))),
                );
                terms = Expr::add(terms, mono);
            }
            let m = MetricChart::euclidean(4).conformal_rescale(&terms);
            let pt: [f64; 4] = [
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            ];
            let pack = curvature_pack(m.levi_civita(&pt, 6).unwrap()).unwrap();
            assert!(
                pack.weyl.max_abs_value() < 1e-10 * (1.0 + pack.core.riem.max_abs_value()),
                "trial {trial}"
            );
            for [i, j, k] in indices([4, 4, 4]) {
                let want =
                    pack.schouten_deriv[[i, j, k]].value() - pack.schouten_deriv[[i, k, j]].value();
                assert!((pack.cotton[[i, j, k]].value() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn raise_lower_round_trip() {
        let m = round_sphere_chart(3);
        let lc = m.levi_civita(&[0.25f64, -0.1, 0.3], 4).unwrap();
        // lower then raise an index of a test tensor
        let a = Tensor2::from_fn([3, 3], |[i, j]| {
            Jet::constant(3, 4, (i as f64 + 1.0) * 0.31 + (j as f64) * 0.17)
        });
        let lowered = Tensor2::from_fn([3, 3], |[i, j]| {
            sum_jets(3, 4, (0..3).map(|k| &lc.g[[i, k]] * &a[[k, j]]))
        });
        let raised = Tensor2::from_fn([3, 3], |[i, j]| {
            sum_jets(3, 4, (0..3).map(|k| &lc.g_inv[[i, k]] * &lowered[[k, j]]))
        });
        for [i, j] in indices([3, 3]) {
            assert!((raised[[i, j]].value() - a[[i, j]].value()).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_identity() {
        // Riem = W + P (x) g on a non-trivial chart
        let om = parse("0.06*x1*x2*x3 + 0.02*x2^2 - 0.04*x1").unwrap();
        let m = round_sphere_chart(4).conformal_rescale(&om);
        let pack = curvature_pack(m.levi_civita(&[0.1f64, 0.07, -0.12, 0.19], 6).unwrap()).unwrap();
        let scale = 1.0 + pack.core.riem.max_abs_value();
        for [i, j, k, l] in indices([4, 4, 4, 4]) {
            let kn = pack.schouten[[i, k]].value() * pack.lc.g[[j, l]].value()
                - pack.schouten[[j, k]].value() * pack.lc.g[[i, l]].value()
                - pack.schouten[[i, l]].value() * pack.lc.g[[j, k]].value()
                + pack.schouten[[j, l]].value() * pack.lc.g[[i, k]].value();
            let resid = pack.core.riem[[i, j, k, l]].value()
                - pack.weyl[[i, j, k, l]].value()
                - kn;
            assert!(resid.abs() < 1e-10 * scale);
        }
    }
}

//! Extrinsic geometry of an embedding: induced metric, orthonormal normal
//! frame, second fundamental form, mean curvature, Fialkow data, mixed
//! covariant derivatives and the Gauss-Codazzi residuals.
//!
//! All submanifold fields are jets in the surface chart coordinates x, so
//! tangential derivatives of derived fields are exact. Ambient curvature is
//! computed once as jets in the ambient coordinates at the base point and
//! composed onto the surface chart where needed.

use crate::error::{Error, Result};
use crate::geometry::{curvature_pack, schouten_trace_from_scalar, CurvaturePack, LeviCivita, MetricChart};
use crate::jets::{eval, point_jets, Bindings, Expr, Jet};
use crate::scalar::Real;
use crate::tensor::{indices, sum_jets, Tensor2, Tensor3, Tensor4};

/// Residual-norm threshold below which a candidate normal direction is
/// considered degenerate during Gram-Schmidt, relative to its raw length.
const NORMAL_FRAME_TOL: f64 = 1e-8;

// Composition orders for ambient tensors pulled back to the surface chart.
// They are capped by what the ambient jet order makes available.
const GAMMA_X_ORDER: usize = 3;
const SCHOUTEN_X_ORDER: usize = 3;
const SCHOUTEN_DERIV_X_ORDER: usize = 1;
const RIEM_X_ORDER: usize = 2;
const WEYL_X_ORDER: usize = 2;
const COTTON_X_ORDER: usize = 1;
const BACH_X_ORDER: usize = 2;

/// An embedding `iota: R^k -> R^n`, components as expressions of `x1..xk`.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub k: usize,
    pub n: usize,
    pub components: Vec<Expr>,
}

impl Embedding {
    pub fn new(k: usize, n: usize, components: Vec<Expr>) -> Result<Self> {
        if !(1 <= k && k < n) {
            return Err(Error::UnsupportedDimension(format!(
                "embedding needs 1 <= k <= n-1, got k = {k}, n = {n}"
            )));
        }
        if components.len() != n {
            return Err(Error::Spec(format!(
                "embedding needs {n} components, got {}",
                components.len()
            )));
        }
        Ok(Embedding { k, n, components })
    }

    /// Graph form: the first k ambient coordinates are the chart coordinates
    /// and the remaining n-k are the given height functions.
    pub fn graph(k: usize, n: usize, heights: Vec<Expr>) -> Result<Self> {
        if heights.len() != n - k {
            return Err(Error::Spec(format!(
                "graph form needs {} height functions, got {}",
                n - k,
                heights.len()
            )));
        }
        let mut components: Vec<Expr> = (0..k).map(Expr::var).collect();
        components.extend(heights);
        Embedding::new(k, n, components)
    }

    /// Component jets at a chart point.
    pub fn eval<T: Real>(&self, x: &[T], order: usize) -> Result<Vec<Jet<T>>> {
        if x.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "embedding chart has {} coordinates, point has {}",
                self.k,
                x.len()
            )));
        }
        let jets = point_jets(x, order);
        let bind = Bindings::chart(&jets);
        self.components.iter().map(|e| eval(e, &bind)).collect()
    }
}

/// Extrinsic data of the embedding at one point, jet-valued in x.
#[derive(Clone, Debug)]
pub struct ExtrinsicPack<T: Real> {
    pub k: usize,
    pub n: usize,
    /// Embedding component jets.
    pub iota: Vec<Jet<T>>,
    /// Tangent frame `T_alpha^i = d_alpha iota^i`, indexed `[alpha][i]`.
    pub tangent: Vec<Vec<Jet<T>>>,
    /// Ambient metric composed onto the chart, `g_ij(iota(x))`.
    pub g_sigma: Tensor2<T>,
    /// Induced metric with inverse and Christoffels.
    pub lc_h: LeviCivita<T>,
    /// Orthonormal normal frame `e_{a'}^i`, indexed `[a'][i]`.
    pub normal: Vec<Vec<Jet<T>>>,
    /// Second fundamental form in the normal frame, `[a'][alpha][beta]`.
    pub l: Tensor3<T>,
    /// Mean curvature components `H^{a'}`.
    pub h_mean: Vec<Jet<T>>,
    /// Trace-free part `L - H h`.
    pub l0: Tensor3<T>,
    /// Normal connection `omega_alpha^{b'}_{c'} = g(D_{T_alpha} e_{c'}, e_{b'})`,
    /// indexed `[alpha][b'][c']`.
    pub conn_n: Tensor3<T>,
}

impl<T: Real> ExtrinsicPack<T> {
    /// Constant jet matching the chart shape of the surface fields.
    pub fn scalar(&self, v: T) -> Jet<T> {
        Jet::constant(self.k, self.lc_h.order, v)
    }

    /// `|H|^2` (normal frame is orthonormal).
    pub fn h_mean_sq(&self) -> Jet<T> {
        sum_jets(
            self.k,
            self.h_mean[0].order(),
            self.h_mean.iter().map(|h| h * h),
        )
    }

    /// Covariant derivative of a normal-bundle section, `D_alpha v^{a'}`,
    /// indexed `[alpha][a']`.
    pub fn nabla_normal(&self, v: &[Jet<T>]) -> Result<Tensor2<T>> {
        let nk = self.n - self.k;
        let order = v[0].order().saturating_sub(1);
        let mut out = Tensor2::zeros([self.k, nk], self.k, order);
        for [a, ap] in indices([self.k, nk]) {
            let mut d = v[ap].derivative(a)?;
            for bp in 0..nk {
                d = d + &self.conn_n[[a, ap, bp]] * &v[bp];
            }
            out[[a, ap]] = d;
        }
        Ok(out)
    }

    /// Covariant derivative of a `T*Sigma (x) N Sigma` section `s_{beta a'}`,
    /// result indexed `[alpha][beta][a']`.
    pub fn nabla_mixed(&self, s: &Tensor2<T>) -> Result<Tensor3<T>> {
        let nk = self.n - self.k;
        let order = s[[0, 0]].order().saturating_sub(1);
        let mut out = Tensor3::zeros([self.k, self.k, nk], self.k, order);
        for [a, b, ap] in indices([self.k, self.k, nk]) {
            let mut d = s[[b, ap]].derivative(a)?;
            for g in 0..self.k {
                d = d - &self.lc_h.gamma[[g, a, b]] * &s[[g, ap]];
            }
            for bp in 0..nk {
                d = d + &self.conn_n[[a, ap, bp]] * &s[[b, bp]];
            }
            out[[a, b, ap]] = d;
        }
        Ok(out)
    }

    /// Covariant derivative of a `S^2 T*Sigma (x) N Sigma` section laid out
    /// like the second fundamental form, `s[[a', alpha, beta]]`; result is
    /// indexed `[gamma][a'][alpha][beta]`.
    pub fn nabla_sym2_normal(&self, s: &Tensor3<T>) -> Result<Tensor4<T>> {
        let nk = self.n - self.k;
        let order = s[[0, 0, 0]].order().saturating_sub(1);
        let mut out = Tensor4::zeros([self.k, nk, self.k, self.k], self.k, order);
        for [g, ap, a, b] in indices([self.k, nk, self.k, self.k]) {
            let mut d = s[[ap, a, b]].derivative(g)?;
            for m in 0..self.k {
                d = d - &self.lc_h.gamma[[m, g, a]] * &s[[ap, m, b]]
                    - &self.lc_h.gamma[[m, g, b]] * &s[[ap, a, m]];
            }
            for bp in 0..nk {
                d = d + &self.conn_n[[g, ap, bp]] * &s[[bp, a, b]];
            }
            out[[g, ap, a, b]] = d;
        }
        Ok(out)
    }
}

/// Ambient curvature tensors composed onto the surface chart (ambient index
/// slots, x-jet entries).
#[derive(Clone, Debug)]
pub struct ComposedAmbient<T: Real> {
    pub gamma: Tensor3<T>,
    pub schouten: Tensor2<T>,
    /// `D_k P_ij` indexed `[i][j][k]`.
    pub schouten_deriv: Tensor3<T>,
    pub riem: Tensor4<T>,
    pub weyl: Tensor4<T>,
    pub cotton: Tensor3<T>,
    pub bach: Tensor2<T>,
}

/// Everything the operator formulas need at one surface point.
pub struct EmbeddedGeometry<T: Real> {
    pub k: usize,
    pub n: usize,
    pub order: usize,
    pub ambient: CurvaturePack<T>,
    pub ext: ExtrinsicPack<T>,
    pub amb_on_sigma: ComposedAmbient<T>,
}

/// Build the full per-point stack for a metric chart and an embedding.
pub fn embedded_geometry<T: Real>(
    metric: &MetricChart,
    emb: &Embedding,
    x: &[T],
    order: usize,
) -> Result<EmbeddedGeometry<T>> {
    if metric.n != emb.n {
        return Err(Error::DimensionMismatch(format!(
            "metric dimension {} differs from embedding ambient dimension {}",
            metric.n, emb.n
        )));
    }
    let (k, n) = (emb.k, emb.n);
    let iota = emb.eval(x, order)?;
    for j in &iota {
        j.assert_finite("embedding evaluation")?;
    }
    let z0: Vec<T> = iota.iter().map(|j| j.value()).collect();

    // ambient curvature as jets in the ambient coordinates at iota(x)
    let z_jets = point_jets(&z0, order);
    let g_ambient = metric.eval_components(&Bindings::ambient(&z_jets, k))?;
    let ambient = curvature_pack(LeviCivita::from_metric(g_ambient)?)?;

    // composition offsets iota - iota(x0)
    let deltas: Vec<Jet<T>> = iota
        .iter()
        .map(|j| j - &Jet::constant(k, order, j.value()))
        .collect();
    let comp = |src: &Jet<T>, want: usize| -> Result<Jet<T>> {
        src.truncated(want.min(src.order())).compose(&deltas)
    };

    let amb_on_sigma = ComposedAmbient {
        gamma: compose3(&ambient.lc.gamma, GAMMA_X_ORDER, &comp)?,
        schouten: compose2(&ambient.schouten, SCHOUTEN_X_ORDER, &comp)?,
        schouten_deriv: compose3(&ambient.schouten_deriv, SCHOUTEN_DERIV_X_ORDER, &comp)?,
        riem: compose4(&ambient.core.riem, RIEM_X_ORDER, &comp)?,
        weyl: compose4(&ambient.weyl, WEYL_X_ORDER, &comp)?,
        cotton: compose3(&ambient.cotton, COTTON_X_ORDER, &comp)?,
        bach: compose2(&ambient.bach, BACH_X_ORDER, &comp)?,
    };

    // ambient metric along the surface, by direct evaluation at the iota jets
    let g_sigma = metric.eval_components(&Bindings::ambient(&iota, k))?;

    // tangent frame and induced metric
    let tangent: Vec<Vec<Jet<T>>> = (0..k)
        .map(|a| iota.iter().map(|c| c.derivative(a)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let h = Tensor2::from_fn([k, k], |[a, b]| {
        sum_jets(
            k,
            order - 1,
            indices([n, n]).map(|[i, j]| &(&g_sigma[[i, j]] * &tangent[a][i]) * &tangent[b][j]),
        )
    });
    let lc_h = LeviCivita::from_metric(h).map_err(|e| match e {
        Error::NotPositiveDefinite | Error::SingularMetric => Error::DegenerateEmbedding,
        other => other,
    })?;

    let normal = normal_frame(k, n, &g_sigma, &tangent, &lc_h)?;

    // nabla_{T_a} T_b and the second fundamental form
    let dt_order = order.saturating_sub(2).min(GAMMA_X_ORDER);
    let mut nabla_tt = Tensor3::zeros([k, k, n], k, dt_order);
    for [a, b, i] in indices([k, k, n]) {
        let mut v = tangent[b][i].derivative(a)?;
        for [p, q] in indices([n, n]) {
            v = v + &(&amb_on_sigma.gamma[[i, p, q]] * &tangent[a][p]) * &tangent[b][q];
        }
        nabla_tt[[a, b, i]] = v;
    }
    let nk = n - k;
    let l = Tensor3::from_fn([nk, k, k], |[ap, a, b]| {
        sum_jets(
            k,
            dt_order,
            indices([n, n]).map(|[i, j]| &(&g_sigma[[i, j]] * &nabla_tt[[a, b, i]]) * &normal[ap][j]),
        )
    });
    let inv_k = T::one() / T::usize(k);
    let h_mean: Vec<Jet<T>> = (0..nk)
        .map(|ap| {
            sum_jets(
                k,
                dt_order,
                indices([k, k]).map(|[a, b]| &lc_h.g_inv[[a, b]] * &l[[ap, a, b]]),
            )
            .scale(inv_k)
        })
        .collect();
    let l0 = Tensor3::from_fn([nk, k, k], |[ap, a, b]| {
        &l[[ap, a, b]] - &(&h_mean[ap] * &lc_h.g[[a, b]])
    });

    // normal connection: ambient derivative of each normal vector first
    let conn_order = order.saturating_sub(2).min(GAMMA_X_ORDER);
    let mut nabla_te = Tensor3::zeros([k, nk, n], k, conn_order);
    for [a, cp, i] in indices([k, nk, n]) {
        let mut v = normal[cp][i].derivative(a)?;
        for [p, q] in indices([n, n]) {
            v = v + &(&amb_on_sigma.gamma[[i, p, q]] * &tangent[a][p]) * &normal[cp][q];
        }
        nabla_te[[a, cp, i]] = v;
    }
    let conn_n = Tensor3::from_fn([k, nk, nk], |[a, bp, cp]| {
        sum_jets(
            k,
            conn_order,
            indices([n, n]).map(|[i, j]| {
                &(&g_sigma[[i, j]] * &nabla_te[[a, cp, i]]) * &normal[bp][j]
            }),
        )
    });

    let ext = ExtrinsicPack {
        k,
        n,
        iota,
        tangent,
        g_sigma,
        lc_h,
        normal,
        l,
        h_mean,
        l0,
        conn_n,
    };
    Ok(EmbeddedGeometry {
        k,
        n,
        order,
        ambient,
        ext,
        amb_on_sigma,
    })
}

/// Deterministic Gram-Schmidt normal frame: walk the ambient coordinate
/// directions in ascending order, project out the tangent space and earlier
/// normals, keep directions whose residual is not negligible.
fn normal_frame<T: Real>(
    k: usize,
    n: usize,
    g_sigma: &Tensor2<T>,
    tangent: &[Vec<Jet<T>>],
    lc_h: &LeviCivita<T>,
) -> Result<Vec<Vec<Jet<T>>>> {
    let order = lc_h.order;
    let inner = |u: &[Jet<T>], v: &[Jet<T>]| -> Jet<T> {
        sum_jets(
            k,
            order,
            indices([n, n]).map(|[i, j]| &(&g_sigma[[i, j]] * &u[i]) * &v[j]),
        )
    };
    let mut frame: Vec<Vec<Jet<T>>> = Vec::new();
    for c in 0..n {
        if frame.len() == n - k {
            break;
        }
        let mut u: Vec<Jet<T>> = (0..n)
            .map(|i| Jet::constant(k, order, if i == c { T::one() } else { T::zero() }))
            .collect();
        // project out the tangent space: u -= h^{ab} g(u, T_b) T_a
        for a in 0..k {
            let mut coeff = Jet::zero(k, order);
            for b in 0..k {
                coeff = coeff + &lc_h.g_inv[[a, b]] * &inner(&u, &tangent[b]);
            }
            for i in 0..n {
                u[i] = &u[i] - &(&coeff * &tangent[a][i]);
            }
        }
        // project out earlier normals
        for e in &frame {
            let coeff = inner(&u, e);
            for i in 0..n {
                u[i] = &u[i] - &(&coeff * &e[i]);
            }
        }
        let norm_sq = inner(&u, &u);
        let scale = g_sigma[[c, c]].value();
        if norm_sq.value() <= T::of(NORMAL_FRAME_TOL) * scale {
            continue;
        }
        let norm = norm_sq.try_sqrt()?;
        let u: Vec<Jet<T>> = u.iter().map(|ui| ui.try_div(&norm)).collect::<Result<_>>()?;
        frame.push(u);
    }
    if frame.len() != n - k {
        return Err(Error::DegenerateEmbedding);
    }
    Ok(frame)
}

fn compose2<T: Real>(
    src: &Tensor2<T>,
    want: usize,
    comp: &impl Fn(&Jet<T>, usize) -> Result<Jet<T>>,
) -> Result<Tensor2<T>> {
    let [a, b] = src.shape;
    let mut out = Vec::with_capacity(a * b);
    for [i, j] in indices([a, b]) {
        out.push(comp(&src[[i, j]], want)?);
    }
    let mut it = out.into_iter();
    Ok(Tensor2::from_fn([a, b], |_| it.next().expect("sized")))
}

fn compose3<T: Real>(
    src: &Tensor3<T>,
    want: usize,
    comp: &impl Fn(&Jet<T>, usize) -> Result<Jet<T>>,
) -> Result<Tensor3<T>> {
    let [a, b, c] = src.shape;
    let mut out = Vec::with_capacity(a * b * c);
    for idx in indices([a, b, c]) {
        out.push(comp(&src[idx], want)?);
    }
    let mut it = out.into_iter();
    Ok(Tensor3::from_fn([a, b, c], |_| it.next().expect("sized")))
}

fn compose4<T: Real>(
    src: &Tensor4<T>,
    want: usize,
    comp: &impl Fn(&Jet<T>, usize) -> Result<Jet<T>>,
) -> Result<Tensor4<T>> {
    let [a, b, c, d] = src.shape;
    let mut out = Vec::with_capacity(a * b * c * d);
    for idx in indices([a, b, c, d]) {
        out.push(comp(&src[idx], want)?);
    }
    let mut it = out.into_iter();
    Ok(Tensor4::from_fn([a, b, c, d], |_| it.next().expect("sized")))
}

// ---------------------------------------------------------------------------
// frame contractions of ambient tensors
// ---------------------------------------------------------------------------

impl<T: Real> EmbeddedGeometry<T> {
    fn xo(&self) -> usize {
        self.ext.lc_h.order
    }

    /// Tangential Schouten `P_{alpha beta}`.
    pub fn schouten_tt(&self) -> Tensor2<T> {
        let k = self.k;
        Tensor2::from_fn([k, k], |[a, b]| {
            self.contract2(&self.amb_on_sigma.schouten, Slot::T(a), Slot::T(b))
        })
    }

    /// Mixed Schouten `P_{alpha a'}`.
    pub fn schouten_tn(&self) -> Tensor2<T> {
        let (k, nk) = (self.k, self.n - self.k);
        Tensor2::from_fn([k, nk], |[a, ap]| {
            self.contract2(&self.amb_on_sigma.schouten, Slot::T(a), Slot::N(ap))
        })
    }

    /// Normal Schouten `P_{a' b'}`.
    pub fn schouten_nn(&self) -> Tensor2<T> {
        let nk = self.n - self.k;
        Tensor2::from_fn([nk, nk], |[ap, bp]| {
            self.contract2(&self.amb_on_sigma.schouten, Slot::N(ap), Slot::N(bp))
        })
    }

    /// Tangential Schouten trace `P_alpha^alpha`.
    pub fn schouten_t_trace(&self) -> Jet<T> {
        crate::tensor::trace2(&self.schouten_tt(), &self.ext.lc_h.g_inv)
    }

    /// Frame vector for a contraction slot.
    fn slot_vec(&self, s: Slot) -> &[Jet<T>] {
        match s {
            Slot::T(a) => &self.ext.tangent[a],
            Slot::N(ap) => &self.ext.normal[ap],
        }
    }

    pub fn contract2(&self, t: &Tensor2<T>, s0: Slot, s1: Slot) -> Jet<T> {
        let n = self.n;
        let (v0, v1) = (self.slot_vec(s0), self.slot_vec(s1));
        sum_jets(
            self.k,
            self.xo(),
            indices([n, n]).map(|[i, j]| &(&t[[i, j]] * &v0[i]) * &v1[j]),
        )
    }

    pub fn contract3(&self, t: &Tensor3<T>, s0: Slot, s1: Slot, s2: Slot) -> Jet<T> {
        let n = self.n;
        let (v0, v1, v2) = (self.slot_vec(s0), self.slot_vec(s1), self.slot_vec(s2));
        sum_jets(
            self.k,
            self.xo(),
            indices([n, n, n]).map(|[i, j, m]| {
                &(&(&t[[i, j, m]] * &v0[i]) * &v1[j]) * &v2[m]
            }),
        )
    }

    pub fn contract4(&self, t: &Tensor4<T>, s: [Slot; 4]) -> Jet<T> {
        let n = self.n;
        let vs: Vec<&[Jet<T>]> = s.iter().map(|&si| self.slot_vec(si)).collect();
        sum_jets(
            self.k,
            self.xo(),
            indices([n, n, n, n]).map(|[i, j, m, p]| {
                &(&(&(&t[[i, j, m, p]] * &vs[0][i]) * &vs[1][j]) * &vs[2][m]) * &vs[3][p]
            }),
        )
    }

    /// Weyl contraction `W_{alpha gamma beta}^gamma` (trace over the middle
    /// tangential pair with h).
    pub fn weyl_t_trace(&self) -> Tensor2<T> {
        let k = self.k;
        let hin = &self.ext.lc_h.g_inv;
        Tensor2::from_fn([k, k], |[a, b]| {
            sum_jets(
                k,
                self.xo(),
                indices([k, k]).map(|[c, d]| {
                    &hin[[c, d]]
                        * &self.contract4(
                            &self.amb_on_sigma.weyl,
                            [Slot::T(a), Slot::T(c), Slot::T(b), Slot::T(d)],
                        )
                }),
            )
        })
    }

    /// Full tangential Weyl trace `W_{alpha beta}^{alpha beta}`.
    pub fn weyl_t_trace2(&self) -> Jet<T> {
        crate::tensor::trace2(&self.weyl_t_trace(), &self.ext.lc_h.g_inv)
    }

    /// `W^alpha_{a' alpha b'}` indexed by the two normal slots.
    pub fn weyl_nn_trace(&self) -> Tensor2<T> {
        let (k, nk) = (self.k, self.n - self.k);
        let hin = &self.ext.lc_h.g_inv;
        Tensor2::from_fn([nk, nk], |[ap, bp]| {
            sum_jets(
                k,
                self.xo(),
                indices([k, k]).map(|[a, b]| {
                    &hin[[a, b]]
                        * &self.contract4(
                            &self.amb_on_sigma.weyl,
                            [Slot::T(a), Slot::N(ap), Slot::T(b), Slot::N(bp)],
                        )
                }),
            )
        })
    }

    /// `W_{alpha beta a'}^beta` indexed `[alpha][a']`.
    pub fn weyl_tn_trace(&self) -> Tensor2<T> {
        let (k, nk) = (self.k, self.n - self.k);
        let hin = &self.ext.lc_h.g_inv;
        Tensor2::from_fn([k, nk], |[a, ap]| {
            sum_jets(
                k,
                self.xo(),
                indices([k, k]).map(|[b, c]| {
                    &hin[[b, c]]
                        * &self.contract4(
                            &self.amb_on_sigma.weyl,
                            [Slot::T(a), Slot::T(b), Slot::N(ap), Slot::T(c)],
                        )
                }),
            )
        })
    }

    /// Cotton contraction `C^alpha_{alpha a'}` per normal direction.
    pub fn cotton_t_trace(&self) -> Vec<Jet<T>> {
        let (k, nk) = (self.k, self.n - self.k);
        let hin = &self.ext.lc_h.g_inv;
        (0..nk)
            .map(|ap| {
                sum_jets(
                    k,
                    self.xo(),
                    indices([k, k]).map(|[a, b]| {
                        &hin[[a, b]]
                            * &self.contract3(
                                &self.amb_on_sigma.cotton,
                                Slot::T(a),
                                Slot::T(b),
                                Slot::N(ap),
                            )
                    }),
                )
            })
            .collect()
    }

    /// Tangential Bach trace `B^alpha_alpha`.
    pub fn bach_t_trace(&self) -> Jet<T> {
        let k = self.k;
        let hin = &self.ext.lc_h.g_inv;
        sum_jets(
            k,
            self.xo(),
            indices([k, k]).map(|[a, b]| {
                &hin[[a, b]] * &self.contract2(&self.amb_on_sigma.bach, Slot::T(a), Slot::T(b))
            }),
        )
    }

    /// Induced covariant derivative of the mean curvature, `D_alpha H^{a'}`.
    pub fn nabla_h_mean(&self) -> Result<Tensor2<T>> {
        self.ext.nabla_normal(&self.ext.h_mean)
    }

    /// Intrinsic curvature of the induced metric (needs k >= 3).
    pub fn intrinsic_pack(&self) -> Result<CurvaturePack<T>> {
        curvature_pack(self.ext.lc_h.clone())
    }

    /// Intrinsic Schouten trace of the induced metric (k >= 2).
    pub fn intrinsic_j(&self) -> Result<Jet<T>> {
        schouten_trace_from_scalar(&self.ext.lc_h)
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Slot {
    /// Tangent frame vector by chart index.
    T(usize),
    /// Normal frame vector by frame index.
    N(usize),
}

// ---------------------------------------------------------------------------
// Fialkow data and Gauss-Codazzi residuals
// ---------------------------------------------------------------------------

/// The conformally invariant Fialkow data of the embedding.
#[derive(Clone, Debug)]
pub struct FialkowPack<T: Real> {
    /// Fialkow tensor (k >= 3 only).
    pub f: Option<Tensor2<T>>,
    /// Fialkow scalar `G = (|L0|^2 - W_{ab}^{ab}) / (2(k-1))`.
    pub g: Jet<T>,
    /// `D_{alpha a'} = (D^beta L0_{alpha beta a'} + W_{alpha beta a'}^beta) / (1-k)`.
    pub d: Tensor2<T>,
}

pub fn fialkow_pack<T: Real>(eg: &EmbeddedGeometry<T>) -> Result<FialkowPack<T>> {
    let (k, nk) = (eg.k, eg.n - eg.k);
    if k < 2 {
        return Err(Error::UnsupportedDimension(
            "Fialkow data needs k >= 2".into(),
        ));
    }
    let ext = &eg.ext;
    let xo = ext.lc_h.order;

    // |L0|^2 with all chart indices traced by h
    let l0_sq = sum_jets(
        k,
        xo,
        indices([nk, k, k, k, k]).map(|[ap, a, b, c, d]| {
            &(&ext.lc_h.g_inv[[a, c]] * &ext.lc_h.g_inv[[b, d]])
                * &(&ext.l0[[ap, a, b]] * &ext.l0[[ap, c, d]])
        }),
    );
    let g_scalar =
        (&l0_sq - &eg.weyl_t_trace2()).scale(T::one() / (T::of(2.0) * T::usize(k - 1)));

    let f = if k >= 3 {
        let wt = eg.weyl_t_trace();
        let coef = T::one() / T::usize(k - 2);
        Some(Tensor2::from_fn([k, k], |[a, b]| {
            // L0_{a c a'} L0_b^{c a'} = h^{cd} L0_{a c a'} L0_{b d a'}
            let ll = sum_jets(
                k,
                xo,
                indices([nk, k, k]).map(|[ap, c, d]| {
                    &(&ext.lc_h.g_inv[[c, d]] * &ext.l0[[ap, a, c]]) * &ext.l0[[ap, b, d]]
                }),
            );
            (&(&ll - &wt[[a, b]]) - &(&g_scalar * &ext.lc_h.g[[a, b]])).scale(coef)
        }))
    } else {
        None
    };

    // D_{alpha a'} = (1/(1-k)) (D^beta L0_{alpha beta a'} + W_{alpha beta a'}^beta)
    let nabla_l0 = ext.nabla_sym2_normal(&ext.l0)?;
    let div_l0 = Tensor2::from_fn([k, nk], |[a, ap]| {
        sum_jets(
            k,
            xo,
            indices([k, k]).map(|[b, c]| &ext.lc_h.g_inv[[b, c]] * &nabla_l0[[c, ap, a, b]]),
        )
    });
    let w_tn = eg.weyl_tn_trace();
    let coef_d = T::one() / (T::one() - T::usize(k));
    let d = Tensor2::from_fn([k, nk], |[a, ap]| {
        (&div_l0[[a, ap]] + &w_tn[[a, ap]]).scale(coef_d)
    });

    Ok(FialkowPack { f, g: g_scalar, d })
}

/// Residual norms (max-abs at the point) of the Gauss-Codazzi consequences
/// relating ambient curvature, extrinsic data and intrinsic curvature.
#[derive(Clone, Debug)]
pub struct GaussCodazziResiduals<T> {
    /// `P_ab + H L_ab - |H|^2 h_ab / 2 - (Pbar_ab + F_ab)`; needs k >= 3.
    pub gc1: Option<T>,
    /// `P_{a a'} - D_a H_{a'} - D_{a a'}`.
    pub gc2: T,
    /// `P_a^a + k |H|^2 / 2 - (Jbar + G)`.
    pub gctrace: T,
}

pub fn gauss_codazzi_residuals<T: Real>(
    eg: &EmbeddedGeometry<T>,
    fp: &FialkowPack<T>,
) -> Result<GaussCodazziResiduals<T>> {
    let (k, nk) = (eg.k, eg.n - eg.k);
    if k < 2 {
        return Err(Error::UnsupportedDimension(
            "Gauss-Codazzi residuals need k >= 2".into(),
        ));
    }
    let ext = &eg.ext;
    let p_tt = eg.schouten_tt();
    let half_h2 = ext.h_mean_sq().scale(T::ratio(1, 2));

    let gc1 = match &fp.f {
        Some(f) if k >= 3 => {
            let intrinsic = eg.intrinsic_pack()?;
            let mut worst = T::zero();
            for [a, b] in indices([k, k]) {
                let hl = sum_jets(
                    k,
                    ext.lc_h.order,
                    (0..nk).map(|ap| &ext.h_mean[ap] * &ext.l[[ap, a, b]]),
                );
                let lhs = &(&p_tt[[a, b]] + &hl) - &(&half_h2 * &ext.lc_h.g[[a, b]]);
                let rhs = &intrinsic.schouten[[a, b]] + &f[[a, b]];
                worst = worst.max((lhs.value() - rhs.value()).abs());
            }
            Some(worst)
        }
        _ => None,
    };

    let p_tn = eg.schouten_tn();
    let dh = eg.nabla_h_mean()?;
    let mut gc2 = T::zero();
    for [a, ap] in indices([k, nk]) {
        let lhs = p_tn[[a, ap]].value() - dh[[a, ap]].value();
        gc2 = gc2.max((lhs - fp.d[[a, ap]].value()).abs());
    }

    let jbar = eg.intrinsic_j()?;
    let lhs = eg.schouten_t_trace().value()
        + T::usize(k) * T::ratio(1, 2) * ext.h_mean_sq().value();
    let gctrace = (lhs - jbar.value() - fp.g.value()).abs();

    Ok(GaussCodazziResiduals { gc1, gc2, gctrace })
}

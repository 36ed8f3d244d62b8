//! Geometry registry, geometry-definition files, verification commands and
//! machine-readable reports.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::einstein;
use crate::error::{Error, Result};
use crate::geometry::MetricChart;
use crate::jets::{evaluate, parse, Expr, Jet};
use crate::normalform;
use crate::operators::{self, admissible};
use crate::submanifold::{embedded_geometry, fialkow_pack, gauss_codazzi_residuals, Embedding};
use crate::tensor::indices;

/// A fully resolved geometry: ambient chart metric, embedded submanifold,
/// optional Einstein tag and conformal factor, and a sampling box.
#[derive(Clone, Debug)]
pub struct GeometrySpec {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub metric: MetricChart,
    pub embedding: Embedding,
    pub lambda: Option<f64>,
    pub omega: Option<Expr>,
    pub sample_box: Vec<[f64; 2]>,
}

/// On-disk JSON schema for a geometry definition.
#[derive(Debug, Deserialize)]
struct GeometryFile {
    n: usize,
    metric: Vec<Vec<String>>,
    k: usize,
    #[serde(default)]
    embedding: Option<Vec<String>>,
    #[serde(default)]
    graph: Option<Vec<String>>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    omega: Option<String>,
    #[serde(default, rename = "box")]
    sample_box: Option<Vec<[f64; 2]>>,
}

/// Parse a geometry-definition file (UTF-8 JSON).
pub fn parse_geometry(bytes: &[u8]) -> Result<GeometrySpec> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Spec(format!("geometry file is not UTF-8: {e}")))?;
    let file: GeometryFile = serde_json::from_str(text)?;
    let (n, k) = (file.n, file.k);
    if !(1 <= k && k < n) {
        return Err(Error::Spec(format!(
            "need 1 <= k <= n-1, got k = {k}, n = {n}"
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for row in &file.metric {
        rows.push(row.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?);
    }
    let metric = MetricChart::new(n, rows)?;
    let embedding = match (&file.embedding, &file.graph) {
        (Some(_), Some(_)) => {
            return Err(Error::Spec(
                "give either 'embedding' or 'graph', not both".into(),
            ))
        }
        (Some(comps), None) => {
            let comps = comps.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
            Embedding::new(k, n, comps)?
        }
        (None, Some(heights)) => {
            let heights = heights.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
            Embedding::graph(k, n, heights)?
        }
        (None, None) => {
            return Err(Error::Spec(
                "geometry needs an 'embedding' or 'graph' field".into(),
            ))
        }
    };
    let omega = file.omega.as_deref().map(parse).transpose()?;
    let sample_box = match file.sample_box {
        Some(b) if b.len() == k => b,
        Some(b) => {
            return Err(Error::Spec(format!(
                "sampling box needs {k} intervals, got {}",
                b.len()
            )))
        }
        None => vec![[-0.5, 0.5]; k],
    };
    Ok(GeometrySpec {
        name: "(file)".into(),
        n,
        k,
        metric,
        embedding,
        lambda: file.lambda,
        omega,
        sample_box,
    })
}

fn sphere_chart(n: usize) -> MetricChart {
    let sq: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
    let denom = format!("(1+{})^2", sq.join("+"));
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        parse(&format!("4/{denom}")).expect("literal")
                    } else {
                        Expr::num(0.0)
                    }
                })
                .collect()
        })
        .collect();
    MetricChart::new(n, rows).expect("sphere chart")
}

/// Unit equatorial k-sphere inside the stereographic chart of its ambient
/// sphere (padded with zeros up to ambient dimension n), scaled by `radius`.
fn sphere_embedding(k: usize, n: usize, radius: f64) -> Embedding {
    let sq: Vec<String> = (1..=k).map(|i| format!("x{i}^2")).collect();
    let q = format!("(1+{})", sq.join("+"));
    let mut comps: Vec<Expr> = (1..=k)
        .map(|i| parse(&format!("{radius}*2*x{i}/{q}")).expect("literal"))
        .collect();
    comps.push(parse(&format!("{radius}*({}-1)/{q}", sq.join("+"))).expect("literal"));
    while comps.len() < n {
        comps.push(Expr::num(0.0));
    }
    Embedding::new(k, n, comps).expect("sphere embedding")
}

/// All exponent vectors of total degree <= maxdeg over nvars variables.
fn monomials(nvars: usize, maxdeg: usize) -> Vec<Vec<u8>> {
    fn rec(nvars: usize, deg_left: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == nvars {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=deg_left {
            prefix.push(e as u8);
            rec(nvars, deg_left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(nvars, maxdeg, &mut Vec::new(), &mut out);
    out
}

/// Seeded random polynomial of the given degree with uniform coefficients in
/// `[-amp, amp]`, excluding the constant term when `skip_constant` is set.
pub fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, maxdeg: usize, amp: f64, skip_constant: bool) -> Expr {
    let mut acc = Expr::num(0.0);
    for expo in monomials(nvars, maxdeg) {
        let deg: usize = expo.iter().map(|&e| e as usize).sum();
        if deg == 0 && skip_constant {
            continue;
        }
        let c: f64 = rng.gen_range(-amp..amp);
        let mut term = Expr::num(c);
        for (i, &e) in expo.iter().enumerate() {
            if e == 1 {
                term = Expr::mul(term, Expr::var(i));
            } else if e > 1 {
                term = Expr::mul(term, Expr::Pow(Box::new(Expr::var(i)), e as i32));
            }
        }
        acc = Expr::add(acc, term);
    }
    acc
}

/// Seeded perturbed-flat family: conformally flat ambient metric with a
/// random cubic factor and a random cubic graph submanifold.
pub fn perturbed_family(k: usize, n: usize, seed: u64) -> GeometrySpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let omega = random_poly(&mut rng, n, 3, 0.05, false);
    let metric = MetricChart::euclidean(n).conformal_rescale(&omega);
    let heights: Vec<Expr> = (0..n - k)
        .map(|_| random_poly(&mut rng, k, 3, 0.05, false))
        .collect();
    let embedding = Embedding::graph(k, n, heights).expect("graph dims");
    GeometrySpec {
        name: format!("perturbed-random[k={k},n={n},seed={seed}]"),
        n,
        k,
        metric,
        embedding,
        lambda: None,
        omega: None,
        sample_box: vec![[-0.5, 0.5]; k],
    }
}

/// Built-in geometries resolvable by name without a file.
pub fn builtin(name: &str) -> Option<GeometrySpec> {
    let spec = match name {
        "euclidean3" => GeometrySpec {
            name: name.into(),
            n: 3,
            k: 2,
            metric: MetricChart::euclidean(3),
            embedding: Embedding::graph(2, 3, vec![Expr::num(0.0)]).expect("plane"),
            lambda: Some(0.0),
            omega: None,
            sample_box: vec![[-0.8, 0.8]; 2],
        },
        "sphere3" | "equator-s2-in-s3" => GeometrySpec {
            name: name.into(),
            n: 3,
            k: 2,
            metric: sphere_chart(3),
            embedding: sphere_embedding(2, 3, 1.0),
            lambda: Some(1.0),
            omega: None,
            sample_box: vec![[-0.8, 0.8]; 2],
        },
        "sphere5" | "equator-s4-in-s5" => GeometrySpec {
            name: name.into(),
            n: 5,
            k: 4,
            metric: sphere_chart(5),
            embedding: sphere_embedding(4, 5, 1.0),
            lambda: Some(1.0),
            omega: None,
            sample_box: vec![[-0.8, 0.8]; 4],
        },
        "great-circle-s1-in-s3" => GeometrySpec {
            name: name.into(),
            n: 3,
            k: 1,
            metric: sphere_chart(3),
            embedding: Embedding::new(
                1,
                3,
                vec![
                    parse("cos(x1)").expect("literal"),
                    parse("sin(x1)").expect("literal"),
                    Expr::num(0.0),
                ],
            )
            .expect("circle"),
            lambda: Some(1.0),
            omega: None,
            sample_box: vec![[0.0, 6.283185307179586]],
        },
        "clifford-torus" => GeometrySpec {
            name: name.into(),
            n: 3,
            k: 2,
            metric: sphere_chart(3),
            embedding: Embedding::new(
                2,
                3,
                vec![
                    parse("cos(x1)/(sqrt(2) - sin(x2))").expect("literal"),
                    parse("sin(x1)/(sqrt(2) - sin(x2))").expect("literal"),
                    parse("cos(x2)/(sqrt(2) - sin(x2))").expect("literal"),
                ],
            )
            .expect("torus"),
            lambda: Some(1.0),
            omega: None,
            sample_box: vec![[0.0, 6.283185307179586]; 2],
        },
        // small (radius 0.6 in the chart) umbilic 3-sphere in the round
        // 5-sphere: umbilic but not totally geodesic
        "small-sphere-umbilic" => GeometrySpec {
            name: name.into(),
            n: 5,
            k: 3,
            metric: sphere_chart(5),
            embedding: sphere_embedding(3, 5, 0.6),
            lambda: Some(1.0),
            omega: None,
            sample_box: vec![[-0.8, 0.8]; 3],
        },
        "perturbed-random" => perturbed_family(3, 5, 0),
        _ => return None,
    };
    Some(spec)
}

pub fn builtin_names() -> Vec<&'static str> {
    vec![
        "euclidean3",
        "sphere3",
        "sphere5",
        "equator-s2-in-s3",
        "great-circle-s1-in-s3",
        "clifford-torus",
        "small-sphere-umbilic",
        "perturbed-random",
    ]
}

/// Resolve a geometry by built-in name or file path.
pub fn resolve(name_or_path: &str) -> Result<GeometrySpec> {
    if let Some(spec) = builtin(name_or_path) {
        return Ok(spec);
    }
    let path = std::path::Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::Spec(format!(
            "'{name_or_path}' is neither a built-in geometry ({}) nor a file",
            builtin_names().join(", ")
        )));
    }
    let bytes = std::fs::read(path)?;
    let mut spec = parse_geometry(&bytes)?;
    spec.name = name_or_path.to_string();
    Ok(spec)
}

// ---------------------------------------------------------------------------
// commands and reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum VerifyKind {
    Covariance,
    QCovariance,
    GaussCodazzi,
    Pipeline,
    U4,
    Factorization,
    Umbilic,
    Decomposition,
}

#[derive(Clone, Debug)]
pub enum CliCommand {
    Curvature,
    Extrinsic,
    QCurv { level: usize },
    Apply { level: usize, f: String },
    Verify { kind: VerifyKind, level: Option<usize> },
    Spectrum { k: u32, l: u32, mmax: u32 },
}

#[derive(Clone, Debug)]
pub struct Options {
    pub tol: f64,
    pub seed: u64,
    pub points: usize,
    pub order: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: 1e-6,
            seed: 0,
            points: 5,
            order: 6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub values: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
}

/// Machine-readable command report. `wall_ms` is the only field excluded
/// from byte-level determinism comparisons.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub geometry: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub points: Vec<PointRecord>,
    pub pass: bool,
    pub tol: f64,
    pub paper_ref: String,
    pub wall_ms: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("command,geometry,point,kind,key,value\n");
        for (i, rec) in self.points.iter().enumerate() {
            for (j, x) in rec.x.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},coordinate,x{},{}\n",
                    self.command,
                    self.geometry,
                    i,
                    j + 1,
                    x
                ));
            }
            for (k, v) in &rec.values {
                out.push_str(&format!(
                    "{},{},{},value,{},{}\n",
                    self.command, self.geometry, i, k, v
                ));
            }
            for (k, v) in &rec.residuals {
                out.push_str(&format!(
                    "{},{},{},residual,{},{}\n",
                    self.command, self.geometry, i, k, v
                ));
            }
        }
        out.push_str(&format!(
            "{},{},,summary,pass,{}\n",
            self.command, self.geometry, self.pass
        ));
        out
    }
}

fn sample_points(spec: &GeometrySpec, opts: &Options, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..opts.points)
        .map(|_| {
            spec.sample_box
                .iter()
                .map(|&[lo, hi]| rng.gen_range(lo..hi))
                .collect()
        })
        .collect()
}

fn mixed_tol_ok(residual: f64, scale: f64, tol: f64) -> bool {
    residual <= tol * (1.0 + scale.abs())
}

/// Run a command against a geometry, producing a deterministic report.
pub fn run_command(
    cmd: &CliCommand,
    spec: Option<&GeometrySpec>,
    opts: &Options,
) -> Result<Report> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut params: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    params.insert("order".into(), opts.order.into());
    params.insert("points".into(), opts.points.into());

    let need_spec = || -> Result<&GeometrySpec> {
        spec.ok_or_else(|| Error::InvalidParameter("this command needs --geometry".into()))
    };

    let (command, geometry, points, pass, paper_ref) = match cmd {
        CliCommand::Curvature => {
            let spec = need_spec()?;
            let pts = sample_points(spec, opts, &mut rng);
            let mut recs = Vec::new();
            let mut all_pass = true;
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let pack = &eg.ambient;
                let mut values = BTreeMap::new();
                values.insert("scalar_curvature".into(), pack.core.scal.value());
                values.insert("weyl_max".into(), pack.weyl.max_abs_value());
                values.insert("cotton_max".into(), pack.cotton.max_abs_value());
                values.insert("bach_max".into(), pack.bach.max_abs_value());
                values.insert("schouten_trace".into(), pack.j.value());
                // Riem = W + P (x) g residual
                let nn = spec.n;
                let mut dec = 0.0f64;
                for [i, j, kk, l] in indices([nn, nn, nn, nn]) {
                    let kn = pack.schouten[[i, kk]].value() * pack.lc.g[[j, l]].value()
                        - pack.schouten[[j, kk]].value() * pack.lc.g[[i, l]].value()
                        - pack.schouten[[i, l]].value() * pack.lc.g[[j, kk]].value()
                        + pack.schouten[[j, l]].value() * pack.lc.g[[i, kk]].value();
                    dec = dec.max(
                        (pack.core.riem[[i, j, kk, l]].value()
                            - pack.weyl[[i, j, kk, l]].value()
                            - kn)
                            .abs(),
                    );
                }
                let mut residuals = BTreeMap::new();
                residuals.insert("riemann_decomposition".into(), dec);
                all_pass &= mixed_tol_ok(dec, pack.core.riem.max_abs_value(), opts.tol);
                recs.push(PointRecord {
                    x,
                    values,
                    residuals,
                });
            }
            (
                "curvature",
                spec.name.clone(),
                recs,
                all_pass,
                "ambient curvature conventions: Schouten, Weyl, Cotton, Bach".to_string(),
            )
        }

        CliCommand::Extrinsic => {
            let spec = need_spec()?;
            let pts = sample_points(spec, opts, &mut rng);
            let mut recs = Vec::new();
            let mut all_pass = true;
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let ext = &eg.ext;
                let (k, n, nk) = (eg.k, eg.n, eg.n - eg.k);
                let mut values = BTreeMap::new();
                values.insert("h_mean_norm_sq".into(), ext.h_mean_sq().value());
                let mut l0_sq = 0.0;
                for [ap, a, b, c, d] in indices([nk, k, k, k, k]) {
                    l0_sq += ext.lc_h.g_inv[[a, c]].value()
                        * ext.lc_h.g_inv[[b, d]].value()
                        * ext.l0[[ap, a, b]].value()
                        * ext.l0[[ap, c, d]].value();
                }
                values.insert("l0_norm_sq".into(), l0_sq);
                if k >= 2 {
                    let fp = fialkow_pack(&eg)?;
                    values.insert("fialkow_scalar".into(), fp.g.value());
                }
                // frame quality residuals
                let mut ortho = 0.0f64;
                for [ap, bp] in indices([nk, nk]) {
                    let mut ip = 0.0;
                    for [i, j] in indices([n, n]) {
                        ip += ext.g_sigma[[i, j]].value()
                            * ext.normal[ap][i].value()
                            * ext.normal[bp][j].value();
                    }
                    let want = if ap == bp { 1.0 } else { 0.0 };
                    ortho = ortho.max((ip - want).abs());
                }
                let mut tangency = 0.0f64;
                for [ap, a] in indices([nk, k]) {
                    let mut ip = 0.0;
                    for [i, j] in indices([n, n]) {
                        ip += ext.g_sigma[[i, j]].value()
                            * ext.normal[ap][i].value()
                            * ext.tangent[a][j].value();
                    }
                    tangency = tangency.max(ip.abs());
                }
                let mut residuals = BTreeMap::new();
                residuals.insert("frame_orthonormality".into(), ortho);
                residuals.insert("frame_tangency".into(), tangency);
                all_pass &= ortho <= opts.tol && tangency <= opts.tol;
                recs.push(PointRecord {
                    x,
                    values,
                    residuals,
                });
            }
            (
                "extrinsic",
                spec.name.clone(),
                recs,
                all_pass,
                "second fundamental form, mean curvature and Fialkow data".to_string(),
            )
        }

        CliCommand::QCurv { level } => {
            let spec = need_spec()?;
            params.insert("level".into(), (*level).into());
            let pts = sample_points(spec, opts, &mut rng);
            let mut recs = Vec::new();
            let mut all_pass = true;
            // Einstein + minimal oracle when a lambda tag is present
            let oracle = |eg: &crate::submanifold::EmbeddedGeometry<f64>| -> Option<f64> {
                let lambda = spec.lambda?;
                if eg.ext.h_mean_sq().value().abs() > 1e-8 {
                    return None;
                }
                Some(einstein::q_closed_form(spec.k as u32, *level as u32, lambda))
            };
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let q = match level {
                    1 => operators::extrinsic_q2(&eg).value(),
                    2 => operators::extrinsic_coefficients(&eg)?.q4.value(),
                    _ => {
                        return Err(Error::InvalidParameter(
                            "level must be 1 or 2".into(),
                        ))
                    }
                };
                let mut values = BTreeMap::new();
                values.insert(format!("q{}", 2 * level), q);
                let mut residuals = BTreeMap::new();
                if let Some(want) = oracle(&eg) {
                    let resid = (q - want).abs();
                    residuals.insert("einstein_oracle".into(), resid);
                    all_pass &= mixed_tol_ok(resid, want, opts.tol);
                }
                recs.push(PointRecord {
                    x,
                    values,
                    residuals,
                });
            }
            (
                "qcurv",
                spec.name.clone(),
                recs,
                all_pass,
                "extrinsic Q-curvature closed forms".to_string(),
            )
        }

        CliCommand::Apply { level, f } => {
            let spec = need_spec()?;
            params.insert("level".into(), (*level).into());
            params.insert("f".into(), f.clone().into());
            if !admissible(spec.k, spec.n, *level)? {
                return Err(Error::Inadmissible {
                    k: spec.k,
                    n: spec.n,
                    l: *level,
                });
            }
            let f_expr = parse(f)?;
            let pts = sample_points(spec, opts, &mut rng);
            let mut recs = Vec::new();
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let f_jet: Jet<f64> = evaluate(&f_expr, &x, opts.order)?;
                let v = match level {
                    1 => operators::apply_p2(
                        &operators::q2_only_coefficients(&eg),
                        &eg.ext.lc_h,
                        &f_jet,
                    )?,
                    2 => {
                        let c = operators::extrinsic_coefficients(&eg)?;
                        operators::apply_p4(&c, &eg.ext.lc_h, &f_jet)?
                    }
                    _ => {
                        return Err(Error::InvalidParameter(
                            "level must be 1 or 2".into(),
                        ))
                    }
                };
                let mut values = BTreeMap::new();
                values.insert(format!("p{}_f", 2 * level), v);
                values.insert("f".into(), f_jet.value());
                recs.push(PointRecord {
                    x,
                    values,
                    residuals: BTreeMap::new(),
                });
            }
            (
                "apply",
                spec.name.clone(),
                recs,
                true,
                "extrinsic operator closed forms".to_string(),
            )
        }

        CliCommand::Verify { kind, level } => {
            let spec = need_spec()?;
            let (recs, pass, paper_ref) = run_verify(kind, *level, spec, opts, &mut rng, &mut params)?;
            (
                "verify",
                spec.name.clone(),
                recs,
                pass,
                paper_ref,
            )
        }

        CliCommand::Spectrum { k, l, mmax } => {
            params.insert("k".into(), (*k).into());
            params.insert("l".into(), (*l).into());
            params.insert("mmax".into(), (*mmax).into());
            let mut recs = Vec::new();
            for m in 0..=*mmax {
                let ev = einstein::sphere_eigenvalue(*k, m, *l);
                let mut values = BTreeMap::new();
                values.insert(
                    "eigenvalue".into(),
                    (*ev.numer() as f64) / (*ev.denom() as f64),
                );
                recs.push(PointRecord {
                    x: vec![m as f64],
                    values,
                    residuals: BTreeMap::new(),
                });
            }
            (
                "spectrum",
                "(sphere)".to_string(),
                recs,
                true,
                "sphere spectrum of the factorized operators".to_string(),
            )
        }
    };

    Ok(Report {
        command: command.to_string(),
        geometry,
        params,
        seed: opts.seed,
        points,
        pass,
        tol: opts.tol,
        paper_ref,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[allow(clippy::too_many_lines)]
fn run_verify(
    kind: &VerifyKind,
    level: Option<usize>,
    spec: &GeometrySpec,
    opts: &Options,
    rng: &mut ChaCha8Rng,
    params: &mut BTreeMap<String, serde_json::Value>,
) -> Result<(Vec<PointRecord>, bool, String)> {
    let mut recs = Vec::new();
    let mut all_pass = true;
    let (k, n) = (spec.k, spec.n);

    let paper_ref = match kind {
        VerifyKind::Covariance => {
            let levels: Vec<usize> = match level {
                Some(l) => vec![l],
                None => [1usize, 2]
                    .into_iter()
                    .filter(|&l| admissible(k, n, l).unwrap_or(false))
                    .collect(),
            };
            if let Some(l) = level {
                if !admissible(k, n, l)? {
                    return Err(Error::Inadmissible { k, n, l });
                }
            }
            params.insert("levels".into(), format!("{levels:?}").into());
            let omegas: Vec<Expr> = match &spec.omega {
                Some(o) => vec![o.clone()],
                None => (0..3).map(|_| random_poly(rng, n, 3, 0.05, false)).collect(),
            };
            let f = random_poly(rng, k, 3, 0.5, false);
            let pts = sample_points(spec, opts, rng);
            for x in &pts {
                for (oi, om) in omegas.iter().enumerate() {
                    for &l in &levels {
                        let check = operators::covariance_residual(
                            &spec.metric,
                            &spec.embedding,
                            om,
                            &f,
                            x,
                            l,
                            opts.order,
                        )?;
                        let mut values = BTreeMap::new();
                        values.insert(format!("p{}_hat_omega{oi}", 2 * l), check.lhs);
                        let mut residuals = BTreeMap::new();
                        residuals
                            .insert(format!("covariance_l{l}_omega{oi}"), check.residual);
                        all_pass &= check.residual <= opts.tol * check.denom;
                        recs.push(PointRecord {
                            x: x.clone(),
                            values,
                            residuals,
                        });
                    }
                }
            }
            "conformal covariance law for the extrinsic operators".to_string()
        }

        VerifyKind::QCovariance => {
            let l = level.unwrap_or(if k == 2 || k == 4 { k / 2 } else { 1 });
            if !admissible(k, n, l)? {
                return Err(Error::Inadmissible { k, n, l });
            }
            params.insert("level".into(), l.into());
            params.insert("critical".into(), (k == 2 * l).into());
            let omegas: Vec<Expr> = match &spec.omega {
                Some(o) => vec![o.clone()],
                None => (0..3).map(|_| random_poly(rng, n, 3, 0.05, false)).collect(),
            };
            let pts = sample_points(spec, opts, rng);
            for x in &pts {
                for (oi, om) in omegas.iter().enumerate() {
                    let check = operators::q_covariance_residual(
                        &spec.metric,
                        &spec.embedding,
                        om,
                        x,
                        l,
                        opts.order,
                    )?;
                    let mut residuals = BTreeMap::new();
                    residuals.insert(format!("q_transform_omega{oi}"), check.residual);
                    all_pass &= check.residual <= opts.tol * check.denom;
                    recs.push(PointRecord {
                        x: x.clone(),
                        values: BTreeMap::new(),
                        residuals,
                    });
                }
            }
            "Q-curvature conformal transformation law".to_string()
        }

        VerifyKind::GaussCodazzi => {
            if k < 2 {
                return Err(Error::UnsupportedDimension(
                    "Gauss-Codazzi verification needs k >= 2".into(),
                ));
            }
            let pts = sample_points(spec, opts, rng);
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let fp = fialkow_pack(&eg)?;
                let gc = gauss_codazzi_residuals(&eg, &fp)?;
                let mut residuals = BTreeMap::new();
                if let Some(g1) = gc.gc1 {
                    residuals.insert("gc1".into(), g1);
                    all_pass &= g1 <= opts.tol;
                }
                residuals.insert("gc2".into(), gc.gc2);
                residuals.insert("gctrace".into(), gc.gctrace);
                all_pass &= gc.gc2 <= opts.tol && gc.gctrace <= opts.tol;
                recs.push(PointRecord {
                    x,
                    values: BTreeMap::new(),
                    residuals,
                });
            }
            "Gauss-Codazzi trace identities with the Fialkow data".to_string()
        }

        VerifyKind::Pipeline => {
            if !admissible(k, n, 2)? {
                return Err(Error::Inadmissible { k, n, l: 2 });
            }
            let f = random_poly(rng, k, 3, 0.5, false);
            let u4: Vec<f64> = (0..n - k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pts = sample_points(spec, opts, rng);
            for x in pts {
                let via_pipeline = normalform::pipeline_apply_p4(
                    &spec.metric,
                    &spec.embedding,
                    &u4,
                    &f,
                    &x,
                    opts.order,
                )?;
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let coeffs = operators::extrinsic_coefficients(&eg)?;
                let f_jet: Jet<f64> = evaluate(&f, &x, opts.order)?;
                let via_closed = operators::apply_p4(&coeffs, &eg.ext.lc_h, &f_jet)?;
                let resid = (via_pipeline - via_closed).abs();
                let mut values = BTreeMap::new();
                values.insert("p4_closed_form".into(), via_closed);
                values.insert("p4_pipeline".into(), via_pipeline);
                let mut residuals = BTreeMap::new();
                residuals.insert("cross_route".into(), resid);
                all_pass &= mixed_tol_ok(resid, via_closed, opts.tol);
                recs.push(PointRecord {
                    x,
                    values,
                    residuals,
                });
            }
            "normal-form derivation route for the fourth-order operator".to_string()
        }

        VerifyKind::U4 => {
            if !admissible(k, n, 2)? {
                return Err(Error::Inadmissible { k, n, l: 2 });
            }
            let f = random_poly(rng, k, 3, 0.5, false);
            let ua: Vec<f64> = (0..n - k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ub: Vec<f64> = (0..n - k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pts = sample_points(spec, opts, rng);
            for x in pts {
                let rep = normalform::u4_perturbation(
                    &spec.metric,
                    &spec.embedding,
                    &ua,
                    &ub,
                    &f,
                    &x,
                    opts.order,
                )?;
                let mut residuals = BTreeMap::new();
                residuals.insert("h4_shift".into(), rep.h4_shift_residual);
                residuals.insert("tr_h4".into(), rep.tr_h4_diff);
                residuals.insert("q4".into(), rep.q4_diff);
                residuals.insert("p4_f".into(), rep.p4_diff);
                all_pass &= rep.h4_shift_residual <= opts.tol
                    && rep.tr_h4_diff <= opts.tol
                    && rep.q4_diff <= opts.tol
                    && rep.p4_diff <= opts.tol;
                recs.push(PointRecord {
                    x,
                    values: BTreeMap::new(),
                    residuals,
                });
            }
            "independence of the undetermined fourth-order graph coefficient".to_string()
        }

        VerifyKind::Factorization => {
            let lambda = spec.lambda.ok_or_else(|| {
                Error::Spec("factorization verification needs a 'lambda' tag".into())
            })?;
            if !admissible(k, n, 2)? {
                return Err(Error::Inadmissible { k, n, l: 2 });
            }
            let f = random_poly(rng, k, 3, 0.5, false);
            let pts = sample_points(spec, opts, rng);
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                if eg.ext.h_mean_sq().value().abs() > 1e-8 {
                    return Err(Error::Spec(
                        "factorization verification needs a minimal submanifold".into(),
                    ));
                }
                let coeffs = operators::extrinsic_coefficients(&eg)?;
                let f_jet: Jet<f64> = evaluate(&f, &x, opts.order)?;
                let direct = operators::apply_p4(&coeffs, &eg.ext.lc_h, &f_jet)?;
                let factored =
                    einstein::factorized_apply(&eg.ext.lc_h, lambda, 2, &f_jet)?;
                let resid = (direct - factored).abs();
                let mut values = BTreeMap::new();
                values.insert("p4_closed_form".into(), direct);
                values.insert("p4_factorized".into(), factored);
                let mut residuals = BTreeMap::new();
                residuals.insert("factorization".into(), resid);
                all_pass &= mixed_tol_ok(resid, factored, opts.tol);
                recs.push(PointRecord {
                    x,
                    values,
                    residuals,
                });
            }
            "factorization over minimal submanifolds of Einstein manifolds".to_string()
        }

        VerifyKind::Umbilic => {
            if k < 3 {
                return Err(Error::UnsupportedDimension(
                    "the umbilic comparison needs k >= 3".into(),
                ));
            }
            if !admissible(k, n, 2)? {
                return Err(Error::Inadmissible { k, n, l: 2 });
            }
            let f = random_poly(rng, k, 3, 0.5, false);
            let pts = sample_points(spec, opts, rng);
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let coeffs = operators::extrinsic_coefficients(&eg)?;
                let intr = operators::intrinsic_coefficients(&eg.ext.lc_h)?;
                let f_jet: Jet<f64> = evaluate(&f, &x, opts.order)?;
                let p4 = operators::apply_p4(&coeffs, &eg.ext.lc_h, &f_jet)?;
                let p4_bar = operators::apply_p4(&intr, &eg.ext.lc_h, &f_jet)?;
                let resid = (p4 - p4_bar).abs();
                let mut values = BTreeMap::new();
                values.insert("p4_extrinsic".into(), p4);
                values.insert("p4_intrinsic".into(), p4_bar);
                let mut residuals = BTreeMap::new();
                residuals.insert("umbilic_reduction".into(), resid);
                all_pass &= mixed_tol_ok(resid, p4, opts.tol);
                recs.push(PointRecord {
                    x,
                    values,
                    residuals,
                });
            }
            "intrinsic reduction for umbilic submanifolds of conformally flat spaces"
                .to_string()
        }

        VerifyKind::Decomposition => {
            if k < 3 {
                return Err(Error::UnsupportedDimension(
                    "the decomposition needs k >= 3".into(),
                ));
            }
            let pts = sample_points(spec, opts, rng);
            for x in pts {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, opts.order)?;
                let r = operators::decomposition_residuals(&eg)?;
                let mut residuals = BTreeMap::new();
                residuals.insert("q2".into(), r.q2);
                residuals.insert("t".into(), r.t);
                residuals.insert("q4".into(), r.q4);
                all_pass &= r.q2 <= opts.tol && r.t <= opts.tol && r.q4 <= opts.tol;
                recs.push(PointRecord {
                    x,
                    values: BTreeMap::new(),
                    residuals,
                });
            }
            "extrinsic-minus-intrinsic decomposition of the fourth-order operator"
                .to_string()
        }
    };

    Ok((recs, all_pass, paper_ref))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry() {
        for name in builtin_names() {
            let spec = builtin(name).unwrap();
            assert!(spec.k >= 1 && spec.k < spec.n, "{name}");
            assert_eq!(spec.sample_box.len(), spec.k, "{name}");
        }
        assert!(builtin("no-such-geometry").is_none());
    }

    #[test]
    fn sphere3_registry_content() {
        let spec = builtin("sphere3").unwrap();
        assert_eq!(spec.n, 3);
        assert_eq!(spec.lambda, Some(1.0));
        let want = parse("4/(1+x1^2+x2^2+x3^2)^2").unwrap();
        assert_eq!(spec.metric.component(0, 0), &want);
        assert_eq!(spec.metric.component(0, 1), &Expr::num(0.0));
    }

    #[test]
    fn graph_spec_conversion() {
        let json = br#"{
            "n": 3,
            "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
            "k": 2,
            "graph": ["0.1*x1*x2"]
        }"#;
        let spec = parse_geometry(json).unwrap();
        assert_eq!(spec.embedding.components[0], Expr::var(0));
        assert_eq!(spec.embedding.components[1], Expr::var(1));
        assert_eq!(spec.embedding.components[2], parse("0.1*x1*x2").unwrap());
    }

    #[test]
    fn upper_triangle_metric_accepted() {
        let json = br#"{
            "n": 2,
            "metric": [["1", "0"], ["2"]],
            "k": 1,
            "embedding": ["x1", "0"]
        }"#;
        let spec = parse_geometry(json).unwrap();
        assert_eq!(spec.metric.component(1, 1), &parse("2").unwrap());
        assert_eq!(spec.metric.component(1, 0), &parse("0").unwrap());
    }

    #[test]
    fn malformed_expression_errors_with_position() {
        let json = br#"{
            "n": 2,
            "metric": [["1", "0"], ["0", "x1 + * 2"]],
            "k": 1,
            "embedding": ["x1", "0"]
        }"#;
        match parse_geometry(json) {
            Err(Error::Parse { col, .. }) => assert_eq!(col, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn qcurv_on_equator() {
        let spec = builtin("equator-s2-in-s3").unwrap();
        let opts = Options {
            points: 3,
            ..Options::default()
        };
        let report = run_command(&CliCommand::QCurv { level: 1 }, Some(&spec), &opts).unwrap();
        assert!(report.pass);
        for rec in &report.points {
            assert!((rec.values["q2"] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spectrum_table() {
        let report = run_command(
            &CliCommand::Spectrum {
                k: 2,
                l: 2,
                mmax: 3,
            },
            None,
            &Options::default(),
        )
        .unwrap();
        let evs: Vec<f64> = report
            .points
            .iter()
            .map(|r| r.values["eigenvalue"])
            .collect();
        assert_eq!(evs, vec![0.0, 0.0, 24.0, 120.0]);
    }

    #[test]
    fn factorization_on_clifford_torus() {
        let spec = builtin("clifford-torus").unwrap();
        let opts = Options {
            points: 3,
            tol: 1e-7,
            ..Options::default()
        };
        let report = run_command(
            &CliCommand::Verify {
                kind: VerifyKind::Factorization,
                level: None,
            },
            Some(&spec),
            &opts,
        )
        .unwrap();
        assert!(report.pass, "report: {}", report.to_json());
    }

    #[test]
    fn deterministic_reports() {
        let spec = builtin("sphere3").unwrap();
        let opts = Options {
            points: 2,
            ..Options::default()
        };
        let strip = |s: String| -> String {
            s.lines()
                .filter(|l| !l.contains("wall_ms"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let r1 = run_command(&CliCommand::Curvature, Some(&spec), &opts).unwrap();
        let r2 = run_command(&CliCommand::Curvature, Some(&spec), &opts).unwrap();
        assert_eq!(strip(r1.to_json()), strip(r2.to_json()));
    }

    #[test]
    fn inadmissible_level_is_reported() {
        // k = 3, n = 4: the fourth-order operator does not exist
        let json = br#"{
            "n": 4,
            "metric": [["1","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]],
            "k": 3,
            "graph": ["0"]
        }"#;
        let spec = parse_geometry(json).unwrap();
        let err = run_command(
            &CliCommand::Apply {
                level: 2,
                f: "x1^2".into(),
            },
            Some(&spec),
            &Options::default(),
        );
        assert!(matches!(err, Err(Error::Inadmissible { .. })));
    }
}

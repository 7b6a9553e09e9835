//! Phase-space quadrature over `C^d = R^{2d}`, classical Gibbs measures and
//! Boltzmann entropies.
//!
//! Two tensor schemes are provided. Gauss-Hermite nodes are matched to a
//! Gaussian decay `e^{-s|z|^2}` and are exact for polynomial times that
//! Gaussian. The uniform scheme uses midpoint cells clipped to a ball.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{entropy_term, pairwise_sum, pairwise_sum_complex, LOG_FLOOR};

/// Largest supported Gauss-Hermite order per real coordinate.
pub const MAX_GH_ORDER: usize = 600;
/// Largest node count of a single grid.
pub const MAX_NODES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum Scheme {
    /// Tensor Gauss-Hermite rule of `order` nodes per real coordinate for the
    /// weight `e^{-scale x^2}`.
    GaussHermiteTensor { order: usize, scale: f64 },
    /// Midpoint cells of side `spacing` in `[-radius, radius]^{2d}`, keeping
    /// cells whose center lies in the ball of `radius`.
    UniformTensor { radius: f64, spacing: f64 },
}

#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    d: usize,
    scheme: Scheme,
    level: usize,
    radius: f64,
    /// Node coordinates, `d` consecutive entries per node.
    nodes: Vec<Complex64>,
    /// Weights for `∫ g(z) dz` with Lebesgue measure on `R^{2d}`.
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(d: usize, scheme: Scheme) -> Result<Self> {
        Self::build(d, scheme, 0)
    }

    pub fn gauss_hermite(d: usize, order: usize, scale: f64) -> Result<Self> {
        Self::new(d, Scheme::GaussHermiteTensor { order, scale })
    }

    pub fn uniform(d: usize, radius: f64, spacing: f64) -> Result<Self> {
        Self::new(d, Scheme::UniformTensor { radius, spacing })
    }

    fn build(d: usize, scheme: Scheme, level: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Argument("grid dimension must be positive".into()));
        }
        let (points, w1) = match scheme {
            Scheme::GaussHermiteTensor { order, scale } => {
                if order == 0 || order > MAX_GH_ORDER {
                    return Err(Error::Argument(format!(
                        "Gauss-Hermite order {order} outside 1..={MAX_GH_ORDER}"
                    )));
                }
                if !(scale > 0.0) {
                    return Err(Error::Argument("Gauss-Hermite scale must be positive".into()));
                }
                let (t, w) = gauss_hermite_effective(order);
                let s = scale.sqrt();
                (
                    t.iter().map(|x| x / s).collect::<Vec<_>>(),
                    w.iter().map(|x| x / s).collect::<Vec<_>>(),
                )
            }
            Scheme::UniformTensor { radius, spacing } => {
                if !(radius > 0.0 && spacing > 0.0) {
                    return Err(Error::Argument("uniform grid needs positive radius and spacing".into()));
                }
                let m = ((2.0 * radius / spacing).round() as usize).max(1);
                let h = 2.0 * radius / m as f64;
                let pts: Vec<f64> = (0..m).map(|k| -radius + h * (k as f64 + 0.5)).collect();
                let w = vec![h; m];
                (pts, w)
            }
        };
        let per_axis = points.len();
        let total = per_axis
            .checked_pow(2 * d as u32)
            .filter(|&n| n <= MAX_NODES)
            .ok_or_else(|| Error::Resource(format!("grid with {per_axis}^{} nodes", 2 * d)))?;
        let clip = match scheme {
            Scheme::UniformTensor { radius, .. } => Some(radius * radius),
            _ => None,
        };
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; 2 * d];
        let mut max_r2 = 0.0f64;
        for _ in 0..total {
            let mut w = 1.0;
            let mut r2 = 0.0;
            for &k in &idx {
                w *= w1[k];
                r2 += points[k] * points[k];
            }
            if clip.map_or(true, |c| r2 <= c) {
                for j in 0..d {
                    nodes.push(Complex64::new(points[idx[2 * j]], points[idx[2 * j + 1]]));
                }
                weights.push(w);
                max_r2 = max_r2.max(r2);
            }
            // odometer increment, last coordinate fastest
            for pos in (0..2 * d).rev() {
                idx[pos] += 1;
                if idx[pos] < per_axis {
                    break;
                }
                idx[pos] = 0;
            }
        }
        let radius = match scheme {
            Scheme::UniformTensor { radius, .. } => radius,
            _ => max_r2.sqrt(),
        };
        Ok(QuadratureGrid {
            d,
            scheme,
            level,
            radius,
            nodes,
            weights,
        })
    }

    /// Next refinement level: Gauss-Hermite doubles the order, the uniform
    /// scheme doubles the radius and halves the spacing.
    pub fn refine(&self) -> Result<Self> {
        let scheme = match self.scheme {
            Scheme::GaussHermiteTensor { order, scale } => Scheme::GaussHermiteTensor {
                order: (2 * order).min(MAX_GH_ORDER),
                scale,
            },
            Scheme::UniformTensor { radius, spacing } => Scheme::UniformTensor {
                radius: 2.0 * radius,
                spacing: spacing / 2.0,
            },
        };
        if scheme == self.scheme {
            return Err(Error::Resource("grid cannot be refined further".into()));
        }
        Self::build(self.d, scheme, self.level + 1)
    }

    /// Halves the spacing (or doubles the order) while keeping the radius.
    pub fn densify(&self) -> Result<Self> {
        let scheme = match self.scheme {
            Scheme::GaussHermiteTensor { order, scale } => Scheme::GaussHermiteTensor {
                order: (2 * order).min(MAX_GH_ORDER),
                scale,
            },
            Scheme::UniformTensor { radius, spacing } => Scheme::UniformTensor {
                radius,
                spacing: spacing / 2.0,
            },
        };
        Self::build(self.d, scheme, self.level + 1)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, k: usize) -> &[Complex64] {
        &self.nodes[k * self.d..(k + 1) * self.d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[Complex64]> {
        self.nodes.chunks(self.d)
    }

    /// `g` evaluated at every node, in node order.
    pub fn sample<T, F>(&self, g: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[Complex64]) -> T + Sync + Send,
    {
        self.nodes.par_chunks(self.d).map(g).collect()
    }

    /// `Σ w_k v_k` for values already sampled at the nodes.
    pub fn sum_sampled(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self.weights.iter().zip(values).map(|(w, v)| w * v).collect();
        pairwise_sum(&terms)
    }
}

/// Nodes and effective weights `W_i = w_i e^{t_i^2}` of the `n`-point
/// Gauss-Hermite rule, so that `∫ g(x) dx ≈ Σ W_i g(t_i)`.
pub fn gauss_hermite_effective(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut psi_prev = 0.0;
        for _ in 0..100 {
            // normalized Hermite functions including e^{-z^2/2}
            let mut p1 = pim4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j - 1) as f64 / j as f64).sqrt() * p3;
            }
            psi_prev = p2;
            // ψ_n' = sqrt(2n) ψ_{n-1} - z ψ_n, and ψ_n ≈ 0 near the root
            let dp = (2.0 * nf).sqrt() * p2 - z * p1;
            let step = p1 / dp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let _ = psi_prev;
        // recompute ψ_{n-1} at the converged root
        let mut p1 = pim4 * (-0.5 * z * z).exp();
        let mut p2 = 0.0;
        for j in 1..n {
            let p3 = p2;
            p2 = p1;
            p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j - 1) as f64 / j as f64).sqrt() * p3;
        }
        let weight = 1.0 / (nf * p1 * p1);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    // ascending order
    x.reverse();
    w.reverse();
    (x, w)
}

pub fn integrate<F>(g: F, grid: &QuadratureGrid) -> Complex64
where
    F: Fn(&[Complex64]) -> Complex64 + Sync + Send,
{
    let vals = grid.sample(g);
    let terms: Vec<Complex64> = vals
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| v * *w)
        .collect();
    pairwise_sum_complex(&terms)
}

pub fn integrate_real<F>(g: F, grid: &QuadratureGrid) -> f64
where
    F: Fn(&[Complex64]) -> f64 + Sync + Send,
{
    let vals = grid.sample(g);
    grid.sum_sampled(&vals)
}

/// A quadrature value together with its refinement history.
#[derive(Clone, Debug)]
pub struct Certified {
    pub value: f64,
    pub grid: QuadratureGrid,
    /// `(level, value)` for every grid that was evaluated.
    pub history: Vec<(usize, f64)>,
}

impl Certified {
    /// Relative change between the last two refinement levels.
    pub fn last_change(&self) -> f64 {
        let n = self.history.len();
        if n < 2 {
            return f64::INFINITY;
        }
        let (a, b) = (self.history[n - 2].1, self.history[n - 1].1);
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

pub const DEFAULT_MAX_LEVELS: usize = 6;

/// Evaluates `eval` on successively refined grids until two consecutive
/// values agree to `rel_tol`.
pub fn certify<F>(
    grid: &QuadratureGrid,
    rel_tol: f64,
    max_levels: usize,
    mut eval: F,
) -> Result<Certified>
where
    F: FnMut(&QuadratureGrid) -> Result<f64>,
{
    let mut current = grid.clone();
    let mut prev = eval(&current)?;
    let mut history = vec![(current.level(), prev)];
    for _ in 0..max_levels {
        let next = match current.refine() {
            Ok(g) => g,
            Err(_) => break,
        };
        let value = eval(&next)?;
        history.push((next.level(), value));
        if !value.is_finite() {
            break;
        }
        let scale = value.abs().max(prev.abs()).max(f64::MIN_POSITIVE);
        if (value - prev).abs() <= rel_tol * scale {
            return Ok(Certified {
                value,
                grid: next,
                history,
            });
        }
        prev = value;
        current = next;
    }
    Err(Error::ConvergenceFailure {
        levels: history.len(),
        detail: format!(
            "successive values {:?} did not agree to {rel_tol:e}",
            history.iter().map(|h| h.1).collect::<Vec<_>>()
        ),
    })
}

/// Certified `∫ g dz` by refinement.
pub fn refine_until<F>(
    g: F,
    grid: &QuadratureGrid,
    rel_tol: f64,
    max_levels: usize,
) -> Result<Certified>
where
    F: Fn(&[Complex64]) -> f64 + Sync + Send,
{
    certify(grid, rel_tol, max_levels, |gr| Ok(integrate_real(&g, gr)))
}

pub type DensityFn = Arc<dyn Fn(&[Complex64]) -> f64 + Send + Sync>;

/// Unnormalized nonnegative function on phase space, either in closed form
/// or sampled at the nodes of a grid.
#[derive(Clone)]
pub enum DensitySource {
    Closed(DensityFn),
    Sampled(Vec<f64>),
}

/// Probability density on `C^d` with respect to Lebesgue measure.
/// Values are `raw(z) * exp(-log_normalization)`.
#[derive(Clone)]
pub struct ClassicalDensity {
    source: DensitySource,
    log_normalization: f64,
    grid: QuadratureGrid,
}

impl std::fmt::Debug for ClassicalDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalDensity")
            .field("log_normalization", &self.log_normalization)
            .field("nodes", &self.grid.len())
            .finish()
    }
}

pub const NEGATIVE_DENSITY_TOL: f64 = 1e-12;

impl ClassicalDensity {
    /// Normalizes `raw` by its quadrature on `grid`.
    pub fn from_fn(raw: DensityFn, grid: &QuadratureGrid) -> Result<Self> {
        let values = grid.sample(|z| raw(z));
        check_nonnegative(&values)?;
        let norm = grid.sum_sampled(&values);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidDensity(format!("normalization {norm} not positive")));
        }
        Ok(ClassicalDensity {
            source: DensitySource::Closed(raw),
            log_normalization: norm.ln(),
            grid: grid.clone(),
        })
    }

    /// Closed-form density with a known normalization (`∫ raw = exp(log_norm)`).
    pub fn from_fn_normalized(raw: DensityFn, log_normalization: f64, grid: &QuadratureGrid) -> Self {
        ClassicalDensity {
            source: DensitySource::Closed(raw),
            log_normalization,
            grid: grid.clone(),
        }
    }

    /// Density sampled at the nodes of `grid`, normalized on it.
    pub fn from_samples(values: Vec<f64>, grid: &QuadratureGrid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument("sample count does not match grid".into()));
        }
        check_nonnegative(&values)?;
        let norm = grid.sum_sampled(&values);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidDensity(format!("normalization {norm} not positive")));
        }
        Ok(ClassicalDensity {
            source: DensitySource::Sampled(values),
            log_normalization: norm.ln(),
            grid: grid.clone(),
        })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn normalization(&self) -> f64 {
        self.log_normalization.exp()
    }

    pub fn log_normalization(&self) -> f64 {
        self.log_normalization
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.source, DensitySource::Sampled(_))
    }

    /// Normalized density at an arbitrary point (closed-form sources only).
    pub fn eval(&self, z: &[Complex64]) -> Option<f64> {
        match &self.source {
            DensitySource::Closed(f) => Some(f(z) * (-self.log_normalization).exp()),
            DensitySource::Sampled(_) => None,
        }
    }

    /// Normalized density at the nodes of `grid`.
    pub fn values_on(&self, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        let scale = (-self.log_normalization).exp();
        match &self.source {
            DensitySource::Closed(f) => Ok(grid.sample(|z| f(z) * scale)),
            DensitySource::Sampled(v) => {
                if grid.len() != self.grid.len() || grid.scheme() != self.grid.scheme() {
                    return Err(Error::Argument(
                        "sampled density evaluated on a different grid".into(),
                    ));
                }
                Ok(v.iter().map(|x| x * scale).collect())
            }
        }
    }

    /// `∫ f dz` on `grid`; close to 1 for an adequate grid.
    pub fn mass_on(&self, grid: &QuadratureGrid) -> Result<f64> {
        Ok(grid.sum_sampled(&self.values_on(grid)?))
    }

    /// `∫ g f dz` on `grid`.
    pub fn expectation<F>(&self, g: F, grid: &QuadratureGrid) -> Result<f64>
    where
        F: Fn(&[Complex64]) -> f64 + Sync + Send,
    {
        let f = self.values_on(grid)?;
        let gv = grid.sample(g);
        let prod: Vec<f64> = f.iter().zip(&gv).map(|(a, b)| a * b).collect();
        Ok(grid.sum_sampled(&prod))
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| **v < -NEGATIVE_DENSITY_TOL || v.is_nan()) {
        return Err(Error::InvalidDensity(format!("density value {v} is negative")));
    }
    Ok(())
}

/// Tolerance on `|∫ f − 1|` accepted by the entropy functionals.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// `-∫ f log f dz` with `0 log 0 = 0`.
pub fn boltzmann_entropy(mu: &ClassicalDensity, grid: &QuadratureGrid) -> Result<f64> {
    let f = mu.values_on(grid)?;
    check_nonnegative(&f)?;
    let mass = grid.sum_sampled(&f);
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDensity(format!(
            "density integrates to {mass} on this grid"
        )));
    }
    let terms: Vec<f64> = f.iter().map(|&x| entropy_term(x.max(0.0))).collect();
    Ok(grid.sum_sampled(&terms))
}

/// Threshold on `w f_μ` above which a vanishing `ν` makes the relative
/// entropy infinite.
pub const INFINITE_MASS_TOL: f64 = 1e-14;

/// Kullback-Leibler divergence `∫ f_μ log(f_μ/f_ν) dz` from sampled values.
pub fn relative_entropy_sampled(f_mu: &[f64], f_nu: &[f64], grid: &QuadratureGrid) -> f64 {
    let mut terms = Vec::with_capacity(f_mu.len());
    for ((&a, &b), &w) in f_mu.iter().zip(f_nu).zip(grid.weights()) {
        let a = a.max(0.0);
        if a == 0.0 {
            terms.push(0.0);
            continue;
        }
        if b <= LOG_FLOOR {
            if w * a > INFINITE_MASS_TOL {
                return f64::INFINITY;
            }
            continue;
        }
        terms.push(w * a * (a.max(LOG_FLOOR).ln() - b.ln()));
    }
    pairwise_sum(&terms)
}

/// `∫ log(dμ/dν) dμ`, `+∞` when μ has mass where ν vanishes.
pub fn relative_entropy_classical(
    mu: &ClassicalDensity,
    nu: &ClassicalDensity,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let a = mu.values_on(grid)?;
    let b = nu.values_on(grid)?;
    check_nonnegative(&a)?;
    check_nonnegative(&b)?;
    Ok(relative_entropy_sampled(&a, &b, grid))
}

/// Normalized Gibbs density `e^{-β h} / Z` on `grid`. The normalization is
/// computed on `grid` itself; `log Z` is available from the result.
pub fn classical_gibbs<H>(h: H, beta: f64, grid: &QuadratureGrid) -> Result<ClassicalDensity>
where
    H: Fn(&[Complex64]) -> f64 + Send + Sync + 'static,
{
    if !(beta > 0.0) {
        return Err(Error::Argument("beta must be positive".into()));
    }
    let hv = grid.sample(&h);
    let shift = hv.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = hv.iter().map(|x| (-beta * (x - shift)).exp()).collect();
    let norm = grid.sum_sampled(&raw);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::ConvergenceFailure {
            levels: grid.level(),
            detail: format!("Gibbs normalization {norm}"),
        });
    }
    let log_norm = norm.ln() - beta * shift;
    let f: DensityFn = Arc::new(move |z| (-beta * h(z)).exp());
    Ok(ClassicalDensity::from_fn_normalized(f, log_norm, grid))
}

/// CSV export of a density at the grid nodes: `z_re0,..,z_im0,..,f`.
pub fn write_density_csv<W: Write>(
    mu: &ClassicalDensity,
    grid: &QuadratureGrid,
    out: W,
) -> Result<()> {
    let values = mu.values_on(grid)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..grid.d()).map(|j| format!("z_re{j}")).collect();
    header.extend((0..grid.d()).map(|j| format!("z_im{j}")));
    header.push("f".into());
    w.write_record(&header)?;
    for (k, v) in values.iter().enumerate() {
        let z = grid.node(k);
        let mut rec: Vec<String> = z.iter().map(|c| format!("{:.16e}", c.re)).collect();
        rec.extend(z.iter().map(|c| format!("{:.16e}", c.im)));
        rec.push(format!("{v:.16e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

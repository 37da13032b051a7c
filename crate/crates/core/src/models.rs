//! Log joint densities for the four likelihood families under the horseshoe
//! and product shrinkage priors, plus the map between named constrained
//! parameters and the flat unconstrained vector that ADVI optimizes over.
//!
//! Every scale argument of a density is a standard deviation.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::advi::{sample_posterior, VariationalPosterior};
use crate::error::{Error, Result};
use crate::simdata::{Dataset, Family};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// `β_j ~ N(0, λ_j τ)`, `λ_j ~ C⁺(0, 1)`, `τ ~ C⁺(σ_τ)`.
    Horseshoe { sigma_tau: f64 },
    /// `β_j = η_j λ_j` with `η_j ~ N(0, λ_j τ)`, `λ_j ~ Beta(a, b)`, `τ ~ C⁺(σ_τ)`.
    Product { a: f64, b: f64, sigma_tau: f64 },
}

impl Prior {
    pub fn sigma_tau(&self) -> f64 {
        match *self {
            Prior::Horseshoe { sigma_tau } | Prior::Product { sigma_tau, .. } => sigma_tau,
        }
    }
}

impl Default for Prior {
    fn default() -> Self {
        Prior::Product {
            a: 1.0,
            b: 1.0,
            sigma_tau: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    #[serde(default)]
    pub prior: Prior,
    #[serde(default = "default_intercept_scale")]
    pub intercept_prior_scale: f64,
    #[serde(default = "default_sigma_y_scale")]
    pub sigma_y_prior_scale: f64,
    #[serde(default = "default_random_intercept_scale")]
    pub random_intercept_prior_scale: f64,
}

fn default_intercept_scale() -> f64 {
    5.0
}

fn default_sigma_y_scale() -> f64 {
    1.0
}

fn default_random_intercept_scale() -> f64 {
    3.0
}

impl ModelSpec {
    pub fn new(family: Family, prior: Prior) -> Self {
        Self {
            family,
            prior,
            intercept_prior_scale: default_intercept_scale(),
            sigma_y_prior_scale: default_sigma_y_scale(),
            random_intercept_prior_scale: default_random_intercept_scale(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive")))
            }
        };
        positive(self.prior.sigma_tau(), "sigma_tau")?;
        if let Prior::Product { a, b, .. } = self.prior {
            positive(a, "a")?;
            positive(b, "b")?;
        }
        positive(self.intercept_prior_scale, "intercept_prior_scale")?;
        positive(self.sigma_y_prior_scale, "sigma_y_prior_scale")?;
        positive(self.random_intercept_prior_scale, "random_intercept_prior_scale")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Free,
    Positive,
    UnitInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// Regression coefficients under the horseshoe prior.
    Beta,
    /// Unscaled coefficients of the product prior.
    Eta,
    /// Local shrinkage scales.
    Lambda,
    /// Global shrinkage scale.
    Tau,
    Beta0,
    SigmaY,
    /// Per-subject random intercepts.
    RandomIntercept,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Beta => "beta",
            ParamKind::Eta => "eta",
            ParamKind::Lambda => "lambda",
            ParamKind::Tau => "tau",
            ParamKind::Beta0 => "beta0",
            ParamKind::SigmaY => "sigma_y",
            ParamKind::RandomIntercept => "random_intercept",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: ParamKind,
    pub len: usize,
    pub constraint: Constraint,
    pub offset: usize,
}

impl ParamBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub blocks: Vec<ParamBlock>,
    pub dim: usize,
}

impl ParameterLayout {
    fn from_blocks(blocks: impl IntoIterator<Item = (ParamKind, usize, Constraint)>) -> Self {
        let mut offset = 0;
        let blocks = blocks
            .into_iter()
            .map(|(name, len, constraint)| {
                let b = ParamBlock {
                    name,
                    len,
                    constraint,
                    offset,
                };
                offset += len;
                b
            })
            .collect();
        Self { blocks, dim: offset }
    }

    pub fn block(&self, name: ParamKind) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn range(&self, name: ParamKind) -> Option<std::ops::Range<usize>> {
        self.block(name).map(ParamBlock::range)
    }

    /// Same parameters packed in a different block order. `order` must be a
    /// permutation of the block names.
    pub fn reordered(&self, order: &[ParamKind]) -> Result<Self> {
        if order.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                got: order.len(),
            });
        }
        let mut parts = Vec::with_capacity(order.len());
        for name in order {
            let b = self
                .block(*name)
                .ok_or_else(|| Error::InvalidConfig(format!("layout has no `{}`", name.as_str())))?;
            parts.push((b.name, b.len, b.constraint));
        }
        Ok(Self::from_blocks(parts))
    }

    /// Per-coordinate constraint, expanded over block lengths.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = vec![Constraint::Free; self.dim];
        for b in &self.blocks {
            out[b.range()].fill(b.constraint);
        }
        out
    }

    /// Human-readable coordinate names such as `lambda[3]`.
    pub fn coordinate_name(&self, k: usize) -> String {
        for b in &self.blocks {
            if b.range().contains(&k) {
                return if b.len == 1 {
                    b.name.as_str().to_string()
                } else {
                    format!("{}[{}]", b.name.as_str(), k - b.offset)
                };
            }
        }
        format!("theta[{k}]")
    }
}

/// Parameter layout for a model over data of shape `(n_subjects, p, M)`.
pub fn layout_for(model: &ModelSpec, data_shape: (usize, usize, usize)) -> Result<ParameterLayout> {
    let (n, p, m) = data_shape;
    if n == 0 || p == 0 || m == 0 {
        return Err(Error::InvalidConfig("data shape must be positive".into()));
    }
    let mut blocks = Vec::new();
    match model.prior {
        Prior::Horseshoe { .. } => {
            blocks.push((ParamKind::Beta, p, Constraint::Free));
            blocks.push((ParamKind::Lambda, p, Constraint::Positive));
        }
        Prior::Product { .. } => {
            blocks.push((ParamKind::Eta, p, Constraint::Free));
            blocks.push((ParamKind::Lambda, p, Constraint::UnitInterval));
        }
    }
    blocks.push((ParamKind::Tau, 1, Constraint::Positive));
    blocks.push((ParamKind::Beta0, 1, Constraint::Free));
    if model.family.has_noise_scale() {
        blocks.push((ParamKind::SigmaY, 1, Constraint::Positive));
    }
    if model.family == Family::RandomIntercept {
        blocks.push((ParamKind::RandomIntercept, n, Constraint::Free));
    }
    Ok(ParameterLayout::from_blocks(blocks))
}

/// Layout for a concrete dataset.
pub fn layout_for_data(model: &ModelSpec, data: &Dataset) -> Result<ParameterLayout> {
    let m = if model.family == Family::RandomIntercept {
        data.n_rows() / data.n_subjects().max(1)
    } else {
        1
    };
    layout_for(model, (data.n_subjects(), data.n_covariates(), m.max(1)))
}

/// Named constrained values laid out according to a [`ParameterLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub layout: ParameterLayout,
    pub values: Vec<f64>,
}

impl ParameterSet {
    pub fn new(layout: ParameterLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dim {
            return Err(Error::DimensionMismatch {
                expected: layout.dim,
                got: values.len(),
            });
        }
        for (k, (&v, c)) in values.iter().zip(layout.constraints()).enumerate() {
            let ok = match c {
                Constraint::Free => v.is_finite(),
                Constraint::Positive => v > 0.0 && v.is_finite(),
                Constraint::UnitInterval => v > 0.0 && v < 1.0,
            };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "{} = {v} violates its constraint",
                    layout.coordinate_name(k)
                )));
            }
        }
        Ok(Self { layout, values })
    }

    pub fn get(&self, name: ParamKind) -> Option<&[f64]> {
        self.layout.range(name).map(|r| &self.values[r])
    }

    /// Same values packed under another layout holding the same blocks.
    pub fn repacked(&self, layout: &ParameterLayout) -> Result<Self> {
        let mut values = vec![0.0; layout.dim];
        for b in &layout.blocks {
            let src = self
                .get(b.name)
                .ok_or_else(|| Error::InvalidConfig(format!("missing `{}`", b.name.as_str())))?;
            if src.len() != b.len {
                return Err(Error::DimensionMismatch {
                    expected: b.len,
                    got: src.len(),
                });
            }
            values[b.range()].copy_from_slice(src);
        }
        Ok(Self {
            layout: layout.clone(),
            values,
        })
    }

    /// The regression coefficients entering the likelihood: `β` for the
    /// horseshoe, `η ⊙ λ` for the product prior.
    pub fn coefficients(&self) -> Vec<f64> {
        if let Some(beta) = self.get(ParamKind::Beta) {
            return beta.to_vec();
        }
        match (self.get(ParamKind::Eta), self.get(ParamKind::Lambda)) {
            (Some(eta), Some(lambda)) => eta.iter().zip(lambda).map(|(e, l)| e * l).collect(),
            _ => Vec::new(),
        }
    }
}

fn log_sigmoid(u: f64) -> f64 {
    -softplus(-u)
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Maps an unconstrained vector to constrained values and returns the log
/// absolute Jacobian determinant of the map.
pub fn to_constrained(u: &[f64], layout: &ParameterLayout) -> Result<(ParameterSet, f64)> {
    if u.len() != layout.dim {
        return Err(Error::DimensionMismatch {
            expected: layout.dim,
            got: u.len(),
        });
    }
    let mut values = vec![0.0; layout.dim];
    let log_jac = constrain_into(u, layout, &mut values);
    Ok((
        ParameterSet {
            layout: layout.clone(),
            values,
        },
        log_jac,
    ))
}

fn constrain_into(u: &[f64], layout: &ParameterLayout, out: &mut [f64]) -> f64 {
    let mut log_jac = 0.0;
    for b in &layout.blocks {
        let r = b.range();
        match b.constraint {
            Constraint::Free => out[r.clone()].copy_from_slice(&u[r]),
            Constraint::Positive => {
                for k in r {
                    out[k] = u[k].exp();
                    log_jac += u[k];
                }
            }
            Constraint::UnitInterval => {
                for k in r {
                    out[k] = sigmoid(u[k]);
                    log_jac += log_sigmoid(u[k]) + log_sigmoid(-u[k]);
                }
            }
        }
    }
    log_jac
}

pub fn to_unconstrained(params: &ParameterSet) -> Vec<f64> {
    let mut u = vec![0.0; params.layout.dim];
    for b in &params.layout.blocks {
        for k in b.range() {
            let x = params.values[k];
            u[k] = match b.constraint {
                Constraint::Free => x,
                Constraint::Positive => x.ln(),
                Constraint::UnitInterval => x.ln() - (-x).ln_1p(),
            };
        }
    }
    u
}

fn normal_lpdf(x: f64, sd: f64) -> f64 {
    -HALF_LN_2PI - sd.ln() - 0.5 * (x / sd).powi(2)
}

fn half_normal_lpdf(x: f64, scale: f64) -> f64 {
    LN_2 + normal_lpdf(x, scale)
}

/// Half-Cauchy log density on `x ≥ 0` with the given scale.
pub fn half_cauchy_lpdf(x: f64, scale: f64) -> f64 {
    LN_2 - PI.ln() - scale.ln() - (x / scale).powi(2).ln_1p()
}

fn check(term: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { term: term.into() })
    }
}

/// Index structure shared between the constrained and unconstrained entry
/// points.
#[derive(Debug, Clone)]
struct Slots {
    coef: std::ops::Range<usize>,
    lambda: std::ops::Range<usize>,
    tau: usize,
    beta0: usize,
    sigma_y: Option<usize>,
    random_intercept: Option<std::ops::Range<usize>>,
    product: bool,
}

impl Slots {
    fn new(model: &ModelSpec, layout: &ParameterLayout, data: &Dataset) -> Result<Self> {
        let missing = |n: ParamKind| Error::InvalidConfig(format!("layout has no `{}`", n.as_str()));
        let product = matches!(model.prior, Prior::Product { .. });
        let coef_kind = if product { ParamKind::Eta } else { ParamKind::Beta };
        let coef = layout.range(coef_kind).ok_or_else(|| missing(coef_kind))?;
        let lambda = layout.range(ParamKind::Lambda).ok_or_else(|| missing(ParamKind::Lambda))?;
        let p = data.n_covariates();
        if coef.len() != p || lambda.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: coef.len(),
            });
        }
        let tau = layout.range(ParamKind::Tau).ok_or_else(|| missing(ParamKind::Tau))?.start;
        let beta0 = layout.range(ParamKind::Beta0).ok_or_else(|| missing(ParamKind::Beta0))?.start;
        let sigma_y = if model.family.has_noise_scale() {
            Some(layout.range(ParamKind::SigmaY).ok_or_else(|| missing(ParamKind::SigmaY))?.start)
        } else {
            None
        };
        let random_intercept = if model.family == Family::RandomIntercept {
            let r = layout
                .range(ParamKind::RandomIntercept)
                .ok_or_else(|| missing(ParamKind::RandomIntercept))?;
            if data.subject_index.is_none() {
                return Err(Error::InvalidConfig(
                    "random intercept model needs subject indices".into(),
                ));
            }
            if r.len() != data.n_subjects() {
                return Err(Error::DimensionMismatch {
                    expected: data.n_subjects(),
                    got: r.len(),
                });
            }
            Some(r)
        } else {
            None
        };
        Ok(Self {
            coef,
            lambda,
            tau,
            beta0,
            sigma_y,
            random_intercept,
            product,
        })
    }
}

/// Log joint density of a model on one dataset, evaluated on batches of
/// parameter vectors. Gradients are derived by hand per family.
#[derive(Debug, Clone)]
pub struct LogDensity<'a> {
    model: &'a ModelSpec,
    layout: &'a ParameterLayout,
    data: &'a Dataset,
    slots: Slots,
    constraints: Vec<Constraint>,
    /// `Σ ln Γ(y_i + 1)` for the Poisson likelihood.
    poisson_const: f64,
    lambda_norm: f64,
}

impl<'a> LogDensity<'a> {
    pub fn new(model: &'a ModelSpec, layout: &'a ParameterLayout, data: &'a Dataset) -> Result<Self> {
        model.validate()?;
        let slots = Slots::new(model, layout, data)?;
        let poisson_const = if model.family == Family::Poisson {
            data.y.iter().map(|&y| ln_gamma(y + 1.0)).sum()
        } else {
            0.0
        };
        let lambda_norm = match model.prior {
            Prior::Product { a, b, .. } => ln_beta(a, b),
            Prior::Horseshoe { .. } => 0.0,
        };
        Ok(Self {
            model,
            layout,
            data,
            slots,
            constraints: layout.constraints(),
            poisson_const,
            lambda_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn layout(&self) -> &ParameterLayout {
        self.layout
    }

    /// Log joint at constrained columns `c` (dim × S). When `grad` is given it
    /// receives the gradient with respect to the constrained values.
    fn eval_constrained(
        &self,
        c: &DMatrix<f64>,
        mut grad: Option<&mut DMatrix<f64>>,
    ) -> Result<Vec<f64>> {
        let s_count = c.ncols();
        let p = self.data.n_covariates();
        let n = self.data.n_rows();
        let sl = &self.slots;

        // Effective coefficients θ (p × S).
        let mut theta = DMatrix::zeros(p, s_count);
        for s in 0..s_count {
            for j in 0..p {
                let coef = c[(sl.coef.start + j, s)];
                theta[(j, s)] = if sl.product {
                    coef * c[(sl.lambda.start + j, s)]
                } else {
                    coef
                };
            }
        }
        let mut eta = &self.data.x * &theta;
        for s in 0..s_count {
            let b0 = c[(sl.beta0, s)];
            let mut col = eta.column_mut(s);
            col.add_scalar_mut(b0);
            if let (Some(ri), Some(subjects)) = (&sl.random_intercept, &self.data.subject_index) {
                for (i, &subj) in subjects.iter().enumerate() {
                    col[i] += c[(ri.start + subj, s)];
                }
            }
        }

        // Likelihood and its derivative with respect to the linear predictor.
        let mut dlik = DMatrix::zeros(n, s_count);
        let mut lik = vec![0.0; s_count];
        let y = &self.data.y;
        for s in 0..s_count {
            let e = eta.column(s);
            let mut acc = 0.0;
            match self.model.family {
                Family::Linear | Family::RandomIntercept => {
                    let sigma = c[(sl.sigma_y.expect("noise slot"), s)];
                    let inv_var = 1.0 / (sigma * sigma);
                    let mut rss = 0.0;
                    for i in 0..n {
                        let r = y[i] - e[i];
                        rss += r * r;
                        dlik[(i, s)] = r * inv_var;
                    }
                    acc += -(n as f64) * (HALF_LN_2PI + sigma.ln()) - 0.5 * rss * inv_var;
                    if let Some(g) = grad.as_deref_mut() {
                        g[(sl.sigma_y.unwrap(), s)] = -(n as f64) / sigma + rss / (sigma * sigma * sigma);
                    }
                }
                Family::Logistic => {
                    for i in 0..n {
                        acc += y[i] * e[i] - softplus(e[i]);
                        dlik[(i, s)] = y[i] - sigmoid(e[i]);
                    }
                }
                Family::Poisson => {
                    for i in 0..n {
                        let mu = e[i].exp();
                        acc += y[i] * e[i] - mu;
                        dlik[(i, s)] = y[i] - mu;
                    }
                    acc -= self.poisson_const;
                }
            }
            lik[s] = check("likelihood", acc)?;
        }

        let mut totals = vec![0.0; s_count];
        let dtheta = if grad.is_some() {
            Some(self.data.x.tr_mul(&dlik))
        } else {
            None
        };

        let sigma_tau = self.model.prior.sigma_tau();
        for s in 0..s_count {
            let tau = c[(sl.tau, s)];
            let b0 = c[(sl.beta0, s)];
            let mut coef_prior = 0.0;
            let mut lambda_prior = 0.0;
            let mut dtau = 0.0;
            for j in 0..p {
                let coef = c[(sl.coef.start + j, s)];
                let lambda = c[(sl.lambda.start + j, s)];
                let sd = lambda * tau;
                let z2 = (coef / sd).powi(2);
                coef_prior += -HALF_LN_2PI - sd.ln() - 0.5 * z2;
                let (lp, dlp) = match self.model.prior {
                    Prior::Horseshoe { .. } => (
                        half_cauchy_lpdf(lambda, 1.0),
                        -2.0 * lambda / (1.0 + lambda * lambda),
                    ),
                    Prior::Product { a, b, .. } => {
                        let mut v = -self.lambda_norm;
                        let mut d = 0.0;
                        if a != 1.0 {
                            v += (a - 1.0) * lambda.ln();
                            d += (a - 1.0) / lambda;
                        }
                        if b != 1.0 {
                            v += (b - 1.0) * (-lambda).ln_1p();
                            d -= (b - 1.0) / (1.0 - lambda);
                        }
                        (v, d)
                    }
                };
                lambda_prior += lp;
                dtau += -1.0 / tau + z2 / tau;
                if let (Some(g), Some(dt)) = (grad.as_deref_mut(), dtheta.as_ref()) {
                    let gl = dt[(j, s)];
                    let dcoef_prior = -coef / (sd * sd);
                    let dlambda_prior = -1.0 / lambda + z2 / lambda + dlp;
                    if sl.product {
                        g[(sl.coef.start + j, s)] = gl * lambda + dcoef_prior;
                        g[(sl.lambda.start + j, s)] = gl * coef + dlambda_prior;
                    } else {
                        g[(sl.coef.start + j, s)] = gl + dcoef_prior;
                        g[(sl.lambda.start + j, s)] = dlambda_prior;
                    }
                }
            }
            let tau_prior = half_cauchy_lpdf(tau, sigma_tau);
            let b0_prior = normal_lpdf(b0, self.model.intercept_prior_scale);
            let mut total = lik[s]
                + check("coefficient prior", coef_prior)?
                + check("lambda prior", lambda_prior)?
                + check("tau prior", tau_prior)?
                + check("intercept prior", b0_prior)?;

            if let Some(k) = sl.sigma_y {
                let sigma = c[(k, s)];
                let scale = self.model.sigma_y_prior_scale;
                total += check("sigma_y prior", half_normal_lpdf(sigma, scale))?;
                if let Some(g) = grad.as_deref_mut() {
                    g[(k, s)] += -sigma / (scale * scale);
                }
            }
            if let Some(ri) = &sl.random_intercept {
                let scale = self.model.random_intercept_prior_scale;
                let mut ri_prior = 0.0;
                for k in ri.clone() {
                    ri_prior += normal_lpdf(c[(k, s)], scale);
                }
                total += check("random intercept prior", ri_prior)?;
                if let Some(g) = grad.as_deref_mut() {
                    for k in ri.clone() {
                        g[(k, s)] = -c[(k, s)] / (scale * scale);
                    }
                    let subjects = self.data.subject_index.as_ref().unwrap();
                    for (i, &subj) in subjects.iter().enumerate() {
                        g[(ri.start + subj, s)] += dlik[(i, s)];
                    }
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                g[(sl.tau, s)] = dtau - 2.0 * tau / (sigma_tau * sigma_tau + tau * tau);
                g[(sl.beta0, s)] = dlik.column(s).sum()
                    - b0 / (self.model.intercept_prior_scale * self.model.intercept_prior_scale);
            }
            totals[s] = check("log joint", total)?;
        }
        Ok(totals)
    }

    /// Log joint plus log Jacobian at unconstrained columns `u` (dim × S).
    /// The gradient with respect to `u` is written into `grad` when given.
    pub fn eval_unconstrained(
        &self,
        u: &DMatrix<f64>,
        grad: Option<&mut DMatrix<f64>>,
    ) -> Result<Vec<f64>> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        let s_count = u.ncols();
        let mut c = DMatrix::zeros(self.dim(), s_count);
        let mut log_jac = vec![0.0; s_count];
        for s in 0..s_count {
            let src = u.column(s);
            let mut dst = c.column_mut(s);
            log_jac[s] = constrain_into(src.as_slice(), self.layout, dst.as_mut_slice());
        }
        let want_grad = grad.is_some();
        let mut gc = if want_grad {
            Some(DMatrix::zeros(self.dim(), s_count))
        } else {
            None
        };
        let values = self.eval_constrained(&c, gc.as_mut())?;
        if let (Some(g), Some(gc)) = (grad, gc) {
            g.copy_from(&gc);
            for s in 0..s_count {
                for (k, con) in self.constraints.iter().enumerate() {
                    match con {
                        Constraint::Free => {}
                        Constraint::Positive => g[(k, s)] = gc[(k, s)] * c[(k, s)] + 1.0,
                        Constraint::UnitInterval => {
                            let x = c[(k, s)];
                            g[(k, s)] = gc[(k, s)] * x * (1.0 - x) + (1.0 - 2.0 * x);
                        }
                    }
                }
            }
        }
        Ok(values.iter().zip(&log_jac).map(|(v, j)| v + j).collect())
    }

    /// Single-point convenience wrapper around [`Self::eval_unconstrained`].
    pub fn value_and_grad(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let um = DMatrix::from_column_slice(u.len(), 1, u);
        let mut g = DMatrix::zeros(u.len(), 1);
        let v = self.eval_unconstrained(&um, Some(&mut g))?;
        Ok((v[0], g.as_slice().to_vec()))
    }
}

/// Log likelihood plus every log prior term at the constrained `params`.
pub fn log_joint(model: &ModelSpec, params: &ParameterSet, data: &Dataset) -> Result<f64> {
    let density = LogDensity::new(model, &params.layout, data)?;
    let c = DMatrix::from_column_slice(params.values.len(), 1, &params.values);
    Ok(density.eval_constrained(&c, None)?[0])
}

/// Gradient of [`log_joint`] with respect to the constrained values.
pub fn log_joint_gradient(model: &ModelSpec, params: &ParameterSet, data: &Dataset) -> Result<Vec<f64>> {
    let density = LogDensity::new(model, &params.layout, data)?;
    let c = DMatrix::from_column_slice(params.values.len(), 1, &params.values);
    let mut g = DMatrix::zeros(params.values.len(), 1);
    density.eval_constrained(&c, Some(&mut g))?;
    Ok(g.as_slice().to_vec())
}

/// `count` posterior draws of the regression coefficients (count × p).
pub fn coefficient_draws(
    posterior: &VariationalPosterior,
    model: &ModelSpec,
    layout: &ParameterLayout,
    count: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if count < 2 {
        return Err(Error::InvalidConfig("need at least two coefficient draws".into()));
    }
    if posterior.dim() != layout.dim {
        return Err(Error::DimensionMismatch {
            expected: layout.dim,
            got: posterior.dim(),
        });
    }
    let product = matches!(model.prior, Prior::Product { .. });
    let coef_kind = if product { ParamKind::Eta } else { ParamKind::Beta };
    let missing = |n: ParamKind| Error::InvalidConfig(format!("layout has no `{}`", n.as_str()));
    let coef = layout.block(coef_kind).ok_or_else(|| missing(coef_kind))?;
    let lambda = layout.block(ParamKind::Lambda).ok_or_else(|| missing(ParamKind::Lambda))?;
    let p = coef.len;
    let draws = sample_posterior(posterior, count, seed)?;
    let mut out = DMatrix::zeros(count, p);
    for s in 0..count {
        for j in 0..p {
            let c = draws[(s, coef.offset + j)];
            out[(s, j)] = if product {
                c * transform(lambda.constraint, draws[(s, lambda.offset + j)])
            } else {
                c
            };
        }
    }
    Ok(out)
}

fn transform(constraint: Constraint, u: f64) -> f64 {
    match constraint {
        Constraint::Free => u,
        Constraint::Positive => u.exp(),
        Constraint::UnitInterval => sigmoid(u),
    }
}

/// Per-coordinate posterior means of the effective coefficients, estimated
/// from draws.
pub fn coefficient_means(draws: &DMatrix<f64>) -> DVector<f64> {
    draws.row_mean().transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdata::{simulate, ScenarioConfig};
    use rand::{Rng, SeedableRng};

    fn product() -> Prior {
        Prior::default()
    }

    #[test]
    fn layout_dimensions() {
        let m = ModelSpec::new(Family::Linear, product());
        assert_eq!(layout_for(&m, (10, 2, 1)).unwrap().dim, 7);
        let m = ModelSpec::new(Family::Logistic, product());
        assert_eq!(layout_for(&m, (10, 2, 1)).unwrap().dim, 6);
        let m = ModelSpec::new(Family::RandomIntercept, product());
        assert_eq!(layout_for(&m, (3, 2, 5)).unwrap().dim, 10);
        let m = ModelSpec::new(Family::Linear, Prior::Horseshoe { sigma_tau: 1.0 });
        let l = layout_for(&m, (10, 4, 1)).unwrap();
        assert_eq!(l.dim, 4 + 4 + 1 + 1 + 1);
        assert_eq!(l.block(ParamKind::Lambda).unwrap().constraint, Constraint::Positive);
    }

    #[test]
    fn layout_rejects_empty_shape() {
        let m = ModelSpec::new(Family::Linear, product());
        assert!(layout_for(&m, (0, 2, 1)).is_err());
    }

    fn single(constraint: Constraint) -> ParameterLayout {
        ParameterLayout::from_blocks([(ParamKind::Tau, 1, constraint)])
    }

    #[test]
    fn positive_transform_at_zero() {
        let (p, j) = to_constrained(&[0.0], &single(Constraint::Positive)).unwrap();
        assert_eq!(p.values[0], 1.0);
        assert_eq!(j, 0.0);
    }

    #[test]
    fn unit_transform_at_zero() {
        let (p, j) = to_constrained(&[0.0], &single(Constraint::UnitInterval)).unwrap();
        assert_eq!(p.values[0], 0.5);
        assert!((j - 0.25f64.ln()).abs() < 1e-15);
        assert!((j + 1.3863).abs() < 1e-4);
    }

    #[test]
    fn transform_round_trip() {
        let layout = ParameterLayout::from_blocks([
            (ParamKind::Beta, 1, Constraint::Free),
            (ParamKind::Lambda, 1, Constraint::UnitInterval),
            (ParamKind::Tau, 1, Constraint::Positive),
        ]);
        let u = [-3.2, 0.7, 12.0];
        let (p, _) = to_constrained(&u, &layout).unwrap();
        let back = to_unconstrained(&p);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_normal_density_at_zero() {
        assert!((normal_lpdf(0.0, 1.0) + 0.91894).abs() < 1e-5);
    }

    #[test]
    fn half_cauchy_at_origin() {
        assert!((half_cauchy_lpdf(0.0, 1.0) - (2.0 / PI).ln()).abs() < 1e-15);
        assert!((half_cauchy_lpdf(0.0, 1.0) + 0.45158).abs() < 1e-5);
    }

    #[test]
    fn logistic_likelihood_at_zero_predictor() {
        let x = DMatrix::zeros(4, 1);
        let y = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]);
        let data = Dataset::new(y, x).unwrap();
        let model = ModelSpec::new(Family::Logistic, product());
        let layout = layout_for_data(&model, &data).unwrap();
        // η = 0, λ = 0.5, τ = 1, β0 = 0.
        let params = ParameterSet::new(layout, vec![0.0, 0.5, 1.0, 0.0]).unwrap();
        let total = log_joint(&model, &params, &data).unwrap();
        let priors = normal_lpdf(0.0, 0.5) + half_cauchy_lpdf(1.0, 1.0) + normal_lpdf(0.0, 5.0);
        assert!((total - priors - 4.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((4.0 * 0.5f64.ln() + 2.7726).abs() < 1e-4);
    }

    fn random_point(layout: &ParameterLayout, rng: &mut impl Rng) -> Vec<f64> {
        (0..layout.dim).map(|_| rng.random_range(-1.5..1.5)).collect()
    }

    fn small_data(family: Family, seed: u64) -> Dataset {
        let mut cfg = ScenarioConfig::linear(12, 4, 2).with_family(family).with_seed(seed);
        if family == Family::RandomIntercept {
            cfg.n = 4;
            cfg.m = 3;
        }
        if family == Family::Poisson {
            cfg.coefficient_pool = vec![-0.5, 0.5];
            cfg.beta0 = 1.0;
        }
        simulate(&cfg).unwrap().standardized()
    }

    #[test]
    fn packing_order_invariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for family in [Family::Linear, Family::RandomIntercept, Family::Logistic, Family::Poisson] {
            for prior in [product(), Prior::Horseshoe { sigma_tau: 1.0 }] {
                let data = small_data(family, 3);
                let model = ModelSpec::new(family, prior);
                let layout = layout_for_data(&model, &data).unwrap();
                let mut order: Vec<ParamKind> = layout.blocks.iter().map(|b| b.name).collect();
                order.reverse();
                let other = layout.reordered(&order).unwrap();
                let u = random_point(&layout, &mut rng);
                let (params, _) = to_constrained(&u, &layout).unwrap();
                let a = log_joint(&model, &params, &data).unwrap();
                let b = log_joint(&model, &params.repacked(&other).unwrap(), &data).unwrap();
                assert!((a - b).abs() < 1e-12, "{family}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constrained_gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for family in [Family::Linear, Family::RandomIntercept, Family::Logistic, Family::Poisson] {
            for prior in [product(), Prior::Horseshoe { sigma_tau: 1.0 }] {
                let data = small_data(family, 5);
                let model = ModelSpec::new(family, prior);
                let layout = layout_for_data(&model, &data).unwrap();
                let u = random_point(&layout, &mut rng);
                let density = LogDensity::new(&model, &layout, &data).unwrap();
                let (_, g) = density.value_and_grad(&u).unwrap();
                let h = 1e-6;
                for k in 0..layout.dim {
                    let mut up = u.clone();
                    up[k] += h;
                    let mut dn = u.clone();
                    dn[k] -= h;
                    let fd = (density.value_and_grad(&up).unwrap().0
                        - density.value_and_grad(&dn).unwrap().0)
                        / (2.0 * h);
                    let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1.0);
                    assert!(rel < 1e-6, "{family} {}: {fd} vs {}", layout.coordinate_name(k), g[k]);
                }
            }
        }
    }

    #[test]
    fn horseshoe_shrinkage_direction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let data = small_data(Family::Linear, 7);
        let model = ModelSpec::new(Family::Linear, Prior::Horseshoe { sigma_tau: 1.0 });
        let layout = layout_for_data(&model, &data).unwrap();
        let lam = layout.range(ParamKind::Lambda).unwrap();
        let beta = layout.range(ParamKind::Beta).unwrap();
        for _ in 0..50 {
            let u = random_point(&layout, &mut rng);
            let (mut params, _) = to_constrained(&u, &layout).unwrap();
            let j = rng.random_range(0..beta.len());
            let tau = params.get(ParamKind::Tau).unwrap()[0];
            let scale = params.values[lam.start + j] * tau;
            params.values[beta.start + j] = 8.0 + 10.0 * scale;
            let before = log_joint(&model, &params, &data).unwrap();
            params.values[lam.start + j] *= 0.5;
            let after = log_joint(&model, &params, &data).unwrap();
            assert!(after < before);
        }
    }

    #[test]
    fn parameter_set_rejects_constraint_violation() {
        let layout = single(Constraint::UnitInterval);
        assert!(ParameterSet::new(layout.clone(), vec![1.0]).is_err());
        assert!(ParameterSet::new(layout, vec![0.3]).is_ok());
    }

    #[test]
    fn random_intercept_needs_subjects() {
        let data = small_data(Family::Linear, 1);
        let model = ModelSpec::new(Family::RandomIntercept, product());
        let layout = layout_for(&model, (data.n_rows(), 4, 1)).unwrap();
        assert!(LogDensity::new(&model, &layout, &data).is_err());
    }

    #[test]
    fn model_spec_json() {
        let m: ModelSpec = serde_json::from_str(
            r#"{"family":"linear","prior":{"kind":"product","a":1,"b":1,"sigma_tau":1}}"#,
        )
        .unwrap();
        assert_eq!(m, ModelSpec::new(Family::Linear, product()));
        let h: ModelSpec =
            serde_json::from_str(r#"{"family":"poisson","prior":{"kind":"horseshoe","sigma_tau":1}}"#).unwrap();
        assert_eq!(h.prior, Prior::Horseshoe { sigma_tau: 1.0 });
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_constraint() -> impl Strategy<Value = Constraint> {
            prop_oneof![
                Just(Constraint::Free),
                Just(Constraint::Positive),
                Just(Constraint::UnitInterval)
            ]
        }

        proptest! {
            #[test]
            fn constrained_round_trip(c in any_constraint(), x in -20.0f64..20.0) {
                let layout = single(c);
                let (p, _) = to_constrained(&[x], &layout).unwrap();
                let u = to_unconstrained(&p);
                let (back, _) = to_constrained(&u, &layout).unwrap();
                prop_assert!((back.values[0] - p.values[0]).abs() <= 1e-12 * p.values[0].abs().max(1.0));
            }

            #[test]
            fn unconstrained_round_trip(c in any_constraint(), v in 0.001f64..0.999) {
                let layout = single(c);
                let value = if c == Constraint::Free { v * 40.0 - 20.0 } else if c == Constraint::Positive { v * 50.0 } else { v };
                let p = ParameterSet::new(layout.clone(), vec![value]).unwrap();
                let (back, _) = to_constrained(&to_unconstrained(&p), &layout).unwrap();
                prop_assert!((back.values[0] - value).abs() <= 1e-12 * value.abs().max(1.0));
            }
        }
    }
}

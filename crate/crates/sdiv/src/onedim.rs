//! Exact divergences between one-dimensional discrete measures.
//!
//! These are the "base divergences" fed to the slicing operator, and they are
//! interesting on their own because each has a closed form or a cheap solver
//! on sorted supports:
//!
//! | Function | Formula on sorted atoms |
//! |----------|-------------------------|
//! | [`wasserstein_1d`] | `W_p^p = ∫₀¹ |F_μ⁻¹(u) − F_ν⁻¹(u)|^p du` via a quantile merge |
//! | [`cramer_1d`]      | `C_p^p = ∫ |F_μ(t) − F_ν(t)|^p dt` over merged breakpoints |
//! | [`mmd_1d`]         | biased estimator `√(Σwwk + Σvvk − 2Σwvk)` clamped at 0 |
//! | [`sinkhorn_cost_1d`] | alternating scaling of `exp(−|x−y|^p/ε)` |
//! | [`sinkhorn_divergence_1d`] | debiased: `W(μ,ν) − ½W(μ,μ) − ½W(ν,ν)` |
//! | [`tv_1d`]          | `Σ_t |μ({t}) − ν({t})|`, atoms merged within 1e-12 |
//!
//! `W_{p,ε}` here always means the un-rooted regularized objective
//! `⟨γ,C⟩ + ε·H(γ|μ⊗ν)`; the bare transport term is reported separately in
//! [`SinkhornResult::transport_cost`] because the ε→0 limit compares against
//! `W_p^p`.

use crate::measures::SortedSupport1D;
use crate::sinkhorn;
use crate::{Error, Result};

/// Positive-definite kernel for MMD, evaluated on scalars in 1D or on points
/// in `R^d` (see [`crate::fulldim::mmd_nd`]). `Rbf { bandwidth: h }` is
/// `exp(−|s−t|²/h)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { bandwidth: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Linear => Ok(()),
            Kernel::Rbf { bandwidth } => {
                if bandwidth.is_finite() && *bandwidth > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!(
                        "rbf bandwidth must be positive, got {bandwidth}"
                    )))
                }
            }
        }
    }

    fn eval_1d(&self, s: f64, t: f64) -> f64 {
        match self {
            Kernel::Linear => s * t,
            Kernel::Rbf { bandwidth } => {
                let d = s - t;
                (-d * d / bandwidth).exp()
            }
        }
    }
}

/// Parameters of the regularized transport solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornConfig {
    /// Entropic regularization ε > 0.
    pub epsilon: f64,
    /// Stop once the plan's L1 marginal violation is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Ground cost exponent p ≥ 1 in `|x−y|^p`.
    pub cost_exponent: f64,
    /// Run in the log domain (stable for small ε / large costs, slower).
    pub log_domain: bool,
}

impl SinkhornConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            tolerance: 1e-6,
            max_iterations: 100_000,
            cost_exponent: 2.0,
            log_domain: false,
        }
    }

    pub fn with_order(mut self, p: f64) -> Self {
        self.cost_exponent = p;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_log_domain(mut self, log_domain: bool) -> Self {
        self.log_domain = log_domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.cost_exponent >= 1.0) {
            return Err(Error::InvalidOrder(self.cost_exponent));
        }
        Ok(())
    }
}

/// Outcome of a Sinkhorn solve.
///
/// `converged == false` means `max_iterations` was exhausted; the partial
/// result is still returned with its actual `marginal_error`. On a converged
/// return `marginal_error <= tolerance`.
#[derive(Debug, Clone)]
pub struct SinkhornResult {
    /// `⟨γ, C⟩`
    pub transport_cost: f64,
    /// `⟨γ, C⟩ + ε·H(γ | μ⊗ν)`
    pub regularized_objective: f64,
    pub iterations: usize,
    pub marginal_error: f64,
    pub scaling_a: Vec<f64>,
    pub scaling_b: Vec<f64>,
    pub converged: bool,
}

/// Debiased divergence with the convergence flags of its three solves folded
/// in: `converged` is true only if all three were.
#[derive(Debug, Clone, Copy)]
pub struct SinkhornDivergence {
    pub value: f64,
    /// Iterations of the cross (μ,ν) solve.
    pub iterations: usize,
    pub converged: bool,
}

fn check_order(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(p))
    }
}

pub(crate) fn pow_p(x: f64, p: f64) -> f64 {
    sinkhorn::pow_cost(x, p)
}

pub(crate) fn root_p(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / p)
    }
}

/// `W_p(μ, ν)` by merging the cumulative-weight partitions of `[0, 1]`:
/// on each merged segment both quantile functions are constant, so the
/// integral is a sum of `segment width × |quantile gap|^p` terms.
pub fn wasserstein_1d(mu: &SortedSupport1D, nu: &SortedSupport1D, p: f64) -> Result<f64> {
    check_order(p)?;
    Ok(root_p(wasserstein_pp_sorted(mu.locations(), mu.weights(), nu.locations(), nu.weights(), p), p))
}

/// `W_p^p` on raw sorted slices; shared with the hot slicing path.
pub(crate) fn wasserstein_pp_sorted(
    xs: &[f64],
    wx: &[f64],
    ys: &[f64],
    wy: &[f64],
    p: f64,
) -> f64 {
    let (n, m) = (xs.len(), ys.len());
    let mut ia = 0;
    let mut ib = 0;
    let mut ca = wx[0];
    let mut cb = wy[0];
    let mut prev = 0.0;
    let mut acc = 0.0;
    loop {
        let u = ca.min(cb);
        let seg = u - prev;
        if seg > 0.0 {
            acc += seg * pow_p(xs[ia] - ys[ib], p);
        }
        prev = u;
        let advance_a = ca <= cb;
        let advance_b = cb <= ca;
        if advance_a {
            ia += 1;
            if ia == n {
                break;
            }
            ca += wx[ia];
        }
        if advance_b {
            ib += 1;
            if ib == m {
                break;
            }
            cb += wy[ib];
        }
    }
    acc
}

/// `C_p(μ, ν)`: integrates `|F_μ − F_ν|^p` between consecutive breakpoints of
/// the merged support.
pub fn cramer_1d(mu: &SortedSupport1D, nu: &SortedSupport1D, p: f64) -> Result<f64> {
    check_order(p)?;
    let (xs, wx) = (mu.locations(), mu.weights());
    let (ys, wy) = (nu.locations(), nu.weights());
    let mut ia = 0;
    let mut ib = 0;
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut acc = 0.0;
    let mut prev_t: Option<f64> = None;
    while ia < xs.len() || ib < ys.len() {
        let t = match (xs.get(ia), ys.get(ib)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        if let Some(prev) = prev_t {
            acc += (t - prev) * pow_p(fa - fb, p);
        }
        while ia < xs.len() && xs[ia] == t {
            fa += wx[ia];
            ia += 1;
        }
        while ib < ys.len() && ys[ib] == t {
            fb += wy[ib];
            ib += 1;
        }
        prev_t = Some(t);
    }
    Ok(root_p(acc, p))
}

/// Biased MMD estimator: `√max(0, Σ w w k(x,x') + Σ v v k(y,y') − 2 Σ w v k(x,y))`.
pub fn mmd_1d(mu: &SortedSupport1D, nu: &SortedSupport1D, kernel: &Kernel) -> Result<f64> {
    kernel.validate()?;
    Ok(mmd_from_eval(
        mu.locations(),
        mu.weights(),
        nu.locations(),
        nu.weights(),
        |s, t| kernel.eval_1d(s, t),
    ))
}

pub(crate) fn mmd_from_eval<F: Fn(f64, f64) -> f64>(
    xs: &[f64],
    wx: &[f64],
    ys: &[f64],
    wy: &[f64],
    eval: F,
) -> f64 {
    // self terms are symmetric: fold the strict upper triangle twice
    let mut xx = 0.0;
    for i in 0..xs.len() {
        xx += wx[i] * wx[i] * eval(xs[i], xs[i]);
        for j in i + 1..xs.len() {
            xx += 2.0 * wx[i] * wx[j] * eval(xs[i], xs[j]);
        }
    }
    let mut yy = 0.0;
    for i in 0..ys.len() {
        yy += wy[i] * wy[i] * eval(ys[i], ys[i]);
        for j in i + 1..ys.len() {
            yy += 2.0 * wy[i] * wy[j] * eval(ys[i], ys[j]);
        }
    }
    let mut xy = 0.0;
    for (xi, wi) in xs.iter().zip(wx) {
        let mut inner = 0.0;
        for (yj, vj) in ys.iter().zip(wy) {
            inner += vj * eval(*xi, *yj);
        }
        xy += wi * inner;
    }
    (xx + yy - 2.0 * xy).max(0.0).sqrt()
}

/// Regularized transport between 1D measures with cost `|x−y|^p`.
pub fn sinkhorn_cost_1d(
    mu: &SortedSupport1D,
    nu: &SortedSupport1D,
    cfg: &SinkhornConfig,
) -> Result<SinkhornResult> {
    sinkhorn::solve_1d(mu.locations(), mu.weights(), nu.locations(), nu.weights(), cfg)
}

/// Debiased Sinkhorn divergence
/// `W̄ = W_{p,ε}(μ,ν) − ½(W_{p,ε}(μ,μ) + W_{p,ε}(ν,ν))`, each term the
/// regularized objective. Zero on identical inputs by construction.
pub fn sinkhorn_divergence_1d(
    mu: &SortedSupport1D,
    nu: &SortedSupport1D,
    cfg: &SinkhornConfig,
) -> Result<SinkhornDivergence> {
    let cross = sinkhorn_cost_1d(mu, nu, cfg)?;
    let self_mu = sinkhorn_cost_1d(mu, mu, cfg)?;
    let self_nu = sinkhorn_cost_1d(nu, nu, cfg)?;
    Ok(SinkhornDivergence {
        value: cross.regularized_objective
            - 0.5 * (self_mu.regularized_objective + self_nu.regularized_objective),
        iterations: cross.iterations,
        converged: cross.converged && self_mu.converged && self_nu.converged,
    })
}

/// Total variation `Σ_t |μ({t}) − ν({t})|` over the merged atom set; atoms
/// whose locations coincide within 1e-12 are treated as equal.
pub fn tv_1d(mu: &SortedSupport1D, nu: &SortedSupport1D) -> f64 {
    const MERGE_TOL: f64 = 1e-12;
    let (xs, wx) = (mu.locations(), mu.weights());
    let (ys, wy) = (nu.locations(), nu.weights());
    let mut ia = 0;
    let mut ib = 0;
    let mut total = 0.0;
    while ia < xs.len() || ib < ys.len() {
        let start = match (xs.get(ia), ys.get(ib)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let mut ma = 0.0;
        let mut mb = 0.0;
        while ia < xs.len() && xs[ia] - start <= MERGE_TOL {
            ma += wx[ia];
            ia += 1;
        }
        while ib < ys.len() && ys[ib] - start <= MERGE_TOL {
            mb += wy[ib];
            ib += 1;
        }
        total += (ma - mb).abs();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::SortedSupport1D as S;

    fn uniform(vals: &[f64]) -> S {
        S::uniform(vals.to_vec()).unwrap()
    }

    #[test]
    fn wasserstein_single_atoms() {
        let a = S::dirac(0.0);
        let b = S::dirac(1.0);
        assert_eq!(wasserstein_1d(&a, &b, 2.0).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&a, &a, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn wasserstein_two_point_brute_force() {
        // assignments of {0,2} to {1,3}: (1+1)/2 = 1 or (3+1)/2 = 2
        let a = uniform(&[0.0, 2.0]);
        let b = uniform(&[1.0, 3.0]);
        assert!((wasserstein_1d(&a, &b, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_rejects_bad_order() {
        let a = S::dirac(0.0);
        assert!(matches!(wasserstein_1d(&a, &a, 0.5), Err(Error::InvalidOrder(_))));
    }

    #[test]
    fn wasserstein_unequal_sizes_and_weights() {
        // mu = δ0, nu = ½δ0 + ½δ2: move half the mass by 2
        let a = S::dirac(0.0);
        let b = S::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!((wasserstein_1d(&a, &b, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((wasserstein_1d(&a, &b, 2.0).unwrap() - (2.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cramer_diracs() {
        let a = S::dirac(0.0);
        let b = S::dirac(1.0);
        // |F difference| = 1 on [0,1): ∫ 1 dt = 1 for both p = 1 and p = 2
        assert!((cramer_1d(&a, &b, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((cramer_1d(&a, &b, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cramer_1d(&a, &a, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn cramer_equals_wasserstein_at_order_one() {
        let a = S::new(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let b = S::new(vec![-0.5, 1.0], vec![0.6, 0.4]).unwrap();
        let c = cramer_1d(&a, &b, 1.0).unwrap();
        let w = wasserstein_1d(&a, &b, 1.0).unwrap();
        assert!((c - w).abs() <= 1e-10 * (1.0 + w));
    }

    #[test]
    fn mmd_identity_and_linear_kernel() {
        let a = S::new(vec![0.0, 1.0, 3.0], vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(mmd_1d(&a, &a, &Kernel::Rbf { bandwidth: 1.0 }).unwrap(), 0.0);
        // linear kernel: |weighted mean difference|
        let b = uniform(&[2.0, 4.0]);
        let mean_a = 0.5 * 0.0 + 0.25 * 1.0 + 0.25 * 3.0;
        let mean_b = 3.0;
        let got = mmd_1d(&a, &b, &Kernel::Linear).unwrap();
        assert!((got - (mean_a - mean_b).abs()) < 1e-12);
    }

    #[test]
    fn mmd_diracs_rbf() {
        let a = S::dirac(0.0);
        let b = S::dirac(1.0);
        let expect = (2.0 - 2.0 * (-1.0f64).exp()).sqrt();
        let got = mmd_1d(&a, &b, &Kernel::Rbf { bandwidth: 1.0 }).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn mmd_rejects_bad_bandwidth() {
        let a = S::dirac(0.0);
        assert!(mmd_1d(&a, &a, &Kernel::Rbf { bandwidth: 0.0 }).is_err());
    }

    #[test]
    fn sinkhorn_single_atom() {
        let a = S::dirac(0.0);
        let res = sinkhorn_cost_1d(&a, &a, &SinkhornConfig::new(0.5)).unwrap();
        assert_eq!(res.transport_cost, 0.0);
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
    }

    #[test]
    fn sinkhorn_forced_plan() {
        let a = S::dirac(0.0);
        let b = S::dirac(1.0);
        for eps in [0.05, 0.5, 2.0] {
            let res = sinkhorn_cost_1d(&a, &b, &SinkhornConfig::new(eps)).unwrap();
            assert!((res.transport_cost - 1.0).abs() < 1e-12, "eps={eps}");
        }
    }

    #[test]
    fn sinkhorn_eps_to_zero_limit_same_support() {
        let a = uniform(&[0.0, 1.0]);
        let res = sinkhorn_cost_1d(&a, &a, &SinkhornConfig::new(1e-3)).unwrap();
        assert!(res.transport_cost.abs() < 5e-3, "{}", res.transport_cost);
    }

    #[test]
    fn sinkhorn_divergence_identity_and_symmetry() {
        let a = uniform(&[0.0, 1.0]);
        let b = uniform(&[0.4, 2.0]);
        let cfg = SinkhornConfig::new(0.1);
        assert_eq!(sinkhorn_divergence_1d(&a, &a, &cfg).unwrap().value, 0.0);
        let ab = sinkhorn_divergence_1d(&a, &b, &cfg).unwrap().value;
        let ba = sinkhorn_divergence_1d(&b, &a, &cfg).unwrap().value;
        assert!(ab > 0.0);
        assert!((ab - ba).abs() < 1e-10);
    }

    #[test]
    fn sinkhorn_divergence_eps_limit() {
        let a = uniform(&[0.0, 1.0]);
        let b = uniform(&[2.0, 3.0]);
        let cfg = SinkhornConfig::new(1e-3).with_order(1.0);
        let got = sinkhorn_divergence_1d(&a, &b, &cfg).unwrap().value;
        assert!((got - 2.0).abs() < 1e-2, "{got}"); // W1 = 2 by the quantile formula
    }

    #[test]
    fn tv_cases() {
        let a = S::dirac(0.0);
        let b = S::dirac(1.0);
        assert_eq!(tv_1d(&a, &a), 0.0);
        assert_eq!(tv_1d(&a, &b), 2.0);
        let c = uniform(&[0.0, 1.0]);
        let d = uniform(&[0.0, 2.0]);
        assert!((tv_1d(&c, &d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tv_merges_atoms_within_tolerance() {
        let a = S::dirac(0.0);
        let b = S::dirac(5e-13);
        assert_eq!(tv_1d(&a, &b), 0.0);
    }
}

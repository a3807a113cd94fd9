//! Exponent algebra for the subcritical fast diffusion equation.
//!
//! Every construction in this crate is driven by the exponent pair
//! (alpha, beta) of the self-similar ansatz U(x,t) = t^{-alpha} f(t^{-beta} x)
//! together with the exponents of the inverted profile equation and the
//! weighted-L1 band (mu1, mu2). [`ExponentSet`] computes them all once,
//! checks the admissibility inequalities, and is then passed around as a
//! small immutable value.
//!
//! Admissible range: n >= 3, 0 < m < (n-2)/n and 2/(1-m) < gamma < (n-2)/m,
//! where gamma = alpha/beta is the singularity exponent of the initial
//! trace A |x|^{-gamma}.

use crate::error::{Error, Result};

/// Behaviour of the inverted profile g at r = 0, deciding which local
/// expansion seeds the fixed-point construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginRegime {
    /// 0 < m < (n-2)/(n+1): g is C^1 at the origin with g'(0) = 0.
    SmoothOrigin,
    /// (n-2)/(n+1) <= m < (n-2)/n: g is only Hoelder; r^{delta1} g'(r)
    /// tends to a finite negative limit.
    HoelderOrigin,
}

/// Margin used by the strict admissibility comparisons. Parameters closer
/// than this to the boundary of the open admissible set are rejected:
/// the constants of the construction blow up there.
pub const DEFAULT_MARGIN: f64 = 1e-10;

/// All derived exponents for a given (n, m, gamma), plus regime flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentSet {
    /// Space dimension, n >= 3.
    pub n: u32,
    /// Diffusion exponent, 0 < m < (n-2)/n.
    pub m: f64,
    /// Singularity exponent gamma = alpha/beta, in (2/(1-m), (n-2)/m).
    pub gamma: f64,
    /// Scaling normalisation; 1 for dynamics, arbitrary positive in
    /// pure profile mode.
    pub rho1: f64,
    /// beta = rho1 / (2 - gamma (1-m)) < 0.
    pub beta: f64,
    /// alpha = beta gamma = (2 beta - rho1)/(1-m) < 0.
    pub alpha: f64,
    /// Inverted-equation exponent alpha~ = alpha - beta (n-2)/m > 0.
    pub alpha_tilde: f64,
    /// Inverted-equation exponent beta~ = -beta > 0.
    pub beta_tilde: f64,
    /// Lower end of the contraction weight band, mu1 = max(0, n - gamma).
    pub mu1: f64,
    /// Upper end of the contraction weight band, mu2 = n - 2 - m gamma.
    pub mu2: f64,
    /// Hoelder exponent of g at the origin, delta0 = (1 - delta1)/2.
    pub delta0: f64,
    /// delta1 = 1 - (n-2-nm)/m; the Hoelder regime is delta1 in [0, 1).
    pub delta1: f64,
    /// k~ = beta~/alpha~.
    pub k_tilde: f64,
    /// k = beta/alpha = 1/gamma.
    pub k: f64,
    /// Origin regime of the inverted profile.
    pub regime: OriginRegime,
}

impl ExponentSet {
    /// Derives the exponent set for rho1 = 1 (the dynamical normalisation)
    /// with the default admissibility margin.
    pub fn derive(n: u32, m: f64, gamma: f64) -> Result<Self> {
        Self::derive_with(n, m, gamma, 1.0, DEFAULT_MARGIN)
    }

    /// Derives the exponent set for general rho1 > 0 and an explicit margin.
    pub fn derive_with(n: u32, m: f64, gamma: f64, rho1: f64, margin: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Range(format!("n >= 3 violated: n = {n}")));
        }
        let nf = f64::from(n);
        if !(m > margin) {
            return Err(Error::Range(format!("0 < m violated: m = {m}")));
        }
        let m_crit = (nf - 2.0) / nf;
        if !(m < m_crit - margin) {
            return Err(Error::Range(format!(
                "m < (n-2)/n violated: m = {m}, (n-2)/n = {m_crit}"
            )));
        }
        let gamma_lo = 2.0 / (1.0 - m);
        if !(gamma > gamma_lo + margin) {
            return Err(Error::Range(format!(
                "gamma > 2/(1-m) violated: gamma = {gamma}, 2/(1-m) = {gamma_lo}"
            )));
        }
        let gamma_hi = (nf - 2.0) / m;
        if !(gamma < gamma_hi - margin) {
            return Err(Error::Range(format!(
                "gamma < (n-2)/m violated: gamma = {gamma}, (n-2)/m = {gamma_hi}"
            )));
        }
        if !(rho1 > 0.0) {
            return Err(Error::Range(format!("rho1 > 0 violated: rho1 = {rho1}")));
        }

        let beta = rho1 / (2.0 - gamma * (1.0 - m));
        let alpha = beta * gamma;
        let beta_tilde = -beta;
        let alpha_tilde = alpha - (nf - 2.0) / m * beta;
        let mu1 = (nf - gamma).max(0.0);
        let mu2 = nf - 2.0 - m * gamma;
        let delta1 = 1.0 - (nf - 2.0 - nf * m) / m;
        let delta0 = 0.5 * (1.0 - delta1);
        let regime = if (0.0..1.0).contains(&delta1) {
            OriginRegime::HoelderOrigin
        } else {
            OriginRegime::SmoothOrigin
        };

        Ok(Self {
            n,
            m,
            gamma,
            rho1,
            beta,
            alpha,
            alpha_tilde,
            beta_tilde,
            mu1,
            mu2,
            delta0,
            delta1,
            k_tilde: beta_tilde / alpha_tilde,
            k: beta / alpha,
            regime,
        })
    }

    /// n as f64, used all over the numerics.
    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// The scaling exponent 2/(1-m).
    pub fn two_over_1m(&self) -> f64 {
        2.0 / (1.0 - self.m)
    }

    /// The far-field decay exponent (n-2)/m of the profile f.
    pub fn far_decay(&self) -> f64 {
        (self.nf() - 2.0) / self.m
    }

    /// sigma = (n-2-nm)/m > 1 - delta1; exponent of the singular
    /// coefficient in the inverted equation, and the leading origin power
    /// of the inverted profile.
    pub fn sigma(&self) -> f64 {
        (self.nf() - 2.0 - self.nf() * self.m) / self.m
    }

    /// True iff gamma < n, required for the weighted-contraction and
    /// long-time-convergence machinery (it makes the initial trace locally
    /// integrable and mu1 = n - gamma > 0).
    pub fn asymptotics_mode(&self) -> bool {
        self.gamma < self.nf()
    }

    /// The rescaling factor lambda mapping origin constant `a0` to `a`:
    /// lambda = (a/a0)^{1/(2/(1-m) - gamma)}. The exponent is negative in
    /// the admissible range, so lambda decreases in a/a0.
    pub fn lambda_for_a(&self, a: f64, a0: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(Error::Range(format!("A > 0 violated: A = {a}")));
        }
        if !(a0 > 0.0) {
            return Err(Error::Range(format!("A0 > 0 violated: A0 = {a0}")));
        }
        Ok((a / a0).powf(1.0 / (self.two_over_1m() - self.gamma)))
    }

    /// Origin constant lambda^{2/(1-m)-gamma} * a0 of the profile rescaled
    /// by `lambda` from a run with origin constant `a0`.
    pub fn a_for_lambda(&self, lambda: f64, a0: f64) -> f64 {
        lambda.powf(self.two_over_1m() - self.gamma) * a0
    }

    /// Far-field constant multiplier lambda^{2/(1-m)-(n-2)/m}.
    pub fn d_for_lambda(&self, lambda: f64, d0: f64) -> f64 {
        lambda.powf(self.two_over_1m() - self.far_decay()) * d0
    }
}

/// Free-function form of [`ExponentSet::derive`].
pub fn derive_exponents(n: u32, m: f64, gamma: f64) -> Result<ExponentSet> {
    ExponentSet::derive(n, m, gamma)
}

/// Free-function form of [`ExponentSet::asymptotics_mode`].
pub fn validate_asymptotics_mode(e: &ExponentSet) -> bool {
    e.asymptotics_mode()
}

/// Free-function form of [`ExponentSet::lambda_for_a`].
pub fn lambda_for_a(a: f64, e: &ExponentSet, a0: f64) -> Result<f64> {
    e.lambda_for_a(a, a0)
}

use crate::error::{Error, Result};

/// Edge-attribute distribution of the blockmodel. Each variant has a
/// conjugate prior over its block parameter, so block marginals are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// 0/1 ties, Beta(eta, eta) prior on the tie probability.
    Bernoulli,
    /// Labels 0..categories, symmetric Dirichlet(zeta) prior.
    Categorical { categories: u32 },
    /// Non-negative counts, Gamma(delta, rate gamma) prior on the rate.
    Poisson,
    /// Reals, Normal-Gamma prior: tau ~ Gamma(gamma/2, rate delta/2),
    /// mu | tau ~ N(xi, 1/(kappa*tau)).
    Gaussian,
}

impl ModelKind {
    /// Cell values are exact integers; dense and sparse paths must then
    /// produce bit-identical statistics.
    pub fn is_integer(&self) -> bool {
        !matches!(self, ModelKind::Gaussian)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Bernoulli => "bernoulli",
            ModelKind::Categorical { .. } => "categorical",
            ModelKind::Poisson => "poisson",
            ModelKind::Gaussian => "gaussian",
        }
    }

    pub fn from_name(name: &str, categories: Option<u32>) -> Result<Self> {
        match name {
            "bernoulli" => Ok(ModelKind::Bernoulli),
            "categorical" => {
                let c = categories.ok_or_else(|| {
                    Error::Config("categorical model requires a category count".into())
                })?;
                if c < 2 {
                    return Err(Error::Config(format!("need at least 2 categories, got {c}")));
                }
                Ok(ModelKind::Categorical { categories: c })
            }
            "poisson" => Ok(ModelKind::Poisson),
            "gaussian" => Ok(ModelKind::Gaussian),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }

    /// Domain check for one cell; `row`/`col` are 1-based for messages.
    pub fn check_cell(&self, v: f64, row: usize, col: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain { row, col, msg });
        match self {
            ModelKind::Bernoulli => {
                if v == 0.0 || v == 1.0 {
                    Ok(())
                } else {
                    fail(format!("value {v} is not a 0/1 tie"))
                }
            }
            ModelKind::Categorical { categories } => {
                if v.fract() == 0.0 && v >= 0.0 && v < f64::from(*categories) {
                    Ok(())
                } else {
                    fail(format!("value {v} is not a category in 0..{categories}"))
                }
            }
            ModelKind::Poisson => {
                if v.fract() == 0.0 && (0.0..=u64::MAX as f64).contains(&v) {
                    Ok(())
                } else {
                    fail(format!("value {v} is not a non-negative count"))
                }
            }
            ModelKind::Gaussian => {
                if v.is_finite() {
                    Ok(())
                } else {
                    fail(format!("value {v} is not finite"))
                }
            }
        }
    }
}

/// Hyperparameters of the label prior and of all four block-parameter priors.
/// `delta`/`gamma` are shared between the Poisson prior (shape delta, rate
/// gamma) and the Gaussian precision prior (shape gamma/2, rate delta/2),
/// mirroring the blockmodel's usual notation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    /// Dirichlet weight of the row-label prior.
    pub alpha0: f64,
    /// Dirichlet weight of the column-label prior.
    pub beta0: f64,
    /// Beta(eta, eta) for Bernoulli blocks.
    pub eta: f64,
    /// Symmetric Dirichlet(zeta) for categorical blocks.
    pub zeta: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Prior mean of a Gaussian block.
    pub xi: f64,
    /// Prior precision scale of the Gaussian block mean.
    pub kappa: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            alpha0: 1.0,
            beta0: 1.0,
            eta: 1.0,
            zeta: 1.0,
            delta: 1.0,
            gamma: 1.0,
            xi: 0.0,
            kappa: 1.0,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha0", self.alpha0),
            ("beta0", self.beta0),
            ("eta", self.eta),
            ("zeta", self.zeta),
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !self.xi.is_finite() {
            return Err(Error::Config(format!("xi must be finite, got {}", self.xi)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_domains() {
        assert!(ModelKind::Bernoulli.check_cell(1.0, 1, 1).is_ok());
        assert!(ModelKind::Bernoulli.check_cell(2.0, 3, 4).is_err());
        let cat = ModelKind::Categorical { categories: 3 };
        assert!(cat.check_cell(2.0, 1, 1).is_ok());
        assert!(cat.check_cell(3.0, 1, 1).is_err());
        assert!(cat.check_cell(1.5, 1, 1).is_err());
        assert!(ModelKind::Poisson.check_cell(7.0, 1, 1).is_ok());
        assert!(ModelKind::Poisson.check_cell(-1.0, 1, 1).is_err());
        assert!(ModelKind::Poisson.check_cell(2.5, 1, 1).is_err());
        assert!(ModelKind::Gaussian.check_cell(-3.25, 1, 1).is_ok());
        assert!(ModelKind::Gaussian.check_cell(f64::NAN, 1, 1).is_err());
    }

    #[test]
    fn domain_error_names_coordinates() {
        let err = ModelKind::Bernoulli.check_cell(2.0, 3, 4).unwrap_err();
        assert_eq!(err.to_string(), "cell (3,4): value 2 is not a 0/1 tie");
    }

    #[test]
    fn prior_validation_rejects_nonpositive() {
        let mut p = PriorConfig::default();
        assert!(p.validate().is_ok());
        p.eta = 0.0;
        assert!(p.validate().is_err());
        p.eta = 1.0;
        p.xi = f64::INFINITY;
        assert!(p.validate().is_err());
    }
}

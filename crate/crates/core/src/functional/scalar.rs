use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::geometry::SphereGrid;

type Provider = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync;

/// A prescribed function `K` on `∂B₁`, given by values and ambient gradients.
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    label: String,
    provider: Arc<Provider>,
    minimum: Option<(f64, Vec<f64>)>,
    antipodal: bool,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("label", &self.label)
            .field("minimum", &self.minimum)
            .field("antipodal", &self.antipodal)
            .finish()
    }
}

impl ScalarField {
    pub fn new(
        n: usize,
        label: impl Into<String>,
        antipodal: bool,
        provider: impl Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync + 'static,
    ) -> Self {
        ScalarField { n, label: label.into(), provider: Arc::new(provider), minimum: None, antipodal }
    }

    /// Registers the analytic minimum and one point where it is attained.
    pub fn with_minimum(mut self, value: f64, point: Vec<f64>) -> Self {
        self.minimum = Some((value, point));
        self
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut e = vec![0.0; n];
        e[n - 1] = 1.0;
        ScalarField::new(n, format!("constant({c})"), true, move |_| (c, vec![0.0; n])).with_minimum(c, e)
    }

    /// `K(ξ) = ξ_n + 2`; not antipodally symmetric.
    pub fn zn_plus_2(n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[n - 1] = 1.0;
        let mut south = vec![0.0; n];
        south[n - 1] = -1.0;
        ScalarField::new(n, "zn_plus_2", false, move |x| (x[n - 1] + 2.0, g.clone())).with_minimum(1.0, south)
    }

    /// `K(ξ) = ξ_n² + 1`.
    pub fn zn2_plus_1(n: usize) -> Self {
        let mut eq = vec![0.0; n];
        eq[0] = 1.0;
        ScalarField::new(n, "zn2_plus_1", true, move |x| {
            let mut g = vec![0.0; n];
            g[n - 1] = 2.0 * x[n - 1];
            (x[n - 1] * x[n - 1] + 1.0, g)
        })
        .with_minimum(1.0, eq)
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn is_antipodal(&self) -> bool {
        self.antipodal
    }
    pub fn analytic_minimum(&self) -> Option<(f64, &[f64])> {
        self.minimum.as_ref().map(|(v, p)| (*v, p.as_slice()))
    }

    pub fn value(&self, xi: &[f64]) -> f64 {
        (self.provider)(xi).0
    }
    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        (self.provider)(xi).1
    }
    pub fn eval(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        (self.provider)(xi)
    }

    /// Samples `K` on `grid`, checking positivity and, when flagged, antipodal
    /// symmetry at every node.
    pub fn register(&self, grid: &SphereGrid) -> Result<BoundaryField> {
        crate::geometry::check_dim(self.n, grid.dim())?;
        let k = BoundaryField::sample(grid, |x| self.value(x));
        for (i, &v) in k.values().iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveField { index: i, value: v });
            }
            if self.antipodal {
                let w = k.values()[grid.antipode()[i]];
                if (v - w).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::InvalidParameters(format!(
                        "{} flagged antipodal but K differs by {:e} at node {i}",
                        self.label,
                        (v - w).abs()
                    )));
                }
            }
        }
        Ok(k)
    }

    /// The registered minimum if there is one, otherwise the minimum over
    /// the nodes of `grid`.
    pub fn min_value(&self, grid: Option<&SphereGrid>) -> Result<f64> {
        if let Some((v, _)) = &self.minimum {
            return Ok(*v);
        }
        let grid = grid.ok_or_else(|| {
            Error::InvalidParameters(format!("{} has no registered minimum and no grid was given", self.label))
        })?;
        Ok(grid.nodes().map(|x| self.value(x)).fold(f64::INFINITY, f64::min))
    }

    /// `max |∇K|` over the nodes of `grid`.
    pub fn max_gradient(&self, grid: &SphereGrid) -> f64 {
        grid.nodes()
            .map(|x| self.gradient(x).iter().map(|g| g * g).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

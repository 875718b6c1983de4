//! Sampled fields on sphere and ball grids.

use crate::error::{Error, Result};
use crate::geometry::{BallGrid, GridTag, SphereGrid};

/// Anything that can be evaluated at a point of `∂B₁`.
pub trait SphereFunction {
    fn eval(&self, xi: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> SphereFunction for F {
    fn eval(&self, xi: &[f64]) -> f64 {
        self(xi)
    }
}

macro_rules! sampled_field {
    ($name:ident, $grid:ty, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            tag: GridTag,
            values: Vec<f64>,
        }

        impl $name {
            pub fn sample(grid: &$grid, f: impl Fn(&[f64]) -> f64) -> Self {
                $name { tag: grid.tag(), values: grid.nodes().map(f).collect() }
            }

            pub fn constant(grid: &$grid, c: f64) -> Self {
                $name { tag: grid.tag(), values: vec![c; grid.len()] }
            }

            pub fn from_values(grid: &$grid, values: Vec<f64>) -> Result<Self> {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "{} values for a grid of {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                Ok($name { tag: grid.tag(), values })
            }

            pub fn tag(&self) -> GridTag {
                self.tag
            }
            pub fn values(&self) -> &[f64] {
                &self.values
            }
            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
            pub fn into_values(self) -> Vec<f64> {
                self.values
            }
            pub fn len(&self) -> usize {
                self.values.len()
            }
            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn check(&self, grid: &$grid) -> Result<()> {
                if self.tag == grid.tag() {
                    Ok(())
                } else {
                    Err(Error::GridMismatch(format!(
                        "field sampled on {:?}, grid is {:?}",
                        self.tag,
                        grid.tag()
                    )))
                }
            }

            pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
                $name { tag: self.tag, values: self.values.iter().map(|&x| f(x)).collect() }
            }

            pub fn scaled(&self, c: f64) -> Self {
                self.map(|x| c * x)
            }
        }
    };
}

sampled_field!(BoundaryField, SphereGrid, "Samples of a function on the nodes of a [`SphereGrid`].");
sampled_field!(InteriorField, BallGrid, "Samples of a function on the nodes of a [`BallGrid`].");

impl BoundaryField {
    /// `∫_{∂B₁} f(v)` by the grid quadrature.
    pub fn integrate(&self, grid: &SphereGrid, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.check(grid)?;
        Ok(self.values.iter().zip(grid.weights()).map(|(&v, &w)| w * f(v)).sum())
    }
}

impl InteriorField {
    /// `∫_{B₁} f(U)` by the grid quadrature.
    pub fn integrate(&self, grid: &BallGrid, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.check(grid)?;
        Ok(self.values.iter().zip(grid.weights()).map(|(&v, &w)| w * f(v)).sum())
    }
}

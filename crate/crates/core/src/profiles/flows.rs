//! Closed-form background shear flows `U(y)`.

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::series::Jet;
use crate::error::{Error, Result};
use crate::registry::Registry;

/// A strictly increasing shear flow with Taylor-expandable `U`.
pub trait ShearFlow: Send + Sync {
    fn name(&self) -> &str;

    /// Taylor expansion of `U` at `y` to the given order.
    fn jet(&self, y: f64, order: usize) -> Jet;

    fn value(&self, y: f64) -> f64 {
        self.jet(y, 0).value()
    }

    fn slope(&self, y: f64) -> f64 {
        self.jet(y, 1).derivative(1)
    }
}

/// Profile section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpec {
    /// Registry name, or `constant_coefficient` for the frozen-coefficient surrogate.
    pub kind: String,
    pub amplitude: f64,
    pub expression: Option<String>,
    /// Surrogate coefficients (only for `constant_coefficient`).
    pub f_value: f64,
    pub g_value: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self {
            kind: "couette".into(),
            amplitude: 0.0,
            expression: None,
            f_value: 0.0,
            g_value: 1.0,
        }
    }
}

impl ProfileSpec {
    pub fn named(kind: &str, amplitude: f64) -> Self {
        Self {
            kind: kind.into(),
            amplitude,
            ..Self::default()
        }
    }

    pub fn constant_coefficient(f_value: f64, g_value: f64) -> Self {
        Self {
            kind: CONSTANT_COEFFICIENT.into(),
            f_value,
            g_value,
            ..Self::default()
        }
    }

    pub fn is_surrogate(&self) -> bool {
        self.kind == CONSTANT_COEFFICIENT
    }
}

pub const CONSTANT_COEFFICIENT: &str = "constant_coefficient";

pub fn flow_registry() -> Registry<dyn ShearFlow, ProfileSpec> {
    Registry::new("profile kind")
        .register("couette", couette)
        .register("affine", affine)
        .register("sine_perturbed", sine_perturbed)
        .register("quadratic", quadratic)
        .register("expression", expression)
}

fn couette(_: &ProfileSpec) -> Result<Box<dyn ShearFlow>> {
    Ok(Box::new(Affine { slope: 1.0 }))
}

fn affine(p: &ProfileSpec) -> Result<Box<dyn ShearFlow>> {
    let slope = if p.amplitude == 0.0 { 1.0 } else { p.amplitude };
    Ok(Box::new(Affine { slope }))
}

fn sine_perturbed(p: &ProfileSpec) -> Result<Box<dyn ShearFlow>> {
    Ok(Box::new(SinePerturbed {
        amplitude: p.amplitude,
    }))
}

fn quadratic(p: &ProfileSpec) -> Result<Box<dyn ShearFlow>> {
    Ok(Box::new(Quadratic {
        curvature: p.amplitude,
    }))
}

fn expression(p: &ProfileSpec) -> Result<Box<dyn ShearFlow>> {
    let src = p.expression.as_deref().ok_or_else(|| {
        Error::Validation("profile.kind = expression needs profile.expression".into())
    })?;
    Ok(Box::new(Expression {
        expr: Expr::parse(src)?,
    }))
}

/// `U(y) = slope · y`; Couette flow is `slope = 1`.
pub struct Affine {
    pub slope: f64,
}

impl ShearFlow for Affine {
    fn name(&self) -> &str {
        if self.slope == 1.0 {
            "couette"
        } else {
            "affine"
        }
    }

    fn jet(&self, y: f64, order: usize) -> Jet {
        Jet::variable(y, order).scale(self.slope)
    }
}

/// `U(y) = y + A sin(2πy)`.
pub struct SinePerturbed {
    pub amplitude: f64,
}

impl ShearFlow for SinePerturbed {
    fn name(&self) -> &str {
        "sine_perturbed"
    }

    fn jet(&self, y: f64, order: usize) -> Jet {
        let x = Jet::variable(y, order);
        let s = x.scale(2.0 * std::f64::consts::PI).sin_cos().0;
        &x + &s.scale(self.amplitude)
    }
}

/// `U(y) = y + a y²`, whose `f = U''∘U⁻¹ ≡ 2a` has vanishing derivatives.
pub struct Quadratic {
    pub curvature: f64,
}

impl ShearFlow for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn jet(&self, y: f64, order: usize) -> Jet {
        let x = Jet::variable(y, order);
        &x + &(&x * &x).scale(self.curvature)
    }
}

pub struct Expression {
    expr: Expr,
}

impl ShearFlow for Expression {
    fn name(&self) -> &str {
        self.expr.source()
    }

    fn jet(&self, y: f64, order: usize) -> Jet {
        self.expr.jet(y, order)
    }
}

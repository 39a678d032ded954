//! Manufactured solutions with `u = 0` on the boundary of the unit square.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Point;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Scalar diffusion coefficient `alpha > 0`; the flux equation uses
/// `c = 1 / alpha`.
#[derive(Clone)]
pub struct CoefficientField {
    alpha: ScalarFn,
    constant: Option<f64>,
}

impl CoefficientField {
    pub fn constant(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("coefficient must be positive, got {alpha}")));
        }
        Ok(CoefficientField { alpha: Arc::new(move |_| alpha), constant: Some(alpha) })
    }

    pub fn new(alpha: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientField { alpha: Arc::new(alpha), constant: None }
    }

    pub fn alpha(&self, x: Point) -> f64 {
        self.alpha.as_ref()(x)
    }

    /// `1 / alpha(x)`, failing where `alpha` is not strictly positive.
    pub fn c(&self, x: Point) -> Result<f64> {
        let a = self.alpha(x);
        if a.is_finite() && a > 0.0 {
            Ok(1.0 / a)
        } else {
            Err(Error::InvalidArgument(format!("coefficient alpha({}, {}) = {a} is not positive", x[0], x[1])))
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(a) => write!(f, "CoefficientField({a})"),
            None => f.write_str("CoefficientField(<fn>)"),
        }
    }
}

/// Exact solution `(p, u)` with `p = -alpha grad u` and data
/// `f = div p = -div(alpha grad u)`.
#[derive(Clone)]
pub struct Manufactured {
    pub name: String,
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    pub coeff: CoefficientField,
    pub f: ScalarFn,
}

impl fmt::Debug for Manufactured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Manufactured({})", self.name)
    }
}

impl Manufactured {
    pub fn u(&self, x: Point) -> f64 {
        self.u.as_ref()(x)
    }

    pub fn grad_u(&self, x: Point) -> Point {
        self.grad_u.as_ref()(x)
    }

    pub fn p(&self, x: Point) -> Point {
        let a = self.coeff.alpha(x);
        let g = self.grad_u(x);
        [-a * g[0], -a * g[1]]
    }

    pub fn div_p(&self, x: Point) -> f64 {
        self.f(x)
    }

    pub fn f(&self, x: Point) -> f64 {
        self.f.as_ref()(x)
    }

    /// `u = 0`, `alpha = 1`: error norms against it are norms of the
    /// discrete function itself.
    pub fn zero() -> Self {
        Manufactured {
            name: "zero".into(),
            u: Arc::new(|_| 0.0),
            grad_u: Arc::new(|_| [0.0, 0.0]),
            coeff: CoefficientField::constant(1.0).unwrap(),
            f: Arc::new(|_| 0.0),
        }
    }

    /// Zero solution with constant unit coefficient but the given load;
    /// only meaningful as assembly input.
    pub fn load_only(name: &str, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Manufactured { name: name.into(), f: Arc::new(f), ..Self::zero() }
    }
}

pub const CASE_NAMES: [&str; 3] = ["sine", "poly", "varcoef"];

/// `sine`, `poly` or `varcoef`.
pub fn manufactured_case(name: &str) -> Result<Manufactured> {
    let sine_u = |x: Point| (PI * x[0]).sin() * (PI * x[1]).sin();
    let sine_grad =
        |x: Point| [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()];
    match name {
        "sine" => Ok(Manufactured {
            name: name.into(),
            u: Arc::new(sine_u),
            grad_u: Arc::new(sine_grad),
            coeff: CoefficientField::constant(1.0)?,
            f: Arc::new(move |x| 2.0 * PI * PI * sine_u(x)),
        }),
        "poly" => Ok(Manufactured {
            name: name.into(),
            u: Arc::new(|x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])),
            grad_u: Arc::new(|x| {
                [(1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]), x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1])]
            }),
            coeff: CoefficientField::constant(1.0)?,
            f: Arc::new(|x| 2.0 * (x[0] * (1.0 - x[0]) + x[1] * (1.0 - x[1]))),
        }),
        "varcoef" => Ok(Manufactured {
            name: name.into(),
            u: Arc::new(sine_u),
            grad_u: Arc::new(sine_grad),
            coeff: CoefficientField::new(|x| 1.0 + x[0] * x[1]),
            // -div(alpha grad u) = -(grad alpha . grad u) + alpha 2 pi^2 u
            f: Arc::new(move |x| {
                let g = sine_grad(x);
                -(x[1] * g[0] + x[0] * g[1]) + (1.0 + x[0] * x[1]) * 2.0 * PI * PI * sine_u(x)
            }),
        }),
        _ => Err(Error::UnknownCase(name.into())),
    }
}

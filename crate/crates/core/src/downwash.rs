//! Planar downwash interaction between two vehicles.
//!
//! The wind below a vehicle of thrust `T` decays as a Gaussian in the
//! horizontal separation and as `1/delta_y` vertically. Integrating the
//! resulting drag density across the span of the vehicle below gives closed
//! forms in `erf` and `exp` for the vertical drag force and the drag torque.
//!
//! Separations are `delta = p_top - p_bottom`, so `delta_y > 0`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::jets::Real;
use crate::plant::QuadParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownwashParams {
    pub c1: f64,
    pub c2: f64,
    /// Airframe drag coefficient.
    pub drag_coefficient: f64,
    /// Vehicle span (twice the arm length) [m].
    pub span: f64,
    /// Air density [kg/m^3].
    pub air_density: f64,
}

impl Default for DownwashParams {
    fn default() -> Self {
        DownwashParams {
            c1: 1.0,
            c2: 0.7,
            drag_coefficient: 1.18,
            span: 0.3,
            air_density: 1.225,
        }
    }
}

impl DownwashParams {
    /// `C3 = rho * C_D * C1^2 / 2`
    pub fn c3(&self) -> f64 {
        0.5 * self.air_density * self.drag_coefficient * self.c1 * self.c1
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("drag_coefficient", self.drag_coefficient),
            ("span", self.span),
            ("air_density", self.air_density),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("downwash parameter {name} = {v} must be > 0")));
            }
        }
        Ok(())
    }

    /// Drag density at span coordinate `l` (hub at zero). Scalar only; used
    /// for plotting and by the quadrature checks.
    pub fn drag_density(&self, delta: [f64; 2], thrust: f64, l: f64) -> f64 {
        let [dx, dy] = delta;
        let k = 2.0 * self.c2 / (dy * dy);
        self.c3() * thrust * self.span * self.span / (dy * dy) * (-k * (dx + l).powi(2)).exp()
    }
}

fn check_separation<R: Real>(delta_y: &R) -> Result<()> {
    let dy = delta_y.value();
    if dy > 0.0 {
        Ok(())
    } else {
        Err(Error::SeparationDomain { delta_y: dy })
    }
}

/// `erf(hi) - erf(lo)` for `lo <= hi`, through `erfc` when both lie in the
/// same tail so the difference keeps its relative accuracy.
fn erf_diff<R: Real>(hi: R, lo: R) -> R {
    if lo.value() > 0.0 {
        lo.erfc() - hi.erfc()
    } else if hi.value() < 0.0 {
        (-hi).erfc() - (-lo).erfc()
    } else {
        hi.erf() - lo.erf()
    }
}

/// Wind speed below the upper vehicle: `C1 sqrt(T) L / dy * exp(-C2 (dx/dy)^2)`.
pub fn wind_velocity<R: Real>(dx: R, dy: R, thrust: R, p: &DownwashParams) -> Result<R> {
    check_separation(&dy)?;
    let ratio = dx / dy;
    Ok(thrust.sqrt() * (p.c1 * p.span) / dy * (-(ratio * ratio) * p.c2).exp())
}

/// Vertical drag force on the lower vehicle (non-positive for `T >= 0`).
pub fn drag_force<R: Real>(dx: R, dy: R, thrust: R, p: &DownwashParams) -> Result<R> {
    check_separation(&dy)?;
    let root = (2.0 * p.c2).sqrt();
    let half = 0.5 * p.span;
    let scale = -p.c3() * PI.sqrt() * p.span * p.span / (2.0 * root);
    let sk = dy.lift(root) / dy;
    let bracket = erf_diff(sk * (dx + half), sk * (dx - half));
    Ok(thrust * scale / dy * bracket)
}

/// Drag torque on the lower vehicle, `-integral of l * D(dx + l) dl` over the span.
pub fn drag_torque<R: Real>(dx: R, dy: R, thrust: R, p: &DownwashParams) -> Result<R> {
    check_separation(&dy)?;
    let root = (2.0 * p.c2).sqrt();
    let half = 0.5 * p.span;
    let dy2 = dy * dy;
    let k = dy.lift(2.0 * p.c2) / dy2;
    let sk = dy.lift(root) / dy;
    let lo = dx - half;
    let hi = dx + half;
    let gauss = (-(k * lo * lo)).exp() - (-(k * hi * hi)).exp();
    let erfs = erf_diff(sk * hi, sk * lo);
    let inner = -(dy2 * gauss) / (4.0 * p.c2) + dx * dy * erfs * (PI.sqrt() / (2.0 * root));
    Ok(thrust * (p.c3() * p.span * p.span) / dy2 * inner)
}

/// Drag force with the upper thrust replaced by the hover weight.
pub fn approx_drag_force<R: Real>(dx: R, dy: R, p: &DownwashParams, quad: &QuadParams) -> Result<R> {
    let weight = dx.lift(quad.weight());
    drag_force(dx, dy, weight, p)
}

/// Drag torque with the upper thrust replaced by the hover weight.
pub fn approx_drag_torque<R: Real>(dx: R, dy: R, p: &DownwashParams, quad: &QuadParams) -> Result<R> {
    let weight = dx.lift(quad.weight());
    drag_torque(dx, dy, weight, p)
}

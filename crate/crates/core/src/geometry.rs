//! Coordinates, scene description and the element-range geometry of the IRS panel.
//!
//! Spherical coordinates use the polar angle from +z as the depression angle and the
//! azimuth from +x in the x-y plane. The IRS panel lies in the local Y-Z plane: element
//! `(h, nu)` sits at `irs_origin + (0, h*d_R, nu*d_R)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cartesian {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Cartesian {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(&self, o: &Cartesian) -> Cartesian {
        Cartesian::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(&self, o: &Cartesian) -> Cartesian {
        Cartesian::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dist(&self, o: &Cartesian) -> f64 {
        self.sub(o).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spherical {
    /// Polar angle from +z, in [0, pi].
    pub depression: f64,
    /// Azimuth from +x, in (-pi, pi].
    pub azimuth: f64,
    pub range: f64,
}

impl Spherical {
    pub fn new(depression: f64, azimuth: f64, range: f64) -> Result<Self> {
        let s = Self {
            depression,
            azimuth,
            range,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0) || !self.range.is_finite() {
            return domain(format!("range must be positive and finite, got {}", self.range));
        }
        if !(0.0..=PI).contains(&self.depression) {
            return domain(format!("depression {} outside [0, pi]", self.depression));
        }
        if !(-PI..=PI).contains(&self.azimuth) {
            return domain(format!("azimuth {} outside [-pi, pi]", self.azimuth));
        }
        Ok(())
    }
}

pub fn spherical_to_cartesian(s: &Spherical, origin: &Cartesian) -> Cartesian {
    let (st, ct) = s.depression.sin_cos();
    let (sp, cp) = s.azimuth.sin_cos();
    Cartesian::new(
        origin.x + s.range * st * cp,
        origin.y + s.range * st * sp,
        origin.z + s.range * ct,
    )
}

pub fn cartesian_to_spherical(p: &Cartesian, origin: &Cartesian) -> Result<Spherical> {
    let d = p.sub(origin);
    let r = d.norm();
    if !(r > 0.0) || !r.is_finite() {
        return domain("point coincides with the origin");
    }
    let depression = (d.z / r).clamp(-1.0, 1.0).acos();
    let azimuth = d.y.atan2(d.x);
    Ok(Spherical {
        depression,
        azimuth,
        range: r,
    })
}

/// Near/far-field boundary `2 D^2 / lambda`.
pub fn fraunhofer_distance(aperture: f64, wavelength: f64) -> Result<f64> {
    if !(aperture > 0.0) || !(wavelength > 0.0) {
        return domain(format!(
            "aperture and wavelength must be positive (D = {aperture}, lambda = {wavelength})"
        ));
    }
    Ok(2.0 * aperture * aperture / wavelength)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub m_y: usize,
    pub m_z: usize,
    pub spacing: f64,
}

impl Panel {
    pub fn m(&self) -> usize {
        self.m_y * self.m_z
    }

    /// Position of element `(h, nu)` relative to the reference element.
    pub fn element_offset(&self, h: usize, nu: usize) -> Cartesian {
        Cartesian::new(0.0, h as f64 * self.spacing, nu as f64 * self.spacing)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ula {
    pub n: usize,
    pub spacing: f64,
}

/// Law-of-cosines ranges from the vertical (`nu`) and horizontal (`h`) panel elements to a receiver.
pub fn irs_element_ranges(receiver: &Spherical, panel: &Panel) -> Result<(Vec<f64>, Vec<f64>)> {
    receiver.validate()?;
    let r = receiver.range;
    let d = panel.spacing;
    let cos_v = receiver.depression.cos();
    let cos_h = receiver.azimuth.sin() * receiver.depression.sin();
    let range = |i: usize, c: f64| {
        let o = i as f64 * d;
        (r * r + o * o - 2.0 * r * o * c).max(0.0).sqrt()
    };
    let vertical = (0..panel.m_z).map(|nu| range(nu, cos_v)).collect();
    let horizontal = (0..panel.m_y).map(|h| range(h, cos_h)).collect();
    Ok((vertical, horizontal))
}

/// Feasible box for the UAV. `theta_*` bound the polar angle of the UAV-to-IRS line
/// (values above pi/2 look down onto the IRS); `phi_*` bound the UAV azimuth about the IRS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleBox {
    pub theta_min: f64,
    pub theta_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl AngleBox {
    pub fn validate(&self) -> Result<()> {
        let ok = self.theta_min <= self.theta_max
            && self.phi_min <= self.phi_max
            && (0.0..=PI).contains(&self.theta_min)
            && (0.0..=PI).contains(&self.theta_max)
            && self.phi_min >= -PI
            && self.phi_max <= PI;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("angle box bounds not ordered or out of range: {self:?}")))
        }
    }

    /// Horizontal-radius interval about the IRS for a UAV at `height` above the IRS.
    pub fn radius_bounds(&self, height: f64) -> (f64, f64) {
        let polar_lo = PI - self.theta_max;
        let polar_hi = PI - self.theta_min;
        let lo = if polar_lo <= 0.0 { 0.0 } else { height * polar_lo.tan() };
        let hi = if polar_hi >= FRAC_PI_2 {
            f64::INFINITY
        } else {
            height * polar_hi.tan()
        };
        (lo, hi)
    }

    fn clamp_azimuth(&self, phi: f64) -> f64 {
        if phi >= self.phi_min && phi <= self.phi_max {
            return phi;
        }
        let dist = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        };
        if dist(phi, self.phi_min) <= dist(phi, self.phi_max) {
            self.phi_min
        } else {
            self.phi_max
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub uav: Cartesian,
    pub irs_origin: Cartesian,
    pub users: Vec<Cartesian>,
    pub eve: Cartesian,
    pub uav_height: f64,
    pub irs_height: f64,
    pub panel: Panel,
    pub ula: Ula,
    pub wavelength: f64,
    pub angle_box: AngleBox,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let k = self.users.len();
        let n = self.ula.n;
        let m = self.panel.m();
        if k == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if !(k < n && n < m) {
            return Err(Error::Config(format!(
                "K_u < N < M violated: K_u = {k}, N = {n}, M = {m}"
            )));
        }
        if !(self.uav_height > 0.0) || !(self.irs_height > 0.0) {
            return Err(Error::Config("heights must be positive".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        if !(self.panel.spacing > 0.0) || !(self.ula.spacing > 0.0) {
            return Err(Error::Config("element spacings must be positive".into()));
        }
        self.angle_box.validate()?;
        let all = std::iter::once(&self.uav)
            .chain(self.users.iter())
            .chain(std::iter::once(&self.eve));
        for p in all {
            if !p.is_finite() {
                return Err(Error::Config("non-finite coordinate".into()));
            }
        }
        Ok(())
    }

    pub fn k_users(&self) -> usize {
        self.users.len()
    }

    /// Users followed by the eavesdropper.
    pub fn receivers(&self) -> impl Iterator<Item = &Cartesian> {
        self.users.iter().chain(std::iter::once(&self.eve))
    }

    pub fn ground_z(&self) -> f64 {
        self.irs_origin.z - self.irs_height
    }

    pub fn uav_z(&self) -> f64 {
        self.ground_z() + self.uav_height
    }

    pub fn uav_at(&self, x: f64, y: f64) -> Cartesian {
        Cartesian::new(x, y, self.uav_z())
    }

    pub fn with_uav(&self, uav: Cartesian) -> Scene {
        Scene {
            uav,
            ..self.clone()
        }
    }

    /// Polar angle of the UAV-to-IRS line and UAV azimuth about the IRS.
    pub fn uav_box_angles(&self) -> (f64, f64) {
        let d = self.uav.sub(&self.irs_origin);
        let rho = d.x.hypot(d.y);
        let theta_line = PI - rho.atan2(d.z);
        (theta_line, d.y.atan2(d.x))
    }

    pub fn uav_in_box(&self, tol: f64) -> bool {
        let (t, p) = self.uav_box_angles();
        let b = &self.angle_box;
        let d = self.uav.sub(&self.irs_origin);
        let rho = d.x.hypot(d.y);
        let az_ok = rho <= tol || (p >= b.phi_min - tol && p <= b.phi_max + tol);
        t >= b.theta_min - tol && t <= b.theta_max + tol && az_ok
    }

    /// Component-wise clamp of a candidate UAV `(x, y)` onto the angle box, at fixed altitude.
    pub fn project_uav(&self, x: f64, y: f64) -> Cartesian {
        let h = self.uav_z() - self.irs_origin.z;
        let (lo, hi) = self.angle_box.radius_bounds(h);
        let dx = x - self.irs_origin.x;
        let dy = y - self.irs_origin.y;
        let rho = dx.hypot(dy);
        let phi = if rho > 0.0 {
            dy.atan2(dx)
        } else {
            self.angle_box.phi_min
        };
        let phi_c = self.angle_box.clamp_azimuth(phi);
        let rho_c = rho.clamp(lo, hi);
        if rho_c == rho && phi_c == phi {
            return self.uav_at(x, y);
        }
        let (s, c) = phi_c.sin_cos();
        self.uav_at(self.irs_origin.x + rho_c * c, self.irs_origin.y + rho_c * s)
    }

    /// UAV placed at box angles `(theta_line, phi)`.
    pub fn uav_from_box_angles(&self, theta_line: f64, phi: f64) -> Cartesian {
        let h = self.uav_z() - self.irs_origin.z;
        let polar = PI - theta_line;
        let rho = h * polar.tan();
        let (s, c) = phi.sin_cos();
        self.uav_at(self.irs_origin.x + rho * c, self.irs_origin.y + rho * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_reference_ray() {
        let s = Spherical::new(FRAC_PI_2, 0.0, 5.0).unwrap();
        let p = spherical_to_cartesian(&s, &Cartesian::new(0.0, 0.0, 0.0));
        assert!((p.x - 5.0).abs() < 1e-12 && p.y.abs() < 1e-12 && p.z.abs() < 1e-12);
    }

    #[test]
    fn polar_axis() {
        let s = Spherical::new(0.0, 0.3, 7.5).unwrap();
        let o = Cartesian::new(1.0, -2.0, 3.0);
        let p = spherical_to_cartesian(&s, &o);
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y + 2.0).abs() < 1e-12);
        assert!((p.z - 10.5).abs() < 1e-12);
    }

    #[test]
    fn fraunhofer_values() {
        let d = fraunhofer_distance(0.39, 0.006).unwrap();
        assert!((d - 50.7).abs() < 1e-9);
        assert!((d - 50.75).abs() < 0.1);
        assert_eq!(fraunhofer_distance(1.0, 2.0).unwrap(), 1.0);
        let half = fraunhofer_distance(0.39, 0.012).unwrap();
        assert!((half - d / 2.0).abs() < 1e-12);
        assert!(fraunhofer_distance(0.0, 1.0).is_err());
        assert!(fraunhofer_distance(1.0, -1.0).is_err());
    }

    #[test]
    fn element_ranges_special_cases() {
        let panel = Panel { m_y: 4, m_z: 5, spacing: 0.01 };
        let rx = Spherical::new(FRAC_PI_2, 0.0, 3.0).unwrap();
        let (v, h) = irs_element_ranges(&rx, &panel).unwrap();
        assert_eq!(v[0], 3.0);
        assert_eq!(h[0], 3.0);
        for (nu, r) in v.iter().enumerate() {
            let o = nu as f64 * 0.01;
            assert!((r - (9.0 + o * o).sqrt()).abs() < 1e-14);
        }
        let bad = Spherical { depression: 1.0, azimuth: 0.0, range: 0.0 };
        assert!(irs_element_ranges(&bad, &panel).is_err());
    }

    #[test]
    fn radius_bounds_of_reference_box() {
        let b = AngleBox {
            theta_min: 5.0 * PI / 9.0,
            theta_max: 5.0 * PI / 6.0,
            phi_min: 0.0,
            phi_max: FRAC_PI_2,
        };
        let (lo, hi) = b.radius_bounds(99.0);
        assert!((lo - 99.0 * (PI / 6.0).tan()).abs() < 1e-9);
        assert!((hi - 99.0 * (4.0 * PI / 9.0).tan()).abs() < 1e-9);
    }
}

//! LoS steering vectors, Rician path-loss amplitudes, the aggregated LoS channel and the
//! effective-noise statistics of the residual NLoS terms.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{cartesian_to_spherical, irs_element_ranges, Cartesian, Panel, Scene, Spherical};

pub type C64 = Complex64;

/// Distance exponent of the IRS-receiver path loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrsUserLoss {
    /// `rho / d`
    Printed,
    /// `rho / d^2`
    Squared,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub rho: f64,
    pub eps_ar: f64,
    pub eps_rg: f64,
    pub eps_ag: f64,
    /// Thermal noise power sigma^2 in mW.
    pub noise_power: f64,
    pub irs_user_loss: IrsUserLoss,
}

/// Path-loss factors and the derived Rician amplitudes of one receiver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLossSet {
    pub rho: f64,
    pub alpha_ar: f64,
    pub alpha_rg: f64,
    pub alpha_ag: f64,
    pub eps_ar: f64,
    pub eps_rg: f64,
    pub eps_ag: f64,
    /// zeta^1..zeta^4
    pub zeta: [f64; 4],
    /// upsilon^1, upsilon^2
    pub upsilon: [f64; 2],
}

impl PathLossSet {
    pub fn new(p: &ChannelParams, d_ar: f64, d_rg: f64, d_ag: f64) -> Result<Self> {
        if !(d_ar > 0.0 && d_rg > 0.0 && d_ag > 0.0) {
            return domain("link distances must be positive");
        }
        for e in [p.eps_ar, p.eps_rg, p.eps_ag] {
            if !(0.0..=1.0).contains(&e) {
                return domain(format!("LoS power ratio {e} outside [0, 1]"));
            }
        }
        let alpha_ar = p.rho / (d_ar * d_ar);
        let alpha_rg = match p.irs_user_loss {
            IrsUserLoss::Printed => p.rho / d_rg,
            IrsUserLoss::Squared => p.rho / (d_rg * d_rg),
        };
        let alpha_ag = p.rho / (d_ag * d_ag);
        Ok(Self {
            rho: p.rho,
            alpha_ar,
            alpha_rg,
            alpha_ag,
            eps_ar: p.eps_ar,
            eps_rg: p.eps_rg,
            eps_ag: p.eps_ag,
            zeta: [
                (alpha_rg * p.eps_rg).sqrt(),
                (alpha_rg * (1.0 - p.eps_rg)).sqrt(),
                (alpha_ag * p.eps_ag).sqrt(),
                (alpha_ag * (1.0 - p.eps_ag)).sqrt(),
            ],
            upsilon: [
                (alpha_ar * p.eps_ar).sqrt(),
                (alpha_ar * (1.0 - p.eps_ar)).sqrt(),
            ],
        })
    }
}

fn phasor(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn ula_steering(theta: f64, n: usize, spacing: f64, wavelength: f64) -> Result<Vec<C64>> {
    if n == 0 {
        return domain("ULA needs at least one element");
    }
    let step = 2.0 * PI * spacing * theta.cos() / wavelength;
    Ok((0..n).map(|i| phasor(i as f64 * step)).collect())
}

/// Far-field steering from the UAV onto the panel: `(a` over M_Z`, b` over M_Y`)`.
/// `theta`, `phi` are the angles of the UAV as seen from the IRS.
pub fn irs_tx_steering(theta: f64, phi: f64, panel: &Panel, wavelength: f64) -> (Vec<C64>, Vec<C64>) {
    let k = 2.0 * PI * panel.spacing / wavelength;
    let sv = k * theta.cos();
    let sh = k * phi.sin() * theta.sin();
    let a = (0..panel.m_z).map(|i| phasor(i as f64 * sv)).collect();
    let b = (0..panel.m_y).map(|i| phasor(i as f64 * sh)).collect();
    (a, b)
}

/// Near-field steering from the panel to a receiver: entry `m` has phase `2pi(r - r_m)/lambda`.
pub fn irs_rx_steering(receiver: &Spherical, panel: &Panel, wavelength: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    let (rv, rh) = irs_element_ranges(receiver, panel)?;
    let r = receiver.range;
    let k = 2.0 * PI / wavelength;
    let a = rv.iter().map(|&x| phasor(k * (r - x))).collect();
    let b = rh.iter().map(|&x| phasor(k * (r - x))).collect();
    Ok((a, b))
}

pub fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ReceiverChannel {
    pub position: Cartesian,
    /// h_bar_R,g over the panel, length M.
    pub h_r: Vec<C64>,
    /// h_bar_A,g over the UAV array, length N.
    pub h_a: Vec<C64>,
    pub loss: PathLossSet,
}

/// LoS components for every receiver; users come first, the eavesdropper last.
#[derive(Clone, Debug)]
pub struct LosChannelSet {
    pub a_ar: Vec<C64>,
    pub b_ar: Vec<C64>,
    /// a_AR kron b_AR, length M.
    pub irs_tx: Vec<C64>,
    /// h_A,R, length N.
    pub h_ar: Vec<C64>,
    pub receivers: Vec<ReceiverChannel>,
    pub k_users: usize,
    pub noise_power: f64,
    pub params: ChannelParams,
    uav: Cartesian,
    irs: Cartesian,
    panel: Panel,
    ula_spacing: f64,
    wavelength: f64,
}

impl LosChannelSet {
    pub fn m(&self) -> usize {
        self.irs_tx.len()
    }

    pub fn n(&self) -> usize {
        self.h_ar.len()
    }

    pub fn uav_position(&self) -> Cartesian {
        self.uav
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn eve(&self) -> usize {
        self.k_users
    }

    /// Dense M x N matrix G_bar.
    pub fn g_bar(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.m(), self.n(), |i, j| self.irs_tx[i] * self.h_ar[j])
    }

    /// G_bar w, computed through the rank-one factorisation.
    pub fn g_bar_w(&self, w: &[C64]) -> Vec<C64> {
        let s = dot(&self.h_ar, w);
        self.irs_tx.iter().map(|&x| x * s).collect()
    }

    /// Channel of a receiver at an arbitrary position, sharing this UAV/IRS geometry.
    pub fn virtual_receiver(&self, position: Cartesian) -> Result<ReceiverChannel> {
        receiver_channel(
            &self.params,
            &self.uav,
            &self.irs,
            &self.panel,
            self.n(),
            self.ula_spacing,
            self.wavelength,
            position,
        )
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

#[allow(clippy::too_many_arguments)]
fn receiver_channel(
    params: &ChannelParams,
    uav: &Cartesian,
    irs: &Cartesian,
    panel: &Panel,
    n: usize,
    ula_spacing: f64,
    wavelength: f64,
    position: Cartesian,
) -> Result<ReceiverChannel> {
    let from_irs = cartesian_to_spherical(&position, irs)?;
    let from_uav = cartesian_to_spherical(&position, uav)?;
    let (a, b) = irs_rx_steering(&from_irs, panel, wavelength)?;
    let h_a = ula_steering(from_uav.depression, n, ula_spacing, wavelength)?;
    let loss = PathLossSet::new(params, uav.dist(irs), from_irs.range, from_uav.range)?;
    Ok(ReceiverChannel {
        position,
        h_r: kron(&a, &b),
        h_a,
        loss,
    })
}

pub fn los_channels(scene: &Scene, params: &ChannelParams) -> Result<LosChannelSet> {
    let uav_from_irs = cartesian_to_spherical(&scene.uav, &scene.irs_origin)?;
    let irs_from_uav = cartesian_to_spherical(&scene.irs_origin, &scene.uav)?;
    let (a_ar, b_ar) = irs_tx_steering(
        uav_from_irs.depression,
        uav_from_irs.azimuth,
        &scene.panel,
        scene.wavelength,
    );
    let h_ar = ula_steering(irs_from_uav.depression, scene.ula.n, scene.ula.spacing, scene.wavelength)?;
    let receivers = scene
        .receivers()
        .map(|p| {
            receiver_channel(
                params,
                &scene.uav,
                &scene.irs_origin,
                &scene.panel,
                scene.ula.n,
                scene.ula.spacing,
                scene.wavelength,
                *p,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LosChannelSet {
        irs_tx: kron(&a_ar, &b_ar),
        a_ar,
        b_ar,
        h_ar,
        receivers,
        k_users: scene.k_users(),
        noise_power: params.noise_power,
        params: *params,
        uav: scene.uav,
        irs: scene.irs_origin,
        panel: scene.panel,
        ula_spacing: scene.ula.spacing,
        wavelength: scene.wavelength,
    })
}

/// Cascade scalar `h_bar_R^T Phi (a kron b)` for unit reflection phasors `refl`.
pub fn cascade_gain(set: &LosChannelSet, rx: &ReceiverChannel, refl: &[C64]) -> C64 {
    rx.h_r
        .iter()
        .zip(refl)
        .zip(&set.irs_tx)
        .map(|((h, p), g)| h * p * g)
        .sum()
}

/// `h^LoS = zeta1 upsilon1 h_bar_R^T Phi G_bar + zeta3 h_bar_A^T` of an explicit receiver.
pub fn aggregate_for(set: &LosChannelSet, rx: &ReceiverChannel, refl: &[C64]) -> Vec<C64> {
    assert_eq!(refl.len(), set.m(), "reflection vector length must equal M");
    let c = cascade_gain(set, rx, refl) * (rx.loss.zeta[0] * rx.loss.upsilon[0]);
    let z3 = rx.loss.zeta[2];
    set.h_ar
        .iter()
        .zip(&rx.h_a)
        .map(|(h, a)| c * h + a * z3)
        .collect()
}

pub fn aggregate_los_channel(set: &LosChannelSet, refl: &[C64], g: usize) -> Vec<C64> {
    aggregate_for(set, &set.receivers[g], refl)
}

/// Closed-form variance of the NLoS leakage plus thermal noise for weight `w`.
pub fn effective_noise_variance(set: &LosChannelSet, w: &[C64], g: usize) -> f64 {
    let l = &set.receivers[g].loss;
    let m = set.m() as f64;
    let [z1, z2, _, z4] = l.zeta;
    let [u1, u2] = l.upsilon;
    let gw = norm_sq(&set.g_bar_w(w));
    let coeff = 0.5 * m * (z2 * u2).powi(2) + z4 * z4 + m * (z1 * u2).powi(2);
    (z2 * u1).powi(2) * gw + coeff * norm_sq(w) + set.noise_power
}

/// Upper bound z_hat_g on the effective noise variance at transmit budget `p_max`.
pub fn noise_variance_upper_bound(set: &LosChannelSet, p_max: f64, g: usize) -> Result<f64> {
    if !(p_max > 0.0) {
        return domain(format!("P_max must be positive, got {p_max}"));
    }
    let l = &set.receivers[g].loss;
    let m = set.m() as f64;
    let n = set.n() as f64;
    let [z1, z2, _, z4] = l.zeta;
    let [u1, u2] = l.upsilon;
    let per = (z2 * u1).powi(2) * n / m + 0.5 * (z2 * u2).powi(2) + z4 * z4 / m + (z1 * u2).powi(2);
    Ok(per * m * p_max + set.noise_power)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// One draw of the NLoS row `h^NLoS` with unit-variance i.i.d. entries in G_hat, h_hat_R and h_hat_A.
pub fn sample_nlos_channel<R: Rng + ?Sized>(set: &LosChannelSet, refl: &[C64], g: usize, rng: &mut R) -> Vec<C64> {
    let rx = &set.receivers[g];
    let [z1, z2, _, z4] = rx.loss.zeta;
    let [u1, u2] = rx.loss.upsilon;
    let (m, n) = (set.m(), set.n());
    let hr_hat: Vec<C64> = (0..m).map(|_| complex_normal(rng)).collect();
    let ha_hat: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
    // coefficients multiplying row m of G_hat
    let row_coef: Vec<C64> = (0..m)
        .map(|i| (rx.h_r[i] * (z1 * u2) + hr_hat[i] * (z2 * u2)) * refl[i])
        .collect();
    let hat_cascade: C64 = (0..m).map(|i| hr_hat[i] * refl[i] * set.irs_tx[i]).sum::<C64>() * (z2 * u1);
    let mut out: Vec<C64> = (0..n).map(|j| hat_cascade * set.h_ar[j] + ha_hat[j] * z4).collect();
    for c in &row_coef {
        for o in out.iter_mut() {
            *o += c * complex_normal(rng);
        }
    }
    out
}

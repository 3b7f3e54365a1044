//! Single-photon SFG efficiency: extraction from count rates, the crystal
//! formula, and the spectral-overlap correction.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit, Result, SimError};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const LIGHT_SPEED: f64 = 299_792_458.0;

/// Bench measurement of the SFG count rate with two attenuated laser inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfgBenchInputs {
    /// Detected SFG count rate (1/s).
    pub c_sfg: f64,
    pub eta_t: f64,
    pub eta_d: f64,
    /// Input powers (W).
    pub p_a: f64,
    pub p_b: f64,
    /// Input wavelengths (m).
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// Pulse repetition rate (1/s).
    pub f: f64,
}

/// `C/(η_t η_d f) · (hcf/(P_a λ_a)) · (hcf/(P_b λ_b))`: SFG events per pulse
/// divided by the mean photon numbers per pulse of both inputs.
pub fn sfg_eff_from_counts(inp: &SfgBenchInputs) -> Result<f64> {
    for (name, v) in [
        ("c_sfg", inp.c_sfg),
        ("p_a", inp.p_a),
        ("p_b", inp.p_b),
        ("lambda_a", inp.lambda_a),
        ("lambda_b", inp.lambda_b),
        ("f", inp.f),
        ("eta_t", inp.eta_t),
        ("eta_d", inp.eta_d),
    ] {
        check_positive(name, v)?;
    }
    check_unit("eta_t", inp.eta_t)?;
    check_unit("eta_d", inp.eta_d)?;
    let per_pulse = inp.c_sfg / (inp.eta_t * inp.eta_d * inp.f);
    let n_a = inp.p_a * inp.lambda_a / (PLANCK * LIGHT_SPEED * inp.f);
    let n_b = inp.p_b * inp.lambda_b / (PLANCK * LIGHT_SPEED * inp.f);
    Ok(per_pulse / (n_a * n_b))
}

/// Waveguide parameters entering the theoretical single-photon efficiency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalParams {
    /// Normalized SHG efficiency as a fraction per W per cm² (28 %/W/cm² is 0.28).
    pub eta_shg: f64,
    /// Interaction length (cm).
    pub length_cm: f64,
    /// Spectral acceptance (Hz·cm).
    pub delta_nu_hat: f64,
    /// Time-bandwidth product of the SFG photon.
    pub tbp: f64,
    /// Wavelength (m).
    pub lambda: f64,
}

impl CrystalParams {
    /// Build from the customary units: %/W/cm² and GHz·cm.
    pub fn from_lab_units(
        eta_shg_percent: f64,
        length_cm: f64,
        delta_nu_hat_ghz_cm: f64,
        tbp: f64,
        lambda_nm: f64,
    ) -> Self {
        CrystalParams {
            eta_shg: eta_shg_percent / 100.0,
            length_cm,
            delta_nu_hat: delta_nu_hat_ghz_cm * 1e9,
            tbp,
            lambda: lambda_nm * 1e-9,
        }
    }
}

/// `(η_SHG/2)·(hc/λ)·(Δν̂ L/tbp)`.
pub fn sfg_eff_theoretical(cp: &CrystalParams) -> Result<f64> {
    check_positive("lambda", cp.lambda)?;
    check_positive("tbp", cp.tbp)?;
    for (name, v) in [
        ("eta_shg", cp.eta_shg),
        ("length_cm", cp.length_cm),
        ("delta_nu_hat", cp.delta_nu_hat),
    ] {
        if !(v >= 0.0) {
            return Err(SimError::InvalidParameter {
                name: name.into(),
                value: v,
                reason: "must be nonnegative",
            });
        }
    }
    Ok(cp.eta_shg / 2.0
        * (PLANCK * LIGHT_SPEED / cp.lambda)
        * (cp.delta_nu_hat * cp.length_cm / cp.tbp))
}

/// Gaussian spectral line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

impl SpectralProfile {
    pub fn gaussian(center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        check_positive("center", center_nm)?;
        if !(fwhm_nm >= 0.0) {
            return Err(SimError::InvalidParameter {
                name: "fwhm".into(),
                value: fwhm_nm,
                reason: "must be nonnegative",
            });
        }
        Ok(SpectralProfile { center_nm, fwhm_nm })
    }

    pub fn sigma(&self) -> f64 {
        self.fwhm_nm / FWHM_PER_SIGMA
    }

    /// Unit-area density.
    pub fn density(&self, x: f64) -> f64 {
        let s = self.sigma();
        (-(x - self.center_nm).powi(2) / (2.0 * s * s)).exp()
            / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Unit-peak response.
    pub fn response(&self, x: f64) -> f64 {
        let s = self.sigma();
        (-(x - self.center_nm).powi(2) / (2.0 * s * s)).exp()
    }
}

/// Sum-frequency wavelength of two inputs.
pub fn sum_frequency_nm(a_nm: f64, b_nm: f64) -> f64 {
    1.0 / (1.0 / a_nm + 1.0 / b_nm)
}

/// `η_th ∬ φ_a φ_b η_pm dλ_a dλ_b` with area-normalized input spectra and a
/// peak-normalized phase-matching response in the sum-frequency wavelength.
/// Zero-width inputs are treated as lines.
pub fn sfg_eff_effective(
    eta_th: f64,
    a: &SpectralProfile,
    b: &SpectralProfile,
    pm: &SpectralProfile,
) -> Result<f64> {
    check_positive("phase-matching fwhm", pm.fwhm_nm)?;
    let pm_at = |la: f64, lb: f64| pm.response(sum_frequency_nm(la, lb));
    let overlap = match (a.fwhm_nm > 0.0, b.fwhm_nm > 0.0) {
        (false, false) => pm_at(a.center_nm, b.center_nm),
        (true, false) => integrate_1d(
            |x| a.density(x) * pm_at(x, b.center_nm),
            a.center_nm,
            5.0 * a.sigma(),
        )?,
        (false, true) => integrate_1d(
            |y| b.density(y) * pm_at(a.center_nm, y),
            b.center_nm,
            5.0 * b.sigma(),
        )?,
        (true, true) => integrate_2d(
            |x, y| a.density(x) * b.density(y) * pm_at(x, y),
            (a.center_nm, 5.0 * a.sigma()),
            (b.center_nm, 5.0 * b.sigma()),
        )?,
    };
    Ok(eta_th * overlap)
}

/// Closed form of the overlap for Gaussians after linearizing the
/// sum-frequency wavelength around the line centers.
pub fn gaussian_overlap_closed_form(
    a: &SpectralProfile,
    b: &SpectralProfile,
    pm: &SpectralProfile,
) -> f64 {
    let lc = sum_frequency_nm(a.center_nm, b.center_nm);
    let ka = (lc / a.center_nm).powi(2);
    let kb = (lc / b.center_nm).powi(2);
    let var = (ka * a.sigma()).powi(2) + (kb * b.sigma()).powi(2);
    let sp = pm.sigma();
    let offset = lc - pm.center_nm;
    sp / (sp * sp + var).sqrt() * (-offset * offset / (2.0 * (sp * sp + var))).exp()
}

/// `(V_Z + V_X)/2`.
pub fn fidelity_lower_bound(v_z: f64, v_x: f64) -> f64 {
    (v_z + v_x) / 2.0
}

const GL_ORDER: usize = 16;
const QUAD_TOL: f64 = 1e-6;
const MAX_PANELS: usize = 256;

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn panel_rule(
    center: f64,
    half: f64,
    panels: usize,
    nodes: &(Vec<f64>, Vec<f64>),
) -> Vec<(f64, f64)> {
    let width = 2.0 * half / panels as f64;
    let mut out = Vec::with_capacity(panels * nodes.0.len());
    for p in 0..panels {
        let mid = center - half + (p as f64 + 0.5) * width;
        for (x, w) in nodes.0.iter().zip(&nodes.1) {
            out.push((mid + 0.5 * width * x, 0.5 * width * w));
        }
    }
    out
}

fn refine<F>(mut eval: F) -> Result<f64>
where
    F: FnMut(usize) -> f64,
{
    let mut panels = 1;
    let mut prev = eval(panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = eval(panels);
        if (next - prev).abs() <= QUAD_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(SimError::Quadrature(format!(
        "no convergence with {MAX_PANELS} panels per axis"
    )))
}

fn integrate_1d<F: Fn(f64) -> f64>(f: F, center: f64, half: f64) -> Result<f64> {
    let nodes = gauss_legendre(GL_ORDER);
    refine(|panels| {
        panel_rule(center, half, panels, &nodes)
            .iter()
            .map(|(x, w)| w * f(*x))
            .sum()
    })
}

fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, xs: (f64, f64), ys: (f64, f64)) -> Result<f64> {
    let nodes = gauss_legendre(GL_ORDER);
    refine(|panels| {
        let rx = panel_rule(xs.0, xs.1, panels, &nodes);
        let ry = panel_rule(ys.0, ys.1, panels, &nodes);
        let mut acc = 0.0;
        for (x, wx) in &rx {
            for (y, wy) in &ry {
                acc += wx * wy * f(*x, *y);
            }
        }
        acc
    })
}

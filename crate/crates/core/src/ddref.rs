//! Laue-case dynamical-diffraction reference formulas.

use crate::crystal::{integrated_intensities, BladeSpec};
use crate::interferometer::{contrast, periodic_grid, ContrastResult, FringeModel, InterferometerSpec, KeptPaths};
use crate::lattice::BeamState;
use crate::stats::fit_cosine;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Long-run three-blade H contrast quoted for θ = 17π/36.
pub const REFERENCE_CONTRAST_H: f64 = 0.39;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DDParams {
    a: f64,
    eta: f64,
    z_over_d: f64,
    chi_nuc: f64,
    vratio_phase: f64,
}

impl DDParams {
    /// Exit surface (`z/D = 1`), no nuclear phase, real structure-factor ratio.
    pub fn new(a: f64, eta: f64) -> Result<Self> {
        Self::full(a, eta, 1.0, 0.0, 0.0)
    }

    pub fn full(a: f64, eta: f64, z_over_d: f64, chi_nuc: f64, vratio_phase: f64) -> Result<Self> {
        for (name, v) in [
            ("A", a),
            ("eta", eta),
            ("z/D", z_over_d),
            ("chi", chi_nuc),
            ("v-ratio phase", vratio_phase),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite (got {v})")));
            }
        }
        if a < 0.0 {
            return Err(Error::InvalidParameter(format!("A must be ≥ 0 (got {a})")));
        }
        if !(0.0..=1.0).contains(&z_over_d) {
            return Err(Error::InvalidParameter(format!("z/D must lie in [0, 1] (got {z_over_d})")));
        }
        Ok(Self {
            a,
            eta,
            z_over_d,
            chi_nuc,
            vratio_phase,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z_over_d(&self) -> f64 {
        self.z_over_d
    }

    pub fn chi_nuc(&self) -> f64 {
        self.chi_nuc
    }

    pub fn vratio_phase(&self) -> f64 {
        self.vratio_phase
    }

    /// `Φ(η) = A√(1+η²)`.
    pub fn big_phi(&self) -> f64 {
        self.a * (1.0 + self.eta * self.eta).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DDAmplitudes {
    pub t: Complex64,
    pub r: Complex64,
}

pub fn dd_amplitudes(p: &DDParams) -> DDAmplitudes {
    let root = (1.0 + p.eta * p.eta).sqrt();
    let (s, c) = p.big_phi().sin_cos();
    let aeta = p.a * p.eta;
    let nuc = Complex64::from_polar(1.0, p.chi_nuc);
    let t = nuc * Complex64::from_polar(1.0, -aeta) * Complex64::new(c, p.eta / root * s);
    let r = nuc
        * Complex64::from_polar(1.0, -aeta + 2.0 * aeta * p.z_over_d + p.vratio_phase)
        * Complex64::new(0.0, -s / root);
    DDAmplitudes { t, r }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BladeAngles {
    pub phi: f64,
    pub rho: f64,
    pub vartheta: f64,
}

/// `φ`, `ϱ`, `ϑ` of the blade unitary. `φ` is taken as the argument of
/// `cos Φ + iη/√(1+η²) sin Φ` (atan2, so no poles at `cos Φ = 0`) minus `Aη`.
pub fn dd_blade_angles(p: &DDParams) -> BladeAngles {
    let root = (1.0 + p.eta * p.eta).sqrt();
    let (s, c) = p.big_phi().sin_cos();
    let aeta = p.a * p.eta;
    BladeAngles {
        phi: (p.eta / root * s).atan2(c) - aeta,
        rho: -aeta + 2.0 * aeta * p.z_over_d + FRAC_PI_2 + p.vratio_phase,
        vartheta: (s / root).clamp(-1.0, 1.0).asin(),
    }
}

pub type Matrix2 = [[Complex64; 2]; 2];

pub fn dd_unitary(angles: &BladeAngles, chi_nuc: f64) -> Matrix2 {
    let nuc = Complex64::from_polar(1.0, chi_nuc);
    let (s, c) = angles.vartheta.sin_cos();
    [
        [
            nuc * Complex64::from_polar(c, angles.phi),
            nuc * Complex64::from_polar(s, angles.rho),
        ],
        [
            -nuc * Complex64::from_polar(s, -angles.rho),
            nuc * Complex64::from_polar(c, -angles.phi),
        ],
    ]
}

/// Largest entry of `|U U† − I|`.
pub fn unitarity_defect(u: &Matrix2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for k in 0..2 {
            let dot = u[i][0] * u[k][0].conj() + u[i][1] * u[k][1].conj();
            let target = if i == k { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// Exit amplitudes `(Ψ^O, Ψ^H)` of an ideal three-blade interferometer whose
/// blades all have angles `(φ, ϑ)` and phase `χ` after blade 1.
pub fn analytic_three_blade(vartheta: f64, phi: f64, chi: f64) -> (Complex64, Complex64) {
    let (s, c) = vartheta.sin_cos();
    let plus = Complex64::from_polar(1.0, chi / 2.0);
    let minus = plus.conj();
    let amp_o = -Complex64::from_polar(c * s * s, -phi / 2.0) * (minus + plus);
    let amp_h = Complex64::new(0.0, 1.0)
        * Complex64::from_polar(1.0, phi / 2.0)
        * (plus * (c * c * s) - minus * (s * s * s));
    (amp_o, amp_h)
}

/// `2cos²ϑ sin²ϑ / (cos⁴ϑ + sin⁴ϑ)`.
pub fn analytic_h_contrast(vartheta: f64) -> f64 {
    let (s, c) = vartheta.sin_cos();
    let (s2, c2) = (s * s, c * c);
    2.0 * c2 * s2 / (c2 * c2 + s2 * s2)
}

/// Side-by-side numbers from the lattice model and the analytic reference.
/// Deviations are reported, never judged.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckReport {
    pub planes: usize,
    pub theta: f64,
    /// `θ/π`, the per-plane thickness in extinction lengths implied by `θ`.
    pub implied_tau_over_delta: f64,
    pub qi_intensity_t: f64,
    pub qi_intensity_r: f64,
    pub dd_intensity_t: f64,
    pub dd_intensity_r: f64,
    pub intensity_deviation: f64,
    pub dd_angles: BladeAngles,
    pub analytic_contrast_h: f64,
    pub analytic_fringe_residual: f64,
    /// Three identical copies of the blade; errors when the contrast is undefined.
    pub qi_contrast: Result<ContrastResult>,
    pub contrast_deviation: Option<f64>,
    pub deviation_from_reference: Option<f64>,
}

const CROSSCHECK_CHI_POINTS: usize = 128;

pub fn qi_dd_crosscheck(blade: &BladeSpec, dd: &DDParams) -> Result<CrosscheckReport> {
    let theta = blade
        .params()
        .ok_or_else(|| Error::UnsupportedGeometry("crosscheck needs a uniform angle-parameterized blade".into()))?
        .theta();
    let input = BeamState::ray_up(0);
    let (qi_t, qi_r) = integrated_intensities(blade, &input);
    let amps = dd_amplitudes(dd);
    let (dd_t, dd_r) = (amps.t.norm_sqr(), amps.r.norm_sqr());
    let angles = dd_blade_angles(dd);

    let grid = periodic_grid(CROSSCHECK_CHI_POINTS);
    let i_h: Vec<f64> = grid
        .iter()
        .map(|&chi| analytic_three_blade(angles.vartheta, angles.phi, chi).1.norm_sqr())
        .collect();
    let i_o: Vec<f64> = grid
        .iter()
        .map(|&chi| analytic_three_blade(angles.vartheta, angles.phi, chi).0.norm_sqr())
        .collect();
    let analytic_fringe_residual = fit_cosine(&grid, &i_h)?
        .max_residual
        .max(fit_cosine(&grid, &i_o)?.max_residual);
    let analytic_contrast_h = analytic_h_contrast(angles.vartheta);

    let spec = InterferometerSpec::new(vec![blade.clone(); 3], 1, KeptPaths::default())?;
    let qi_contrast = contrast(&FringeModel::build(&spec, &input).series(&grid));
    let qi_h = qi_contrast.as_ref().ok().map(|c| c.contrast_h);
    Ok(CrosscheckReport {
        planes: blade.planes(),
        theta,
        implied_tau_over_delta: theta / PI,
        qi_intensity_t: qi_t,
        qi_intensity_r: qi_r,
        dd_intensity_t: dd_t,
        dd_intensity_r: dd_r,
        intensity_deviation: (qi_t - dd_t).abs().max((qi_r - dd_r).abs()),
        dd_angles: angles,
        analytic_contrast_h,
        analytic_fringe_residual,
        contrast_deviation: qi_h.map(|c| (c - analytic_contrast_h).abs()),
        deviation_from_reference: qi_h.map(|c| (c - REFERENCE_CONTRAST_H).abs()),
        qi_contrast,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SplitterParams;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_validation() {
        assert!(DDParams::new(-0.1, 0.0).is_err());
        assert!(DDParams::new(f64::NAN, 0.0).is_err());
        assert!(DDParams::full(1.0, 0.0, 1.5, 0.0, 0.0).is_err());
        assert!(DDParams::full(1.0, 0.0, 0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn amplitudes_at_bragg() {
        let a = dd_amplitudes(&DDParams::new(PI / 3.0, 0.0).unwrap());
        assert!((a.t.norm() - 0.5).abs() < 1e-15);
        assert!((a.r.norm() - (PI / 3.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn reflection_envelope() {
        for eta in [-10.0, 10.0] {
            for a in [0.3, 1.0, 7.0, 40.0] {
                let r = dd_amplitudes(&DDParams::new(a, eta).unwrap()).r;
                assert!(r.norm_sqr() <= 1.0 / (1.0 + eta * eta) + 1e-15);
            }
        }
    }

    #[test]
    fn conservation_grid() {
        for a in [0.5, 1.0, 2.0, 5.0] {
            for k in 0..=200 {
                let eta = -5.0 + 0.05 * k as f64;
                let amp = dd_amplitudes(&DDParams::full(a, eta, 0.3, 1.1, 0.2).unwrap());
                assert!((amp.t.norm_sqr() + amp.r.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn angles_at_bragg() {
        for k in 0..=20 {
            let a = FRAC_PI_2 * k as f64 / 20.0;
            let g = dd_blade_angles(&DDParams::new(a, 0.0).unwrap());
            assert_eq!(g.phi, 0.0);
            assert!((g.rho - FRAC_PI_2).abs() < 1e-15);
            assert!((g.vartheta - a).abs() < 1e-12, "A={a}");
        }
        let g = dd_blade_angles(&DDParams::new(PI / 6.0, 0.0).unwrap());
        assert!((g.vartheta - PI / 6.0).abs() < 1e-15);
        let g = dd_blade_angles(&DDParams::new(2.0 * PI / 3.0, 0.0).unwrap());
        assert!((g.vartheta - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_examples() {
        let a = 0.7;
        let u = dd_unitary(
            &BladeAngles {
                phi: 0.0,
                rho: FRAC_PI_2,
                vartheta: a,
            },
            0.0,
        );
        let expect = [[c(a.cos(), 0.0), c(0.0, a.sin())], [c(0.0, a.sin()), c(a.cos(), 0.0)]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((u[i][k] - expect[i][k]).norm() < 1e-15);
            }
        }
        let chi = 0.9;
        let id = dd_unitary(
            &BladeAngles {
                phi: 0.3,
                rho: 1.2,
                vartheta: 0.0,
            },
            chi,
        );
        let ph = Complex64::from_polar(1.0, chi);
        assert!((id[0][0] - ph * Complex64::from_polar(1.0, 0.3)).norm() < 1e-15);
        assert!(id[0][1].norm() < 1e-15 && id[1][0].norm() < 1e-15);
        assert!(unitarity_defect(&u) < 1e-14);
    }

    #[test]
    fn mapping_reproduces_amplitudes() {
        for a in [0.5, 1.0, 2.0, 5.0] {
            for k in 0..=100 {
                let p = DDParams::full(a, -5.0 + 0.1 * k as f64, 0.7, 0.4, 0.0).unwrap();
                let amp = dd_amplitudes(&p);
                let u = dd_unitary(&dd_blade_angles(&p), p.chi_nuc());
                assert!((u[0][0].norm() - amp.t.norm()).abs() < 1e-10);
                assert!((u[0][1].norm() - amp.r.norm()).abs() < 1e-10);
                assert!((u[0][0] - amp.t).norm() < 1e-10, "A={a} η={}", p.eta());
                assert!(unitarity_defect(&u) < 1e-14);
            }
        }
        // cos Φ = 0 sits on a pole of the tangent form
        let p = DDParams::new(FRAC_PI_2, 0.0).unwrap();
        let g = dd_blade_angles(&p);
        assert!(g.phi.is_finite() && (g.vartheta - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn three_blade_balanced() {
        let (o, h) = analytic_three_blade(FRAC_PI_4, 0.0, 0.0);
        assert!(h.norm_sqr() < 1e-12);
        assert!((o.norm_sqr() - 0.5).abs() < 1e-12);
        for th in [0.1, 0.7, 1.3] {
            assert!(analytic_three_blade(th, 0.4, PI).0.norm_sqr() < 1e-30);
        }
    }

    #[test]
    fn three_blade_bound_and_contrast() {
        for k in 1..40 {
            let th = FRAC_PI_2 * k as f64 / 40.0;
            let ih: Vec<f64> = periodic_grid(256)
                .iter()
                .map(|&chi| {
                    let (o, h) = analytic_three_blade(th, 0.2, chi);
                    assert!(o.norm_sqr() + h.norm_sqr() <= 1.0 + 1e-15);
                    h.norm_sqr()
                })
                .collect();
            let hi = ih.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ih.iter().cloned().fold(f64::MAX, f64::min);
            assert!(((hi - lo) / (hi + lo) - analytic_h_contrast(th)).abs() < 1e-12);
        }
    }

    #[test]
    fn crosscheck_single_node() {
        for a in [0.0, 0.4, 1.1] {
            let blade = BladeSpec::new(1, SplitterParams::with_theta(a).unwrap()).unwrap();
            let rep = qi_dd_crosscheck(&blade, &DDParams::new(a, 0.0).unwrap()).unwrap();
            assert!((rep.qi_intensity_t - a.cos().powi(2)).abs() < 1e-15);
            assert!(rep.intensity_deviation < 1e-15);
            assert!((rep.implied_tau_over_delta - a / PI).abs() < 1e-15);
        }
        let blade = BladeSpec::new(1, SplitterParams::with_theta(0.0).unwrap()).unwrap();
        let rep = qi_dd_crosscheck(&blade, &DDParams::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!((rep.qi_intensity_t, rep.qi_intensity_r), (1.0, 0.0));
        assert!(rep.qi_contrast.is_err() && rep.contrast_deviation.is_none());
    }

    #[test]
    fn crosscheck_reports_reference_deviation() {
        let theta = 17.0 * PI / 36.0;
        let blade = BladeSpec::new(100, SplitterParams::with_theta(theta).unwrap()).unwrap();
        let rep = qi_dd_crosscheck(&blade, &DDParams::new(theta, 0.0).unwrap()).unwrap();
        let dev = rep.deviation_from_reference.unwrap();
        assert!(dev.is_finite() && dev < 0.1);
        assert!(rep.analytic_fringe_residual < 1e-12);
        assert!(rep.qi_contrast.unwrap().residual_h < 1e-10);
    }
}

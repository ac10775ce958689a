//! Multi-blade Mach-Zehnder interferometer built from lattice blades.
//!
//! Blades are composed back to back on one index lattice. Between blades the
//! state is split by the sector projectors `P_O` (upward rays) and `P_H`
//! (downward rays); every branch history that the [`KeptPaths`] policy does
//! not keep leaves the interferometer and is booked as discarded intensity.
//! The phase operator `U_z(χ)` multiplies the O sector by `e^{iχ/2}` and the H
//! sector by `e^{−iχ/2}` in the gap after blade `phase_after_blade`.

use crate::crystal::{BladeSpec, IntensityProfile};
use crate::exec::Execution;
use crate::lattice::{BeamState, Sector, SplitterParams};
use crate::stats::{fit_cosine, CosineFit, NeumaierSum};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// Upward (forward-diffracted) sector.
    O,
    /// Downward (Bragg-diffracted) sector.
    H,
}

impl Branch {
    pub fn sector(self) -> Sector {
        match self {
            Branch::O => Sector::Up,
            Branch::H => Sector::Down,
        }
    }
}

/// One projector label per inter-blade gap.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathSelector {
    pub branches: Vec<Branch>,
}

impl PathSelector {
    pub fn new(branches: Vec<Branch>) -> Self {
        Self { branches }
    }

    /// Parses a string such as `"OH"`.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'O' => Ok(Branch::O),
                'H' => Ok(Branch::H),
                _ => Err(Error::InvalidArgument(format!("bad branch label {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl fmt::Display for PathSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.branches {
            f.write_str(match b {
                Branch::O => "O",
                Branch::H => "H",
            })?;
        }
        Ok(())
    }
}

/// Which branch histories stay inside the interferometer.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum KeptPaths {
    /// Keep histories that reflect at every inner blade, i.e. whose branch
    /// label flips at every gap after the first. For three blades: `OH`, `HO`.
    #[default]
    InnerReflections,
    /// No projection at all.
    All,
    /// Exactly the listed histories.
    Only(Vec<PathSelector>),
}

impl KeptPaths {
    fn keeps_prefix(&self, prefix: &[Branch]) -> bool {
        match self {
            KeptPaths::InnerReflections => prefix.windows(2).all(|w| w[0] != w[1]),
            KeptPaths::All => true,
            KeptPaths::Only(list) => list.iter().any(|s| s.branches.starts_with(prefix)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerSpec {
    blades: Vec<BladeSpec>,
    phase_after_blade: usize,
    kept_paths: KeptPaths,
}

impl InterferometerSpec {
    /// `phase_after_blade` is 1-based: `1` puts `U_z(χ)` between blades 1 and 2.
    pub fn new(blades: Vec<BladeSpec>, phase_after_blade: usize, kept_paths: KeptPaths) -> Result<Self> {
        if blades.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "an interferometer needs at least two blades (got {})",
                blades.len()
            )));
        }
        if phase_after_blade == 0 || phase_after_blade >= blades.len() {
            return Err(Error::InvalidArgument(format!(
                "phase must sit between blades: 1 ≤ {phase_after_blade} < {}",
                blades.len()
            )));
        }
        if let KeptPaths::Only(list) = &kept_paths {
            if let Some(bad) = list.iter().find(|s| s.branches.len() != blades.len() - 1) {
                return Err(Error::InvalidArgument(format!(
                    "kept path {bad} does not have one label per gap ({} gaps)",
                    blades.len() - 1
                )));
            }
        }
        Ok(Self {
            blades,
            phase_after_blade,
            kept_paths,
        })
    }

    /// `count` identical blades with the default phase placement and policy.
    pub fn identical(count: usize, planes: usize, params: SplitterParams) -> Result<Self> {
        let blade = BladeSpec::new(planes, params)?;
        Self::new(vec![blade; count], 1, KeptPaths::default())
    }

    pub fn three_blade(planes: usize, params: SplitterParams) -> Result<Self> {
        Self::identical(3, planes, params)
    }

    pub fn with_phase_after(mut self, blade: usize) -> Result<Self> {
        if blade == 0 || blade >= self.blades.len() {
            return Err(Error::InvalidArgument(format!(
                "phase must sit between blades: 1 ≤ {blade} < {}",
                self.blades.len()
            )));
        }
        self.phase_after_blade = blade;
        Ok(self)
    }

    pub fn blades(&self) -> &[BladeSpec] {
        &self.blades
    }

    pub fn gaps(&self) -> usize {
        self.blades.len() - 1
    }

    pub fn phase_after_blade(&self) -> usize {
        self.phase_after_blade
    }

    pub fn kept_paths(&self) -> &KeptPaths {
        &self.kept_paths
    }

    pub fn is_kept(&self, selector: &PathSelector) -> bool {
        selector.branches.len() == self.gaps() && self.kept_paths.keeps_prefix(&selector.branches)
    }
}

/// `U_z(χ)`: `α_j ↦ e^{iχ/2}α_j`, `β_j ↦ e^{−iχ/2}β_j`.
pub fn apply_phase(state: &BeamState, chi: f64) -> BeamState {
    let half = Complex64::from_polar(1.0, chi / 2.0);
    state.scaled_sectors(half, half.conj())
}

/// `P_O` or `P_H`; no renormalization.
pub fn project_branch(state: &BeamState, branch: Branch) -> BeamState {
    state.sector_only(branch.sector())
}

/// `U_N P_{s_{N−1}} ⋯ U_2 P_{s_1} U_1 |input⟩` for selector `s`, without phase.
/// Works for discarded histories too; see [`InterferometerSpec::is_kept`].
pub fn path_amplitude(
    spec: &InterferometerSpec,
    selector: &PathSelector,
    input: &BeamState,
) -> Result<BeamState> {
    if selector.branches.len() != spec.gaps() {
        return Err(Error::InvalidArgument(format!(
            "selector {selector} has {} labels, interferometer has {} gaps",
            selector.branches.len(),
            spec.gaps()
        )));
    }
    let mut state = spec.blades[0].propagate(input);
    for (b, blade) in selector.branches.iter().zip(&spec.blades[1..]) {
        state = blade.propagate(&project_branch(&state, *b));
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub psi_o: BeamState,
    pub psi_h: BeamState,
    pub i_o: f64,
    pub i_h: f64,
    pub i_discarded: f64,
}

/// Kept branches propagated to the exit, each tagged with its history.
struct BranchOutputs {
    branches: Vec<(Vec<Branch>, BeamState)>,
    discarded: f64,
}

fn run_branches(spec: &InterferometerSpec, input: &BeamState, chi: Option<f64>) -> BranchOutputs {
    let mut branches = vec![(Vec::new(), spec.blades[0].propagate(input))];
    let mut discarded = NeumaierSum::default();
    for (gap, blade) in spec.blades[1..].iter().enumerate() {
        let mut next = Vec::with_capacity(2 * branches.len());
        for (history, state) in branches {
            let state = match chi {
                Some(chi) if gap + 1 == spec.phase_after_blade => apply_phase(&state, chi),
                _ => state,
            };
            for b in [Branch::O, Branch::H] {
                let part = project_branch(&state, b);
                let mut h = history.clone();
                h.push(b);
                if spec.kept_paths.keeps_prefix(&h) {
                    next.push((h, part));
                } else {
                    discarded.add(part.norm_sqr());
                }
            }
        }
        branches = next
            .into_iter()
            .map(|(h, s)| {
                let out = blade.propagate(&s);
                (h, out)
            })
            .collect();
    }
    BranchOutputs {
        branches,
        discarded: discarded.total(),
    }
}

fn sum_states<'a>(states: impl Iterator<Item = &'a BeamState>) -> BeamState {
    states.fold(BeamState::zero(), |acc, s| acc.add(s))
}

/// Full kept-path evolution at phase `chi`.
pub fn simulate(spec: &InterferometerSpec, chi: f64, input: &BeamState) -> Simulation {
    let run = run_branches(spec, input, Some(chi));
    let out = sum_states(run.branches.iter().map(|(_, s)| s));
    let psi_o = project_branch(&out, Branch::O);
    let psi_h = project_branch(&out, Branch::H);
    Simulation {
        i_o: out.up_weight(),
        i_h: out.down_weight(),
        i_discarded: run.discarded,
        psi_o,
        psi_h,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeRow {
    pub chi: f64,
    pub i_o: f64,
    pub i_h: f64,
    pub i_discarded: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FringeSeries {
    pub rows: Vec<FringeRow>,
}

impl FringeSeries {
    pub fn chi(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.chi).collect()
    }

    pub fn i_o(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.i_o).collect()
    }

    pub fn i_h(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.i_h).collect()
    }
}

/// Exit intensities as exact functions of χ.
///
/// Branches through O at the phase gap pick up `e^{iχ/2}`, those through H
/// `e^{−iχ/2}`. With `P` and `M` the two summed exit states,
/// `I_O(χ) = |P_O|² + |M_O|² + 2 Re(e^{iχ}⟨M_O|P_O⟩)` and likewise for H.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel {
    pub offset_o: f64,
    pub cross_o: Complex64,
    pub offset_h: f64,
    pub cross_h: Complex64,
    pub discarded: f64,
}

fn inner(m: &[Complex64], p: &[Complex64], m_base: i64, p_base: i64) -> Complex64 {
    // windows coincide for identical propagation depths; handle offsets anyway
    let shift = p_base - m_base;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, mv) in m.iter().enumerate() {
        let q = k as i64 - shift;
        if q >= 0 && (q as usize) < p.len() {
            acc += mv.conj() * p[q as usize];
        }
    }
    acc
}

impl FringeModel {
    pub fn build(spec: &InterferometerSpec, input: &BeamState) -> Self {
        let run = run_branches(spec, input, None);
        let gap = spec.phase_after_blade - 1;
        let plus = sum_states(run.branches.iter().filter(|(h, _)| h[gap] == Branch::O).map(|(_, s)| s));
        let minus = sum_states(run.branches.iter().filter(|(h, _)| h[gap] == Branch::H).map(|(_, s)| s));
        Self {
            offset_o: plus.up_weight() + minus.up_weight(),
            cross_o: inner(minus.up(), plus.up(), minus.base(), plus.base()),
            offset_h: plus.down_weight() + minus.down_weight(),
            cross_h: inner(minus.down(), plus.down(), minus.base(), plus.base()),
            discarded: run.discarded,
        }
    }

    pub fn at(&self, chi: f64) -> FringeRow {
        let e = Complex64::from_polar(1.0, chi);
        FringeRow {
            chi,
            i_o: self.offset_o + 2.0 * (e * self.cross_o).re,
            i_h: self.offset_h + 2.0 * (e * self.cross_h).re,
            i_discarded: self.discarded,
        }
    }

    pub fn series(&self, chi_grid: &[f64]) -> FringeSeries {
        FringeSeries {
            rows: chi_grid.iter().map(|&c| self.at(c)).collect(),
        }
    }
}

/// `points` phases evenly covering `[0, 2π)`.
pub fn periodic_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| TAU * k as f64 / points as f64).collect()
}

/// `I_O`, `I_H`, `I_discarded` at every χ of the grid.
pub fn fringe_scan(spec: &InterferometerSpec, chi_grid: &[f64], input: &BeamState) -> Result<FringeSeries> {
    if chi_grid.is_empty() {
        return Err(Error::InvalidArgument("χ grid is empty".into()));
    }
    Ok(FringeModel::build(spec, input).series(chi_grid))
}

/// Same rows as [`fringe_scan`], evaluated by running [`simulate`] at every χ.
pub fn fringe_scan_direct(
    exec: Execution,
    spec: &InterferometerSpec,
    chi_grid: &[f64],
    input: &BeamState,
) -> Result<FringeSeries> {
    if chi_grid.is_empty() {
        return Err(Error::InvalidArgument("χ grid is empty".into()));
    }
    let rows = exec.map(chi_grid, |&chi| {
        let s = simulate(spec, chi, input);
        FringeRow {
            chi,
            i_o: s.i_o,
            i_h: s.i_h,
            i_discarded: s.i_discarded,
        }
    });
    Ok(FringeSeries { rows })
}

/// Fringe coefficients and visibilities.
///
/// `coeff_a`, `coeff_b` come from the cosine fit `I_H ≈ ℬ − 𝒜 cos(χ − φ_H + π)`;
/// `contrast_h = 𝒜/ℬ` and `contrast_o` is the fitted amplitude over offset of
/// `I_O`. The `maxmin_*` fields apply `(max − min)/(max + min)` to the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastResult {
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub contrast_o: f64,
    pub contrast_h: f64,
    pub maxmin_o: f64,
    pub maxmin_h: f64,
    pub phase_o: f64,
    pub phase_h: f64,
    pub residual_o: f64,
    pub residual_h: f64,
}

fn max_min(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)))
}

fn visibility(values: &[f64], beam: &str) -> Result<f64> {
    let (hi, lo) = max_min(values);
    if hi + lo <= 0.0 || (hi + lo).is_nan() {
        return Err(Error::UndefinedContrast(format!("{beam} beam: max + min = 0")));
    }
    if hi - lo <= 1e-14 * hi {
        return Err(Error::UndefinedContrast(format!("{beam} beam is constant in χ")));
    }
    Ok((hi - lo) / (hi + lo))
}

/// Largest circular gap between sorted phases, in radians.
fn largest_phase_gap(chi: &[f64]) -> f64 {
    let mut wrapped: Vec<f64> = chi.iter().map(|c| c.rem_euclid(TAU)).collect();
    wrapped.sort_by(f64::total_cmp);
    let inner = wrapped.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let wrap = TAU - (wrapped[wrapped.len() - 1] - wrapped[0]);
    inner.max(wrap)
}

pub fn contrast(series: &FringeSeries) -> Result<ContrastResult> {
    let chi = series.chi();
    if chi.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "contrast needs at least 8 phase samples (got {})",
            chi.len()
        )));
    }
    if largest_phase_gap(&chi) > FRAC_PI_2 {
        return Err(Error::InvalidArgument("χ samples do not cover a full period".into()));
    }
    let (i_o, i_h) = (series.i_o(), series.i_h());
    let maxmin_o = visibility(&i_o, "O")?;
    let maxmin_h = visibility(&i_h, "H")?;
    let fit_o: CosineFit = fit_cosine(&chi, &i_o)?;
    let fit_h: CosineFit = fit_cosine(&chi, &i_h)?;
    let coeff_a = fit_h.amplitude();
    let coeff_b = fit_h.offset;
    Ok(ContrastResult {
        coeff_a,
        coeff_b,
        contrast_o: fit_o.amplitude() / fit_o.offset,
        contrast_h: coeff_a / coeff_b,
        maxmin_o,
        maxmin_h,
        phase_o: fit_o.phase(),
        phase_h: fit_h.phase(),
        residual_o: fit_o.max_residual,
        residual_h: fit_h.max_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSweepRow {
    pub planes: usize,
    pub result: Result<ContrastResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSweep {
    pub rows: Vec<ContrastSweepRow>,
}

/// Three-blade contrast for every per-blade plane count in `n_min..=n_max`,
/// with `|a_0⟩` input. Rows whose contrast is undefined carry the error.
pub fn contrast_vs_planes(
    params: SplitterParams,
    n_min: usize,
    n_max: usize,
    chi_points: usize,
) -> Result<ContrastSweep> {
    contrast_vs_planes_with(Execution::default(), params, n_min, n_max, chi_points)
}

pub fn contrast_vs_planes_with(
    exec: Execution,
    params: SplitterParams,
    n_min: usize,
    n_max: usize,
    chi_points: usize,
) -> Result<ContrastSweep> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidArgument(format!(
            "plane range must satisfy 1 ≤ n_min ≤ n_max (got {n_min}..={n_max})"
        )));
    }
    if chi_points < 8 {
        return Err(Error::InvalidArgument(format!("need ≥ 8 χ points (got {chi_points})")));
    }
    let grid = periodic_grid(chi_points);
    let ns: Vec<usize> = (n_min..=n_max).collect();
    let input = BeamState::ray_up(0);
    let rows = exec.map(&ns, |&n| {
        let result = InterferometerSpec::three_blade(n, params)
            .and_then(|spec| contrast(&FringeModel::build(&spec, &input).series(&grid)));
        ContrastSweepRow { planes: n, result }
    });
    Ok(ContrastSweep { rows })
}

/// The eight beams of a three-blade interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BeamLabel {
    T1,
    R1,
    TT2,
    TR2,
    RT2,
    RR2,
    O,
    H,
}

impl BeamLabel {
    pub const ALL: [BeamLabel; 8] = [
        BeamLabel::T1,
        BeamLabel::R1,
        BeamLabel::TT2,
        BeamLabel::TR2,
        BeamLabel::RT2,
        BeamLabel::RR2,
        BeamLabel::O,
        BeamLabel::H,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BeamLabel::T1 => "1T",
            BeamLabel::R1 => "1R",
            BeamLabel::TT2 => "2TT",
            BeamLabel::TR2 => "2TR",
            BeamLabel::RT2 => "2RT",
            BeamLabel::RR2 => "2RR",
            BeamLabel::O => "O",
            BeamLabel::H => "H",
        }
    }
}

impl fmt::Display for BeamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Intensity of one labelled beam across its exit nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamProfile {
    pub label: BeamLabel,
    pub nodes: Vec<i64>,
    pub intensity: Vec<f64>,
}

impl BeamProfile {
    fn from_sector(label: BeamLabel, state: &BeamState, sector: Sector, parity: i64) -> Self {
        let (nodes, intensity) = state
            .indices()
            .filter(|j| (j - parity).rem_euclid(2) == 0)
            .map(|j| (j, state.amplitude(sector, j).norm_sqr()))
            .unzip();
        Self {
            label,
            nodes,
            intensity,
        }
    }

    pub fn total(&self) -> f64 {
        crate::stats::compensated_sum(self.intensity.iter().copied())
    }

    pub fn occupied(&self) -> usize {
        self.intensity.iter().filter(|&&v| v > 0.0).count()
    }

    /// Node positions rescaled so the profile window spans `[0, 1]`.
    pub fn normalized_positions(&self) -> Vec<f64> {
        match (self.nodes.first(), self.nodes.last()) {
            (Some(&lo), Some(&hi)) if hi > lo => {
                self.nodes.iter().map(|&j| (j - lo) as f64 / (hi - lo) as f64).collect()
            }
            _ => vec![0.0; self.nodes.len()],
        }
    }

    pub fn as_intensity_profile(&self) -> IntensityProfile {
        let upward = matches!(
            self.label,
            BeamLabel::T1 | BeamLabel::TT2 | BeamLabel::RR2 | BeamLabel::O
        );
        IntensityProfile {
            rows: self
                .nodes
                .iter()
                .zip(&self.intensity)
                .map(|(&node, &v)| crate::crystal::ProfileRow {
                    node,
                    intensity_t: if upward { v } else { 0.0 },
                    intensity_r: if upward { 0.0 } else { v },
                })
                .collect(),
        }
    }
}

/// Profiles of the two beams after blade 1, the four after blade 2 and the
/// O/H exit beams (kept paths, χ = 0) of a three-blade interferometer.
pub fn blade_output_profiles(
    spec: &InterferometerSpec,
    input: &BeamState,
) -> Result<BTreeMap<BeamLabel, BeamProfile>> {
    if spec.blades.len() != 3 {
        return Err(Error::UnsupportedGeometry(format!(
            "beam profiles are defined for three blades (got {})",
            spec.blades.len()
        )));
    }
    let Some(first) = input.indices().find(|&j| input.up_at(j) != Complex64::new(0.0, 0.0) || input.down_at(j) != Complex64::new(0.0, 0.0)) else {
        return Err(Error::InvalidArgument("input state is zero".into()));
    };
    let [b1, b2, _] = [&spec.blades[0], &spec.blades[1], &spec.blades[2]];
    let parity = |planes: usize| first + planes as i64;

    let s1 = b1.propagate(input);
    let n1 = b1.planes();
    let via_o = b2.propagate(&project_branch(&s1, Branch::O));
    let via_h = b2.propagate(&project_branch(&s1, Branch::H));
    let n2 = n1 + b2.planes();
    let exit = simulate(spec, 0.0, input);
    let out = exit.psi_o.add(&exit.psi_h);
    let n3 = n2 + spec.blades[2].planes();

    let mut map = BTreeMap::new();
    let mut put = |p: BeamProfile| {
        map.insert(p.label, p);
    };
    put(BeamProfile::from_sector(BeamLabel::T1, &s1, Sector::Up, parity(n1)));
    put(BeamProfile::from_sector(BeamLabel::R1, &s1, Sector::Down, parity(n1)));
    put(BeamProfile::from_sector(BeamLabel::TT2, &via_o, Sector::Up, parity(n2)));
    put(BeamProfile::from_sector(BeamLabel::TR2, &via_o, Sector::Down, parity(n2)));
    put(BeamProfile::from_sector(BeamLabel::RT2, &via_h, Sector::Down, parity(n2)));
    put(BeamProfile::from_sector(BeamLabel::RR2, &via_h, Sector::Up, parity(n2)));
    put(BeamProfile::from_sector(BeamLabel::O, &out, Sector::Up, parity(n3)));
    put(BeamProfile::from_sector(BeamLabel::H, &out, Sector::Down, parity(n3)));
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SplitterParams;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(planes: usize, theta: f64) -> InterferometerSpec {
        InterferometerSpec::three_blade(planes, SplitterParams::with_theta(theta).unwrap()).unwrap()
    }

    #[test]
    fn spec_validation() {
        let b = BladeSpec::new(3, SplitterParams::with_theta(0.4).unwrap()).unwrap();
        assert!(InterferometerSpec::new(vec![b.clone()], 1, KeptPaths::All).is_err());
        assert!(InterferometerSpec::new(vec![b.clone(); 3], 0, KeptPaths::All).is_err());
        assert!(InterferometerSpec::new(vec![b.clone(); 3], 3, KeptPaths::All).is_err());
        let bad = KeptPaths::Only(vec![PathSelector::parse("OHO").unwrap()]);
        assert!(InterferometerSpec::new(vec![b.clone(); 3], 1, bad).is_err());
        assert!(InterferometerSpec::new(vec![b; 3], 2, KeptPaths::All).is_ok());
        assert!(PathSelector::parse("OX").is_err());
    }

    #[test]
    fn phase_operator() {
        let s = BeamState::ray_up(3).add(&BeamState::ray_down(7));
        assert_eq!(apply_phase(&s, 0.0), s);

        let up = BeamState::ray_up(0);
        let out = apply_phase(&up, PI);
        assert!((out.up_at(0) - c(0.0, 1.0)).norm() < 1e-15);

        let mix = BeamState::from_amplitudes(0, vec![c(FRAC_1_SQRT_2, 0.0)], vec![c(FRAC_1_SQRT_2, 0.0)]).unwrap();
        let out = apply_phase(&mix, PI);
        assert!((out.up_at(0) - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((out.down_at(0) - c(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projectors() {
        let src = crate::lattice::NodeParameterSource::from_coefficients(crate::lattice::NodeCoefficients::hadamard());
        let psi2 = crate::lattice::propagate(&BeamState::ray_up(0), 2, &src);
        let o = project_branch(&psi2, Branch::O);
        assert!((o.up_at(2) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((o.up_at(0) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((o.norm_sqr() - 0.5).abs() < 1e-15);
        let h = project_branch(&psi2, Branch::H);
        assert!((o.norm_sqr() + h.norm_sqr() - psi2.norm_sqr()).abs() < 1e-15);

        assert_eq!(project_branch(&BeamState::ray_up(1), Branch::H).norm_sqr(), 0.0);
        assert_eq!(project_branch(&BeamState::zero(), Branch::O), BeamState::zero());
    }

    #[test]
    fn path_amplitude_policy_and_errors() {
        let s = spec(3, 0.6);
        let oo = PathSelector::parse("OO").unwrap();
        let oh = PathSelector::parse("OH").unwrap();
        assert!(!s.is_kept(&oo));
        assert!(s.is_kept(&oh) && s.is_kept(&PathSelector::parse("HO").unwrap()));
        assert!(path_amplitude(&s, &oo, &BeamState::ray_up(0)).unwrap().norm_sqr() > 0.0);
        assert!(path_amplitude(&s, &PathSelector::parse("O").unwrap(), &BeamState::ray_up(0)).is_err());

        let straight = spec(5, 0.0);
        assert_eq!(path_amplitude(&straight, &oh, &BeamState::ray_up(0)).unwrap().norm_sqr(), 0.0);
    }

    #[test]
    fn single_plane_balanced_blades() {
        let s = spec(1, FRAC_PI_4);
        let out = simulate(&s, 0.0, &BeamState::ray_up(0));
        assert!(out.i_h.abs() < 1e-15);
        assert!((out.i_o - 0.5).abs() < 1e-15);
        assert!((out.i_o + out.i_h + out.i_discarded - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dark_o_port_at_pi() {
        for (n, th) in [(1, 0.3), (7, 1.1), (20, FRAC_PI_4)] {
            let out = simulate(&spec(n, th), PI, &BeamState::ray_up(0));
            assert!(out.i_o < 1e-28, "N={n} θ={th}: I_O={}", out.i_o);
        }
    }

    #[test]
    fn model_matches_direct_simulation() {
        let s = spec(12, 0.9);
        let grid = periodic_grid(16);
        let a = fringe_scan(&s, &grid, &BeamState::ray_up(0)).unwrap();
        let b = fringe_scan_direct(Execution::Sequential, &s, &grid, &BeamState::ray_up(0)).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.i_o - y.i_o).abs() < 1e-13);
            assert!((x.i_h - y.i_h).abs() < 1e-13);
            assert!((x.i_discarded - y.i_discarded).abs() < 1e-13);
        }
        assert!(fringe_scan(&s, &[], &BeamState::ray_up(0)).is_err());
    }

    #[test]
    fn fringe_single_point_and_straight_blades() {
        let one = fringe_scan(&spec(4, 0.5), &[0.0], &BeamState::ray_up(0)).unwrap();
        assert_eq!(one.rows.len(), 1);

        let flat = fringe_scan(&spec(6, 0.0), &periodic_grid(16), &BeamState::ray_up(0)).unwrap();
        for r in &flat.rows {
            assert_eq!((r.i_o, r.i_h), (0.0, 0.0));
            assert!((r.i_discarded - 1.0).abs() < 1e-15);
        }
        assert!(matches!(contrast(&flat), Err(Error::UndefinedContrast(_))));
    }

    #[test]
    fn contrast_of_exact_cosine() {
        let grid = periodic_grid(32);
        let series = FringeSeries {
            rows: grid
                .iter()
                .map(|&chi| FringeRow {
                    chi,
                    i_o: 0.1 * (1.0 + chi.cos()),
                    i_h: 0.3 - 0.1 * chi.cos(),
                    i_discarded: 0.5,
                })
                .collect(),
        };
        let r = contrast(&series).unwrap();
        assert!((r.contrast_h - 1.0 / 3.0).abs() < 1e-14);
        assert!((r.coeff_a - 0.1).abs() < 1e-15 && (r.coeff_b - 0.3).abs() < 1e-15);
        assert!((r.contrast_o - 1.0).abs() < 1e-14);
        assert!((r.maxmin_h - r.contrast_h).abs() < 1e-6);
        assert!((r.maxmin_o - r.contrast_o).abs() < 1e-6);
        assert!((r.contrast_h - r.coeff_a / r.coeff_b).abs() < 1e-12);
        assert!(r.phase_o.abs() < 1e-12 && (r.phase_h.abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn contrast_rejects_short_or_partial_series() {
        let mk = |grid: Vec<f64>| FringeSeries {
            rows: grid
                .into_iter()
                .map(|chi| FringeRow {
                    chi,
                    i_o: 1.0 + chi.cos(),
                    i_h: 2.0 - chi.cos(),
                    i_discarded: 0.0,
                })
                .collect(),
        };
        assert!(matches!(contrast(&mk(periodic_grid(6))), Err(Error::InvalidArgument(_))));
        let half: Vec<f64> = (0..16).map(|k| PI * k as f64 / 16.0).collect();
        assert!(matches!(contrast(&mk(half)), Err(Error::InvalidArgument(_))));
        assert!(contrast(&mk(periodic_grid(8))).is_ok());
    }

    #[test]
    fn hundred_plane_contrast() {
        let s = spec(100, 17.0 * PI / 36.0);
        let series = fringe_scan(&s, &periodic_grid(128), &BeamState::ray_up(0)).unwrap();
        let r = contrast(&series).unwrap();
        assert!((r.contrast_h - 0.39).abs() <= 0.05, "{}", r.contrast_h);
        assert!((r.contrast_o - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_flags_undefined_rows() {
        let sweep = contrast_vs_planes(SplitterParams::with_theta(0.0).unwrap(), 2, 4, 16).unwrap();
        assert_eq!(sweep.rows.len(), 3);
        assert!(sweep.rows.iter().all(|r| matches!(r.result, Err(Error::UndefinedContrast(_)))));
        assert!(contrast_vs_planes(SplitterParams::with_theta(0.3).unwrap(), 5, 4, 16).is_err());
        assert!(contrast_vs_planes(SplitterParams::with_theta(0.3).unwrap(), 1, 4, 4).is_err());
    }

    #[test]
    fn sweep_modes_agree() {
        let p = SplitterParams::with_theta(1.2).unwrap();
        let a = contrast_vs_planes_with(Execution::Sequential, p, 3, 20, 32).unwrap();
        let b = contrast_vs_planes_with(Execution::Parallel, p, 3, 20, 32).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eight_profiles() {
        let s = spec(100, FRAC_PI_4);
        let map = blade_output_profiles(&s, &BeamState::ray_up(0)).unwrap();
        assert_eq!(map.len(), 8);
        let r1 = map[&BeamLabel::R1].as_intensity_profile();
        assert!(r1.reflected_mirror_defect() < 1e-10);
        let t1 = map[&BeamLabel::T1].as_intensity_profile();
        assert!(t1.transmitted_stats().unwrap().skewness.abs() > 0.1);
        let pos = map[&BeamLabel::O].normalized_positions();
        assert_eq!((pos[0], *pos.last().unwrap()), (0.0, 1.0));
    }

    #[test]
    fn profiles_straight_and_thin() {
        let map = blade_output_profiles(&spec(10, 0.0), &BeamState::ray_up(0)).unwrap();
        let t1 = &map[&BeamLabel::T1];
        assert_eq!(t1.occupied(), 1);
        assert_eq!(t1.nodes[t1.intensity.iter().position(|&v| v > 0.0).unwrap()], 10);
        for l in [BeamLabel::R1, BeamLabel::TR2, BeamLabel::RT2, BeamLabel::RR2, BeamLabel::O, BeamLabel::H] {
            assert_eq!(map[&l].total(), 0.0, "{l}");
        }

        let map = blade_output_profiles(&spec(1, 0.7), &BeamState::ray_up(0)).unwrap();
        assert!(map.values().all(|p| p.occupied() <= 2));

        let four = InterferometerSpec::identical(4, 3, SplitterParams::with_theta(0.7).unwrap()).unwrap();
        assert!(matches!(
            blade_output_profiles(&four, &BeamState::ray_up(0)),
            Err(Error::UnsupportedGeometry(_))
        ));
    }

    #[test]
    fn four_blade_composition_conserves() {
        let four = InterferometerSpec::identical(4, 6, SplitterParams::with_theta(0.8).unwrap()).unwrap();
        for chi in [0.0, 1.0, 2.5] {
            let out = simulate(&four, chi, &BeamState::ray_up(0));
            assert!((out.i_o + out.i_h + out.i_discarded - 1.0).abs() < 1e-13);
        }
        let all = InterferometerSpec::new(four.blades().to_vec(), 2, KeptPaths::All).unwrap();
        let out = simulate(&all, 0.4, &BeamState::ray_up(0));
        assert_eq!(out.i_discarded, 0.0);
        assert!((out.i_o + out.i_h - 1.0).abs() < 1e-13);
    }
}

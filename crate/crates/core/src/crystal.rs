//! Single-blade experiments: Borrmann-fan profiles, integrated intensities,
//! thickness scans and post-selected Pendellösung scans.

use crate::exec::Execution;
use crate::lattice::{
    propagate, propagate_observed, BeamState, NodeParameterSource, SplitterParams,
};
use crate::stats::{distribution_stats, DistributionStats};
use crate::{Error, Result};

/// One crystal blade of `planes` node planes.
#[derive(Debug, Clone, PartialEq)]
pub struct BladeSpec {
    planes: usize,
    source: NodeParameterSource,
}

impl BladeSpec {
    pub fn new(planes: usize, params: SplitterParams) -> Result<Self> {
        Self::with_source(planes, NodeParameterSource::uniform(params))
    }

    pub fn with_source(planes: usize, source: NodeParameterSource) -> Result<Self> {
        if planes == 0 {
            return Err(Error::InvalidArgument("a blade needs at least one plane".into()));
        }
        if let Some(plane) = source.max_override_plane().filter(|&p| p >= planes) {
            return Err(Error::OverrideOutOfRange { plane, planes });
        }
        Ok(Self { planes, source })
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn source(&self) -> &NodeParameterSource {
        &self.source
    }

    pub fn params(&self) -> Option<SplitterParams> {
        self.source.params()
    }

    pub fn propagate(&self, input: &BeamState) -> BeamState {
        propagate(input, self.planes, &self.source)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub node: i64,
    pub intensity_t: f64,
    pub intensity_r: f64,
}

/// Exit-surface intensities `I^T_j = |α_j|²`, `I^R_j = |β_j|²`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntensityProfile {
    pub rows: Vec<ProfileRow>,
}

impl IntensityProfile {
    /// Rows for every node of `state`'s window with parity in `parities`
    /// (a two-element mask indexed by `j.rem_euclid(2)`).
    fn from_state_with_parity(state: &BeamState, parities: [bool; 2]) -> Self {
        let rows = state
            .indices()
            .filter(|j| parities[j.rem_euclid(2) as usize])
            .map(|j| ProfileRow {
                node: j,
                intensity_t: state.up_at(j).norm_sqr(),
                intensity_r: state.down_at(j).norm_sqr(),
            })
            .collect();
        Self { rows }
    }

    /// Rows for every node of the state's window.
    pub fn from_state(state: &BeamState) -> Self {
        Self::from_state_with_parity(state, [true, true])
    }

    pub fn nodes(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.node).collect()
    }

    pub fn transmitted(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.intensity_t).collect()
    }

    pub fn reflected(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.intensity_r).collect()
    }

    pub fn total(&self) -> f64 {
        crate::stats::compensated_sum(self.rows.iter().map(|r| r.intensity_t + r.intensity_r))
    }

    pub fn transmitted_stats(&self) -> Option<DistributionStats> {
        distribution_stats(&self.nodes(), &self.transmitted())
    }

    pub fn reflected_stats(&self) -> Option<DistributionStats> {
        distribution_stats(&self.nodes(), &self.reflected())
    }

    /// Largest `|I^R(lo + p) − I^R(hi − p)|` relative to the peak, over the
    /// reflected support `[lo, hi]`.
    pub fn reflected_mirror_defect(&self) -> f64 {
        let r = self.reflected();
        let Some(first) = r.iter().position(|&v| v != 0.0) else {
            return 0.0;
        };
        let last = r.iter().rposition(|&v| v != 0.0).unwrap_or(first);
        let support = &r[first..=last];
        let peak = support.iter().fold(0.0f64, |a, &v| a.max(v));
        support
            .iter()
            .zip(support.iter().rev())
            .map(|(a, b)| (a - b).abs() / peak)
            .fold(0.0, f64::max)
    }
}

/// Node parities reachable after `planes` planes from the non-zero nodes of `input`.
fn reachable_parities(input: &BeamState, planes: usize) -> [bool; 2] {
    let mut mask = [false; 2];
    for j in input.indices() {
        if input.up_at(j).norm_sqr() > 0.0 || input.down_at(j).norm_sqr() > 0.0 {
            mask[(j + planes as i64).rem_euclid(2) as usize] = true;
        }
    }
    mask
}

/// Exit profile over the nodes reachable from `input`. For `|a_0⟩` these are
/// `j ∈ {−N, −N+2, …, N}`.
pub fn borrmann_profile(blade: &BladeSpec, input: &BeamState) -> IntensityProfile {
    let out = blade.propagate(input);
    IntensityProfile::from_state_with_parity(&out, reachable_parities(input, blade.planes))
}

/// `(I_T, I_R)`: summed exit intensities of the up and down sectors.
pub fn integrated_intensities(blade: &BladeSpec, input: &BeamState) -> (f64, f64) {
    let out = blade.propagate(input);
    (out.up_weight(), out.down_weight())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub parameter: f64,
    pub value_t: f64,
    pub value_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSeries {
    pub parameter_name: String,
    pub rows: Vec<ScanRow>,
}

impl ScanSeries {
    pub fn parameters(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.parameter).collect()
    }

    pub fn values_t(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value_t).collect()
    }

    pub fn values_r(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value_r).collect()
    }
}

/// Integrated intensities of `|a_0⟩` for every plane count in `n_min..=n_max`.
///
/// Runs a single propagation to `n_max` and records the sector weights after
/// each plane, so every row is bit-identical to a separate run at that `N`.
pub fn thickness_scan(params: SplitterParams, n_min: usize, n_max: usize) -> Result<ScanSeries> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidArgument(format!(
            "thickness range must satisfy 1 ≤ n_min ≤ n_max (got {n_min}..={n_max})"
        )));
    }
    let source = NodeParameterSource::uniform(params);
    let mut rows = Vec::with_capacity(n_max - n_min + 1);
    propagate_observed(&BeamState::ray_up(0), n_max, &source, |n, view| {
        if n >= n_min {
            rows.push(ScanRow {
                parameter: n as f64,
                value_t: view.up_weight(),
                value_r: view.down_weight(),
            });
        }
    });
    Ok(ScanSeries {
        parameter_name: "N".into(),
        rows,
    })
}

/// Which exit node a Pendellösung scan post-selects on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostSelect {
    /// Exit-surface node number `k ∈ [0, N]`, counted from the reflected
    /// edge of the Borrmann fan: lattice index `j = 2k − N`. `k = N/2` is the
    /// fan centre.
    ExitNode(i64),
    /// Raw lattice index `j`.
    Lattice(i64),
}

impl PostSelect {
    pub fn lattice_index(self, planes: usize) -> i64 {
        match self {
            PostSelect::ExitNode(k) => 2 * k - planes as i64,
            PostSelect::Lattice(j) => j,
        }
    }
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} grid has non-finite values")));
    }
    let inc = grid.windows(2).all(|w| w[1] > w[0]);
    let dec = grid.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) {
        return Err(Error::InvalidArgument(format!("{what} grid is not strictly monotonic")));
    }
    Ok(())
}

/// Post-selected exit intensities `(I^T_j(θ), I^R_j(θ))` of `|a_0⟩` over a θ
/// grid. Nodes outside the fan (or of unreachable parity) read zero.
pub fn pendellosung_scan(
    planes: usize,
    node: PostSelect,
    theta_grid: &[f64],
    xi: f64,
    zeta: f64,
) -> Result<ScanSeries> {
    pendellosung_scan_with(Execution::default(), planes, node, theta_grid, xi, zeta)
}

pub fn pendellosung_scan_with(
    exec: Execution,
    planes: usize,
    node: PostSelect,
    theta_grid: &[f64],
    xi: f64,
    zeta: f64,
) -> Result<ScanSeries> {
    check_grid(theta_grid, "theta")?;
    let params = theta_grid
        .iter()
        .map(|&t| SplitterParams::new(xi, t, zeta))
        .collect::<Result<Vec<_>>>()?;
    let j = node.lattice_index(planes);
    let input = BeamState::ray_up(0);
    let values = exec.map(&params, |p| {
        let out = propagate(&input, planes, &NodeParameterSource::uniform(*p));
        (out.up_at(j).norm_sqr(), out.down_at(j).norm_sqr())
    });
    Ok(ScanSeries {
        parameter_name: "theta".into(),
        rows: theta_grid
            .iter()
            .zip(values)
            .map(|(&t, (it, ir))| ScanRow {
                parameter: t,
                value_t: it,
                value_r: ir,
            })
            .collect(),
    })
}

/// Integrated `(I_T(θ), I_R(θ))` of `|a_0⟩` at fixed plane count.
pub fn integrated_theta_scan(
    planes: usize,
    theta_grid: &[f64],
    xi: f64,
    zeta: f64,
) -> Result<ScanSeries> {
    integrated_theta_scan_with(Execution::default(), planes, theta_grid, xi, zeta)
}

pub fn integrated_theta_scan_with(
    exec: Execution,
    planes: usize,
    theta_grid: &[f64],
    xi: f64,
    zeta: f64,
) -> Result<ScanSeries> {
    check_grid(theta_grid, "theta")?;
    let params = theta_grid
        .iter()
        .map(|&t| SplitterParams::new(xi, t, zeta))
        .collect::<Result<Vec<_>>>()?;
    let input = BeamState::ray_up(0);
    let values = exec.map(&params, |p| {
        let out = propagate(&input, planes, &NodeParameterSource::uniform(*p));
        (out.up_weight(), out.down_weight())
    });
    Ok(ScanSeries {
        parameter_name: "theta".into(),
        rows: theta_grid
            .iter()
            .zip(values)
            .map(|(&t, (it, ir))| ScanRow {
                parameter: t,
                value_t: it,
                value_r: ir,
            })
            .collect(),
    })
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|k| if k == points - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

//! Two-ray lattice wavefunction and the node scattering step.
//!
//! Node `j` maps
//!
//! ```text
//! |a_j⟩ ↦ t_a |a_{j+1}⟩ + r_a |b_{j-1}⟩
//! |b_j⟩ ↦ r_b |a_{j+1}⟩ + t_b |b_{j-1}⟩
//! ```
//!
//! so an upward ray moves one node up, a downward ray one node down, and every
//! plane widens the occupied window by one node on each side. States are
//! stored densely over a contiguous index window; the kernel is a
//! scatter-add over that window and never forms the plane unitary.

use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::ops::Range;

/// Tolerance of the three coefficient identities.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Largest plane count accepted by the path-enumeration oracle (cost `2^N`).
pub const ORACLE_MAX_PLANES: usize = 20;

/// Amplitudes below this modulus may be dropped by [`BeamState::trimmed`].
pub const TRUNCATION_FLOOR: f64 = 1e-300;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Node angles: transmission phase `xi`, splitting angle `theta`, reflection
/// phase `zeta`, all in radians.
///
/// `theta` is reduced to `[0, π]`. A value in `(π, 2π)` is replaced by
/// `2π − θ` with `ζ + π`, which leaves all four node coefficients unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterParams {
    xi: f64,
    theta: f64,
    zeta: f64,
    reduced: bool,
}

impl SplitterParams {
    pub fn new(xi: f64, theta: f64, zeta: f64) -> Result<Self> {
        if !(xi.is_finite() && theta.is_finite() && zeta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "splitter angles must be finite (xi={xi}, theta={theta}, zeta={zeta})"
            )));
        }
        let mut t = theta.rem_euclid(TAU);
        let mut z = zeta;
        if t > PI {
            t = TAU - t;
            z += PI;
        }
        Ok(Self {
            xi,
            theta: t,
            zeta: z,
            reduced: t != theta,
        })
    }

    /// `θ` only, with `ξ = ζ = 0` (the `U_{j,0,0,θ}` family).
    pub fn with_theta(theta: f64) -> Result<Self> {
        Self::new(0.0, theta, 0.0)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Whether the input `theta` was outside `[0, π]` and had to be reduced.
    pub fn was_reduced(&self) -> bool {
        self.reduced
    }
}

/// Complex transmission/reflection coefficients of a single node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCoefficients {
    t_a: Complex64,
    t_b: Complex64,
    r_a: Complex64,
    r_b: Complex64,
}

impl NodeCoefficients {
    /// Checked constructor; rejects coefficient sets that are not unitary
    /// within [`UNITARITY_TOL`].
    pub fn new(t_a: Complex64, t_b: Complex64, r_a: Complex64, r_b: Complex64) -> Result<Self> {
        let c = Self { t_a, t_b, r_a, r_b };
        let defect = c.unitarity_defect();
        if defect.is_nan() || defect > UNITARITY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(c)
    }

    /// The explicit Hadamard node `|a_j⟩ ↦ (|a_{j+1}⟩ + |b_{j-1}⟩)/√2`,
    /// `|b_j⟩ ↦ (|a_{j+1}⟩ − |b_{j-1}⟩)/√2`.
    ///
    /// Its determinant is −1, so it is not a member of the angle family of
    /// [`derive_coefficients`]; it equals `−i·U(ξ=π/2, θ=π/4, ζ=π/2)`.
    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            t_a: h,
            t_b: -h,
            r_a: h,
            r_b: h,
        }
    }

    pub fn t_a(&self) -> Complex64 {
        self.t_a
    }

    pub fn t_b(&self) -> Complex64 {
        self.t_b
    }

    pub fn r_a(&self) -> Complex64 {
        self.r_a
    }

    pub fn r_b(&self) -> Complex64 {
        self.r_b
    }

    /// Largest violation of `|t_a|²+|r_a|² = 1`, `|t_b|²+|r_b|² = 1` and
    /// `t_a·r̄_b + r_a·t̄_b = 0`.
    pub fn unitarity_defect(&self) -> f64 {
        let col_a = (1.0 - self.t_a.norm_sqr() - self.r_a.norm_sqr()).abs();
        let col_b = (1.0 - self.t_b.norm_sqr() - self.r_b.norm_sqr()).abs();
        let cross = (self.t_a * self.r_b.conj() + self.r_a * self.t_b.conj()).norm();
        col_a.max(col_b).max(cross)
    }
}

/// `t_a = e^{iξ}cosθ`, `t_b = e^{−iξ}cosθ`, `r_a = −e^{−iζ}sinθ`, `r_b = e^{iζ}sinθ`.
pub fn derive_coefficients(params: &SplitterParams) -> NodeCoefficients {
    let (s, c) = params.theta.sin_cos();
    NodeCoefficients {
        t_a: Complex64::from_polar(c, params.xi),
        t_b: Complex64::from_polar(c, -params.xi),
        r_a: -Complex64::from_polar(s, -params.zeta),
        r_b: Complex64::from_polar(s, params.zeta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    /// Upward rays `|a_j⟩` (transmitted direction).
    Up,
    /// Downward rays `|b_j⟩` (reflected direction).
    Down,
}

/// Complex amplitudes over a contiguous window of lattice nodes.
///
/// Stored position `p` corresponds to node `j = base + p` in both sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    base: i64,
    up: Vec<Complex64>,
    down: Vec<Complex64>,
}

impl Default for BeamState {
    fn default() -> Self {
        Self::zero()
    }
}

impl BeamState {
    pub fn zero() -> Self {
        Self {
            base: 0,
            up: Vec::new(),
            down: Vec::new(),
        }
    }

    /// Single upward ray `|a_j⟩`.
    pub fn ray_up(j: i64) -> Self {
        Self {
            base: j,
            up: vec![Complex64::new(1.0, 0.0)],
            down: vec![ZERO],
        }
    }

    /// Single downward ray `|b_j⟩`.
    pub fn ray_down(j: i64) -> Self {
        Self {
            base: j,
            up: vec![ZERO],
            down: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn from_amplitudes(base: i64, up: Vec<Complex64>, down: Vec<Complex64>) -> Result<Self> {
        if up.len() != down.len() {
            return Err(Error::InvalidArgument(format!(
                "sector lengths differ ({} up, {} down)",
                up.len(),
                down.len()
            )));
        }
        if up.iter().chain(&down).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(Self { base, up, down })
    }

    pub fn base(&self) -> i64 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    /// Lattice indices covered by the stored window.
    pub fn indices(&self) -> Range<i64> {
        self.base..self.base + self.up.len() as i64
    }

    pub fn up(&self) -> &[Complex64] {
        &self.up
    }

    pub fn down(&self) -> &[Complex64] {
        &self.down
    }

    fn position(&self, j: i64) -> Option<usize> {
        let p = j.checked_sub(self.base)?;
        usize::try_from(p).ok().filter(|&p| p < self.up.len())
    }

    /// `α_j`; zero outside the window.
    pub fn up_at(&self, j: i64) -> Complex64 {
        self.position(j).map_or(ZERO, |p| self.up[p])
    }

    /// `β_j`; zero outside the window.
    pub fn down_at(&self, j: i64) -> Complex64 {
        self.position(j).map_or(ZERO, |p| self.down[p])
    }

    pub fn amplitude(&self, sector: Sector, j: i64) -> Complex64 {
        match sector {
            Sector::Up => self.up_at(j),
            Sector::Down => self.down_at(j),
        }
    }

    pub fn up_weight(&self) -> f64 {
        weight(&self.up)
    }

    pub fn down_weight(&self) -> f64 {
        weight(&self.down)
    }

    /// `Σ|α_j|² + Σ|β_j|²`, with compensated summation.
    pub fn norm_sqr(&self) -> f64 {
        let mut acc = crate::stats::NeumaierSum::default();
        for z in self.up.iter().chain(&self.down) {
            acc.add(z.norm_sqr());
        }
        acc.total()
    }

    /// Copy with the other sector zeroed (no renormalization).
    pub fn sector_only(&self, sector: Sector) -> Self {
        let zeros = vec![ZERO; self.len()];
        match sector {
            Sector::Up => Self {
                base: self.base,
                up: self.up.clone(),
                down: zeros,
            },
            Sector::Down => Self {
                base: self.base,
                up: zeros,
                down: self.down.clone(),
            },
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.scaled_sectors(factor, factor)
    }

    /// Multiplies the up sector by `up` and the down sector by `down`.
    pub fn scaled_sectors(&self, up: Complex64, down: Complex64) -> Self {
        Self {
            base: self.base,
            up: self.up.iter().map(|z| z * up).collect(),
            down: self.down.iter().map(|z| z * down).collect(),
        }
    }

    /// Amplitude-wise sum over the union of both windows.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let lo = self.base.min(other.base);
        let hi = self.indices().end.max(other.indices().end);
        let len = (hi - lo) as usize;
        let mut up = vec![ZERO; len];
        let mut down = vec![ZERO; len];
        for s in [self, other] {
            let off = (s.base - lo) as usize;
            for (p, (u, d)) in s.up.iter().zip(&s.down).enumerate() {
                up[off + p] += u;
                down[off + p] += d;
            }
        }
        Self { base: lo, up, down }
    }

    /// Largest amplitude difference over the union of both windows.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.base.min(other.base);
        let hi = self.indices().end.max(other.indices().end);
        (lo..hi)
            .flat_map(|j| {
                [
                    (self.up_at(j) - other.up_at(j)).norm(),
                    (self.down_at(j) - other.down_at(j)).norm(),
                ]
            })
            .fold(0.0, f64::max)
    }

    /// Nodes whose amplitude in `sector` is not exactly zero.
    pub fn support(&self, sector: Sector) -> Vec<i64> {
        let amps = match sector {
            Sector::Up => &self.up,
            Sector::Down => &self.down,
        };
        amps.iter()
            .zip(self.indices())
            .filter(|(z, _)| **z != ZERO)
            .map(|(_, j)| j)
            .collect()
    }

    /// Zeroes amplitudes with modulus below [`TRUNCATION_FLOOR`] and shrinks
    /// the window to the remaining support. Used only for serialization.
    pub fn trimmed(&self) -> Self {
        let keep = |z: &Complex64| z.norm() >= TRUNCATION_FLOOR;
        let clean = |z: &Complex64| if keep(z) { *z } else { ZERO };
        let live = |p: usize| keep(&self.up[p]) || keep(&self.down[p]);
        let Some(first) = (0..self.len()).find(|&p| live(p)) else {
            return Self::zero();
        };
        let last = (0..self.len()).rev().find(|&p| live(p)).unwrap_or(first);
        Self {
            base: self.base + first as i64,
            up: self.up[first..=last].iter().map(clean).collect(),
            down: self.down[first..=last].iter().map(clean).collect(),
        }
    }

    pub fn view(&self) -> StateView<'_> {
        StateView {
            base: self.base,
            up: &self.up,
            down: &self.down,
        }
    }
}

/// Borrowed window of a state, handed to propagation observers.
#[derive(Debug, Clone, Copy)]
pub struct StateView<'a> {
    pub base: i64,
    pub up: &'a [Complex64],
    pub down: &'a [Complex64],
}

impl StateView<'_> {
    pub fn up_weight(&self) -> f64 {
        weight(self.up)
    }

    pub fn down_weight(&self) -> f64 {
        weight(self.down)
    }

    pub fn to_state(&self) -> BeamState {
        BeamState {
            base: self.base,
            up: self.up.to_vec(),
            down: self.down.to_vec(),
        }
    }
}

fn weight(amps: &[Complex64]) -> f64 {
    let mut acc = crate::stats::NeumaierSum::default();
    for z in amps {
        acc.add(z.norm_sqr());
    }
    acc.total()
}

/// Node coefficients for every (plane, node) of a blade: one uniform set plus
/// optional per-node overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeParameterSource {
    uniform: NodeCoefficients,
    params: Option<SplitterParams>,
    overrides: BTreeMap<usize, BTreeMap<i64, NodeCoefficients>>,
}

impl NodeParameterSource {
    pub fn uniform(params: SplitterParams) -> Self {
        Self {
            uniform: derive_coefficients(&params),
            params: Some(params),
            overrides: BTreeMap::new(),
        }
    }

    pub fn from_coefficients(coefficients: NodeCoefficients) -> Self {
        Self {
            uniform: coefficients,
            params: None,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(self, plane: usize, node: i64, params: SplitterParams) -> Self {
        self.with_override_coefficients(plane, node, derive_coefficients(&params))
    }

    pub fn with_override_coefficients(mut self, plane: usize, node: i64, c: NodeCoefficients) -> Self {
        self.overrides.entry(plane).or_default().insert(node, c);
        self
    }

    /// Angles of the uniform node, when it was built from angles.
    pub fn params(&self) -> Option<SplitterParams> {
        self.params
    }

    pub fn uniform_coefficients(&self) -> NodeCoefficients {
        self.uniform
    }

    pub fn is_uniform(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn max_override_plane(&self) -> Option<usize> {
        self.overrides.keys().next_back().copied()
    }

    pub fn coefficients(&self, plane: usize, node: i64) -> NodeCoefficients {
        self.overrides
            .get(&plane)
            .and_then(|m| m.get(&node))
            .copied()
            .unwrap_or(self.uniform)
    }
}

/// Subnormal parts to zero. The fan tails underflow through the subnormal
/// range, where arithmetic is an order of magnitude slower; the change is
/// below `f64::MIN_POSITIVE` per amplitude.
#[inline(always)]
fn flush(z: Complex64) -> Complex64 {
    let f = |x: f64| if x.abs() < f64::MIN_POSITIVE { 0.0 } else { x };
    Complex64::new(f(z.re), f(z.im))
}

/// One plane of the scattering kernel. `out_*` must be two longer than the
/// input window; the output window starts one node lower.
fn scatter_plane(
    source: &NodeParameterSource,
    plane: usize,
    base: i64,
    up: &[Complex64],
    down: &[Complex64],
    out_up: &mut [Complex64],
    out_down: &mut [Complex64],
) {
    let n = up.len();
    debug_assert_eq!(down.len(), n);
    debug_assert_eq!(out_up.len(), n + 2);
    debug_assert_eq!(out_down.len(), n + 2);

    let c = source.uniform;
    let (ta, tb, ra, rb) = (c.t_a, c.t_b, c.r_a, c.r_b);
    out_up[0] = ZERO;
    out_up[1] = ZERO;
    out_down[n] = ZERO;
    out_down[n + 1] = ZERO;
    for (((u, d), ou), od) in up
        .iter()
        .zip(down)
        .zip(&mut out_up[2..])
        .zip(&mut out_down[..n])
    {
        *ou = flush(ta * u + rb * d);
        *od = flush(ra * u + tb * d);
    }

    // each output slot depends on exactly one input node, so overridden
    // nodes are recomputed in place
    if let Some(nodes) = source.overrides.get(&plane) {
        let window = base..base + n as i64;
        for (&j, c) in nodes.range(window) {
            let p = (j - base) as usize;
            out_up[p + 2] = flush(c.t_a * up[p] + c.r_b * down[p]);
            out_down[p] = flush(c.r_a * up[p] + c.t_b * down[p]);
        }
    }
}

/// Applies plane number `plane` (selects overrides) to every node of `state`.
pub fn apply_plane(state: &BeamState, source: &NodeParameterSource, plane: usize) -> BeamState {
    let n = state.len();
    let mut up = vec![ZERO; n + 2];
    let mut down = vec![ZERO; n + 2];
    scatter_plane(source, plane, state.base, &state.up, &state.down, &mut up, &mut down);
    BeamState {
        base: state.base - 1,
        up,
        down,
    }
}

/// `U(N)·state`: planes `0..planes` applied in order.
pub fn propagate(state: &BeamState, planes: usize, source: &NodeParameterSource) -> BeamState {
    propagate_observed(state, planes, source, |_, _| {})
}

/// Like [`propagate`], calling `observe(n, view)` after the `n`-th plane.
pub fn propagate_observed<F>(
    state: &BeamState,
    planes: usize,
    source: &NodeParameterSource,
    mut observe: F,
) -> BeamState
where
    F: FnMut(usize, StateView<'_>),
{
    let n0 = state.len();
    let cap = n0 + 2 * planes;
    let mut up = vec![ZERO; cap];
    let mut down = vec![ZERO; cap];
    let mut next_up = vec![ZERO; cap];
    let mut next_down = vec![ZERO; cap];
    up[..n0].copy_from_slice(&state.up);
    down[..n0].copy_from_slice(&state.down);

    let mut base = state.base;
    let mut len = n0;
    for plane in 0..planes {
        scatter_plane(
            source,
            plane,
            base,
            &up[..len],
            &down[..len],
            &mut next_up[..len + 2],
            &mut next_down[..len + 2],
        );
        std::mem::swap(&mut up, &mut next_up);
        std::mem::swap(&mut down, &mut next_down);
        base -= 1;
        len += 2;
        observe(
            plane + 1,
            StateView {
                base,
                up: &up[..len],
                down: &down[..len],
            },
        );
    }
    up.truncate(len);
    down.truncate(len);
    BeamState { base, up, down }
}

/// Sector decomposition of a state. Components are not renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub transmitted: BeamState,
    pub reflected: BeamState,
    pub weight_t: f64,
    pub weight_r: f64,
}

pub fn split_components(state: &BeamState) -> Split {
    Split {
        transmitted: state.sector_only(Sector::Up),
        reflected: state.sector_only(Sector::Down),
        weight_t: state.up_weight(),
        weight_r: state.down_weight(),
    }
}

/// One transmit/reflect history through the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub sector: Sector,
    pub node: i64,
    pub amplitude: Complex64,
    pub reflections: u32,
}

/// Every one of the `2^planes` histories of a single ray entering at
/// `(sector, node)`, each with its amplitude product.
pub fn enumerate_paths(
    sector: Sector,
    node: i64,
    planes: usize,
    source: &NodeParameterSource,
) -> Result<Vec<PathRecord>> {
    if planes > ORACLE_MAX_PLANES {
        return Err(Error::OracleTooLarge {
            planes,
            limit: ORACLE_MAX_PLANES,
        });
    }
    let mut out = Vec::with_capacity(1 << planes);
    let start = PathRecord {
        sector,
        node,
        amplitude: Complex64::new(1.0, 0.0),
        reflections: 0,
    };
    walk(start, 0, planes, source, &mut out);
    Ok(out)
}

fn walk(
    at: PathRecord,
    plane: usize,
    planes: usize,
    source: &NodeParameterSource,
    out: &mut Vec<PathRecord>,
) {
    if plane == planes {
        out.push(at);
        return;
    }
    let c = source.coefficients(plane, at.node);
    let (stay, turn) = match at.sector {
        Sector::Up => (
            (Sector::Up, at.node + 1, c.t_a),
            (Sector::Down, at.node - 1, c.r_a),
        ),
        Sector::Down => (
            (Sector::Down, at.node - 1, c.t_b),
            (Sector::Up, at.node + 1, c.r_b),
        ),
    };
    for ((sector, node, coeff), reflected) in [(stay, 0), (turn, 1)] {
        let next = PathRecord {
            sector,
            node,
            amplitude: at.amplitude * coeff,
            reflections: at.reflections + reflected,
        };
        walk(next, plane + 1, planes, source, out);
    }
}

/// Brute-force `U(N)|a_start⟩` by summing all path amplitudes.
pub fn enumerate_paths_oracle(
    start: i64,
    planes: usize,
    source: &NodeParameterSource,
) -> Result<BeamState> {
    let paths = enumerate_paths(Sector::Up, start, planes, source)?;
    let mut acc: BTreeMap<i64, (Complex64, Complex64)> = BTreeMap::new();
    for p in &paths {
        let slot = acc.entry(p.node).or_insert((ZERO, ZERO));
        match p.sector {
            Sector::Up => slot.0 += p.amplitude,
            Sector::Down => slot.1 += p.amplitude,
        }
    }
    let (Some(&lo), Some(&hi)) = (acc.keys().next(), acc.keys().next_back()) else {
        return Ok(BeamState::zero());
    };
    let (up, down) = (lo..=hi)
        .map(|j| acc.get(&j).copied().unwrap_or((ZERO, ZERO)))
        .unzip();
    Ok(BeamState { base: lo, up, down })
}

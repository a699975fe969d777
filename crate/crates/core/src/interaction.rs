//! Superposition region, entering and leaving waves, and the interaction
//! index of a simulated Euler flow.
//!
//! At every recorded frame the gradient `v_x` is split along the
//! characteristic fields, `v_x = Σ_s ξ^s γ_s`. A family is present at a node
//! when its contribution `|ξ^s|·‖γ_s‖` exceeds a fraction of that family's
//! largest contribution over the whole run. Cells where two families are
//! present form the region `M`; connected supports are tracked from frame to
//! frame and classified by whether they pass from the collar
//! `A = M_2ε \ M_ε` into `M` (entering) or from `M` into `A` (leaving).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::euler::{self, CharacteristicField, GasParameters, WaveKind};
use crate::fields::StateVector;
use crate::linalg::{self, Vec3};
use crate::scalar::Real;
use crate::solver::{self, Convention, Grid1D, Profile, RiemannWave, RunOptions, TimeSeries};
use crate::{Error, Result};

/// `ξ^s` at every node, families in the order `(S+, E, S−)`.
#[derive(Clone, Debug, Serialize)]
pub struct GradientDecomposition<T> {
    pub xi: [Vec<T>; 3],
    /// `|ξ^s|·‖γ_s‖` at every node.
    pub contribution: [Vec<T>; 3],
}

/// Fourth-order central differences in the interior, second order next to
/// and at the boundary.
pub fn spatial_derivative<T: Real>(grid: &Grid1D<T>) -> Vec<Vec3<T>> {
    let n = grid.nx();
    let s = &grid.state;
    let dx = grid.dx();
    let two = T::lit(2.0);
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                let mut d = [T::zero(); 3];
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk = (-s[i + 2][k] + T::lit(8.0) * (s[i + 1][k] - s[i - 1][k]) + s[i - 2][k]) / (T::lit(12.0) * dx);
                }
                d
            } else if i >= 1 && i + 1 < n {
                linalg::scale(T::one() / (two * dx), &linalg::sub(&s[i + 1], &s[i - 1]))
            } else if i == 0 {
                let mut d = [T::zero(); 3];
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk = (-T::lit(3.0) * s[0][k] + T::lit(4.0) * s[1][k] - s[2][k]) / (two * dx);
                }
                d
            } else {
                let mut d = [T::zero(); 3];
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk = (T::lit(3.0) * s[n - 1][k] - T::lit(4.0) * s[n - 2][k] + s[n - 3][k]) / (two * dx);
                }
                d
            }
        })
        .collect()
}

/// Solves `[γ+ γ0 γ−] ξ = v_x` at every node.
pub fn decompose_gradient<T: Real>(frame: &Grid1D<T>, fields: &[CharacteristicField<T>; 3]) -> Result<GradientDecomposition<T>> {
    let vx = spatial_derivative(frame);
    let n = frame.nx();
    let mut xi: [Vec<T>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut contribution: [Vec<T>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    for (v, d) in frame.state.iter().zip(&vx) {
        let cols = [fields[0].gamma.value(v), fields[1].gamma.value(v), fields[2].gamma.value(v)];
        let g = linalg::from_columns(&cols);
        let scale = linalg::frobenius(&g);
        let inv = linalg::inverse3(&g, T::lit(1e-12) * scale * scale * scale)
            .ok_or(Error::DegenerateFamily { state: [v[0].as_f64(), v[1].as_f64(), v[2].as_f64()] })?;
        let x = linalg::mat_vec(&inv, d);
        for s in 0..3 {
            xi[s].push(x[s]);
            contribution[s].push(x[s].abs() * linalg::norm(&cols[s]));
        }
    }
    Ok(GradientDecomposition { xi, contribution })
}

/// `‖v_t − Σ_s ξ^s σ v_s γ_s‖` per node, with `σ` the propagation sign of
/// the convention; `v_t` is supplied by the caller.
pub fn consistency_score<T: Real>(
    frame: &Grid1D<T>,
    vt: &[Vec3<T>],
    fields: &[CharacteristicField<T>; 3],
    convention: Convention,
) -> Result<Vec<T>> {
    let d = decompose_gradient(frame, fields)?;
    Ok(frame
        .state
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut predicted = [T::zero(); 3];
            for (s, f) in fields.iter().enumerate() {
                // v_t = −σ Σ ξ v_s γ_s for v_t + σ A v_x = 0
                let w = -convention.propagation_speed(f.speed_at(v)) * d.xi[s][i];
                predicted = linalg::axpy(&predicted, w, &f.gamma.value(v));
            }
            linalg::norm(&linalg::sub(&vt[i], &predicted))
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Supports and region

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// A family is present where its contribution exceeds this fraction of
    /// its largest contribution in the run.
    #[serde(default = "default_support")]
    pub support: f64,
    /// A family whose largest contribution is below this fraction of the
    /// largest contribution of any family is treated as absent.
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Collar width in nodes.
    #[serde(default = "default_eps")]
    pub epsilon_x: usize,
    /// Collar width in frames.
    #[serde(default = "default_eps")]
    pub epsilon_t: usize,
}

fn default_support() -> f64 {
    0.02
}
fn default_floor() -> f64 {
    0.005
}
fn default_eps() -> usize {
    5
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { support: default_support(), floor: default_floor(), epsilon_x: default_eps(), epsilon_t: default_eps() }
    }
}

/// Per-frame support intervals `[start, end]` (node indices, inclusive).
#[derive(Clone, Debug, Serialize)]
pub struct WaveSupport {
    pub kind: WaveKind,
    pub intervals: Vec<Vec<(usize, usize)>>,
    /// Absolute contribution level used as threshold (infinite if absent).
    pub threshold: f64,
    /// Largest contribution of the family in the run.
    pub peak: f64,
}

impl WaveSupport {
    pub fn present(&self) -> bool {
        self.threshold.is_finite()
    }

    fn contains(&self, frame: usize, node: usize) -> bool {
        self.intervals[frame].iter().any(|&(a, b)| a <= node && node <= b)
    }
}

fn intervals(mask: impl Iterator<Item = bool>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut last = 0;
    for (i, m) in mask.enumerate() {
        last = i;
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, last));
    }
    out
}

/// Supports of the three families over a run.
pub fn wave_supports<T: Real>(series: &TimeSeries<T>, g: &GasParameters<T>, thresholds: &Thresholds) -> Result<[WaveSupport; 3]> {
    let fields = euler::characteristic_fields(g);
    let decomps = series.frames.iter().map(|f| decompose_gradient(f, &fields)).collect::<Result<Vec<_>>>()?;
    let peaks: [f64; 3] =
        std::array::from_fn(|s| decomps.iter().flat_map(|d| d.contribution[s].iter().map(|c| c.as_f64())).fold(0.0, f64::max));
    let overall = peaks.iter().copied().fold(0.0, f64::max);
    Ok(std::array::from_fn(|s| {
        let kind = WaveKind::ALL[s];
        let present = overall > 0.0 && peaks[s] >= thresholds.floor * overall;
        let threshold = if present { thresholds.support * peaks[s] } else { f64::INFINITY };
        let intervals = decomps.iter().map(|d| intervals(d.contribution[s].iter().map(|c| c.as_f64() > threshold))).collect();
        WaveSupport { kind, intervals, threshold, peak: peaks[s] }
    }))
}

/// Cells `(frame, node)` of the superposition region and its collars.
#[derive(Clone, Debug, Serialize)]
pub struct InteractionRegion {
    pub t_min: f64,
    pub t_max: f64,
    pub cells: BTreeSet<(usize, usize)>,
    pub epsilon_x: usize,
    pub epsilon_t: usize,
    #[serde(skip)]
    mask: Vec<Vec<bool>>,
    #[serde(skip)]
    inner: Vec<Vec<bool>>,
    #[serde(skip)]
    outer: Vec<Vec<bool>>,
}

impl InteractionRegion {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn in_region(&self, frame: usize, node: usize) -> bool {
        self.mask[frame][node]
    }

    /// Cell of `A_ε = M_2ε \ M_ε`.
    pub fn in_collar(&self, frame: usize, node: usize) -> bool {
        self.outer[frame][node] && !self.inner[frame][node]
    }

    pub fn in_dilation(&self, frame: usize, node: usize) -> bool {
        self.inner[frame][node]
    }
}

fn dilate(mask: &[Vec<bool>], et: usize, ex: usize) -> Vec<Vec<bool>> {
    let frames = mask.len();
    let nodes = mask.first().map_or(0, Vec::len);
    let mut xs = vec![vec![false; nodes]; frames];
    for (f, row) in mask.iter().enumerate() {
        for (i, _) in row.iter().enumerate().filter(|(_, m)| **m) {
            for j in i.saturating_sub(ex)..(i + ex + 1).min(nodes) {
                xs[f][j] = true;
            }
        }
    }
    let mut out = vec![vec![false; nodes]; frames];
    for f in 0..frames {
        for g in f.saturating_sub(et)..(f + et + 1).min(frames) {
            for j in 0..nodes {
                out[f][j] |= xs[g][j];
            }
        }
    }
    out
}

/// Cells where at least two families are present.
pub fn interaction_region<T: Real>(series: &TimeSeries<T>, supports: &[WaveSupport; 3], thresholds: &Thresholds) -> InteractionRegion {
    let nodes = series.frames.first().map_or(0, Grid1D::nx);
    let mut mask = vec![vec![false; nodes]; series.frames.len()];
    let mut cells = BTreeSet::new();
    for (f, row) in mask.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            let count = supports.iter().filter(|s| s.contains(f, i)).count();
            if count >= 2 {
                *cell = true;
                cells.insert((f, i));
            }
        }
    }
    let frames_with: Vec<usize> = cells.iter().map(|c| c.0).collect();
    let (t_min, t_max) = match (frames_with.iter().min(), frames_with.iter().max()) {
        (Some(&a), Some(&b)) => (series.times[a].as_f64(), series.times[b].as_f64()),
        _ => (f64::NAN, f64::NAN),
    };
    let (ex, et) = (thresholds.epsilon_x, thresholds.epsilon_t);
    let inner = dilate(&mask, et, ex);
    let outer = dilate(&mask, 2 * et, 2 * ex);
    InteractionRegion { t_min, t_max, cells, epsilon_x: ex, epsilon_t: et, mask, inner, outer }
}

// ---------------------------------------------------------------------------
// Tracking and classification

#[derive(Clone, Debug, Serialize)]
pub struct TrackEvent {
    pub kind: WaveKind,
    pub frame: usize,
    /// `merge` when two components of the previous frame meet one component,
    /// `split` for the converse.
    pub event: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub entering: BTreeSet<WaveKind>,
    pub leaving: BTreeSet<WaveKind>,
    /// Ambiguities met while tracking; they do not change the sets.
    pub events: Vec<TrackEvent>,
    pub tracks: usize,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = a;
        while self.0[c] != r {
            let n = self.0[c];
            self.0[c] = r;
            c = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Largest displacement, in nodes, of any signal between consecutive frames.
fn gate<T: Real>(series: &TimeSeries<T>, g: &GasParameters<T>) -> usize {
    let dx = series.frames[0].dx().as_f64();
    let max_dt = series.times.windows(2).map(|w| (w[1] - w[0]).as_f64()).fold(0.0, f64::max);
    let speed =
        series.frames.iter().flat_map(|f| f.state.iter()).map(|v| v[2].abs().as_f64() + g.sound_speed(v).as_f64()).fold(0.0, f64::max);
    (speed * max_dt / dx).ceil() as usize + 1
}

/// Entering and leaving families of a region.
pub fn classify_waves<T: Real>(
    series: &TimeSeries<T>,
    supports: &[WaveSupport; 3],
    region: &InteractionRegion,
    g: &GasParameters<T>,
) -> Classification {
    let mut out = Classification { entering: BTreeSet::new(), leaving: BTreeSet::new(), events: vec![], tracks: 0 };
    if region.is_empty() {
        return out;
    }
    let gate = gate(series, g);
    for support in supports.iter().filter(|s| s.present()) {
        // components indexed globally
        let mut comps: Vec<(usize, (usize, usize))> = Vec::new();
        let mut first_of_frame = Vec::with_capacity(support.intervals.len() + 1);
        for (f, ivs) in support.intervals.iter().enumerate() {
            first_of_frame.push(comps.len());
            comps.extend(ivs.iter().map(|iv| (f, *iv)));
        }
        first_of_frame.push(comps.len());
        let mut uf = UnionFind((0..comps.len()).collect());
        for f in 0..support.intervals.len().saturating_sub(1) {
            let (a0, a1, b1) = (first_of_frame[f], first_of_frame[f + 1], first_of_frame[f + 2]);
            let mut incoming: BTreeMap<usize, usize> = BTreeMap::new();
            for a in a0..a1 {
                let (s, e) = comps[a].1;
                let mut outgoing = 0;
                for b in a1..b1 {
                    let (s2, e2) = comps[b].1;
                    if s2 <= e + gate && s <= e2 + gate {
                        uf.union(a, b);
                        outgoing += 1;
                        *incoming.entry(b).or_default() += 1;
                    }
                }
                if outgoing > 1 {
                    out.events.push(TrackEvent { kind: support.kind, frame: f + 1, event: "split".into() });
                }
            }
            for (_, n) in incoming {
                if n > 1 {
                    out.events.push(TrackEvent { kind: support.kind, frame: f + 1, event: "merge".into() });
                }
            }
        }
        // first frame in M, collar frames, per track
        let mut tracks: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (id, &(f, (s, e))) in comps.iter().enumerate() {
            let root = uf.find(id);
            let entry = tracks.entry(root).or_default();
            if (s..=e).any(|i| region.in_region(f, i)) {
                entry.0.push(f);
            }
            if (s..=e).any(|i| region.in_collar(f, i)) {
                entry.1.push(f);
            }
        }
        out.tracks += tracks.len();
        for (in_m, in_a) in tracks.values() {
            let (Some(&first_m), Some(&last_m)) = (in_m.iter().min(), in_m.iter().max()) else {
                continue;
            };
            if in_a.iter().any(|&f| f < first_m) {
                out.entering.insert(support.kind);
            }
            if in_a.iter().any(|&f| f > last_m) {
                out.leaving.insert(support.kind);
            }
        }
    }
    out
}

/// `card Γ− − card Γ+`; a negative difference is a detection failure.
pub fn index(entering: &BTreeSet<WaveKind>, leaving: &BTreeSet<WaveKind>) -> Result<usize> {
    let raw = leaving.len() as i64 - entering.len() as i64;
    if raw < 0 {
        return Err(Error::DetectionFailure(format!("more entering ({}) than leaving ({}) waves", entering.len(), leaving.len())));
    }
    Ok(raw as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Elastic,
    NonElastic,
}

pub fn elasticity_verdict(index: usize) -> Verdict {
    if index == 0 {
        Verdict::Elastic
    } else {
        Verdict::NonElastic
    }
}

// ---------------------------------------------------------------------------
// Scenarios

/// A constant state carrying localized simple waves with disjoint supports.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct WaveScenario<T> {
    pub gas: GasParameters<T>,
    /// `(ρ, p, u)` of the background.
    pub background: [T; 3],
    pub waves: Vec<(WaveKind, Profile<T>)>,
    pub x0: T,
    pub x1: T,
    pub nx: usize,
    pub t_end: T,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default = "default_cfl")]
    pub cfl: T,
}

fn default_cfl<T: Real>() -> T {
    T::lit(solver::DEFAULT_CFL)
}

impl<T: Real> WaveScenario<T> {
    pub fn validate(&self) -> Result<()> {
        self.gas.validate()?;
        StateVector::from_array(self.background)?;
        for (i, (_, a)) in self.waves.iter().enumerate() {
            for (_, b) in &self.waves[i + 1..] {
                let (sa, sb) = (a.support(), b.support());
                if sa.0 < sb.1 && sb.0 < sa.1 {
                    return Err(Error::InvalidParameter("initial wave supports must be disjoint".into()));
                }
            }
        }
        Ok(())
    }

    pub fn initial_grid(&self) -> Result<Grid1D<T>> {
        self.validate()?;
        let base = StateVector::from_array(self.background)?;
        let waves: Vec<RiemannWave<T>> =
            self.waves.iter().map(|(k, p)| RiemannWave::new(*k, self.gas, base, *p, self.convention)).collect();
        let grid = Grid1D::from_fn(self.x0, self.x1, self.nx, |x| {
            for w in &waves {
                let (a, b) = w.profile.support();
                let r = w.profile.value(x);
                if x > a && x < b && !r.is_zero() {
                    return w.curve(r);
                }
            }
            self.background
        })?;
        Ok(grid)
    }

    pub fn run_options(&self) -> RunOptions<T> {
        RunOptions {
            cfl: self.cfl,
            cfl_limit: self.cfl.max(T::lit(solver::DEFAULT_CFL)),
            convention: self.convention,
            ..RunOptions::default()
        }
    }

    pub fn simulate(&self) -> Result<TimeSeries<T>> {
        solver::solve_euler(self.initial_grid()?, &self.gas, self.t_end, &self.run_options())
    }

    /// Propagation velocity of a family on the background.
    pub fn propagation_speed(&self, kind: WaveKind) -> T {
        let v = self.background;
        let c = self.gas.sound_speed(&v);
        self.convention.propagation_speed(v[2] + T::lit(kind.sound_sign()) * c)
    }

    /// The same physical setup written in another convention: switching
    /// reverses every propagation direction, so the layout is mirrored.
    pub fn with_convention(&self, convention: Convention) -> Self {
        let mut s = self.clone();
        if convention != self.convention {
            for (_, p) in &mut s.waves {
                p.center = s.x0 + s.x1 - p.center;
            }
            s.convention = convention;
        }
        s
    }

    /// Stretches space and time by `factor`.
    pub fn stretched(&self, factor: T) -> Self {
        let mut s = self.clone();
        s.x0 *= factor;
        s.x1 *= factor;
        s.t_end *= factor;
        for (_, p) in &mut s.waves {
            p.center *= factor;
            p.half_width *= factor;
        }
        s
    }
}

/// Two sound waves of opposite families meeting head on.
pub fn elastic_scenario(shape: solver::Shape) -> WaveScenario<f64> {
    let gas = GasParameters::with_kappa(1.4);
    let mut s = WaveScenario {
        gas,
        background: [1.0, 1.0, 0.0],
        waves: vec![],
        x0: 0.0,
        x1: 1.0,
        nx: 400,
        t_end: 0.3,
        convention: Convention::Negated,
        cfl: solver::DEFAULT_CFL,
    };
    let (a, b) = arrange(&s, WaveKind::SPlus, WaveKind::SMinus, 0.35, 0.65);
    s.waves = vec![(WaveKind::SPlus, Profile::new(shape, a, 0.06, 0.04)), (WaveKind::SMinus, Profile::new(shape, b, 0.06, 0.04))];
    s
}

/// A sound wave running into an entropy bump, `κ = 3`.
pub fn nonelastic_scenario(shape: solver::Shape) -> WaveScenario<f64> {
    let gas = GasParameters::with_kappa(3.0);
    let mut s = WaveScenario {
        gas,
        background: [1.0, 1.0, 0.0],
        waves: vec![],
        x0: 0.0,
        x1: 1.0,
        nx: 400,
        t_end: 0.34,
        convention: Convention::Negated,
        cfl: solver::DEFAULT_CFL,
    };
    // close together, so that the reflected train clears the entropy bump
    // before the transmitted wave reaches the boundary
    let (a, b) = arrange(&s, WaveKind::SPlus, WaveKind::E, 0.25, 0.45);
    s.waves = vec![(WaveKind::SPlus, Profile::new(shape, a, 0.06, 0.04)), (WaveKind::E, Profile::new(shape, b, 0.06, 0.5))];
    s
}

/// Centres for two waves so that they meet: the one moving right faster
/// starts on the left.
fn arrange<T: Real>(s: &WaveScenario<T>, first: WaveKind, second: WaveKind, left: f64, right: f64) -> (T, T) {
    let (left, right) = (T::lit(left), T::lit(right));
    if s.propagation_speed(first) > s.propagation_speed(second) {
        (left, right)
    } else {
        (right, left)
    }
}

/// Everything produced by classifying one run.
#[derive(Clone, Debug, Serialize)]
pub struct InteractionReport {
    pub t_min: f64,
    pub t_max: f64,
    pub entering: BTreeSet<WaveKind>,
    pub leaving: BTreeSet<WaveKind>,
    pub index: usize,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
    pub peaks: BTreeMap<WaveKind, f64>,
    pub events: Vec<TrackEvent>,
    pub region_cells: usize,
}

/// Supports, region, classification and index of a simulated run.
pub fn analyze_series<T: Real>(
    series: &TimeSeries<T>,
    g: &GasParameters<T>,
    thresholds: &Thresholds,
) -> Result<(InteractionReport, [WaveSupport; 3], InteractionRegion)> {
    let supports = wave_supports(series, g, thresholds)?;
    let region = interaction_region(series, &supports, thresholds);
    let class = classify_waves(series, &supports, &region, g);
    let idx = index(&class.entering, &class.leaving)?;
    let report = InteractionReport {
        t_min: region.t_min,
        t_max: region.t_max,
        entering: class.entering,
        leaving: class.leaving,
        index: idx,
        verdict: elasticity_verdict(idx),
        thresholds: *thresholds,
        peaks: supports.iter().map(|s| (s.kind, s.peak)).collect(),
        events: class.events,
        region_cells: region.cells.len(),
    };
    Ok((report, supports, region))
}

//! Monte Carlo simulation of the spatial model, used as an independent
//! oracle for every analytical quantity.
//!
//! Each realization drops Poisson numbers of base stations and users
//! uniformly on a square window, attaches users to their nearest BS and
//! draws unit-mean exponential fading per link. Estimates are averaged over
//! realizations; confidence half-widths come from the spread of the
//! per-realization means, so correlation between draws inside a realization
//! is accounted for.
//!
//! Every realization owns deterministic random streams derived from
//! `(seed, realization, purpose)`. Realizations run in parallel but results
//! are reduced in realization order, so output never depends on scheduling.

use crate::error::{Error, Result};
use crate::network::{min_transmit_power, NetworkParams, PowerMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Expected number of base stations per window when sizing automatically.
pub const DEFAULT_EXPECTED_BS: f64 = 2000.0;
/// Smallest admissible expected BS count per window.
pub const MIN_EXPECTED_BS: f64 = 500.0;

const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Boundary {
    /// Wrap-around distances; every location is statistically identical.
    Torus,
    /// Euclidean distances; only points at least `width` from the edge are
    /// measured.
    Guard { width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Side of the square window, metres.
    pub window_side: f64,
    pub seed: u64,
    pub n_realizations: usize,
    pub boundary: Boundary,
    /// Typical-user locations probed per realization. The first sits at the
    /// window centre, the rest are uniform over the measured region.
    pub probes_per_realization: usize,
    /// Cells whose users enter the cell-rate estimate, per realization
    /// (lowest indices first; zero means all).
    pub sampled_cells: usize,
    /// Users entering the user-rate estimate, per realization (lowest
    /// indices first; zero means all).
    pub sampled_users: usize,
}

impl SimConfig {
    /// Window sized for [`DEFAULT_EXPECTED_BS`] base stations at `lambda_b`.
    pub fn for_density(lambda_b: f64, seed: u64, n_realizations: usize) -> Self {
        Self {
            window_side: (DEFAULT_EXPECTED_BS / lambda_b).sqrt(),
            seed,
            n_realizations,
            boundary: Boundary::Torus,
            probes_per_realization: 50,
            sampled_cells: 100,
            sampled_users: 100,
        }
    }

    pub fn validate(&self, lambda_b: f64) -> Result<()> {
        if self.n_realizations < 1 {
            return Err(Error::InvalidParam {
                field: "n_realizations",
                value: self.n_realizations as f64,
                bound: "n_realizations >= 1",
            });
        }
        let expected = lambda_b * self.window_side * self.window_side;
        if !(expected >= MIN_EXPECTED_BS) {
            return Err(Error::InvalidParam {
                field: "window_side",
                value: self.window_side,
                bound: "expected BS count per window >= 500",
            });
        }
        if let Boundary::Guard { width } = self.boundary {
            if !(width >= 0.0 && 2.0 * width < self.window_side) {
                return Err(Error::InvalidParam {
                    field: "guard_width",
                    value: width,
                    bound: "0 <= guard_width < window_side / 2",
                });
            }
        }
        if self.probes_per_realization < 1 {
            return Err(Error::InvalidParam {
                field: "probes_per_realization",
                value: 0.0,
                bound: "probes_per_realization >= 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Geometry = 0,
    Probes = 1,
    Cells = 2,
}

fn substream(seed: u64, realization: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}

/// Bucket grid over base stations for nearest-neighbour queries.
#[derive(Debug, Clone)]
struct SpatialGrid {
    cells_per_side: usize,
    cell_size: f64,
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl SpatialGrid {
    fn build(points: &[[f64; 2]], side: f64) -> Self {
        let cells_per_side = ((points.len() as f64).sqrt().floor() as usize).max(1);
        let cell_size = side / cells_per_side as f64;
        let n_cells = cells_per_side * cells_per_side;
        let index_of = |p: &[f64; 2]| {
            let cx = ((p[0] / cell_size) as usize).min(cells_per_side - 1);
            let cy = ((p[1] / cell_size) as usize).min(cells_per_side - 1);
            cy * cells_per_side + cx
        };
        let mut counts = vec![0usize; n_cells + 1];
        for p in points {
            counts[index_of(p) + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut members = vec![0usize; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = index_of(p);
            members[fill[c]] = i;
            fill[c] += 1;
        }
        Self {
            cells_per_side,
            cell_size,
            starts,
            members,
        }
    }

    fn cell(&self, cx: usize, cy: usize) -> &[usize] {
        let c = cy * self.cells_per_side + cx;
        &self.members[self.starts[c]..self.starts[c + 1]]
    }
}

/// One realization of base stations and users on the window.
#[derive(Debug, Clone)]
pub struct PointPattern {
    pub window_side: f64,
    pub boundary: Boundary,
    /// BS density the transmit power is set for, per m².
    pub lambda_b: f64,
    pub seed: u64,
    pub realization: u64,
    pub bs_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    /// Serving (nearest) BS of each user.
    pub association: Vec<usize>,
    /// Users served by each BS.
    pub cell_counts: Vec<u32>,
    /// Times the geometry was redrawn because no BS landed in the window.
    pub resamples: u32,
    grid: SpatialGrid,
}

impl PointPattern {
    /// Build a pattern from explicit positions. Fading streams are keyed
    /// by `(seed, realization)`.
    pub fn from_positions(
        bs_positions: Vec<[f64; 2]>,
        user_positions: Vec<[f64; 2]>,
        window_side: f64,
        boundary: Boundary,
        lambda_b: f64,
        seed: u64,
        realization: u64,
    ) -> Result<Self> {
        if bs_positions.is_empty() {
            return Err(Error::InvalidParam {
                field: "bs_positions",
                value: 0.0,
                bound: "at least one base station",
            });
        }
        let grid = SpatialGrid::build(&bs_positions, window_side);
        let mut pattern = Self {
            window_side,
            boundary,
            lambda_b,
            seed,
            realization,
            bs_positions,
            user_positions,
            association: Vec::new(),
            cell_counts: Vec::new(),
            resamples: 0,
            grid,
        };
        pattern.association = pattern
            .user_positions
            .iter()
            .map(|u| pattern.nearest_bs(*u))
            .collect();
        let mut counts = vec![0u32; pattern.bs_positions.len()];
        for &b in &pattern.association {
            counts[b] += 1;
        }
        pattern.cell_counts = counts;
        Ok(pattern)
    }

    fn axis_gap(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.boundary {
            Boundary::Torus => d.min(self.window_side - d),
            Boundary::Guard { .. } => d,
        }
    }

    /// Squared distance under the boundary metric.
    pub fn distance_sq(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let dx = self.axis_gap(a[0], b[0]);
        let dy = self.axis_gap(a[1], b[1]);
        dx * dx + dy * dy
    }

    /// Whether a location is inside the measured region.
    pub fn is_interior(&self, p: [f64; 2]) -> bool {
        match self.boundary {
            Boundary::Torus => true,
            Boundary::Guard { width } => {
                let hi = self.window_side - width;
                p[0] >= width && p[0] <= hi && p[1] >= width && p[1] <= hi
            }
        }
    }

    /// Index of the closest BS; ties go to the lowest index.
    pub fn nearest_bs(&self, p: [f64; 2]) -> usize {
        let g = &self.grid;
        let n = g.cells_per_side as i64;
        let cx = ((p[0] / g.cell_size) as i64).clamp(0, n - 1);
        let cy = ((p[1] / g.cell_size) as i64).clamp(0, n - 1);
        let torus = matches!(self.boundary, Boundary::Torus);
        let mut best = (f64::INFINITY, usize::MAX);
        let visit = |ix: i64, iy: i64, best: &mut (f64, usize)| {
            let (ix, iy) = if torus {
                (ix.rem_euclid(n), iy.rem_euclid(n))
            } else if ix < 0 || iy < 0 || ix >= n || iy >= n {
                return;
            } else {
                (ix, iy)
            };
            for &j in g.cell(ix as usize, iy as usize) {
                let d = self.distance_sq(p, self.bs_positions[j]);
                if d < best.0 || (d == best.0 && j < best.1) {
                    *best = (d, j);
                }
            }
        };
        for r in 0..=n {
            if r == 0 {
                visit(cx, cy, &mut best);
            } else {
                for d in -r..=r {
                    visit(cx + d, cy - r, &mut best);
                    visit(cx + d, cy + r, &mut best);
                }
                for d in (-r + 1)..r {
                    visit(cx - r, cy + d, &mut best);
                    visit(cx + r, cy + d, &mut best);
                }
            }
            let reach = r as f64 * g.cell_size;
            if best.1 != usize::MAX && best.0 <= reach * reach {
                break;
            }
            if 2 * r + 1 >= n && (torus || r >= n) {
                break;
            }
        }
        best.1
    }

    /// Which base stations transmit. Under on-off control only BSs with at
    /// least one user do.
    pub fn active_mask(&self, mode: PowerMode) -> Vec<bool> {
        match mode {
            PowerMode::AllOn => vec![true; self.bs_positions.len()],
            PowerMode::OnOff => self.cell_counts.iter().map(|&c| c > 0).collect(),
        }
    }

    /// Indices of base stations inside the measured region.
    fn interior_bs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bs_positions.len()).filter(|&b| self.is_interior(self.bs_positions[b]))
    }

    fn interior_users(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.user_positions.len()).filter(|&u| self.is_interior(self.user_positions[u]))
    }

    /// Write the pattern as CSV with columns `x, y, kind, serving_index,
    /// active`. BS rows leave `serving_index` empty; user rows report
    /// whether their serving BS transmits.
    pub fn write_csv<W: Write>(&self, mode: PowerMode, out: W) -> std::io::Result<()> {
        let mask = self.active_mask(mode);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "kind", "serving_index", "active"])?;
        for (b, p) in self.bs_positions.iter().enumerate() {
            w.write_record([
                format!("{:.16e}", p[0]),
                format!("{:.16e}", p[1]),
                "bs".to_string(),
                String::new(),
                mask[b].to_string(),
            ])?;
        }
        for (u, p) in self.user_positions.iter().enumerate() {
            let s = self.association[u];
            w.write_record([
                format!("{:.16e}", p[0]),
                format!("{:.16e}", p[1]),
                "user".to_string(),
                s.to_string(),
                mask[s].to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Draw one realization.
pub fn sample_network(lambda_b: f64, lambda_u: f64, config: &SimConfig, realization: u64) -> Result<PointPattern> {
    config.validate(lambda_b)?;
    if !(lambda_u >= 0.0 && lambda_u.is_finite()) {
        return Err(Error::InvalidParam {
            field: "lambda_u",
            value: lambda_u,
            bound: "lambda_u >= 0",
        });
    }
    let side = config.window_side;
    let area = side * side;
    let mut rng = substream(config.seed, realization, Stream::Geometry);
    let bs_count = Poisson::new(lambda_b * area).expect("positive mean");
    let mut resamples = 0;
    let n_bs = loop {
        let n = bs_count.sample(&mut rng) as usize;
        if n > 0 {
            break n;
        }
        resamples += 1;
    };
    let n_users = if lambda_u > 0.0 {
        Poisson::new(lambda_u * area).expect("positive mean").sample(&mut rng) as usize
    } else {
        0
    };
    let mut uniform = |count: usize| -> Vec<[f64; 2]> {
        (0..count)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
            .collect()
    };
    let bs = uniform(n_bs);
    let users = uniform(n_users);
    let mut pattern =
        PointPattern::from_positions(bs, users, side, config.boundary, lambda_b, config.seed, realization)?;
    pattern.resamples = resamples;
    Ok(pattern)
}

/// Draw `config.n_realizations` independent realizations in parallel.
pub fn sample_patterns(lambda_b: f64, lambda_u: f64, config: &SimConfig) -> Result<Vec<PointPattern>> {
    config.validate(lambda_b)?;
    (0..config.n_realizations as u64)
        .into_par_iter()
        .map(|r| sample_network(lambda_b, lambda_u, config, r))
        .collect()
}

/// `signal / (noise + Σ interference)`.
pub fn sinr<I: IntoIterator<Item = f64>>(signal: f64, interference: I, noise: f64) -> f64 {
    signal / (noise + interference.into_iter().sum::<f64>())
}

struct LinkBudget {
    /// `C · P_t`, watts·m^α.
    gain: f64,
    noise: f64,
    half_alpha: f64,
}

impl LinkBudget {
    fn new(pattern: &PointPattern, params: &NetworkParams) -> Self {
        Self {
            gain: params.path_loss_constant * min_transmit_power(pattern.lambda_b, params),
            noise: params.noise_power,
            half_alpha: params.alpha / 2.0,
        }
    }

    /// SINR at `p` served by `serving` with fresh fading on every link.
    /// Interference comes from every other BS with `active` set.
    fn sinr_at<R: Rng>(
        &self,
        pattern: &PointPattern,
        p: [f64; 2],
        serving: usize,
        active: &[bool],
        rng: &mut R,
    ) -> f64 {
        let received = |b: usize, rng: &mut R| {
            let h: f64 = Exp1.sample(rng);
            h * self.gain * pattern.distance_sq(p, pattern.bs_positions[b]).powf(-self.half_alpha)
        };
        let signal = received(serving, rng);
        let mut interference = 0.0;
        for (b, &on) in active.iter().enumerate() {
            if on && b != serving {
                interference += received(b, rng);
            }
        }
        sinr(signal, [interference], self.noise)
    }
}

/// An empirical mean with its 95% confidence half-width (normal
/// approximation over per-realization means).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub mean: f64,
    pub half_width_95: f64,
    /// Independent samples (realizations) behind the interval.
    pub n_samples: usize,
    /// Individual draws pooled into those samples.
    pub n_draws: usize,
}

impl EstimatorOutput {
    pub fn from_samples(samples: &[f64], n_draws: usize) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                half_width_95: 0.0,
                n_samples: 0,
                n_draws,
            };
        }
        let mean = neumaier_sum(samples.iter().copied()) / n as f64;
        let half_width_95 = if n > 1 {
            let var = neumaier_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
            Z_95 * (var / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            mean,
            half_width_95,
            n_samples: n,
            n_draws,
        }
    }

    /// Whether `value` lies within the interval widened by `slack`.
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        (value - self.mean).abs() <= self.half_width_95 + slack
    }
}

/// Compensated summation; keeps reductions independent of grouping to far
/// below the statistical noise.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// SINR of typical users placed at probe locations, per realization.
///
/// A probe joins its nearest BS, which is counted as transmitting even
/// under on-off control.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalUserDraws {
    pub per_realization: Vec<Vec<f64>>,
}

impl TypicalUserDraws {
    pub fn collect(patterns: &[PointPattern], mode: PowerMode, params: &NetworkParams, config: &SimConfig) -> Self {
        let per_realization = patterns
            .par_iter()
            .map(|pattern| {
                let mut rng = substream(pattern.seed, pattern.realization, Stream::Probes);
                let budget = LinkBudget::new(pattern, params);
                let mut active = pattern.active_mask(mode);
                let side = pattern.window_side;
                let (lo, span) = match pattern.boundary {
                    Boundary::Torus => (0.0, side),
                    Boundary::Guard { width } => (width, side - 2.0 * width),
                };
                (0..config.probes_per_realization)
                    .map(|i| {
                        let p = if i == 0 {
                            [side / 2.0, side / 2.0]
                        } else {
                            [lo + rng.random::<f64>() * span, lo + rng.random::<f64>() * span]
                        };
                        let serving = pattern.nearest_bs(p);
                        let was_on = active[serving];
                        active[serving] = true;
                        let s = budget.sinr_at(pattern, p, serving, &active, &mut rng);
                        active[serving] = was_on;
                        s
                    })
                    .collect()
            })
            .collect();
        Self { per_realization }
    }

    fn estimate<F: Fn(f64) -> f64>(&self, f: F) -> EstimatorOutput {
        let draws = self.per_realization.iter().map(Vec::len).sum();
        let samples: Vec<f64> = self
            .per_realization
            .iter()
            .filter(|d| !d.is_empty())
            .map(|d| neumaier_sum(d.iter().map(|&s| f(s))) / d.len() as f64)
            .collect();
        EstimatorOutput::from_samples(&samples, draws)
    }

    /// Mean of `log₂(1 + SINR)`.
    pub fn rate(&self) -> EstimatorOutput {
        self.estimate(|s| s.ln_1p() / std::f64::consts::LN_2)
    }

    /// Fraction of draws with SINR below `threshold`.
    pub fn outage(&self, threshold: f64) -> EstimatorOutput {
        self.estimate(|s| if s < threshold { 1.0 } else { 0.0 })
    }

    pub fn coverage(&self, threshold: f64) -> EstimatorOutput {
        self.estimate(|s| if s >= threshold { 1.0 } else { 0.0 })
    }
}

/// Empirical `E[log₂(1 + SINR)]` of a typical user.
pub fn estimate_sinr_rate(
    patterns: &[PointPattern],
    mode: PowerMode,
    params: &NetworkParams,
    config: &SimConfig,
) -> EstimatorOutput {
    TypicalUserDraws::collect(patterns, mode, params, config).rate()
}

/// Empirical `P[SINR < T]` of a typical user.
pub fn estimate_outage(
    patterns: &[PointPattern],
    mode: PowerMode,
    threshold: f64,
    params: &NetworkParams,
    config: &SimConfig,
) -> EstimatorOutput {
    TypicalUserDraws::collect(patterns, mode, params, config).outage(threshold)
}

/// Fraction of base stations with no users.
pub fn estimate_void_fraction(patterns: &[PointPattern]) -> EstimatorOutput {
    let samples: Vec<f64> = patterns
        .iter()
        .filter_map(|p| {
            let (mut total, mut void) = (0usize, 0usize);
            for b in p.interior_bs() {
                total += 1;
                if p.cell_counts[b] == 0 {
                    void += 1;
                }
            }
            (total > 0).then(|| void as f64 / total as f64)
        })
        .collect();
    let draws = patterns.iter().map(|p| p.interior_bs().count()).sum();
    EstimatorOutput::from_samples(&samples, draws)
}

/// Relative frequency of `n` users per cell for `n = 0..=n_max`, pooled
/// over all measured cells.
pub fn cell_count_frequencies(patterns: &[PointPattern], n_max: usize) -> Vec<f64> {
    let mut hist = vec![0usize; n_max + 1];
    let mut total = 0usize;
    for p in patterns {
        for b in p.interior_bs() {
            total += 1;
            let c = p.cell_counts[b] as usize;
            if c <= n_max {
                hist[c] += 1;
            }
        }
    }
    hist.iter().map(|&h| h as f64 / total.max(1) as f64).collect()
}

/// Fraction of typical users whose received power from the nearest BS
/// (interference excluded) is at most `P_r,min`.
///
/// With `fading` off this is the long-term power, whose shortfall is
/// exactly `δ^{1/Γ(1+2/α)} ≤ δ` under [`min_transmit_power`]. With `fading`
/// on, each probe also draws a unit-mean exponential gain, which pushes the
/// shortfall above `δ`.
pub fn estimate_received_power_shortfall(
    patterns: &[PointPattern],
    params: &NetworkParams,
    config: &SimConfig,
    fading: bool,
) -> EstimatorOutput {
    let per: Vec<(f64, usize)> = patterns
        .par_iter()
        .map(|pattern| {
            let mut rng = substream(pattern.seed, pattern.realization, Stream::Probes);
            let budget = LinkBudget::new(pattern, params);
            let side = pattern.window_side;
            let (lo, span) = match pattern.boundary {
                Boundary::Torus => (0.0, side),
                Boundary::Guard { width } => (width, side - 2.0 * width),
            };
            let n = config.probes_per_realization;
            let short = (0..n)
                .filter(|_| {
                    let p = [lo + rng.random::<f64>() * span, lo + rng.random::<f64>() * span];
                    let b = pattern.nearest_bs(p);
                    let h: f64 = if fading { Exp1.sample(&mut rng) } else { 1.0 };
                    let power = h * budget.gain * pattern.distance_sq(p, pattern.bs_positions[b]).powf(-budget.half_alpha);
                    power <= params.p_r_min
                })
                .count();
            (short as f64 / n as f64, n)
        })
        .collect();
    let samples: Vec<f64> = per.iter().map(|s| s.0).collect();
    EstimatorOutput::from_samples(&samples, per.iter().map(|s| s.1).sum())
}

/// Average cell rate and average user rate.
///
/// Cell rate: for each sampled cell, the mean `log₂(1 + SINR)` of its users
/// (zero for a void cell), averaged over cells. User rate: for each sampled
/// user, `log₂(1 + SINR)` divided by the number of users sharing its cell,
/// averaged over users; sampling users rather than cells realises random
/// incidence. Users in the same realization share one fading draw per link.
pub fn estimate_cell_and_user_rate(
    patterns: &[PointPattern],
    mode: PowerMode,
    params: &NetworkParams,
    config: &SimConfig,
) -> (EstimatorOutput, EstimatorOutput) {
    let per: Vec<(Option<f64>, Option<f64>, usize, usize)> = patterns
        .par_iter()
        .map(|pattern| {
            let mut rng = substream(pattern.seed, pattern.realization, Stream::Cells);
            let budget = LinkBudget::new(pattern, params);
            let active = pattern.active_mask(mode);
            let take = |n: usize| if n == 0 { usize::MAX } else { n };
            let cells: Vec<usize> = pattern.interior_bs().take(take(config.sampled_cells)).collect();
            let users: Vec<usize> = pattern.interior_users().take(take(config.sampled_users)).collect();

            let mut members: Vec<Vec<usize>> = vec![Vec::new(); pattern.bs_positions.len()];
            for (u, &b) in pattern.association.iter().enumerate() {
                members[b].push(u);
            }
            let mut needed = vec![false; pattern.user_positions.len()];
            for &c in &cells {
                for &u in &members[c] {
                    needed[u] = true;
                }
            }
            for &u in &users {
                needed[u] = true;
            }
            let mut rates = vec![f64::NAN; pattern.user_positions.len()];
            for (u, rate) in rates.iter_mut().enumerate() {
                if needed[u] {
                    let s = budget.sinr_at(pattern, pattern.user_positions[u], pattern.association[u], &active, &mut rng);
                    *rate = s.ln_1p() / std::f64::consts::LN_2;
                }
            }

            let cell_sample = (!cells.is_empty()).then(|| {
                neumaier_sum(cells.iter().map(|&c| {
                    let m = &members[c];
                    if m.is_empty() {
                        0.0
                    } else {
                        neumaier_sum(m.iter().map(|&u| rates[u])) / m.len() as f64
                    }
                })) / cells.len() as f64
            });
            let user_sample = (!users.is_empty()).then(|| {
                neumaier_sum(users.iter().map(|&u| {
                    rates[u] / pattern.cell_counts[pattern.association[u]] as f64
                })) / users.len() as f64
            });
            (cell_sample, user_sample, cells.len(), users.len())
        })
        .collect();

    let cell_samples: Vec<f64> = per.iter().filter_map(|p| p.0).collect();
    let user_samples: Vec<f64> = per.iter().filter_map(|p| p.1).collect();
    (
        EstimatorOutput::from_samples(&cell_samples, per.iter().map(|p| p.2).sum()),
        EstimatorOutput::from_samples(&user_samples, per.iter().map(|p| p.3).sum()),
    )
}

//! Spectral flow of a matrix family over a time grid: branch tracking,
//! reality classification, exceptional-point search and Jordan structure.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrixkit::{eig_full, numerical_rank_against, spectral_order, CMatrix, MatrixError};
use crate::models::{MatrixFamily, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid time range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("a sweep needs at least 2 grid points, got {0}")]
    TooFewSteps(usize),
    #[error("tolerance must be positive and finite")]
    InvalidTolerance,
    #[error("{lambda} is not an eigenvalue (smallest singular value of q − λI is {sigma_min:.3e})")]
    NotInSpectrum { lambda: Complex64, sigma_min: f64 },
    #[error("eigensolver failed at every grid point")]
    NoData,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// When a spectrum is recomputed in extended precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Refine {
    /// Whenever the double-precision error estimate exceeds the tolerance.
    Auto,
    Never,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub tol: f64,
    pub refine: Refine,
    /// Mantissa bits of the extended-precision solve; derived from `tol` and
    /// the dimension when absent.
    pub bits: Option<usize>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            tol: crate::matrixkit::DEFAULT_TOL,
            refine: Refine::Auto,
            bits: None,
        }
    }
}

/// Precision that resolves an `n`-fold confluence to `tol`: a perturbation
/// `ε` splits it by `ε^(1/n)`.
pub fn precise_bits(n: usize, tol: f64) -> usize {
    n * (1.0 / tol).log2().ceil().max(1.0) as usize + 64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub t: f64,
    /// Ascending by real part, ties by imaginary part.
    pub values: Vec<Complex64>,
    pub refined: bool,
    /// First-order error estimate of the double-precision solve (infinite
    /// for a defective one).
    pub error_estimate: f64,
}

impl SpectrumPoint {
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Eigenvalues of `family` at `t`, recomputed in extended precision when the
/// double-precision result cannot be trusted to `opts.tol` relative to the
/// matrix scale and the family has an extended-precision realization.
pub fn spectrum_at<F: MatrixFamily + ?Sized>(family: &F, t: f64, opts: &SpectrumOptions) -> Result<SpectrumPoint, FlowError> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(FlowError::InvalidTolerance);
    }
    let q = family.matrix_at(t)?;
    let n = q.ensure_square()?;
    let scale = q.frobenius_norm().max(1.0);
    let mut estimate = f64::INFINITY;
    let mut values = None;
    if opts.refine != Refine::Always {
        let eig = eig_full(&q, opts.tol)?;
        if !eig.defective_flag {
            estimate = (0..n).map(|k| eig.error_bound(k)).fold(0.0, f64::max);
        }
        values = Some(eig.eigenvalues);
    }
    let wants_refine = match opts.refine {
        Refine::Never => false,
        Refine::Always => true,
        Refine::Auto => !(estimate <= opts.tol * scale),
    };
    if wants_refine {
        let bits = opts.bits.unwrap_or_else(|| precise_bits(n, opts.tol));
        if let Some(mp) = family.matrix_at_precise(t, bits) {
            let raw = mp?.eigenvalues()?;
            let order = spectral_order(&raw, opts.tol * scale);
            return Ok(SpectrumPoint {
                t,
                values: order.iter().map(|&k| raw[k]).collect(),
                refined: true,
                error_estimate: estimate,
            });
        }
    }
    match values {
        Some(values) => Ok(SpectrumPoint {
            t,
            values,
            refined: false,
            error_estimate: estimate,
        }),
        // no extended-precision realization: fall back to double precision
        None => spectrum_at(
            family,
            t,
            &SpectrumOptions {
                refine: Refine::Never,
                ..*opts
            },
        ),
    }
}

/// True iff `|Im λ| ≤ tol · max(scale, 1)`.
pub fn classify_reality(lambda: Complex64, scale: f64, tol: f64) -> bool {
    lambda.im.abs() <= tol * scale.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerKind {
    /// Several eigenvalues closer than the cluster threshold.
    Cluster,
    /// Branches moved further than the continuity bound allows.
    Discontinuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyMarker {
    pub t: f64,
    pub multiplicity: usize,
    pub kind: MarkerKind,
}

/// A grid point whose eigensolve failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub spectrum: SpectrumOptions,
    /// Threshold of [`classify_reality`].
    pub reality_tol: f64,
    /// Eigenvalues closer than this times `max(spectral radius, 1)` count as
    /// degenerate.
    pub cluster_tol: f64,
    /// Allowed multiple of the extrapolated branch displacement per step.
    pub continuity_factor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            spectrum: SpectrumOptions::default(),
            reality_tol: 1e-8,
            cluster_tol: 2e-2,
            continuity_factor: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    /// `curves[branch][step]`
    pub curves: Vec<Vec<Complex64>>,
    /// `reality[branch][step]`
    pub reality: Vec<Vec<bool>>,
    /// Grid points solved in extended precision.
    pub refined: Vec<bool>,
    pub degeneracy_markers: Vec<DegeneracyMarker>,
    pub gaps: Vec<GridFailure>,
}

impl FlowTrace {
    pub fn dim(&self) -> usize {
        self.curves.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// All branch values at step `s`.
    pub fn column(&self, s: usize) -> Vec<Complex64> {
        self.curves.iter().map(|c| c[s]).collect()
    }

    pub fn real_count(&self, s: usize) -> usize {
        self.reality.iter().filter(|r| r[s]).count()
    }
}

/// `steps` points from `lo` to `hi`, mirror-symmetric in floating point when
/// `lo = −hi`.
pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let m = (steps - 1) as f64;
    (0..steps)
        .map(|k| match k {
            0 => lo,
            _ if k == steps - 1 => hi,
            _ => ((steps - 1 - k) as f64 * lo + k as f64 * hi) / m,
        })
        .collect()
}

/// Spectra on the uniform grid with branches matched between consecutive
/// points by minimum total displacement.
pub fn sweep_spectrum<F: MatrixFamily + ?Sized>(
    family: &F,
    t_min: f64,
    t_max: f64,
    steps: usize,
    opts: &SweepOptions,
) -> Result<FlowTrace, FlowError> {
    if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
        return Err(FlowError::InvalidRange { lo: t_min, hi: t_max });
    }
    if steps < 2 {
        return Err(FlowError::TooFewSteps(steps));
    }
    let grid = uniform_grid(t_min, t_max, steps);
    let points: Vec<Result<SpectrumPoint, FlowError>> = grid.par_iter().map(|&t| spectrum_at(family, t, &opts.spectrum)).collect();

    let mut solved = Vec::new();
    let mut gaps = Vec::new();
    for (t, p) in grid.iter().zip(points) {
        match p {
            Ok(p) => solved.push(p),
            Err(e) => gaps.push(GridFailure {
                t: *t,
                message: e.to_string(),
            }),
        }
    }
    if solved.is_empty() {
        return Err(FlowError::NoData);
    }
    let n = solved[0].values.len();
    let mut curves: Vec<Vec<Complex64>> = (0..n).map(|b| vec![solved[0].values[b]]).collect();
    let mut markers = Vec::new();
    for (s, p) in solved.iter().enumerate() {
        let scale = p.spectral_radius().max(1.0);
        if let Some(m) = largest_cluster(&p.values, opts.cluster_tol * scale) {
            markers.push(DegeneracyMarker {
                t: p.t,
                multiplicity: m,
                kind: MarkerKind::Cluster,
            });
        }
        if s == 0 {
            continue;
        }
        let cost: Vec<Vec<f64>> = curves
            .iter()
            .map(|c| {
                let prev = *c.last().unwrap();
                p.values.iter().map(|&z| (z - prev).norm()).collect()
            })
            .collect();
        let assignment = hungarian(&cost);
        let dt = p.t - solved[s - 1].t;
        let mut broken = 0;
        for (b, &j) in assignment.iter().enumerate() {
            let c = &curves[b];
            let jump = (p.values[j] - c[s - 1]).norm();
            if s >= 2 {
                let dt_prev = solved[s - 1].t - solved[s - 2].t;
                let velocity = (c[s - 1] - c[s - 2]).norm() / dt_prev;
                let floor = opts.spectrum.tol.sqrt() * scale;
                if jump > opts.continuity_factor * velocity * dt + floor {
                    broken += 1;
                }
            }
            curves[b].push(p.values[j]);
        }
        if broken > 0 {
            markers.push(DegeneracyMarker {
                t: p.t,
                multiplicity: broken,
                kind: MarkerKind::Discontinuity,
            });
        }
    }
    let reality = curves
        .iter()
        .map(|c| {
            c.iter()
                .zip(&solved)
                .map(|(&z, p)| classify_reality(z, p.spectral_radius(), opts.reality_tol))
                .collect()
        })
        .collect();
    Ok(FlowTrace {
        times: solved.iter().map(|p| p.t).collect(),
        curves,
        reality,
        refined: solved.iter().map(|p| p.refined).collect(),
        degeneracy_markers: markers,
        gaps,
    })
}

/// Size of the largest group of values chained by distances `≤ radius`, if
/// it exceeds one.
fn largest_cluster(values: &[Complex64], radius: f64) -> Option<usize> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut size = vec![0; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        size[r] += 1;
    }
    size.into_iter().max().filter(|&m| m > 1)
}

/// Minimum-cost perfect matching of a square cost matrix; entry `i` of the
/// result is the column assigned to row `i`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // potentials and matching over 1-based columns, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            out[row_of[j] - 1] = j - 1;
        }
    }
    out
}

/// Largest displacement under the best matching of two equally long lists.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets of different size");
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    // a bottleneck matching would be tighter; the sum-optimal one is within
    // tolerance for the well-separated spectra compared here
    hungarian(&cost).iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max)
}

/// Smallest distance between two eigenvalues.
pub fn min_pairwise_gap(values: &[Complex64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            g = g.min((values[i] - values[j]).norm());
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpOptions {
    /// Width of the final bracket.
    pub tol: f64,
    /// Points of the initial scan.
    pub coarse_points: usize,
    pub bits: Option<usize>,
}

impl Default for EpOptions {
    fn default() -> Self {
        EpOptions {
            tol: 1e-6,
            coarse_points: 21,
            bits: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpLocation {
    pub t: f64,
    /// Minimum pairwise eigenvalue gap at `t`.
    pub gap: f64,
    /// `max(‖Q(t)‖_F / √N, 1)`
    pub scale: f64,
}

/// Minimizer of the minimum pairwise eigenvalue gap over `[t_lo, t_hi]`: a
/// coarse scan, then golden-section refinement of the best bracket down to
/// width `opts.tol`. `None` when the gap there still exceeds `√tol · scale`.
pub fn locate_ep<F: MatrixFamily + ?Sized>(family: &F, t_lo: f64, t_hi: f64, opts: &EpOptions) -> Result<Option<EpLocation>, FlowError> {
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(FlowError::InvalidRange { lo: t_lo, hi: t_hi });
    }
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(FlowError::InvalidTolerance);
    }
    let n = family.dim();
    let sopts = SpectrumOptions {
        tol: opts.tol,
        refine: Refine::Always,
        bits: Some(opts.bits.unwrap_or_else(|| precise_bits(n, opts.tol))),
    };
    let gap = |t: f64| -> Result<f64, FlowError> { Ok(min_pairwise_gap(&spectrum_at(family, t, &sopts)?.values)) };

    let grid = uniform_grid(t_lo, t_hi, opts.coarse_points.max(3));
    let scan: Vec<f64> = grid.par_iter().map(|&t| gap(t)).collect::<Result<_, _>>()?;
    let best = (0..scan.len()).min_by(|&a, &b| scan[a].total_cmp(&scan[b])).unwrap();
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    while b - a > opts.tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gap(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gap(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let g = gap(t)?;
    let q = family.matrix_at(t)?;
    let scale = (q.frobenius_norm() / (n as f64).sqrt()).max(1.0);
    if g > opts.tol.sqrt() * scale {
        return Ok(None);
    }
    Ok(Some(EpLocation { t, gap: g, scale }))
}

/// Default relative rank tolerance of [`jordan_profile`].
pub const JORDAN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanProfile {
    pub eigenvalue: Complex64,
    /// Descending.
    pub block_sizes: Vec<usize>,
    /// `rank((q − λI)^k)` for `k = 0..=N`.
    pub rank_sequence: Vec<usize>,
}

impl JordanProfile {
    pub fn algebraic_multiplicity(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn geometric_multiplicity(&self) -> usize {
        self.block_sizes.len()
    }
}

/// Jordan block sizes of `lambda` from the rank staircase of `(q − λI)^k`.
///
/// The k-th power is ranked against `‖q − λI‖₂^k` so that a power which has
/// numerically vanished counts as rank zero.
pub fn jordan_profile(q: &CMatrix, lambda: Complex64, tol: f64) -> Result<JordanProfile, FlowError> {
    let n = q.ensure_square()?;
    q.ensure_finite()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(FlowError::InvalidTolerance);
    }
    let shifted = q - &CMatrix::identity(n).scale(lambda);
    let norm = shifted.spectral_norm();
    let mut ranks = vec![n];
    if norm <= tol * q.spectral_norm().max(f64::MIN_POSITIVE) {
        // q = λI
        ranks.extend(std::iter::repeat(0).take(n));
    } else {
        let mut power = CMatrix::identity(n);
        for k in 1..=n {
            power = &power * &shifted;
            ranks.push(numerical_rank_against(&power, tol, norm.powi(k as i32))?);
        }
    }
    if ranks[1] == n {
        let sigma_min = shifted.singular_values().last().copied().unwrap_or(0.0);
        return Err(FlowError::NotInSpectrum { lambda, sigma_min });
    }
    // blocks of size ≥ k number ranks[k−1] − ranks[k]
    let at_least: Vec<usize> = (1..=n).map(|k| ranks[k - 1].saturating_sub(ranks[k])).collect();
    let mut block_sizes = Vec::new();
    for k in (1..=n).rev() {
        let exactly = at_least[k - 1].saturating_sub(if k < n { at_least[k] } else { 0 });
        block_sizes.extend(std::iter::repeat(k).take(exactly));
    }
    Ok(JordanProfile {
        eigenvalue: lambda,
        block_sizes,
        rank_sequence: ranks,
    })
}

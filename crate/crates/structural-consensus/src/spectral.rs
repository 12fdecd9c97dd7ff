//! Eigenvalue analysis of realized Laplacians and constructive gain
//! selection.
//!
//! Structural consensus reduces to a spectral question: the closed-loop
//! iteration matrix `F` must keep every non-structural eigenvalue strictly
//! inside the unit circle for all admissible weight realizations. For first
//! order the step size ε has a closed-form certified bound; for second order
//! the gain pair (γ₁, γ₂) is found constructively from a sampled sector box
//! around the nonzero Laplacian spectrum.
//!
//! The structural unit eigenvalues of `F` (one first order, two second
//! order) are removed by exact block deflation rather than magnitude
//! sorting: the leader's rows of `F` only reference leader columns, so with
//! the leader ordered first `F` is block lower-triangular and the follower
//! block carries precisely the non-structural spectrum.

use crate::linalg::{self, LinalgError, Matrix};
use crate::topology::{laplacian, sample_weights, Laplacian, Topology};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

pub use crate::linalg::eigenvalues;

/// Default Monte-Carlo sample count for spectral estimation.
pub const DEFAULT_BOX_SAMPLES: usize = 400;
/// Default relative safety margin applied to the sampled box.
pub const DEFAULT_BOX_MARGIN: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("eigenvalue computation failed: {0}")]
    EigsFailed(#[from] LinalgError),
    #[error("no rho root above 1 exists for c = {c}")]
    NoRootAboveOne { c: f64 },
    #[error("kappa interval is empty: low {low} >= high {high}")]
    EmptyInterval { low: f64, high: f64 },
    #[error("no feasible varrho yields verified gains for this spectrum")]
    Infeasible,
}

/// Dynamical order of a system or iteration matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// Consensus gains for either order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gains {
    First { epsilon: f64 },
    Second { gamma1: f64, gamma2: f64 },
}

/// Sector box around the nonzero Laplacian eigenvalues: every sampled μ has
/// `|arg μ| ≤ theta_max` and `r_min ≤ |μ| ≤ r_max`, with a safety margin
/// already applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBox {
    pub theta_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl SpectralBox {
    pub fn new(theta_max: f64, r_min: f64, r_max: f64) -> Self {
        assert!(theta_max > 0.0 && theta_max < FRAC_PI_2, "theta_max in (0, pi/2)");
        assert!(r_min > 0.0 && r_min <= r_max, "0 < r_min <= r_max");
        SpectralBox { theta_max, r_min, r_max }
    }
}

/// Certified second-order gain pair together with the constants that
/// produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondOrderGains {
    pub gamma1: f64,
    pub gamma2: f64,
    pub rho: f64,
    pub kappa: f64,
    pub varrho: f64,
    /// The sampled box the gains were certified against.
    pub spectrum_box: SpectralBox,
}

impl SecondOrderGains {
    pub fn gains(&self) -> Gains {
        Gains::Second { gamma1: self.gamma1, gamma2: self.gamma2 }
    }
}

/// Closed-loop matrix of one step: `I − εL` (first order) or the block form
/// `[[I, I], [−γ₁L, I − γ₂L]]` acting on the stacked state (p; v).
#[derive(Clone, Debug, PartialEq)]
pub struct IterationMatrix {
    entries: Matrix,
    order: Order,
    leader: usize,
}

impl IterationMatrix {
    /// Wraps an explicit matrix. Intended for degenerate cases in tests;
    /// simulation code goes through [`iteration_matrix`].
    pub fn new(entries: Matrix, order: Order, leader: usize) -> Self {
        assert!(entries.is_square());
        let n = match order {
            Order::First => entries.rows(),
            Order::Second => {
                assert!(entries.rows() % 2 == 0, "second-order matrix must be 2N x 2N");
                entries.rows() / 2
            }
        };
        assert!(leader < n, "leader index out of range");
        IterationMatrix { entries, order, leader }
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    /// Number of agents (not the matrix dimension).
    pub fn n_agents(&self) -> usize {
        match self.order {
            Order::First => self.entries.rows(),
            Order::Second => self.entries.rows() / 2,
        }
    }
}

/// Strict upper bound for the first-order step size:
/// `1 / max_i (Σ_j a_ij[0] + δ · |N_i|)`. Any ε strictly below it keeps
/// every admissible `I − εL[k]` nonnegative with rows summing to 1, which
/// certifies structural consensus.
pub fn epsilon_bound(topology: &Topology) -> f64 {
    let worst = (0..topology.n_agents())
        .map(|i| {
            let base: f64 =
                topology.in_edges(i).iter().map(|&e| topology.edges()[e].weight).sum();
            let count = topology.in_edges(i).len() as f64;
            base + topology.delta() * count
        })
        .fold(0.0, f64::max);
    1.0 / worst
}

/// True iff every Gershgorin disc of `εL` stays strictly inside the unit
/// circle reached from the origin: `|ε l_ii| < 1` for all rows. The leader's
/// zero row passes trivially.
pub fn gershgorin_check(lap: &Laplacian, epsilon: f64) -> bool {
    let m = lap.entries();
    (0..lap.n()).all(|i| (epsilon * m[(i, i)]).abs() < 1.0)
}

/// All grounded-Laplacian eigenvalues over `n_samples` independent weight
/// realizations, flattened in sample order (`N − 1` values per sample).
/// Deterministic in the seed.
pub fn sample_spectrum(
    topology: &Topology,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Complex64>, SpectralError> {
    let schedule = sample_weights(topology, n_samples, seed);
    let mut eigs = Vec::with_capacity(n_samples * (topology.n_agents() - 1));
    for k in 0..n_samples {
        let grounded = laplacian(topology, schedule.step(k)).grounded();
        eigs.extend(linalg::eigenvalues(&grounded)?);
    }
    Ok(eigs)
}

/// Smallest box containing `eigs`, inflated by `margin`: moduli shrink/grow
/// by the relative margin and the sector angle gains the same fraction of
/// its headroom to π/2 (so purely real spectra still get a positive angle).
pub fn box_from_spectrum(eigs: &[Complex64], margin: f64) -> SpectralBox {
    assert!(!eigs.is_empty(), "cannot box an empty spectrum");
    assert!(margin > 0.0 && margin < 1.0, "margin in (0, 1)");
    let mut theta: f64 = 0.0;
    let mut r_min = f64::INFINITY;
    let mut r_max: f64 = 0.0;
    for mu in eigs {
        theta = theta.max(mu.im.atan2(mu.re).abs());
        r_min = r_min.min(mu.norm());
        r_max = r_max.max(mu.norm());
    }
    SpectralBox::new(
        theta + margin * (FRAC_PI_2 - theta),
        r_min * (1.0 - margin),
        r_max * (1.0 + margin),
    )
}

/// Monte-Carlo sector box for the nonzero Laplacian spectrum with the
/// default 10% safety margin.
pub fn estimate_spectral_box(
    topology: &Topology,
    n_samples: usize,
    seed: u64,
) -> Result<SpectralBox, SpectralError> {
    estimate_spectral_box_with_margin(topology, n_samples, seed, DEFAULT_BOX_MARGIN)
}

/// Monte-Carlo sector box with an explicit relative margin.
pub fn estimate_spectral_box_with_margin(
    topology: &Topology,
    n_samples: usize,
    seed: u64,
    margin: f64,
) -> Result<SpectralBox, SpectralError> {
    Ok(box_from_spectrum(&sample_spectrum(topology, n_samples, seed)?, margin))
}

/// The unique root ρ > 1 of `(2ρ−1)/(ρ−1)² = ϱ·cot θ_max`, i.e. of
/// `cρ² − (2c+2)ρ + (c+1) = 0` with `c = ϱ·cot θ_max`. The closed form is
/// `ρ = (c + 1 + √(c+1)) / c`.
pub fn solve_rho(varrho: f64, theta_max: f64) -> Result<f64, SpectralError> {
    let c = if varrho > 0.0 && varrho < 1.0 && theta_max > 0.0 && theta_max < FRAC_PI_2 {
        varrho / theta_max.tan()
    } else {
        f64::NAN
    };
    if !(c > 0.0) || !c.is_finite() {
        return Err(SpectralError::NoRootAboveOne { c });
    }
    let rho = (c + 1.0 + (c + 1.0).sqrt()) / c;
    debug_assert!(rho > 1.0);
    debug_assert!({
        let residual = (2.0 * rho - 1.0) / (rho - 1.0).powi(2) - c;
        residual.abs() <= 1e-10 * (1.0 + c.abs())
    });
    Ok(rho)
}

/// Admissible κ range for a damping target ϱ over a spectral box:
/// `low = (1−√(1−ϱ))/r_min`, `high = ((1+√(1−ϱ))/r_max)·cos θ_max`.
pub fn kappa_interval(varrho: f64, b: &SpectralBox) -> Result<(f64, f64), SpectralError> {
    assert!((0.0..=1.0).contains(&varrho), "varrho in [0, 1]");
    let root = (1.0 - varrho).sqrt();
    let low = (1.0 - root) / b.r_min;
    let high = (1.0 + root) / b.r_max * b.theta_max.cos();
    if low < high {
        Ok((low, high))
    } else {
        Err(SpectralError::EmptyInterval { low, high })
    }
}

/// Constructive second-order gain selection with default sampling.
///
/// Pipeline: sample the spectrum and box it; bisect for the supremum
/// feasible ϱ (the κ interval closes monotonically as ϱ grows), halve it
/// for margin; take κ as the interval midpoint; solve for ρ; then
/// `γ₁ = 2κ/(2ρ−1)`, `γ₂ = ργ₁`. The result is verified against every
/// sampled eigenvalue before being returned.
pub fn select_gamma(topology: &Topology, seed: u64) -> Result<SecondOrderGains, SpectralError> {
    select_gamma_with(topology, DEFAULT_BOX_SAMPLES, seed, DEFAULT_BOX_MARGIN)
}

/// [`select_gamma`] with explicit sample count and box margin.
pub fn select_gamma_with(
    topology: &Topology,
    n_samples: usize,
    seed: u64,
    margin: f64,
) -> Result<SecondOrderGains, SpectralError> {
    let spectrum = sample_spectrum(topology, n_samples, seed)?;
    let b = box_from_spectrum(&spectrum, margin);
    let feasible = |v: f64| kappa_interval(v, &b).is_ok() && solve_rho(v, b.theta_max).is_ok();
    let mut lo = 1e-9;
    if !feasible(lo) {
        return Err(SpectralError::Infeasible);
    }
    let mut hi = 1.0 - 1e-12;
    if feasible(hi) {
        lo = hi;
    } else {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let varrho = 0.5 * lo;
    let (k_lo, k_hi) = kappa_interval(varrho, &b)?;
    let kappa = 0.5 * (k_lo + k_hi);
    let rho = solve_rho(varrho, b.theta_max)?;
    let gamma1 = 2.0 * kappa / (2.0 * rho - 1.0);
    let gamma2 = rho * gamma1;
    if !gamma_conditions_hold(gamma1, gamma2, &spectrum) {
        return Err(SpectralError::Infeasible);
    }
    Ok(SecondOrderGains { gamma1, gamma2, rho, kappa, varrho, spectrum_box: b })
}

/// Which side of the stability boundary a sampled point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// The `−` branch of r*(θ), closer to the origin.
    Inner,
    /// The `+` branch, the outer rim of the region.
    Outer,
}

/// One sampled point of the eigenvalue-admissibility boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub point: Complex64,
    pub branch: Branch,
}

fn boundary_radii(gamma1: f64, rho: f64, theta: f64) -> Option<(f64, f64)> {
    let disc = theta.cos().powi(2)
        - (2.0 * rho - 1.0) * theta.sin().powi(2) / (rho - 1.0).powi(2);
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let denom = gamma1 * (2.0 * rho - 1.0);
    Some(((2.0 * theta.cos() - 2.0 * s) / denom, (2.0 * theta.cos() + 2.0 * s) / denom))
}

/// The angle at which the two boundary branches meet:
/// `tan² θ = (ρ−1)²/(2ρ−1)`.
pub fn boundary_meet_angle(rho: f64) -> f64 {
    ((rho - 1.0) / (2.0 * rho - 1.0).sqrt()).atan()
}

/// Samples the closed stability boundary for gains `γ₁`, `γ₂ = ργ₁`.
///
/// A Laplacian eigenvalue μ keeps both closed-loop roots of its quadratic
/// factor inside the unit circle iff μ lies strictly between the two
/// branches `r*(θ) = (2cosθ ± 2√(cos²θ − (2ρ−1)sin²θ/(ρ−1)²)) / (γ₁(2ρ−1))`
/// at θ = arg μ. Angles past the branch-meet angle admit no eigenvalue.
/// Returns both branches over `n_theta_samples` angles in `[0, θ_meet]`,
/// mirrored across the real axis so the point set traces a closed curve.
pub fn boundary_curve(gamma1: f64, rho: f64, n_theta_samples: usize) -> Vec<BoundaryPoint> {
    assert!(gamma1 > 0.0 && rho > 1.0);
    assert!(n_theta_samples >= 2);
    let theta_meet = boundary_meet_angle(rho);
    let mut points = Vec::new();
    for j in 0..n_theta_samples {
        let theta = theta_meet * j as f64 / (n_theta_samples - 1) as f64;
        // The discriminant is nonnegative on the whole grid by construction;
        // guard against rounding at the meet angle.
        let (r_minus, r_plus) = match boundary_radii(gamma1, rho, theta) {
            Some(radii) => radii,
            None => {
                let denom = gamma1 * (2.0 * rho - 1.0);
                (2.0 * theta.cos() / denom, 2.0 * theta.cos() / denom)
            }
        };
        for (r, branch) in [(r_minus, Branch::Inner), (r_plus, Branch::Outer)] {
            points.push(BoundaryPoint { point: Complex64::from_polar(r, theta), branch });
            if j > 0 {
                points.push(BoundaryPoint { point: Complex64::from_polar(r, -theta), branch });
            }
        }
    }
    points
}

/// Signed radial distance from μ to the nearer boundary branch at its own
/// angle: positive means strictly inside the admissible region, negative
/// means outside, `None` means μ's angle lies beyond the branch-meet angle
/// (outside for every modulus).
pub fn boundary_margin(gamma1: f64, rho: f64, mu: Complex64) -> Option<f64> {
    let theta = mu.im.atan2(mu.re).abs();
    let (r_minus, r_plus) = boundary_radii(gamma1, rho, theta)?;
    let r = mu.norm();
    Some((r - r_minus).min(r_plus - r))
}

fn gammacon1_holds(gamma1: f64, gamma2: f64, mu: Complex64) -> bool {
    let n2 = mu.norm_sqr();
    let lhs = (2.0 * gamma2 - gamma1) * n2 - 4.0 * mu.re
        + 4.0 * gamma1 * mu.im * mu.im / ((gamma2 - gamma1).powi(2) * n2);
    lhs < 0.0
}

/// True iff all three gain conditions hold strictly for every eigenvalue:
/// the boundary-quadratic inequality, the real-part inequality
/// `γ₁ − 2γ₂ > −4Re(μ)/|μ|²`, and the ordering `γ₂ > γ₁ > 0`. A zero
/// eigenvalue in the set (no spanning tree) fails the check.
pub fn gamma_conditions_hold(gamma1: f64, gamma2: f64, eigs: &[Complex64]) -> bool {
    if !(gamma2 > gamma1 && gamma1 > 0.0) {
        return false;
    }
    eigs.iter().all(|&mu| {
        let n2 = mu.norm_sqr();
        n2 > 1e-24
            && gamma1 - 2.0 * gamma2 > -4.0 * mu.re / n2
            && gammacon1_holds(gamma1, gamma2, mu)
    })
}

/// [`gamma_conditions_hold`] evaluated on the nonzero spectrum of one
/// Laplacian realization (its grounded block).
pub fn check_gamma_conditions(
    lap: &Laplacian,
    gamma1: f64,
    gamma2: f64,
) -> Result<bool, SpectralError> {
    let eigs = linalg::eigenvalues(&lap.grounded())?;
    Ok(gamma_conditions_hold(gamma1, gamma2, &eigs))
}

/// Builds the closed-loop iteration matrix for one weight realization.
pub fn iteration_matrix(lap: &Laplacian, gains: &Gains) -> IterationMatrix {
    let n = lap.n();
    let l = lap.entries();
    match *gains {
        Gains::First { epsilon } => {
            let mut f = Matrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    f[(i, j)] -= epsilon * l[(i, j)];
                }
            }
            IterationMatrix { entries: f, order: Order::First, leader: lap.leader() }
        }
        Gains::Second { gamma1, gamma2 } => {
            let mut f = Matrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                f[(i, i)] = 1.0;
                f[(i, n + i)] = 1.0;
                f[(n + i, n + i)] = 1.0;
                for j in 0..n {
                    f[(n + i, j)] -= gamma1 * l[(i, j)];
                    f[(n + i, n + j)] -= gamma2 * l[(i, j)];
                }
            }
            IterationMatrix { entries: f, order: Order::Second, leader: lap.leader() }
        }
    }
}

/// Spectral radius of the follower block of `F`: the largest |λ| after the
/// structural unit eigenvalues are deflated away exactly (leader rows of
/// `F` reference only leader columns, so dropping them splits the spectrum).
/// An empty follower block has excess 0 by convention. Structural consensus
/// at this realization requires a value < 1.
pub fn spectral_radius_excess(f: &IterationMatrix) -> Result<f64, SpectralError> {
    let n = f.n_agents();
    let keep: Vec<usize> = match f.order {
        Order::First => (0..n).filter(|&i| i != f.leader).collect(),
        Order::Second => (0..2 * n).filter(|&i| i != f.leader && i != n + f.leader).collect(),
    };
    if keep.is_empty() {
        return Ok(0.0);
    }
    let eigs = linalg::eigenvalues(&f.entries.submatrix(&keep))?;
    Ok(eigs.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

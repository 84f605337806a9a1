//! Energy and independence features of the superimposed pilot signals.
//!
//! Every participating node (the K LUs plus Eva when she transmits) has one
//! flat channel vector `g ~ CN(0, I_NT)` shared by all of its active
//! subcarriers, and sends the same unit-modulus random-phase symbol on all of
//! them at a given symbol time. Subcarrier `i` is observed over `K+2` symbol
//! times as a `(K+2) x N_T` matrix `Y_i = sum_a x_a g_a^T + W` with unit-power
//! noise.
//!
//! The energy feature counts signals per subcarrier by eigenvalue-ratio
//! detection on `Y_i Y_i^H`; the independence feature thresholds normalized
//! inner products between subcarrier observations. Both have idealized
//! counterparts that read the codewords directly.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::attack::AttackVector;
use crate::codebook::H2dfCodebook;
use crate::codeword::{AspVector, BinaryCodeword};
use crate::error::{Error, Result};
use crate::rng::stream;

pub type C64 = Complex<f64>;

/// Energy and occupancy observation `(b_I, m_I)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub b: BinaryCodeword,
    pub m: AspVector,
}

impl Aggregate {
    pub fn from_counts(m: AspVector) -> Self {
        Aggregate { b: m.support(), m }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `b[i] = 1` iff `m[i] >= 1`.
    pub fn is_consistent(&self) -> bool {
        self.b.len() == self.m.len() && self.m.support() == self.b
    }
}

/// `B x B` binary differential code matrix; row `i` is `d_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferentialMatrix {
    rows: Vec<BinaryCodeword>,
}

impl DifferentialMatrix {
    pub fn from_rows(rows: Vec<BinaryCodeword>) -> Self {
        DifferentialMatrix { rows }
    }

    pub fn row(&self, i: usize) -> &BinaryCodeword {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BinaryCodeword] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Entry-wise agreement with another matrix of the same shape.
    pub fn agreement(&self, other: &DifferentialMatrix) -> (usize, usize) {
        let total = self.rows.iter().map(|r| r.len()).sum();
        let diff: usize = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.hamming(b))
            .sum();
        (total - diff, total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Receive antennas.
    pub n_t: usize,
    /// Eigenvalue-ratio threshold; `> 1`.
    pub gamma: f64,
    /// Inner-product threshold; in `(0, 1)`.
    pub r: f64,
    /// False-alarm target the threshold was calibrated for.
    pub target_pf: f64,
}

impl DetectionConfig {
    pub fn new(n_t: usize, gamma: f64, r: f64, target_pf: f64) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::Config("N_T must be positive".into()));
        }
        if gamma.is_nan() || gamma <= 1.0 {
            return Err(Error::Config(format!("gamma = {gamma} must exceed 1")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Config(format!("r = {r} outside (0, 1)")));
        }
        Ok(DetectionConfig {
            n_t,
            gamma,
            r,
            target_pf,
        })
    }
}

/// Default inner-product threshold.
pub const DEFAULT_R: f64 = 0.5;

/// Inner-product threshold halfway between the cross-node floor
/// `1/sqrt((K+2) N_T)` and the weakest same-node overlap `1/(K+1)`, which
/// occurs between two subcarriers each carrying `K+1` equal-power signals
/// with one node in common. At `r = 0.5` overlaps such as `{a,b}` vs `{a,c}`
/// sit exactly on the threshold.
pub fn superposition_threshold(users: usize, n_t: usize) -> f64 {
    let coherent = 1.0 / (users as f64 + 1.0);
    let floor = 1.0 / (((users + 2) * n_t) as f64).sqrt();
    0.5 * (coherent + floor)
}

#[derive(Debug, Clone)]
pub struct ScenarioSignals {
    /// One `(K+2) x N_T` observation per pilot subcarrier.
    pub y: Vec<DMatrix<C64>>,
    /// Channel of each transmitting node (LUs in order, then Eva if active).
    pub node_channels: Vec<DVector<C64>>,
    pub snr_db: f64,
}

/// Codewords of the nodes transmitting in this slot: the LU columns, then
/// `c` when Eva is not silent. Validates one LU column per submatrix.
pub fn participants(
    cb: &H2dfCodebook,
    lu_columns: &[usize],
    attack: &AttackVector,
) -> Result<Vec<BinaryCodeword>> {
    if lu_columns.len() != cb.users() {
        return Err(Error::InvalidAssignment(format!(
            "{} LU columns for K = {}",
            lu_columns.len(),
            cb.users()
        )));
    }
    let mut seen = vec![false; cb.users()];
    for &j in lu_columns {
        let lu = (j < cb.size())
            .then(|| cb.submatrix_of(j))
            .flatten()
            .ok_or_else(|| Error::InvalidAssignment(format!("column {j} is in no submatrix")))?;
        if std::mem::replace(&mut seen[lu], true) {
            return Err(Error::InvalidAssignment(format!(
                "two LU columns share submatrix {lu}"
            )));
        }
    }
    if attack.c.len() != cb.len() {
        return Err(Error::LengthMismatch {
            left: attack.c.len(),
            right: cb.len(),
        });
    }
    let mut nodes: Vec<BinaryCodeword> = lu_columns.iter().map(|&j| cb.column(j).clone()).collect();
    if !attack.c.is_zero() {
        nodes.push(attack.c.clone());
    }
    Ok(nodes)
}

/// Occupancy counts and support read directly off the codewords.
pub fn ideal_aggregate(
    cb: &H2dfCodebook,
    lu_columns: &[usize],
    attack: &AttackVector,
) -> Result<Aggregate> {
    let nodes = participants(cb, lu_columns, attack)?;
    let mut m = AspVector::zeros(cb.len());
    for w in &nodes {
        m.add_word(w)?;
    }
    Ok(Aggregate::from_counts(m))
}

/// Row `i` is the OR of the codewords of every node active at `i`.
pub fn ideal_differential_matrix(
    cb: &H2dfCodebook,
    lu_columns: &[usize],
    attack: &AttackVector,
) -> Result<DifferentialMatrix> {
    let nodes = participants(cb, lu_columns, attack)?;
    let len = cb.len();
    let rows = (0..len)
        .map(|i| {
            let mut row = BinaryCodeword::zeros(len);
            for w in nodes.iter().filter(|w| w.get(i)) {
                row.or_assign(w);
            }
            row
        })
        .collect();
    Ok(DifferentialMatrix { rows })
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

fn noise_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Synthesizes the per-subcarrier observations for one slot.
pub fn simulate_reception<R: Rng + ?Sized>(
    cb: &H2dfCodebook,
    lu_columns: &[usize],
    attack: &AttackVector,
    n_t: usize,
    snr_db: f64,
    rng: &mut R,
) -> Result<ScenarioSignals> {
    let nodes = participants(cb, lu_columns, attack)?;
    let symbols = cb.users() + 2;
    let amp = 10f64.powf(snr_db / 20.0);
    let node_channels: Vec<DVector<C64>> = nodes
        .iter()
        .map(|_| DVector::from_fn(n_t, |_, _| complex_normal(rng)))
        .collect();
    let node_symbols: Vec<Vec<C64>> = nodes
        .iter()
        .map(|_| {
            (0..symbols)
                .map(|_| C64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect()
        })
        .collect();
    let y = (0..cb.len())
        .map(|i| {
            let mut yi = noise_matrix(symbols, n_t, rng);
            for (a, w) in nodes.iter().enumerate() {
                if w.get(i) {
                    let x = DVector::from_column_slice(&node_symbols[a]);
                    yi += &x * node_channels[a].transpose();
                }
            }
            yi
        })
        .collect();
    Ok(ScenarioSignals {
        y,
        node_channels,
        snr_db,
    })
}

/// Ascending eigenvalues of the normalized sample covariance `Y Y^H`
/// (unit noise power).
pub fn covariance_eigenvalues(y: &DMatrix<C64>) -> Vec<f64> {
    let r = y * y.adjoint();
    let mut ev: Vec<f64> = r.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

const DEGENERATE_RATIO: f64 = 1e-10;

/// Number of coexisting signals on one subcarrier: the count of eigenvalues
/// whose ratio to the smallest one exceeds `gamma`. When the smallest
/// eigenvalue vanishes (noiseless input) the numerical rank is returned.
pub fn ered_count_signals(y: &DMatrix<C64>, cfg: &DetectionConfig) -> Result<usize> {
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DegenerateMatrix);
    }
    let ev = covariance_eigenvalues(y);
    let (lo, hi) = match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::DegenerateMatrix),
    };
    if hi <= f64::MIN_POSITIVE {
        return Ok(0);
    }
    if lo <= DEGENERATE_RATIO * hi {
        return Ok(ev.iter().filter(|&&l| l > DEGENERATE_RATIO * hi).count());
    }
    Ok(ev.iter().filter(|&&l| l / lo > cfg.gamma).count())
}

/// `lambda_max / lambda_min` for one noise-only `(K+2) x N_T` observation.
pub fn null_ratio<R: Rng + ?Sized>(users: usize, n_t: usize, rng: &mut R) -> f64 {
    let ev = covariance_eigenvalues(&noise_matrix(users + 2, n_t, rng));
    ev[ev.len() - 1] / ev[0]
}

/// Empirical `(1 - target_pf)`-quantile of the noise-only eigenvalue ratio.
pub fn calibrate_threshold(
    n_t: usize,
    users: usize,
    target_pf: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 || !(target_pf > 0.0 && target_pf < 1.0) {
        return Err(Error::Config(format!(
            "calibration needs trials > 0 and 0 < pf < 1 (trials = {trials}, pf = {target_pf})"
        )));
    }
    let mut ratios: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| null_ratio(users, n_t, &mut stream(seed, t)))
        .collect();
    ratios.sort_by(|a, b| a.total_cmp(b));
    let idx = ((1.0 - target_pf) * trials as f64).ceil() as usize;
    Ok(ratios[idx.clamp(1, trials) - 1])
}

/// Runs detection on every subcarrier.
pub fn extract_aggregate(signals: &ScenarioSignals, cfg: &DetectionConfig) -> Result<Aggregate> {
    let counts = signals
        .y
        .iter()
        .map(|y| ered_count_signals(y, cfg).map(|c| c as u16))
        .collect::<Result<Vec<_>>>()?;
    Ok(Aggregate::from_counts(AspVector::from_counts(counts)))
}

/// `|<Y_i/||Y_i||, Y_j/||Y_j||>|` over all symbol times and antennas.
pub fn normalized_inner_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dotc(b).norm() / (na * nb)
}

/// Thresholded inner products; rows of unoccupied subcarriers are zero.
pub fn build_differential_matrix(
    signals: &ScenarioSignals,
    cfg: &DetectionConfig,
    occupied: &BinaryCodeword,
) -> DifferentialMatrix {
    let len = signals.y.len();
    let rows = (0..len)
        .map(|i| {
            if !occupied.get(i) {
                return BinaryCodeword::zeros(len);
            }
            BinaryCodeword::from_bits(
                (0..len).map(|j| normalized_inner_product(&signals.y[i], &signals.y[j]) > cfg.r),
            )
        })
        .collect();
    DifferentialMatrix { rows }
}

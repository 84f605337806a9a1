//! Monte Carlo IEP estimation and the CSV emitters behind the CLI.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::analysis::{self, Z95};
use crate::attack::{make_attack, AttackKind, Strategy};
use crate::codebook::{optimal_segments, CodeParams, H2dfCodebook};
use crate::codeword::BinaryCodeword;
use crate::decoder::{hd_decode, identify_attack, AttackMode, CaseTag, DecodeError};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::signal::{self, DetectionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturePath {
    Ideal,
    Signal,
}

impl FeaturePath {
    pub fn as_str(self) -> &'static str {
        match self {
            FeaturePath::Ideal => "ideal",
            FeaturePath::Signal => "signal",
        }
    }
}

impl std::str::FromStr for FeaturePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(FeaturePath::Ideal),
            "signal" => Ok(FeaturePath::Signal),
            other => Err(Error::Config(format!("unknown path {other:?}"))),
        }
    }
}

/// Simulation settings. Text form is one `key = value` per line, `#`
/// starting a comment; see [`SimConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub users: usize,
    pub dim: usize,
    pub q: u32,
    /// `None` picks the largest `N` with `2 K N^2 <= C`.
    pub segments: Option<usize>,
    pub attack: AttackKind,
    pub strategy: Strategy,
    /// Fixed victim; drawn uniformly per trial when `None`.
    pub victim: Option<usize>,
    pub trials: u64,
    pub seed: u64,
    pub path: FeaturePath,
    pub n_t: usize,
    pub snr_db: f64,
    pub target_pf: f64,
    /// Calibrated from noise-only draws when `None`.
    pub gamma: Option<f64>,
    /// Superposition-aware default when `None`.
    pub r: Option<f64>,
    pub calibration_trials: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            users: 3,
            dim: 2,
            q: 4,
            segments: None,
            attack: AttackKind::Sc,
            strategy: Strategy::None,
            victim: None,
            trials: 10_000,
            seed: 1,
            path: FeaturePath::Ideal,
            n_t: 128,
            snr_db: 20.0,
            target_pf: 1e-2,
            gamma: None,
            r: None,
            calibration_trials: 20_000,
            workers: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl SimConfig {
    pub const KEYS: [&'static str; 18] = [
        "K",
        "k",
        "q",
        "N",
        "attack",
        "strategy",
        "rho",
        "victim",
        "trials",
        "seed",
        "path",
        "n_t",
        "snr_db",
        "target_pf",
        "gamma",
        "r",
        "calibration_trials",
        "workers",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "K" => self.users = parse(key, value)?,
            "k" => self.dim = parse(key, value)?,
            "q" => self.q = parse(key, value)?,
            "N" => self.segments = Some(parse(key, value)?),
            "attack" => self.attack = value.parse()?,
            "strategy" => {
                let rho = match self.strategy {
                    Strategy::RandomSubset { rho } => rho,
                    _ => 0.5,
                };
                self.strategy = Strategy::parse(value, rho)?;
            }
            "rho" => {
                let rho = parse(key, value)?;
                if let Strategy::RandomSubset { rho: r } = &mut self.strategy {
                    *r = rho;
                } else {
                    self.strategy = Strategy::RandomSubset { rho };
                }
            }
            "victim" => self.victim = Some(parse(key, value)?),
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "path" => self.path = value.parse()?,
            "n_t" => self.n_t = parse(key, value)?,
            "snr_db" => self.snr_db = parse(key, value)?,
            "target_pf" => self.target_pf = parse(key, value)?,
            "gamma" => self.gamma = Some(parse(key, value)?),
            "r" => self.r = Some(parse(key, value)?),
            "calibration_trials" => self.calibration_trials = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn code_params(&self) -> Result<CodeParams> {
        let q = self.q as usize;
        let size = q.checked_pow(self.dim as u32).unwrap_or(usize::MAX);
        let n = self
            .segments
            .unwrap_or_else(|| optimal_segments(size, self.users.max(1)));
        CodeParams::new(self.users, self.dim, self.q, n).map_err(|e| Error::Config(e.to_string()))
    }

    /// Detection thresholds for the signal path.
    pub fn detection(&self) -> Result<DetectionConfig> {
        let gamma = match self.gamma {
            Some(g) => g,
            None => signal::calibrate_threshold(
                self.n_t,
                self.users,
                self.target_pf,
                self.calibration_trials,
                self.seed ^ CALIBRATION_SALT,
            )?,
        };
        let r = self
            .r
            .unwrap_or_else(|| signal::superposition_threshold(self.users, self.n_t));
        DetectionConfig::new(self.n_t, gamma, r, self.target_pf)
    }
}

/// Separates the calibration streams from the trial streams.
const CALIBRATION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TagStats {
    pub slots: u64,
    pub slot_errors: u64,
    pub lu_errors: u64,
}

/// Monte Carlo result. `trials` counts LU identifications (`K` per slot),
/// `errors` the misidentified ones; slot-level counts are kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct IepStats {
    pub slots: u64,
    pub trials: u64,
    pub errors: u64,
    pub iep_hat: f64,
    pub ci95: (f64, f64),
    pub slot_errors: u64,
    pub undecodable: u64,
    pub mode_mismatches: u64,
    /// Indexed by [`CaseTag::index`].
    pub by_tag: [TagStats; 3],
}

impl IepStats {
    pub fn tag(&self, tag: CaseTag) -> &TagStats {
        &self.by_tag[tag.index()]
    }

    pub fn slot_error_rate(&self) -> f64 {
        ratio(self.slot_errors, self.slots)
    }

    /// Wilson interval of `errors / trials` at quantile `z`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        analysis::wilson(self.errors, self.trials, z)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    slots: u64,
    errors: u64,
    slot_errors: u64,
    undecodable: u64,
    mode_mismatches: u64,
    by_tag: [TagStats; 3],
}

impl Counters {
    fn merge(mut self, o: Counters) -> Counters {
        self.slots += o.slots;
        self.errors += o.errors;
        self.slot_errors += o.slot_errors;
        self.undecodable += o.undecodable;
        self.mode_mismatches += o.mode_mismatches;
        for (a, b) in self.by_tag.iter_mut().zip(o.by_tag) {
            a.slots += b.slots;
            a.slot_errors += b.slot_errors;
            a.lu_errors += b.lu_errors;
        }
        self
    }
}

/// Mode the decoder should report for the generated attack.
fn expected_mode(kind: AttackKind, lu_sp: &BinaryCodeword, c: &BinaryCodeword) -> AttackMode {
    match kind {
        AttackKind::Sc => AttackMode::Sc,
        AttackKind::WbPj => AttackMode::WbPj,
        AttackKind::PbPj if lu_sp.covers_unchecked(c) => AttackMode::PbPjCovered,
        AttackKind::PbPj => AttackMode::PbPjUncovered,
    }
}

fn run_trial(
    cfg: &SimConfig,
    cb: &H2dfCodebook,
    det: Option<&DetectionConfig>,
    t: u64,
) -> Result<Counters> {
    let mut rng = stream(cfg.seed, t);
    let users = cb.users();
    // every LU draws from the same segment index in a slot
    let seg = rng.random_range(0..cb.params().segments());
    let lus: Vec<usize> = (0..users)
        .map(|lu| rng.random_range(cb.segment(lu, seg)))
        .collect();
    let victim = match (cfg.victim, cfg.strategy) {
        (Some(v), _) => Some(v),
        (None, Strategy::VictimSegmentCodeword) => Some(rng.random_range(0..users)),
        (None, _) => None,
    };
    let attack = make_attack(cfg.attack, cfg.strategy, cb, victim, &mut rng)?;
    let (agg, d) = match det {
        None => (
            signal::ideal_aggregate(cb, &lus, &attack)?,
            signal::ideal_differential_matrix(cb, &lus, &attack)?,
        ),
        Some(det) => {
            let sig = signal::simulate_reception(cb, &lus, &attack, det.n_t, cfg.snr_db, &mut rng)?;
            let agg = signal::extract_aggregate(&sig, det)?;
            let d = signal::build_differential_matrix(&sig, det, &agg.b);
            (agg, d)
        }
    };
    let want = expected_mode(attack.kind, &cb.sp_of(&lus), &attack.c);
    let mut out = Counters {
        slots: 1,
        ..Counters::default()
    };
    match hd_decode(&agg, &d, cb, &mut rng) {
        Ok(res) => {
            let wrong = res
                .lu_codewords
                .iter()
                .zip(&lus)
                .filter(|(a, b)| a != b)
                .count() as u64;
            out.errors = wrong;
            out.slot_errors = u64::from(wrong > 0);
            out.mode_mismatches = u64::from(res.mode != want);
            let tag = &mut out.by_tag[res.case_tag.index()];
            tag.slots = 1;
            tag.slot_errors = out.slot_errors;
            tag.lu_errors = wrong;
        }
        Err(e) => {
            let mode = match e {
                DecodeError::Undecodable(mode) => mode,
                DecodeError::Inconsistent => identify_attack(&agg, &d, cb),
            };
            out.errors = users as u64;
            out.slot_errors = 1;
            out.undecodable = 1;
            out.mode_mismatches = u64::from(mode != want);
        }
    }
    Ok(out)
}

/// Estimates the identification error probability.
pub fn monte_carlo_iep(cfg: &SimConfig) -> Result<IepStats> {
    let cb = H2dfCodebook::construct(cfg.code_params()?)?;
    monte_carlo_iep_with(cfg, &cb)
}

/// As [`monte_carlo_iep`] on a prebuilt codebook.
pub fn monte_carlo_iep_with(cfg: &SimConfig, cb: &H2dfCodebook) -> Result<IepStats> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        let det = match cfg.path {
            FeaturePath::Ideal => None,
            FeaturePath::Signal => Some(cfg.detection()?),
        };
        let c = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, cb, det.as_ref(), t))
            .try_reduce(Counters::default, |a, b| Ok(a.merge(b)))?;
        let trials = c.slots * cb.users() as u64;
        Ok(IepStats {
            slots: c.slots,
            trials,
            errors: c.errors,
            iep_hat: ratio(c.errors, trials),
            ci95: analysis::wilson(c.errors, trials, Z95),
            slot_errors: c.slot_errors,
            undecodable: c.undecodable,
            mode_mismatches: c.mode_mismatches,
            by_tag: c.by_tag,
        })
    })
}

pub const SIMULATE_HEADER: [&str; 26] = [
    "path",
    "K",
    "k",
    "q",
    "B",
    "C",
    "N",
    "attack",
    "strategy",
    "seed",
    "slots",
    "trials",
    "errors",
    "iep_hat",
    "ci95_low",
    "ci95_high",
    "slot_errors",
    "undecodable",
    "mode_mismatches",
    "clean",
    "identifiable",
    "confusing",
    "confusing_slot_errors",
    "lower_bound",
    "upper_bound",
    "within_bounds",
];

/// One-row CSV summary of a simulation.
pub fn write_simulate_csv<W: Write>(cfg: &SimConfig, stats: &IepStats, out: W) -> Result<()> {
    let p = cfg.code_params()?;
    let (lo, hi) = analysis::iep_bounds(p.size() as f64, p.users(), p.segments() as f64);
    let within = stats.ci95.1 >= lo && stats.ci95.0 <= hi;
    let row = vec![
        cfg.path.as_str().to_string(),
        p.users().to_string(),
        p.dim().to_string(),
        p.q().to_string(),
        p.len().to_string(),
        p.size().to_string(),
        p.segments().to_string(),
        cfg.attack.as_str().to_string(),
        cfg.strategy.as_str().to_string(),
        cfg.seed.to_string(),
        stats.slots.to_string(),
        stats.trials.to_string(),
        stats.errors.to_string(),
        stats.iep_hat.to_string(),
        stats.ci95.0.to_string(),
        stats.ci95.1.to_string(),
        stats.slot_errors.to_string(),
        stats.undecodable.to_string(),
        stats.mode_mismatches.to_string(),
        stats.tag(CaseTag::Clean).slots.to_string(),
        stats.tag(CaseTag::Identifiable).slots.to_string(),
        stats.tag(CaseTag::ConfusingCoinflip).slots.to_string(),
        stats.tag(CaseTag::ConfusingCoinflip).slot_errors.to_string(),
        lo.to_string(),
        hi.to_string(),
        within.to_string(),
    ];
    write_csv(out, &SIMULATE_HEADER, std::iter::once(row))
}

fn write_csv<W: Write>(
    out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("csv output: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Code rate versus subcarrier budget.
    F6a,
    /// Lower/upper bound tradeoff over `N`.
    F6b,
    /// Instability versus `N`.
    F6c,
    /// Closed-form IEP versus subcarrier budget.
    F7a,
    /// Subcarrier overhead versus `q`.
    F7b,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "6a" => Ok(Figure::F6a),
            "6b" => Ok(Figure::F6b),
            "6c" => Ok(Figure::F6c),
            "7a" => Ok(Figure::F7a),
            "7b" => Ok(Figure::F7b),
            other => Err(Error::Config(format!("unknown figure {other:?}"))),
        }
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &self.header, self.rows.iter().cloned())
    }
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

/// Data grid for one figure.
pub fn sweep(figure: Figure) -> Result<Table> {
    let mut rows = Vec::new();
    let header = match figure {
        Figure::F6a => {
            for users in [4, 8, 16] {
                for dim in [2, 3] {
                    for np in (50..=400).step_by(10) {
                        if !analysis::meets_min_budget(users, dim, np as f64) {
                            continue;
                        }
                        let (q, c) = analysis::implied_code(users, dim, np as f64);
                        let rate = analysis::code_rate_for(users, dim, np as f64)?;
                        rows.push(vec![s(users), s(dim), s(np), s(q), s(c), s(rate)]);
                    }
                }
            }
            vec!["K", "k", "N_P", "q", "C", "code_rate"]
        }
        Figure::F6b => {
            for users in [2, 8] {
                for dim in [2, 3] {
                    let np = analysis::min_subcarriers(users, dim);
                    let (_, c) = analysis::implied_code(users, dim, np as f64);
                    let n_opt = analysis::optimal_segments_real(c, users);
                    for n in 1..=10 {
                        let (lo, hi) = analysis::iep_bounds(c, users, n as f64);
                        rows.push(vec![
                            s(users),
                            s(dim),
                            s(np),
                            s(c),
                            s(n),
                            s(lo),
                            s(hi),
                            s(n as f64 <= n_opt),
                        ]);
                    }
                }
            }
            vec!["K", "k", "N_P", "C", "N", "lower", "upper", "within_optimum"]
        }
        Figure::F6c => {
            for users in [2, 8, 18] {
                for dim in [2, 3] {
                    let np = analysis::min_subcarriers(users, dim);
                    let (_, c) = analysis::implied_code(users, dim, np as f64);
                    let n_max = (analysis::optimal_segments_real(c, users).floor() as usize).max(1);
                    for n in 1..=n_max {
                        rows.push(vec![
                            s(users),
                            s(dim),
                            s(np),
                            s(c),
                            s(n),
                            s(analysis::instability(c, users, n as f64)),
                            s(analysis::instability_g_form(users, dim, np as f64, n as f64)),
                        ]);
                    }
                }
            }
            vec!["K", "k", "N_P", "C", "N", "S_R", "S_R_G"]
        }
        Figure::F7a => {
            for users in [4, 8, 16] {
                for dim in [2, 3] {
                    for np in (100..=400).step_by(10) {
                        let p = analysis::iep_closed_form(users, dim, np as f64)?;
                        rows.push(vec![
                            s(users),
                            s(dim),
                            s(np),
                            s(p),
                            s(analysis::meets_min_budget(users, dim, np as f64)),
                        ]);
                    }
                }
            }
            vec!["K", "k", "N_P", "P_closed_form", "meets_min_budget"]
        }
        Figure::F7b => {
            for users in [4, 8] {
                let dim = 2;
                let q0 = (users * (dim - 1)) as u32;
                for pt in analysis::overhead_curve(users, dim, q0..=32) {
                    rows.push(vec![s(users), s(dim), s(pt.q), s(pt.size), s(pt.subcarriers)]);
                }
            }
            vec!["K", "k", "q", "C", "N_P"]
        }
    };
    Ok(Table { header, rows })
}

/// Closed-form metrics for `(K, k, N_P)`.
pub fn metrics(users: usize, dim: usize, np: f64) -> Result<Table> {
    let (q, c) = analysis::implied_code(users, dim, np);
    let p = analysis::iep_closed_form(users, dim, np)?;
    let rate = analysis::code_rate_for(users, dim, np)?;
    let n_opt = analysis::optimal_segments_real(c, users);
    let row = vec![
        s(users),
        s(dim),
        s(np),
        s(q),
        s(c),
        s(analysis::min_subcarriers(users, dim)),
        s(analysis::meets_min_budget(users, dim, np)),
        s(rate),
        s(n_opt),
        s(p),
        s(analysis::reliability(p)),
    ];
    Ok(Table {
        header: vec![
            "K",
            "k",
            "N_P",
            "q",
            "C",
            "min_N_P",
            "meets_min_budget",
            "code_rate",
            "N_opt",
            "P",
            "R_S",
        ],
        rows: vec![row],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_roundtrip() {
        let cfg = SimConfig::from_text(
            "# worst case\nK = 3\nk=2\nq = 7\nN = 2\nattack = pb-pj\nstrategy = victim_segment_codeword\ntrials = 100\nseed = 9\n",
        )
        .unwrap();
        assert_eq!((cfg.users, cfg.dim, cfg.q, cfg.segments), (3, 2, 7, Some(2)));
        assert_eq!(cfg.attack, AttackKind::PbPj);
        assert_eq!(cfg.strategy, Strategy::VictimSegmentCodeword);
        assert_eq!((cfg.trials, cfg.seed), (100, 9));
        assert!(SimConfig::from_text("nope = 1").is_err());
        assert!(SimConfig::from_text("K 3").is_err());
        assert!(SimConfig::from_text("q = x").is_err());
    }

    #[test]
    fn rho_and_strategy_in_either_order() {
        let a = SimConfig::from_text("rho = 0.3\nstrategy = random_subset").unwrap();
        let b = SimConfig::from_text("strategy = random_subset\nrho = 0.3").unwrap();
        assert_eq!(a.strategy, Strategy::RandomSubset { rho: 0.3 });
        assert_eq!(a.strategy, b.strategy);
    }

    #[test]
    fn default_segments_are_optimal() {
        let cfg = SimConfig {
            q: 7,
            ..SimConfig::default()
        };
        assert_eq!(cfg.code_params().unwrap().segments(), 2);
    }

    #[test]
    fn sc_has_no_errors() {
        let cfg = SimConfig {
            trials: 500,
            ..SimConfig::default()
        };
        let st = monte_carlo_iep(&cfg).unwrap();
        assert_eq!(st.errors, 0);
        assert_eq!(st.mode_mismatches, 0);
        assert_eq!(st.slots, 500);
        assert_eq!(st.trials, 1500);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let mut cfg = SimConfig::from_text(
            "q = 7\nN = 1\nattack = pb-pj\nstrategy = victim\ntrials = 3000\nseed = 4",
        )
        .unwrap();
        cfg.workers = 1;
        let a = monte_carlo_iep(&cfg).unwrap();
        cfg.workers = 3;
        let b = monte_carlo_iep(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.errors > 0);
    }

    #[test]
    fn sweep_tables_have_rows() {
        for f in ["6a", "6b", "6c", "7a", "7b"] {
            let t = sweep(f.parse().unwrap()).unwrap();
            assert!(!t.rows.is_empty(), "{f}");
            assert!(t.rows.iter().all(|r| r.len() == t.header.len()));
        }
        assert!("8z".parse::<Figure>().is_err());
    }

    #[test]
    fn fig7a_contains_published_point() {
        let t = sweep(Figure::F7a).unwrap();
        let row = t
            .rows
            .iter()
            .find(|r| r[0] == "8" && r[1] == "2" && r[2] == "300")
            .unwrap();
        let p: f64 = row[3].parse().unwrap();
        assert!((p - 7.5e-3).abs() < 0.02 * 7.5e-3);
    }
}

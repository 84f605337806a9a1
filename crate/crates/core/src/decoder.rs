//! Hierarchical decoding: attack identification, then codeword
//! classification and identification for the identified mode.

use rand::Rng;

use crate::codebook::H2dfCodebook;
use crate::codeword::{AspVector, BinaryCodeword};
use crate::signal::{Aggregate, DifferentialMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackMode {
    Sc,
    WbPj,
    /// `b_I` is itself an SP sum of one column per submatrix.
    PbPjCovered,
    PbPjUncovered,
}

impl AttackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackMode::Sc => "sc",
            AttackMode::WbPj => "wb-pj",
            AttackMode::PbPjCovered => "pb-pj-covered",
            AttackMode::PbPjUncovered => "pb-pj-uncovered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    Clean,
    Identifiable,
    ConfusingCoinflip,
}

impl CaseTag {
    pub const ALL: [CaseTag; 3] = [CaseTag::Clean, CaseTag::Identifiable, CaseTag::ConfusingCoinflip];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Clean => "clean",
            CaseTag::Identifiable => "identifiable",
            CaseTag::ConfusingCoinflip => "confusing_coinflip",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub mode: AttackMode,
    /// One column per submatrix, in LU order.
    pub lu_codewords: Vec<usize>,
    pub eva_codeword: Option<BinaryCodeword>,
    pub case_tag: CaseTag,
    /// Distinct hypotheses that survived the checks.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("observation is undecodable under {}", .0.as_str())]
    Undecodable(AttackMode),
    #[error("neither BFPI hypothesis reproduces the observed counts")]
    Inconsistent,
}

/// Positions with occupancy exactly one, with their differential rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposedSet {
    pub positions: Vec<usize>,
    pub rows: Vec<BinaryCodeword>,
}

impl ExposedSet {
    pub fn new(agg: &Aggregate, d: &DifferentialMatrix) -> Self {
        let positions: Vec<usize> = (0..agg.len()).filter(|&i| agg.m.get(i) == 1).collect();
        let rows = positions.iter().map(|&i| d.row(i).clone()).collect();
        ExposedSet { positions, rows }
    }

    /// Rows in position order with duplicates dropped.
    pub fn distinct_rows(&self) -> Vec<&BinaryCodeword> {
        let mut out: Vec<&BinaryCodeword> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r) {
                out.push(r);
            }
        }
        out
    }
}

pub fn identify_attack(agg: &Aggregate, d: &DifferentialMatrix, cb: &H2dfCodebook) -> AttackMode {
    let full_rows = agg
        .b
        .ones_iter()
        .all(|i| i < d.len() && d.row(i).is_all_ones());
    if agg.b.is_all_ones() && full_rows {
        return AttackMode::WbPj;
    }
    match cb.mucd_set(&agg.b) {
        Some(set) if cb.asp_of(&set) == agg.m => AttackMode::Sc,
        Some(_) => AttackMode::PbPjCovered,
        None => AttackMode::PbPjUncovered,
    }
}

/// Exact MUCD set whose integer sum is `m`.
fn resolve_counts(cb: &H2dfCodebook, m: &AspVector) -> Option<Vec<usize>> {
    let set = cb.mucd_set(&m.support())?;
    (cb.asp_of(&set) == *m).then_some(set)
}

pub fn decode_wb_sc(
    agg: &Aggregate,
    cb: &H2dfCodebook,
    mode: AttackMode,
) -> Result<DecodeResult, DecodeError> {
    let (m, eva) = match mode {
        AttackMode::WbPj => {
            let ones = BinaryCodeword::ones(agg.len());
            let m = agg
                .m
                .checked_sub_word(&ones)
                .ok_or(DecodeError::Undecodable(mode))?;
            (m, Some(ones))
        }
        AttackMode::Sc => (agg.m.clone(), None),
        _ => return Err(DecodeError::Undecodable(mode)),
    };
    let set = resolve_counts(cb, &m).ok_or(DecodeError::Undecodable(mode))?;
    Ok(DecodeResult {
        mode,
        lu_codewords: set,
        eva_codeword: eva,
        case_tag: CaseTag::Clean,
        candidates: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `j0` is the LU superposition, `j1` is Eva's word.
    H0,
    /// The reverse.
    H1,
}

/// Decides which of two `B̄_K` words is the LU superposition by checking
/// which ordering reproduces the observed counts. `H0` wins ties.
pub fn bfpi(
    j0: &BinaryCodeword,
    j1: &BinaryCodeword,
    m: &AspVector,
    cb: &H2dfCodebook,
) -> Result<Hypothesis, DecodeError> {
    let matches = |lu: &BinaryCodeword, eva: &BinaryCodeword| {
        cb.mucd_set(lu).is_some_and(|set| {
            let mut sum = cb.asp_of(&set);
            sum.add_word(eva).is_ok() && sum == *m
        })
    };
    if matches(j0, j1) {
        Ok(Hypothesis::H0)
    } else if matches(j1, j0) {
        Ok(Hypothesis::H1)
    } else {
        Err(DecodeError::Inconsistent)
    }
}

/// All LU columns drawn from one common segment index.
fn segment_consistent(cb: &H2dfCodebook, set: &[usize]) -> bool {
    let mut segs = set.iter().map(|&j| cb.segment_of(j));
    match segs.next() {
        Some(Some(s)) => segs.all(|t| t == Some(s)),
        _ => false,
    }
}

struct Candidate {
    set: Vec<usize>,
    eva: BinaryCodeword,
}

/// Hypotheses for one exposed row `w` taken as Eva's word.
fn test_hypothesis(
    agg: &Aggregate,
    cb: &H2dfCodebook,
    w: &BinaryCodeword,
) -> Option<Candidate> {
    if w.is_zero() || w.len() != agg.len() {
        return None;
    }
    let rest = agg.m.checked_sub_word(w)?;
    let b_rest = rest.support();
    if cb.mucd_set(w).is_some() {
        // Eva imitates an SP sum: let the counts decide the ordering
        return match bfpi(&b_rest, w, &agg.m, cb).ok()? {
            Hypothesis::H0 => {
                let set = cb.mucd_set(&b_rest)?;
                segment_consistent(cb, &set).then(|| Candidate { set, eva: w.clone() })
            }
            Hypothesis::H1 => {
                let set = cb.mucd_set(w)?;
                segment_consistent(cb, &set).then_some(Candidate { set, eva: b_rest })
            }
        };
    }
    let set = resolve_counts(cb, &rest)?;
    segment_consistent(cb, &set).then(|| Candidate { set, eva: w.clone() })
}

pub fn decode_pb<R: Rng + ?Sized>(
    agg: &Aggregate,
    d: &DifferentialMatrix,
    cb: &H2dfCodebook,
    mode: AttackMode,
    rng: &mut R,
) -> Result<DecodeResult, DecodeError> {
    let undecodable = DecodeError::Undecodable(mode);
    match mode {
        AttackMode::PbPjCovered => {
            let set = cb.mucd_set(&agg.b).ok_or(undecodable.clone())?;
            let eva = agg
                .m
                .checked_sub(&cb.asp_of(&set))
                .and_then(|r| r.as_binary())
                .filter(|c| !c.is_zero())
                .ok_or(undecodable)?;
            Ok(DecodeResult {
                mode,
                lu_codewords: set,
                eva_codeword: Some(eva),
                case_tag: CaseTag::Clean,
                candidates: 1,
            })
        }
        AttackMode::PbPjUncovered => {
            let exposed = ExposedSet::new(agg, d);
            let mut survivors: Vec<Candidate> = Vec::new();
            for w in exposed.distinct_rows() {
                if let Some(c) = test_hypothesis(agg, cb, w) {
                    if !survivors.iter().any(|s| s.set == c.set) {
                        survivors.push(c);
                    }
                }
            }
            let n = survivors.len();
            let (pick, tag) = match n {
                0 => return Err(undecodable),
                1 => (0, CaseTag::Identifiable),
                _ => (rng.random_range(0..n), CaseTag::ConfusingCoinflip),
            };
            let c = survivors.swap_remove(pick);
            Ok(DecodeResult {
                mode,
                lu_codewords: c.set,
                eva_codeword: Some(c.eva),
                case_tag: tag,
                candidates: n,
            })
        }
        _ => Err(undecodable),
    }
}

/// Full pipeline. Observations whose support disagrees with their counts
/// are rejected as undecodable.
pub fn hd_decode<R: Rng + ?Sized>(
    agg: &Aggregate,
    d: &DifferentialMatrix,
    cb: &H2dfCodebook,
    rng: &mut R,
) -> Result<DecodeResult, DecodeError> {
    let mode = identify_attack(agg, d, cb);
    if !agg.is_consistent() || agg.len() != cb.len() || d.len() != cb.len() {
        return Err(DecodeError::Undecodable(mode));
    }
    match mode {
        AttackMode::Sc | AttackMode::WbPj => decode_wb_sc(agg, cb, mode),
        AttackMode::PbPjCovered | AttackMode::PbPjUncovered => decode_pb(agg, d, cb, mode, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{AttackKind, AttackVector, Strategy};
    use crate::codebook::CodeParams;
    use crate::signal::{ideal_aggregate, ideal_differential_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(n: usize) -> H2dfCodebook {
        H2dfCodebook::construct(CodeParams::new(3, 2, 7, n).unwrap()).unwrap()
    }

    fn attack(c: BinaryCodeword) -> AttackVector {
        let kind = if c.is_zero() {
            AttackKind::Sc
        } else if c.is_all_ones() {
            AttackKind::WbPj
        } else {
            AttackKind::PbPj
        };
        AttackVector {
            kind,
            c,
            strategy: Strategy::None,
            victim: None,
        }
    }

    fn observe(cb: &H2dfCodebook, lus: &[usize], c: BinaryCodeword) -> (Aggregate, DifferentialMatrix) {
        let a = attack(c);
        (
            ideal_aggregate(cb, lus, &a).unwrap(),
            ideal_differential_matrix(cb, lus, &a).unwrap(),
        )
    }

    #[test]
    fn worked_confusion_example_arithmetic() {
        // three LU words and Eva's [1100]
        let lus = ["1001", "0011", "1010"];
        let eva = BinaryCodeword::from_digits(&[1, 1, 0, 0]);
        let mut m = AspVector::zeros(4);
        for w in lus {
            let d: Vec<u8> = w.bytes().map(|b| b - b'0').collect();
            m.add_word(&BinaryCodeword::from_digits(&d)).unwrap();
        }
        let lu_sum = m.clone();
        m.add_word(&eva).unwrap();
        let agg = Aggregate::from_counts(m);
        assert_eq!(agg.m, AspVector::from_counts(vec![3, 1, 2, 2]));
        assert!(agg.b.is_all_ones());
        let rows = (0..4)
            .map(|i| if i == 1 { eva.clone() } else { BinaryCodeword::ones(4) })
            .collect();
        let exposed = ExposedSet::new(&agg, &DifferentialMatrix::from_rows(rows));
        assert_eq!(exposed.positions, vec![1]);
        assert_eq!(exposed.rows, vec![eva.clone()]);
        // clearing Eva's word leaves exactly the LU counts
        assert_eq!(agg.m.checked_sub_word(&eva).unwrap(), lu_sum);
        // WB-PJ variant: LU sum + ones, minus ones, gives the LU sum back
        let mut wb = lu_sum.clone();
        wb.add_word(&BinaryCodeword::ones(4)).unwrap();
        assert_eq!(wb.counts(), &[3, 1, 3, 3]);
        assert_eq!(wb.checked_sub_word(&BinaryCodeword::ones(4)).unwrap(), lu_sum);
    }

    #[test]
    fn sc_and_wb_identified_and_decoded() {
        let cb = small(1);
        let lus = [3, 20, 40];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for c in [BinaryCodeword::zeros(cb.len()), BinaryCodeword::ones(cb.len())] {
            let (agg, d) = observe(&cb, &lus, c.clone());
            let r = hd_decode(&agg, &d, &cb, &mut rng).unwrap();
            assert_eq!(r.lu_codewords, lus);
            assert_eq!(r.case_tag, CaseTag::Clean);
            let want = if c.is_zero() { AttackMode::Sc } else { AttackMode::WbPj };
            assert_eq!(r.mode, want);
        }
    }

    #[test]
    fn negative_count_is_undecodable() {
        let cb = small(1);
        let (mut agg, _) = observe(&cb, &[3, 20, 40], BinaryCodeword::zeros(cb.len()));
        agg = Aggregate::from_counts(agg.m);
        let mut counts = agg.m.counts().to_vec();
        counts[0] = 0;
        let agg = Aggregate::from_counts(AspVector::from_counts(counts));
        assert_eq!(
            decode_wb_sc(&agg, &cb, AttackMode::WbPj),
            Err(DecodeError::Undecodable(AttackMode::WbPj))
        );
    }

    #[test]
    fn covered_pb_recovers_eva() {
        let cb = small(1);
        let lus = [3, 20, 40];
        // Eva reuses an LU column: covered by the LU superposition
        let c = cb.column(20).clone();
        let (agg, d) = observe(&cb, &lus, c.clone());
        assert_eq!(identify_attack(&agg, &d, &cb), AttackMode::PbPjCovered);
        let r = hd_decode(&agg, &d, &cb, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(r.lu_codewords, lus);
        assert_eq!(r.eva_codeword, Some(c));
    }

    #[test]
    fn different_segment_is_identifiable() {
        // C = 49, K = 3, N = 2: segments of 8 columns; LU 1 owns 16..32
        let cb = small(2);
        let lus = [1, 17, 33]; // all in segment 0
        let eva = cb.column(26).clone(); // LU 1, segment 1
        assert_eq!(cb.segment_of(26), Some(1));
        let (agg, d) = observe(&cb, &lus, eva.clone());
        assert_eq!(identify_attack(&agg, &d, &cb), AttackMode::PbPjUncovered);
        let r = hd_decode(&agg, &d, &cb, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(r.case_tag, CaseTag::Identifiable);
        assert_eq!(r.lu_codewords, lus);
        assert_eq!(r.eva_codeword, Some(eva));
    }

    #[test]
    fn same_segment_is_a_coin_flip() {
        let cb = small(2);
        let lus = [1, 17, 33];
        let eva = cb.column(20).clone(); // LU 1, segment 0
        let (agg, d) = observe(&cb, &lus, eva);
        let mut right = 0;
        let trials = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..trials {
            let r = hd_decode(&agg, &d, &cb, &mut rng).unwrap();
            assert_eq!(r.case_tag, CaseTag::ConfusingCoinflip);
            assert_eq!(r.candidates, 2);
            if r.lu_codewords == lus {
                right += 1;
            } else {
                assert_eq!(r.lu_codewords, vec![1, 20, 33]);
            }
        }
        let f = right as f64 / trials as f64;
        assert!((f - 0.5).abs() < 0.05, "{f}");
    }

    #[test]
    fn spsum_imitation_resolved_by_bfpi() {
        let cb = small(1);
        let lus = [3, 20, 40];
        let fake = cb.sp_of(&[5, 22, 45]);
        let (agg, d) = observe(&cb, &lus, fake.clone());
        let r = hd_decode(&agg, &d, &cb, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(r.lu_codewords, lus);
        assert_eq!(r.eva_codeword, Some(fake));
    }

    #[test]
    fn bfpi_symmetry() {
        let cb = small(1);
        let truth = cb.sp_of(&[3, 20, 40]);
        let fake = cb.sp_of(&[5, 22, 45]);
        let mut m = cb.asp_of(&[3, 20, 40]);
        m.add_word(&fake).unwrap();
        assert_eq!(bfpi(&truth, &fake, &m, &cb), Ok(Hypothesis::H0));
        assert_eq!(bfpi(&fake, &truth, &m, &cb), Ok(Hypothesis::H1));
        let zero = AspVector::zeros(cb.len());
        assert_eq!(bfpi(&truth, &fake, &zero, &cb), Err(DecodeError::Inconsistent));
    }

    #[test]
    fn inconsistent_aggregate_rejected() {
        let cb = small(1);
        let (agg, d) = observe(&cb, &[3, 20, 40], BinaryCodeword::zeros(cb.len()));
        let mut b = agg.b.clone();
        b.flip(0);
        let bad = Aggregate { b, m: agg.m.clone() };
        assert!(matches!(
            hd_decode(&bad, &d, &cb, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(DecodeError::Undecodable(_))
        ));
    }
}

use h2df_core::attack::{AttackKind, AttackVector, Strategy};
use h2df_core::codebook::{CodeParams, H2dfCodebook};
use h2df_core::decoder::{hd_decode, identify_attack, AttackMode, CaseTag};
use h2df_core::signal::{ideal_aggregate, ideal_differential_matrix};
use h2df_core::BinaryCodeword;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

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

fn all_selections(cb: &H2dfCodebook) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for lu in 0..cb.users() {
        out = out
            .into_iter()
            .flat_map(|s| {
                cb.submatrix(lu).map(move |j| {
                    let mut s = s.clone();
                    s.push(j);
                    s
                })
            })
            .collect();
    }
    out
}

#[test]
fn sc_and_wb_zero_error_every_selection() {
    let cb = H2dfCodebook::construct(CodeParams::new(3, 2, 4, 1).unwrap()).unwrap();
    let sels = all_selections(&cb);
    assert_eq!(sels.len(), 125);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for lus in &sels {
        for c in [BinaryCodeword::zeros(16), BinaryCodeword::ones(16)] {
            let a = attack(c);
            let agg = ideal_aggregate(&cb, lus, &a).unwrap();
            let d = ideal_differential_matrix(&cb, lus, &a).unwrap();
            let r = hd_decode(&agg, &d, &cb, &mut rng).unwrap();
            assert_eq!(&r.lu_codewords, lus);
            assert_eq!(r.case_tag, CaseTag::Clean);
        }
    }
}

#[test]
fn mode_identification_exhaustive_single_column_attacks() {
    // Eva transmits any one column (including other LUs' and unused ones)
    let cb = H2dfCodebook::construct(CodeParams::new(3, 2, 4, 1).unwrap()).unwrap();
    for lus in all_selections(&cb) {
        let sp = cb.sp_of(&lus);
        for e in 0..cb.size() {
            let a = attack(cb.column(e).clone());
            let agg = ideal_aggregate(&cb, &lus, &a).unwrap();
            let d = ideal_differential_matrix(&cb, &lus, &a).unwrap();
            let want = if sp.covers_unchecked(&a.c) {
                AttackMode::PbPjCovered
            } else {
                AttackMode::PbPjUncovered
            };
            assert_eq!(identify_attack(&agg, &d, &cb), want, "lus {lus:?} eva {e}");
        }
    }
}

#[test]
fn single_column_attacks_outside_victim_submatrices_never_err() {
    // an Eva column from the unused remainder can never pass the MUCD check
    let cb = H2dfCodebook::construct(CodeParams::new(3, 2, 4, 1).unwrap()).unwrap();
    let spare = 15;
    assert_eq!(cb.submatrix_of(spare), None);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for lus in all_selections(&cb) {
        let a = attack(cb.column(spare).clone());
        let agg = ideal_aggregate(&cb, &lus, &a).unwrap();
        let d = ideal_differential_matrix(&cb, &lus, &a).unwrap();
        let r = hd_decode(&agg, &d, &cb, &mut rng).unwrap();
        assert_eq!(r.lu_codewords, lus);
        assert_ne!(r.case_tag, CaseTag::ConfusingCoinflip);
    }
}

#[test]
fn spsum_imitation_always_resolved() {
    let cb = H2dfCodebook::construct(CodeParams::new(3, 2, 4, 1).unwrap()).unwrap();
    let sels = all_selections(&cb);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut resolved = 0;
    let mut total = 0;
    for lus in sels.iter().step_by(7) {
        for fake in &sels {
            let c = cb.sp_of(fake);
            if fake == lus || c.is_all_ones() {
                continue;
            }
            let a = attack(c);
            let agg = ideal_aggregate(&cb, lus, &a).unwrap();
            let d = ideal_differential_matrix(&cb, lus, &a).unwrap();
            total += 1;
            if let Ok(r) = hd_decode(&agg, &d, &cb, &mut rng) {
                if &r.lu_codewords == lus {
                    resolved += 1;
                }
            }
        }
    }
    // ties between both orderings are possible; they must stay rare
    assert!(resolved as f64 >= 0.95 * total as f64, "{resolved}/{total}");
}

#[test]
fn large_codebook_constructible_and_constant_weight() {
    let cb = H2dfCodebook::construct(CodeParams::new(4, 3, 8, 1).unwrap()).unwrap();
    assert_eq!((cb.len(), cb.size()), (72, 512));
    assert!(cb.is_constant_weight());
    let cb = H2dfCodebook::construct(CodeParams::new(8, 3, 16, 1).unwrap()).unwrap();
    assert_eq!(cb.len(), 272);
}

#[test]
fn large_codebook_zero_error_sampled() {
    let cb = H2dfCodebook::construct(CodeParams::new(4, 3, 8, 2).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let seg = rand::Rng::random_range(&mut rng, 0..2);
        let lus: Vec<usize> = (0..4)
            .map(|lu| rand::Rng::random_range(&mut rng, cb.segment(lu, seg)))
            .collect();
        let wb = rand::Rng::random_bool(&mut rng, 0.5);
        let c = if wb {
            BinaryCodeword::ones(cb.len())
        } else {
            BinaryCodeword::zeros(cb.len())
        };
        let a = attack(c);
        let agg = ideal_aggregate(&cb, &lus, &a).unwrap();
        let d = ideal_differential_matrix(&cb, &lus, &a).unwrap();
        assert_eq!(hd_decode(&agg, &d, &cb, &mut rng).unwrap().lu_codewords, lus);
    }
}

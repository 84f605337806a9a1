//! Eva's codeword `c` under the hybrid attack model.

use rand::Rng;

use crate::codebook::H2dfCodebook;
use crate::codeword::BinaryCodeword;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    /// Silence cheating: Eva stays idle.
    Sc,
    /// Wide-band pilot jamming: every pilot subcarrier.
    WbPj,
    /// Partial-band pilot jamming: a nonconstant subset.
    PbPj,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Sc => "sc",
            AttackKind::WbPj => "wb-pj",
            AttackKind::PbPj => "pb-pj",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sc" => Ok(AttackKind::Sc),
            "wb-pj" | "wbpj" => Ok(AttackKind::WbPj),
            "pb-pj" | "pbpj" => Ok(AttackKind::PbPj),
            other => Err(Error::Config(format!("unknown attack {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    None,
    /// Each bit i.i.d. Bernoulli(rho), constant draws rejected.
    RandomSubset { rho: f64 },
    /// A random column of the victim's submatrix (uniform segment, then column).
    VictimSegmentCodeword,
    /// SP sum of one random column per submatrix: an element of B̄_K.
    SpsumImitation,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::RandomSubset { .. } => "random_subset",
            Strategy::VictimSegmentCodeword => "victim_segment_codeword",
            Strategy::SpsumImitation => "spsum_imitation",
        }
    }

    /// Parses a strategy name; `rho` applies to `random_subset`.
    pub fn parse(name: &str, rho: f64) -> Result<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Strategy::None),
            "random_subset" => Ok(Strategy::RandomSubset { rho }),
            "victim_segment_codeword" | "victim" => Ok(Strategy::VictimSegmentCodeword),
            "spsum_imitation" | "spsum" => Ok(Strategy::SpsumImitation),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackVector {
    pub kind: AttackKind,
    pub c: BinaryCodeword,
    pub strategy: Strategy,
    pub victim: Option<usize>,
}

const MAX_REDRAWS: usize = 10_000;

/// Draws Eva's codeword. Deterministic in the RNG state.
pub fn make_attack<R: Rng + ?Sized>(
    kind: AttackKind,
    strategy: Strategy,
    cb: &H2dfCodebook,
    victim: Option<usize>,
    rng: &mut R,
) -> Result<AttackVector> {
    let len = cb.len();
    let c = match (kind, strategy) {
        (AttackKind::Sc, Strategy::None) => BinaryCodeword::zeros(len),
        (AttackKind::WbPj, Strategy::None) => BinaryCodeword::ones(len),
        (AttackKind::Sc | AttackKind::WbPj, s) => {
            return Err(Error::InvalidAttack(format!(
                "{} takes no strategy, got {}",
                kind.as_str(),
                s.as_str()
            )))
        }
        (AttackKind::PbPj, Strategy::None) => {
            return Err(Error::InvalidAttack("pb-pj needs a strategy".into()))
        }
        (AttackKind::PbPj, Strategy::RandomSubset { rho }) => {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidAttack(format!("rho = {rho} outside (0, 1)")));
            }
            redraw(rng, |rng| {
                BinaryCodeword::from_bits((0..len).map(|_| rng.random_bool(rho)))
            })?
        }
        (AttackKind::PbPj, Strategy::VictimSegmentCodeword) => {
            let v = victim.ok_or(Error::MissingVictim)?;
            if v >= cb.users() {
                return Err(Error::OutOfRange {
                    index: v,
                    limit: cb.users(),
                });
            }
            let segment = rng.random_range(0..cb.params().segments());
            let col = rng.random_range(cb.segment(v, segment));
            cb.column(col).clone()
        }
        (AttackKind::PbPj, Strategy::SpsumImitation) => redraw(rng, |rng| {
            let set: Vec<usize> = (0..cb.users())
                .map(|lu| {
                    let s = rng.random_range(0..cb.params().segments());
                    rng.random_range(cb.segment(lu, s))
                })
                .collect();
            cb.sp_of(&set)
        })?,
    };
    Ok(AttackVector {
        kind,
        c,
        strategy,
        victim,
    })
}

/// Repeats a draw until the word is neither all-zero nor all-one.
fn redraw<R: Rng + ?Sized>(
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> BinaryCodeword,
) -> Result<BinaryCodeword> {
    for _ in 0..MAX_REDRAWS {
        let c = draw(rng);
        if !c.is_zero() && !c.is_all_ones() {
            return Ok(c);
        }
    }
    Err(Error::InvalidAttack("could not draw a nonconstant pb-pj word".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::CodeParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cb() -> H2dfCodebook {
        H2dfCodebook::construct(CodeParams::new(3, 2, 4, 1).unwrap()).unwrap()
    }

    #[test]
    fn constant_modes() {
        let cb = cb();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = make_attack(AttackKind::Sc, Strategy::None, &cb, None, &mut rng).unwrap();
        assert!(a.c.is_zero());
        let a = make_attack(AttackKind::WbPj, Strategy::None, &cb, None, &mut rng).unwrap();
        assert!(a.c.is_all_ones());
        assert!(make_attack(AttackKind::PbPj, Strategy::None, &cb, None, &mut rng).is_err());
    }

    #[test]
    fn victim_codeword_lies_in_victim_submatrix() {
        let cb = cb();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = make_attack(
                AttackKind::PbPj,
                Strategy::VictimSegmentCodeword,
                &cb,
                Some(1),
                &mut rng,
            )
            .unwrap();
            assert!(cb.submatrix(1).any(|j| *cb.column(j) == a.c));
        }
        assert_eq!(
            make_attack(AttackKind::PbPj, Strategy::VictimSegmentCodeword, &cb, None, &mut rng),
            Err(Error::MissingVictim)
        );
    }

    #[test]
    fn pb_words_are_nonconstant() {
        let cb = cb();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [Strategy::RandomSubset { rho: 0.9 }, Strategy::SpsumImitation] {
            for _ in 0..200 {
                let a = make_attack(AttackKind::PbPj, s, &cb, None, &mut rng).unwrap();
                assert!(!a.c.is_zero() && !a.c.is_all_ones());
            }
        }
    }

    #[test]
    fn spsum_imitation_is_in_bk() {
        let cb = cb();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = make_attack(AttackKind::PbPj, Strategy::SpsumImitation, &cb, None, &mut rng)
            .unwrap();
        assert!(cb.mucd_set(&a.c).is_some());
    }

    #[test]
    fn same_seed_same_word() {
        let cb = cb();
        let s = Strategy::RandomSubset { rho: 0.5 };
        let a = make_attack(AttackKind::PbPj, s, &cb, None, &mut ChaCha8Rng::seed_from_u64(9));
        let b = make_attack(AttackKind::PbPj, s, &cb, None, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}

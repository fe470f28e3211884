use num_integer::Integer;

use crate::error::{Error, Result};

/// Positive rational `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    pub fn reduced(num: u64, den: u64) -> Self {
        let g = num.gcd(&den).max(1);
        Ratio { num: num / g, den: den / g }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Least `τ > 0` with `τ·a_j/b_j ∈ ℕ` for every `j`:
/// `τ = ∏ b_j / gcd_l (a_l ∏_{j≠l} b_j)`.
pub fn period_tau(lams: &[Ratio]) -> Result<Ratio> {
    if lams.is_empty() {
        return Err(Error::InvalidInput("period of an empty list".into()));
    }
    for r in lams {
        if r.num == 0 || r.den == 0 {
            return Err(Error::InvalidInput(format!("{}/{} is not positive", r.num, r.den)));
        }
        if r.num.gcd(&r.den) != 1 {
            return Err(Error::NotLowestTerms { value: r.num, denominator: r.den });
        }
    }
    let mut prod: u128 = 1;
    for r in lams {
        prod = prod.checked_mul(r.den as u128).ok_or(Error::ArithmeticOverflow)?;
    }
    let mut g: u128 = 0;
    for r in lams {
        let term = (prod / r.den as u128).checked_mul(r.num as u128).ok_or(Error::ArithmeticOverflow)?;
        g = g.gcd(&term);
    }
    let d = prod.gcd(&g);
    let (num, den) = (prod / d, g / d);
    let num = u64::try_from(num).map_err(|_| Error::ArithmeticOverflow)?;
    let den = u64::try_from(den).map_err(|_| Error::ArithmeticOverflow)?;
    Ok(Ratio { num, den })
}

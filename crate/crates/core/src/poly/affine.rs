use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::Rational;

/// An unknown of the linear program (template coefficient or multiplier).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LpVar(pub u32);

impl fmt::Display for LpVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// `constant + sum coeff_i * v_i` over LP unknowns.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AffineForm {
    pub constant: Rational,
    pub coeffs: BTreeMap<LpVar, Rational>,
}

impl AffineForm {
    pub fn constant(c: Rational) -> Self {
        AffineForm {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn var(v: LpVar) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, Rational::one());
        AffineForm {
            constant: Rational::zero(),
            coeffs,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_var(&mut self, v: LpVar, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(v).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn add_form(&mut self, other: &AffineForm, k: &Rational) {
        if k.is_zero() {
            return;
        }
        self.constant += &other.constant * k;
        for (v, c) in &other.coeffs {
            self.add_var(*v, &(c * k));
        }
    }

    pub fn scaled(&self, k: &Rational) -> AffineForm {
        if k.is_zero() {
            return AffineForm::default();
        }
        AffineForm {
            constant: &self.constant * k,
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
        }
    }

    pub fn eval(&self, value: &dyn Fn(LpVar) -> Rational) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * value(*v);
        }
        acc
    }

    pub fn vars(&self) -> impl Iterator<Item = LpVar> + '_ {
        self.coeffs.keys().copied()
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            write_signed(f, c, Some(&v.to_string()), first)?;
            first = false;
        }
        if !self.constant.is_zero() || first {
            write_signed(f, &self.constant, None, first)?;
        }
        Ok(())
    }
}

/// Writes `c*name` with a leading sign separator, omitting unit coefficients.
pub(crate) fn write_signed(
    f: &mut fmt::Formatter<'_>,
    c: &Rational,
    name: Option<&str>,
    first: bool,
) -> fmt::Result {
    let neg = c.is_negative();
    let mag = c.abs();
    if first {
        if neg {
            write!(f, "-")?;
        }
    } else if neg {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    match name {
        Some(n) if mag.is_one() => write!(f, "{n}"),
        Some(n) => write!(f, "{mag}*{n}"),
        None => write!(f, "{mag}"),
    }
}

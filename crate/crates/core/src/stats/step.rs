//! Step weight functions `φ = Σ θ_j · 1_{(a_j, b_j]}` with rational data.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};

use super::scan::Window;
use crate::{Error, Result};

/// One piece `θ · 1_{(a, b]}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepPiece {
    pub a: Rational64,
    pub b: Rational64,
    pub theta: Rational64,
}

/// A finite combination of right-closed interval indicators on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFunction {
    pieces: Vec<StepPiece>,
}

/// Integer windows and integer weights for a step function at scale `H`.
///
/// The weighted count at `n` equals `(Σ weight_j · count_j) / denominator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteWeights {
    pub windows: Vec<Window>,
    pub weights: Vec<i64>,
    pub denominator: i64,
}

fn parse_rational(tok: &str) -> std::result::Result<Rational64, String> {
    if let Some((int, frac)) = tok.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) || frac.len() > 15 {
            return Err(format!("bad decimal literal {tok:?}"));
        }
        let negative = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| format!("bad decimal literal {tok:?}"))?
        };
        let scale = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| format!("bad decimal literal {tok:?}"))?;
        let mag = Rational64::new(whole.abs() * scale + f, scale);
        return Ok(if negative { -mag } else { mag });
    }
    Rational64::from_str(tok).map_err(|_| format!("bad rational literal {tok:?}"))
}

impl StepFunction {
    /// Validates pieces: `0 ≤ a < b` for each.
    pub fn new(pieces: impl Into<Vec<StepPiece>>) -> Result<Self> {
        let pieces = pieces.into();
        if pieces.is_empty() {
            return Err(Error::Precondition("step function has no pieces".into()));
        }
        for p in &pieces {
            if p.a.is_negative() {
                return Err(Error::Precondition(format!(
                    "piece ({}, {}] leaves [0, ∞)",
                    p.a, p.b
                )));
            }
            if p.a >= p.b {
                return Err(Error::Precondition(format!("empty piece ({}, {}]", p.a, p.b)));
            }
        }
        Ok(Self { pieces })
    }

    /// `1_{(0,1]}`.
    pub fn indicator() -> Self {
        Self::from_triples(&[(0, 1, 1, 1, 1, 1)])
    }

    fn from_triples(t: &[(i64, i64, i64, i64, i64, i64)]) -> Self {
        Self {
            pieces: t
                .iter()
                .map(|&(an, ad, bn, bd, tn, td)| StepPiece {
                    a: Rational64::new(an, ad),
                    b: Rational64::new(bn, bd),
                    theta: Rational64::new(tn, td),
                })
                .collect(),
        }
    }

    /// Parses lines `a b theta`; blank lines and `#` comments are skipped.
    /// Literals may be integers, fractions `p/q` or decimals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            if toks.len() != 3 {
                return Err(err(format!("expected `a b theta`, found {line:?}")));
            }
            let a = parse_rational(toks[0]).map_err(err)?;
            let b = parse_rational(toks[1]).map_err(err)?;
            let theta = parse_rational(toks[2]).map_err(err)?;
            pieces.push(StepPiece { a, b, theta });
        }
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[StepPiece] {
        &self.pieces
    }

    /// `φ(x)`.
    pub fn eval(&self, x: Rational64) -> Rational64 {
        self.pieces
            .iter()
            .filter(|p| p.a < x && x <= p.b)
            .map(|p| p.theta)
            .sum()
    }

    /// `c · φ`.
    pub fn scaled(&self, c: Rational64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| StepPiece { theta: p.theta * c, ..*p })
                .collect(),
        }
    }

    /// Right end of the support hull.
    pub fn support_end(&self) -> Rational64 {
        self.pieces.iter().map(|p| p.b).max().unwrap_or_else(Rational64::zero)
    }

    fn breakpoints(&self) -> Vec<Rational64> {
        let mut pts: Vec<Rational64> = self.pieces.iter().flat_map(|p| [p.a, p.b]).collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// Total variation `Σ |jumps|`, counting the jumps from and back to zero.
    pub fn total_variation(&self) -> Rational64 {
        let mut prev = Rational64::zero();
        let mut tv = Rational64::zero();
        for &x in &self.breakpoints() {
            // Value just to the right of x.
            let right: Rational64 = self
                .pieces
                .iter()
                .filter(|p| p.a <= x && x < p.b)
                .map(|p| p.theta)
                .sum();
            tv += (right - prev).abs();
            prev = right;
        }
        tv
    }

    /// `sup |φ|`.
    pub fn sup_norm(&self) -> Rational64 {
        self.breakpoints()
            .iter()
            .map(|&x| self.eval(x).abs())
            .max()
            .unwrap_or_else(Rational64::zero)
    }

    /// `Σ_{h ≥ 1} φ(h/H)`.
    pub fn lattice_mass(&self, h: u64) -> Result<Rational64> {
        let d = self.discretize(h)?;
        let total: i64 = d
            .windows
            .iter()
            .zip(&d.weights)
            .map(|(w, &k)| (w.hi - w.lo) as i64 * k)
            .sum();
        Ok(Rational64::new(total, d.denominator))
    }

    /// Converts `φ((u − n)/H)` into integer windows `(⌊aH⌋, ⌊bH⌋]` with
    /// integer weights over a common denominator.
    pub fn discretize(&self, h: u64) -> Result<DiscreteWeights> {
        let hr = Rational64::from_integer(
            i64::try_from(h).map_err(|_| Error::Overflow(format!("H = {h}")))?,
        );
        let denominator = self.pieces.iter().fold(1i64, |l, p| l.lcm(p.theta.denom()));
        let mut windows = Vec::new();
        let mut weights = Vec::new();
        for p in &self.pieces {
            let lo = (p.a * hr).floor().to_integer();
            let hi = (p.b * hr).floor().to_integer();
            let w = (p.theta * denominator)
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::Overflow("step weight".into()))?;
            if lo == hi || w == 0 {
                continue;
            }
            windows.push(Window::new(lo as u64, hi as u64));
            weights.push(w);
        }
        Ok(DiscreteWeights { windows, weights, denominator })
    }
}

impl fmt::Display for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*1({},{}]", p.theta, p.a, p.b)?;
        }
        Ok(())
    }
}

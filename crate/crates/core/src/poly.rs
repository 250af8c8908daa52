//! Exact rate polynomials in `γ` and `1 - γ`.
//!
//! A rate is stored as an integer-coefficient combination of terms
//! `γ^a (1-γ)^b` describing the *total* broadcast rate, together with the
//! user count `K` that normalizes per-user values. The `γ^a (1-γ)^b`
//! family is not linearly independent — `1 = γ + (1-γ)` — so identity
//! checks go through [`RatePolynomial::expanded`], the canonical monomial
//! form in `γ`.

use std::collections::BTreeMap;
use std::fmt;

/// Integer-coefficient polynomial `Σ coeff · γ^a (1-γ)^b`, normalized by a
/// user count for per-user evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatePolynomial {
    terms: BTreeMap<(u32, u32), i64>,
    users: u32,
}

impl RatePolynomial {
    pub fn new(users: u32) -> Self {
        Self {
            terms: BTreeMap::new(),
            users,
        }
    }

    pub fn from_terms(users: u32, terms: &[(u32, u32, i64)]) -> Self {
        let mut poly = Self::new(users);
        for &(a, b, coeff) in terms {
            poly.add_term(a, b, coeff);
        }
        poly
    }

    /// Add `coeff · γ^a (1-γ)^b` to the total rate.
    pub fn add_term(&mut self, a: u32, b: u32, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let entry = self.terms.entry((a, b)).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.terms.remove(&(a, b));
        }
    }

    /// User count used for per-user normalization.
    pub fn users(&self) -> u32 {
        self.users
    }

    pub fn coefficient(&self, a: u32, b: u32) -> i64 {
        self.terms.get(&(a, b)).copied().unwrap_or(0)
    }

    /// Terms in ascending `(a, b)` order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (u32, u32, i64)> + '_ {
        self.terms.iter().map(|(&(a, b), &c)| (a, b, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total rate at `γ = gamma`.
    pub fn eval_total(&self, gamma: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b), &c)| c as f64 * gamma.powi(a as i32) * (1.0 - gamma).powi(b as i32))
            .sum()
    }

    /// Per-user rate at `γ = gamma`; zero for an empty system.
    pub fn eval(&self, gamma: f64) -> f64 {
        if self.users == 0 {
            return 0.0;
        }
        self.eval_total(gamma) / self.users as f64
    }

    /// Canonical monomial coefficients of the total rate: index `j` holds
    /// the exact coefficient of `γ^j`.
    pub fn expanded(&self) -> Vec<i128> {
        let degree = self
            .terms
            .keys()
            .map(|&(a, b)| a + b)
            .max()
            .unwrap_or(0) as usize;
        let mut coeffs = vec![0i128; degree + 1];
        for (&(a, b), &c) in &self.terms {
            // (1-γ)^b = Σ_j C(b, j) (-1)^j γ^j
            for j in 0..=b {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                coeffs[(a + j) as usize] += c as i128 * sign * binomial(b, j);
            }
        }
        coeffs
    }

    /// Exact equality of the per-user rates: cross-normalized comparison of
    /// the expanded forms.
    pub fn same_rate(&self, other: &Self) -> bool {
        let mut lhs = self.expanded();
        let mut rhs = other.expanded();
        let len = lhs.len().max(rhs.len());
        lhs.resize(len, 0);
        rhs.resize(len, 0);
        if self.users == other.users {
            return lhs == rhs;
        }
        lhs.iter()
            .zip(rhs.iter())
            .all(|(&l, &r)| l * other.users as i128 == r * self.users as i128)
    }

    /// Difference of the total rates. Requires matching normalization.
    pub fn minus(&self, other: &Self) -> Self {
        assert_eq!(self.users, other.users, "mismatched normalization");
        let mut out = self.clone();
        for (a, b, c) in other.iter_terms() {
            out.add_term(a, b, -c);
        }
        out
    }

    /// Multiply the total rate by `γ`.
    pub fn times_gamma(&self) -> Self {
        let mut out = Self::new(self.users);
        for (a, b, c) in self.iter_terms() {
            out.add_term(a + 1, b, c);
        }
        out
    }

    /// Sorted `(a,b):coeff` term list.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(&(a, b), &c)| format!("({},{}):{}", a, b, c))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for RatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

fn binomial(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result = 1i128;
    for i in 0..k {
        result = result * (n - i) as i128 / (i + 1) as i128;
    }
    result
}

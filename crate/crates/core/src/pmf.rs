//! Dense joint probability tables and exact Shannon quantities in bits.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on table size: products of alphabet sizes must stay addressable.
pub const MAX_CELLS: usize = 1 << 24;

/// Negative mutual-information values above this magnitude are treated as
/// floating-point noise and clamped to zero.
const MI_CLAMP: f64 = 1e-9;

/// Binary entropy in bits; `p` must lie in `[0, 1]`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { what: "binary entropy argument", value: p });
    }
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// A dense joint distribution over named finite-alphabet variables.
///
/// Probabilities are stored row-major with the **last** variable varying
/// fastest. Construction validates shape, nonnegativity, and normalization,
/// then renormalizes exactly so downstream sums are stable. Deserialization
/// routes through the same validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PmfData")]
pub struct JointPmf {
    names: Vec<String>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct PmfData {
    names: Vec<String>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl TryFrom<PmfData> for JointPmf {
    type Error = Error;

    fn try_from(d: PmfData) -> Result<Self> {
        if d.names.len() != d.cards.len() {
            return Err(Error::InvalidPmf(format!(
                "{} names but {} cardinalities",
                d.names.len(),
                d.cards.len()
            )));
        }
        JointPmf::new(d.names.into_iter().zip(d.cards).collect(), d.probs)
    }
}

impl JointPmf {
    pub fn new(vars: Vec<(String, usize)>, probs: Vec<f64>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::InvalidPmf("no variables".into()));
        }
        let mut cells: usize = 1;
        for (name, card) in &vars {
            if *card == 0 {
                return Err(Error::InvalidPmf(format!("variable {name} has empty alphabet")));
            }
            cells = cells
                .checked_mul(*card)
                .filter(|&c| c <= MAX_CELLS)
                .ok_or_else(|| Error::InvalidPmf(format!("table exceeds {MAX_CELLS} cells")))?;
        }
        let names: Vec<String> = vars.iter().map(|(n, _)| n.clone()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidPmf(format!("duplicate variable name {n}")));
            }
        }
        if probs.len() != cells {
            return Err(Error::InvalidPmf(format!(
                "expected {cells} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidPmf(format!("invalid probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPmf(format!("probabilities sum to {sum}, not 1")));
        }
        let cards = vars.into_iter().map(|(_, c)| c).collect();
        let probs = probs.iter().map(|p| p / sum).collect();
        Ok(JointPmf { names, cards, probs })
    }

    /// Builds a table by evaluating `f` on every joint assignment.
    pub fn from_fn(
        vars: Vec<(String, usize)>,
        f: impl Fn(&[usize]) -> f64,
    ) -> Result<Self> {
        let cards: Vec<usize> = vars.iter().map(|(_, c)| *c).collect();
        let cells: usize = cards.iter().product();
        let mut probs = Vec::with_capacity(cells);
        let mut idx = vec![0usize; cards.len()];
        for _ in 0..cells {
            probs.push(f(&idx));
            for d in (0..cards.len()).rev() {
                idx[d] += 1;
                if idx[d] < cards[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::new(vars, probs)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn card_of(&self, name: &str) -> Result<usize> {
        Ok(self.cards[self.var_index(name)?])
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn group_indices(&self, group: &[&str]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(group.len());
        for name in group {
            let i = self.var_index(name)?;
            if idx.contains(&i) {
                return Err(Error::OverlappingGroups(format!("{name} listed twice")));
            }
            idx.push(i);
        }
        Ok(idx)
    }

    fn check_disjoint(&self, a: &[usize], b: &[usize]) -> Result<()> {
        for i in a {
            if b.contains(i) {
                return Err(Error::OverlappingGroups(self.names[*i].clone()));
            }
        }
        Ok(())
    }

    /// Linear index of a full joint assignment.
    fn ravel(&self, assignment: &[usize]) -> usize {
        let mut lin = 0usize;
        for (d, &v) in assignment.iter().enumerate() {
            lin = lin * self.cards[d] + v;
        }
        lin
    }

    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.probs[self.ravel(assignment)]
    }

    /// Marginal probabilities over the variables at `idx`, laid out with
    /// `idx[0]` slowest. Returns the flat table and its shape.
    fn marginal_table(&self, idx: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let shape: Vec<usize> = idx.iter().map(|&i| self.cards[i]).collect();
        let size: usize = shape.iter().product();
        let mut table = vec![0.0f64; size];
        let n = self.cards.len();
        let mut assignment = vec![0usize; n];
        for &p in &self.probs {
            if p > 0.0 {
                let mut lin = 0usize;
                for (k, &i) in idx.iter().enumerate() {
                    lin = lin * shape[k] + assignment[i];
                }
                table[lin] += p;
            }
            for d in (0..n).rev() {
                assignment[d] += 1;
                if assignment[d] < self.cards[d] {
                    break;
                }
                assignment[d] = 0;
            }
        }
        (table, shape)
    }

    /// Marginal distribution as a standalone table.
    pub fn marginal(&self, group: &[&str]) -> Result<JointPmf> {
        let idx = self.group_indices(group)?;
        if idx.is_empty() {
            return Err(Error::InvalidPmf("marginal over no variables".into()));
        }
        let (table, _) = self.marginal_table(&idx);
        let vars: Vec<(String, usize)> =
            idx.iter().map(|&i| (self.names[i].clone(), self.cards[i])).collect();
        JointPmf::new(vars, table)
    }

    fn entropy_of_indices(&self, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        let (table, _) = self.marginal_table(idx);
        table.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
    }

    /// `H(target | given)` in bits via `H(T ∪ G) − H(G)`.
    pub fn entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        if target.is_empty() {
            return Err(Error::InvalidPmf("entropy target is empty".into()));
        }
        let t = self.group_indices(target)?;
        let g = self.group_indices(given)?;
        self.check_disjoint(&t, &g)?;
        let mut tg = t.clone();
        tg.extend_from_slice(&g);
        Ok(self.entropy_of_indices(&tg) - self.entropy_of_indices(&g))
    }

    /// `I(a ; b | given)` in bits, clamped to zero when floating-point
    /// cancellation produces a tiny negative.
    pub fn mutual_info(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidPmf("mutual information over empty group".into()));
        }
        let ai = self.group_indices(a)?;
        let bi = self.group_indices(b)?;
        let gi = self.group_indices(given)?;
        self.check_disjoint(&ai, &bi)?;
        self.check_disjoint(&ai, &gi)?;
        self.check_disjoint(&bi, &gi)?;
        let join = |xs: &[&[usize]]| -> Vec<usize> {
            let mut v = Vec::new();
            for x in xs {
                v.extend_from_slice(x);
            }
            v
        };
        let mi = self.entropy_of_indices(&join(&[&ai, &gi]))
            + self.entropy_of_indices(&join(&[&bi, &gi]))
            - self.entropy_of_indices(&gi)
            - self.entropy_of_indices(&join(&[&ai, &bi, &gi]));
        if mi < 0.0 && mi >= -MI_CLAMP {
            Ok(0.0)
        } else {
            Ok(mi)
        }
    }

    /// Expected distortion of the best deterministic reconstruction of
    /// `source` from `given`: for each observed tuple the reconstruction
    /// minimizing the posterior expected distortion is chosen.
    pub fn bayes_distortion(
        &self,
        source: &str,
        given: &[&str],
        recon_card: usize,
        d: impl Fn(usize, usize) -> f64,
    ) -> Result<f64> {
        let si = self.var_index(source)?;
        let gi = self.group_indices(given)?;
        self.check_disjoint(&[si], &gi)?;
        let mut idx = vec![si];
        idx.extend_from_slice(&gi);
        let (table, shape) = self.marginal_table(&idx);
        let s_card = shape[0];
        let g_size: usize = shape[1..].iter().product();
        let mut total = 0.0;
        for g in 0..g_size {
            let best = (0..recon_card)
                .map(|xhat| {
                    (0..s_card).map(|x| table[x * g_size + g] * d(x, xhat)).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            total += best;
        }
        Ok(total)
    }

    /// Expected distortion of an explicit decoder mapping each `given`
    /// tuple (indices in the order listed) to a reconstruction symbol.
    pub fn expected_distortion(
        &self,
        source: &str,
        given: &[&str],
        decoder: impl Fn(&[usize]) -> usize,
        d: impl Fn(usize, usize) -> f64,
    ) -> Result<f64> {
        let si = self.var_index(source)?;
        let gi = self.group_indices(given)?;
        self.check_disjoint(&[si], &gi)?;
        let mut idx = vec![si];
        idx.extend_from_slice(&gi);
        let (table, shape) = self.marginal_table(&idx);
        let s_card = shape[0];
        let g_shape = &shape[1..];
        let g_size: usize = g_shape.iter().product();
        let mut total = 0.0;
        let mut g_tuple = vec![0usize; g_shape.len()];
        for g in 0..g_size {
            let xhat = decoder(&g_tuple);
            for x in 0..s_card {
                total += table[x * g_size + g] * d(x, xhat);
            }
            for d in (0..g_shape.len()).rev() {
                g_tuple[d] += 1;
                if g_tuple[d] < g_shape[d] {
                    break;
                }
                g_tuple[d] = 0;
            }
        }
        Ok(total)
    }
}

/// Hamming distortion on symbol indices.
pub fn hamming(x: usize, xhat: usize) -> f64 {
    if x == xhat {
        0.0
    } else {
        1.0
    }
}

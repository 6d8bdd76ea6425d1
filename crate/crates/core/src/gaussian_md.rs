//! Closed-form rate regions for the unit-variance quadratic-Gaussian source.
//!
//! Everything here works in bits. A single decoder that must hit mean-square
//! distortion `d` needs `½·log2(1/d)` bits; the interesting question is the
//! surcharge two or more descriptions pay on top of their individual rates so
//! that joint decoders also hit their targets. For a pair of descriptions the
//! surcharge is [`OzarowPair::delta`], driven by the most favourable negative
//! correlation between the two quantization noises; for three and more
//! descriptions the pair machinery composes into polyhedral inner bounds with
//! explicit corner points and an operating-regime classification.

use serde::{Deserialize, Serialize};

use crate::combinatorics::DescSet;
use crate::error::{Error, Result};
use crate::gaussian::{GaussDef, GaussianSpec, NoiseModel, VarDef};
use crate::polyhedra::{HPolyhedron, LinIneq};
use crate::regions::{shared_subsets, u_name, v_name};

/// Half the width of the band around `d23_star` classified as the exact-region
/// boundary by [`min_sum_rate_regime`].
pub const REGIME_TOL: f64 = 1e-9;

fn check_unit(what: &'static str, d: f64) -> Result<()> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::OutOfRange { what, value: d });
    }
    Ok(())
}

/// `½ log2(1/d)`: the single-description rate for distortion `d`.
pub fn point_rate(d: f64) -> Result<f64> {
    check_unit("distortion", d)?;
    Ok(0.5 * (1.0 / d).log2())
}

/// Quantization-noise variance that leaves distortion `d` on a unit source:
/// `d / (1 - d)`.
pub fn noise_variance(d: f64) -> Result<f64> {
    check_unit("distortion", d)?;
    Ok(d / (1.0 - d))
}

/// Residual error of the best estimate of the source from two additive-noise
/// observations with noise variances `s2a`, `s2b` and noise correlation `rho`.
fn pair_mmse(s2a: f64, s2b: f64, rho: f64) -> f64 {
    let num = s2a * s2b * (1.0 - rho * rho);
    num / (num + s2a + s2b - 2.0 * rho * (s2a * s2b).sqrt())
}

/// Two-description closed form: the tightest noise correlation and the rate
/// surcharge it costs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OzarowPair {
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
    /// Noise variance of description 1, `d1 / (1 - d1)`.
    pub sigma1_sq: f64,
    /// Noise variance of description 2, `d2 / (1 - d2)`.
    pub sigma2_sq: f64,
    /// Product `(1 - d1)(1 - d2)`.
    pub pi: f64,
    /// Discriminant offset; non-negative on the valid domain and exactly zero
    /// at `d12 = d12_max`.
    pub gamma: f64,
    /// Joint distortion already reached by independent noises. For targets at
    /// or above this the correlation stays zero and the surcharge vanishes.
    pub d12_max: f64,
    /// Optimal noise correlation, always in `(-1, 0]`.
    pub rho12_star: f64,
    /// Sum-rate surcharge in bits: `½ log2(1 / (1 - rho12_star²))`.
    pub delta: f64,
}

/// Solves the two-description problem for individual targets `d1`, `d2`
/// and joint target `d12`.
///
/// Requires `0 < d12 <= min(d1, d2) < 1`. The correlation comes out of the
/// quadratic the joint-distortion equation reduces to; when the target is
/// looser than `d12_max` no correlation is needed at all.
pub fn ozarow(d1: f64, d2: f64, d12: f64) -> Result<OzarowPair> {
    check_unit("d1", d1)?;
    check_unit("d2", d2)?;
    check_unit("d12", d12)?;
    if d12 > d1.min(d2) {
        return Err(Error::OrderingViolation(format!(
            "joint target d12={d12} exceeds min(d1, d2)={}",
            d1.min(d2)
        )));
    }
    let pi = (1.0 - d1) * (1.0 - d2);
    let gamma = (1.0 - d12) * ((d1 - d12) * (d2 - d12) + d12 * d1 * d2 - d12 * d12);
    let d12_max = d1 * d2 / (d1 + d2 - d1 * d2);
    let rho12_star = if d12 <= d12_max {
        let disc = pi * d12 * d12 + gamma;
        if disc < -1e-12 {
            return Err(Error::OutOfRange { what: "pair discriminant", value: disc });
        }
        let r = -(disc.max(0.0).sqrt() - (pi * d12 * d12).sqrt()) / ((1.0 - d12) * (d1 * d2).sqrt());
        // Tiny positive values only arise from rounding right at d12_max.
        if r > 0.0 { 0.0 } else { r }
    } else {
        0.0
    };
    if rho12_star <= -1.0 {
        return Err(Error::OutOfRange { what: "noise correlation", value: rho12_star });
    }
    let delta = 0.5 * (1.0 / (1.0 - rho12_star * rho12_star)).log2();
    Ok(OzarowPair {
        d1,
        d2,
        d12,
        sigma1_sq: d1 / (1.0 - d1),
        sigma2_sq: d2 / (1.0 - d2),
        pi,
        gamma,
        d12_max,
        rho12_star,
        delta,
    })
}

/// Sum-rate surcharge `delta(d1, d2, d12)` in bits.
pub fn delta(d1: f64, d2: f64, d12: f64) -> Result<f64> {
    Ok(ozarow(d1, d2, d12)?.delta)
}

/// Joint distortion forced on the pair `(2, 3)` when the pair `(1, 2)` is run
/// at its optimal correlation and description 3 reuses description 1's noise
/// plus independent padding up to variance `d3 / (1 - d3)`.
///
/// Requires `d1 <= d3` so the padding variance is non-negative.
pub fn d23_star(d1: f64, d2: f64, d3: f64, d12: f64) -> Result<f64> {
    check_unit("d3", d3)?;
    if d1 > d3 {
        return Err(Error::OrderingViolation(format!(
            "d1={d1} must not exceed d3={d3}"
        )));
    }
    let oz = ozarow(d1, d2, d12)?;
    let s3_sq = d3 / (1.0 - d3);
    let rho = oz.rho12_star * (oz.sigma1_sq / s3_sq).sqrt();
    Ok(pair_mmse(oz.sigma2_sq, s3_sq, rho))
}

fn ge_row(names: &[&str], coeffs: &[f64], rhs: f64) -> LinIneq {
    debug_assert_eq!(names.len(), coeffs.len());
    LinIneq::from_f64(coeffs, rhs, false)
}

/// Three-description region for the symmetric setup where descriptions 1 and 3
/// are identical (`d3 = d1`, `R3 = R1`): the two-description region of the
/// pair `(1, 2)` with the third coordinate pinned by an equality.
pub fn symmetric_region(d1: f64, d2: f64, d12: f64) -> Result<HPolyhedron> {
    let oz = ozarow(d1, d2, d12)?;
    let a1 = point_rate(d1)?;
    let a2 = point_rate(d2)?;
    let names = vec!["R1".to_string(), "R2".to_string(), "R3".to_string()];
    let ineqs = vec![
        ge_row(&["R1", "R2", "R3"], &[1.0, 0.0, 0.0], a1),
        ge_row(&["R1", "R2", "R3"], &[0.0, 1.0, 0.0], a2),
        ge_row(&["R1", "R2", "R3"], &[1.0, 1.0, 0.0], a1 + a2 + oz.delta),
    ];
    let eqs = vec![LinIneq::from_f64(&[1.0, 0.0, -1.0], 0.0, false)];
    HPolyhedron::new(names, ineqs, eqs)
}

fn constant_zero() -> GaussDef {
    GaussDef::NoiseSum { include_source: false, noises: Vec::new() }
}

/// Full three-description witness for [`symmetric_region`]: descriptions 1 and
/// 3 both carry `X + W1`, description 2 carries `X + W2`, with the noise pair
/// correlated at the optimum. Every codebook variable of the three-description
/// template is present so the witness can instantiate any scheme; the shares
/// and refinements that carry no information are constants or aliases.
pub fn symmetric_witness(d1: f64, d2: f64, d12: f64) -> Result<GaussianSpec> {
    let oz = ozarow(d1, d2, d12)?;
    let s1 = oz.sigma1_sq.sqrt();
    let s2 = oz.sigma2_sq.sqrt();
    let c12 = oz.rho12_star * s1 * s2;
    let noise = NoiseModel {
        names: vec!["W1".to_string(), "W2".to_string()],
        cov: vec![vec![oz.sigma1_sq, c12], vec![c12, oz.sigma2_sq]],
    };
    let l = 3;
    let set = |s: &str| DescSet::parse(l, s).expect("literal subset");
    let mut vars = Vec::new();
    for k in shared_subsets(l) {
        let def = if k == set("13") {
            GaussDef::NoiseSum { include_source: true, noises: vec!["W1".to_string()] }
        } else {
            constant_zero()
        };
        vars.push(VarDef { name: v_name(&k), def });
    }
    let alias = |of: &str| GaussDef::Alias { of: of.to_string() };
    vars.push(VarDef { name: u_name(&set("1")), def: alias("V13") });
    vars.push(VarDef {
        name: u_name(&set("2")),
        def: GaussDef::NoiseSum { include_source: true, noises: vec!["W2".to_string()] },
    });
    vars.push(VarDef { name: u_name(&set("3")), def: alias("V13") });
    vars.push(VarDef {
        name: u_name(&set("12")),
        def: GaussDef::CondMean { of: vec!["V13".to_string(), "U2".to_string()] },
    });
    vars.push(VarDef { name: u_name(&set("13")), def: alias("V13") });
    vars.push(VarDef { name: u_name(&set("23")), def: alias("U12") });
    vars.push(VarDef { name: u_name(&set("123")), def: alias("U12") });
    Ok(GaussianSpec { noise, vars })
}

/// Three-description inner-bound region evaluated at the canonical operating
/// point `d23 = d23_star`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreeDescRegion {
    pub d: [f64; 3],
    pub d12: f64,
    /// Pair `(2, 3)` distortion forced by the construction.
    pub d23: f64,
    pub delta12: f64,
    pub delta23: f64,
    pub region: HPolyhedron,
}

/// Builds the three-description region: individual rate bounds plus pair
/// surcharges on `(1, 2)` and `(2, 3)`, the latter at `d23 = d23_star`.
///
/// Requires `d1 <= d3` (description 3 is the coarser replica of 1).
pub fn three_description_region(d1: f64, d2: f64, d3: f64, d12: f64) -> Result<ThreeDescRegion> {
    let d23 = d23_star(d1, d2, d3, d12)?;
    let delta12 = delta(d1, d2, d12)?;
    let delta23 = delta(d2, d3, d23)?;
    let a1 = point_rate(d1)?;
    let a2 = point_rate(d2)?;
    let a3 = point_rate(d3)?;
    let names: Vec<String> = (1..=3).map(|i| format!("R{i}")).collect();
    let ns: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let ineqs = vec![
        ge_row(&ns, &[1.0, 0.0, 0.0], a1),
        ge_row(&ns, &[0.0, 1.0, 0.0], a2),
        ge_row(&ns, &[0.0, 0.0, 1.0], a3),
        ge_row(&ns, &[1.0, 1.0, 0.0], a1 + a2 + delta12),
        ge_row(&ns, &[0.0, 1.0, 1.0], a2 + a3 + delta23),
    ];
    let region = HPolyhedron::new(names, ineqs, Vec::new())?;
    Ok(ThreeDescRegion { d: [d1, d2, d3], d12, d23, delta12, delta23, region })
}

/// A corner of the three-description region together with the split-rate
/// assignment that achieves it.
///
/// `rates = (rp1 + rs13, rp2, rs13)`: description 3 carries only the share
/// `rs13`, description 1 adds a private part on top of the same share, and
/// description 2 is entirely private.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CornerPoint {
    pub label: String,
    pub rates: [f64; 3],
    /// Rate of the share carried by descriptions 1 and 3.
    pub rs13: f64,
    /// Private rate of description 1.
    pub rp1: f64,
    /// Private rate of description 2.
    pub rp2: f64,
}

/// Corner of the three-description region reached by minimizing the rates
/// greedily in the priority order named by `label` (a permutation of "123").
///
/// Distinct priority orders can land on the same point; the six labels cover
/// three geometric vertices when `delta12 >= delta23`.
pub fn three_description_corner(
    label: &str,
    d1: f64,
    d2: f64,
    d3: f64,
    d12: f64,
) -> Result<CornerPoint> {
    let t = three_description_region(d1, d2, d3, d12)?;
    let (a1, a2, a3) = (point_rate(d1)?, point_rate(d2)?, point_rate(d3)?);
    let (dl2, dl3) = (t.delta12, t.delta23);
    let pos = |x: f64| x.max(0.0);
    let (rs13, rp1, rp2) = match label {
        "123" => {
            let rs = a3 + pos(dl3 - dl2);
            (rs, a1 - rs, a2 + dl2)
        }
        "132" | "312" => (a3, a1 - a3, a2 + dl2.max(dl3)),
        "213" | "231" => (a3 + dl3, a1 + dl2 - a3 - dl3, a2),
        "321" => (a3, a1 - a3 + pos(dl2 - dl3), a2 + dl3),
        other => return Err(Error::UnknownCorner(other.to_string())),
    };
    Ok(CornerPoint {
        label: label.to_string(),
        rates: [rp1 + rs13, rp2, rs13],
        rs13,
        rp1,
        rp2,
    })
}

/// How the inner bound at a `(d12, d23)` operating point relates to the full
/// achievable region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `d23` sits on the critical curve: the whole region is known.
    CompleteRegion,
    /// The minimum sum rate is known even though the full region may not be.
    MinSumRate,
    /// Neither guarantee applies.
    Unknown,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::CompleteRegion => "complete_region",
            Regime::MinSumRate => "min_sum_rate",
            Regime::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// Classifies the `(d12, d23)` operating point.
///
/// The critical curve `d23 = d23_star` (within [`REGIME_TOL`]) wins over the
/// other tests. Away from it the minimum sum rate is settled when `d23` is
/// looser than the forced value, or when the `(2, 3)` surcharge at the actual
/// `d23` already dominates the `(1, 2)` surcharge (boundary included).
pub fn min_sum_rate_regime(d1: f64, d2: f64, d3: f64, d12: f64, d23: f64) -> Result<Regime> {
    let crit = d23_star(d1, d2, d3, d12)?;
    if (d23 - crit).abs() <= REGIME_TOL {
        return Ok(Regime::CompleteRegion);
    }
    if d23 >= crit {
        return Ok(Regime::MinSumRate);
    }
    if delta(d2, d3, d23)? >= delta(d1, d2, d12)? {
        return Ok(Regime::MinSumRate);
    }
    Ok(Regime::Unknown)
}

/// One cell of a regime map.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeRow {
    pub d12: f64,
    pub d23: f64,
    pub regime: Regime,
    /// `½ log2(1/(d1 d2 d3)) + max(delta12, delta23)`.
    pub sum_rate_lb: f64,
    /// Best sum rate of the construction family. Matches `sum_rate_lb` when
    /// the regime settles the minimum; otherwise the single correlation knob
    /// must serve both pairs at once, and the entry is `NaN` when even that
    /// is infeasible.
    pub cms_sum_rate: f64,
}

fn regime_cell(d1: f64, d2: f64, d3: f64, d12: f64, d23: f64) -> Result<RegimeRow> {
    let regime = min_sum_rate_regime(d1, d2, d3, d12, d23)?;
    let oz12 = ozarow(d1, d2, d12)?;
    let oz23 = ozarow(d2, d3, d23)?;
    let base = 0.5 * (1.0 / (d1 * d2 * d3)).log2();
    let sum_rate_lb = base + oz12.delta.max(oz23.delta);
    let cms_sum_rate = match regime {
        Regime::CompleteRegion | Regime::MinSumRate => sum_rate_lb,
        Regime::Unknown => {
            let s1_sq = d1 / (1.0 - d1);
            let s3_sq = d3 / (1.0 - d3);
            let knob = oz12
                .rho12_star
                .abs()
                .max(oz23.rho12_star.abs() * (s3_sq / s1_sq).sqrt());
            if knob < 1.0 {
                base + 0.5 * (1.0 / (1.0 - knob * knob)).log2()
            } else {
                f64::NAN
            }
        }
    };
    Ok(RegimeRow { d12, d23, regime, sum_rate_lb, cms_sum_rate })
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn regime_cells(
    d1: f64,
    d2: f64,
    d3: f64,
    d12_range: (f64, f64, usize),
    d23_range: (f64, f64, usize),
) -> Result<Vec<(f64, f64)>> {
    for (label, (lo, hi, n), cap) in [
        ("d12", d12_range, d1.min(d2)),
        ("d23", d23_range, d2.min(d3)),
    ] {
        if n == 0 {
            return Err(Error::Invalid(format!("{label} grid needs at least one point")));
        }
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Invalid(format!("{label} range [{lo}, {hi}] is not increasing and positive")));
        }
        if hi > cap {
            return Err(Error::OrderingViolation(format!(
                "{label} upper end {hi} exceeds the pairwise minimum {cap}"
            )));
        }
    }
    let d12s = grid(d12_range.0, d12_range.1, d12_range.2);
    let d23s = grid(d23_range.0, d23_range.1, d23_range.2);
    let mut cells = Vec::with_capacity(d12s.len() * d23s.len());
    for &a in &d12s {
        for &b in &d23s {
            cells.push((a, b));
        }
    }
    Ok(cells)
}

/// Classifies a full grid of `(d12, d23)` operating points, fanned out over
/// the worker pool. Rows come back in row-major order (`d12` outer, `d23`
/// inner); each axis is `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn regime_map(
    d1: f64,
    d2: f64,
    d3: f64,
    d12_range: (f64, f64, usize),
    d23_range: (f64, f64, usize),
) -> Result<Vec<RegimeRow>> {
    let cells = regime_cells(d1, d2, d3, d12_range, d23_range)?;
    crate::par::map_collect(cells, |(a, b)| regime_cell(d1, d2, d3, a, b))
        .into_iter()
        .collect()
}

/// Sequential twin of [`regime_map`]; produces identical rows.
pub fn regime_map_seq(
    d1: f64,
    d2: f64,
    d3: f64,
    d12_range: (f64, f64, usize),
    d23_range: (f64, f64, usize),
) -> Result<Vec<RegimeRow>> {
    let cells = regime_cells(d1, d2, d3, d12_range, d23_range)?;
    cells
        .into_iter()
        .map(|(a, b)| regime_cell(d1, d2, d3, a, b))
        .collect()
}

/// Many-description chain region: description 1 pairs off against each of
/// `2..=L`, whose codebooks form a degraded chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainRegion {
    pub l: usize,
    pub d: Vec<f64>,
    /// Joint target for the extreme pair `(1, L)` that pins the knob.
    pub d_1l: f64,
    /// Optimal noise correlation for the extreme pair.
    pub rho_1l: f64,
    /// Correlation between the two physical noises; every other pair inherits
    /// a scaled copy through the chain.
    pub rho_knob: f64,
    /// Joint distortions `d_1i` forced on pairs `(1, i)`, `i = 2..=L`.
    pub forced: Vec<f64>,
    /// Pair surcharges `delta_1i`, `i = 2..=L`.
    pub deltas: Vec<f64>,
    pub region: HPolyhedron,
}

/// Builds the chain region for `L = d.len()` descriptions.
///
/// `d` lists the individual targets `d1..dL` and must satisfy
/// `d2 <= d3 <= ... <= dL` so each chain step only adds noise. The pair
/// `(1, L)` is driven to `d_1l`, which fixes the correlation knob; pairs
/// `(1, i)` for `i < L` then come out at the `forced` values.
pub fn chain_region(d: &[f64], d_1l: f64) -> Result<ChainRegion> {
    let l = d.len();
    if l < 2 {
        return Err(Error::WrongL { expected: 2, got: l });
    }
    for &di in d {
        check_unit("distortion", di)?;
    }
    for w in d[1..].windows(2) {
        if w[0] > w[1] {
            return Err(Error::OrderingViolation(format!(
                "chain targets must be sorted: {} > {}",
                w[0], w[1]
            )));
        }
    }
    let oz = ozarow(d[0], d[l - 1], d_1l)?;
    let rho_1l = oz.rho12_star;
    let s: Vec<f64> = d.iter().map(|&di| (di / (1.0 - di)).sqrt()).collect();
    let rho_knob = rho_1l * s[l - 1] / s[1];
    if rho_knob.abs() >= 1.0 {
        return Err(Error::OutOfRange { what: "correlation knob", value: rho_knob });
    }
    let mut forced = Vec::with_capacity(l - 1);
    let mut deltas = Vec::with_capacity(l - 1);
    for i in 1..l {
        let rho_1i = rho_1l * s[l - 1] / s[i];
        forced.push(pair_mmse(s[0] * s[0], s[i] * s[i], rho_1i));
        deltas.push(0.5 * (1.0 / (1.0 - rho_1i * rho_1i)).log2());
    }
    if (forced[l - 2] - d_1l).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "chain closure drifted: pair (1, {l}) reproduces {} instead of {d_1l}",
            forced[l - 2]
        )));
    }
    let names: Vec<String> = (1..=l).map(|i| format!("R{i}")).collect();
    let ns: Vec<&str> = names.iter().map(|x| x.as_str()).collect();
    let a: Vec<f64> = d.iter().map(|&di| 0.5 * (1.0 / di).log2()).collect();
    let mut ineqs = Vec::new();
    for i in 0..l {
        let mut row = vec![0.0; l];
        row[i] = 1.0;
        ineqs.push(ge_row(&ns, &row, a[i]));
    }
    for i in 1..l {
        let mut row = vec![0.0; l];
        row[0] = 1.0;
        row[i] = 1.0;
        ineqs.push(ge_row(&ns, &row, a[0] + a[i] + deltas[i - 1]));
    }
    let region = HPolyhedron::new(names, ineqs, Vec::new())?;
    Ok(ChainRegion {
        l,
        d: d.to_vec(),
        d_1l,
        rho_1l,
        rho_knob,
        forced,
        deltas,
        region,
    })
}

/// Sum-rate excess of running two unshared descriptions at targets
/// `(d1, d2)`: `½ log2(1 / (1 - (1 - d1)(1 - d2)))` bits. Always positive,
/// because unshared codebooks cannot decorrelate.
pub fn unshared_excess(d1: f64, d2: f64) -> Result<f64> {
    check_unit("d1", d1)?;
    check_unit("d2", d2)?;
    Ok(0.5 * (1.0 / (1.0 - (1.0 - d1) * (1.0 - d2))).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianSystem;

    const SAMPLES: &[(f64, f64, f64)] = &[
        (0.1, 0.15, 0.05),
        (0.05, 0.3, 0.04),
        (0.2, 0.2, 0.1),
        (0.35, 0.12, 0.08),
        (0.5, 0.45, 0.2),
    ];

    #[test]
    fn ozarow_matches_frozen_values() {
        let oz = ozarow(0.1, 0.15, 0.05).unwrap();
        assert!((oz.pi - 0.765).abs() < 1e-12);
        assert!((oz.gamma - 0.0030875).abs() < 1e-12);
        assert!((oz.d12_max - 0.06382978723404255).abs() < 1e-12);
        assert!((oz.rho12_star - -0.23187247132892974).abs() < 1e-12);
        assert!((oz.delta - 0.03986466510348105).abs() < 1e-12);
    }

    #[test]
    fn rho_star_agrees_with_bisection_on_the_distortion_equation() {
        // Independent check: rho* is the loosest non-positive correlation whose
        // joint error meets d12, found here by bisection on pair_mmse.
        for &(d1, d2, d12) in SAMPLES {
            let oz = ozarow(d1, d2, d12).unwrap();
            let (s1, s2) = (oz.sigma1_sq, oz.sigma2_sq);
            if d12 >= oz.d12_max {
                assert_eq!(oz.rho12_star, 0.0);
                continue;
            }
            let (mut lo, mut hi) = (-1.0 + 1e-12, 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if pair_mmse(s1, s2, mid) <= d12 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!(
                (lo - oz.rho12_star).abs() < 1e-9,
                "bisection {lo} vs closed form {} at {d1},{d2},{d12}",
                oz.rho12_star
            );
        }
    }

    #[test]
    fn gamma_and_rho_vanish_at_the_independence_threshold() {
        for &(d1, d2, _) in SAMPLES {
            let cap = d1 * d2 / (d1 + d2 - d1 * d2);
            let oz = ozarow(d1, d2, cap).unwrap();
            assert!(oz.gamma.abs() < 1e-10, "gamma {}", oz.gamma);
            assert!(oz.rho12_star.abs() < 1e-10, "rho {}", oz.rho12_star);
            assert!(oz.delta.abs() < 1e-10);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(ozarow(0.0, 0.5, 0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(ozarow(0.5, 1.0, 0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(ozarow(0.2, 0.5, 0.3), Err(Error::OrderingViolation(_))));
        assert!(matches!(d23_star(0.3, 0.2, 0.1, 0.1), Err(Error::OrderingViolation(_))));
        assert!(matches!(
            three_description_corner("111", 0.1, 0.15, 0.2, 0.05),
            Err(Error::UnknownCorner(_))
        ));
    }

    #[test]
    fn d23_star_matches_witness_conditional_variance() {
        // The forced pair distortion must equal Var(X | U2, V13) in the system
        // where V13 = X + W1 + W3pad and the (W1, W2) pair is optimally
        // correlated.
        for &(d1, d2, d12) in SAMPLES {
            let d3 = (d1 + 0.2).min(0.9);
            let want = d23_star(d1, d2, d3, d12).unwrap();
            let oz = ozarow(d1, d2, d12).unwrap();
            let s3_sq = d3 / (1.0 - d3);
            let c12 = oz.rho12_star * (oz.sigma1_sq * oz.sigma2_sq).sqrt();
            let spec = GaussianSpec {
                noise: NoiseModel {
                    names: vec!["W1".into(), "W2".into(), "W3".into()],
                    cov: vec![
                        vec![oz.sigma1_sq, c12, 0.0],
                        vec![c12, oz.sigma2_sq, 0.0],
                        vec![0.0, 0.0, s3_sq - oz.sigma1_sq],
                    ],
                },
                vars: vec![
                    VarDef {
                        name: "V13".into(),
                        def: GaussDef::NoiseSum {
                            include_source: true,
                            noises: vec!["W1".into(), "W3".into()],
                        },
                    },
                    VarDef {
                        name: "U2".into(),
                        def: GaussDef::NoiseSum {
                            include_source: true,
                            noises: vec!["W2".into()],
                        },
                    },
                ],
            };
            let sys = GaussianSystem::resolve(&spec).unwrap();
            let got = sys.cond_variance("X", &["U2", "V13"]).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn d23_star_correlation_consistency() {
        // Solving the pair (2, 3) problem at the forced distortion recovers the
        // scaled knob, so the same physical correlation serves both pairs.
        for &(d1, d2, d12) in SAMPLES {
            let d3 = (d1 + 0.2).min(0.9);
            let crit = d23_star(d1, d2, d3, d12).unwrap();
            let oz12 = ozarow(d1, d2, d12).unwrap();
            let oz23 = ozarow(d2, d3, crit).unwrap();
            let s3_sq = d3 / (1.0 - d3);
            let scaled = oz12.rho12_star * (oz12.sigma1_sq / s3_sq).sqrt();
            assert!(
                (oz23.rho12_star - scaled).abs() < 1e-9,
                "{} vs {}",
                oz23.rho12_star,
                scaled
            );
        }
    }

    #[test]
    fn symmetric_witness_hits_all_decoder_targets() {
        let (d1, d2, d12) = (0.1, 0.15, 0.05);
        let sys = GaussianSystem::resolve(&symmetric_witness(d1, d2, d12).unwrap()).unwrap();
        let check = |given: &[&str], want: f64| {
            let got = sys.cond_variance("X", given).unwrap();
            assert!((got - want).abs() < 1e-12, "{given:?}: {got} vs {want}");
        };
        check(&["V13"], d1);
        check(&["U2"], d2);
        check(&["V13", "U2"], d12);
        check(&["V13", "U1", "U3", "U13"], d1);
        check(&["V13", "U2", "U12", "U23", "U123"], d12);
        check(&["V12", "V23", "V123", "U2"], d2);
    }

    #[test]
    fn three_description_vertices_match_corners() {
        let (d1, d2, d3, d12) = (0.1, 0.15, 0.2, 0.05);
        let t = three_description_region(d1, d2, d3, d12).unwrap();
        assert!((t.d23 - 0.0805720235617207).abs() < 1e-12);
        assert!((t.delta23 - 0.017446232718140987).abs() < 1e-12);
        let vs = t.region.vertices().unwrap();
        let mut want: Vec<[f64; 3]> = Vec::new();
        for label in ["123", "132", "213", "231", "312", "321"] {
            let c = three_description_corner(label, d1, d2, d3, d12).unwrap();
            assert!(c.rs13 >= 0.0 && c.rp1 >= 0.0 && c.rp2 >= 0.0, "{label} split negative");
            assert!(
                t.region.contains_point(&c.rates, 1e-9),
                "{label} corner outside region"
            );
            if !want.iter().any(|w| {
                w.iter().zip(c.rates.iter()).all(|(x, y)| (x - y).abs() < 1e-8)
            }) {
                want.push(c.rates);
            }
        }
        assert_eq!(want.len(), 3, "expected three distinct corner values");
        assert_eq!(vs.vertices.len(), 3);
        for v in &vs.vertices {
            assert!(
                want.iter().any(|w| {
                    w.iter().zip(v.iter()).all(|(x, y)| (x - y).abs() < 1e-8)
                }),
                "vertex {v:?} not among corner points"
            );
        }
    }

    #[test]
    fn corner_splits_satisfy_the_share_system() {
        // Every corner's (rs13, rp1, rp2) must satisfy the five share-level
        // bounds the corners were derived from.
        let (d1, d2, d3, d12) = (0.1, 0.15, 0.2, 0.05);
        let t = three_description_region(d1, d2, d3, d12).unwrap();
        let (a1, a2, a3) = (
            point_rate(d1).unwrap(),
            point_rate(d2).unwrap(),
            point_rate(d3).unwrap(),
        );
        for label in ["123", "132", "213", "231", "312", "321"] {
            let c = three_description_corner(label, d1, d2, d3, d12).unwrap();
            let eps = 1e-12;
            assert!(c.rs13 >= a3 - eps);
            assert!(c.rp2 >= a2 - eps);
            assert!(c.rp1 + c.rs13 >= a1 - eps);
            assert!(c.rp2 + c.rs13 >= a2 + a3 + t.delta23 - eps);
            assert!(c.rp1 + c.rp2 + c.rs13 >= a1 + a2 + t.delta12 - eps);
            assert!((c.rates[0] - (c.rp1 + c.rs13)).abs() < eps);
            assert!((c.rates[1] - c.rp2).abs() < eps);
            assert!((c.rates[2] - c.rs13).abs() < eps);
        }
    }

    #[test]
    fn chain_region_matches_three_description_region_after_relabeling() {
        // With L = 3 the chain setup is the three-description one with the
        // first two descriptions swapped.
        let (d1, d2, d3, d12) = (0.1, 0.15, 0.2, 0.05);
        let t = three_description_region(d1, d2, d3, d12).unwrap();
        let chain = chain_region(&[d2, d1, d3], t.d23).unwrap();
        assert!((chain.rho_knob - ozarow(d1, d2, d12).unwrap().rho12_star).abs() < 1e-9);
        assert!((chain.forced[0] - d12).abs() < 1e-9);
        // Relabel the chain region back: swap R1 and R2 columns.
        let perm = HPolyhedron::new(
            chain.region.names.clone(),
            chain
                .region
                .ineqs
                .iter()
                .map(|r| {
                    let mut c = r.coeffs_f64();
                    c.swap(0, 1);
                    LinIneq::from_f64(&c, r.rhs, r.strict)
                })
                .collect(),
            Vec::new(),
        )
        .unwrap();
        assert!(perm.contains(&t.region, 1e-9).unwrap());
        assert!(t.region.contains(&perm, 1e-9).unwrap());
    }

    #[test]
    fn chain_region_rejects_bad_inputs() {
        assert!(matches!(
            chain_region(&[0.1], 0.05),
            Err(Error::WrongL { .. })
        ));
        assert!(matches!(
            chain_region(&[0.1, 0.3, 0.2], 0.05),
            Err(Error::OrderingViolation(_))
        ));
    }

    #[test]
    fn regime_classification_rules() {
        let (d1, d2, d3, d12) = (0.1, 0.15, 0.2, 0.05);
        let crit = d23_star(d1, d2, d3, d12).unwrap();
        assert_eq!(
            min_sum_rate_regime(d1, d2, d3, d12, crit).unwrap(),
            Regime::CompleteRegion
        );
        assert_eq!(
            min_sum_rate_regime(d1, d2, d3, d12, crit + 0.01).unwrap(),
            Regime::MinSumRate
        );
        // Well below the curve the (2,3) surcharge takes over eventually.
        assert_eq!(
            min_sum_rate_regime(d1, d2, d3, d12, 0.02).unwrap(),
            Regime::MinSumRate
        );
        // Just below the curve neither test fires.
        assert_eq!(
            min_sum_rate_regime(d1, d2, d3, d12, crit - 0.005).unwrap(),
            Regime::Unknown
        );
    }

    #[test]
    fn regime_map_matches_sequential_twin() {
        let rows = regime_map(0.1, 0.15, 0.2, (0.02, 0.06, 7), (0.02, 0.14, 9)).unwrap();
        let seq = regime_map_seq(0.1, 0.15, 0.2, (0.02, 0.06, 7), (0.02, 0.14, 9)).unwrap();
        assert_eq!(rows.len(), 63);
        assert_eq!(seq.len(), rows.len());
        for (a, b) in rows.iter().zip(seq.iter()) {
            assert_eq!(a.d12, b.d12);
            assert_eq!(a.d23, b.d23);
            assert_eq!(a.regime, b.regime);
            assert_eq!(a.sum_rate_lb.to_bits(), b.sum_rate_lb.to_bits());
            assert_eq!(a.cms_sum_rate.to_bits(), b.cms_sum_rate.to_bits());
        }
        for r in &rows {
            match r.regime {
                Regime::Unknown => assert!(
                    r.cms_sum_rate.is_nan() || r.cms_sum_rate >= r.sum_rate_lb - 1e-12
                ),
                _ => assert_eq!(r.cms_sum_rate.to_bits(), r.sum_rate_lb.to_bits()),
            }
        }
    }

    #[test]
    fn regime_map_rejects_bad_grids() {
        assert!(regime_map(0.1, 0.15, 0.2, (0.02, 0.12, 5), (0.02, 0.1, 5)).is_err());
        assert!(regime_map(0.1, 0.15, 0.2, (0.0, 0.05, 5), (0.02, 0.1, 5)).is_err());
        assert!(regime_map(0.1, 0.15, 0.2, (0.02, 0.05, 0), (0.02, 0.1, 5)).is_err());
    }

    #[test]
    fn unshared_excess_frozen_and_positive() {
        let v = unshared_excess(0.3, 0.4).unwrap();
        assert!((v - 0.39293759732357625).abs() < 1e-12);
        for &(d1, d2, _) in SAMPLES {
            assert!(unshared_excess(d1, d2).unwrap() > 0.0);
        }
        // Tighter targets cost more.
        assert!(unshared_excess(0.1, 0.4).unwrap() > unshared_excess(0.3, 0.4).unwrap());
    }

    #[test]
    fn symmetric_region_has_pinned_third_rate() {
        let region = symmetric_region(0.1, 0.15, 0.05).unwrap();
        let vs = region.vertices().unwrap();
        assert!(!vs.vertices.is_empty());
        for v in &vs.vertices {
            assert!((v[0] - v[2]).abs() < 1e-9, "R3 must track R1: {v:?}");
        }
        let a1 = point_rate(0.1).unwrap();
        let a2 = point_rate(0.15).unwrap();
        let delta = delta(0.1, 0.15, 0.05).unwrap();
        assert!(region.contains_point(&[a1 + delta, a2 + delta, a1 + delta], 1e-9));
        assert!(!region.contains_point(&[a1, a2, a1], 1e-9));
    }
}

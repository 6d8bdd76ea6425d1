//! Rate-constraint systems for multiple-description schemes, evaluated
//! against a concrete auxiliary-variable witness.
//!
//! A witness names its variables `X`, `V<digits>` (shared codewords over a
//! description subset, cardinality at least two) and `U<digits>` (per-subset
//! codewords). Every constraint constant is a single signed combination of
//! conditional entropies, so deterministic witnesses (aliases, conditional
//! means, constants) evaluate exactly through the rank-aware Gaussian path
//! and the plain discrete path alike.

use crate::combinatorics::{enumerate_qstar, DescSet, QFamily};
use crate::error::{Error, Result};
use crate::gaussian::{EntropyTerm, GaussianSystem};
use crate::pmf::{hamming, JointPmf};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Name of the shared codeword for subset `k`.
pub fn v_name(k: &DescSet) -> String {
    format!("V{}", k.digits())
}

/// Name of the per-subset codeword for subset `k`.
pub fn u_name(k: &DescSet) -> String {
    format!("U{}", k.digits())
}

/// A rate coordinate: a description rate, a private (per-description)
/// component, or a shared component replicated in every description of a
/// subset. Text forms are `R3`, `Rp3`, `Rs13`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum RateVariable {
    Total(u8),
    Private(u8),
    Shared(u16),
}

impl RateVariable {
    pub fn shared(k: &DescSet) -> Self {
        RateVariable::Shared(k.bits())
    }

}

fn bits_digits(bits: u16) -> String {
    (1..=16)
        .filter(|i| bits & (1 << (i - 1)) != 0)
        .map(|i| {
            if i <= 9 {
                (b'0' + i as u8) as char
            } else {
                (b'a' + (i - 10) as u8) as char
            }
        })
        .collect()
}

impl fmt::Display for RateVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateVariable::Total(l) => write!(f, "R{l}"),
            RateVariable::Private(l) => write!(f, "Rp{l}"),
            RateVariable::Shared(bits) => write!(f, "Rs{}", bits_digits(*bits)),
        }
    }
}

impl FromStr for RateVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_idx = |t: &str| -> Result<u8> {
            t.parse::<u8>()
                .ok()
                .filter(|&l| l >= 1 && l <= 16)
                .ok_or_else(|| Error::Invalid(format!("bad rate variable {s:?}")))
        };
        if let Some(t) = s.strip_prefix("Rs") {
            let k = DescSet::parse(16, t)?;
            if k.card() < 2 {
                return Err(Error::Invalid(format!(
                    "shared rate {s:?} needs at least two descriptions"
                )));
            }
            Ok(RateVariable::Shared(k.bits()))
        } else if let Some(t) = s.strip_prefix("Rp") {
            Ok(RateVariable::Private(parse_idx(t)?))
        } else if let Some(t) = s.strip_prefix('R') {
            Ok(RateVariable::Total(parse_idx(t)?))
        } else {
            Err(Error::Invalid(format!("bad rate variable {s:?}")))
        }
    }
}

impl Serialize for RateVariable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RateVariable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One linear condition `Σ coeffs·vars {>=,>,=} rhs`. Coefficients align
/// with the owning [`ConstraintSet`]'s variable list and are exact small
/// integers stored in `f64`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    /// Strict inequalities arise from the random-coding analysis; all
    /// polyhedral computations treat them as closed (the closure of the
    /// region is identical).
    pub strict: bool,
    pub label: String,
}

/// A full constraint system over the rate coordinates of one scheme.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub l: usize,
    pub vars: Vec<RateVariable>,
    /// Inequalities, each `coeffs · vars >= rhs` (possibly strict).
    pub constraints: Vec<RateConstraint>,
    /// Equalities, each `coeffs · vars = rhs`.
    pub equalities: Vec<RateConstraint>,
}

impl ConstraintSet {
    pub fn var_index(&self, v: &RateVariable) -> usize {
        self.vars.iter().position(|x| x == v).expect("variable present")
    }

    fn row(&self, terms: &[(RateVariable, f64)], rhs: f64, strict: bool, label: &str) -> RateConstraint {
        let mut coeffs = vec![0.0; self.vars.len()];
        for (v, c) in terms {
            coeffs[self.var_index(v)] += c;
        }
        RateConstraint { coeffs, rhs, strict, label: label.to_string() }
    }

    /// Checks a full assignment (aligned with `vars`) against every row.
    /// Strict rows are evaluated closed, matching the polyhedral view.
    pub fn satisfied(&self, point: &[f64], tol: f64) -> bool {
        assert_eq!(point.len(), self.vars.len());
        let dot = |c: &RateConstraint| -> f64 {
            c.coeffs.iter().zip(point).map(|(a, x)| a * x).sum()
        };
        self.constraints.iter().all(|c| dot(c) >= c.rhs - tol)
            && self.equalities.iter().all(|c| (dot(c) - c.rhs).abs() <= tol)
    }
}

/// The auxiliary-variable joint law a scheme is evaluated on.
pub enum Witness {
    Discrete(JointPmf),
    Gaussian(GaussianSystem),
}

impl Witness {
    /// Signed sum of conditional entropies, in bits. The Gaussian path
    /// requires the degenerate dimensions to cancel across the terms.
    pub fn entropy_combination(&self, terms: &[EntropyTerm]) -> Result<f64> {
        match self {
            Witness::Discrete(pmf) => {
                let mut acc = 0.0;
                for t in terms {
                    let target: Vec<&str> = t.target.iter().map(String::as_str).collect();
                    let given: Vec<&str> = t.given.iter().map(String::as_str).collect();
                    acc += t.sign as f64 * pmf.entropy(&target, &given)?;
                }
                Ok(acc)
            }
            Witness::Gaussian(sys) => sys.entropy_combination(terms),
        }
    }

    /// `I(a ; b | c)` as an entropy combination (degenerate-safe), clamped
    /// at zero against floating-point cancellation.
    pub fn mutual_info(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let mut bc: Vec<&str> = b.to_vec();
        bc.extend_from_slice(c);
        let v = self.entropy_combination(&[
            EntropyTerm::new(1, a, c),
            EntropyTerm::new(-1, a, &bc),
        ])?;
        Ok(if v < 0.0 && v >= -1e-9 { 0.0 } else { v })
    }
}

fn v_names_of(sets: impl IntoIterator<Item = DescSet>) -> Vec<String> {
    sets.into_iter().map(|k| v_name(&k)).collect()
}

/// All shared-codeword subsets for `l` descriptions (cardinality >= 2),
/// canonical order.
pub fn shared_subsets(l: usize) -> Vec<DescSet> {
    let mut v: Vec<DescSet> = (1u32..(1 << l))
        .map(|b| DescSet::from_bits(l, b as u16))
        .filter(|k| k.card() >= 2)
        .collect();
    v.sort_by_key(|k| k.canonical_key());
    v
}

/// All nonempty subsets in canonical order.
pub fn nonempty_subsets(l: usize) -> Vec<DescSet> {
    let mut v: Vec<DescSet> =
        (1u32..(1 << l)).map(|b| DescSet::from_bits(l, b as u16)).collect();
    v.sort_by_key(|k| k.canonical_key());
    v
}

/// Strict supersets of `k` within `{1..l}`, canonical order.
fn strict_superset_names(k: &DescSet) -> Vec<String> {
    let l = k.l();
    let mut sets: Vec<DescSet> = (1u32..(1 << l))
        .map(|b| DescSet::from_bits(l, b as u16))
        .filter(|a| a.is_strict_superset_of(k))
        .collect();
    sets.sort_by_key(|a| a.canonical_key());
    v_names_of(sets)
}

/// Shared codewords covering `k`: all `V_A` with `A ⊇ K`, `|A| >= 2`.
fn covering_v_names(k: &DescSet) -> Vec<String> {
    let l = k.l();
    let mut sets: Vec<DescSet> = (1u32..(1 << l))
        .map(|b| DescSet::from_bits(l, b as u16))
        .filter(|a| a.card() >= 2 && k.is_subset_of(a))
        .collect();
    sets.sort_by_key(|a| a.canonical_key());
    v_names_of(sets)
}

/// Nonempty strict subsets of `k`, cardinality ascending.
fn strict_subset_u_names(k: &DescSet) -> Vec<String> {
    let mut subs: Vec<DescSet> = k
        .subsets()
        .into_iter()
        .filter(|s| !s.is_empty() && s != k)
        .collect();
    subs.sort_by_key(|s| (s.card(), s.bits()));
    subs.into_iter().map(|s| u_name(&s)).collect()
}

/// The entropy terms whose signed sum is the sharing penalty of family `q`.
fn alpha_terms(q: &QFamily) -> Vec<EntropyTerm> {
    let mut terms = Vec::new();
    let mut targets: Vec<String> = Vec::new();
    for k in q.non_singletons() {
        let given = strict_superset_names(&k);
        let tname = v_name(&k);
        terms.push(EntropyTerm {
            sign: 1,
            target: vec![tname.clone()],
            given,
        });
        targets.push(tname);
    }
    let base: DescSet = q
        .q1_part()
        .iter()
        .fold(DescSet::empty(q.l()), |acc, s| acc.union(s));
    let mut u_sets: Vec<DescSet> =
        base.subsets().into_iter().filter(|s| !s.is_empty()).collect();
    u_sets.sort_by_key(|s| (s.card(), s.bits()));
    for k in u_sets {
        let mut given = covering_v_names(&k);
        given.extend(strict_subset_u_names(&k));
        let tname = u_name(&k);
        terms.push(EntropyTerm { sign: 1, target: vec![tname.clone()], given });
        targets.push(tname);
    }
    if !targets.is_empty() {
        terms.push(EntropyTerm { sign: -1, target: targets, given: vec!["X".into()] });
    }
    terms
}

/// The sharing penalty `α(q)` of a superset-closed family under `witness`.
///
/// For discrete witnesses the value is nonnegative by construction; tiny
/// negative floating-point residues (above `-1e-9`) are clamped to zero.
pub fn alpha(witness: &Witness, q: &QFamily) -> Result<f64> {
    if q.is_empty() {
        return Ok(0.0);
    }
    let v = witness.entropy_combination(&alpha_terms(q))?;
    if matches!(witness, Witness::Discrete(_)) && v < 0.0 && v >= -1e-9 {
        return Ok(0.0);
    }
    Ok(v)
}

/// The message-sharing achievable region for `l` descriptions under
/// `witness`, in the extended coordinates (description rates, private
/// components, shared components).
///
/// Rows: one strict inequality per nonempty superset-closed family, a
/// nonnegativity row per component, and one equality per description tying
/// its rate to the sum of its components.
pub fn cms_constraints(l: usize, witness: &Witness) -> Result<ConstraintSet> {
    let mut vars: Vec<RateVariable> = Vec::new();
    for i in 1..=l {
        vars.push(RateVariable::Total(i as u8));
    }
    for i in 1..=l {
        vars.push(RateVariable::Private(i as u8));
    }
    let shared = shared_subsets(l);
    for k in &shared {
        vars.push(RateVariable::shared(k));
    }
    let mut set = ConstraintSet { l, vars, constraints: Vec::new(), equalities: Vec::new() };

    for q in enumerate_qstar(l)? {
        if q.is_empty() {
            continue;
        }
        let rhs = alpha(witness, &q)?;
        let mut terms: Vec<(RateVariable, f64)> = Vec::new();
        for k in q.non_singletons() {
            terms.push((RateVariable::shared(&k), 1.0));
        }
        for s in q.q1_part().iter() {
            terms.push((RateVariable::Private(s.indices()[0] as u8), 1.0));
        }
        let label = format!(
            "Q[{}]",
            q.members().iter().map(|m| m.digits()).collect::<Vec<_>>().join(",")
        );
        let row = set.row(&terms, rhs, true, &label);
        set.constraints.push(row);
    }
    for i in 1..=l {
        let v = RateVariable::Private(i as u8);
        let row = set.row(&[(v, 1.0)], 0.0, false, &format!("Rp{i}>=0"));
        set.constraints.push(row);
    }
    for k in &shared {
        let v = RateVariable::shared(k);
        let row = set.row(&[(v, 1.0)], 0.0, false, &format!("Rs{}>=0", k.digits()));
        set.constraints.push(row);
    }
    for i in 1..=l {
        let mut terms = vec![
            (RateVariable::Total(i as u8), 1.0),
            (RateVariable::Private(i as u8), -1.0),
        ];
        for k in &shared {
            if k.contains(i) {
                terms.push((RateVariable::shared(k), -1.0));
            }
        }
        let row = set.row(&terms, 0.0, false, &format!("R{i}-split"));
        set.equalities.push(row);
    }
    Ok(set)
}

fn mi_terms(a: &[&str], b: &[&str], c: &[&str]) -> Vec<EntropyTerm> {
    let mut bc: Vec<&str> = b.to_vec();
    bc.extend_from_slice(c);
    vec![EntropyTerm::new(1, a, c), EntropyTerm::new(-1, a, &bc)]
}

fn repeat_terms(times: usize, terms: Vec<EntropyTerm>) -> Vec<EntropyTerm> {
    let mut out = Vec::new();
    for _ in 0..times {
        out.extend(terms.iter().cloned());
    }
    out
}

/// Two-description inner bound without a shared codeword: rates cover
/// `U1`, `U2`, with the sum paying the joint description and the codeword
/// correlation.
pub fn ec_constraints(l: usize, witness: &Witness) -> Result<ConstraintSet> {
    if l != 2 {
        return Err(Error::WrongL { expected: 2, got: l });
    }
    let vars = vec![RateVariable::Total(1), RateVariable::Total(2)];
    let mut set = ConstraintSet { l, vars, constraints: Vec::new(), equalities: Vec::new() };
    let r1 = witness.entropy_combination(&mi_terms(&["X"], &["U1"], &[]))?;
    let r2 = witness.entropy_combination(&mi_terms(&["X"], &["U2"], &[]))?;
    let mut sum_terms = mi_terms(&["X"], &["U1", "U2", "U12"], &[]);
    sum_terms.extend(mi_terms(&["U1"], &["U2"], &[]));
    let rsum = witness.entropy_combination(&sum_terms)?;
    let rows = [
        (vec![(RateVariable::Total(1), 1.0)], r1, "R1"),
        (vec![(RateVariable::Total(2), 1.0)], r2, "R2"),
        (
            vec![(RateVariable::Total(1), 1.0), (RateVariable::Total(2), 1.0)],
            rsum,
            "R1+R2",
        ),
    ];
    for (terms, rhs, label) in rows {
        let row = set.row(&terms, rhs, false, label);
        set.constraints.push(row);
    }
    Ok(set)
}

/// Two-description inner bound with a shared codeword `V12` carried by
/// both descriptions.
pub fn zb_constraints(l: usize, witness: &Witness) -> Result<ConstraintSet> {
    if l != 2 {
        return Err(Error::WrongL { expected: 2, got: l });
    }
    let vars = vec![RateVariable::Total(1), RateVariable::Total(2)];
    let mut set = ConstraintSet { l, vars, constraints: Vec::new(), equalities: Vec::new() };
    let r1 = witness.entropy_combination(&mi_terms(&["X"], &["U1", "V12"], &[]))?;
    let r2 = witness.entropy_combination(&mi_terms(&["X"], &["U2", "V12"], &[]))?;
    let mut sum_terms = repeat_terms(2, mi_terms(&["X"], &["V12"], &[]));
    sum_terms.extend(mi_terms(&["X"], &["U1", "U2", "U12"], &["V12"]));
    sum_terms.extend(mi_terms(&["U1"], &["U2"], &["V12"]));
    let rsum = witness.entropy_combination(&sum_terms)?;
    let rows = [
        (vec![(RateVariable::Total(1), 1.0)], r1, "R1"),
        (vec![(RateVariable::Total(2), 1.0)], r2, "R2"),
        (
            vec![(RateVariable::Total(1), 1.0), (RateVariable::Total(2), 1.0)],
            rsum,
            "R1+R2",
        ),
    ];
    for (terms, rhs, label) in rows {
        let row = set.row(&terms, rhs, false, label);
        set.constraints.push(row);
    }
    Ok(set)
}

/// L-description inner bound with a single top-level shared codeword
/// `V_{1..L}` and per-subset codewords `U_A`. One row per nonempty subset
/// of the descriptions.
pub fn vkg_constraints(l: usize, witness: &Witness) -> Result<ConstraintSet> {
    let full = DescSet::full(l);
    let v_top = v_name(&full);
    let vars: Vec<RateVariable> =
        (1..=l).map(|i| RateVariable::Total(i as u8)).collect();
    let mut set = ConstraintSet { l, vars, constraints: Vec::new(), equalities: Vec::new() };
    for k in nonempty_subsets(l) {
        let mut terms = repeat_terms(k.card(), mi_terms(&["X"], &[&v_top], &[]));
        let mut a_sets: Vec<DescSet> =
            k.subsets().into_iter().filter(|s| !s.is_empty()).collect();
        a_sets.sort_by_key(|s| (s.card(), s.bits()));
        let all_u: Vec<String> = a_sets.iter().map(u_name).collect();
        {
            let target: Vec<&str> = all_u.iter().map(String::as_str).collect();
            terms.push(EntropyTerm::new(-1, &target, &["X", &v_top]));
        }
        for a in &a_sets {
            let mut given = strict_subset_u_names(a);
            given.push(v_top.clone());
            terms.push(EntropyTerm {
                sign: 1,
                target: vec![u_name(a)],
                given,
            });
        }
        let rhs = witness.entropy_combination(&terms)?;
        let lin: Vec<(RateVariable, f64)> =
            k.indices().into_iter().map(|i| (RateVariable::Total(i as u8), 1.0)).collect();
        let label = format!("R[{}]", k.digits());
        let row = set.row(&lin, rhs, false, &label);
        set.constraints.push(row);
    }
    Ok(set)
}

/// Scheme selector for the generic region builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ec,
    Zb,
    Vkg,
    Cms,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ec" => Ok(Scheme::Ec),
            "zb" => Ok(Scheme::Zb),
            "vkg" => Ok(Scheme::Vkg),
            "cms" => Ok(Scheme::Cms),
            other => Err(Error::InvalidScheme(other.to_string())),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::Ec => "ec",
            Scheme::Zb => "zb",
            Scheme::Vkg => "vkg",
            Scheme::Cms => "cms",
        };
        write!(f, "{s}")
    }
}

/// Builds the rate-constraint system of `scheme` at level `l`.
pub fn build_region(scheme: Scheme, l: usize, witness: &Witness) -> Result<ConstraintSet> {
    match scheme {
        Scheme::Ec => ec_constraints(l, witness),
        Scheme::Zb => zb_constraints(l, witness),
        Scheme::Vkg => vkg_constraints(l, witness),
        Scheme::Cms => cms_constraints(l, witness),
    }
}

/// What a decoder holding the descriptions in `s` can reconstruct from:
/// every shared codeword meeting `s` and every per-subset codeword whose
/// subset is contained in `s`.
pub fn decoder_observation(l: usize, s: &DescSet) -> Result<Vec<String>> {
    if s.is_empty() {
        return Err(Error::Invalid("decoder subset is empty".into()));
    }
    if s.l() != l {
        return Err(Error::WrongL { expected: l, got: s.l() });
    }
    let mut names = Vec::new();
    for k in shared_subsets(l) {
        if k.intersects(s) {
            names.push(v_name(&k));
        }
    }
    let mut u_sets: Vec<DescSet> =
        s.subsets().into_iter().filter(|k| !k.is_empty()).collect();
    u_sets.sort_by_key(|k| (k.card(), k.bits()));
    for k in u_sets {
        names.push(u_name(&k));
    }
    Ok(names)
}

/// Distortion criterion for witness evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distortion {
    /// Symbol error probability (discrete witnesses).
    Hamming,
    /// Mean squared error under the conditional-mean decoder (Gaussian
    /// witnesses).
    Quadratic,
}

/// Expected distortion of the optimal decoder for description subset `s`.
pub fn eval_distortion(
    witness: &Witness,
    l: usize,
    s: &DescSet,
    distortion: Distortion,
) -> Result<f64> {
    let names = decoder_observation(l, s)?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    match (witness, distortion) {
        (Witness::Discrete(pmf), Distortion::Hamming) => {
            let card = pmf.card_of("X")?;
            pmf.bayes_distortion("X", &refs, card, hamming)
        }
        (Witness::Gaussian(sys), Distortion::Quadratic) => sys.cond_variance("X", &refs),
        (Witness::Discrete(_), Distortion::Quadratic) => Err(Error::Invalid(
            "quadratic distortion requires a Gaussian witness".into(),
        )),
        (Witness::Gaussian(_), Distortion::Hamming) => Err(Error::Invalid(
            "hamming distortion requires a discrete witness".into(),
        )),
    }
}

/// Target distortions per decoder subset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub kind: Distortion,
    /// `(subset, maximum distortion)` pairs.
    pub targets: Vec<(DescSet, f64)>,
}

/// Checks whether the witness meets every distortion target; returns the
/// per-subset achieved values in the order given.
pub fn check_distortions(
    witness: &Witness,
    l: usize,
    spec: &DistortionSpec,
) -> Result<Vec<(DescSet, f64, bool)>> {
    let mut out = Vec::with_capacity(spec.targets.len());
    for (s, dmax) in &spec.targets {
        let achieved = eval_distortion(witness, l, s, spec.kind)?;
        out.push((*s, achieved, achieved <= dmax + 1e-9));
    }
    Ok(out)
}

/// True when the two-description witness has conditionally independent
/// per-description codewords given `(X, V12)` and a joint codeword that
/// adds nothing beyond `(U1, U2, V12)`.
pub fn iq_restricted_check(witness: &Witness) -> Result<bool> {
    let a = witness.mutual_info(&["U1"], &["U2"], &["X", "V12"])?;
    let b = witness.mutual_info(&["U12"], &["X"], &["U1", "U2", "V12"])?;
    Ok(a <= 1e-9 && b <= 1e-9)
}

//! Halfspace polyhedra over rate coordinates with exact rational
//! coefficients: projection by Fourier–Motzkin elimination, redundancy
//! reduction, vertex enumeration, and containment certificates.
//!
//! Coefficients are exact `BigRational`s (all our systems start from small
//! integers), while right-hand sides are empirical `f64` constants compared
//! at explicit tolerances.

use crate::error::{Error, Result};
use crate::lp::{feasible, implies, LpRow};
use crate::regions::{ConstraintSet, RateVariable};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

/// Cap on intermediate row counts during elimination.
const FM_CAP: usize = 200_000;

/// A row `coeffs · x >= rhs` (`= rhs` when held in an equality list).
#[derive(Clone, Debug, PartialEq)]
pub struct LinIneq {
    pub coeffs: Vec<BigRational>,
    pub rhs: f64,
    pub strict: bool,
}

impl LinIneq {
    pub fn from_f64(coeffs: &[f64], rhs: f64, strict: bool) -> Self {
        let coeffs = coeffs
            .iter()
            .map(|&c| BigRational::from_float(c).expect("finite coefficient"))
            .collect();
        LinIneq { coeffs, rhs, strict }
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap()).collect()
    }

    pub fn dot(&self, point: &[f64]) -> f64 {
        self.coeffs_f64().iter().zip(point).map(|(a, x)| a * x).sum()
    }

    fn is_zero_row(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Scales by the unique positive rational making the coefficients a
    /// primitive integer vector. Zero rows are left alone.
    fn normalize(&self) -> LinIneq {
        if self.is_zero_row() {
            return self.clone();
        }
        let mut lcm_den = BigInt::from(1);
        for c in &self.coeffs {
            lcm_den = lcm_den.lcm(c.denom());
        }
        let ints: Vec<BigInt> =
            self.coeffs.iter().map(|c| c.numer() * (&lcm_den / c.denom())).collect();
        let mut g = BigInt::from(0);
        for i in &ints {
            g = g.gcd(i);
        }
        let scale = BigRational::new(lcm_den.clone(), g.clone());
        let coeffs = ints
            .into_iter()
            .map(|i| BigRational::new(i, g.clone()))
            .collect();
        LinIneq {
            coeffs,
            rhs: self.rhs * scale.to_f64().unwrap(),
            strict: self.strict,
        }
    }
}

impl Serialize for LinIneq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LinIneq", 3)?;
        st.serialize_field("coeffs", &self.coeffs_f64())?;
        st.serialize_field("rhs", &self.rhs)?;
        st.serialize_field("strict", &self.strict)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for LinIneq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            coeffs: Vec<f64>,
            rhs: f64,
            #[serde(default)]
            strict: bool,
        }
        let raw = Raw::deserialize(d)?;
        if raw.coeffs.iter().any(|c| !c.is_finite()) || !raw.rhs.is_finite() {
            return Err(serde::de::Error::custom("non-finite constraint entry"));
        }
        Ok(LinIneq::from_f64(&raw.coeffs, raw.rhs, raw.strict))
    }
}

/// A polyhedron `{x : A x >= b, E x = f}` over named coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HPolyhedron {
    pub names: Vec<String>,
    pub ineqs: Vec<LinIneq>,
    pub eqs: Vec<LinIneq>,
}

/// Vertices and extreme rays of a pointed polyhedron.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexSet {
    pub names: Vec<String>,
    pub vertices: Vec<Vec<f64>>,
    pub rays: Vec<Vec<f64>>,
}

/// Substitution record from resolving one equality: the eliminated
/// coordinate equals `constant + Σ coeffs · remaining`.
struct EqSub {
    name: String,
    expr_names: Vec<String>,
    expr_coeffs: Vec<f64>,
    constant: f64,
}

impl HPolyhedron {
    pub fn new(names: Vec<String>, ineqs: Vec<LinIneq>, eqs: Vec<LinIneq>) -> Result<Self> {
        let d = names.len();
        for row in ineqs.iter().chain(&eqs) {
            if row.coeffs.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row width {} against {d} coordinates",
                    row.coeffs.len()
                )));
            }
        }
        Ok(HPolyhedron { names, ineqs, eqs })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// View as rate constraints over the variables of `cs`.
    pub fn from_constraint_set(cs: &ConstraintSet) -> Self {
        let names = cs.vars.iter().map(|v| v.to_string()).collect();
        let ineqs = cs
            .constraints
            .iter()
            .map(|c| LinIneq::from_f64(&c.coeffs, c.rhs, c.strict))
            .collect();
        let eqs = cs
            .equalities
            .iter()
            .map(|c| LinIneq::from_f64(&c.coeffs, c.rhs, false))
            .collect();
        HPolyhedron { names, ineqs, eqs }
    }

    fn lp_rows(&self) -> Vec<LpRow> {
        let mut rows: Vec<LpRow> = self
            .ineqs
            .iter()
            .map(|r| LpRow::ge(r.coeffs_f64(), r.rhs))
            .collect();
        rows.extend(self.eqs.iter().map(|r| LpRow::eq(r.coeffs_f64(), r.rhs)));
        rows
    }

    pub fn is_feasible(&self) -> bool {
        feasible(self.dim(), &self.lp_rows())
    }

    /// Point membership at tolerance `tol` (strict rows treated closed).
    pub fn contains_point(&self, point: &[f64], tol: f64) -> bool {
        self.ineqs.iter().all(|r| r.dot(point) >= r.rhs - tol)
            && self.eqs.iter().all(|r| (r.dot(point) - r.rhs).abs() <= tol)
    }

    /// Canonical form: primitive integer rows, duplicates folded to the
    /// tightest right-hand side, tautologies dropped, and rows the rest
    /// already imply removed, leaving only facet rows. Removal is
    /// sequential against the surviving set, so rows that merely certify
    /// each other cannot vanish together.
    pub fn reduce(&self) -> HPolyhedron {
        let mut rows: Vec<LinIneq> = Vec::new();
        for r in &self.ineqs {
            let n = r.normalize();
            if n.is_zero_row() {
                if n.rhs > 1e-9 {
                    // Infeasible marker: canonicalize and return.
                    return HPolyhedron {
                        names: self.names.clone(),
                        ineqs: vec![LinIneq::from_f64(
                            &vec![0.0; self.dim()],
                            1.0,
                            false,
                        )],
                        eqs: Vec::new(),
                    };
                }
                continue;
            }
            rows.push(n);
        }
        // Fold duplicates to the max rhs.
        let mut folded: Vec<LinIneq> = Vec::new();
        for r in rows {
            if let Some(prev) = folded.iter_mut().find(|p| p.coeffs == r.coeffs) {
                if r.rhs > prev.rhs + 1e-12 {
                    prev.rhs = r.rhs;
                    prev.strict = r.strict;
                } else if (r.rhs - prev.rhs).abs() <= 1e-12 {
                    prev.strict = prev.strict || r.strict;
                }
            } else {
                folded.push(r);
            }
        }
        let eqs: Vec<LinIneq> = self.eqs.iter().map(|e| e.normalize()).collect();
        // Implication removal: a row goes when the surviving rows carry a
        // Farkas certificate for it. The certificate LP has one constraint
        // per coordinate, so this stays cheap even for wide systems.
        if folded.len() <= 2000 {
            let dim = self.dim();
            let mut rows: Vec<LpRow> = folded
                .iter()
                .map(|r| LpRow::ge(r.coeffs_f64(), r.rhs))
                .chain(eqs.iter().map(|e| LpRow::eq(e.coeffs_f64(), e.rhs)))
                .collect();
            let mut i = folded.len();
            while i > 0 {
                i -= 1;
                let row = rows.remove(i);
                if !implies(dim, &rows, &row.coeffs, row.rhs) {
                    rows.insert(i, row);
                } else {
                    folded.remove(i);
                }
            }
        }
        HPolyhedron { names: self.names.clone(), ineqs: folded, eqs }
    }

    /// Cheap duplicate folding used between elimination steps.
    fn fold_duplicates(&mut self) {
        let mut folded: Vec<LinIneq> = Vec::new();
        for r in self.ineqs.drain(..) {
            let n = r.normalize();
            if n.is_zero_row() && n.rhs <= 1e-9 {
                continue;
            }
            if let Some(prev) = folded.iter_mut().find(|p| p.coeffs == n.coeffs) {
                if n.rhs > prev.rhs + 1e-12 {
                    prev.rhs = n.rhs;
                    prev.strict = n.strict;
                } else if (n.rhs - prev.rhs).abs() <= 1e-12 {
                    prev.strict = prev.strict || n.strict;
                }
            } else {
                folded.push(n);
            }
        }
        self.ineqs = folded;
    }

    /// Eliminates the coordinate at `idx` by pairing lower and upper bounds.
    pub fn fm_eliminate(&self, idx: usize) -> Result<HPolyhedron> {
        self.fm_eliminate_capped(idx, FM_CAP)
    }

    fn fm_eliminate_capped(&self, idx: usize, cap: usize) -> Result<HPolyhedron> {
        if !self.eqs.is_empty() {
            return Err(Error::Invalid(
                "resolve equalities before elimination".into(),
            ));
        }
        let mut lowers: Vec<&LinIneq> = Vec::new();
        let mut uppers: Vec<&LinIneq> = Vec::new();
        let mut keep: Vec<LinIneq> = Vec::new();
        let drop_col = |r: &LinIneq| -> LinIneq {
            let mut coeffs = r.coeffs.clone();
            coeffs.remove(idx);
            LinIneq { coeffs, rhs: r.rhs, strict: r.strict }
        };
        for r in &self.ineqs {
            let c = &r.coeffs[idx];
            if c.is_zero() {
                keep.push(drop_col(r));
            } else if c.is_positive() {
                lowers.push(r);
            } else {
                uppers.push(r);
            }
        }
        let count = keep.len() + lowers.len() * uppers.len();
        if count > cap {
            return Err(Error::Blowup { count, cap });
        }
        for lo in &lowers {
            let cl = &lo.coeffs[idx];
            let ml = cl.recip();
            let ml_f = ml.to_f64().unwrap();
            for up in &uppers {
                let cu = &up.coeffs[idx];
                let mu = -cu.recip();
                let mu_f = mu.to_f64().unwrap();
                let mut coeffs = Vec::with_capacity(self.dim() - 1);
                for (j, (a, b)) in lo.coeffs.iter().zip(&up.coeffs).enumerate() {
                    if j != idx {
                        coeffs.push(a * &ml + b * &mu);
                    }
                }
                keep.push(LinIneq {
                    coeffs,
                    rhs: lo.rhs * ml_f + up.rhs * mu_f,
                    strict: lo.strict || up.strict,
                });
            }
        }
        let mut names = self.names.clone();
        names.remove(idx);
        let mut out = HPolyhedron { names, ineqs: keep, eqs: Vec::new() };
        out.fold_duplicates();
        Ok(out)
    }

    /// Resolves each equality by substitution, eliminating one coordinate
    /// per row. Pivots prefer coordinates outside `keep`; an equality
    /// supported entirely on kept coordinates is an error.
    fn resolve_equalities_internal(
        &self,
        keep: &[String],
    ) -> Result<(HPolyhedron, Vec<EqSub>)> {
        let mut poly = self.clone();
        let mut subs: Vec<EqSub> = Vec::new();
        while let Some(eq) = poly.eqs.first().cloned() {
            poly.eqs.remove(0);
            let nz: Vec<usize> =
                (0..poly.dim()).filter(|&j| !eq.coeffs[j].is_zero()).collect();
            if nz.is_empty() {
                if eq.rhs.abs() > 1e-9 {
                    // Inconsistent: mark infeasible and finish.
                    poly.ineqs =
                        vec![LinIneq::from_f64(&vec![0.0; poly.dim()], 1.0, false)];
                    poly.eqs.clear();
                    break;
                }
                continue;
            }
            let pivot = *nz
                .iter()
                .find(|&&j| !keep.contains(&poly.names[j]))
                .ok_or_else(|| {
                    Error::Invalid(format!(
                        "equality involves only kept coordinates: {}",
                        nz.iter()
                            .map(|&j| poly.names[j].clone())
                            .collect::<Vec<_>>()
                            .join(",")
                    ))
                })?;
            let cp = eq.coeffs[pivot].clone();
            // pivot = (rhs − Σ_{j≠pivot} c_j x_j) / c_p
            let mut expr_names = Vec::new();
            let mut expr_coeffs = Vec::new();
            for &j in &nz {
                if j != pivot {
                    expr_names.push(poly.names[j].clone());
                    expr_coeffs.push((-&eq.coeffs[j] / &cp).to_f64().unwrap());
                }
            }
            let constant = eq.rhs * cp.recip().to_f64().unwrap();
            subs.push(EqSub {
                name: poly.names[pivot].clone(),
                expr_names,
                expr_coeffs,
                constant,
            });
            let substitute = |rows: &mut Vec<LinIneq>| {
                for r in rows.iter_mut() {
                    let a = r.coeffs[pivot].clone();
                    if a.is_zero() {
                        r.coeffs.remove(pivot);
                        continue;
                    }
                    let f = &a / &cp;
                    for (j, c) in r.coeffs.iter_mut().enumerate() {
                        if j != pivot {
                            *c -= &f * &eq.coeffs[j];
                        }
                    }
                    r.rhs -= f.to_f64().unwrap() * eq.rhs;
                    r.coeffs.remove(pivot);
                }
            };
            substitute(&mut poly.ineqs);
            substitute(&mut poly.eqs);
            poly.names.remove(pivot);
        }
        Ok((poly, subs))
    }

    /// Eliminates all equalities, keeping only inequality rows.
    pub fn resolve_equalities(&self) -> Result<HPolyhedron> {
        Ok(self.resolve_equalities_internal(&[])?.0)
    }

    /// Projects onto the named coordinates (in the order given): resolves
    /// equalities, then eliminates the remaining coordinates greedily by
    /// smallest pairing product, reducing periodically.
    pub fn project(&self, keep: &[&str]) -> Result<HPolyhedron> {
        for k in keep {
            if !self.names.iter().any(|n| n == k) {
                return Err(Error::UnknownVariable((*k).to_string()));
            }
        }
        let keep_owned: Vec<String> = keep.iter().map(|s| s.to_string()).collect();
        let (mut poly, _) = self.resolve_equalities_internal(&keep_owned)?;
        let mut steps = 0usize;
        loop {
            let victims: Vec<usize> = (0..poly.dim())
                .filter(|&j| !keep_owned.contains(&poly.names[j]))
                .collect();
            if victims.is_empty() {
                break;
            }
            // Cheapest column first: fewest lower×upper pairings.
            let idx = *victims
                .iter()
                .min_by_key(|&&j| {
                    let lo = poly
                        .ineqs
                        .iter()
                        .filter(|r| r.coeffs[j].is_positive())
                        .count();
                    let up = poly
                        .ineqs
                        .iter()
                        .filter(|r| r.coeffs[j].is_negative())
                        .count();
                    lo * up
                })
                .unwrap();
            poly = poly.fm_eliminate(idx)?;
            steps += 1;
            if steps % 3 == 0 {
                poly = poly.reduce();
            }
        }
        poly = poly.reduce();
        // Reorder columns to the requested order.
        let perm: Vec<usize> = keep_owned
            .iter()
            .map(|k| poly.names.iter().position(|n| n == k).unwrap())
            .collect();
        let remap = |rows: &[LinIneq]| -> Vec<LinIneq> {
            rows.iter()
                .map(|r| LinIneq {
                    coeffs: perm.iter().map(|&p| r.coeffs[p].clone()).collect(),
                    rhs: r.rhs,
                    strict: r.strict,
                })
                .collect()
        };
        Ok(HPolyhedron {
            names: keep_owned,
            ineqs: remap(&poly.ineqs),
            eqs: Vec::new(),
        })
    }

    /// Vertices and coordinate-direction rays. Equalities are resolved
    /// internally and points are lifted back to the full coordinate list.
    ///
    /// The search enumerates d-subsets of rows after reduction, so the
    /// (resolved) dimension is capped at 4.
    pub fn vertices(&self) -> Result<VertexSet> {
        let (resolved, subs) = self.resolve_equalities_internal(&[])?;
        let poly = resolved.reduce();
        let d = poly.dim();
        if d > 4 {
            return Err(Error::DimensionTooHigh { dim: d, max: 4 });
        }
        if poly.ineqs.iter().any(|r| r.is_zero_row() && r.rhs > 1e-9) {
            return Ok(VertexSet {
                names: self.names.clone(),
                vertices: Vec::new(),
                rays: Vec::new(),
            });
        }
        let rows: Vec<(Vec<f64>, f64)> =
            poly.ineqs.iter().map(|r| (r.coeffs_f64(), r.rhs)).collect();
        let m = rows.len();
        if d == 0 {
            return Ok(VertexSet {
                names: self.names.clone(),
                vertices: vec![lift_point(&[], &poly.names, &subs, &self.names)],
                rays: Vec::new(),
            });
        }
        let combos = n_choose_k(m, d);
        if combos > FM_CAP {
            return Err(Error::Blowup { count: combos, cap: FM_CAP });
        }
        let mut verts: Vec<Vec<f64>> = Vec::new();
        if m >= d {
            let mut pick: Vec<usize> = (0..d).collect();
            loop {
                let a = DMatrix::from_fn(d, d, |i, j| rows[pick[i]].0[j]);
                let b = DVector::from_fn(d, |i, _| rows[pick[i]].1);
                if let Some(x) = a.clone().full_piv_lu().solve(&b) {
                    let residual = (&a * &x - &b).amax();
                    if residual < 1e-7 && x.iter().all(|v| v.is_finite()) {
                        let xs: Vec<f64> = x.iter().copied().collect();
                        let ok = rows.iter().all(|(c, rhs)| {
                            c.iter().zip(&xs).map(|(a, v)| a * v).sum::<f64>()
                                >= rhs - 1e-8
                        });
                        if ok && !verts.iter().any(|v| linf(v, &xs) < 1e-7) {
                            verts.push(xs);
                        }
                    }
                }
                // Advance to the next d-combination of {0..m}.
                let mut i = d;
                while i > 0 && pick[i - 1] == m - d + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                pick[i - 1] += 1;
                for j in i..d {
                    pick[j] = pick[j - 1] + 1;
                }
            }
        }
        // Lift to the original coordinates and sort for determinism.
        let mut vertices: Vec<Vec<f64>> = verts
            .iter()
            .map(|v| lift_point(v, &poly.names, &subs, &self.names))
            .collect();
        vertices.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Rays: resolved coordinate directions whose column is nonnegative,
        // lifted homogeneously through the substitutions.
        let mut rays = Vec::new();
        for j in 0..d {
            if poly.ineqs.iter().all(|r| !r.coeffs[j].is_negative()) {
                let mut dir = vec![0.0; d];
                dir[j] = 1.0;
                rays.push(lift_direction(&dir, &poly.names, &subs, &self.names));
            }
        }
        Ok(VertexSet { names: self.names.clone(), vertices, rays })
    }

    /// Certifies `inner ⊆ self` for up-closed pointed regions: both must be
    /// equality-free with nonnegative coefficients, and every vertex of
    /// `inner` must satisfy every row of `self` within `tol`.
    pub fn contains(&self, inner: &HPolyhedron, tol: f64) -> Result<bool> {
        if self.names != inner.names {
            return Err(Error::DimensionMismatch(format!(
                "coordinate lists differ: [{}] vs [{}]",
                self.names.join(","),
                inner.names.join(",")
            )));
        }
        if !self.eqs.is_empty() || !inner.eqs.is_empty() {
            return Err(Error::Invalid(
                "resolve equalities before containment".into(),
            ));
        }
        for (which, poly) in [("outer", self), ("inner", inner)] {
            for r in &poly.ineqs {
                if r.coeffs.iter().any(|c| c.is_negative()) {
                    return Err(Error::NotUpClosed(format!(
                        "{which} row has a negative coefficient: {:?} >= {}",
                        r.coeffs_f64(),
                        r.rhs
                    )));
                }
            }
        }
        let vs = inner.vertices()?;
        if vs.vertices.is_empty() {
            if inner.is_feasible() {
                return Err(Error::Invalid(
                    "inner region is feasible but has no vertices".into(),
                ));
            }
            return Ok(true);
        }
        Ok(vs
            .vertices
            .iter()
            .all(|v| self.ineqs.iter().all(|r| r.dot(v) >= r.rhs - tol)))
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn n_choose_k(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Reconstructs a full-coordinate point from a resolved one by replaying
/// the equality substitutions in reverse.
fn lift_point(
    resolved: &[f64],
    resolved_names: &[String],
    subs: &[EqSub],
    full_names: &[String],
) -> Vec<f64> {
    let mut vals: Vec<(String, f64)> = resolved_names
        .iter()
        .cloned()
        .zip(resolved.iter().copied())
        .collect();
    for sub in subs.iter().rev() {
        let mut v = sub.constant;
        for (n, c) in sub.expr_names.iter().zip(&sub.expr_coeffs) {
            let x = vals.iter().find(|(vn, _)| vn == n).expect("substitution order").1;
            v += c * x;
        }
        vals.push((sub.name.clone(), v));
    }
    full_names
        .iter()
        .map(|n| vals.iter().find(|(vn, _)| vn == n).expect("lifted name").1)
        .collect()
}

/// Homogeneous lift (constants dropped) for direction vectors.
fn lift_direction(
    resolved: &[f64],
    resolved_names: &[String],
    subs: &[EqSub],
    full_names: &[String],
) -> Vec<f64> {
    let mut vals: Vec<(String, f64)> = resolved_names
        .iter()
        .cloned()
        .zip(resolved.iter().copied())
        .collect();
    for sub in subs.iter().rev() {
        let mut v = 0.0;
        for (n, c) in sub.expr_names.iter().zip(&sub.expr_coeffs) {
            let x = vals.iter().find(|(vn, _)| vn == n).expect("substitution order").1;
            v += c * x;
        }
        vals.push((sub.name.clone(), v));
    }
    full_names
        .iter()
        .map(|n| vals.iter().find(|(vn, _)| vn == n).expect("lifted name").1)
        .collect()
}

/// Projects a scheme's constraint system onto its description rates.
pub fn project_to_totals(cs: &ConstraintSet) -> Result<HPolyhedron> {
    let poly = HPolyhedron::from_constraint_set(cs);
    let names: Vec<String> =
        (1..=cs.l).map(|i| RateVariable::Total(i as u8).to_string()).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    poly.project(&refs)
}

/// Whether the description-rate point lifts to a full assignment
/// satisfying the extended system (private and shared components).
pub fn lift_feasible(cs: &ConstraintSet, totals: &[f64]) -> Result<bool> {
    if totals.len() != cs.l {
        return Err(Error::DimensionMismatch(format!(
            "expected {} rates, got {}",
            cs.l,
            totals.len()
        )));
    }
    let n = cs.vars.len();
    let mut rows: Vec<LpRow> = cs
        .constraints
        .iter()
        .map(|c| LpRow::ge(c.coeffs.clone(), c.rhs))
        .collect();
    rows.extend(cs.equalities.iter().map(|c| LpRow::eq(c.coeffs.clone(), c.rhs)));
    for (i, &r) in totals.iter().enumerate() {
        let mut coeffs = vec![0.0; n];
        coeffs[cs.var_index(&RateVariable::Total((i + 1) as u8))] = 1.0;
        rows.push(LpRow::eq(coeffs, r));
    }
    Ok(feasible(n, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly2(rows: &[(&[f64], f64)]) -> HPolyhedron {
        HPolyhedron::new(
            vec!["x".into(), "y".into()],
            rows.iter().map(|(c, r)| LinIneq::from_f64(c, *r, false)).collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn reduce_drops_conic_sum_rows() {
        // x+y >= 2 is the weight-(1,1) combination of x >= 1 and y >= 1: it
        // touches the region only at their corner and supports no facet.
        let p = poly2(&[(&[1.0, 1.0], 2.0), (&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
        let r = p.reduce();
        assert_eq!(r.ineqs.len(), 2);
        assert!(r.ineqs.iter().all(|q| q.coeffs_f64().contains(&0.0)));
    }

    #[test]
    fn reduce_keeps_corner_cutting_rows() {
        // Against x >= 0, y >= 0 the same sum row excludes (0.5, 0.5), so
        // all three are facets and must survive.
        let p = poly2(&[(&[1.0, 1.0], 2.0), (&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0)]);
        let r = p.reduce();
        assert_eq!(r.ineqs.len(), 3);
    }

    #[test]
    fn reduce_removes_strict_slack_rows() {
        let p = poly2(&[
            (&[1.0, 0.0], 2.0),
            (&[1.0, 0.0], 1.0),
            (&[2.0, 0.0], 4.0),
            (&[0.0, 1.0], 0.0),
        ]);
        let r = p.reduce();
        // x >= 1 is implied by x >= 2 with slack 1; 2x >= 4 duplicates x >= 2.
        assert_eq!(r.ineqs.len(), 2);
        let norm = r.ineqs.iter().find(|q| !q.coeffs[0].is_zero()).unwrap();
        assert_eq!(norm.coeffs_f64(), vec![1.0, 0.0]);
        assert!((norm.rhs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reduce_detects_infeasible_marker() {
        let p = HPolyhedron::new(
            vec!["x".into()],
            vec![
                LinIneq::from_f64(&[0.0], 1.0, false),
                LinIneq::from_f64(&[1.0], 0.0, false),
            ],
            vec![],
        )
        .unwrap();
        let r = p.reduce();
        assert_eq!(r.ineqs.len(), 1);
        assert!(r.ineqs[0].is_zero_row());
        assert!(!r.is_feasible());
    }

    #[test]
    fn fm_eliminates_between_bounds() {
        // x + y >= 2 and y <= 1 imply x >= 1 after eliminating y.
        let p = poly2(&[(&[1.0, 1.0], 2.0), (&[0.0, -1.0], -1.0)]);
        let q = p.fm_eliminate(1).unwrap();
        assert_eq!(q.names, vec!["x".to_string()]);
        assert_eq!(q.ineqs.len(), 1);
        assert_eq!(q.ineqs[0].coeffs_f64(), vec![1.0]);
        assert!((q.ineqs[0].rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fm_blowup_cap() {
        // 30 lower and 30 upper bounds on y: 900 pairings exceed a cap of 100.
        let mut rows: Vec<LinIneq> = Vec::new();
        for i in 0..30 {
            rows.push(LinIneq::from_f64(&[i as f64 + 0.5, 1.0], 1.0, false));
            rows.push(LinIneq::from_f64(&[-(i as f64) - 0.25, -1.0], -1.0, false));
        }
        let p = HPolyhedron::new(vec!["x".into(), "y".into()], rows, vec![]).unwrap();
        assert!(matches!(
            p.fm_eliminate_capped(1, 100),
            Err(Error::Blowup { .. })
        ));
        assert!(p.fm_eliminate(1).is_ok());
    }

    #[test]
    fn vertices_of_staircase() {
        let p = poly2(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0), (&[1.0, 1.0], 1.0)]);
        let vs = p.vertices().unwrap();
        assert_eq!(vs.vertices, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(vs.rays.len(), 2);
    }

    #[test]
    fn vertices_with_equality_lift() {
        // Region in (x,y,z): x >= 1, y >= 2, x+y >= 4, z = x.
        let p = HPolyhedron::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                LinIneq::from_f64(&[1.0, 0.0, 0.0], 1.0, false),
                LinIneq::from_f64(&[0.0, 1.0, 0.0], 2.0, false),
                LinIneq::from_f64(&[1.0, 1.0, 0.0], 4.0, false),
            ],
            vec![LinIneq::from_f64(&[-1.0, 0.0, 1.0], 0.0, false)],
        )
        .unwrap();
        let vs = p.vertices().unwrap();
        assert_eq!(vs.vertices, vec![vec![1.0, 3.0, 1.0], vec![2.0, 2.0, 2.0]]);
        // Rays lift too: (1,0,1) and (0,1,0).
        assert!(vs.rays.contains(&vec![1.0, 0.0, 1.0]));
        assert!(vs.rays.contains(&vec![0.0, 1.0, 0.0]));
    }

    #[test]
    fn contains_up_closed() {
        let outer = poly2(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0), (&[1.0, 1.0], 0.5)]);
        let inner = poly2(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0), (&[1.0, 1.0], 1.0)]);
        assert!(outer.contains(&inner, 1e-9).unwrap());
        assert!(!inner.contains(&outer, 1e-9).unwrap());
        // Equal regions contain each other.
        assert!(inner.contains(&inner.clone(), 1e-9).unwrap());
    }

    #[test]
    fn contains_rejects_downward_rows() {
        let outer = poly2(&[(&[1.0, -1.0], 0.0)]);
        let inner = poly2(&[(&[1.0, 0.0], 0.0)]);
        assert!(matches!(
            outer.contains(&inner, 1e-9),
            Err(Error::NotUpClosed(_))
        ));
    }

    #[test]
    fn project_simple_prism() {
        // 3d region x,y,z >= 0, x+y+z >= 1 projected to (x,y) is the whole
        // nonnegative quadrant (z absorbs the sum).
        let p = HPolyhedron::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                LinIneq::from_f64(&[1.0, 0.0, 0.0], 0.0, false),
                LinIneq::from_f64(&[0.0, 1.0, 0.0], 0.0, false),
                LinIneq::from_f64(&[0.0, 0.0, 1.0], 0.0, false),
                LinIneq::from_f64(&[1.0, 1.0, 1.0], 1.0, false),
            ],
            vec![],
        )
        .unwrap();
        let q = p.project(&["x", "y"]).unwrap();
        assert_eq!(q.names, vec!["x".to_string(), "y".to_string()]);
        assert_eq!(q.ineqs.len(), 2);
        for r in &q.ineqs {
            assert!((r.rhs - 0.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_round_trip_against_lift() {
        use crate::pmf::JointPmf;
        use crate::regions::{cms_constraints, Witness};
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut checks = 0usize;
        for seed in 0..16u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
            let vars: Vec<(String, usize)> =
                ["X", "V12", "U1", "U2", "U12"].iter().map(|n| (n.to_string(), 2)).collect();
            let mut probs: Vec<f64> =
                (0..32).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= s);
            let w = Witness::Discrete(JointPmf::new(vars, probs).unwrap());
            let cs = cms_constraints(2, &w).unwrap();
            let proj = project_to_totals(&cs).unwrap();
            let vs = proj.vertices().unwrap();
            assert!(!vs.vertices.is_empty());
            for v in &vs.vertices {
                // Every projected vertex lifts back into the extended system.
                assert!(lift_feasible(&cs, v).unwrap(), "seed {seed} vertex {v:?}");
                checks += 1;
                // Points beyond the vertex along a ray stay feasible.
                let inside: Vec<f64> = v.iter().map(|x| x + 0.37).collect();
                assert!(lift_feasible(&cs, &inside).unwrap());
                checks += 1;
                // A point violating a tight facet must not lift.
                for r in &proj.ineqs {
                    if (r.dot(v) - r.rhs).abs() < 1e-9 {
                        let c = r.coeffs_f64();
                        let outside: Vec<f64> =
                            v.iter().zip(&c).map(|(x, a)| x - 1e-3 * a).collect();
                        assert!(
                            !lift_feasible(&cs, &outside).unwrap(),
                            "seed {seed} facet {c:?}"
                        );
                        checks += 1;
                    }
                }
            }
        }
        assert!(checks >= 100, "only {checks} lift checks");
    }

    #[test]
    fn serde_round_trip() {
        let p = poly2(&[(&[1.0, 2.0], 0.5), (&[0.0, 1.0], 0.0)]);
        let json = serde_json::to_string(&p).unwrap();
        let back: HPolyhedron = serde_json::from_str(&json).unwrap();
        assert_eq!(back.names, p.names);
        assert_eq!(back.ineqs.len(), 2);
        assert_eq!(back.ineqs[0].coeffs_f64(), vec![1.0, 2.0]);
    }
}

//! Jointly Gaussian variable systems built from a unit-variance source and
//! a correlated noise vector, with exact second-order information measures.
//!
//! Every declared variable resolves to a linear combination of the base
//! coordinates `(X, W_1, .., W_m)`, so covariances of arbitrary groups are
//! exact quadratic forms. Deterministic constructions (aliases, conditional
//! means) make joint covariances singular; the rank-aware entropy API
//! evaluates conditional entropies one coordinate at a time, so a direction
//! already determined by the conditioning contributes nothing — matching the
//! vanishing-noise limit of a nondegenerate system — and combinations whose
//! free directions cancel evaluate to finite, correct values.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Eigenvalues at or below this are treated as exact zeros.
const EIG_TOL: f64 = 1e-10;

/// Rows equal within this tolerance componentwise are alias duplicates.
const ROW_TOL: f64 = 1e-12;

/// How a Gaussian variable is built from the source, the noises, and
/// previously meaningful variables.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GaussDef {
    /// Sum of (optionally) the source and the listed noises.
    NoiseSum { include_source: bool, noises: Vec<String> },
    /// Another variable under a second name.
    Alias { of: String },
    /// The conditional mean `E[X | listed variables]`.
    CondMean { of: Vec<String> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseModel {
    pub names: Vec<String>,
    /// Covariance matrix of the noises, row-major, independent of the source.
    pub cov: Vec<Vec<f64>>,
}

impl NoiseModel {
    pub fn independent(vars: &[(&str, f64)]) -> Self {
        let names = vars.iter().map(|(n, _)| n.to_string()).collect();
        let m = vars.len();
        let mut cov = vec![vec![0.0; m]; m];
        for (i, (_, v)) in vars.iter().enumerate() {
            cov[i][i] = *v;
        }
        NoiseModel { names, cov }
    }
}

/// Declarative description of a Gaussian system: the source `X` has unit
/// variance and is independent of the noise vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub noise: NoiseModel,
    pub vars: Vec<VarDef>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarDef {
    pub name: String,
    pub def: GaussDef,
}

/// A resolved system: every variable is a coefficient row over
/// `(X, W_1, .., W_m)` with base covariance `diag(1) ⊕ K_W`.
#[derive(Clone, Debug)]
pub struct GaussianSystem {
    names: Vec<String>,
    rows: Vec<DVector<f64>>,
    base_cov: DMatrix<f64>,
}

enum Slot {
    Pending(GaussDef),
    InProgress,
    Done(DVector<f64>),
}

impl GaussianSystem {
    /// Resolves a spec into explicit coefficient rows.
    ///
    /// Definitions may reference variables in any order; reference cycles
    /// are rejected. The noise covariance must be symmetric and positive
    /// semidefinite.
    pub fn resolve(spec: &GaussianSpec) -> Result<Self> {
        let m = spec.noise.names.len();
        if spec.noise.cov.len() != m || spec.noise.cov.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "noise covariance must be {m}x{m}"
            )));
        }
        for i in 0..m {
            for j in 0..m {
                if (spec.noise.cov[i][j] - spec.noise.cov[j][i]).abs() > 1e-12 {
                    return Err(Error::Invalid(format!(
                        "noise covariance not symmetric at ({}, {})",
                        spec.noise.names[i], spec.noise.names[j]
                    )));
                }
            }
        }
        let n = 1 + m;
        let mut base_cov = DMatrix::zeros(n, n);
        base_cov[(0, 0)] = 1.0;
        for i in 0..m {
            for j in 0..m {
                base_cov[(1 + i, 1 + j)] = 0.5 * (spec.noise.cov[i][j] + spec.noise.cov[j][i]);
            }
        }
        if m > 0 {
            let kw = base_cov.view((1, 1), (m, m)).into_owned();
            let eigs = kw.symmetric_eigenvalues();
            let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig < -EIG_TOL {
                return Err(Error::NonPsd { min_eig });
            }
        }

        for (i, name) in spec.noise.names.iter().enumerate() {
            if spec.noise.names[..i].contains(name) {
                return Err(Error::Invalid(format!("duplicate noise name {name}")));
            }
        }
        let mut names = vec!["X".to_string()];
        let mut slots: Vec<Slot> = vec![Slot::Done(DVector::from_fn(n, |i, _| {
            if i == 0 {
                1.0
            } else {
                0.0
            }
        }))];
        for v in &spec.vars {
            if v.name == "X" || names.contains(&v.name) || spec.noise.names.contains(&v.name) {
                return Err(Error::Invalid(format!("variable name {} already in use", v.name)));
            }
            names.push(v.name.clone());
            slots.push(Slot::Pending(v.def.clone()));
        }

        struct Ctx<'a> {
            names: &'a [String],
            noise_names: &'a [String],
            base_cov: &'a DMatrix<f64>,
            slots: &'a mut Vec<Slot>,
        }

        fn resolve_one(ctx: &mut Ctx, idx: usize) -> Result<DVector<f64>> {
            match &ctx.slots[idx] {
                Slot::Done(row) => return Ok(row.clone()),
                Slot::InProgress => return Err(Error::CyclicAlias(ctx.names[idx].clone())),
                Slot::Pending(_) => {}
            }
            let def = match std::mem::replace(&mut ctx.slots[idx], Slot::InProgress) {
                Slot::Pending(def) => def,
                _ => unreachable!(),
            };
            let n = ctx.base_cov.nrows();
            let row = match def {
                GaussDef::NoiseSum { include_source, noises } => {
                    let mut row = DVector::zeros(n);
                    if include_source {
                        row[0] = 1.0;
                    }
                    for w in &noises {
                        let wi = ctx
                            .noise_names
                            .iter()
                            .position(|x| x == w)
                            .ok_or_else(|| Error::UnknownVariable(w.clone()))?;
                        row[1 + wi] += 1.0;
                    }
                    row
                }
                GaussDef::Alias { of } => {
                    let oi = ctx
                        .names
                        .iter()
                        .position(|x| *x == of)
                        .ok_or_else(|| Error::UnknownVariable(of.clone()))?;
                    resolve_one(ctx, oi)?
                }
                GaussDef::CondMean { of } => {
                    let mut rows: Vec<DVector<f64>> = Vec::new();
                    for name in &of {
                        let oi = ctx
                            .names
                            .iter()
                            .position(|x| x == name)
                            .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
                        let r = resolve_one(ctx, oi)?;
                        if !rows.iter().any(|e| rows_equal(e, &r)) {
                            rows.push(r);
                        }
                    }
                    if rows.is_empty() {
                        return Err(Error::Invalid(format!(
                            "conditional mean for {} conditions on nothing",
                            ctx.names[idx]
                        )));
                    }
                    let k = rows.len();
                    let g = DMatrix::from_fn(k, n, |i, j| rows[i][j]);
                    let sigma_yy = &g * ctx.base_cov * g.transpose();
                    let x_row = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
                    let sigma_yx = &g * ctx.base_cov * x_row;
                    let eig = sigma_yy.clone().symmetric_eigen();
                    if eig.eigenvalues.iter().any(|&e| e <= EIG_TOL) {
                        return Err(Error::DegenerateCovariance { group: of.join(",") });
                    }
                    let beta = eig.recompose().lu().solve(&sigma_yx).ok_or(
                        Error::DegenerateCovariance { group: of.join(",") },
                    )?;
                    let mut row = DVector::zeros(n);
                    for i in 0..k {
                        row += beta[i] * &rows[i];
                    }
                    row
                }
            };
            ctx.slots[idx] = Slot::Done(row.clone());
            Ok(row)
        }

        let mut ctx = Ctx {
            names: &names,
            noise_names: &spec.noise.names,
            base_cov: &base_cov,
            slots: &mut slots,
        };
        for i in 0..names.len() {
            resolve_one(&mut ctx, i)?;
        }
        let rows = slots
            .into_iter()
            .map(|s| match s {
                Slot::Done(r) => r,
                _ => unreachable!(),
            })
            .collect();
        Ok(GaussianSystem { names, rows, base_cov })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn row(&self, name: &str) -> Result<&DVector<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.rows[i])
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn group_rows(&self, group: &[&str]) -> Result<Vec<DVector<f64>>> {
        group.iter().map(|n| self.row(n).cloned()).collect()
    }

    /// Covariance matrix of the listed variables, in the listed order.
    pub fn covariance(&self, group: &[&str]) -> Result<DMatrix<f64>> {
        let rows = self.group_rows(group)?;
        Ok(cov_of_rows(&rows, &self.base_cov))
    }

    pub fn variance(&self, name: &str) -> Result<f64> {
        Ok(self.covariance(&[name])?[(0, 0)])
    }

    /// `Var(target | given)`, the quadratic error of the conditional-mean
    /// estimator. Computed through the pseudo-inverse of the conditioning
    /// covariance, so degenerate groups (aliases, constants, deterministic
    /// combinations) are handled exactly rather than rejected.
    pub fn cond_variance(&self, target: &str, given: &[&str]) -> Result<f64> {
        let t = self.row(target)?.clone();
        let var_t = quad_form(&t, &t, &self.base_cov);
        if given.is_empty() {
            return Ok(var_t);
        }
        let rows = self.group_rows(given)?;
        let k = rows.len();
        let n = t.len();
        let g = DMatrix::from_fn(k, n, |i, j| rows[i][j]);
        let sigma_gg = &g * &self.base_cov * g.transpose();
        let sigma_gt = &g * &self.base_cov * &t;
        let eig = sigma_gg.symmetric_eigen();
        // Pseudo-inverse applied to Σ_GT: directions with zero variance
        // carry no information and drop out.
        let mut explained = 0.0;
        for (i, &e) in eig.eigenvalues.iter().enumerate() {
            if e > EIG_TOL {
                let proj = eig.eigenvectors.column(i).dot(&sigma_gt);
                explained += proj * proj / e;
            }
        }
        Ok((var_t - explained).max(0.0))
    }

    /// `½ log2 det Σ_group` with alias duplicates merged; degenerate groups
    /// (any eigenvalue at the zero tolerance) are an error.
    fn half_log_det(&self, rows: &[DVector<f64>], label: &dyn Fn() -> String) -> Result<f64> {
        if rows.is_empty() {
            return Ok(0.0);
        }
        let sigma = cov_of_rows(rows, &self.base_cov);
        let eigs = sigma.symmetric_eigenvalues();
        let mut acc = 0.0;
        for &e in eigs.iter() {
            if e <= EIG_TOL {
                return Err(Error::DegenerateCovariance { group: label() });
            }
            acc += e.log2();
        }
        Ok(0.5 * acc)
    }

    /// `I(a ; b | given)` in bits. Groups must be disjoint by name; alias
    /// duplicates across groups are merged before the determinants, so
    /// conditioning on a variable equal to one in `a` yields zero rather
    /// than a singular matrix.
    pub fn mutual_info(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Invalid("mutual information over empty group".into()));
        }
        let mut seen: Vec<&str> = Vec::new();
        for x in a.iter().chain(b).chain(given) {
            if seen.contains(x) {
                return Err(Error::OverlappingGroups((*x).to_string()));
            }
            seen.push(x);
        }
        let ra = self.group_rows(a)?;
        let rb = self.group_rows(b)?;
        let rc = self.group_rows(given)?;
        let merged = |parts: &[&[DVector<f64>]]| -> Vec<DVector<f64>> {
            let mut v: Vec<DVector<f64>> = Vec::new();
            for p in parts {
                for r in *p {
                    if !v.iter().any(|e| rows_equal(e, r)) {
                        v.push(r.clone());
                    }
                }
            }
            v
        };
        let name = |gs: &[&[&str]]| {
            let mut v: Vec<&str> = Vec::new();
            for g in gs {
                v.extend_from_slice(g);
            }
            v.join(",")
        };
        let l_ac = self.half_log_det(&merged(&[&ra, &rc]), &|| name(&[a, given]))?;
        let l_bc = self.half_log_det(&merged(&[&rb, &rc]), &|| name(&[b, given]))?;
        let l_c = self.half_log_det(&merged(&[&rc]), &|| name(&[given]))?;
        let l_abc = self.half_log_det(&merged(&[&ra, &rb, &rc]), &|| name(&[a, b, given]))?;
        let mi = l_ac + l_bc - l_c - l_abc;
        if mi < 0.0 && mi >= -1e-9 {
            Ok(0.0)
        } else {
            Ok(mi)
        }
    }

    /// Rank and `½ log2` pseudo-determinant of the group covariance.
    pub fn entropy_parts(&self, group: &[&str]) -> Result<(usize, f64)> {
        let rows = self.group_rows(group)?;
        if rows.is_empty() {
            return Ok((0, 0.0));
        }
        let sigma = cov_of_rows(&rows, &self.base_cov);
        let eigs = sigma.symmetric_eigenvalues();
        let mut rank = 0usize;
        let mut acc = 0.0;
        for &e in eigs.iter() {
            if e > EIG_TOL {
                rank += 1;
                acc += e.log2();
            }
        }
        Ok((rank, 0.5 * acc))
    }

    /// Rank-aware conditional entropy of `target` given `given`, chained one
    /// coordinate at a time. Each free coordinate adds `½ log2` of its scalar
    /// conditional variance; a coordinate the conditioning already determines
    /// adds nothing, which is the vanishing-noise limit of a nondegenerate
    /// system. Returns `(free directions, value)`; the value is a differential
    /// entropy up to the `(rank/2)·log2(2πe)` normalization carried by the
    /// rank.
    pub fn cond_entropy_parts(&self, target: &[&str], given: &[&str]) -> Result<(i64, f64)> {
        let mut acc: Vec<&str> = given.to_vec();
        let mut rank: i64 = 0;
        let mut value = 0.0;
        for t in target {
            let v = self.cond_variance(t, &acc)?;
            if v > EIG_TOL {
                rank += 1;
                value += 0.5 * v.log2();
            }
            acc.push(t);
        }
        Ok((rank, value))
    }

    /// Evaluates a signed sum of conditional entropies whose degenerate
    /// directions must cancel: the signed rank total has to be zero, so the
    /// omitted `log2(2πe)` normalizations vanish and the value is exact.
    pub fn entropy_combination(&self, terms: &[EntropyTerm]) -> Result<f64> {
        let mut rank: i64 = 0;
        let mut value = 0.0;
        for term in terms {
            let t: Vec<&str> = term.target.iter().map(String::as_str).collect();
            let g: Vec<&str> = term.given.iter().map(String::as_str).collect();
            let (r, v) = self.cond_entropy_parts(&t, &g)?;
            rank += term.sign as i64 * r;
            value += term.sign as f64 * v;
        }
        if rank != 0 {
            return Err(Error::DegenerateCovariance {
                group: format!("entropy combination leaves net dimension {rank:+}"),
            });
        }
        Ok(value)
    }
}

/// One signed conditional entropy `sign · H(target | given)`.
#[derive(Clone, Debug)]
pub struct EntropyTerm {
    pub sign: i32,
    pub target: Vec<String>,
    pub given: Vec<String>,
}

impl EntropyTerm {
    pub fn new(sign: i32, target: &[&str], given: &[&str]) -> Self {
        EntropyTerm {
            sign,
            target: target.iter().map(|s| s.to_string()).collect(),
            given: given.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn rows_equal(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= ROW_TOL)
}

fn quad_form(a: &DVector<f64>, b: &DVector<f64>, c: &DMatrix<f64>) -> f64 {
    (a.transpose() * c * b)[(0, 0)]
}

fn cov_of_rows(rows: &[DVector<f64>], base_cov: &DMatrix<f64>) -> DMatrix<f64> {
    let k = rows.len();
    DMatrix::from_fn(k, k, |i, j| quad_form(&rows[i], &rows[j], base_cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn noisy_obs(sigma2: f64) -> GaussianSystem {
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", sigma2)]),
            vars: vec![VarDef {
                name: "Y".into(),
                def: GaussDef::NoiseSum { include_source: true, noises: vec!["W1".into()] },
            }],
        };
        GaussianSystem::resolve(&spec).unwrap()
    }

    #[test]
    fn awgn_mutual_info_and_conditional_variance() {
        let sys = noisy_obs(0.25);
        let mi = sys.mutual_info(&["X"], &["Y"], &[]).unwrap();
        assert!((mi - 0.5 * (5.0f64).log2()).abs() < 1e-12);
        let cv = sys.cond_variance("X", &["Y"]).unwrap();
        assert!((cv - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cond_mean_is_orthogonal_projection() {
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", 0.5)]),
            vars: vec![
                VarDef {
                    name: "Y".into(),
                    def: GaussDef::NoiseSum { include_source: true, noises: vec!["W1".into()] },
                },
                VarDef { name: "U".into(), def: GaussDef::CondMean { of: vec!["Y".into()] } },
            ],
        };
        let sys = GaussianSystem::resolve(&spec).unwrap();
        // E[X|Y] = Y/(1+σ²); Cov(X−U, Y) = 0 and Var(X−U) = Var(X|Y).
        let c = sys.covariance(&["X", "U", "Y"]).unwrap();
        let cov_xu = c[(0, 1)];
        let cov_uy = c[(1, 2)];
        let cov_xy = c[(0, 2)];
        assert!((cov_xy - cov_uy).abs() < 1e-12);
        let var_err = c[(0, 0)] - 2.0 * cov_xu + c[(1, 1)];
        assert!((var_err - sys.cond_variance("X", &["Y"]).unwrap()).abs() < 1e-12);
    }

    fn random_system(rng: &mut ChaCha8Rng) -> GaussianSystem {
        let m = 3usize;
        let a = DMatrix::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
        let kw = &a * a.transpose() + DMatrix::identity(m, m) * 0.05;
        let noise = NoiseModel {
            names: vec!["W1".into(), "W2".into(), "W3".into()],
            cov: (0..m).map(|i| (0..m).map(|j| kw[(i, j)]).collect()).collect(),
        };
        let mut vars = Vec::new();
        for (i, name) in ["A", "B", "C"].iter().enumerate() {
            let noises = vec![format!("W{}", i + 1)];
            vars.push(VarDef {
                name: name.to_string(),
                def: GaussDef::NoiseSum { include_source: true, noises },
            });
        }
        GaussianSystem::resolve(&GaussianSpec { noise, vars }).unwrap()
    }

    #[test]
    fn mutual_info_symmetry_and_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let sys = random_system(&mut rng);
            let ab = sys.mutual_info(&["A"], &["B"], &["C"]).unwrap();
            let ba = sys.mutual_info(&["B"], &["A"], &["C"]).unwrap();
            assert!((ab - ba).abs() < 1e-9);
            // Chain rule: I(X; A,B) = I(X;A) + I(X;B|A).
            let lhs = sys.mutual_info(&["X"], &["A", "B"], &[]).unwrap();
            let rhs = sys.mutual_info(&["X"], &["A"], &[]).unwrap()
                + sys.mutual_info(&["X"], &["B"], &["A"]).unwrap();
            assert!((lhs - rhs).abs() < 1e-9);
            assert!(ab >= 0.0);
        }
    }

    #[test]
    fn alias_merging_in_strict_mutual_info() {
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", 0.3)]),
            vars: vec![
                VarDef {
                    name: "V".into(),
                    def: GaussDef::NoiseSum { include_source: true, noises: vec!["W1".into()] },
                },
                VarDef { name: "U".into(), def: GaussDef::Alias { of: "V".into() } },
            ],
        };
        let sys = GaussianSystem::resolve(&spec).unwrap();
        assert!(sys.mutual_info(&["X"], &["U"], &["V"]).unwrap().abs() < 1e-12);
        let joint = sys.mutual_info(&["X"], &["U", "V"], &[]).unwrap();
        let single = sys.mutual_info(&["X"], &["V"], &[]).unwrap();
        assert!((joint - single).abs() < 1e-12);
    }

    #[test]
    fn degenerate_group_is_rejected_in_strict_path() {
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", 0.5), ("W2", 0.5)]),
            vars: vec![
                VarDef {
                    name: "Y".into(),
                    def: GaussDef::NoiseSum { include_source: true, noises: vec!["W1".into()] },
                },
                VarDef {
                    name: "Z".into(),
                    def: GaussDef::NoiseSum { include_source: true, noises: vec!["W2".into()] },
                },
                VarDef {
                    name: "M".into(),
                    def: GaussDef::CondMean { of: vec!["Y".into(), "Z".into()] },
                },
            ],
        };
        let sys = GaussianSystem::resolve(&spec).unwrap();
        // M is a linear combination of Y and Z: the triple is singular.
        assert!(matches!(
            sys.mutual_info(&["X"], &["Y", "Z", "M"], &[]),
            Err(Error::DegenerateCovariance { .. })
        ));
        // But the rank-aware path handles it.
        let (rank, _) = sys.entropy_parts(&["Y", "Z", "M"]).unwrap();
        assert_eq!(rank, 2);
    }

    #[test]
    fn entropy_combination_matches_strict_mi_when_nondegenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let sys = random_system(&mut rng);
            // I(A; B | C) = h(A|C) − h(A|B,C).
            let combo = sys
                .entropy_combination(&[
                    EntropyTerm::new(1, &["A"], &["C"]),
                    EntropyTerm::new(-1, &["A"], &["B", "C"]),
                ])
                .unwrap();
            let mi = sys.mutual_info(&["A"], &["B"], &["C"]).unwrap();
            assert!((combo - mi).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_combination_rank_check() {
        let sys = noisy_obs(0.5);
        // h(Y|X) alone leaves one uncancelled dimension.
        assert!(matches!(
            sys.entropy_combination(&[EntropyTerm::new(1, &["Y"], &["X"])]),
            Err(Error::DegenerateCovariance { .. })
        ));
        // h(Y|X) − h(Y|X) cancels.
        let zero = sys
            .entropy_combination(&[
                EntropyTerm::new(1, &["Y"], &["X"]),
                EntropyTerm::new(-1, &["Y"], &["X"]),
            ])
            .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn cycles_and_unknowns() {
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", 1.0)]),
            vars: vec![
                VarDef { name: "A".into(), def: GaussDef::Alias { of: "B".into() } },
                VarDef { name: "B".into(), def: GaussDef::Alias { of: "A".into() } },
            ],
        };
        assert!(matches!(
            GaussianSystem::resolve(&spec),
            Err(Error::CyclicAlias(_))
        ));
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", 1.0)]),
            vars: vec![VarDef { name: "A".into(), def: GaussDef::Alias { of: "Q".into() } }],
        };
        assert!(matches!(
            GaussianSystem::resolve(&spec),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn forward_reference_is_allowed() {
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", 0.4)]),
            vars: vec![
                VarDef { name: "A".into(), def: GaussDef::Alias { of: "B".into() } },
                VarDef {
                    name: "B".into(),
                    def: GaussDef::NoiseSum { include_source: true, noises: vec!["W1".into()] },
                },
            ],
        };
        let sys = GaussianSystem::resolve(&spec).unwrap();
        assert!((sys.variance("A").unwrap() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn non_psd_noise_rejected() {
        let noise = NoiseModel {
            names: vec!["W1".into(), "W2".into()],
            cov: vec![vec![1.0, 0.9], vec![0.9, 0.5]],
        };
        let spec = GaussianSpec { noise, vars: vec![] };
        assert!(matches!(GaussianSystem::resolve(&spec), Err(Error::NonPsd { .. })));
    }

    #[test]
    fn spec_serde_round_trip() {
        let spec = GaussianSpec {
            noise: NoiseModel::independent(&[("W1", 0.25), ("W2", 0.5)]),
            vars: vec![
                VarDef {
                    name: "V13".into(),
                    def: GaussDef::NoiseSum { include_source: true, noises: vec!["W1".into()] },
                },
                VarDef { name: "U1".into(), def: GaussDef::Alias { of: "V13".into() } },
                VarDef {
                    name: "U12".into(),
                    def: GaussDef::CondMean { of: vec!["V13".into(), "U2".into()] },
                },
            ],
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: GaussianSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.vars.len(), 3);
        assert!(json.contains("noise_sum") && json.contains("cond_mean"));
    }
}

//! Random-coding simulator at desk-scale blocklengths.
//!
//! Builds the layered codebook hierarchy of the sharing scheme from a joint
//! distribution, encodes source blocks by exhaustive joint-typicality search,
//! and sweeps one auxiliary rate to locate the empirical success threshold.
//!
//! Codewords are never stored: each one is regenerated on demand from a seed
//! derived from (trial seed, variable, conditioning indices, codeword index),
//! so a codebook with a nominal `2^{nR}` codewords costs nothing until the
//! search actually reads an entry. [`CodebookHierarchy::materialize`] offers
//! the table view for small configurations and enforces [`STORAGE_BUDGET`];
//! the per-encoding work is bounded separately by `TrialConfig::search_cap`
//! (a capped search counts as failure and is visible in
//! [`TrialResult::searched`]).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{for_each_qstar, DescSet, QFamily};
use crate::error::{Error, Result};
use crate::pmf::JointPmf;
use crate::regions::{
    alpha, decoder_observation, nonempty_subsets, shared_subsets, u_name, v_name, RateVariable,
    Witness,
};

/// Largest supported blocklength.
pub const MAX_BLOCKLENGTH: usize = 16;
/// Largest supported per-variable alphabet.
pub const MAX_SIM_ALPHABET: usize = 4;
/// Largest supported number of descriptions.
pub const MAX_SIM_L: usize = 3;
/// Cap on codewords a materialized table view may hold.
pub const STORAGE_BUDGET: u128 = 1 << 20;
/// Default cap on index tuples one encoding may examine.
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 20;

const TRIAL_SALT: u64 = 0x7472_6961;
const SOURCE_SALT: u64 = 0x736f_7572;
const CODE_SALT: u64 = 0x636f_6465;
const SOURCE_ATTEMPTS: usize = 10_000;

fn default_search_cap() -> u64 {
    DEFAULT_SEARCH_CAP
}

/// One simulation job: the joint law, the blocklength, the auxiliary rates,
/// and the trial plan.
///
/// `dist` must contain the source `X` together with every codebook variable
/// of the `l`-description template (shares `V_K` for `|K| >= 2`, bases `U_l`,
/// refinements `U_K`); variables that should carry nothing are modelled with
/// one-symbol alphabets. Refinement codebooks hold a single codeword per
/// conditioning realization and consume no rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialConfig {
    pub dist: JointPmf,
    pub l: usize,
    /// Blocklength, at most [`MAX_BLOCKLENGTH`].
    pub n: usize,
    /// Typicality tolerance: empirical frequencies may deviate from the law
    /// by at most `epsilon * |support|` per cell.
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Cap on examined tuples per encoding; hitting it counts as failure.
    #[serde(default = "default_search_cap")]
    pub search_cap: u64,
    /// Rates of the shared codebooks in bits per symbol, one per `V_K`.
    pub shared_rates: Vec<(DescSet, f64)>,
    /// Rates of the base codebooks in bits per symbol, keyed by description.
    pub private_rates: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct Node {
    name: String,
    /// Conditioning variables as indices into the node list; generation order
    /// guarantees they precede this node.
    cond: Vec<usize>,
    /// Transitive dependency closure, sorted; identifies the conditioning
    /// index tuple when deriving codeword seeds.
    closure: Vec<usize>,
    /// Codewords per conditioning realization (always 1 for refinements).
    count: u64,
    card: usize,
    /// Conditional law: `rows[flat conditioning assignment]` is a pmf over
    /// the node's alphabet. Zero-mass assignments fall back to uniform (they
    /// can be reached because conditioning codewords are drawn independently
    /// of one another; such tuples are rejected by the typicality test).
    rows: Vec<Vec<f64>>,
}

/// Bayes-optimal per-letter reconstruction for one decoder.
#[derive(Debug, Clone)]
struct Decoder {
    set: DescSet,
    /// Observed variables as node indices.
    obs: Vec<usize>,
    /// Best reconstruction per flat observation assignment.
    table: Vec<u8>,
    /// Exact expected distortion of this decoder under the law.
    exact: f64,
}

/// The codebook hierarchy: layout, counts, conditional laws, and the decoder
/// tables — everything except the codewords themselves, which are
/// regenerated on demand from derived seeds.
#[derive(Debug, Clone)]
pub struct CodebookHierarchy {
    nodes: Vec<Node>,
    n: usize,
    seed: u64,
    /// Dense joint law over `(X, nodes...)` in generation order, X slowest.
    joint: Vec<f64>,
    /// Number of positive cells of `joint`.
    support: usize,
    x_card: usize,
    x_table: Vec<f64>,
    x_support: usize,
    decoders: Vec<Decoder>,
}

/// Outcome of encoding one source block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Whether a jointly typical tuple was found before the search ended.
    pub success: bool,
    /// Index tuples examined (capped by `search_cap`).
    pub searched: u64,
    /// Per-decoder empirical distortions of the selected tuple, canonical
    /// subset order; empty on failure.
    pub distortions: Vec<(DescSet, f64)>,
}

/// One point of a rate sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rate: f64,
    pub successes: usize,
    pub trials: usize,
    /// Mean empirical distortion per decoder over successful trials,
    /// canonical subset order; `NaN` when no trial succeeded.
    pub mean_distortions: Vec<(DescSet, f64)>,
}

fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &p in parts {
        for b in p.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn count_from_rate(n: usize, rate: f64) -> Result<u64> {
    if !rate.is_finite() {
        return Err(Error::Invalid(format!("rate {rate} is not finite")));
    }
    let e = n as f64 * rate;
    if e > 62.0 {
        return Err(Error::BudgetExceeded(format!(
            "codebook of 2^{e:.1} codewords exceeds the index budget"
        )));
    }
    if e <= 0.0 {
        return Ok(1);
    }
    Ok(e.exp2().ceil() as u64)
}

fn sample_row(row: &[f64], rng: &mut ChaCha8Rng) -> u8 {
    let u = f64::from(rng.next_u32()) / f64::from(u32::MAX) / (1.0 + 1e-9);
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u8;
        }
    }
    (row.len() - 1) as u8
}

/// Validates the configuration and assembles the hierarchy: shares in
/// cardinality-descending order, then bases, then refinements in
/// cardinality-ascending order, each with its conditional law and codeword
/// count `⌈2^{nR}⌉`.
pub fn build_codebooks(cfg: &TrialConfig) -> Result<CodebookHierarchy> {
    if cfg.l == 0 || cfg.l > MAX_SIM_L {
        return Err(Error::WrongL { expected: MAX_SIM_L, got: cfg.l });
    }
    if cfg.n == 0 || cfg.n > MAX_BLOCKLENGTH {
        return Err(Error::TooLarge { l: cfg.n, max: MAX_BLOCKLENGTH });
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::OutOfRange { what: "epsilon", value: cfg.epsilon });
    }
    if cfg.trials == 0 {
        return Err(Error::Invalid("trial count must be positive".into()));
    }
    if cfg.search_cap == 0 {
        return Err(Error::Invalid("search cap must be positive".into()));
    }
    let shared = shared_subsets(cfg.l);
    let mut expected: Vec<String> = vec!["X".to_string()];
    expected.extend(shared.iter().map(v_name));
    expected.extend(nonempty_subsets(cfg.l).iter().map(u_name));
    for name in &expected {
        cfg.dist.card_of(name)?;
    }
    if cfg.dist.names().len() != expected.len() {
        let extra: Vec<&str> = cfg
            .dist
            .names()
            .iter()
            .filter(|n| !expected.contains(n))
            .map(|n| n.as_str())
            .collect();
        return Err(Error::Invalid(format!(
            "distribution has variables outside the {}-description template: {}",
            cfg.l,
            extra.join(", ")
        )));
    }
    for (name, &card) in cfg.dist.names().iter().zip(cfg.dist.cards()) {
        if card > MAX_SIM_ALPHABET {
            return Err(Error::Invalid(format!(
                "alphabet of {name} has {card} symbols, more than {MAX_SIM_ALPHABET}"
            )));
        }
    }
    let shared_rate = |k: &DescSet| -> Result<f64> {
        let hits: Vec<f64> = cfg
            .shared_rates
            .iter()
            .filter(|(s, _)| s.bits() == k.bits())
            .map(|&(_, r)| r)
            .collect();
        match hits.len() {
            1 => Ok(hits[0]),
            0 => Err(Error::Invalid(format!("missing rate for share {}", v_name(k)))),
            _ => Err(Error::Invalid(format!("duplicate rate for share {}", v_name(k)))),
        }
    };
    let private_rate = |i: usize| -> Result<f64> {
        let hits: Vec<f64> =
            cfg.private_rates.iter().filter(|&&(j, _)| j == i).map(|&(_, r)| r).collect();
        match hits.len() {
            1 => Ok(hits[0]),
            0 => Err(Error::Invalid(format!("missing rate for base U{i}"))),
            _ => Err(Error::Invalid(format!("duplicate rate for base U{i}"))),
        }
    };

    // Node skeletons in generation order.
    let mut specs: Vec<(String, Vec<String>, u64)> = Vec::new();
    for k in &shared {
        let conds: Vec<String> =
            shared.iter().filter(|a| a.is_strict_superset_of(k)).map(v_name).collect();
        specs.push((v_name(k), conds, count_from_rate(cfg.n, shared_rate(k)?)?));
    }
    for i in 1..=cfg.l {
        let conds: Vec<String> =
            shared.iter().filter(|a| a.contains(i)).map(v_name).collect();
        let name = u_name(&DescSet::singleton(cfg.l, i));
        specs.push((name, conds, count_from_rate(cfg.n, private_rate(i)?)?));
    }
    let mut refinements: Vec<DescSet> =
        nonempty_subsets(cfg.l).into_iter().filter(|k| k.card() >= 2).collect();
    refinements.sort_by_key(|k| (k.card(), k.bits()));
    for k in &refinements {
        let mut conds: Vec<String> = shared
            .iter()
            .filter(|a| a.bits() == k.bits() || a.is_strict_superset_of(k))
            .map(v_name)
            .collect();
        let mut subs: Vec<DescSet> = k
            .subsets()
            .into_iter()
            .filter(|a| !a.is_empty() && a.bits() != k.bits())
            .collect();
        subs.sort_by_key(|a| (a.card(), a.bits()));
        conds.extend(subs.iter().map(u_name));
        specs.push((u_name(k), conds, 1));
    }

    let mut nodes: Vec<Node> = Vec::with_capacity(specs.len());
    for (name, conds, count) in specs {
        let cond: Vec<usize> = conds
            .iter()
            .map(|c| nodes.iter().position(|n| &n.name == c).expect("generation order"))
            .collect();
        let mut closure: Vec<usize> = cond.clone();
        for &c in &cond {
            closure.extend_from_slice(&nodes[c].closure);
        }
        closure.sort_unstable();
        closure.dedup();
        let card = cfg.dist.card_of(&name)?;
        let mut order: Vec<&str> = conds.iter().map(|s| s.as_str()).collect();
        order.push(&name);
        let table = cfg.dist.marginal(&order)?;
        let rows: Vec<Vec<f64>> = table
            .probs()
            .chunks(card)
            .map(|chunk| {
                let s: f64 = chunk.iter().sum();
                if s > 0.0 {
                    chunk.iter().map(|p| p / s).collect()
                } else {
                    vec![1.0 / card as f64; card]
                }
            })
            .collect();
        nodes.push(Node { name, cond, closure, count, card, rows });
    }

    let mut joint_order: Vec<&str> = vec!["X"];
    joint_order.extend(nodes.iter().map(|n| n.name.as_str()));
    let joint = cfg.dist.marginal(&joint_order)?.probs().to_vec();
    let support = joint.iter().filter(|&&p| p > 0.0).count();
    let x_pmf = cfg.dist.marginal(&["X"])?;
    let x_table = x_pmf.probs().to_vec();
    let x_support = x_table.iter().filter(|&&p| p > 0.0).count();
    let x_card = x_table.len();

    let mut decoders = Vec::new();
    for k in nonempty_subsets(cfg.l) {
        let obs_names = decoder_observation(cfg.l, &k)?;
        let obs: Vec<usize> = obs_names
            .iter()
            .map(|c| nodes.iter().position(|n| &n.name == c).expect("full template"))
            .collect();
        let mut order: Vec<&str> = vec!["X"];
        order.extend(obs_names.iter().map(|s| s.as_str()));
        let table_pmf = cfg.dist.marginal(&order)?;
        let table_probs = table_pmf.probs();
        let obs_space: usize = obs.iter().map(|&i| nodes[i].card).product();
        let mut table = Vec::with_capacity(obs_space);
        let mut exact = 0.0;
        for g in 0..obs_space {
            let mut best = (0u8, f64::INFINITY);
            for z in 0..x_card {
                let cost: f64 = (0..x_card)
                    .filter(|&x| x != z)
                    .map(|x| table_probs[x * obs_space + g])
                    .sum();
                if cost < best.1 {
                    best = (z as u8, cost);
                }
            }
            table.push(best.0);
            exact += best.1;
        }
        decoders.push(Decoder { set: k, obs, table, exact });
    }

    Ok(CodebookHierarchy {
        nodes,
        n: cfg.n,
        seed: cfg.seed,
        joint,
        support,
        x_card,
        x_table,
        x_support,
        decoders,
    })
}

impl CodebookHierarchy {
    /// Codeword counts per variable, generation order.
    pub fn counts(&self) -> Vec<(String, u64)> {
        self.nodes.iter().map(|n| (n.name.clone(), n.count)).collect()
    }

    /// Variable names in generation order.
    pub fn node_names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    /// Exact per-decoder expected distortions under the law, canonical
    /// subset order.
    pub fn exact_distortions(&self) -> Vec<(DescSet, f64)> {
        self.decoders.iter().map(|d| (d.set, d.exact)).collect()
    }

    fn node_index(&self, var: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n.name == var)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    /// Regenerates the codeword of node `k` under the index `tuple`,
    /// assuming `words[..k]` already reflect the tuple.
    fn regenerate(&self, code_seed: u64, k: usize, tuple: &[u64], words: &mut [Vec<u8>]) {
        let node = &self.nodes[k];
        let mut parts = Vec::with_capacity(3 + node.closure.len());
        parts.push(code_seed);
        parts.push(k as u64);
        parts.extend(node.closure.iter().map(|&c| tuple[c]));
        parts.push(tuple[k]);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&parts));
        for t in 0..self.n {
            let mut flat = 0usize;
            for &c in &node.cond {
                flat = flat * self.nodes[c].card + words[c][t] as usize;
            }
            let sym = sample_row(&node.rows[flat], &mut rng);
            words[k][t] = sym;
        }
    }

    fn fresh_words(&self) -> Vec<Vec<u8>> {
        self.nodes.iter().map(|_| vec![0u8; self.n]).collect()
    }

    /// The codeword of `var` under a full index tuple (one index per
    /// variable in generation order; entries outside the variable's
    /// dependency closure are ignored). Uses the hierarchy's own seed.
    pub fn codeword(&self, var: &str, tuple: &[u64]) -> Result<Vec<u8>> {
        let k = self.node_index(var)?;
        if tuple.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch(format!(
                "index tuple has {} entries, hierarchy has {} variables",
                tuple.len(),
                self.nodes.len()
            )));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if tuple[i] >= node.count {
                return Err(Error::Invalid(format!(
                    "index {} out of range for {} ({} codewords)",
                    tuple[i], node.name, node.count
                )));
            }
        }
        let mut words = self.fresh_words();
        for i in 0..=k {
            self.regenerate(self.seed, i, tuple, &mut words);
        }
        Ok(words.swap_remove(k))
    }

    /// Total codewords a table view would store.
    pub fn table_size(&self) -> u128 {
        self.nodes
            .iter()
            .map(|n| {
                n.closure
                    .iter()
                    .map(|&c| u128::from(self.nodes[c].count))
                    .fold(u128::from(n.count), |a, b| a.saturating_mul(b))
            })
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    /// Materialized table view: per variable, all codewords in lexicographic
    /// (closure indices, own index) order. Fails with the storage budget when
    /// the tables would hold more than [`STORAGE_BUDGET`] codewords.
    pub fn materialize(&self) -> Result<Vec<Vec<Vec<u8>>>> {
        let total = self.table_size();
        if total > STORAGE_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "{total} codewords exceed the storage budget of {STORAGE_BUDGET}"
            )));
        }
        let mut out = Vec::with_capacity(self.nodes.len());
        for (k, node) in self.nodes.iter().enumerate() {
            let mut axes: Vec<usize> = node.closure.clone();
            axes.push(k);
            let mut table = Vec::new();
            let mut tuple = vec![0u64; self.nodes.len()];
            loop {
                table.push(self.codeword(&node.name, &tuple)?);
                let mut pos = axes.len();
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    let ax = axes[pos];
                    tuple[ax] += 1;
                    if tuple[ax] < self.nodes[ax].count {
                        break;
                    }
                    tuple[ax] = 0;
                }
                if tuple[axes[0]] == 0 && axes.iter().all(|&ax| tuple[ax] == 0) {
                    break;
                }
            }
            out.push(table);
        }
        Ok(out)
    }

    /// Strong-typicality test of `(x, words)` against the joint law: zero
    /// cells must stay empty and every cell frequency must be within
    /// `epsilon * |support|` of its probability.
    fn typical(&self, epsilon: f64, mandatory: usize, x: &[u8], words: &[Vec<u8>]) -> bool {
        let n = self.n;
        let tol = epsilon * self.support as f64;
        let mut cells = [0u32; MAX_BLOCKLENGTH];
        for t in 0..n {
            let mut c = x[t] as usize;
            for (w, node) in words.iter().zip(&self.nodes) {
                c = c * node.card + w[t] as usize;
            }
            if self.joint[c] == 0.0 {
                return false;
            }
            cells[t] = c as u32;
        }
        let cells = &mut cells[..n];
        cells.sort_unstable();
        let mut seen_mandatory = 0usize;
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j < n && cells[j] == cells[i] {
                j += 1;
            }
            let p = self.joint[cells[i] as usize];
            let freq = (j - i) as f64 / n as f64;
            if (freq - p).abs() > tol {
                return false;
            }
            if p > tol {
                seen_mandatory += 1;
            }
            i = j;
        }
        seen_mandatory == mandatory
    }

    fn mandatory_cells(&self, epsilon: f64) -> usize {
        let tol = epsilon * self.support as f64;
        self.joint.iter().filter(|&&p| p > tol).count()
    }

    fn source_typical(&self, epsilon: f64, x: &[u8]) -> bool {
        let tol = epsilon * self.x_support as f64;
        let n = x.len() as f64;
        let mut counts = vec![0usize; self.x_card];
        for &s in x {
            if self.x_table[s as usize] == 0.0 {
                return false;
            }
            counts[s as usize] += 1;
        }
        counts
            .iter()
            .zip(&self.x_table)
            .all(|(&c, &p)| (c as f64 / n - p).abs() <= tol)
    }
}

fn encode_seeded(
    cfg: &TrialConfig,
    hier: &CodebookHierarchy,
    x: &[u8],
    code_seed: u64,
) -> Result<TrialResult> {
    if x.len() != hier.n {
        return Err(Error::DimensionMismatch(format!(
            "source block has {} symbols, blocklength is {}",
            x.len(),
            hier.n
        )));
    }
    if x.iter().any(|&s| (s as usize) >= hier.x_card) {
        return Err(Error::Invalid("source symbol outside the alphabet".into()));
    }
    let mandatory = hier.mandatory_cells(cfg.epsilon);
    let m = hier.nodes.len();
    let mut tuple = vec![0u64; m];
    let mut words = hier.fresh_words();
    for k in 0..m {
        hier.regenerate(code_seed, k, &tuple, &mut words);
    }
    let mut searched = 0u64;
    let mut success = false;
    loop {
        searched += 1;
        if hier.typical(cfg.epsilon, mandatory, x, &words) {
            success = true;
            break;
        }
        if searched >= cfg.search_cap {
            break;
        }
        // Advance the index odometer lexicographically (last variable
        // fastest) and regenerate the suffix whose contents changed.
        let mut k = m;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < hier.nodes[k].count {
                break;
            }
            tuple[k] = 0;
        }
        if k == 0 && tuple[0] == 0 {
            break; // exhausted the whole tuple space
        }
        for j in k..m {
            hier.regenerate(code_seed, j, &tuple, &mut words);
        }
    }
    let mut distortions = Vec::new();
    if success {
        for dec in &hier.decoders {
            let mut total = 0.0;
            for t in 0..hier.n {
                let mut flat = 0usize;
                for &o in &dec.obs {
                    flat = flat * hier.nodes[o].card + words[o][t] as usize;
                }
                if dec.table[flat] != x[t] {
                    total += 1.0;
                }
            }
            distortions.push((dec.set, total / hier.n as f64));
        }
    }
    Ok(TrialResult { success, searched, distortions })
}

/// Encodes one source block against the hierarchy: exhaustive lexicographic
/// search for a jointly typical index tuple, then Bayes-optimal per-letter
/// reconstruction at every decoder. Failure to find a tuple (including a
/// capped search) is a valid result, not an error.
pub fn encode(cfg: &TrialConfig, hier: &CodebookHierarchy, x: &[u8]) -> Result<TrialResult> {
    encode_seeded(cfg, hier, x, hier.seed)
}

fn sample_source(hier: &CodebookHierarchy, epsilon: f64, seed: u64) -> Result<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0u8; hier.n];
    for _ in 0..SOURCE_ATTEMPTS {
        for t in 0..hier.n {
            x[t] = sample_row(&hier.x_table, &mut rng);
        }
        if hier.source_typical(epsilon, &x) {
            return Ok(x);
        }
    }
    Err(Error::Invalid(format!(
        "no typical source block of length {} found in {SOURCE_ATTEMPTS} attempts",
        hier.n
    )))
}

fn run_one(cfg: &TrialConfig, hier: &CodebookHierarchy, trial: u64) -> Result<TrialResult> {
    let trial_seed = derive_seed(&[cfg.seed, TRIAL_SALT, trial]);
    let x = sample_source(hier, cfg.epsilon, derive_seed(&[trial_seed, SOURCE_SALT]))?;
    encode_seeded(cfg, hier, &x, derive_seed(&[trial_seed, CODE_SALT]))
}

/// Runs `cfg.trials` independent trials (fresh source block and codebooks per
/// trial, seeds derived from `cfg.seed`), fanned out over the worker pool.
pub fn run_trials(cfg: &TrialConfig) -> Result<Vec<TrialResult>> {
    let hier = build_codebooks(cfg)?;
    let idx: Vec<u64> = (0..cfg.trials as u64).collect();
    crate::par::map_collect(idx, |i| run_one(cfg, &hier, i)).into_iter().collect()
}

/// Sequential twin of [`run_trials`]; produces identical results.
pub fn run_trials_seq(cfg: &TrialConfig) -> Result<Vec<TrialResult>> {
    let hier = build_codebooks(cfg)?;
    (0..cfg.trials as u64).map(|i| run_one(cfg, &hier, i)).collect()
}

fn axis_member(cfg: &TrialConfig, axis: &RateVariable) -> Result<DescSet> {
    match axis {
        RateVariable::Private(i) => {
            let i = *i as usize;
            if i == 0 || i > cfg.l {
                return Err(Error::UnknownVariable(format!("U{i}")));
            }
            Ok(DescSet::singleton(cfg.l, i))
        }
        RateVariable::Shared(bits) => {
            if u32::from(*bits) >= (1u32 << cfg.l) || bits.count_ones() < 2 {
                return Err(Error::UnknownVariable(format!("share with bits {bits:#x}")));
            }
            Ok(DescSet::from_bits(cfg.l, *bits))
        }
        RateVariable::Total(_) => {
            Err(Error::Invalid("sweep axis must be an auxiliary rate, not a total".into()))
        }
    }
}

fn member_rate(cfg: &TrialConfig, k: &DescSet) -> Result<f64> {
    if k.card() == 1 {
        let i = k.indices()[0];
        cfg.private_rates
            .iter()
            .find(|&&(j, _)| j == i)
            .map(|&(_, r)| r)
            .ok_or_else(|| Error::UnknownVariable(format!("U{i}")))
    } else {
        cfg.shared_rates
            .iter()
            .find(|(s, _)| s.bits() == k.bits())
            .map(|&(_, r)| r)
            .ok_or_else(|| Error::UnknownVariable(v_name(k)))
    }
}

fn set_member_rate(cfg: &mut TrialConfig, k: &DescSet, rate: f64) {
    if k.card() == 1 {
        let i = k.indices()[0];
        for entry in &mut cfg.private_rates {
            if entry.0 == i {
                entry.1 = rate;
            }
        }
    } else {
        for entry in &mut cfg.shared_rates {
            if entry.0.bits() == k.bits() {
                entry.1 = rate;
            }
        }
    }
}

/// The rate at which the swept variable starts satisfying every sharing
/// constraint it participates in, holding the other rates fixed: the largest
/// `α(Q) - Σ (other member rates)` over superset-closed families `Q` whose
/// member set includes the swept variable.
pub fn predicted_threshold(cfg: &TrialConfig, axis: &RateVariable) -> Result<f64> {
    let member = axis_member(cfg, axis)?;
    let witness = Witness::Discrete(cfg.dist.clone());
    let mut best = f64::NEG_INFINITY;
    let mut failure: Option<Error> = None;
    for_each_qstar(cfg.l, |members| {
        if failure.is_some() || !members.iter().any(|m| m.bits() == member.bits()) {
            return;
        }
        let q = QFamily::new(cfg.l, members.to_vec()).expect("closed by construction");
        let a = match alpha(&witness, &q) {
            Ok(a) => a,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let mut others = 0.0;
        for m in members {
            if m.bits() != member.bits() {
                match member_rate(cfg, m) {
                    Ok(r) => others += r,
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                }
            }
        }
        best = best.max(a - others);
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(best)
}

fn sweep_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Invalid("sweep needs at least one point".into()));
    }
    if !(from.is_finite() && to.is_finite() && from <= to) {
        return Err(Error::Invalid(format!("sweep range [{from}, {to}] is not increasing")));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    Ok((0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect())
}

/// Checks that every sharing constraint not involving the swept variable has
/// at least `margin` bits of slack at the fixed rates.
fn check_fixed_margins(cfg: &TrialConfig, member: &DescSet, margin: f64) -> Result<()> {
    let witness = Witness::Discrete(cfg.dist.clone());
    let mut failure: Option<Error> = None;
    for_each_qstar(cfg.l, |members| {
        if failure.is_some()
            || members.is_empty()
            || members.iter().any(|m| m.bits() == member.bits())
        {
            return;
        }
        let q = QFamily::new(cfg.l, members.to_vec()).expect("closed by construction");
        let a = match alpha(&witness, &q) {
            Ok(a) => a,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let mut sum = 0.0;
        for m in members {
            match member_rate(cfg, m) {
                Ok(r) => sum += r,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            }
        }
        if sum < a + margin - 1e-9 {
            failure = Some(Error::Invalid(format!(
                "fixed rates leave {} bits of slack on a sharing constraint, need {margin}",
                sum - a
            )));
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn sweep_at(cfg: &TrialConfig, member: &DescSet, rate: f64, parallel: bool) -> Result<SweepPoint> {
    let mut point_cfg = cfg.clone();
    set_member_rate(&mut point_cfg, member, rate);
    let results =
        if parallel { run_trials(&point_cfg)? } else { run_trials_seq(&point_cfg)? };
    let successes = results.iter().filter(|r| r.success).count();
    let decoders = nonempty_subsets(cfg.l);
    let mut mean_distortions = Vec::with_capacity(decoders.len());
    for (i, k) in decoders.into_iter().enumerate() {
        let mean = if successes == 0 {
            f64::NAN
        } else {
            results
                .iter()
                .filter(|r| r.success)
                .map(|r| r.distortions[i].1)
                .sum::<f64>()
                / successes as f64
        };
        mean_distortions.push((k, mean));
    }
    Ok(SweepPoint { rate, successes, trials: cfg.trials, mean_distortions })
}

fn threshold_sweep_impl(
    cfg: &TrialConfig,
    axis: &RateVariable,
    from: f64,
    to: f64,
    points: usize,
    parallel: bool,
) -> Result<Vec<SweepPoint>> {
    build_codebooks(cfg)?; // validate the template before sweeping
    let member = axis_member(cfg, axis)?;
    check_fixed_margins(cfg, &member, 0.25)?;
    sweep_grid(from, to, points)?
        .into_iter()
        .map(|rate| sweep_at(cfg, &member, rate, parallel))
        .collect()
}

/// Sweeps one auxiliary rate from `from` to `to` over `points` evenly spaced
/// values, running the full trial plan at each; trials are fanned out over
/// the worker pool. All rates not being swept must clear their sharing
/// constraints by at least 0.25 bit.
pub fn threshold_sweep(
    cfg: &TrialConfig,
    axis: &RateVariable,
    from: f64,
    to: f64,
    points: usize,
) -> Result<Vec<SweepPoint>> {
    threshold_sweep_impl(cfg, axis, from, to, points, true)
}

/// Sequential twin of [`threshold_sweep`]; produces identical points.
pub fn threshold_sweep_seq(
    cfg: &TrialConfig,
    axis: &RateVariable,
    from: f64,
    to: f64,
    points: usize,
) -> Result<Vec<SweepPoint>> {
    threshold_sweep_impl(cfg, axis, from, to, points, false)
}

/// The binary copy-channel job: uniform source, single description whose base
/// codebook copies `X`. The sharing threshold for its rate sits at 1 bit.
pub fn copy_channel_config(n: usize, epsilon: f64, trials: usize, seed: u64) -> TrialConfig {
    let dist = JointPmf::new(
        vec![("X".into(), 2), ("U1".into(), 2)],
        vec![0.5, 0.0, 0.0, 0.5],
    )
    .expect("copy-channel law");
    TrialConfig {
        dist,
        l: 1,
        n,
        epsilon,
        trials,
        seed,
        search_cap: DEFAULT_SEARCH_CAP,
        shared_rates: Vec::new(),
        private_rates: vec![(1, 1.0)],
    }
}

//! Seeded generators for the three synthetic benchmark families: random
//! networks, binary grids with deterministic CPTs, and coding networks with
//! a Gaussian channel.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, BeliefNetwork, Factor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Random { n: usize, d: usize, c: usize, p: usize },
    Grid { n: usize, det_fraction: f64, num_evidence: usize },
    Coding { n: usize, p: usize, sigma2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub family: Family,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub network: BeliefNetwork,
    pub evidence: Assignment,
    /// Transmitted bits (inputs then parities) for coding instances.
    pub codeword: Option<Vec<usize>>,
}

pub fn generate(spec: &GenSpec) -> Result<Generated> {
    match spec.family {
        Family::Random { n, d, c, p } => Ok(Generated {
            network: gen_random(n, d, c, p, spec.seed)?,
            evidence: Assignment::new(),
            codeword: None,
        }),
        Family::Grid {
            n,
            det_fraction,
            num_evidence,
        } => {
            let (network, evidence) = gen_grid(n, det_fraction, num_evidence, spec.seed)?;
            Ok(Generated {
                network,
                evidence,
                codeword: None,
            })
        }
        Family::Coding { n, p, sigma2 } => {
            let c = gen_coding(n, p, sigma2, spec.seed)?;
            Ok(Generated {
                network: c.network,
                evidence: Assignment::new(),
                codeword: Some(c.codeword),
            })
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

/// A point drawn uniformly from the probability simplex.
fn dirichlet_one(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    } else {
        x.fill(1.0 / d as f64);
    }
    x
}

/// Random network with `n` variables of domain `d`; `c` of them get a CPT
/// with `p` parents picked among their predecessors in a random
/// topological order (fewer when a variable has fewer predecessors), the
/// rest uniform priors.
pub fn gen_random(n: usize, d: usize, c: usize, p: usize, seed: u64) -> Result<BeliefNetwork> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be positive".into()));
    }
    if c > n {
        return Err(invalid(format!("c = {c} exceeds n = {n}")));
    }
    if p >= n {
        return Err(invalid(format!("p = {p} must be less than n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut topo: Vec<usize> = (0..n).collect();
    topo.shuffle(&mut rng);
    let mut with_cpt = vec![false; n];
    for k in index::sample(&mut rng, n, c) {
        with_cpt[topo[k]] = true;
    }
    let mut factors = Vec::with_capacity(n);
    let mut scopes: Vec<Option<Vec<usize>>> = vec![None; n];
    for (k, &v) in topo.iter().enumerate() {
        if !with_cpt[v] {
            continue;
        }
        let mut parents: Vec<usize> = index::sample(&mut rng, k, p.min(k))
            .into_iter()
            .map(|j| topo[j])
            .collect();
        parents.sort_unstable();
        parents.push(v);
        scopes[v] = Some(parents);
    }
    for (v, slot) in scopes.iter_mut().enumerate() {
        match slot.take() {
            Some(scope) => {
                let rows = d.pow(scope.len() as u32 - 1);
                let table: Vec<f64> = (0..rows).flat_map(|_| dirichlet_one(&mut rng, d)).collect();
                factors.push(Factor::new(scope, table));
            }
            None => factors.push(Factor::new(vec![v], vec![1.0 / d as f64; d])),
        }
    }
    BeliefNetwork::new(vec![d; n], factors)
}

/// `n` x `n` binary grid; node (r, c) is variable `r * n + c` with parents
/// up and left. A `det_fraction` share of the CPTs are deterministic. The
/// evidence values are forward-sampled so the evidence has positive
/// probability.
pub fn gen_grid(n: usize, det_fraction: f64, num_evidence: usize, seed: u64) -> Result<(BeliefNetwork, Assignment)> {
    if n < 2 {
        return Err(invalid(format!("grid side {n} must be at least 2")));
    }
    if !(0.0..=1.0).contains(&det_fraction) {
        return Err(invalid(format!("det_fraction {det_fraction} outside [0, 1]")));
    }
    let total = n * n;
    if num_evidence > total {
        return Err(invalid(format!("{num_evidence} evidence variables in a grid of {total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_det = (det_fraction * total as f64).round() as usize;
    let mut deterministic = vec![false; total];
    for v in index::sample(&mut rng, total, num_det) {
        deterministic[v] = true;
    }
    let mut factors = Vec::with_capacity(total);
    for r in 0..n {
        for c in 0..n {
            let v = r * n + c;
            let mut scope = Vec::with_capacity(3);
            if r > 0 {
                scope.push(v - n);
            }
            if c > 0 {
                scope.push(v - 1);
            }
            scope.push(v);
            let rows = 1 << (scope.len() - 1);
            let mut table = Vec::with_capacity(2 * rows);
            for _ in 0..rows {
                if deterministic[v] {
                    let one = rng.random_range(0..2);
                    table.extend((0..2).map(|x| if x == one { 1.0 } else { 0.0 }));
                } else {
                    let a: f64 = rng.random();
                    let b: f64 = rng.random();
                    let s = a + b;
                    if s > 0.0 {
                        table.extend([a / s, b / s]);
                    } else {
                        table.extend([0.5, 0.5]);
                    }
                }
            }
            factors.push(Factor::new(scope, table));
        }
    }
    let net = BeliefNetwork::new(vec![2; total], factors)?;
    // variables are already in topological order
    let mut x = vec![0usize; total];
    for v in 0..total {
        let f = &net.factors()[v];
        let scope = f.scope();
        let row: usize = scope[..scope.len() - 1].iter().fold(0, |acc, &u| acc * 2 + x[u]);
        let p1 = f.table()[2 * row + 1];
        x[v] = usize::from(rng.random::<f64>() < p1);
    }
    let mut evidence = Assignment::new();
    for v in index::sample(&mut rng, total, num_evidence) {
        evidence.insert(v, x[v]);
    }
    Ok((net, evidence))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodingInstance {
    pub network: BeliefNetwork,
    /// Transmitted bits: `n` inputs then `n` parities.
    pub codeword: Vec<usize>,
    /// Noisy channel outputs, one per transmitted bit.
    pub observations: Vec<f64>,
}

/// Coding network: `n` uniform input bits, `n` parity bits each the XOR of
/// `p` input bits, and one unary Gaussian likelihood factor per transmitted
/// bit for the noisy observation of a random codeword.
pub fn gen_coding(n: usize, p: usize, sigma2: f64, seed: u64) -> Result<CodingInstance> {
    if p == 0 || p > n {
        return Err(invalid(format!("need 1 <= p <= n, got n = {n}, p = {p}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(invalid(format!("noise variance {sigma2} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::with_capacity(4 * n);
    for u in 0..n {
        factors.push(Factor::new(vec![u], vec![0.5, 0.5]));
    }
    let mut parity_parents = Vec::with_capacity(n);
    for k in 0..n {
        let mut parents: Vec<usize> = index::sample(&mut rng, n, p).into_iter().collect();
        parents.sort_unstable();
        let rows = 1usize << p;
        let mut table = Vec::with_capacity(2 * rows);
        for row in 0..rows {
            let bit = (row.count_ones() % 2) as usize;
            table.extend((0..2).map(|x| if x == bit { 1.0 } else { 0.0 }));
        }
        let mut scope = parents.clone();
        scope.push(n + k);
        factors.push(Factor::new(scope, table));
        parity_parents.push(parents);
    }
    let mut codeword: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    for parents in &parity_parents {
        let bit = parents.iter().map(|&u| codeword[u]).sum::<usize>() % 2;
        codeword.push(bit);
    }
    let noise = Normal::new(0.0, sigma2.sqrt()).map_err(|e| invalid(e.to_string()))?;
    let norm = -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln();
    let mut observations = Vec::with_capacity(2 * n);
    for (v, &b) in codeword.iter().enumerate() {
        let y = b as f64 + noise.sample(&mut rng);
        observations.push(y);
        let lik = |bit: f64| (norm - (y - bit).powi(2) / (2.0 * sigma2)).exp();
        factors.push(Factor::new(vec![v], vec![lik(0.0), lik(1.0)]));
    }
    Ok(CodingInstance {
        network: BeliefNetwork::new(vec![2; 2 * n], factors)?,
        codeword,
        observations,
    })
}

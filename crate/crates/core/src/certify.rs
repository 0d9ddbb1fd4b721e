//! Smiley certificates, identity checks and the batch runner.
//!
//! A certificate for `(A, k, l)` records the dimensions of `C_l(A)`,
//! `C_k(C_l(A))`, `Pol(A)` and `VN(A)` together with the raw containment
//! residuals of `C_k(C_l(A))` in the two hulls. Verdicts are derived from the
//! residuals and `containment_tol`; the residuals are kept so that a different
//! tolerance policy can be applied to a stored report.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adcalc::{ad_apply, ad_lift, ad_power_apply, centralizer, symmetrized_ad_kernel, DEFAULT_POLARIZATION_BUDGET};
use crate::decomp::random::{complex_normal, ginibre, seeded_rng};
use crate::decomp::{
    is_normal, is_selfadjoint, nilpotency_order, random_generic, random_normal, random_spectral_of_type,
    re_im_parts,
};
use crate::error::{Error, Result};
use crate::hulls::{pol_hull, vn_hull};
use crate::numlin::{
    check_same_dim, check_square_finite, identity, matrix_unit, subspace_contains, subspace_equal, ComplexMatrix,
    ToleranceConfig,
};
use crate::shiftlab::shift_truncation;

/// Outcome of one containment certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileyCertificate {
    pub k: usize,
    pub l: usize,
    #[serde(rename = "dim_Cl")]
    pub dim_cl: usize,
    #[serde(rename = "dim_CkCl")]
    pub dim_ckcl: usize,
    pub dim_pol: usize,
    pub dim_vn: usize,
    pub residual_vn: f64,
    pub residual_pol: f64,
    pub is_smiley: bool,
    pub is_proper: bool,
    pub warnings: Vec<String>,
    pub tol: ToleranceConfig,
    pub input_digest: String,
    pub seed: Option<u64>,
}

/// SHA-256 of the dimension and the little-endian bytes of the real and
/// imaginary parts in column-major order, hex encoded.
pub fn matrix_digest(a: &ComplexMatrix) -> String {
    let mut h = Sha256::new();
    h.update((a.nrows() as u64).to_le_bytes());
    h.update((a.ncols() as u64).to_le_bytes());
    for z in a.iter() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Certifies `C_k(C_l(A)) ⊆ VN(A)` and `C_k(C_l(A)) ⊆ Pol(A)`.
pub fn certify_smiley(a: &ComplexMatrix, k: usize, l: usize, tol: &ToleranceConfig) -> Result<SmileyCertificate> {
    certify_smiley_with_budget(a, k, l, tol, DEFAULT_POLARIZATION_BUDGET)
}

pub fn certify_smiley_with_budget(
    a: &ComplexMatrix,
    k: usize,
    l: usize,
    tol: &ToleranceConfig,
    budget: usize,
) -> Result<SmileyCertificate> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    if l == 0 {
        return Err(Error::InvalidArgument("l must be ≥ 1".into()));
    }
    tol.validate()?;
    let n = check_square_finite(a)?;
    let cl = centralizer(a, l, tol)?;
    let ckcl = symmetrized_ad_kernel(&cl, k, tol, budget)?;
    let pol = pol_hull(a, tol)?;
    let vn = vn_hull(a, tol)?;
    let in_vn = subspace_contains(&vn, &ckcl, tol)?;
    let in_pol = subspace_contains(&pol, &ckcl, tol)?;

    let mut warnings = Vec::new();
    // A itself need not lie in C_k(C_l(A)) once k ≥ 2, so only I is guaranteed
    if ckcl.dim() == 0 {
        warnings.push("C_k(C_l(A)) is empty although it always contains I".into());
    }
    if k == 1 && ckcl.distance(a) > tol.containment_tol * (1.0 + a.norm()) {
        warnings.push("A is not numerically inside C_1(C_l(A))".into());
    }
    if in_pol.holds && !in_vn.holds {
        warnings.push("containment in Pol(A) holds but containment in VN(A) does not".into());
    }
    if n > 1 && ckcl.distance(&identity(n)) > tol.containment_tol * (n as f64).sqrt() {
        warnings.push("identity is not numerically inside C_k(C_l(A))".into());
    }
    Ok(SmileyCertificate {
        k,
        l,
        dim_cl: cl.dim(),
        dim_ckcl: ckcl.dim(),
        dim_pol: pol.dim(),
        dim_vn: vn.dim(),
        residual_vn: in_vn.residual,
        residual_pol: in_pol.residual,
        is_smiley: in_vn.holds,
        is_proper: in_pol.holds,
        warnings,
        tol: *tol,
        input_digest: matrix_digest(a),
        seed: None,
    })
}

/// Per-`s` dimensions of `C_s(A)` for a normal `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma21Report {
    pub holds: bool,
    /// `(s, dim C_s(A))` for `s = 1..=s_max`.
    pub dims: Vec<(usize, usize)>,
    /// Largest mutual containment residual between `C_s(A)` and `C_1(A)`.
    pub residual: f64,
}

/// For normal `A`, `C_s(A) = C_1(A)` for every `s`.
pub fn lemma21_suite(a: &ComplexMatrix, s_max: usize, tol: &ToleranceConfig) -> Result<Lemma21Report> {
    check_square_finite(a)?;
    if s_max == 0 {
        return Err(Error::InvalidArgument("s_max must be ≥ 1".into()));
    }
    if !is_normal(a, tol) {
        return Err(Error::Precondition("matrix is not normal".into()));
    }
    let c1 = centralizer(a, 1, tol)?;
    let mut dims = vec![(1, c1.dim())];
    let mut residual: f64 = 0.0;
    let mut holds = true;
    for s in 2..=s_max {
        let cs = centralizer(a, s, tol)?;
        let eq = subspace_equal(&cs, &c1, tol)?;
        residual = residual.max(eq.residual);
        holds &= eq.holds;
        dims.push((s, cs.dim()));
    }
    Ok(Lemma21Report { holds, dims, residual })
}

/// Residual of a norm identity against its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub holds: bool,
    pub residual: f64,
    pub bound: f64,
}

fn commuting_precondition(a: &ComplexMatrix, x: &ComplexMatrix, tol: &ToleranceConfig) -> Result<f64> {
    check_same_dim(a, x)?;
    let scale = 1.0 + a.norm() * x.norm();
    let comm = ad_apply(a, x)?.norm();
    if comm > tol.zero_tol * scale {
        return Err(Error::Precondition(format!(
            "‖[A, X]‖ = {comm:.3e} exceeds zero_tol·(1+‖A‖‖X‖) = {:.3e}",
            tol.zero_tol * scale
        )));
    }
    Ok(scale)
}

/// Self-adjoint `A` commuting with `X` commutes with `Re X` and `Im X`.
pub fn lemma22_check(a: &ComplexMatrix, x: &ComplexMatrix, tol: &ToleranceConfig) -> Result<IdentityCheck> {
    check_same_dim(a, x)?;
    if !is_selfadjoint(a, tol) {
        return Err(Error::Precondition("matrix is not self-adjoint".into()));
    }
    let scale = commuting_precondition(a, x, tol)?;
    let (re, im) = re_im_parts(x);
    let residual = ad_apply(a, &re)?.norm().max(ad_apply(a, &im)?.norm());
    let bound = 10.0 * tol.zero_tol * scale;
    Ok(IdentityCheck {
        holds: residual <= bound,
        residual,
        bound,
    })
}

/// Fuglede: normal `A` commuting with `X` makes `A*` commute with `X`.
pub fn fuglede_check(a: &ComplexMatrix, x: &ComplexMatrix, tol: &ToleranceConfig) -> Result<IdentityCheck> {
    check_same_dim(a, x)?;
    if !is_normal(a, tol) {
        return Err(Error::Precondition("matrix is not normal".into()));
    }
    let scale = commuting_precondition(a, x, tol)?;
    let residual = ad_apply(&a.adjoint(), x)?.norm();
    let bound = 1e-6 * scale;
    Ok(IdentityCheck {
        holds: residual <= bound,
        residual,
        bound,
    })
}

/// Vanishing of `ad_N^(2m+1)` for `N` nilpotent of order `m+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NilpotentVanishReport {
    pub holds: bool,
    /// `‖ad_lift(N)^(2m+1)‖ / ‖ad_lift(N)‖^(2m+1)`, zero when `N = 0`.
    pub lift_residual: f64,
    /// Largest relative mismatch between the binomial expansion and the
    /// iterated commutator over the random samples.
    pub expansion_residual: f64,
    /// Whether `ad_N^(2m)` is nonzero on some matrix unit.
    pub sharp: bool,
}

const EXPANSION_SAMPLES: usize = 20;
const EXPANSION_TOL: f64 = 1e-10;

fn binomial(p: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (p - i) as f64 / (i + 1) as f64)
}

/// `Σ_j (−1)^(p−j) C(p, j) N^j X N^(p−j)`.
pub fn binomial_expansion(nil: &ComplexMatrix, x: &ComplexMatrix, p: usize) -> ComplexMatrix {
    let dim = nil.nrows();
    let mut powers = vec![identity(dim)];
    for j in 1..=p {
        powers.push(nil * &powers[j - 1]);
    }
    let mut total = ComplexMatrix::zeros(dim, dim);
    for j in 0..=p {
        let sign = if (p - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        let term = &powers[j] * x * &powers[p - j];
        total += term * crate::numlin::c64(sign * binomial(p, j), 0.0);
    }
    total
}

pub fn ad_nilpotent_vanish_check(nil: &ComplexMatrix, m: usize, tol: &ToleranceConfig) -> Result<NilpotentVanishReport> {
    let dim = check_square_finite(nil)?;
    let order = nilpotency_order(nil, tol)?;
    if order != m + 1 {
        return Err(Error::Precondition(format!(
            "nilpotency order is {order}, expected m + 1 = {}",
            m + 1
        )));
    }
    let p = 2 * m + 1;
    let lift = ad_lift(nil)?;
    let lift_norm = lift.norm();
    let power_norm = lift.pow(p).norm();
    let lift_residual = if lift_norm == 0.0 {
        power_norm
    } else {
        power_norm / lift_norm.powi(p as i32)
    };
    let lift_ok = power_norm <= tol.zero_tol * lift_norm.powi(p as i32);

    let mut rng = seeded_rng(0xad_0f_2b + dim as u64);
    let mut expansion_residual: f64 = 0.0;
    let reference = (2.0 * nil.norm()).powi(p as i32);
    for _ in 0..EXPANSION_SAMPLES {
        let x = ginibre(&mut rng, dim);
        let direct = ad_power_apply(nil, &x, p)?;
        let expanded = binomial_expansion(nil, &x, p);
        let scale = reference * x.norm();
        let diff = (direct - expanded).norm();
        let rel = if scale == 0.0 { diff } else { diff / scale };
        expansion_residual = expansion_residual.max(rel);
    }

    let below = 2 * m;
    let threshold = tol.zero_tol * (2.0 * nil.norm()).powi(below as i32);
    let mut sharp = false;
    'units: for j in 0..dim {
        for i in 0..dim {
            let e = matrix_unit(dim, i, j);
            let img = if below == 0 { e } else { ad_power_apply(nil, &e, below)? };
            if img.norm() > threshold {
                sharp = true;
                break 'units;
            }
        }
    }
    Ok(NilpotentVanishReport {
        holds: lift_ok && expansion_residual <= EXPANSION_TOL,
        lift_residual,
        expansion_residual,
        sharp,
    })
}

/// Instance families for batch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ExplicitFiles,
    RandomGeneric,
    RandomNormal,
    RandomTypeM,
    ShiftTruncation,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::ExplicitFiles => "explicit-files",
            Family::RandomGeneric => "random-generic",
            Family::RandomNormal => "random-normal",
            Family::RandomTypeM => "random-type-m",
            Family::ShiftTruncation => "shift-truncation",
        }
    }
}

fn default_cond_bound() -> f64 {
    20.0
}

/// Batch experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub family: Family,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    pub kl_grid: Vec<(usize, usize)>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output_path: Option<String>,
    /// Matrix files for the explicit-files family.
    #[serde(default)]
    pub files: Vec<String>,
    #[serde(default = "default_cond_bound")]
    pub cond_bound: f64,
    /// Wall-clock timing makes reports non-reproducible, so it is opt in.
    #[serde(default)]
    pub record_runtime: bool,
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if self.kl_grid.is_empty() {
            return Err(Error::InvalidArgument("kl_grid must be nonempty".into()));
        }
        if self.kl_grid.iter().any(|&(k, l)| k == 0 || l == 0) {
            return Err(Error::InvalidArgument("every (k, l) in kl_grid must have k, l ≥ 1".into()));
        }
        if self.family != Family::ExplicitFiles && self.sizes.is_empty() {
            return Err(Error::InvalidArgument("sizes must be nonempty".into()));
        }
        if self.sizes.contains(&0) {
            return Err(Error::InvalidArgument("sizes must be ≥ 1".into()));
        }
        if self.family == Family::ShiftTruncation && self.sizes.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("shift-truncation needs n ≥ 2".into()));
        }
        if self.family == Family::RandomTypeM {
            let m = self
                .m
                .ok_or_else(|| Error::InvalidArgument("random-type-m requires m".into()))?;
            if let Some(&n) = self.sizes.iter().find(|&&n| n < m + 1) {
                return Err(Error::InvalidArgument(format!("random-type-m with m = {m} needs n ≥ {}, got {n}", m + 1)));
            }
        }
        if !(self.cond_bound >= 1.0 && self.cond_bound.is_finite()) {
            return Err(Error::InvalidArgument("cond_bound must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// What the theory asserts for one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    /// `C_k(C_l(A)) ⊆ Pol(A)`, which holds for every matrix when `k ≤ l`.
    Proper,
    /// `C_k(C_l(A)) ⊆ VN(A)` for type-m instances with `k ≤ l`, `l ≥ 2m+1`.
    Smiley,
    /// Recorded, nothing asserted.
    Exploratory,
}

/// Claim for a type-`m` instance (`m = None` for families without a type).
pub fn claim_for(m: Option<usize>, k: usize, l: usize) -> Claim {
    match m {
        Some(m) if k <= l && l > 2 * m => Claim::Smiley,
        Some(_) => Claim::Exploratory,
        None if k <= l => Claim::Proper,
        None => Claim::Exploratory,
    }
}

fn claim_holds(claim: Claim, cert: &SmileyCertificate) -> Option<bool> {
    match claim {
        Claim::Proper => Some(cert.is_proper && cert.is_smiley),
        Claim::Smiley => Some(cert.is_smiley),
        Claim::Exploratory => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceDims {
    #[serde(rename = "Cl")]
    pub cl: usize,
    #[serde(rename = "CkCl")]
    pub ckcl: usize,
    pub pol: usize,
    pub vn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceResiduals {
    pub vn: f64,
    pub pol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceVerdicts {
    pub is_smiley: bool,
    pub is_proper: bool,
}

/// One row of an experiment report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub family: String,
    pub source: String,
    pub n: usize,
    pub seed: Option<u64>,
    pub digest: Option<String>,
    pub k: usize,
    pub l: usize,
    pub dims: Option<InstanceDims>,
    pub residuals: Option<InstanceResiduals>,
    pub verdicts: Option<InstanceVerdicts>,
    pub warnings: Vec<String>,
    pub claim: Claim,
    pub claim_holds: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Aggregate {
    pub instances: usize,
    pub errors: usize,
    pub smiley: usize,
    pub proper: usize,
    pub asserted: usize,
    pub asserted_passed: usize,
    pub asserted_failed: usize,
    pub exploratory: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: BatchConfig,
    pub tolerances: ToleranceConfig,
    pub instances: Vec<InstanceRecord>,
    pub aggregate: Aggregate,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    /// True when every asserted claim held and no instance errored.
    pub fn all_asserted_hold(&self) -> bool {
        self.aggregate.asserted_failed == 0
    }
}

/// Source of one batch matrix, resolved lazily inside the worker.
#[derive(Debug, Clone)]
struct Job {
    index: usize,
    source: Source,
    k: usize,
    l: usize,
}

#[derive(Debug, Clone)]
enum Source {
    Random { family: Family, n: usize, seed: u64 },
    Shift { n: usize },
    File { path: String },
}

impl Source {
    fn label(&self) -> String {
        match self {
            Source::Random { family, n, seed } => format!("{}(n={n}, seed={seed})", family.name()),
            Source::Shift { n } => format!("J_{n}"),
            Source::File { path } => path.clone(),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Source::Random { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

fn jobs(config: &BatchConfig) -> Vec<Job> {
    let mut sources = Vec::new();
    match config.family {
        Family::ExplicitFiles => {
            for path in &config.files {
                sources.push(Source::File { path: path.clone() });
            }
        }
        Family::ShiftTruncation => {
            for &n in &config.sizes {
                sources.push(Source::Shift { n });
            }
        }
        family => {
            for &n in &config.sizes {
                for &seed in &config.seeds {
                    sources.push(Source::Random { family, n, seed });
                }
            }
        }
    }
    let mut out = Vec::new();
    for source in sources {
        for &(k, l) in &config.kl_grid {
            out.push(Job {
                index: out.len(),
                source: source.clone(),
                k,
                l,
            });
        }
    }
    out
}

fn build_matrix(source: &Source, config: &BatchConfig) -> Result<ComplexMatrix> {
    match source {
        Source::Random { family, n, seed } => match family {
            Family::RandomGeneric => Ok(random_generic(*n, *seed)),
            Family::RandomNormal => random_normal(*n, *seed),
            Family::RandomTypeM => {
                let m = config.m.expect("validated");
                Ok(random_spectral_of_type(*n, m, *seed, config.cond_bound)?.0)
            }
            _ => unreachable!("non-random family in random source"),
        },
        Source::Shift { n } => shift_truncation(*n),
        Source::File { path } => crate::cli::io::parse_matrix(std::path::Path::new(path)).map_err(|e| Error::InvalidArgument(e.to_string())),
    }
}

fn run_job(job: &Job, config: &BatchConfig) -> InstanceRecord {
    let m = match config.family {
        Family::RandomTypeM => config.m,
        _ => None,
    };
    let claim = claim_for(m, job.k, job.l);
    let mut record = InstanceRecord {
        index: job.index,
        family: config.family.name().to_string(),
        source: job.source.label(),
        n: 0,
        seed: job.source.seed(),
        digest: None,
        k: job.k,
        l: job.l,
        dims: None,
        residuals: None,
        verdicts: None,
        warnings: Vec::new(),
        claim,
        claim_holds: None,
        error: None,
    };
    let a = match build_matrix(&job.source, config) {
        Ok(a) => a,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.n = a.nrows();
    record.digest = Some(matrix_digest(&a));
    match certify_smiley(&a, job.k, job.l, &config.tolerances) {
        Ok(cert) => {
            record.claim_holds = claim_holds(claim, &cert);
            record.dims = Some(InstanceDims {
                cl: cert.dim_cl,
                ckcl: cert.dim_ckcl,
                pol: cert.dim_pol,
                vn: cert.dim_vn,
            });
            record.residuals = Some(InstanceResiduals {
                vn: cert.residual_vn,
                pol: cert.residual_pol,
            });
            record.verdicts = Some(InstanceVerdicts {
                is_smiley: cert.is_smiley,
                is_proper: cert.is_proper,
            });
            record.warnings = cert.warnings;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

fn aggregate(instances: &[InstanceRecord]) -> Aggregate {
    let mut agg = Aggregate {
        instances: instances.len(),
        ..Aggregate::default()
    };
    for r in instances {
        if r.error.is_some() {
            agg.errors += 1;
        }
        if let Some(v) = &r.verdicts {
            agg.smiley += v.is_smiley as usize;
            agg.proper += v.is_proper as usize;
        }
        match (r.claim, r.claim_holds) {
            (Claim::Exploratory, _) => agg.exploratory += 1,
            (_, Some(true)) => {
                agg.asserted += 1;
                agg.asserted_passed += 1;
            }
            // an errored asserted row counts as failed
            (_, _) => {
                agg.asserted += 1;
                agg.asserted_failed += 1;
            }
        }
    }
    agg
}

/// Runs a batch on the current rayon pool.
pub fn batch_run(config: &BatchConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let jobs = jobs(config);
    // collect keeps index order regardless of completion order
    let instances: Vec<InstanceRecord> = jobs.par_iter().map(|job| run_job(job, config)).collect();
    let aggregate = aggregate(&instances);
    let runtime_ms = if config.record_runtime {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(ExperimentReport {
        version: crate::VERSION.to_string(),
        config: config.clone(),
        tolerances: config.tolerances,
        instances,
        aggregate,
        runtime_ms,
    })
}

/// Runs a batch on a dedicated pool of `threads` workers.
pub fn batch_run_with_threads(config: &BatchConfig, threads: usize) -> Result<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    pool.install(|| batch_run(config))
}

/// Random element of a subspace, for property suites.
pub fn random_element(s: &crate::numlin::OperatorSubspace, seed: u64) -> ComplexMatrix {
    let mut rng = seeded_rng(seed);
    let n = s.n();
    let mut x = ComplexMatrix::zeros(n, n);
    for b in s.basis() {
        x += b * complex_normal(&mut rng);
    }
    x * crate::numlin::c64(0.5 + rng.gen::<f64>(), 0.0)
}

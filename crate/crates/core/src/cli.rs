//! Configuration ingestion and pipeline orchestration behind the
//! command-line tool. Each stage calls into the library modules; this file
//! only wires results together and renders them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error as ThisError;

use crate::complex::{contractibility_certificate, flag_complex, homology_capped, Certificate, HomologyProfile, DEFAULT_MAX_FACES};
use crate::curvature::{c_gh, canonical_direction, curve_csv, n_gh};
use crate::error::Error;
use crate::isotropy::{build_space, Block, HomogeneousSpace, SpaceConfig, Subgroup};
use crate::lattice::{adjoin_maximal_torus, cartan_of_m0, enumerate_with, LatticeOptions, SubalgebraPoset, DEFAULT_MAX_SUMMANDS};
use crate::liealg::Family;
use crate::solver::{find_einstein, EinsteinSolution, SolverOptions};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => exit_code(e),
        }
    }
}

/// Exit code for a library error: resource caps give 4, everything else 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::TooManySummands { .. } | Error::ComplexTooLarge { .. } => EXIT_CAP,
        _ => EXIT_UNSUPPORTED,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub family: Family,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlocksSpec {
    Single(Vec<Block>),
    PerFactor(Vec<Vec<Block>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum SubgroupSpec {
    MaximalTorus,
    Trivial,
    Blocks { blocks: BlocksSpec },
    TorusSlope { slope: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Caps {
    #[serde(default = "default_max_summands")]
    pub max_summands: usize,
    #[serde(default = "default_max_faces")]
    pub max_faces: usize,
}

fn default_max_summands() -> usize {
    DEFAULT_MAX_SUMMANDS
}

fn default_max_faces() -> usize {
    DEFAULT_MAX_FACES
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_summands: DEFAULT_MAX_SUMMANDS, max_faces: DEFAULT_MAX_FACES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_newton")]
    pub newton: f64,
    #[serde(default = "default_dedupe")]
    pub dedupe: f64,
}

fn default_newton() -> f64 {
    1e-12
}

fn default_dedupe() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { newton: default_newton(), dedupe: default_dedupe() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub directions: Option<usize>,
    #[serde(default)]
    pub t_ladder: Option<Vec<f64>>,
}

/// The JSON configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub n: Option<usize>,
    /// Alternative to `family`/`n` for products.
    #[serde(default)]
    pub factors: Option<Vec<FactorSpec>>,
    #[serde(default = "default_q_scale")]
    pub q_scale: f64,
    pub subgroup: SubgroupSpec,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub solver: SolverSpec,
}

fn default_q_scale() -> f64 {
    0.5
}

impl RunConfig {
    pub fn space_config(&self) -> Result<SpaceConfig, CliError> {
        let ambient: Vec<(Family, usize)> = match (&self.factors, self.family, self.n) {
            (Some(f), None, None) if !f.is_empty() => f.iter().map(|f| (f.family, f.n)).collect(),
            (None, Some(family), Some(n)) => vec![(family, n)],
            _ => return Err(CliError::Config("give either `family` and `n`, or a non-empty `factors` list".into())),
        };
        if !(self.q_scale > 0.0 && self.q_scale.is_finite()) {
            return Err(CliError::Config(format!("qScale must be positive, got {}", self.q_scale)));
        }
        let subgroup = match &self.subgroup {
            SubgroupSpec::MaximalTorus => Subgroup::MaximalTorus,
            SubgroupSpec::Trivial => Subgroup::Trivial,
            SubgroupSpec::TorusSlope { slope } => Subgroup::TorusSlope(slope.clone()),
            SubgroupSpec::Blocks { blocks: BlocksSpec::Single(b) } => Subgroup::BlockProduct(vec![b.clone()]),
            SubgroupSpec::Blocks { blocks: BlocksSpec::PerFactor(b) } => Subgroup::BlockProduct(b.clone()),
        };
        Ok(SpaceConfig { ambient, q_scale: self.q_scale, subgroup })
    }

    pub fn solver_options(&self, t_max: Option<f64>, threads: Option<usize>) -> SolverOptions {
        let mut o = SolverOptions { seed: self.solver.seed, directions: self.solver.directions, threads, ..SolverOptions::default() };
        o.newton.tol = self.solver.tolerances.newton;
        o.dedupe_tol = self.solver.tolerances.dedupe;
        if let Some(t) = &self.solver.t_ladder {
            o.t_ladder = t.clone();
        }
        if let Some(t) = t_max {
            o.flow.t_max = t;
        }
        o
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.space_config()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Describe,
    Lattice,
    Homology,
    Einstein,
    Curve,
    Report,
}

/// Options that come from the command line rather than the config.
#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    pub seed: Option<u64>,
    pub t_max: Option<f64>,
    pub threads: Option<usize>,
    /// Lattice node whose canonical direction the curve follows.
    pub node: Option<usize>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TripleEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpaceSummary {
    pub label: String,
    pub dim_g: usize,
    pub dim_h: usize,
    pub dim_m: usize,
    pub ell: usize,
    pub dims: Vec<usize>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Nonzero `[ijk]` with `i ≤ j ≤ k`.
    pub triples: Vec<TripleEntry>,
    pub multiplicity_free: bool,
    pub equivalent: Vec<(usize, usize)>,
    pub m0_dim: usize,
    pub b_gh: f64,
    pub c_gh: Option<f64>,
    pub n_gh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticeNode {
    pub id: usize,
    pub summands: Vec<usize>,
    pub dim: usize,
    pub toral: bool,
    pub minimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticeSection {
    /// Label of the space whose lattice this is (after torus adjunction).
    pub space: String,
    pub torus_adjoined: usize,
    /// `Σ d_i b_i` of the space the lattice was computed on.
    pub b_gh: f64,
    pub nodes: Vec<LatticeNode>,
    /// Strict inclusions as `(smaller, larger)`.
    pub relations: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum CertificateStatus {
    Contractible { witness: String },
    NonContractible { degree: i64 },
    Inconclusive,
    NotComputed { reason: String },
}

impl From<Certificate> for CertificateStatus {
    fn from(c: Certificate) -> Self {
        match c {
            Certificate::Contractible(w) => CertificateStatus::Contractible { witness: format!("{w:?}") },
            Certificate::NonContractible(q) => CertificateStatus::NonContractible { degree: q },
            Certificate::Inconclusive => CertificateStatus::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComplexSection {
    pub facets: Vec<Vec<usize>>,
    pub homology: Option<HomologyProfile>,
    pub certificate: CertificateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EinsteinSection {
    /// Label of the decomposition the search ran on.
    pub space: String,
    pub search: SolverOptions,
    pub solutions: Vec<EinsteinSolution>,
    pub orbits: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ExistsByTopology,
    ExistsNumerically,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub config_sha256: String,
    pub tool_version: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub command: String,
    pub space: SpaceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub einstein: Option<EinsteinSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub provenance: Provenance,
}

/// What a run produces: a report, or CSV for `curve`.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Report(Box<AnalysisReport>),
    Csv(String),
}

pub fn summarize(space: &HomogeneousSpace, poset: Option<&SubalgebraPoset>) -> SpaceSummary {
    let s = space.structure();
    let l = s.ell();
    let mut triples = Vec::new();
    for i in 0..l {
        for j in i..l {
            for k in j..l {
                let v = s.t(i, j, k);
                if v.abs() > crate::EPS_STRUCT {
                    triples.push(TripleEntry { i, j, k, value: v });
                }
            }
        }
    }
    SpaceSummary {
        label: space.label().to_string(),
        dim_g: space.dim_g(),
        dim_h: space.dim_h(),
        dim_m: space.dim_m(),
        ell: l,
        dims: s.dims.clone(),
        b: s.b.clone(),
        c: s.c.clone(),
        triples,
        multiplicity_free: s.multiplicity_free,
        equivalent: s.equivalent.clone(),
        m0_dim: space.m0_index().len(),
        b_gh: s.b_total(),
        c_gh: c_gh(&s.dims),
        n_gh: poset.and_then(|p| n_gh(s, p)),
    }
}

/// The lattice of the space, adjoining a maximal torus of the centralizer
/// first when the space is not multiplicity free or not self-normalizing.
pub fn lattice_for(space: &HomogeneousSpace, caps: &Caps) -> Result<(HomogeneousSpace, SubalgebraPoset), Error> {
    let opts = LatticeOptions { max_summands: caps.max_summands, require_self_normalizing: true };
    match enumerate_with(space, &opts) {
        Ok(p) => Ok((space.clone(), p)),
        Err(Error::MultiplicityNotFree(_) | Error::NotSelfNormalizing(_)) if !space.m0_index().is_empty() => {
            let t = adjoin_maximal_torus(space)?;
            let p = enumerate_with(&t, &opts)?;
            Ok((t, p))
        }
        Err(e) => Err(e),
    }
}

fn lattice_section(space: &HomogeneousSpace, p: &SubalgebraPoset) -> LatticeSection {
    let nodes = p.nodes.iter().map(|k| LatticeNode { id: k.id, summands: k.summands.clone(), dim: k.dim, toral: k.toral, minimal: k.minimal }).collect();
    let relations = (0..p.len()).flat_map(|a| (0..p.len()).map(move |b| (a, b))).filter(|&(a, b)| p.lt(a, b)).collect();
    LatticeSection { space: space.label().to_string(), torus_adjoined: space.adjoined_torus_dim(), b_gh: space.structure().b_total(), nodes, relations }
}

fn complex_section(p: &SubalgebraPoset, caps: &Caps) -> Result<ComplexSection, Error> {
    let x = flag_complex(p);
    let h = homology_capped(&x, caps.max_faces)?;
    let cert = contractibility_certificate(&x, &h, Some(&p.leq_matrix()));
    Ok(ComplexSection { facets: x.facets.clone(), homology: Some(h), certificate: cert.into() })
}

/// The space on which diagonal metrics are searched: the space itself when
/// multiplicity free, otherwise its refinement by a Cartan subalgebra of the
/// centralizer part `m₀`.
pub fn search_space(space: &HomogeneousSpace) -> Result<(HomogeneousSpace, Option<String>), Error> {
    if space.multiplicity_free() {
        return Ok((space.clone(), None));
    }
    if space.m0_index().is_empty() {
        return Err(Error::MultiplicityNotFree("equivalent summands outside the centralizer".into()));
    }
    let r = space.refined_by(&cartan_of_m0(space))?;
    if !r.multiplicity_free() {
        return Err(Error::MultiplicityNotFree("refinement by a Cartan subalgebra of m0 is still not multiplicity free".into()));
    }
    Ok((r, Some("diagonal metrics with respect to the refinement by a Cartan subalgebra of m0".into())))
}

fn einstein_section(space: &HomogeneousSpace, opts: &SolverOptions) -> Result<EinsteinSection, Error> {
    let (s, note) = search_space(space)?;
    let solutions = find_einstein(&s, opts)?;
    let orbits = solutions.iter().map(|s| s.orbit + 1).max().unwrap_or(0);
    Ok(EinsteinSection { space: s.label().to_string(), search: opts.clone(), solutions, orbits, note })
}

pub fn config_hash(text: &str) -> String {
    let d = Sha256::digest(text.as_bytes());
    d.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Runs one command on a parsed configuration. `config_text` is hashed into
/// the provenance record.
pub fn run(cmd: Command, cfg: &RunConfig, config_text: &str, flags: &RunFlags) -> Result<Artifact, CliError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = flags.seed {
        cfg.solver.seed = seed;
    }
    let space = build_space(&cfg.space_config()?)?;
    let provenance = Provenance { config_sha256: config_hash(config_text), tool_version: env!("CARGO_PKG_VERSION").to_string(), seed: cfg.solver.seed };
    let opts = cfg.solver_options(flags.t_max, flags.threads);
    let report = |name: &str, summary, lattice, complex, einstein, verdict| {
        Artifact::Report(Box::new(AnalysisReport { command: name.into(), space: summary, lattice, complex, einstein, verdict, provenance: provenance.clone() }))
    };
    match cmd {
        Command::Describe => Ok(report("describe", summarize(&space, None), None, None, None, None)),
        Command::Lattice => {
            let (t, p) = lattice_for(&space, &cfg.caps)?;
            Ok(report("lattice", summarize(&space, Some(&p)), Some(lattice_section(&t, &p)), None, None, None))
        }
        Command::Homology => {
            let (t, p) = lattice_for(&space, &cfg.caps)?;
            let c = complex_section(&p, &cfg.caps)?;
            Ok(report("homology", summarize(&space, Some(&p)), Some(lattice_section(&t, &p)), Some(c), None, None))
        }
        Command::Einstein => {
            let e = einstein_section(&space, &opts)?;
            Ok(report("einstein", summarize(&space, None), None, None, Some(e), None))
        }
        Command::Curve => {
            let (t, p) = lattice_for(&space, &cfg.caps)?;
            if t.adjoined_torus_dim() > 0 {
                return Err(Error::InvalidConfig("canonical curves need a lattice of the space itself; it required torus adjunction".into()).into());
            }
            let node = flags.node.unwrap_or(0);
            let k = p.nodes.get(node).ok_or_else(|| Error::InvalidConfig(format!("no lattice node {node} ({} nodes)", p.len())))?;
            let v = canonical_direction(&space.structure().dims, &k.summands);
            let steps = flags.steps.unwrap_or(50).max(1);
            let t_max = flags.t_max.unwrap_or(4.0);
            let grid: Vec<f64> = (0..=steps).map(|i| t_max * i as f64 / steps as f64).collect();
            Ok(Artifact::Csv(curve_csv(space.structure(), &v, &grid)?))
        }
        Command::Report => {
            let (lattice, complex, poset) = match lattice_for(&space, &cfg.caps) {
                Ok((t, p)) => {
                    let c = complex_section(&p, &cfg.caps).unwrap_or_else(|e| ComplexSection {
                        facets: Vec::new(),
                        homology: None,
                        certificate: CertificateStatus::NotComputed { reason: e.to_string() },
                    });
                    (Some(lattice_section(&t, &p)), c, Some(p))
                }
                Err(e) => (None, ComplexSection { facets: Vec::new(), homology: None, certificate: CertificateStatus::NotComputed { reason: e.to_string() } }, None),
            };
            let einstein = einstein_section(&space, &opts).unwrap_or_else(|e| EinsteinSection {
                space: space.label().to_string(),
                search: opts.clone(),
                solutions: Vec::new(),
                orbits: 0,
                note: Some(format!("not searched: {e}")),
            });
            let verdict = if matches!(complex.certificate, CertificateStatus::NonContractible { .. }) {
                Verdict::ExistsByTopology
            } else if !einstein.solutions.is_empty() {
                Verdict::ExistsNumerically
            } else {
                Verdict::Unknown
            };
            let summary = summarize(&space, poset.as_ref().filter(|_| lattice.as_ref().is_some_and(|l| l.torus_adjoined == 0)));
            Ok(report("report", summary, lattice, Some(complex), Some(einstein), Some(verdict)))
        }
    }
}

/// Human-readable summary of a report.
pub fn render_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let s = &r.space;
    let _ = writeln!(out, "space      {}", s.label);
    let _ = writeln!(out, "dims       g {} h {} m {} with {} summands {:?}", s.dim_g, s.dim_h, s.dim_m, s.ell, s.dims);
    let _ = writeln!(out, "b_i        {}", fmt_list(&s.b));
    let _ = writeln!(out, "c_i        {}", fmt_list(&s.c));
    for t in &s.triples {
        let _ = writeln!(out, "[{}{}{}]      {:.6}", t.i + 1, t.j + 1, t.k + 1, t.value);
    }
    let _ = writeln!(out, "mult.free  {}", s.multiplicity_free);
    let _ = writeln!(out, "b_G/H      {:.6}", s.b_gh);
    if let Some(c) = s.c_gh {
        let _ = writeln!(out, "c_G/H      {c:.6}");
    }
    if let Some(n) = s.n_gh {
        let _ = writeln!(out, "n_G/H      {n:.6}");
    }
    if let Some(l) = &r.lattice {
        let _ = writeln!(out, "lattice    {} nodes on {} (torus adjoined: {})", l.nodes.len(), l.space, l.torus_adjoined);
        for n in &l.nodes {
            let flags = match (n.toral, n.minimal) {
                (true, true) => " toral minimal",
                (true, false) => " toral",
                (false, true) => " minimal",
                (false, false) => "",
            };
            let _ = writeln!(out, "  k{:<3} dim {:<4} summands {:?}{}", n.id, n.dim, n.summands, flags);
        }
    }
    if let Some(c) = &r.complex {
        if let Some(h) = &c.homology {
            let _ = writeln!(out, "faces      {:?}", h.faces);
            let _ = writeln!(out, "betti      b~(-1) {} b~ {:?}", h.betti_minus_one, h.betti);
            for t in &h.torsion {
                let f: Vec<String> = t.factors.iter().map(|f| f.to_string()).collect();
                let _ = writeln!(out, "torsion    H~_{} : {}", t.degree, f.join(", "));
            }
        }
        let cert = match &c.certificate {
            CertificateStatus::Contractible { witness } => format!("Contractible ({witness})"),
            CertificateStatus::NonContractible { degree } => format!("NonContractible({degree})"),
            CertificateStatus::Inconclusive => "Inconclusive".into(),
            CertificateStatus::NotComputed { reason } => format!("NotComputed: {reason}"),
        };
        let _ = writeln!(out, "certificate {cert}");
    }
    if let Some(e) = &r.einstein {
        let _ = writeln!(out, "einstein   {} solutions in {} orbits on {}", e.solutions.len(), e.orbits, e.space);
        if let Some(n) = &e.note {
            let _ = writeln!(out, "  note: {n}");
        }
        for s in &e.solutions {
            let _ = writeln!(
                out,
                "  orbit {} x = {} lambda {:.9} residual {:.1e} coindex ({}, {})",
                s.orbit,
                fmt_list(&s.x.x),
                s.lambda,
                s.residual,
                s.coindex,
                s.augmented_coindex
            );
        }
    }
    if let Some(v) = r.verdict {
        let v = match v {
            Verdict::ExistsByTopology => "EXISTS_BY_TOPOLOGY",
            Verdict::ExistsNumerically => "EXISTS_NUMERICALLY",
            Verdict::Unknown => "UNKNOWN",
        };
        let _ = writeln!(out, "verdict    {v}");
    }
    let p = &r.provenance;
    let _ = writeln!(out, "provenance version {} seed {} config {}", p.tool_version, p.seed, p.config_sha256);
    out
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

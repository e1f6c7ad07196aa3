//! Command-line experiment runner.
//!
//! Every run writes a CSV table and a JSON manifest into the output
//! directory. The manifest records the resolved study, so loading it and
//! re-resolving reproduces every waveform configuration exactly.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::CustomSpec;
use crate::covariance::{gramian_analytic, gramian_discrete, partition_blocks, ClutterGramian};
use crate::detect::pd_direction_map;
use crate::error::{Error, Result};
use crate::fdcm::{build_afdcm, WaveformConfig};
use crate::io::{fmt_f64, magnitude, save_matrix, Table};
use crate::presets::{self, DetectionStudy, GramianStudy, RankStudy, StudyRow};
use crate::rank::{numerical_rank, DEFAULT_REL_TOL};

/// Default seed when none is given on the command line or in the config.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Block-diagonal Gramian of a 16-pulse, 4 Tx, 8 Rx waveform with four codes.
    Fig3,
    /// Clutter rank versus velocity extent, codes varying by pulse.
    Fig4,
    /// Clutter rank versus direction extent, codes varying by element.
    Fig5,
    /// Frequency diverse array NCR and FDL versus direction extent.
    Fig6,
    /// Stepped-frequency NCR and FDL versus velocity extent.
    Fig7,
    /// FD-MIMO NCR versus direction extent.
    Fig8,
    /// Airborne STAP NCR and FDL versus direction extent.
    Fig9,
    /// Detection probability versus SNR for frequency diverse arrays.
    Fig10,
    /// Rank sweep read from a TOML file given with --config.
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
            Preset::Fig10 => "fig10",
            Preset::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, Parser)]
#[command(
    name = "fdclutter",
    version,
    about = "Clutter rank and detection studies for frequency diverse radar"
)]
pub struct Cli {
    #[command(subcommand)]
    pub preset: Preset,
    /// Study definition (TOML); required by `custom`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "FDCLUTTER_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    /// Seed for code draws and Monte Carlo trials; overrides the config file (default 1).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all available cores when absent.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Numerical-rank threshold relative to the largest eigenvalue.
    #[arg(long = "rel-tol", global = true)]
    pub rel_tol: Option<f64>,
    /// Detection at pfa = 1e-5 with 10^7 noise-only trials.
    #[arg(long = "long-run", global = true)]
    pub long_run: bool,
}

/// Everything the user asked for, before resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub rel_tol: Option<f64>,
    pub long_run: bool,
}

impl From<&Cli> for ExperimentSpec {
    fn from(c: &Cli) -> Self {
        Self {
            preset: c.preset,
            config: c.config.clone(),
            out: c.out.clone(),
            seed: c.seed,
            jobs: c.jobs,
            rel_tol: c.rel_tol,
            long_run: c.long_run,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Study {
    Gramian(GramianStudy),
    Rank(RankStudy),
    Detection(DetectionStudy),
}

impl Study {
    pub fn name(&self) -> String {
        match self {
            Study::Gramian(_) => "fig3".into(),
            Study::Rank(s) => s.name.clone(),
            Study::Detection(_) => "fig10".into(),
        }
    }

    pub fn configs(&self) -> Result<Vec<LabeledConfig>> {
        let pairs = match self {
            Study::Gramian(s) => vec![("random-4".to_string(), s.config()?)],
            Study::Rank(s) => s.configs()?,
            Study::Detection(s) => s.configs()?,
        };
        Ok(pairs
            .into_iter()
            .map(|(label, config)| LabeledConfig { label, config })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledConfig {
    pub label: String,
    pub config: WaveformConfig,
}

/// Run record: request, resolved study and the waveforms it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub spec: ExperimentSpec,
    pub study: Study,
    pub configs: Vec<LabeledConfig>,
}

impl Manifest {
    pub fn new(spec: ExperimentSpec, study: Study) -> Result<Self> {
        let configs = study.configs()?;
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
            study,
            configs,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Resolves the study a spec describes without running it.
pub fn resolve(spec: &ExperimentSpec) -> Result<Study> {
    if spec.preset != Preset::Custom && spec.config.is_some() {
        return Err(Error::InvalidConfig(format!(
            "--config is only read by `custom`, not `{}`",
            spec.preset.name()
        )));
    }
    let seed = spec.seed.unwrap_or(DEFAULT_SEED);
    let tol = spec.rel_tol.unwrap_or(DEFAULT_REL_TOL);
    let study = match spec.preset {
        Preset::Fig3 => Study::Gramian(presets::fig3(seed, tol)),
        Preset::Fig4 => Study::Rank(presets::fig4(seed, tol)),
        Preset::Fig5 => Study::Rank(presets::fig5(seed, tol)),
        Preset::Fig6 => Study::Rank(presets::fig6(seed, tol)),
        Preset::Fig7 => Study::Rank(presets::fig7(seed, tol)),
        Preset::Fig8 => Study::Rank(presets::fig8(seed, tol)),
        Preset::Fig9 => Study::Rank(presets::fig9(seed, tol)),
        Preset::Fig10 => Study::Detection(presets::fig10(seed, spec.long_run)),
        Preset::Custom => {
            let path = spec
                .config
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("`custom` needs --config PATH".into()))?;
            Study::Rank(CustomSpec::load(path)?.resolve(spec.seed, spec.rel_tol)?)
        }
    };
    if let Study::Rank(s) = &study {
        s.validate()?;
    }
    Ok(study)
}

/// Runs a spec on a dedicated thread pool and returns the files written.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let study = resolve(spec)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = spec.jobs {
        if j == 0 {
            return Err(Error::InvalidConfig("--jobs must be >= 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&spec.out)?;
    let manifest = Manifest::new(spec.clone(), study)?;
    let name = manifest.study.name();
    let mut written = Vec::new();
    pool.install(|| -> Result<()> {
        match &manifest.study {
            Study::Gramian(s) => run_gramian(s, &spec.out, &mut written),
            Study::Rank(s) => run_rank(s, &spec.out, &mut written),
            Study::Detection(s) => run_detection(s, &spec.out, &mut written),
        }
    })?;
    let path = spec.out.join(format!("{name}.manifest.json"));
    manifest.save(&path)?;
    written.push(path);
    Ok(written)
}

fn base_table(header: &[&str], study: &str, seed: u64) -> Table {
    let mut t = Table::new(header);
    t.meta("study", study)
        .meta("seed", seed)
        .meta("version", env!("CARGO_PKG_VERSION"));
    t
}

fn off_block_max(m: &ClutterGramian, sizes: &[usize]) -> (f64, f64) {
    let mut owner = Vec::with_capacity(m.dim());
    for (b, &s) in sizes.iter().enumerate() {
        owner.extend(std::iter::repeat_n(b, s));
    }
    let mut off = 0.0f64;
    let mut diag = 0.0f64;
    for j in 0..m.dim() {
        diag = diag.max(m.matrix[(j, j)].norm());
        for i in 0..m.dim() {
            if owner[i] != owner[j] {
                off = off.max(m.matrix[(i, j)].norm());
            }
        }
    }
    (off, diag)
}

fn run_gramian(s: &GramianStudy, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let cfg = s.config()?;
    let af = build_afdcm(&cfg);
    let region = s.region(&cfg)?;
    let blocks = partition_blocks(&cfg, &af);
    let analytic = gramian_analytic(&cfg, &af, &region)?;
    let discrete = gramian_discrete(&cfg, &af, &region.clone().with_grid(s.grid(&cfg)?))?;
    let (pa, _) = crate::covariance::permute_block_diagonal(&analytic, &blocks)?;
    let (pd, _) = crate::covariance::permute_block_diagonal(&discrete, &blocks)?;
    let sizes: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
    let (off_a, diag_a) = off_block_max(&pa, &sizes);
    let (off_d, diag_d) = off_block_max(&pd, &sizes);

    let mut t = base_table(
        &[
            "block",
            "code",
            "start",
            "dim",
            "rank_analytic",
            "rank_discrete",
        ],
        "fig3",
        s.seed,
    );
    t.meta("dimension", cfg.dimension())
        .meta("rel_tol", fmt_f64(s.rel_tol))
        .meta("rank_analytic", numerical_rank(&analytic, s.rel_tol)?)
        .meta("rank_discrete", numerical_rank(&discrete, s.rel_tol)?)
        .meta("off_block_max_analytic", fmt_f64(off_a / diag_a))
        .meta("off_block_max_discrete", fmt_f64(off_d / diag_d));
    let mut start = 0;
    for (i, b) in blocks.iter().enumerate() {
        let sub = |g: &ClutterGramian| ClutterGramian {
            matrix: g
                .matrix
                .view((start, start), (b.dim(), b.dim()))
                .into_owned(),
            provenance: g.provenance,
        };
        t.push(vec![
            i.to_string(),
            b.code.to_string(),
            start.to_string(),
            b.dim().to_string(),
            numerical_rank(&sub(&pa), s.rel_tol)?.to_string(),
            numerical_rank(&sub(&pd), s.rel_tol)?.to_string(),
        ]);
        start += b.dim();
    }
    for (file, m) in [
        ("fig3_gramian.bin", &analytic.matrix),
        ("fig3_permuted.bin", &pa.matrix),
        ("fig3_permuted_discrete.bin", &pd.matrix),
    ] {
        let path = out.join(file);
        save_matrix(&path, &magnitude(m))?;
        written.push(path);
    }
    let path = out.join("fig3.csv");
    t.save(&path)?;
    written.push(path);
    Ok(())
}

pub const RANK_COLUMNS: [&str; 16] = [
    "variant",
    "assignment",
    "codes",
    "subbands",
    "extent",
    "dimension",
    "distinct_samples",
    "numerical_rank",
    "lower_bound",
    "upper_bound",
    "corollary",
    "ncr",
    "ncr_distinct",
    "estimate_ncr",
    "estimate_ncr_distinct",
    "fdl_db",
];

/// `base` is the NCR of the fixed-frequency row at the same extent and sub-band count.
fn rank_row(r: &StudyRow, base: Option<f64>) -> Vec<String> {
    let rep = &r.report;
    let fdl = match (r.fdl_db, base) {
        (Some(x), _) => fmt_f64(x),
        (None, Some(b)) if rep.ncr >= 1.0 && b < 1.0 => "-inf".into(),
        _ => "nan".into(),
    };
    vec![
        r.variant.label(),
        r.variant.assignment.to_string(),
        r.variant.codes.to_string(),
        r.variant.subbands.to_string(),
        fmt_f64(r.extent),
        rep.dimension.to_string(),
        rep.distinct_samples().to_string(),
        rep.numerical_rank.to_string(),
        rep.lower_bound.to_string(),
        rep.upper_bound.to_string(),
        r.corollary.map(|c| c.to_string()).unwrap_or_default(),
        fmt_f64(rep.ncr),
        fmt_f64(r.ncr_distinct()),
        fmt_f64(r.estimate() as f64 / rep.dimension as f64),
        fmt_f64(r.estimate_distinct()),
        fdl,
    ]
}

fn run_rank(s: &RankStudy, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let rows = s.run()?;
    let mut t = base_table(&RANK_COLUMNS, &s.name, s.seed);
    t.meta("family", format!("{:?}", s.family).to_lowercase())
        .meta("rel_tol", fmt_f64(s.rel_tol));
    for r in &rows {
        let base = rows
            .iter()
            .find(|b| {
                b.variant.is_fixed()
                    && b.variant.subbands == r.variant.subbands
                    && b.extent == r.extent
            })
            .map(|b| b.report.ncr);
        t.push(rank_row(r, base));
    }
    let path = out.join(format!("{}.csv", s.name));
    t.save(&path)?;
    written.push(path);
    Ok(())
}

fn run_detection(s: &DetectionStudy, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let results = s.run()?;
    let mut t = base_table(
        &[
            "variant",
            "snr_db",
            "pd",
            "pfa_achieved",
            "trials",
            "threshold",
        ],
        "fig10",
        s.seed,
    );
    t.meta("pfa", fmt_f64(s.pfa))
        .meta("trials_h0", s.trials_h0)
        .meta("clutter_to_noise_db", fmt_f64(s.clutter_to_noise_db));
    for (v, res) in &results {
        for p in &res.points {
            t.push(vec![
                v.label(),
                fmt_f64(p.snr_db),
                fmt_f64(p.pd),
                fmt_f64(p.pfa_achieved),
                p.trials.to_string(),
                fmt_f64(res.threshold),
            ]);
        }
    }
    let path = out.join("fig10.csv");
    t.save(&path)?;
    written.push(path);

    if let Some(v) = s.variants.iter().find(|v| v.label() == "linear-4-q1") {
        let mut sc = s.scenario(v)?;
        sc.snr_db = vec![s.map_snr_db];
        let map = pd_direction_map(&sc, &s.map_directions)?;
        let mut m = base_table(&["direction", "pd", "pfa_achieved"], "fig10-map", s.seed);
        m.meta("variant", v.label())
            .meta("snr_db", fmt_f64(s.map_snr_db));
        for (dir, res) in &map {
            m.push(vec![
                fmt_f64(*dir),
                fmt_f64(res.points[0].pd),
                fmt_f64(res.pfa_achieved),
            ]);
        }
        let path = out.join("fig10_map.csv");
        m.save(&path)?;
        written.push(path);
    }
    Ok(())
}

//! Experiment configuration, result records and the jobs behind the `scmap`
//! command line tool.

mod analysis;
mod jobs;

pub use analysis::Analysis;
pub use jobs::{inspect, run, JobOutput, MapperOutput};

use sha2::{Digest, Sha256};

use crate::bitmapper::OptimizerConfig;
use crate::exit::MixtureRule;
use crate::fiber::FiberLinkParams;
use crate::scgldpc::CnRule;
use crate::sim::SimConfig;
use crate::threshold::Search;
use crate::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    #[default]
    Threshold,
    Optimize,
    SimulateAwgn,
    SimulateFiber,
    CapacityGap,
    GainSweep,
}

/// Protograph chains of the examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Preset {
    #[serde(rename = "regular-3-6-ms1")]
    Regular36Ms1,
    #[serde(rename = "regular-3-6-ms2")]
    Regular36Ms2,
    #[serde(rename = "rate-three-quarters")]
    RateThreeQuarters,
}

impl Preset {
    pub fn blocks(self) -> Vec<Vec<Vec<u32>>> {
        use crate::scldpc::presets;
        match self {
            Preset::Regular36Ms1 => presets::regular_3_6_ms1(),
            Preset::Regular36Ms2 => presets::regular_3_6_ms2(),
            Preset::RateThreeQuarters => presets::rate_three_quarters(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum CodeSpec {
    /// Protograph SC-LDPC code, soft-decision decoding.
    Scldpc {
        preset: Preset,
        /// Lifting factor `M` (simulation only).
        lifting: usize,
        #[serde(default)]
        mixture: MixtureRule,
    },
    /// SC-GLDPC code with a shortened BCH component, hard-decision decoding.
    Scgldpc {
        nu: u32,
        t: u32,
        s: usize,
        w: usize,
        /// Number of CNs per position `C` (simulation only).
        c: usize,
        #[serde(default)]
        rule: CnRule,
    },
}

impl Default for CodeSpec {
    fn default() -> Self {
        CodeSpec::Scldpc { preset: Preset::RateThreeQuarters, lifting: 600, mixture: MixtureRule::default() }
    }
}

/// Mapper used by a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapperKind {
    Baseline,
    /// Optimized by differential evolution inside the job.
    Optimized,
    /// Read from `mapper_file`.
    File,
}

impl std::fmt::Display for MapperKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MapperKind::Baseline => "baseline",
            MapperKind::Optimized => "optimized",
            MapperKind::File => "file",
        })
    }
}

/// One experiment. Every field has a default, so a config file only lists
/// what differs; the resolved config is echoed with all values filled in.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub job: JobKind,
    /// Job id stamped on every record.
    pub name: String,
    /// PAM order per real dimension: 2 is PM-QPSK, 8 is PM-64-QAM.
    pub order_per_dim: usize,
    pub modes: Vec<Mode>,
    pub t_list: Vec<usize>,
    /// Window size `W`; 0 decodes the whole chain at once.
    pub window: usize,
    pub l_max: usize,
    pub mappers: Vec<MapperKind>,
    pub mapper_file: String,
    /// Seed of the random graph (lifting or GLDPC interleaver).
    pub graph_seed: u64,
    pub snr_db: Vec<f64>,
    pub spans: Vec<usize>,
    /// Capacity-gap job: also report the optimized mapper.
    pub gap_optimized: bool,
    /// Output directory of the command line tool.
    pub output: String,
    pub code: CodeSpec,
    pub search: Search,
    pub optimizer: OptimizerConfig,
    pub sim: SimConfig,
    pub fiber: FiberLinkParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            job: JobKind::Threshold,
            name: "experiment".into(),
            order_per_dim: 8,
            modes: vec![Mode::Terminated, Mode::Tailbiting],
            t_list: vec![30],
            window: 5,
            l_max: 10,
            mappers: vec![MapperKind::Baseline],
            mapper_file: String::new(),
            graph_seed: 1,
            snr_db: Vec::new(),
            spans: Vec::new(),
            gap_optimized: false,
            output: "results".into(),
            code: CodeSpec::default(),
            search: Search::default(),
            optimizer: OptimizerConfig::default(),
            sim: SimConfig::default(),
            fiber: FiberLinkParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn window(&self) -> Option<usize> {
        (self.window > 0).then_some(self.window)
    }

    /// SHA-256 of the canonical JSON form, first 16 hex digits. The output
    /// directory does not enter the hash.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&ExperimentConfig { output: String::new(), ..self.clone() }).unwrap_or_default();
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// One measured or computed value.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResultRecord {
    pub job_id: String,
    pub config_hash: String,
    pub metric: String,
    pub mode: Mode,
    pub t_len: usize,
    pub mapper: String,
    pub x: f64,
    pub y: f64,
    pub std_err: f64,
    /// Error counts of Monte Carlo points (`bit_errors`, `bits`, `frames`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<[u64; 3]>,
    #[serde(default)]
    pub upper_bound: bool,
    /// `ok`, or the error of a failed sub-job.
    pub status: String,
    pub wall_time_s: f64,
}

impl ResultRecord {
    /// CSV header matching [`csv_row`](Self::csv_row).
    pub const CSV_HEADER: &'static str = "job_id,config_hash,metric,mode,t_len,mapper,x,y,std_err,bit_errors,bits,frames,upper_bound,status,wall_time_s";

    pub fn csv_row(&self) -> String {
        let [e, b, f] = self.counts.map_or([String::new(), String::new(), String::new()], |c| c.map(|v| v.to_string()));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\",{:.3}",
            self.job_id,
            self.config_hash,
            self.metric,
            self.mode,
            self.t_len,
            self.mapper,
            self.x,
            self.y,
            self.std_err,
            e,
            b,
            f,
            self.upper_bound,
            self.status.replace('"', "'"),
            self.wall_time_s
        )
    }

    /// The record with the wall time cleared, for reproducibility checks.
    pub fn without_time(&self) -> Self {
        ResultRecord { wall_time_s: 0.0, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        assert_eq!(a.hash(), ExperimentConfig::default().hash());
        assert_eq!(a.hash().len(), 16);
        let b = ExperimentConfig { l_max: 11, ..ExperimentConfig::default() };
        assert_ne!(a.hash(), b.hash());
        let c = ExperimentConfig { output: "elsewhere".into(), ..ExperimentConfig::default() };
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig {
            code: CodeSpec::Scgldpc { nu: 9, t: 4, s: 223, w: 2, c: 100, rule: CnRule::PassThrough },
            mappers: vec![MapperKind::Baseline, MapperKind::Optimized],
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        // missing fields fall back to the defaults
        let sparse: ExperimentConfig = serde_json::from_str(r#"{"job": "gain-sweep", "t_list": [12, 30]}"#).unwrap();
        assert_eq!((sparse.job, sparse.t_list.clone(), sparse.l_max), (JobKind::GainSweep, vec![12, 30], 10));
    }

    #[test]
    fn csv_projection() {
        let r = ResultRecord {
            job_id: "j".into(),
            config_hash: "h".into(),
            metric: "ber".into(),
            mode: Mode::Tailbiting,
            t_len: 30,
            mapper: "baseline".into(),
            x: 1.5,
            y: 1e-4,
            std_err: 0.0,
            counts: Some([3, 30000, 1]),
            upper_bound: false,
            status: "ok".into(),
            wall_time_s: 2.0,
        };
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), ResultRecord::CSV_HEADER.split(',').count());
        assert!(row.contains(",3,30000,1,"));
        assert_eq!(r.without_time().wall_time_s, 0.0);
    }
}

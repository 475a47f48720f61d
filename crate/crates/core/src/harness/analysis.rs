use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CodeSpec, ExperimentConfig, MapperKind};
use crate::bch::BchCode;
use crate::bitmapper::{baseline_mapper, optimize, BerThreshold, BitMapperMatrix, Family, Levels, OptimizeResult, OptimizerConfig};
use crate::channel::{build_constellation, snr_for_bicm_rate, snr_for_bsc_rate, Constellation, Labeling};
use crate::error::{Error, Result};
use crate::exit::{self, PexitConfig};
use crate::gldpc_de::{self, Component, HddDeConfig};
use crate::scgldpc::{sample_graph, HddConfig};
use crate::scldpc::{build_base_matrix, lift, BaseMatrix, BpConfig};
use crate::sim::{self, BerPoint, Channel, SymbolLayout};
use crate::threshold::threshold;
use crate::Mode;

enum Kind {
    Sdd { base: BaseMatrix, cfg: PexitConfig },
    Hdd { comp: Component, bch: BchCode, w: usize, cfg: HddDeConfig },
}

/// Asymptotic analysis of one code at one spatial length and mode, with
/// everything needed to evaluate and optimize mappers for it.
pub struct Analysis {
    c: Constellation,
    levels: Levels,
    kind: Kind,
    spec: CodeSpec,
    t_len: usize,
    mode: Mode,
    search: crate::threshold::Search,
}

impl Analysis {
    pub fn new(cfg: &ExperimentConfig, t_len: usize, mode: Mode) -> Result<Self> {
        let c = build_constellation(cfg.order_per_dim, Labeling::Gray)?;
        let levels = Levels::new(c.protection_levels())?;
        let kind = match &cfg.code {
            CodeSpec::Scldpc { preset, mixture, .. } => Kind::Sdd {
                base: build_base_matrix(&preset.blocks(), t_len, mode)?,
                cfg: PexitConfig { window: cfg.window(), l_max: cfg.l_max, rule: *mixture, start: 0 },
            },
            CodeSpec::Scgldpc { nu, t, s, w, .. } => {
                let bch = BchCode::new(*nu, *t as usize, *s)?;
                if t_len < *w {
                    return Err(Error::invalid(format!("T = {t_len} is shorter than the coupling width {w}")));
                }
                Kind::Hdd {
                    comp: Component::from(&bch),
                    bch,
                    w: *w,
                    cfg: HddDeConfig { window: cfg.window(), l_max: cfg.l_max, start: 0 },
                }
            }
        };
        Ok(Analysis { c, levels, kind, spec: cfg.code.clone(), t_len, mode, search: cfg.search })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.c
    }

    pub fn levels(&self) -> &Levels {
        &self.levels
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Sdd { .. } => Family::Scldpc,
            Kind::Hdd { .. } => Family::Scgldpc,
        }
    }

    /// Mapper columns: protograph columns or spatial positions.
    pub fn n_cols(&self) -> usize {
        match &self.kind {
            Kind::Sdd { base, .. } => base.cols(),
            Kind::Hdd { .. } => self.t_len,
        }
    }

    /// Mapper columns per spatial position.
    pub fn cols_per_position(&self) -> usize {
        self.n_cols() / self.t_len
    }

    pub fn rate(&self) -> f64 {
        match &self.kind {
            Kind::Sdd { base, .. } => base.design_rate(),
            Kind::Hdd { bch, w, .. } => crate::scgldpc::design_rate(bch, self.t_len, *w, self.mode),
        }
    }

    /// SNR at which the benchmark capacity equals the code rate: BICM
    /// capacity for soft decisions, averaged-BSC capacity for hard ones.
    pub fn capacity_snr_db(&self) -> Result<f64> {
        match self.kind {
            Kind::Sdd { .. } => snr_for_bicm_rate(&self.c, self.rate()),
            Kind::Hdd { .. } => snr_for_bsc_rate(&self.c, self.rate()),
        }
    }

    pub fn baseline(&self) -> BitMapperMatrix {
        baseline_mapper(self.c.m(), self.n_cols(), self.family())
    }

    /// Decoding starts `start` positions later (tailbiting only).
    pub fn with_start(mut self, start: usize) -> Self {
        match &mut self.kind {
            Kind::Sdd { cfg, .. } => cfg.start = start,
            Kind::Hdd { cfg, .. } => cfg.start = start,
        }
        self
    }

    /// Predicted BER of mapper `a` at `snr_db`.
    pub fn ber(&self, a: &BitMapperMatrix, snr_db: f64) -> Result<f64> {
        let profile = self.c.profile(snr_db);
        match &self.kind {
            Kind::Sdd { base, cfg } => exit::predicted_ber(base, a, &profile, cfg),
            Kind::Hdd { comp, w, cfg, .. } => gldpc_de::predicted_ber(comp, *w, self.mode, a, &profile, cfg),
        }
    }

    pub fn threshold(&self, a: &BitMapperMatrix) -> Result<f64> {
        Ok(threshold(|s| self.ber(a, s), &self.search)?.snr_db)
    }

    pub fn optimize(&self, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
        let objective = BerThreshold { ber: |a: &BitMapperMatrix, s: f64| self.ber(a, s), search: self.search };
        optimize(objective, &self.levels, self.n_cols(), self.family(), cfg)
    }

    /// The mapper of the given kind; the optimizer result comes along for
    /// optimized mappers.
    pub fn mapper(&self, kind: MapperKind, cfg: &ExperimentConfig) -> Result<(BitMapperMatrix, Option<OptimizeResult>)> {
        match kind {
            MapperKind::Baseline => Ok((self.baseline(), None)),
            MapperKind::Optimized => {
                let r = self.optimize(&cfg.optimizer)?;
                Ok((r.best.clone(), Some(r)))
            }
            MapperKind::File => {
                let text = std::fs::read_to_string(&cfg.mapper_file)?;
                let (a, _) = BitMapperMatrix::from_text(&text)?;
                if a.m() != self.c.m() || a.n_cols() != self.n_cols() || a.family() != self.family() {
                    return Err(Error::invalid(format!("mapper file {} does not fit this code", cfg.mapper_file)));
                }
                Ok((a, None))
            }
        }
    }

    /// Rates, sizes and graph audit of the code as one JSON object.
    pub fn inspect(&self, cfg: &ExperimentConfig) -> Result<serde_json::Value> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.graph_seed);
        let mut v = serde_json::json!({
            "t_len": self.t_len,
            "mode": self.mode.to_string(),
            "design_rate": self.rate(),
            "bits_per_symbol": self.c.m(),
            "mapper_columns": self.n_cols(),
            "capacity_snr_db": self.capacity_snr_db()?,
        });
        match (&self.kind, &self.spec) {
            (Kind::Sdd { base, .. }, CodeSpec::Scldpc { lifting, .. }) => {
                let code = lift(base, *lifting, &mut rng)?;
                v["base_matrix"] = serde_json::json!([base.rows(), base.cols()]);
                v["memory"] = base.memory().into();
                v["n"] = code.n().into();
                v["checks"] = code.r().into();
                v["edges"] = code.num_edges().into();
            }
            (Kind::Hdd { bch, w, .. }, CodeSpec::Scgldpc { c, .. }) => {
                let graph = sample_graph(bch, *c, self.t_len, *w, self.mode, &mut rng)?;
                let audit = graph.audit()?;
                v["component"] = serde_json::json!([bch.n(), bch.k(), bch.t()]);
                v["component_rate"] = bch.rate().into();
                v["n"] = audit.vns.into();
                v["checks"] = audit.cns.into();
                v["known_sockets"] = audit.known_sockets.into();
            }
            _ => return Err(Error::invalid("code family mismatch")),
        }
        Ok(v)
    }

    /// Finite-length BER curve of mapper `a` over `channels`.
    pub fn simulate(&self, a: &BitMapperMatrix, channels: &[Channel], cfg: &ExperimentConfig) -> Result<Vec<BerPoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.graph_seed);
        match (&self.kind, &self.spec) {
            (Kind::Sdd { base, .. }, CodeSpec::Scldpc { lifting, .. }) => {
                let code = lift(base, *lifting, &mut rng)?;
                let layout = SymbolLayout::from_mapper(a, *lifting)?;
                let bp = BpConfig { window: cfg.window(), l_max: cfg.l_max, early_stop: true };
                channels.iter().enumerate().map(|(p, ch)| sim::simulate_scldpc(&code, bp, &self.c, &layout, ch, &cfg.sim, p as u64)).collect()
            }
            (Kind::Hdd { bch, w, .. }, CodeSpec::Scgldpc { c, rule, .. }) => {
                let graph = sample_graph(bch, *c, self.t_len, *w, self.mode, &mut rng)?;
                let layout = SymbolLayout::from_mapper(a, graph.vns_per_position())?;
                let hdd = HddConfig { window: cfg.window(), l_max: cfg.l_max, rule: *rule };
                channels.iter().enumerate().map(|(p, ch)| sim::simulate_scgldpc(&graph, hdd, &self.c, &layout, ch, &cfg.sim, p as u64)).collect()
            }
            _ => Err(Error::invalid("code family mismatch")),
        }
    }
}

//! Mixed-precision exploration.
//!
//! Every tensor gets one of two bitwidths. The explorer
//! 1. fits the representation's data-dependent parameters,
//! 2. runs the model once all-high and once all-low and ranks tensors by
//!    how far their values move between the two ([`HeatMap`]),
//! 3. promotes tensors to the high bitwidth in rank order while the planned
//!    scratch usage stays within the soft-scaled memory limit, retrying
//!    around the tensors that hit the limit.
//!
//! Every assignment that gets executed is recorded in a ledger; the best
//! ledger entry is the result.

mod assignment;
mod heatmap;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::interp::{self, Accuracy, Dataset, FixedSemantics, InterpError, RunOptions, RunResult, ValueMap};
use crate::ir::Model;
use crate::memplan::{self, NodeLimit, PlanError};
use crate::numrep::{Representation, ValueRange};

pub use crate::numrep::RepParams;
pub use assignment::{tensor_bytes, BitwidthAssignment};
pub use heatmap::{create_heat_map, percentile_95, HeatMap, HeatMapError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExploreError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    HeatMap(#[from] HeatMapError),
}

/// How planned scratch usage is measured during exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UsageEvaluator {
    FirstFit,
    /// Exact planner at granularity `coarsen`, bounded per call.
    Exact {
        coarsen: u64,
        node_limit: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub representation: Representation,
    pub low: u32,
    pub high: u32,
    /// bytes
    pub memory_limit: u64,
    pub soft_limit: f64,
    /// posit es candidates for the low and high bitwidth
    pub es_low: Vec<u32>,
    pub es_high: Vec<u32>,
    pub evaluator: UsageEvaluator,
    pub fixed_semantics: FixedSemantics,
}

impl ExploreConfig {
    pub fn new(representation: Representation, low: u32, high: u32, memory_limit: u64) -> Self {
        Self {
            representation,
            low,
            high,
            memory_limit,
            soft_limit: 1.0,
            es_low: default_es_candidates(low),
            es_high: default_es_candidates(high),
            evaluator: UsageEvaluator::FirstFit,
            fixed_semantics: FixedSemantics::QuantizeCompute,
        }
    }

    pub fn validate(&self) -> Result<(), ExploreError> {
        if self.low >= self.high {
            return Err(ExploreError::Config("low bitwidth must be below high bitwidth"));
        }
        if !(self.soft_limit.is_finite() && self.soft_limit > 0.0) {
            return Err(ExploreError::Config("soft limit factor must be a positive real"));
        }
        if self.representation == Representation::Posit && (self.es_low.is_empty() || self.es_high.is_empty()) {
            return Err(ExploreError::Config("posit needs at least one es candidate per bitwidth"));
        }
        if let UsageEvaluator::Exact { coarsen: 0, .. } = self.evaluator {
            return Err(ExploreError::Config("coarsening constant must be at least 1"));
        }
        Ok(())
    }

    /// `usage <= limit * soft`.
    pub fn within_budget(&self, usage: u64) -> bool {
        usage as f64 <= self.memory_limit as f64 * self.soft_limit
    }
}

/// es candidates tried when none are given.
pub fn default_es_candidates(bits: u32) -> Vec<u32> {
    match bits {
        8 => alloc::vec![0, 2],
        16 => alloc::vec![1, 2],
        _ => alloc::vec![DEFAULT_ES],
    }
}

/// es kept unless another candidate is strictly more accurate.
pub const DEFAULT_ES: u32 = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreStats {
    /// memory plans computed
    pub codegen_calls: u64,
    /// full-dataset runs from value maps onward
    pub execution_calls: u64,
    /// full-dataset runs spent choosing es
    pub stage1_execution_calls: u64,
    /// full-dataset runs spent choosing the bitwidth pair
    pub pair_selection_execution_calls: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    AllLow,
    Cumulative,
    PerOvershoot,
    AllOvershoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub rho: BitwidthAssignment,
    pub planned_ram_bytes: u64,
    pub accuracy: Accuracy,
    pub stage: Stage,
    /// bytes of every tensor at the high bitwidth
    pub high_bytes: u64,
}

/// Index of the best entry: highest accuracy, then fewest high-bitwidth
/// bytes, then earliest.
pub fn best_entry(ledger: &[LedgerEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in ledger.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &ledger[b];
                match e.accuracy.cmp_quality(&cur.accuracy) {
                    Ordering::Greater => true,
                    Ordering::Equal => e.high_bytes < cur.high_bytes,
                    Ordering::Less => false,
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueMaps {
    pub low: ValueMap,
    pub high: ValueMap,
    pub low_accuracy: Accuracy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub rho: BitwidthAssignment,
    pub accuracy: Accuracy,
    pub params: RepParams,
    pub heat_map: HeatMap,
    pub overshooting: Vec<String>,
    pub ledger: Vec<LedgerEntry>,
    pub stats: ExploreStats,
    /// planned usage of the all-low assignment
    pub all_low_usage: u64,
    /// false when even all-low exceeds the soft-scaled limit
    pub feasible: bool,
}

pub struct Explorer<'a> {
    model: &'a Model,
    dataset: &'a Dataset,
    cfg: ExploreConfig,
    reference: RunResult,
    profile: ValueMap,
    params: RepParams,
    stats: ExploreStats,
    ledger: Vec<LedgerEntry>,
    overshooting: Vec<String>,
}

impl<'a> Explorer<'a> {
    /// Runs the float reference (with value logging, for profiling).
    pub fn new(model: &'a Model, dataset: &'a Dataset, cfg: ExploreConfig) -> Result<Self, ExploreError> {
        cfg.validate()?;
        let reference =
            interp::run(model, dataset, &RepParams::Float, &BitwidthAssignment::new(), RunOptions::logged())?;
        let profile = reference.value_map.clone().unwrap_or_default();
        let params = initial_params(&cfg, &profile, model);
        Ok(Self {
            model,
            dataset,
            cfg,
            reference,
            profile,
            params,
            stats: ExploreStats::default(),
            ledger: Vec::new(),
            overshooting: Vec::new(),
        })
    }

    pub fn config(&self) -> &ExploreConfig {
        &self.cfg
    }

    pub fn reference(&self) -> &RunResult {
        &self.reference
    }

    pub fn params(&self) -> &RepParams {
        &self.params
    }

    /// Per-tensor values of the float reference.
    pub fn profile(&self) -> &ValueMap {
        &self.profile
    }

    pub fn stats(&self) -> ExploreStats {
        self.stats
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    /// Overshooting tensors found by the first cumulative walk.
    pub fn overshooting(&self) -> &[String] {
        &self.overshooting
    }

    fn uniform(&self, bits: u32) -> BitwidthAssignment {
        BitwidthAssignment::uniform(self.model, bits)
    }

    fn run_opts(&self, log_values: bool) -> RunOptions {
        RunOptions { log_values, fixed_semantics: self.cfg.fixed_semantics }
    }

    fn accuracy_of(&self, res: &RunResult) -> Result<Accuracy, ExploreError> {
        Ok(interp::accuracy(res, self.dataset, &self.reference)?)
    }

    /// Accuracy of the float reference against the dataset.
    pub fn reference_accuracy(&self) -> Result<Accuracy, ExploreError> {
        self.accuracy_of(&self.reference)
    }

    /// One full-dataset run, counted in `execution_calls`.
    pub fn evaluate(&mut self, rho: &BitwidthAssignment) -> Result<Accuracy, ExploreError> {
        self.stats.execution_calls += 1;
        let res = interp::run(self.model, self.dataset, &self.params, rho, self.run_opts(false))?;
        self.accuracy_of(&res)
    }

    /// Planned scratch usage of `rho`, counted in `codegen_calls`.
    pub fn planned_usage(&mut self, rho: &BitwidthAssignment) -> Result<u64, ExploreError> {
        self.stats.codegen_calls += 1;
        let ranges = memplan::live_ranges(self.model, rho)?;
        Ok(match self.cfg.evaluator {
            UsageEvaluator::FirstFit => memplan::solve_first_fit(&ranges).peak_bytes,
            UsageEvaluator::Exact { coarsen, node_limit } => {
                memplan::solve_exact(&ranges, coarsen, &mut NodeLimit::new(node_limit))?.peak_bytes
            }
        })
    }

    /// Stage I. Posit: per bitwidth, the es whose homogeneous run is most
    /// accurate. Fixed-point and zero-skew take their per-tensor ranges from
    /// the float profile gathered by [`Explorer::new`].
    pub fn preprocess(&mut self) -> Result<&RepParams, ExploreError> {
        if self.cfg.representation == Representation::Posit {
            let mut es = BTreeMap::new();
            for (bits, cands) in [(self.cfg.low, self.cfg.es_low.clone()), (self.cfg.high, self.cfg.es_high.clone())] {
                let chosen = self.choose_es(bits, &cands)?;
                es.insert(bits, chosen);
            }
            self.params = RepParams::Posit { es };
        }
        Ok(&self.params)
    }

    fn choose_es(&mut self, bits: u32, cands: &[u32]) -> Result<u32, ExploreError> {
        if cands.len() == 1 {
            return Ok(cands[0]);
        }
        let default = if cands.contains(&DEFAULT_ES) { DEFAULT_ES } else { cands[0] };
        let rho = self.uniform(bits);
        let score = |es: u32, this: &mut Self| -> Result<Accuracy, ExploreError> {
            this.stats.stage1_execution_calls += 1;
            let params = RepParams::Posit { es: [(bits, es)].into_iter().collect() };
            let res = interp::run(this.model, this.dataset, &params, &rho, RunOptions::default())?;
            this.accuracy_of(&res)
        };
        let mut best = (default, score(default, self)?);
        for &es in cands.iter().filter(|&&e| e != default) {
            let acc = score(es, self)?;
            if acc.cmp_quality(&best.1) == Ordering::Greater {
                best = (es, acc);
            }
        }
        Ok(best.0)
    }

    /// Stage II, first half: all-high and all-low runs with value logging.
    /// The all-low assignment enters the ledger.
    pub fn create_value_maps(&mut self) -> Result<ValueMaps, ExploreError> {
        let high_rho = self.uniform(self.cfg.high);
        let low_rho = self.uniform(self.cfg.low);
        self.stats.execution_calls += 2;
        let high = interp::run(self.model, self.dataset, &self.params, &high_rho, self.run_opts(true))?;
        let low = interp::run(self.model, self.dataset, &self.params, &low_rho, self.run_opts(true))?;
        let low_accuracy = self.accuracy_of(&low)?;
        let usage = self.planned_usage(&low_rho)?;
        self.save(low_rho, usage, low_accuracy, Stage::AllLow);
        Ok(ValueMaps { low: low.value_map.unwrap_or_default(), high: high.value_map.unwrap_or_default(), low_accuracy })
    }

    /// Stage II, second half.
    pub fn heat_map(&self, maps: &ValueMaps) -> Result<HeatMap, ExploreError> {
        let tensors: Vec<(&str, usize)> =
            self.model.quantized_tensors().map(|(_, t)| (t.name.as_str(), t.cardinality())).collect();
        Ok(create_heat_map(&maps.low, &maps.high, &tensors)?)
    }

    fn save(&mut self, rho: BitwidthAssignment, planned_ram_bytes: u64, accuracy: Accuracy, stage: Stage) {
        let high_bytes = rho.bytes_at(self.model, self.cfg.high);
        self.ledger.push(LedgerEntry { rho, planned_ram_bytes, accuracy, stage, high_bytes });
    }

    /// Walks `order`, promoting each tensor and reverting it when planned
    /// usage exceeds the soft-scaled limit. A tensor is overshooting when its
    /// promotion moved planned usage to or past that limit. Returns the
    /// overshooting tensors in visit order and the final planned usage.
    pub fn promote_within_memory_limit(
        &mut self,
        rho: &mut BitwidthAssignment,
        order: &[String],
        mut usage: Option<u64>,
    ) -> Result<(Vec<String>, u64), ExploreError> {
        let limit = self.cfg.memory_limit as f64 * self.cfg.soft_limit;
        let mut overshooting = Vec::new();
        for name in order {
            let before = rho.get(name);
            rho.set(name, self.cfg.high);
            let now = self.planned_usage(rho)?;
            let moved = usage != Some(now);
            if now as f64 > limit {
                rho.set(name, self.cfg.low);
                if before != Some(self.cfg.low) {
                    usage = None;
                }
            } else {
                usage = Some(now);
            }
            if moved && now as f64 >= limit {
                overshooting.push(name.clone());
            }
        }
        let usage = match usage {
            Some(u) => u,
            None => self.planned_usage(rho)?,
        };
        Ok((overshooting, usage))
    }

    /// Stage III. Returns the best assignment in the ledger.
    pub fn promotion_algorithm(&mut self, order: &[String]) -> Result<BitwidthAssignment, ExploreError> {
        let low_rho = self.uniform(self.cfg.low);
        let low_usage = self.planned_usage(&low_rho)?;

        let mut rho = low_rho.clone();
        let (overshooting, usage) = self.promote_within_memory_limit(&mut rho, order, Some(low_usage))?;
        self.overshooting = overshooting.clone();
        self.try_save(rho, usage, Stage::Cumulative)?;

        for v in &overshooting {
            let mut rho = low_rho.clone();
            rho.set(v, self.cfg.high);
            let start = self.planned_usage(&rho)?;
            if !self.cfg.within_budget(start) {
                continue;
            }
            let (_, usage) = self.promote_within_memory_limit(&mut rho, order, Some(start))?;
            self.try_save(rho, usage, Stage::PerOvershoot)?;
        }

        if !overshooting.is_empty() {
            let mut rho = low_rho.clone();
            for v in &overshooting {
                rho.set(v, self.cfg.high);
            }
            let (_, usage) = self.promote_within_memory_limit(&mut rho, order, None)?;
            self.try_save(rho, usage, Stage::AllOvershoot)?;
        }

        let best = best_entry(&self.ledger).expect("ledger holds the all-low entry");
        Ok(self.ledger[best].rho.clone())
    }

    /// Executes and records `rho` when it fits the budget.
    fn try_save(&mut self, rho: BitwidthAssignment, usage: u64, stage: Stage) -> Result<(), ExploreError> {
        if !self.cfg.within_budget(usage) {
            return Ok(());
        }
        let acc = self.evaluate(&rho)?;
        self.save(rho, usage, acc, stage);
        Ok(())
    }

    /// Preprocessing, value maps, heat map and promotion in sequence.
    pub fn explore(mut self) -> Result<Exploration, ExploreError> {
        self.preprocess()?;
        let maps = self.create_value_maps()?;
        let heat_map = self.heat_map(&maps)?;
        let all_low_usage = self.ledger[0].planned_ram_bytes;
        let feasible = self.cfg.within_budget(all_low_usage);
        if feasible {
            self.promotion_algorithm(&heat_map.order)?;
        }
        let best = best_entry(&self.ledger).expect("ledger holds the all-low entry");
        Ok(Exploration {
            rho: self.ledger[best].rho.clone(),
            accuracy: self.ledger[best].accuracy,
            params: self.params,
            heat_map,
            overshooting: self.overshooting,
            ledger: self.ledger,
            stats: self.stats,
            all_low_usage,
            feasible,
        })
    }

    /// Picks the pair of bitwidths from `options` whose homogeneous
    /// accuracies bracket the float accuracy. One run per option.
    pub fn select_bitwidth_pair(&mut self, options: &[u32]) -> Result<(u32, u32), ExploreError> {
        if options.len() < 2 {
            return Err(ExploreError::Config("bitwidth pair selection needs two options"));
        }
        let target = self.reference_accuracy()?;
        let mut scored = Vec::with_capacity(options.len());
        for &bits in options {
            self.stats.pair_selection_execution_calls += 1;
            let params = self.params_at(bits);
            let res = interp::run(self.model, self.dataset, &params, &self.uniform(bits), self.run_opts(false))?;
            scored.push((bits, self.accuracy_of(&res)?));
        }
        Ok(select_pair(scored, &target))
    }

    /// Parameters valid at `bits`; posit widths without a chosen es use the
    /// default.
    fn params_at(&self, bits: u32) -> RepParams {
        match &self.params {
            RepParams::Posit { es } => {
                let mut es = es.clone();
                es.entry(bits).or_insert(DEFAULT_ES);
                RepParams::Posit { es }
            }
            p => p.clone(),
        }
    }
}

/// Sorts by accuracy (ties by bitwidth) and returns the first option at or
/// above `target` with its predecessor, as `(low, high)`.
pub fn select_pair(mut scored: Vec<(u32, Accuracy)>, target: &Accuracy) -> (u32, u32) {
    scored.sort_by(|a, b| a.1.cmp_quality(&b.1).then(a.0.cmp(&b.0)));
    let n = scored.len();
    let j = scored.iter().position(|(_, a)| a.cmp_quality(target) != Ordering::Less);
    let (a, b) = match j {
        Some(0) => {
            let mut bits: Vec<u32> = scored.iter().map(|s| s.0).collect();
            bits.sort_unstable();
            (bits[0], bits[1])
        }
        Some(j) => (scored[j - 1].0, scored[j].0),
        None => (scored[n - 2].0, scored[n - 1].0),
    };
    (a.min(b), a.max(b))
}

fn initial_params(cfg: &ExploreConfig, profile: &ValueMap, model: &Model) -> RepParams {
    let ranges = || -> BTreeMap<String, ValueRange> {
        model
            .quantized_tensors()
            .map(|(_, t)| {
                let mut r = ValueRange::EMPTY;
                for &v in profile.get(&t.name).unwrap_or(&[]) {
                    r.include(v);
                }
                (t.name.clone(), r)
            })
            .collect()
    };
    match cfg.representation {
        Representation::Float => RepParams::Float,
        Representation::Posit => {
            let pick = |c: &[u32]| if c.contains(&DEFAULT_ES) || c.is_empty() { DEFAULT_ES } else { c[0] };
            RepParams::Posit {
                es: [(cfg.low, pick(&cfg.es_low)), (cfg.high, pick(&cfg.es_high))].into_iter().collect(),
            }
        }
        Representation::Fixed => RepParams::Fixed { ranges: ranges() },
        Representation::ZeroSkew => RepParams::ZeroSkew { ranges: ranges() },
        Representation::TruncFloat => RepParams::TruncFloat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::interp::MetricKind;
    use alloc::vec;

    fn demo_cfg(limit: u64) -> ExploreConfig {
        let mut cfg = ExploreConfig::new(Representation::Posit, 8, 16, limit);
        cfg.es_low = vec![2];
        cfg.es_high = vec![2];
        cfg
    }

    #[test]
    fn heat_map_of_demo() {
        let m = demo::model();
        let data = Dataset::single_empty();
        let mut ex = Explorer::new(&m, &data, demo_cfg(3)).unwrap();
        ex.preprocess().unwrap();
        let maps = ex.create_value_maps().unwrap();
        assert_eq!(maps.high.get("t2"), Some(&[-6.548828125][..]));
        assert_eq!(maps.low.get("t2"), Some(&[-7.0][..]));
        let hm = ex.heat_map(&maps).unwrap();
        let expect = [("W1", 0.00513), ("B1", 0.00543), ("X1", 0.02198), ("t1", 0.30469), ("t2", 0.45117)];
        for (name, score) in expect {
            let got = hm.score(name).unwrap();
            assert!((got - score).abs() <= 1e-5, "{name}: {got}");
        }
        assert_eq!(hm.order, ["t2", "t1", "X1", "B1", "W1"]);
    }

    #[test]
    fn cumulative_walk_of_demo() {
        let m = demo::model();
        let data = Dataset::single_empty();
        let mut ex = Explorer::new(&m, &data, demo_cfg(3)).unwrap();
        let order: Vec<String> = ["t2", "t1", "X1", "B1", "W1"].into_iter().map(String::from).collect();
        let mut rho = BitwidthAssignment::uniform(&m, 8);
        let (over, usage) = ex.promote_within_memory_limit(&mut rho, &order, Some(2)).unwrap();
        assert_eq!(over, ["t2", "t1"]);
        assert_eq!(usage, 3);
        assert_eq!(rho.names_at(16).collect::<Vec<_>>(), ["B1", "W1", "X1", "t2"]);

        let mut rho = BitwidthAssignment::uniform(&m, 8);
        let mut unbounded = Explorer::new(&m, &data, demo_cfg(u64::MAX)).unwrap();
        let (over, _) = unbounded.promote_within_memory_limit(&mut rho, &order, Some(2)).unwrap();
        assert!(over.is_empty());
        assert_eq!(rho, BitwidthAssignment::uniform(&m, 16));

        let mut rho = BitwidthAssignment::uniform(&m, 8);
        let mut none = Explorer::new(&m, &data, demo_cfg(1)).unwrap();
        let (over, _) = none.promote_within_memory_limit(&mut rho, &order, Some(2)).unwrap();
        assert_eq!(over, ["t2", "t1"]);
        assert_eq!(rho.names_at(16).count(), 0);
    }

    #[test]
    fn demo_exploration() {
        let m = demo::model();
        let data = Dataset::single_empty();
        let res = Explorer::new(&m, &data, demo_cfg(3)).unwrap().explore().unwrap();
        assert_eq!(res.rho.get("t2"), Some(8));
        assert_eq!(res.rho.names_at(16).collect::<Vec<_>>(), ["B1", "W1", "X1", "t1"]);
        assert!(res.feasible);
        let errors: Vec<f64> = res.ledger.iter().map(|e| e.accuracy.error().unwrap()).collect();
        for want in [0.45047, 0.19601, 0.04953] {
            assert!(errors.iter().any(|e| (e - want).abs() < 1e-4), "{want} not in {errors:?}");
        }
        assert_eq!(res.overshooting, ["t2", "t1"]);
        assert_eq!(res.stats.execution_calls, 6);
        assert!(res.ledger.iter().all(|e| e.planned_ram_bytes <= 3));
        assert_eq!(res.ledger[best_entry(&res.ledger).unwrap()].rho, res.rho);

        let all = Explorer::new(&m, &data, demo_cfg(4)).unwrap().explore().unwrap();
        assert_eq!(all.rho, BitwidthAssignment::uniform(&m, 16));

        let tight = Explorer::new(&m, &data, demo_cfg(0)).unwrap().explore().unwrap();
        assert!(!tight.feasible);
        assert_eq!(tight.rho, BitwidthAssignment::uniform(&m, 8));
    }

    #[test]
    fn es_selection_runs_each_candidate() {
        let m = demo::model();
        let data = Dataset::single_empty();
        let mut ex = Explorer::new(&m, &data, ExploreConfig::new(Representation::Posit, 8, 16, 3)).unwrap();
        let RepParams::Posit { es } = ex.preprocess().unwrap().clone() else { panic!() };
        assert_eq!(ex.stats().stage1_execution_calls, 4);
        assert!(es.contains_key(&8) && es.contains_key(&16));

        let mut single = Explorer::new(&m, &data, demo_cfg(3)).unwrap();
        single.preprocess().unwrap();
        assert_eq!(single.stats().stage1_execution_calls, 0);
    }

    fn acc(score: f64) -> Accuracy {
        Accuracy { kind: MetricKind::Classification, score, invalid: 0 }
    }

    #[test]
    fn pair_selection_rule() {
        let s = vec![(8, acc(0.60)), (12, acc(0.88)), (16, acc(0.91))];
        assert_eq!(select_pair(s, &acc(0.90)), (12, 16));
        let same: Vec<_> = [8, 9, 10, 12, 16].into_iter().map(|b| (b, acc(0.9))).collect();
        assert_eq!(select_pair(same, &acc(0.9)), (8, 9));
        let above = vec![(16, acc(0.95)), (10, acc(0.93)), (12, acc(0.99))];
        assert_eq!(select_pair(above, &acc(0.9)), (10, 12));
        let below = vec![(8, acc(0.1)), (12, acc(0.3)), (16, acc(0.2))];
        assert_eq!(select_pair(below, &acc(0.9)), (12, 16));
    }

    #[test]
    fn ledger_tie_break() {
        let rho = BitwidthAssignment::new();
        let e = |score, high_bytes| LedgerEntry {
            rho: rho.clone(),
            planned_ram_bytes: 0,
            accuracy: acc(score),
            stage: Stage::Cumulative,
            high_bytes,
        };
        assert_eq!(best_entry(&[e(0.5, 3), e(0.7, 9), e(0.7, 4), e(0.7, 4)]), Some(2));
        assert_eq!(best_entry(&[]), None);
    }

    #[test]
    fn rejects_bad_config() {
        let m = demo::model();
        let data = Dataset::single_empty();
        let mut cfg = demo_cfg(3);
        cfg.soft_limit = 0.0;
        assert!(Explorer::new(&m, &data, cfg).is_err());
        assert!(Explorer::new(&m, &data, ExploreConfig::new(Representation::Posit, 16, 8, 3)).is_err());
    }
}

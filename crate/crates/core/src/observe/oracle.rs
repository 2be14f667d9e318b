use super::split::{reveal_slots, solve_split_rate};
use super::{sample_submatrix, IndexSubsets, ObservationSet};
use crate::error::{McError, Result};
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::BTreeMap;

/// A request whose rate exceeded what the source can grant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClampRecord {
    pub site: String,
    pub count: usize,
    pub max_requested: f64,
    pub granted: f64,
}

/// Call accounting shared by every observation source.
#[derive(Clone, Debug)]
pub struct OracleLedger {
    shape: (usize, usize),
    calls: usize,
    revealed: Vec<bool>,
    unique: usize,
    clamps: BTreeMap<String, ClampRecord>,
}

impl OracleLedger {
    pub fn new(shape: (usize, usize)) -> Self {
        OracleLedger { shape, calls: 0, revealed: vec![false; shape.0 * shape.1], unique: 0, clamps: BTreeMap::new() }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    /// Distinct entries revealed over all calls.
    pub fn samples_used(&self) -> usize {
        self.unique
    }

    pub fn clamps(&self) -> Vec<ClampRecord> {
        self.clamps.values().cloned().collect()
    }

    fn record<T: Real>(&mut self, obs: &ObservationSet<T>) {
        self.calls += 1;
        for &(i, j, _) in obs.triples() {
            let slot = &mut self.revealed[i * self.shape.1 + j];
            if !*slot {
                *slot = true;
                self.unique += 1;
            }
        }
    }

    /// Caps `p` at `cap`, logging the event under `site`.
    fn grant(&mut self, p: f64, cap: f64, site: &str) -> f64 {
        if p <= cap {
            return p.max(0.0);
        }
        let rec = self.clamps.entry(site.to_string()).or_insert(ClampRecord {
            site: site.to_string(),
            count: 0,
            max_requested: p,
            granted: cap,
        });
        rec.count += 1;
        rec.max_requested = rec.max_requested.max(p);
        rec.granted = rec.granted.min(cap);
        cap
    }
}

/// Source of observations `O_p(M̂_{S,T})` of a hidden matrix `M̂`.
///
/// Requested rates above what the source can grant are capped and logged in
/// the ledger; the returned set carries the granted rate.
pub trait Oracle<T: Real> {
    fn shape(&self) -> (usize, usize);
    fn observe(&mut self, p: f64, within: &IndexSubsets, site: &'static str) -> Result<ObservationSet<T>>;
    fn ledger(&self) -> &OracleLedger;
    /// Splits off a source that is independent of this one, for validation.
    fn holdout(&mut self, fraction: f64, stream: &Stream) -> Result<Box<dyn Oracle<T> + Send>>;
}

impl<T: Real, O: Oracle<T> + ?Sized> Oracle<T> for &mut O {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn observe(&mut self, p: f64, within: &IndexSubsets, site: &'static str) -> Result<ObservationSet<T>> {
        (**self).observe(p, within, site)
    }
    fn ledger(&self) -> &OracleLedger {
        (**self).ledger()
    }
    fn holdout(&mut self, fraction: f64, stream: &Stream) -> Result<Box<dyn Oracle<T> + Send>> {
        (**self).holdout(fraction, stream)
    }
}

impl<T: Real> Oracle<T> for Box<dyn Oracle<T> + Send> {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn observe(&mut self, p: f64, within: &IndexSubsets, site: &'static str) -> Result<ObservationSet<T>> {
        (**self).observe(p, within, site)
    }
    fn ledger(&self) -> &OracleLedger {
        (**self).ledger()
    }
    fn holdout(&mut self, fraction: f64, stream: &Stream) -> Result<Box<dyn Oracle<T> + Send>> {
        (**self).holdout(fraction, stream)
    }
}

/// Fresh independent samples of a fully known `M̂` on every call.
#[derive(Clone, Debug)]
pub struct FullOracle<T: Real> {
    matrix: DMatrix<T>,
    stream: Stream,
    ledger: OracleLedger,
}

impl<T: Real> FullOracle<T> {
    pub fn new(matrix: DMatrix<T>, stream: Stream) -> Self {
        let shape = matrix.shape();
        FullOracle { matrix, stream, ledger: OracleLedger::new(shape) }
    }
}

impl<T: Real> Oracle<T> for FullOracle<T> {
    fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }
    fn observe(&mut self, p: f64, within: &IndexSubsets, site: &'static str) -> Result<ObservationSet<T>> {
        let p = self.ledger.grant(p, 1.0, site);
        let call = self.stream.split(self.ledger.calls() as u64);
        let obs = sample_submatrix(&self.matrix, within, p, &call);
        self.ledger.record(&obs);
        Ok(obs)
    }
    fn ledger(&self) -> &OracleLedger {
        &self.ledger
    }
    fn holdout(&mut self, _fraction: f64, stream: &Stream) -> Result<Box<dyn Oracle<T> + Send>> {
        Ok(Box::new(FullOracle::new(self.matrix.clone(), *stream)))
    }
}

/// Serves every request from one fixed draw `Ω ~ O_P(M̂)`, thinned to the
/// requested rate. Requests above `P` get all of `Ω` and are logged.
///
/// Reusing `Ω` across calls voids the independence the analysis relies on;
/// in exchange the total number of distinct entries touched is at most `|Ω|`.
#[derive(Clone, Debug)]
pub struct ReuseOracle<T: Real> {
    pool: ObservationSet<T>,
    stream: Stream,
    ledger: OracleLedger,
}

impl<T: Real> ReuseOracle<T> {
    pub fn new(pool: ObservationSet<T>, stream: Stream) -> Self {
        let shape = pool.shape();
        ReuseOracle { pool, stream, ledger: OracleLedger::new(shape) }
    }

    pub fn pool(&self) -> &ObservationSet<T> {
        &self.pool
    }
}

impl<T: Real> Oracle<T> for ReuseOracle<T> {
    fn shape(&self) -> (usize, usize) {
        self.pool.shape()
    }
    fn observe(&mut self, p: f64, within: &IndexSubsets, site: &'static str) -> Result<ObservationSet<T>> {
        let rate = self.pool.p();
        let p = self.ledger.grant(p, rate, site);
        let thin = if rate > 0.0 { p / rate } else { 0.0 };
        let call = self.stream.split(self.ledger.calls() as u64);
        let (rm, cm) = within.masks();
        let triples = self
            .pool
            .triples()
            .iter()
            .copied()
            .filter(|&(i, j, _)| rm[i] && cm[j] && thin > 0.0 && call.coin_at(i, j, thin))
            .collect();
        let obs = ObservationSet::from_sorted(self.pool.shape(), p, triples);
        self.ledger.record(&obs);
        Ok(obs)
    }
    fn ledger(&self) -> &OracleLedger {
        &self.ledger
    }
    /// Moves a random `fraction` of `Ω` into a separate, disjoint pool.
    fn holdout(&mut self, fraction: f64, stream: &Stream) -> Result<Box<dyn Oracle<T> + Send>> {
        if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
            return Err(McError::Precondition(format!("holdout fraction {fraction} not in (0, 1)")));
        }
        let (held, kept): (Vec<_>, Vec<_>) =
            self.pool.triples().iter().copied().partition(|&(i, j, _)| stream.coin_at(i, j, fraction));
        let shape = self.pool.shape();
        let rate = self.pool.p();
        self.pool = ObservationSet::from_sorted(shape, rate * (1.0 - fraction), kept);
        let held = ObservationSet::from_sorted(shape, rate * fraction, held);
        Ok(Box::new(ReuseOracle::new(held, stream.named("holdout"))))
    }
}

/// Simulates `K` independent sequential calls from one draw `Ω ~ O_{K·p}(M̂)`.
///
/// The `k`-th call consumes slot `k` of the splitting scheme and may request
/// any rate up to `p = P/K`.
#[derive(Clone, Debug)]
pub struct SplitOracle<T: Real> {
    pool: ObservationSet<T>,
    slots: Vec<Vec<usize>>,
    calls_budget: usize,
    q: f64,
    stream: Stream,
    ledger: OracleLedger,
}

impl<T: Real> SplitOracle<T> {
    pub fn new(pool: ObservationSet<T>, calls_budget: usize, stream: Stream) -> Self {
        let q = solve_split_rate(calls_budget, pool.p());
        let slots = pool
            .triples()
            .iter()
            .map(|&(i, j, _)| reveal_slots(calls_budget, q, &stream.split(i as u64).split(j as u64)))
            .collect();
        let shape = pool.shape();
        SplitOracle { pool, slots, calls_budget, q, stream, ledger: OracleLedger::new(shape) }
    }

    /// Largest rate a single call may request.
    pub fn per_call_rate(&self) -> f64 {
        self.pool.p() / self.calls_budget as f64
    }
}

impl<T: Real> Oracle<T> for SplitOracle<T> {
    fn shape(&self) -> (usize, usize) {
        self.pool.shape()
    }
    fn observe(&mut self, p: f64, within: &IndexSubsets, site: &'static str) -> Result<ObservationSet<T>> {
        let slot = self.ledger.calls();
        if slot >= self.calls_budget {
            return Err(McError::BudgetExhausted(format!("all {} simulated calls used", self.calls_budget)));
        }
        let p = self.ledger.grant(p, self.per_call_rate(), site);
        let thin = self.stream.named("thin").split(slot as u64);
        let (rm, cm) = within.masks();
        let triples = self
            .pool
            .triples()
            .iter()
            .zip(&self.slots)
            .filter(|(&(i, j, _), s)| {
                rm[i] && cm[j] && s.binary_search(&slot).is_ok() && p > 0.0 && thin.coin_at(i, j, p / self.q)
            })
            .map(|(&t, _)| t)
            .collect();
        let obs = ObservationSet::from_sorted(self.pool.shape(), p, triples);
        self.ledger.record(&obs);
        Ok(obs)
    }
    fn ledger(&self) -> &OracleLedger {
        &self.ledger
    }
    fn holdout(&mut self, fraction: f64, stream: &Stream) -> Result<Box<dyn Oracle<T> + Send>> {
        let mut reuse = ReuseOracle::new(self.pool.clone(), *stream);
        let held = reuse.holdout(fraction, stream)?;
        *self = SplitOracle::new(reuse.pool, self.calls_budget, self.stream);
        Ok(held)
    }
}

/// View of an oracle for `M̂ᵀ`.
pub struct Transposed<O>(pub O);

impl<T: Real, O: Oracle<T>> Oracle<T> for Transposed<O> {
    fn shape(&self) -> (usize, usize) {
        let (m, n) = self.0.shape();
        (n, m)
    }
    fn observe(&mut self, p: f64, within: &IndexSubsets, site: &'static str) -> Result<ObservationSet<T>> {
        Ok(self.0.observe(p, &within.transpose(), site)?.transpose())
    }
    fn ledger(&self) -> &OracleLedger {
        self.0.ledger()
    }
    fn holdout(&mut self, fraction: f64, stream: &Stream) -> Result<Box<dyn Oracle<T> + Send>> {
        Ok(Box::new(Transposed(self.0.holdout(fraction, stream)?)))
    }
}

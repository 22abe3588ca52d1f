//! Retrieval and preference-prediction metrics.
//!
//! * [`precision_recall`]: mean precision `P_T` and mean recall `R_T` over
//!   `T` queries, and their ratio `Relevance = P_T / R_T`.
//! * [`average_difference`]: mean absolute gap `D` between real and
//!   predicted preference over the looks shown to one user.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub retrieved: u64,
    pub relevant_retrieved: u64,
    pub relevant_in_db: u64,
}

impl QueryResult {
    pub fn validate(&self) -> Result<()> {
        if self.retrieved == 0 {
            return Err(Error::invalid("query result", "nothing retrieved"));
        }
        if self.relevant_in_db == 0 {
            return Err(Error::invalid("query result", "no relevant items in database"));
        }
        if self.relevant_retrieved > self.retrieved || self.relevant_retrieved > self.relevant_in_db {
            return Err(Error::invalid(
                "query result",
                format!(
                    "relevant_retrieved {} exceeds retrieved {} or relevant_in_db {}",
                    self.relevant_retrieved, self.retrieved, self.relevant_in_db
                ),
            ));
        }
        Ok(())
    }

    pub fn precision(&self) -> f64 {
        self.relevant_retrieved as f64 / self.retrieved as f64
    }

    pub fn recall(&self) -> f64 {
        self.relevant_retrieved as f64 / self.relevant_in_db as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub queries: usize,
    pub precision: f64,
    pub recall: f64,
    pub relevance: f64,
}

pub fn precision_recall(results: &[QueryResult]) -> Result<PrecisionRecall> {
    if results.is_empty() {
        return Err(Error::Empty("query results"));
    }
    results.iter().try_for_each(QueryResult::validate)?;
    let t = results.len() as f64;
    let precision = results.iter().map(QueryResult::precision).sum::<f64>() / t;
    let recall = results.iter().map(QueryResult::recall).sum::<f64>() / t;
    if recall == 0.0 {
        return Err(Error::invalid("query results", "mean recall is zero; relevance undefined"));
    }
    Ok(PrecisionRecall {
        queries: results.len(),
        precision,
        recall,
        relevance: precision / recall,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub real: f64,
    pub predicted: f64,
}

impl PreferencePair {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.real) || !(0.0..=1.0).contains(&self.predicted) {
            return Err(Error::invalid(
                "preference pair",
                format!("({}, {}) outside [0, 1]", self.real, self.predicted),
            ));
        }
        Ok(())
    }
}

pub fn average_difference(pairs: &[PreferencePair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("preference pairs"));
    }
    pairs.iter().try_for_each(PreferencePair::validate)?;
    Ok(pairs.iter().map(|p| (p.real - p.predicted).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Fixture file for [`precision_recall`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryFixtures {
    pub queries: Vec<QueryResult>,
}

/// Fixture file for [`average_difference`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFixtures {
    pub pairs: Vec<PreferencePair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    pub looks: usize,
    pub average_difference: f64,
}

impl PrecisionRecall {
    pub fn table(&self, results: &[QueryResult]) -> String {
        let mut out = String::from("query  retrieved  relevant  in_db   precision  recall\n");
        for (k, q) in results.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>5}  {:>9}  {:>8}  {:>5}   {:>9.4}  {:>6.4}",
                k + 1,
                q.retrieved,
                q.relevant_retrieved,
                q.relevant_in_db,
                q.precision(),
                q.recall()
            );
        }
        let _ = writeln!(out, "P_T = {:.6}  R_T = {:.6}  Relevance = {:.6}", self.precision, self.recall, self.relevance);
        out
    }
}

impl DifferenceReport {
    pub fn compute(pairs: &[PreferencePair]) -> Result<Self> {
        Ok(Self {
            looks: pairs.len(),
            average_difference: average_difference(pairs)?,
        })
    }

    pub fn table(&self, pairs: &[PreferencePair]) -> String {
        let mut out = String::from(" look    real  predicted  |diff|\n");
        for (k, p) in pairs.iter().enumerate() {
            let _ = writeln!(out, "{:>5}  {:>6.3}  {:>9.3}  {:>6.3}", k + 1, p.real, p.predicted, (p.real - p.predicted).abs());
        }
        let _ = writeln!(out, "D = {:.6}", self.average_difference);
        out
    }
}

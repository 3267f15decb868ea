use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{multilinear_rank, RankTuple, Tensor4};

use super::perturbation::{check_pairs, map_star, mean_absolute_perturbation, Pair};
use super::ssim::{mssim, ssim_star};

/// What the run-level metrics need from one attack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub success: bool,
    pub queries: u64,
}

impl<S> From<&crate::attack::AttackResult<S>> for Outcome {
    fn from(r: &crate::attack::AttackResult<S>) -> Self {
        Outcome { success: r.success, queries: r.queries_used }
    }
}

/// Percentage of successful attacks.
pub fn fooling_rate(outcomes: &[Outcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return invalid("no attack results");
    }
    let hits = outcomes.iter().filter(|o| o.success).count();
    Ok(100.0 * hits as f64 / outcomes.len() as f64)
}

/// Mean queries over successful attacks; `None` when nothing succeeded.
pub fn mean_queries(outcomes: &[Outcome]) -> Result<Option<f64>> {
    if outcomes.is_empty() {
        return invalid("no attack results");
    }
    let q: Vec<u64> = outcomes.iter().filter(|o| o.success).map(|o| o.queries).collect();
    if q.is_empty() {
        return Ok(None);
    }
    Ok(Some(q.iter().map(|&v| v as f64).sum::<f64>() / q.len() as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRankReport {
    pub per_sample: Vec<RankTuple>,
    /// Distinct tuples with their counts, most frequent first (ties by tuple).
    pub histogram: Vec<(RankTuple, usize)>,
    pub modal: Option<RankTuple>,
}

/// Multilinear rank of every perturbation `X_adv − X` and the most frequent tuple.
pub fn error_rank_report<S: Scalar>(pairs: &[Pair<'_, S>], tol: f64) -> Result<ErrorRankReport> {
    for (i, (c, a)) in pairs.iter().enumerate() {
        if c.dims() != a.dims() {
            return invalid(format!("sample {i}: dims differ"));
        }
    }
    let per_sample =
        pairs.iter().map(|(c, a)| multilinear_rank(&a.add_scaled(-S::one(), c)?, tol)).collect::<Result<Vec<_>>>()?;
    let mut counts: BTreeMap<RankTuple, usize> = BTreeMap::new();
    for r in &per_sample {
        *counts.entry(*r).or_default() += 1;
    }
    let mut histogram: Vec<(RankTuple, usize)> = counts.into_iter().collect();
    histogram.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let modal = histogram.first().map(|h| h.0);
    Ok(ErrorRankReport { per_sample, histogram, modal })
}

/// One sample's inputs to [`MetricsReport::compute`].
#[derive(Clone, Copy, Debug)]
pub struct SampleInput<'a, S> {
    pub id: usize,
    pub clean: &'a Tensor4<S>,
    pub adversarial: &'a Tensor4<S>,
    pub outcome: Outcome,
}

/// Metrics of a single sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub sample: usize,
    pub success: bool,
    pub queries: u64,
    pub map: f64,
    pub map_star: Option<f64>,
    /// Mean SSIM over the sample's frames.
    pub ssim: f64,
    pub ssim_star: Option<f64>,
    pub rank: RankTuple,
}

/// Run-level report for one attack method.
///
/// Perturbation metrics (MAP, MAP*, MSSIM, SSIM*, error rank) are taken over
/// successful samples only, like MQ; they are `None` when nothing succeeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub attack: String,
    pub n: usize,
    pub successes: usize,
    pub mq: Option<f64>,
    pub map: Option<f64>,
    pub map_star: Option<f64>,
    pub map_star_empty: bool,
    pub mssim: Option<f64>,
    pub ssim_star: Option<f64>,
    pub ssim_star_empty: bool,
    pub fr: f64,
    pub error_rank: ErrorRankReport,
    pub active_eps: f64,
    pub rank_tol: f64,
    pub dynamic_range: f64,
    pub samples: Vec<SampleMetrics>,
}

pub const CSV_HEADER: [&str; 9] = ["sample", "success", "MQ", "MAP", "MAP*", "SSIM", "SSIM*", "FR", "rank"];

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

impl MetricsReport {
    pub fn compute<S: Scalar>(
        attack: &str,
        samples: &[SampleInput<'_, S>],
        active_eps: f64,
        rank_tol: f64,
        dynamic_range: f64,
    ) -> Result<Self> {
        let all: Vec<Pair<'_, S>> = samples.iter().map(|s| (s.clean, s.adversarial)).collect();
        check_pairs(&all)?;
        let outcomes: Vec<Outcome> = samples.iter().map(|s| s.outcome).collect();
        let per_sample = samples
            .iter()
            .map(|s| {
                let (c, a, o) = (s.clean, s.adversarial, s.outcome);
                let pair = [(c, a)];
                let star = map_star(&pair, active_eps)?;
                let sstar = ssim_star(&pair, active_eps, dynamic_range)?;
                Ok(SampleMetrics {
                    sample: s.id,
                    success: o.success,
                    queries: o.queries,
                    map: mean_absolute_perturbation(&pair)?,
                    map_star: (!star.empty).then_some(star.value),
                    ssim: mssim(&pair, dynamic_range)?,
                    ssim_star: (!sstar.empty).then_some(sstar.value),
                    rank: multilinear_rank(&a.add_scaled(-S::one(), c)?, rank_tol)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let hits: Vec<Pair<'_, S>> =
            samples.iter().filter(|s| s.outcome.success).map(|s| (s.clean, s.adversarial)).collect();
        let (map, star, ms, sstar, error_rank) = if hits.is_empty() {
            (None, None, None, None, ErrorRankReport { per_sample: vec![], histogram: vec![], modal: None })
        } else {
            (
                Some(mean_absolute_perturbation(&hits)?),
                Some(map_star(&hits, active_eps)?),
                Some(mssim(&hits, dynamic_range)?),
                Some(ssim_star(&hits, active_eps, dynamic_range)?),
                error_rank_report(&hits, rank_tol)?,
            )
        };
        Ok(MetricsReport {
            attack: attack.to_string(),
            n: samples.len(),
            successes: hits.len(),
            mq: mean_queries(&outcomes)?,
            map,
            map_star: star.map(|s| s.value),
            map_star_empty: star.is_some_and(|s| s.empty),
            mssim: ms,
            ssim_star: sstar.map(|s| s.value),
            ssim_star_empty: sstar.is_some_and(|s| s.empty),
            fr: fooling_rate(&outcomes)?,
            error_rank,
            active_eps,
            rank_tol,
            dynamic_range,
            samples: per_sample,
        })
    }

    /// One row per sample plus a `summary` row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for s in &self.samples {
            w.write_record([
                s.sample.to_string(),
                s.success.to_string(),
                s.queries.to_string(),
                s.map.to_string(),
                opt(s.map_star),
                s.ssim.to_string(),
                opt(s.ssim_star),
                if s.success { "100" } else { "0" }.to_string(),
                s.rank.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.write_record([
            "summary".to_string(),
            self.successes.to_string(),
            opt(self.mq),
            opt(self.map),
            opt(self.map_star),
            opt(self.mssim),
            opt(self.ssim_star),
            self.fr.to_string(),
            self.error_rank.modal.map_or(String::new(), |r| r.to_string()),
        ])
        .map_err(csv_err)?;
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(success: bool, queries: u64) -> Outcome {
        Outcome { success, queries }
    }

    #[test]
    fn rates_and_queries() {
        assert_eq!(fooling_rate(&[o(true, 1); 4]).unwrap(), 100.0);
        assert_eq!(fooling_rate(&[o(true, 1), o(false, 1), o(true, 1), o(true, 1)]).unwrap(), 75.0);
        assert_eq!(mean_queries(&[o(true, 243)]).unwrap(), Some(243.0));
        assert_eq!(mean_queries(&[o(true, 10), o(false, 99), o(true, 30)]).unwrap(), Some(20.0));
        assert_eq!(mean_queries(&[o(false, 5)]).unwrap(), None);
        assert!(fooling_rate(&[]).is_err());
        assert!(mean_queries(&[]).is_err());
    }

    #[test]
    fn zero_perturbation_rank() {
        let x = Tensor4::<f64>::ones([2, 3, 2, 2]).unwrap();
        let r = error_rank_report(&[(&x, &x)], 1e-8).unwrap();
        assert_eq!(r.modal, Some(RankTuple([0, 0, 0, 0])));
    }

    #[test]
    fn report_and_csv() {
        let x = Tensor4::<f64>::zeros([4, 4, 1, 3]).unwrap();
        let y = x.map(|v| v + 2.0);
        let samples = [
            SampleInput { id: 0, clean: &x, adversarial: &y, outcome: o(true, 40) },
            SampleInput { id: 1, clean: &x, adversarial: &x, outcome: o(false, 100) },
        ];
        let r = MetricsReport::compute("tenad", &samples, 1e-8, 1e-8, 255.0).unwrap();
        assert_eq!(r.mq, Some(40.0));
        assert_eq!(r.fr, 50.0);
        assert_eq!(r.map, Some(2.0));
        assert_eq!(r.error_rank.modal, Some(RankTuple([1, 1, 1, 1])));
        assert_eq!(r.samples[1].map_star, None);
        let csv = r.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "sample,success,MQ,MAP,MAP*,SSIM,SSIM*,FR,rank");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("summary,1,40,2,2,"));
    }
}

//! Comparison statistics and table rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::classify::EvalResult;
use crate::coherence::{enhancement, SweepResult};
use crate::error::{ensure, Error, Result};
use crate::topics::ModelKind;

/// Pearson correlation between 0/1 labels and real scores.
pub fn point_biserial(stance: &[u8], sentiment: &[f64]) -> Result<f64> {
    ensure!(
        stance.len() == sentiment.len(),
        DimensionMismatch,
        "{} labels vs {} scores",
        stance.len(),
        sentiment.len()
    );
    ensure!(stance.len() >= 2, InvalidInput, "correlation needs at least 2 observations");
    let n = stance.len() as f64;
    let x: Vec<f64> = stance.iter().map(|&s| s as f64).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = sentiment.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(sentiment) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    ensure!(sxx > 0.0, InvalidInput, "correlation undefined: stance is constant");
    ensure!(syy > 0.0, InvalidInput, "correlation undefined: sentiment is constant");
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `(metric − baseline) / baseline · 100`.
pub fn improvement(metric_f1: f64, sentiment_f1: f64) -> Result<f64> {
    ensure!(sentiment_f1 > 0.0, InvalidInput, "improvement needs a positive baseline (got {sentiment_f1})");
    Ok((metric_f1 - sentiment_f1) / sentiment_f1 * 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub dataset: String,
    pub topic: (f64, f64),
    pub sentiment: (f64, f64),
    pub combined: (f64, f64),
    pub corr_stance_sentiment: Option<f64>,
    /// (topic over sentiment, combined over sentiment) in percent; `None`
    /// when the sentiment F1 is zero.
    pub improvements: Option<(f64, f64)>,
    pub coherence_best: Option<f64>,
}

impl ComparisonRow {
    pub fn new(
        dataset: impl Into<String>,
        topic: &EvalResult,
        sentiment: &EvalResult,
        combined: &EvalResult,
        corr_stance_sentiment: Option<f64>,
        coherence_best: Option<f64>,
    ) -> Self {
        let improvements = improvement(topic.mean, sentiment.mean)
            .and_then(|t| Ok((t, improvement(combined.mean, sentiment.mean)?)))
            .ok();
        Self {
            dataset: dataset.into(),
            topic: (topic.mean, topic.std),
            sentiment: (sentiment.mean, sentiment.std),
            combined: (combined.mean, combined.std),
            corr_stance_sentiment,
            improvements,
            coherence_best,
        }
    }

    /// Which of (topic, sentiment, combined) hold the row maximum.
    pub fn maxima(&self) -> [bool; 3] {
        let v = [self.topic.0, self.sentiment.0, self.combined.0];
        let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.map(|x| x == best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidInput(format!("unknown report format {other:?}"))),
        }
    }
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.decimals$}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}%"))
}

pub fn render_report(
    rows: &[ComparisonRow],
    sweep: Option<&SweepResult>,
    format: ReportFormat,
) -> Result<String> {
    ensure!(!rows.is_empty(), InvalidInput, "report needs at least one comparison row");
    Ok(match format {
        ReportFormat::Csv => render_csv(rows),
        ReportFormat::Markdown => render_markdown(rows, sweep),
    })
}

fn render_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "dataset,f1_topic,sd_topic,f1_sentiment,sd_sentiment,f1_combined,sd_combined,corr,impr_topic_pct,impr_combined_pct,coherence_best\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{}",
            r.dataset,
            r.topic.0,
            r.topic.1,
            r.sentiment.0,
            r.sentiment.1,
            r.combined.0,
            r.combined.1,
            opt(r.corr_stance_sentiment, 4),
            opt(r.improvements.map(|i| i.0), 2),
            opt(r.improvements.map(|i| i.1), 2),
            opt(r.coherence_best, 4),
        );
    }
    out
}

fn render_markdown(rows: &[ComparisonRow], sweep: Option<&SweepResult>) -> String {
    let mut out = String::new();
    out.push_str("## Stance classification F1\n\n");
    out.push_str(
        "Mean F1 over folds; sample standard deviation (n - 1) in parentheses; row maximum in bold.\n\n",
    );
    out.push_str("| Dataset | Topic | Sentiment | Topic and Sentiment | Corr(Stance, Sentiment) |\n");
    out.push_str("|---|---|---|---|---|\n");
    for r in rows {
        let marks = r.maxima();
        let cell = |(m, s): (f64, f64), bold: bool| {
            if bold {
                format!("**{m:.4}** ({s:.4})")
            } else {
                format!("{m:.4} ({s:.4})")
            }
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            r.dataset,
            cell(r.topic, marks[0]),
            cell(r.sentiment, marks[1]),
            cell(r.combined, marks[2]),
            opt(r.corr_stance_sentiment, 4),
        );
    }
    out.push_str("\n## F1 improvement over sentiment\n\n");
    out.push_str("| Dataset | Topic | Combination | Topic Coherence Score | Corr(Stance, Sentiment) |\n");
    out.push_str("|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            r.dataset,
            pct(r.improvements.map(|i| i.0)),
            pct(r.improvements.map(|i| i.1)),
            opt(r.coherence_best, 4),
            opt(r.corr_stance_sentiment, 4),
        );
    }
    if let Some(sweep) = sweep.filter(|s| !s.rows.is_empty()) {
        let best = sweep.best_by_model();
        out.push_str("\n## Best coherence by model\n\n| Model | K | Coherence |\n|---|---|---|\n");
        for (model, k, score) in &best {
            let _ = writeln!(out, "| {model} | {k} | {score:.4} |");
        }
        let get = |kind: ModelKind| best.iter().find(|b| b.0 == kind).map(|b| b.2);
        if let (Some(c), Some(l), Some(n)) =
            (get(ModelKind::Cluster), get(ModelKind::Lda), get(ModelKind::Nmf))
        {
            let e = enhancement(c, l, n).ok();
            let _ = writeln!(out, "\nCluster-model enhancement over the better baseline: {}", pct(e));
        }
    }
    out
}

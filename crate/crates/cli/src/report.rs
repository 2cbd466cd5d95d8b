//! CSV files and console tables.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;

use satedge::dil::{LossCurve, SchemeMetrics};
use satedge::experiment::{Comparison, SweepKind, SweepPoint};

pub fn write_metrics<W: Write>(out: W, rows: &[SchemeMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "exact_match", "per_bit_acc", "mean_reward", "mean_completion_time_s"])?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.exact_match.to_string(),
            r.per_bit_accuracy.to_string(),
            r.mean_reward.to_string(),
            r.mean_completion_time_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_loss_curve<W: Write>(out: W, curve: &LossCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_loss", "validation_loss"])?;
    for (epoch, (t, v)) in curve.train.iter().zip(&curve.validation).enumerate() {
        w.write_record([epoch.to_string(), t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison<W: Write>(out: W, cmp: &Comparison) -> Result<()> {
    let reductions = cmp.reductions();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scheme",
        "mean_reward",
        "mean_completion_time_s",
        "docs_reward_reduction",
        "docs_completion_time_reduction",
    ])?;
    for r in &cmp.rows {
        let red = reductions.iter().find(|x| x.against == r.scheme);
        w.write_record([
            r.scheme.to_string(),
            r.mean_reward.to_string(),
            r.mean_completion_time_s.to_string(),
            red.map_or(String::new(), |x| x.reward.to_string()),
            red.map_or(String::new(), |x| x.completion_time.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["value", "exact_match", "per_bit_acc", "reward_ratio", "mean_reward", "mean_completion_time_s"])?;
    for p in points {
        let d = &p.report.docs;
        w.write_record([
            p.value.to_string(),
            d.exact_match.to_string(),
            d.per_bit_accuracy.to_string(),
            p.report.reward_ratio.to_string(),
            d.mean_reward.to_string(),
            d.mean_completion_time_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn metrics_table(rows: &[SchemeMetrics]) -> String {
    let mut s = format!("{:<8} {:>11} {:>11} {:>12} {:>12}\n", "scheme", "exact", "per-bit", "reward", "time (s)");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<8} {:>11.4} {:>11.4} {:>12.5} {:>12.5}",
            r.scheme, r.exact_match, r.per_bit_accuracy, r.mean_reward, r.mean_completion_time_s
        );
    }
    s
}

pub fn comparison_table(cmp: &Comparison) -> String {
    let reductions = cmp.reductions();
    let mut s = format!("{:<8} {:>12} {:>12} {:>10} {:>10}\n", "scheme", "reward", "time (s)", "d reward", "d time");
    for r in &cmp.rows {
        let red = reductions.iter().find(|x| x.against == r.scheme);
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let _ = writeln!(
            s,
            "{:<8} {:>12.5} {:>12.5} {:>10} {:>10}",
            r.scheme.to_string(),
            r.mean_reward,
            r.mean_completion_time_s,
            pct(red.map(|x| x.reward)),
            pct(red.map(|x| x.completion_time))
        );
    }
    s
}

pub fn sweep_table(kind: SweepKind, points: &[SweepPoint]) -> String {
    let mut s = format!("{:<14} {:>11} {:>11} {:>12}\n", kind.to_string(), "exact", "per-bit", "reward ratio");
    for p in points {
        let _ = writeln!(
            s,
            "{:<14} {:>11.4} {:>11.4} {:>12.4}",
            p.value, p.report.docs.exact_match, p.report.docs.per_bit_accuracy, p.report.reward_ratio
        );
    }
    s
}

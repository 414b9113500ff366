//! CSV metrics.
//!
//! A `#` header block (format tag, config echo, constants) is followed by
//! one column-header row and then, per sample, one `agg` row, one `concept`
//! row per concept and one `edge` row per action. Columns that do not apply
//! to a record type are left empty.

use std::io::{self, Write};

use crate::infomath::{intrinsic_reward, reward_argmax, Probability};
use crate::learning::Q_MIN;
use crate::network::Depository;
use crate::vm::MAX_VEC_LEN;

use super::config::RunConfig;

pub const METRICS_TAG: &str = "# bspre-metrics v1";

pub const COLUMNS: &[&str] = &[
    "tick",
    "record",
    "id",
    "level",
    "p",
    "reward",
    "effective_reward",
    "avg_steps",
    "in_degree",
    "out_degree",
    "tail",
    "head",
    "q",
    "concepts",
    "actions",
    "executions",
    "explorations",
    "prunes",
    "surviving_dev",
    "pruned_dev",
];

/// Counters accumulated between samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowTotals {
    pub executions: u64,
    pub explorations: u64,
    pub prunes: u64,
    /// `|p - 1/e|` of each concept pruned in the window that had a
    /// probability.
    pub pruned_devs: Vec<f64>,
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// `|p - 1/e|` of every codelet concept with a recorded outcome.
pub fn surviving_devs(dep: &Depository) -> Vec<f64> {
    let target = reward_argmax().value();
    dep.concepts()
        .filter(|c| c.codelet().is_some())
        .filter_map(|c| c.probability())
        .map(|p| (p - target).abs())
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn write_header<W: Write + ?Sized>(out: &mut W, cfg: &RunConfig) -> io::Result<()> {
    writeln!(out, "{METRICS_TAG}")?;
    for line in cfg.echo().lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# const q_min = {Q_MIN}")?;
    writeln!(out, "# const max_vec_len = {MAX_VEC_LEN}")?;
    writeln!(out, "# const reward_argmax = {}", reward_argmax().value())?;
    writeln!(out, "{}", COLUMNS.join(","))
}

pub fn write_sample<W: Write + ?Sized>(
    out: &mut W,
    dep: &Depository,
    totals: &WindowTotals,
) -> io::Result<()> {
    let tick = dep.current_tick();
    let blank = |n: usize| ",".repeat(n);
    writeln!(
        out,
        "{tick},agg,{}{},{},{},{},{},{},{}",
        blank(11),
        dep.concept_count(),
        dep.action_count(),
        totals.executions,
        totals.explorations,
        totals.prunes,
        opt(mean(&surviving_devs(dep))),
        opt(mean(&totals.pruned_devs)),
    )?;
    for c in dep.concepts() {
        let p = c.probability();
        let reward = p.map(|p| intrinsic_reward(Probability::new(p).expect("window probability")));
        let eff = reward.and_then(|r| c.timing.avg_steps().filter(|a| *a > 0.0).map(|a| r / a));
        writeln!(
            out,
            "{tick},concept,{},{},{},{},{},{},{},{}{}",
            c.id,
            c.level,
            opt(p),
            opt(reward),
            opt(eff),
            opt(c.timing.avg_steps()),
            dep.in_degree(c.id),
            dep.out_degree(c.id),
            blank(10),
        )?;
    }
    for a in dep.actions() {
        writeln!(
            out,
            "{tick},edge,{}{},{},{}{}",
            blank(8),
            a.tail,
            a.head,
            a.q,
            blank(7)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_have_every_column() {
        let cfg = RunConfig {
            ticks: 30,
            cadence: 10,
            ..RunConfig::default()
        };
        let out = super::super::run_to_vec(&cfg).unwrap();
        let text = String::from_utf8(out.metrics).unwrap();
        let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        for line in lines {
            assert_eq!(line.split(',').count(), COLUMNS.len(), "{line}");
        }
    }
}

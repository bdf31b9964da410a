//! CSV exports of simulation results and experiment reports, and the
//! readers the report command derives its tables from.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::agents::Strategy;
use crate::error::SimError;
use crate::experiments::{RunRow, SettingSummary, Stat, SweepReport};
use crate::sim::SimulationResult;

#[derive(Serialize)]
struct PopulationRow<'a> {
    id: u32,
    qea: f64,
    pdpa: f64,
    strategy: &'a str,
    initial_expert: bool,
    final_expert: bool,
    final_expertise: f64,
}

/// `id,qea,pdpa,strategy,initial_expert,final_expert,final_expertise`; the
/// scatter data of an initial-versus-final expert plot.
pub fn write_population<W: Write>(r: &SimulationResult, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for p in &r.population {
        w.serialize(PopulationRow {
            id: p.id.0,
            qea: p.qea,
            pdpa: p.pdpa,
            strategy: p.strategy.name(),
            initial_expert: r.is_initial_expert(p.id),
            final_expert: r.is_final_expert(p.id),
            final_expertise: r.final_expertise(p.id),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One row per admitted round, columns as in [`crate::sim::RoundRecord`].
pub fn write_series<W: Write>(r: &SimulationResult, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for rec in &r.series {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Column holding a strategy group's mean final expertise in run rows.
pub fn strategy_column(s: Strategy) -> String {
    format!("expertise_{}", s.name().replace('-', "_"))
}

const RUN_COLUMNS: [&str; 6] =
    ["setting", "repetition", "seed", "initial_score", "ideal_score", "actual_score"];

/// Per-run rows; strategy columns are empty where a strategy had no
/// initial expert.
pub fn write_runs<W: Write>(report: &SweepReport, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = RUN_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(Strategy::ALL.iter().map(|s| strategy_column(*s)));
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![
            r.setting.to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            r.initial_score.to_string(),
            r.ideal_score.to_string(),
            r.actual_score.to_string(),
        ];
        rec.extend(
            Strategy::ALL
                .iter()
                .map(|s| r.strategy_expertise.get(s).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn bad_csv(what: &str, reason: impl std::fmt::Display) -> SimError {
    SimError::Config(format!("{what}: {reason}"))
}

/// Reads rows written by [`write_runs`].
pub fn read_runs<R: Read>(input: R) -> Result<Vec<RunRow>, SimError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| bad_csv("runs.csv", format!("missing column {name}")))
    };
    let fixed: Vec<usize> = RUN_COLUMNS.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let strat: Vec<(Strategy, usize)> = Strategy::ALL
        .iter()
        .map(|s| col(&strategy_column(*s)).map(|i| (*s, i)))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64, SimError> {
            field(i).parse().map_err(|e| bad_csv("runs.csv", format!("row {}: {e}", line + 1)))
        };
        let int = |i: usize| -> Result<u64, SimError> {
            field(i).parse().map_err(|e| bad_csv("runs.csv", format!("row {}: {e}", line + 1)))
        };
        let mut strategy_expertise = BTreeMap::new();
        for &(s, i) in &strat {
            if !field(i).is_empty() {
                strategy_expertise.insert(s, num(i)?);
            }
        }
        rows.push(RunRow {
            setting: num(fixed[0])?,
            repetition: int(fixed[1])? as usize,
            seed: int(fixed[2])?,
            initial_score: num(fixed[3])?,
            ideal_score: num(fixed[4])?,
            actual_score: num(fixed[5])?,
            strategy_expertise,
        });
    }
    Ok(rows)
}

/// Rebuilds per-setting summaries from run rows, settings in first-seen
/// order.
pub fn summarize(rows: &[RunRow]) -> Vec<SettingSummary> {
    let mut order: Vec<f64> = Vec::new();
    for r in rows {
        if !order.iter().any(|x| *x == r.setting) {
            order.push(r.setting);
        }
    }
    order
        .into_iter()
        .map(|x| {
            let mine: Vec<&RunRow> = rows.iter().filter(|r| r.setting == x).collect();
            SettingSummary::from_rows(x, &mine)
        })
        .collect()
}

/// Aggregate in the layout of an initial/ideal/actual score table: one
/// column per setting, one row per set, plus standard deviations and
/// sample counts.
pub fn write_aggregate<W: Write>(settings: &[SettingSummary], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string()];
    header.extend(settings.iter().map(|s| s.setting.to_string()));
    w.write_record(&header)?;
    let rows: [(&str, fn(&SettingSummary) -> f64); 7] = [
        ("initial", |s| s.initial.mean),
        ("ideal", |s| s.ideal.mean),
        ("actual", |s| s.actual.mean),
        ("initial_std", |s| s.initial.std),
        ("ideal_std", |s| s.ideal.std),
        ("actual_std", |s| s.actual.std),
        ("n", |s| s.actual.n as f64),
    ];
    for (name, f) in rows {
        let mut rec = vec![name.to_string()];
        rec.extend(settings.iter().map(|s| f(s).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyBar {
    pub setting: f64,
    pub strategy: Strategy,
    pub mean_expertise: f64,
    pub std: f64,
    pub n: usize,
}

pub fn strategy_bars(settings: &[SettingSummary]) -> Vec<StrategyBar> {
    settings
        .iter()
        .flat_map(|s| {
            s.strategy_expertise.iter().map(|(st, Stat { mean, std, n })| StrategyBar {
                setting: s.setting,
                strategy: *st,
                mean_expertise: *mean,
                std: *std,
                n: *n,
            })
        })
        .collect()
}

/// `setting,strategy,mean_expertise,std,n`: mean final expertise of each
/// strategy group.
pub fn write_strategy_bars<W: Write>(settings: &[SettingSummary], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for b in strategy_bars(settings) {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}

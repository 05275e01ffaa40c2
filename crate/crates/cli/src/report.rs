//! Result tables: one row per run name, columns for the initial cost and
//! each successive run's best cost, rendered to three decimal places.

use std::collections::BTreeMap;

use crate::records::{read_records, RunRecord};
use crate::{resolve_checkpoint_dir, CliError, ReportArgs, ReportFormat};

fn fmt_cost(cost: Option<f64>) -> String {
    match cost {
        Some(v) => format!("{v:.3}"),
        None => "-".into(),
    }
}

struct Row {
    name: String,
    init: Option<f64>,
    runs: Vec<Option<f64>>,
}

fn build_rows(records: &[RunRecord], requested: &[String]) -> Vec<Row> {
    // group by name, keeping first-appearance order for the default listing
    let mut order: Vec<String> = Vec::new();
    let mut by_name: BTreeMap<&str, BTreeMap<u64, &RunRecord>> = BTreeMap::new();
    for record in records {
        if !order.contains(&record.name) {
            order.push(record.name.clone());
        }
        by_name
            .entry(record.name.as_str())
            .or_default()
            .insert(record.run_index, record);
    }

    let names: Vec<String> = if requested.is_empty() {
        order
    } else {
        requested
            .iter()
            .filter(|name| {
                if by_name.contains_key(name.as_str()) {
                    true
                } else {
                    log::warn!("no run records for `{name}`; row omitted");
                    false
                }
            })
            .cloned()
            .collect()
    };

    names
        .into_iter()
        .map(|name| {
            let runs_by_index = &by_name[name.as_str()];
            let init = runs_by_index.values().next().and_then(|r| r.initial_cost);
            let max_index = runs_by_index.keys().max().copied().unwrap_or(0);
            let runs = (1..=max_index)
                .map(|i| runs_by_index.get(&i).and_then(|r| r.best_cost))
                .collect();
            Row { name, init, runs }
        })
        .collect()
}

pub fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let root = resolve_checkpoint_dir(args.checkpoint_dir.clone());
    let records = read_records(&root)?;
    let rows = build_rows(&records, &args.names);
    let run_columns = rows.iter().map(|r| r.runs.len()).max().unwrap_or(0);

    let mut header = vec!["name".to_string(), "init".to_string()];
    header.extend((1..=run_columns).map(|i| format!("run {i}")));

    match args.format {
        ReportFormat::Csv => {
            println!("{}", header.join(",").replace("run ", "run"));
            for row in rows {
                let mut cells = vec![row.name.clone(), fmt_cost(row.init)];
                for i in 0..run_columns {
                    cells.push(fmt_cost(row.runs.get(i).copied().flatten()));
                }
                println!("{}", cells.join(","));
            }
        }
        ReportFormat::Md => {
            println!("| {} |", header.join(" | "));
            println!("|{}|", vec![" --- "; header.len()].join("|"));
            for row in rows {
                let mut cells = vec![row.name.clone(), fmt_cost(row.init)];
                for i in 0..run_columns {
                    cells.push(fmt_cost(row.runs.get(i).copied().flatten()));
                }
                println!("| {} |", cells.join(" | "));
            }
        }
    }
    Ok(())
}

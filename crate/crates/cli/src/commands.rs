use std::fs::File;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use concentric::dependence::reversal_analysis;
use concentric::estimation::{closed_form_latent, em_fit, mle_observed, mom_estimate};
use concentric::model::{
    integer_pattern, integer_vector, joint_vector_direct, marginal_leaves, plan_sample_size,
};
use concentric::sample::sample;
use concentric::simulate::{run_simulation, SimulationConfig};
use concentric::transforms::{
    central_moments, leaf_linear_interactions, leaf_loglinear, linear_interactions,
    loglinear_interactions, raw_moments,
};
use concentric::{CountTable, EmConfig, EmTrace, Estimate, Flag, InteractionVector, ModelSpec};

use crate::args::*;
use crate::error::CliError;
use crate::table_io::{level_header, level_strings, read_counts, render_csv, render_table};

/// Formats a number at 12 significant digits, or at a fixed number of
/// decimals when `round` is given.
pub fn format_number(x: f64, round: Option<usize>) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    match round {
        Some(d) => format!("{x:.d$}"),
        None => {
            let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
            if r == 0.0 {
                "0".into()
            } else {
                r.to_string()
            }
        }
    }
}

pub fn model_spec(m: &ModelArgs) -> Result<ModelSpec, CliError> {
    match (m.rho, m.alpha) {
        (Some(rho), None) => ModelSpec::from_rho(m.leaves, rho),
        (None, Some(alpha)) => ModelSpec::from_alpha(m.leaves, alpha),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --rho and --alpha".into(),
            ))
        }
    }
    .map_err(CliError::from_params)
}

/// Runs a parsed command line and returns the text destined for standard
/// output (empty when written to a file).
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let (text, output) = match &cli.command {
        Command::Tabulate(a) => (tabulate(a)?, a.out.output.as_deref()),
        Command::Moments(a) => (moments(a)?, a.out.output.as_deref()),
        Command::Fit(a) => (fit(a)?, a.output.as_deref()),
        Command::Sample(a) => (sample_csv(a)?, a.output.as_deref()),
        Command::Simulate(a) => (simulate(a)?, a.output.as_deref()),
        Command::Reversal(a) => (reversal(a)?, a.out.output.as_deref()),
        Command::Plan(a) => (plan(a)?, a.out.output.as_deref()),
    };
    match output {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn render(
    format: Format,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    json: Value,
) -> Result<String, CliError> {
    match format {
        Format::Csv => render_csv(&header, &rows),
        Format::Table => Ok(render_table(&header, &rows)),
        Format::Json => Ok(serde_json::to_string_pretty(&json)? + "\n"),
    }
}

fn model_json(spec: &ModelSpec) -> Value {
    json!({
        "Q": spec.leaves(),
        "rho": spec.rho(),
        "alpha": spec.alpha(),
        "c_Q": spec.normalizer(),
    })
}

pub fn tabulate(a: &TabulateArgs) -> Result<String, CliError> {
    let spec = model_spec(&a.model)?;
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(CliError::Usage("--scale must be positive".into()));
    }
    let root = !a.marginal;
    let pi = if root {
        joint_vector_direct(&spec)
    } else {
        marginal_leaves(&spec)
    };
    let width = spec.leaves() + usize::from(root);

    let (exponents, integers) = if a.integer {
        let joint = integer_vector(&spec).map_err(CliError::from_params)?;
        let integers = if root {
            joint
        } else {
            let half = joint.len() / 2;
            (0..half).map(|t| joint[t] + joint[t + half]).collect()
        };
        let exps = root.then(|| integer_pattern(&spec));
        (exps, Some(integers))
    } else {
        (None, None)
    };

    let mut header = level_header(spec.leaves(), root);
    header.push("count".into());
    if exponents.is_some() {
        header.push("exponent".into());
    }
    if integers.is_some() {
        header.push("integer".into());
    }

    let mut rows = Vec::with_capacity(pi.len());
    let mut cells = Vec::with_capacity(pi.len());
    for (t, &p) in pi.entries().iter().enumerate() {
        let value = p * a.scale;
        let mut row = level_strings(t, width);
        row.push(format_number(value, a.out.round));
        let mut cell = json!({
            "levels": (0..width).map(|b| (t >> b) & 1).collect::<Vec<_>>(),
            "count": value,
        });
        if let Some(e) = &exponents {
            row.push(e[t].to_string());
            cell["exponent"] = json!(e[t]);
        }
        if let Some(i) = &integers {
            row.push(i[t].to_string());
            cell["integer"] = json!(i[t]);
        }
        rows.push(row);
        cells.push(cell);
    }
    let doc = json!({
        "model": model_json(&spec),
        "root_included": root,
        "scale": a.scale,
        "cells": cells,
    });
    render(a.out.format, header, rows, doc)
}

/// Label of subset `s` over `variables` variables, e.g. `{1,3,L}`.
pub fn subset_label(s: usize, variables: usize, root_included: bool) -> String {
    let names: Vec<String> = (0..variables)
        .filter(|b| (s >> b) & 1 == 1)
        .map(|b| {
            if root_included && b + 1 == variables {
                "L".to_string()
            } else {
                (b + 1).to_string()
            }
        })
        .collect();
    format!("{{{}}}", names.join(","))
}

pub fn interaction_vector(
    spec: &ModelSpec,
    kind: MomentKind,
) -> Result<InteractionVector, CliError> {
    let joint = || joint_vector_direct(spec);
    let v = match kind {
        MomentKind::Raw => raw_moments(&joint()),
        MomentKind::Central => central_moments(&joint()).map_err(CliError::from_params)?,
        MomentKind::Loglinear => loglinear_interactions(&joint()).map_err(CliError::from_params)?,
        MomentKind::Linear => linear_interactions(&joint()),
        MomentKind::LeafLinear => leaf_linear_interactions(spec),
        MomentKind::LeafLoglinear => leaf_loglinear(spec).map_err(CliError::from_params)?,
    };
    Ok(v)
}

pub fn moments(a: &MomentsArgs) -> Result<String, CliError> {
    let spec = model_spec(&a.model)?;
    let v = interaction_vector(&spec, a.kind)?;
    let header = vec!["subset".to_string(), "value".to_string()];
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (s, &x) in v.entries().iter().enumerate() {
        if a.nonzero && x.abs() <= 1e-12 {
            continue;
        }
        let label = subset_label(s, v.variables(), v.root_included());
        rows.push(vec![label.clone(), format_number(x, a.out.round)]);
        entries.push(json!({ "subset": label, "index": s, "value": x }));
    }
    let doc = json!({
        "model": model_json(&spec),
        "kind": v.kind(),
        "entries": entries,
    });
    render(a.out.format, header, rows, doc)
}

#[derive(Debug, Serialize)]
struct FitModel {
    #[serde(rename = "Q")]
    leaves: usize,
    rho_hat: f64,
    alpha_hat: f64,
}

#[derive(Debug, Serialize)]
struct FitMeasures {
    rho_squared: f64,
    odds_ratio: f64,
    relative_chance: f64,
    chance_difference: f64,
    loglinear_two_factor: f64,
}

#[derive(Debug, Serialize)]
struct FitReport {
    model: FitModel,
    mode: &'static str,
    n: f64,
    measures: FitMeasures,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<EmTrace>,
    flags: Vec<Flag>,
}

fn load_counts(path: &Path) -> Result<CountTable, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    read_counts(file)
}

/// Estimates `rho` from a count table in the given mode.
pub fn fit_table(
    counts: &CountTable,
    mode: FitMode,
    config: &EmConfig,
) -> Result<(Estimate, Option<EmTrace>), CliError> {
    let needs_root = mode == FitMode::Observed;
    if counts.root_observed() != needs_root {
        return Err(CliError::Usage(if needs_root {
            "mode `observed` needs an `l` column".into()
        } else {
            "latent-root modes take a leaf-only table; drop the `l` column or use --mode observed"
                .into()
        }));
    }
    match mode {
        FitMode::Observed => Ok((mle_observed(counts).map_err(CliError::from_data)?, None)),
        FitMode::Mom => Ok((mom_estimate(counts).map_err(CliError::from_data)?, None)),
        FitMode::Closed => Ok((
            closed_form_latent(counts).map_err(CliError::from_data)?,
            None,
        )),
        FitMode::Em => {
            let trace = em_fit(counts, config).map_err(CliError::from_data)?;
            Ok((trace.estimate(), Some(trace)))
        }
    }
}

pub fn fit(a: &FitArgs) -> Result<String, CliError> {
    let counts = load_counts(&a.input)?;
    let config = EmConfig {
        tolerance: a.tolerance,
        max_iterations: a.max_iter,
        init: a.init,
    };
    if !(config.tolerance > 0.0) || config.max_iterations == 0 {
        return Err(CliError::Usage(
            "--tolerance and --max-iter must be positive".into(),
        ));
    }
    let (est, trace) = fit_table(&counts, a.mode, &config)?;
    let report = FitReport {
        model: FitModel {
            leaves: counts.leaves(),
            rho_hat: est.rho,
            alpha_hat: est.alpha,
        },
        mode: match a.mode {
            FitMode::Observed => "observed",
            FitMode::Mom => "mom",
            FitMode::Closed => "closed",
            FitMode::Em => "em",
        },
        n: counts.total(),
        measures: FitMeasures {
            rho_squared: est.rho_squared,
            odds_ratio: est.odds_ratio(),
            relative_chance: est.relative_chance(),
            chance_difference: est.chance_difference(),
            loglinear_two_factor: est.loglinear_two_factor(),
        },
        trace,
        flags: est.flags.clone(),
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

pub fn sample_csv(a: &SampleArgs) -> Result<String, CliError> {
    let spec = model_spec(&a.model)?;
    let table = sample(&spec, a.n, a.seed, a.root).map_err(CliError::from_params)?;
    let width = spec.leaves() + usize::from(a.root);
    let mut header = level_header(spec.leaves(), a.root);
    header.push("count".into());
    let rows: Vec<Vec<String>> = table
        .counts()
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            let mut row = level_strings(t, width);
            row.push((c as u64).to_string());
            row
        })
        .collect();
    render_csv(&header, &rows)
}

pub fn simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let config = SimulationConfig {
        leaves: a.leaves,
        rhos: a.rho.clone(),
        sizes: a.n.clone(),
        replicates: a.replicates,
        tolerances: a.tolerance.clone(),
        max_iterations: a.max_iter,
        master_seed: a.seed,
    };
    if a.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let report = run_simulation(&config, a.threads).map_err(CliError::from_params)?;
    let mut cells = serde_json::to_value(&report.cells)?;
    if a.summary_only {
        for cell in cells.as_array_mut().expect("cells serialize to an array") {
            cell.as_object_mut()
                .expect("cell is an object")
                .remove("replicates");
        }
    }
    let flagged: usize = report.cells.iter().map(|c| c.flagged).sum();
    let mut flags = Vec::new();
    if flagged > 0 {
        flags.push(json!({ "flagged_replicates": flagged }));
    }
    if !report.cells.iter().all(|c| c.all_monotone) {
        flags.push(json!("non_monotone_trace"));
    }
    let doc = json!({
        "model": {
            "Q": report.config.leaves,
            "rho_grid": report.config.rhos,
            "n_grid": report.config.sizes,
            "replicates": report.config.replicates,
            "tolerances": report.config.tolerances,
            "max_iterations": report.config.max_iterations,
            "master_seed": report.config.master_seed,
        },
        "cells": cells,
        "flags": flags,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn reversal(a: &ReversalArgs) -> Result<String, CliError> {
    let r = reversal_analysis(a.alpha, a.leaves).map_err(CliError::from_params)?;
    let exact = |x: f64| format_number(x, a.out.round);
    let two = |x: f64| format_number(x, Some(2));
    let entries: Vec<(&str, &str, f64)> = vec![
        ("odr(A2,L|A1)", "either", r.forward_odds_ratio),
        ("chd(A2,L|A1)", "either", r.forward_chance_difference),
        ("rch(A2,L|A1)", "either", r.forward_relative_chance),
        ("odr(L,A2|A1)", "miss", r.reversed_odds_ratio[0]),
        ("odr(L,A2|A1)", "succeed", r.reversed_odds_ratio[1]),
        ("chd(L,A2|A1)", "miss", r.reversed_chance_difference[0]),
        ("chd(L,A2|A1)", "succeed", r.reversed_chance_difference[1]),
        ("rch(L,A2|A1)", "miss", r.reversed_relative_chance[0]),
        ("rch(L,A2|A1)", "succeed", r.reversed_relative_chance[1]),
        ("rch extreme", "all miss", r.extreme_relative_chance),
    ];
    let header = ["measure", "A1", "exact", "rounded"]
        .map(String::from)
        .to_vec();
    let rows = entries
        .iter()
        .map(|(m, g, x)| vec![m.to_string(), g.to_string(), exact(*x), two(*x)])
        .collect();
    render(a.out.format, header, rows, serde_json::to_value(r)?)
}

pub fn plan(a: &PlanArgs) -> Result<String, CliError> {
    let spec = model_spec(&a.model)?;
    let n = plan_sample_size(&spec).map_err(CliError::from_params)?;
    let smallest = 1.0 / spec.normalizer();
    let header = vec!["n".to_string(), "smallest_cell_probability".to_string()];
    let rows = vec![vec![n.to_string(), format_number(smallest, a.out.round)]];
    let doc = json!({
        "model": model_json(&spec),
        "n": n,
        "smallest_cell_probability": smallest,
    });
    render(a.out.format, header, rows, doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.2109375, None), "0.2109375");
        assert_eq!(format_number(1.0 / 3.0, None), "0.333333333333");
        assert_eq!(format_number(81.0, None), "81");
        assert_eq!(format_number(0.0, None), "0");
        assert_eq!(format_number(1.0 / 3.0, Some(2)), "0.33");
        assert_eq!(format_number(-0.0, None), "0");
    }

    #[test]
    fn labels() {
        assert_eq!(subset_label(0, 4, true), "{}");
        assert_eq!(subset_label(0b1001, 4, true), "{1,L}");
        assert_eq!(subset_label(0b1001, 4, false), "{1,4}");
        assert_eq!(subset_label(0b0110, 3, false), "{2,3}");
    }
}

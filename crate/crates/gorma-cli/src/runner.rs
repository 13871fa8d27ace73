//! Executes a validated scenario: dispatches on mode, fans sweep points out
//! as independent tasks and assembles rows in sweep order so the CSV bytes
//! never depend on scheduling.

use gorma::analytic::{
    delivery_probability_group, delivery_probability_one_hop, group_constraint_satisfied,
};
use gorma::optimizer::{max_group_size, optimize_one_hop, optimize_two_groups};
use gorma::sim::{simulate_one_hop, simulate_two_groups, SimResult};
use gorma::{QoSGroupSpec, RetransmissionPlan};
use serde_json::json;

use crate::config::{ConfigError, Mode, ScenarioConfig, Sweep};
use crate::csv_out::Row;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which columns a subcommand fills for the sweep modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Closed-form columns only.
    Analytic,
    /// Monte Carlo columns only.
    Simulate,
    /// The optimizer modes.
    Optimize,
    /// The capacity mode.
    Capacity,
    /// Both closed-form and Monte Carlo columns.
    Sweep,
}

pub struct RunOutput {
    pub header: &'static [&'static str],
    pub rows: Vec<Row>,
    pub summary: serde_json::Value,
}

const ONE_HOP_HEADER: &[&str] = &[
    "sweep_var",
    "sweep_value",
    "analytic_delivery",
    "sim_delivery",
    "ci_half",
    "copies_sent",
    "energy_j",
    "energy_per_delivered_j",
    "feasible",
];

const TWO_GROUP_HEADER: &[&str] = &[
    "sweep_var",
    "sweep_value",
    "analytic_delivery",
    "analytic_delivery_g2",
    "sim_delivery",
    "sim_delivery_g2",
    "ci_half",
    "ci_half_g2",
    "copies_sent",
    "energy_j",
    "energy_per_delivered_j",
    "feasible",
];

const CAPACITY_HEADER: &[&str] = &[
    "sweep_var",
    "sweep_value",
    "analytic_delivery",
    "analytic_delivery_g2",
    "sim_delivery",
    "sim_delivery_g2",
    "ci_half",
    "ci_half_g2",
    "copies_sent",
    "energy_j",
    "energy_per_delivered_j",
    "feasible",
    "m1_max",
];

fn model_err(err: gorma::Error) -> ConfigError {
    ConfigError::field("model", err.to_string())
}

fn map_points<T, F>(points: &[T], build: F) -> Result<Vec<Row>, ConfigError>
where
    T: Sync,
    F: Fn(&T) -> Result<Row, ConfigError> + Send + Sync,
{
    #[cfg(feature = "parallel")]
    let rows: Result<Vec<Row>, ConfigError> = points.par_iter().map(build).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<Row>, ConfigError> = points.iter().map(build).collect();
    rows
}

fn base_summary(cfg: &ScenarioConfig, rows: usize) -> serde_json::Value {
    json!({
        "mode": cfg.mode.name(),
        "rows": rows,
        "out": cfg.out.as_ref().map(|p| p.display().to_string()),
        "seed": cfg.seed,
        "periods": cfg.periods,
    })
}

fn one_hop_rows(cfg: &ScenarioConfig, cmd: Command) -> Result<Vec<Row>, ConfigError> {
    let Some(Sweep::Copies(points)) = &cfg.sweep else {
        return Err(ConfigError::field("sweep", "copies sweep missing"));
    };
    let with_analytic = cmd != Command::Simulate;
    let with_sim = cmd != Command::Analytic;
    map_points(points, |&copies| {
        let mut analytic = None;
        if with_analytic {
            analytic = Some(
                delivery_probability_one_hop(&cfg.params, copies).map_err(model_err)?,
            );
        }
        let mut sim: Option<SimResult> = None;
        if with_sim {
            sim = Some(
                simulate_one_hop(&cfg.params, copies, cfg.periods, cfg.seed)
                    .map_err(model_err)?,
            );
        }
        let stats = sim.as_ref().map(|r| r.one_hop());
        Ok(Row::default()
            .text("copies")
            .count(Some(u64::from(copies)))
            .real(analytic)
            .real(stats.map(|s| s.delivery_estimate))
            .real(stats.map(|s| s.ci_half_width))
            .count(stats.map(|s| s.copies_sent))
            .real(stats.map(|s| s.energy_spent))
            .real(stats.map(|s| s.energy_per_delivered))
            .flag(true))
    })
}

fn two_group_rows(cfg: &ScenarioConfig, cmd: Command) -> Result<Vec<Row>, ConfigError> {
    let Some(Sweep::Retrans(points)) = &cfg.sweep else {
        return Err(ConfigError::field("sweep", "retrans sweep missing"));
    };
    let with_analytic = cmd != Command::Simulate;
    let with_sim = cmd != Command::Analytic;
    map_points(points, |&retrans| {
        let pairs = [
            (cfg.groups[0].clone(), retrans),
            (cfg.groups[1].clone(), retrans),
        ];
        let plan = RetransmissionPlan {
            copies: vec![retrans + 1, retrans + 1],
            predicted_delivery: vec![],
            feasible: true,
            aggregate_traffic: gorma::analytic::aggregate_group_traffic(&pairs),
        };
        let feasible = group_constraint_satisfied(&cfg.params, &cfg.groups, &plan)
            .map_err(model_err)?
            .into_iter()
            .all(|ok| ok);
        let mut analytic = (None, None);
        if with_analytic {
            analytic = (
                Some(delivery_probability_group(&cfg.params, &pairs, 0).map_err(model_err)?),
                Some(delivery_probability_group(&cfg.params, &pairs, 1).map_err(model_err)?),
            );
        }
        let mut sim: Option<SimResult> = None;
        if with_sim {
            sim = Some(
                simulate_two_groups(&cfg.params, &pairs, cfg.periods, cfg.seed)
                    .map_err(model_err)?,
            );
        }
        let (copies_sent, energy, per_delivered) = match &sim {
            None => (None, None, None),
            Some(r) => {
                let copies: u64 = r.groups.iter().map(|g| g.copies_sent).sum();
                let energy: f64 = r.groups.iter().map(|g| g.energy_spent).sum();
                let delivered: u64 = r.groups.iter().map(|g| g.packets_delivered).sum();
                let per = if delivered == 0 {
                    f64::INFINITY
                } else {
                    energy / delivered as f64
                };
                (Some(copies), Some(energy), Some(per))
            }
        };
        let g = |k: usize| sim.as_ref().map(|r| &r.groups[k]);
        Ok(Row::default()
            .text("retrans")
            .count(Some(u64::from(retrans)))
            .real(analytic.0)
            .real(analytic.1)
            .real(g(0).map(|s| s.delivery_estimate))
            .real(g(1).map(|s| s.delivery_estimate))
            .real(g(0).map(|s| s.ci_half_width))
            .real(g(1).map(|s| s.ci_half_width))
            .count(copies_sent)
            .real(energy)
            .real(per_delivered)
            .flag(feasible))
    })
}

fn optimize_output(cfg: &ScenarioConfig) -> Result<RunOutput, ConfigError> {
    if cfg.groups.is_empty() {
        let plan = optimize_one_hop(&cfg.params).map_err(model_err)?;
        let row = Row::default()
            .text("copies")
            .count(Some(u64::from(plan.copies[0])))
            .real(Some(plan.predicted_delivery[0]))
            .real(None)
            .real(None)
            .count(None)
            .real(None)
            .real(None)
            .flag(true);
        let mut summary = base_summary(cfg, 1);
        summary["feasible"] = json!(true);
        summary["plan"] = plan_json(&plan);
        return Ok(RunOutput {
            header: ONE_HOP_HEADER,
            rows: vec![row],
            summary,
        });
    }
    let outcome = optimize_two_groups(&cfg.params, &cfg.groups).map_err(model_err)?;
    let mut summary = base_summary(cfg, 1);
    let row = match &outcome {
        Some(plan) => {
            summary["feasible"] = json!(true);
            summary["plan"] = plan_json(plan);
            Row::default()
                .text("retrans")
                .count(Some(u64::from(plan.copies[0] - 1)))
                .real(Some(plan.predicted_delivery[0]))
                .real(Some(plan.predicted_delivery[1]))
                .real(None)
                .real(None)
                .real(None)
                .real(None)
                .count(None)
                .real(None)
                .real(None)
                .flag(true)
        }
        None => {
            summary["feasible"] = json!(false);
            summary["plan"] = json!(null);
            Row::default()
                .text("retrans")
                .count(None)
                .real(None)
                .real(None)
                .real(None)
                .real(None)
                .real(None)
                .real(None)
                .count(None)
                .real(None)
                .real(None)
                .flag(false)
        }
    };
    Ok(RunOutput {
        header: TWO_GROUP_HEADER,
        rows: vec![row],
        summary,
    })
}

fn plan_json(plan: &RetransmissionPlan) -> serde_json::Value {
    json!({
        "copies": plan.copies,
        "predicted_delivery": plan.predicted_delivery,
        "aggregate_traffic": plan.aggregate_traffic,
    })
}

fn capacity_rows(cfg: &ScenarioConfig) -> Result<Vec<Row>, ConfigError> {
    let Some(Sweep::Q1(points)) = &cfg.sweep else {
        return Err(ConfigError::field("sweep", "q1 sweep missing"));
    };
    let t1 = cfg
        .capacity_t1
        .ok_or_else(|| ConfigError::field("group1.t_ms", "missing"))?;
    let group2 = &cfg.groups[0];
    map_points(points, |&q1| {
        let m1 = max_group_size(&cfg.params, q1, group2, t1).map_err(model_err)?;
        let mut deliveries = (None, None);
        if m1 >= 1 {
            let g1 = QoSGroupSpec::new(m1, q1, t1).map_err(model_err)?;
            // The searcher needs the stricter target first; map the
            // predicted deliveries back to (searched group, group2).
            let swapped = q1 < group2.q_min();
            let ordered = if swapped {
                [group2.clone(), g1]
            } else {
                [g1, group2.clone()]
            };
            let plan = optimize_two_groups(&cfg.params, &ordered)
                .map_err(model_err)?
                .ok_or_else(|| {
                    ConfigError::field("model", "boundary plan vanished on re-solve")
                })?;
            deliveries = if swapped {
                (Some(plan.predicted_delivery[1]), Some(plan.predicted_delivery[0]))
            } else {
                (Some(plan.predicted_delivery[0]), Some(plan.predicted_delivery[1]))
            };
        }
        Ok(Row::default()
            .text("q1")
            .real(Some(q1))
            .real(deliveries.0)
            .real(deliveries.1)
            .real(None)
            .real(None)
            .real(None)
            .real(None)
            .count(None)
            .real(None)
            .real(None)
            .flag(m1 >= 1)
            .count(Some(u64::from(m1))))
    })
}

/// Runs one scenario under the given subcommand and returns the table plus
/// a JSON summary for standard output.
pub fn run(cmd: Command, cfg: &ScenarioConfig) -> Result<RunOutput, ConfigError> {
    match (cmd, cfg.mode) {
        (Command::Analytic | Command::Simulate | Command::Sweep, Mode::OneHopSweep)
        | (Command::Analytic | Command::Simulate | Command::Sweep, Mode::Energy) => {
            let rows = one_hop_rows(cfg, cmd)?;
            let summary = base_summary(cfg, rows.len());
            Ok(RunOutput {
                header: ONE_HOP_HEADER,
                rows,
                summary,
            })
        }
        (Command::Analytic | Command::Simulate | Command::Sweep, Mode::TwoGroupSweep) => {
            let rows = two_group_rows(cfg, cmd)?;
            let summary = base_summary(cfg, rows.len());
            Ok(RunOutput {
                header: TWO_GROUP_HEADER,
                rows,
                summary,
            })
        }
        (Command::Optimize, Mode::Optimize) => optimize_output(cfg),
        (Command::Capacity, Mode::Capacity) => {
            let rows = capacity_rows(cfg)?;
            let mut summary = base_summary(cfg, rows.len());
            let all_feasible = rows
                .iter()
                .all(|row| row.cells()[11] == "true");
            summary["feasible"] = json!(all_feasible);
            Ok(RunOutput {
                header: CAPACITY_HEADER,
                rows,
                summary,
            })
        }
        (cmd, mode) => Err(ConfigError::field(
            "mode",
            format!(
                "mode '{}' cannot be run by this subcommand ({cmd:?})",
                mode.name()
            ),
        )),
    }
}

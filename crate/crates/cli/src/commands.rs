use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use toric_core::dynamics::{
    find_vertex_balanced, sample_schedule, simulate, RateSchedule, ScheduleKind, SimOptions, BALANCE_TOL,
};
use toric_core::embedding::{counterexample_search, target_inclusion, verify_embedding, VerifyConfig, MEMBERSHIP_TOL};
use toric_core::inclusion::{Semantics, ToricInclusion};
use toric_core::regions::{build_region, build_separating_curve, verify_region, PolygonRegion, RegionCertificate};
use toric_core::scalar::{parse_rational, Rational, Scalar};
use toric_core::Error as CoreError;

use crate::document::{Network, NetworkDocument};
use crate::report::{ConfigEcho, RunReport, EXIT_ERROR, EXIT_REGION_FAILED, EXIT_VIOLATIONS};
use crate::svg::{self, Figure};
use crate::{Command, Global, RateMode, SemanticsArg};

/// Certificate tolerance for regions when `--tolerance` is absent.
pub const REGION_TOL: f64 = 1e-10;

/// Integration tolerance for `simulate` when `--tolerance` is absent.
pub const SIMULATE_RTOL: f64 = 1e-8;

/// Points per segment in the log-space panel of region figures.
const FIGURE_SAMPLES: usize = 24;

/// Runs `$body` with `$g` bound to the graph and `$k` to the rates, in exact
/// arithmetic when `$rational` is set and in floating point otherwise.
macro_rules! with_scalar {
    ($rational:expr, $net:expr, |$g:ident, $k:ident| $body:expr) => {
        if $rational {
            let $g = &$net.graph;
            let $k: Vec<Rational> = $net.rates.clone();
            $body
        } else {
            let $g = &$net.graph.map_scalar(Scalar::to_f64);
            let $k: Vec<f64> = $net.rates_f64();
            $body
        }
    };
}

pub fn dispatch(cmd: &Command, g: &Global) -> Result<RunReport> {
    match cmd {
        Command::Check { network } => check(network),
        Command::BuildInclusion { network, epsilon } => build_inclusion(network, *epsilon, g),
        Command::Verify {
            network,
            epsilon,
            samples,
            seed,
            semantics,
            mode,
            box_half_width,
            max_witnesses,
            allow_counterexample,
        } => {
            let config = VerifyConfig {
                samples: *samples,
                seed: *seed,
                box_half_width: *box_half_width,
                semantics: match semantics {
                    SemanticsArg::Hyperplane => Semantics::Hyperplane,
                    SemanticsArg::Strict => Semantics::Strict,
                },
                ratio_mode: *mode == RateMode::Ratio,
                max_witnesses: *max_witnesses,
                tolerance: g.tolerance.unwrap_or(MEMBERSHIP_TOL),
            };
            verify(network, *epsilon, config, *allow_counterexample, g)
        }
        Command::Simulate {
            network,
            epsilon,
            schedule,
            x0,
            horizon,
            seed,
            out,
        } => simulate_cmd(network, *epsilon, schedule, x0.as_deref(), *horizon, *seed, out, g),
        Command::Equilibrium { network } => equilibrium(network, g),
        Command::Region {
            network,
            epsilon,
            tau,
            clip_box,
            side,
            out,
        } => region(network, *epsilon, *tau, clip_box.as_deref(), side, out, g),
    }
}

fn load(path: &Path) -> Result<Network> {
    NetworkDocument::load(path)?
        .validate()
        .with_context(|| format!("in {}", path.display()))
}

fn core_err(net: &Network) -> impl Fn(CoreError) -> anyhow::Error + '_ {
    move |e| anyhow!(net.describe(&e))
}

fn mode_name(rational: bool) -> String {
    if rational { "rational" } else { "float" }.to_string()
}

fn params(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Comma-separated numbers; each may be a `p/q` literal.
pub fn parse_list(text: &str, field: &str) -> Result<Vec<f64>> {
    text.split(',')
        .enumerate()
        .map(|(i, s)| {
            parse_rational(s.trim())
                .map(|q| q.to_f64())
                .ok_or_else(|| anyhow!("{field}[{i}]: cannot parse {:?} as a number", s.trim()))
        })
        .collect()
}

fn write_artifact(report: &mut RunReport, dir: &Path, name: &Path, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    report.artifacts.push(name.display().to_string());
    Ok(())
}

fn check(path: &Path) -> Result<RunReport> {
    let net = load(path)?;
    let graph = &net.graph;
    let names = |set: &[usize]| set.iter().map(|&v| net.ids[v].clone()).collect::<Vec<_>>();
    let sccs = graph.strongly_connected_components();
    let mut component = vec![0; graph.vertices().len()];
    for (c, members) in sccs.iter().enumerate() {
        for &v in members {
            component[v] = c;
        }
    }
    // an edge lies on a directed cycle iff its ends share a component
    let off_cycles: Vec<String> = (0..graph.edges().len())
        .filter(|&e| {
            let (s, t) = graph.edges()[e];
            component[s] != component[t]
        })
        .map(|e| net.edge_name(e))
        .collect();
    let space = graph.edge_space();
    let literals = |vs: &[Vec<Rational>]| -> Vec<Vec<String>> {
        vs.iter().map(|v| v.iter().map(Scalar::to_literal).collect()).collect()
    };
    let reversible = graph.is_reversible();
    let weakly = graph.is_weakly_reversible();

    let mut report = RunReport::new(
        "check",
        ConfigEcho {
            input: path.display().to_string(),
            mode: mode_name(true),
            tolerance: None,
            seed: None,
            epsilon: None,
            delta: None,
            parameters: Map::new(),
        },
    );
    report.results = json!({
        "dimension": graph.dim(),
        "vertices": graph.vertices().len(),
        "edges": graph.edges().len(),
        "reversible": reversible,
        "weakly_reversible": weakly,
        "strongly_connected_components": sccs.iter().map(|c| names(c)).collect::<Vec<_>>(),
        "linkage_classes": graph.linkage_classes().iter().map(|c| names(c)).collect::<Vec<_>>(),
        "edges_off_cycles": off_cycles,
        "edge_space_dimension": space.span.len(),
        "edge_space_basis": literals(&space.span),
        "conservation_basis": literals(&space.complement),
    });
    report.say(format!(
        "{} vertices, {} edges in dimension {}",
        graph.vertices().len(),
        graph.edges().len(),
        graph.dim()
    ));
    report.say(format!("reversible: {reversible}, weakly reversible: {weakly}"));
    if let Some(e) = off_cycles.first() {
        report.say(format!("edge {e} lies on no directed cycle"));
    }
    report.say(format!(
        "edge space dimension {}, {} conservation laws",
        space.span.len(),
        space.complement.len()
    ));
    Ok(report)
}

fn build_inclusion(path: &Path, epsilon: f64, g: &Global) -> Result<RunReport> {
    let net = load(path)?;
    let record = with_scalar!(g.rational, net, |graph, _k| {
        ToricInclusion::build_weakly_reversible(graph, epsilon)
            .and_then(|ti| ti.to_record())
            .map_err(core_err(&net))?
    });
    let mut report = RunReport::new(
        "build-inclusion",
        ConfigEcho {
            input: path.display().to_string(),
            mode: mode_name(g.rational),
            tolerance: None,
            seed: None,
            epsilon: Some(epsilon),
            delta: Some(record.delta),
            parameters: Map::new(),
        },
    );
    let text = serde_json::to_string_pretty(&record)? + "\n";
    write_artifact(&mut report, &g.output_dir, Path::new("inclusion.json"), &text)?;
    report.say(format!("{} hyperplanes, delta = {:.6}", record.normals.len(), record.delta));
    report.results = to_value(&record)?;
    Ok(report)
}

fn verify(path: &Path, epsilon: f64, config: VerifyConfig, allow_counterexample: bool, g: &Global) -> Result<RunReport> {
    let net = load(path)?;
    let weakly = net.graph.is_weakly_reversible();
    if !weakly && !allow_counterexample {
        let err = net.graph.require_weakly_reversible().unwrap_err();
        bail!("{} (pass --allow-counterexample to search for violations)", net.describe(&err));
    }
    let (embedding, delta, replayed) = with_scalar!(g.rational, net, |graph, _k| {
        let (rep, ti) = if weakly {
            (
                verify_embedding(graph, epsilon, &config),
                target_inclusion(graph, epsilon, config.ratio_mode),
            )
        } else {
            (
                counterexample_search(graph, epsilon, &config),
                ToricInclusion::build_from_edges(graph, epsilon),
            )
        };
        let rep = rep.map_err(core_err(&net))?;
        let ti = ti.map_err(core_err(&net))?;
        let replayed = rep.replay(graph, &ti, config.tolerance).map_err(core_err(&net))?;
        (rep, ti.delta(), replayed)
    });

    let mut report = RunReport::new(
        "verify",
        ConfigEcho {
            input: path.display().to_string(),
            mode: mode_name(g.rational),
            tolerance: Some(config.tolerance),
            seed: Some(config.seed),
            epsilon: Some(epsilon),
            delta: Some(delta),
            parameters: params(json!({
                "samples": config.samples,
                "semantics": config.semantics,
                "rate_mode": if config.ratio_mode { "ratio" } else { "absolute" },
                "box_half_width": embedding.box_half_width,
                "max_witnesses": config.max_witnesses,
                "target": if weakly { "weakly-reversible" } else { "edges" },
            })),
        },
    );
    report.say(format!(
        "{} samples, {} violations, max residual {:.3e}",
        embedding.samples, embedding.violations, embedding.max_residual
    ));
    if embedding.violations > 0 {
        report.say(format!(
            "{} witnesses recorded, replay {}",
            embedding.witnesses.len(),
            if replayed { "confirms them" } else { "does not reproduce them" }
        ));
        report.fail("violations", EXIT_VIOLATIONS);
    }
    report.results = json!({
        "edges": (0..net.graph.edges().len()).map(|e| net.edge_name(e)).collect::<Vec<_>>(),
        "embedding": embedding,
        "witnesses_replay": replayed,
    });
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    path: &Path,
    epsilon: f64,
    schedule: &str,
    x0: Option<&str>,
    horizon: f64,
    seed: u64,
    out: &Path,
    g: &Global,
) -> Result<RunReport> {
    let net = load(path)?;
    let n = net.graph.dim();
    let kind: ScheduleKind = schedule.parse().map_err(|e: CoreError| anyhow!(e))?;
    let x0 = match x0 {
        Some(text) => parse_list(text, "x0")?,
        None => vec![1.0; n],
    };
    if x0.len() != n {
        bail!("x0: {} entries for dimension {n}", x0.len());
    }
    if let Some(i) = x0.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        bail!("x0[{i}]: initial state must be positive, got {}", x0[i]);
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        bail!("horizon must be positive, got {horizon}");
    }
    let sched = match kind {
        ScheduleKind::Constant => RateSchedule::constant(net.rates_f64()),
        _ => sample_schedule(net.graph.edges().len(), epsilon, kind, seed, None),
    }
    .map_err(core_err(&net))?;
    let rtol = g.tolerance.unwrap_or(SIMULATE_RTOL);
    let opts = SimOptions {
        rtol,
        atol: 1e-2 * rtol,
        ..SimOptions::default()
    };

    let mut report = RunReport::new(
        "simulate",
        ConfigEcho {
            input: path.display().to_string(),
            mode: mode_name(g.rational),
            tolerance: Some(rtol),
            seed: Some(seed),
            epsilon: Some(epsilon),
            delta: None,
            parameters: params(json!({
                "schedule": kind,
                "rates": if kind == ScheduleKind::Constant { "document" } else { "sampled" },
                "x0": x0,
                "horizon": horizon,
                "atol": opts.atol,
                "projection": opts.project,
            })),
        },
    );
    let run = with_scalar!(g.rational, net, |graph, _k| simulate(graph, &sched, &x0, horizon, &opts));
    let traj = match run {
        Ok(t) => t,
        Err(CoreError::BlowUp { t }) => {
            report.say(format!("integration stopped at t = {t}: probable finite-time blow-up"));
            report.results = json!({ "blow_up_time": t });
            report.fail("blow-up", EXIT_ERROR);
            return Ok(report);
        }
        Err(e) => return Err(core_err(&net)(e)),
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=traj.conservation.len()).map(|j| format!("residual{j}")));
    w.write_record(&header)?;
    for ((t, state), res) in traj.times.iter().zip(traj.states()).zip(&traj.residuals) {
        let row = std::iter::once(*t).chain(state).chain(res.iter().copied());
        w.write_record(row.map(|v| v.to_string()))?;
    }
    let table = String::from_utf8(w.into_inner()?)?;
    write_artifact(&mut report, &g.output_dir, out, &table)?;

    let fin = traj.final_state();
    report.say(format!(
        "{} points to t = {horizon}, final state {:?}",
        traj.times.len(),
        fin
    ));
    report.say(format!(
        "{} conservation laws, max relative residual {:.3e}",
        traj.conservation.len(),
        traj.max_residual
    ));
    report.results = json!({
        "points": traj.times.len(),
        "final_state": fin,
        "min_coordinate": traj.min_coordinate(),
        "conservation_laws": traj.conservation,
        "max_residual": traj.max_residual,
        "stats": traj.stats,
    });
    Ok(report)
}

fn equilibrium(path: &Path, g: &Global) -> Result<RunReport> {
    let net = load(path)?;
    net.graph.require_weakly_reversible().map_err(core_err(&net))?;
    let tol = g.tolerance.unwrap_or(BALANCE_TOL);
    let result = with_scalar!(g.rational, net, |graph, k| {
        find_vertex_balanced(graph, &k, tol).map_err(core_err(&net))?
    });
    let mut report = RunReport::new(
        "equilibrium",
        ConfigEcho {
            input: path.display().to_string(),
            mode: mode_name(g.rational),
            tolerance: Some(tol),
            seed: None,
            epsilon: None,
            delta: None,
            parameters: params(json!({
                "rates": net.rates.iter().map(Scalar::to_literal).collect::<Vec<_>>(),
            })),
        },
    );
    match &result.candidate {
        Some(x) => report.say(format!("candidate {x:?}")),
        None => report.say("no positive solution of the balance equations"),
    }
    let worst = result.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    report.say(format!(
        "consistent: {}, balanced: {}, max residual {worst:.3e}",
        result.consistent, result.balanced
    ));
    if !result.consistent {
        report.status = "inconsistent".into();
    } else if !result.balanced {
        report.status = "unbalanced".into();
    }
    report.results = to_value(&result)?;
    Ok(report)
}

struct RegionOutcome {
    region: Option<PolygonRegion>,
    certificate: Option<RegionCertificate>,
    attempts: Value,
    verified: bool,
    tau: Option<f64>,
    reason: Option<String>,
    delta: f64,
    units: Vec<[f64; 2]>,
}

fn parse_box(text: &str) -> Result<[f64; 4]> {
    let v = parse_list(text, "box")?;
    let b: [f64; 4] = v
        .try_into()
        .map_err(|v: Vec<f64>| anyhow!("box: expected 4 numbers x_min,x_max,y_min,y_max, got {}", v.len()))?;
    if !(b[0] < b[1] && b[2] < b[3]) {
        bail!("box: need x_min < x_max and y_min < y_max, got {b:?}");
    }
    Ok(b)
}

fn region(
    path: &Path,
    epsilon: f64,
    tau: Option<f64>,
    clip_box: Option<&str>,
    side: &str,
    out: &Path,
    g: &Global,
) -> Result<RunReport> {
    let net = load(path)?;
    if net.graph.dim() != 2 {
        return Err(core_err(&net)(CoreError::RegionDimension(net.graph.dim())));
    }
    let clip = clip_box.map(parse_box).transpose()?;
    let side: [f64; 2] = parse_list(side, "side")?
        .try_into()
        .map_err(|_| anyhow!("side: expected two numbers"))?;
    let tol = g.tolerance.unwrap_or(REGION_TOL);

    let outcome = with_scalar!(g.rational, net, |graph, _k| {
        let ti = ToricInclusion::build_weakly_reversible(graph, epsilon).map_err(core_err(&net))?;
        let record = ti.to_record()?;
        let units = record.unit_normals.iter().map(|h| [h[0], h[1]]).collect();
        let recheck = |r: &Option<PolygonRegion>| -> Result<Option<RegionCertificate>> {
            r.as_ref().map(|r| verify_region(&ti, r, tol)).transpose().map_err(|e| anyhow!(e))
        };
        match clip {
            Some(b) => {
                let sc = build_separating_curve(&ti, b, side).map_err(core_err(&net))?;
                let certificate = recheck(&sc.curve)?;
                RegionOutcome {
                    verified: sc.verified && certificate.as_ref().is_some_and(|c| c.verified),
                    attempts: Value::Array(Vec::new()),
                    tau: sc.tau,
                    reason: sc.reason,
                    region: sc.curve,
                    certificate,
                    delta: ti.delta(),
                    units,
                }
            }
            None => {
                let start = tau.unwrap_or(4.0 * ti.delta());
                let build = build_region(&ti, start).map_err(core_err(&net))?;
                let certificate = recheck(&build.region)?;
                let reason = (!build.verified).then(|| match build.clone().into_verified() {
                    Err(e) => e.to_string(),
                    Ok(_) => String::new(),
                });
                RegionOutcome {
                    verified: build.verified && certificate.as_ref().is_some_and(|c| c.verified),
                    attempts: to_value(&build.attempts)?,
                    tau: build.region.as_ref().and_then(|r| r.tau),
                    reason,
                    region: build.region,
                    certificate,
                    delta: ti.delta(),
                    units,
                }
            }
        }
    });

    let mut report = RunReport::new(
        "region",
        ConfigEcho {
            input: path.display().to_string(),
            mode: mode_name(g.rational),
            tolerance: Some(tol),
            seed: None,
            epsilon: Some(epsilon),
            delta: Some(outcome.delta),
            parameters: params(json!({
                "kind": if clip.is_some() { "separating-curve" } else { "closed-region" },
                "tau": tau,
                "box": clip,
                "side": clip.map(|_| side),
            })),
        },
    );

    if let Some(r) = &outcome.region {
        let mut log_curve = r.sample_log(FIGURE_SAMPLES);
        if r.closed {
            log_curve.pop();
        }
        let kind = if r.closed { "region" } else { "separating curve" };
        let status = if outcome.verified { "verified" } else { "not verified" };
        let fig = svg::render(&Figure {
            title: format!("{kind}, delta = {:.4}, tau = {:?}, {status}", outcome.delta, outcome.tau),
            log_curve: &log_curve,
            x_curve: &r.x_vertices(),
            closed: r.closed,
            slabs: &outcome.units,
            delta: outcome.delta,
            clip_box: clip,
        });
        write_artifact(&mut report, &g.output_dir, out, &fig)?;
        let detail = json!({
            "region": r,
            "certificate": outcome.certificate,
            "attempts": outcome.attempts,
        });
        let mut cert_name = out.to_path_buf();
        cert_name.set_extension("json");
        write_artifact(&mut report, &g.output_dir, &cert_name, &(serde_json::to_string_pretty(&detail)? + "\n"))?;
    }

    for a in outcome.attempts.as_array().into_iter().flatten() {
        report.say(format!(
            "tau = {}: {}",
            a["tau"],
            if a["verified"] == true {
                "verified".to_string()
            } else if let Some(r) = a["reason"].as_str() {
                r.to_string()
            } else {
                format!("certificate maximum {}", a["max_value"])
            }
        ));
    }
    if let (Some(b), Some(r)) = (clip, &outcome.region) {
        report.say(format!(
            "separating curve with {} vertices in box {b:?}, tau = {:?}",
            r.vertices.len(),
            outcome.tau
        ));
    }
    let cert_summary = outcome.certificate.as_ref().map(|c| {
        json!({
            "max_value": c.max_value,
            "tolerance": c.tolerance,
            "subsegments": c.subsegments.len(),
            "worst": c.worst_record(),
            "clip_box": c.clip_box,
        })
    });
    if let Some(c) = &outcome.certificate {
        report.say(format!("certificate maximum {:.3e} (tolerance {:.1e})", c.max_value, c.tolerance));
    }
    if !outcome.verified {
        report.say(format!(
            "region not verified: {}",
            outcome.reason.as_deref().unwrap_or("certificate exceeds tolerance")
        ));
        report.fail("unverified", EXIT_REGION_FAILED);
    }
    report.results = json!({
        "verified": outcome.verified,
        "tau": outcome.tau,
        "attempts": outcome.attempts,
        "reason": outcome.reason,
        "vertices": outcome.region.as_ref().map(|r| &r.vertices),
        "normals": outcome.region.as_ref().map(|r| &r.normals),
        "x_vertices": outcome.region.as_ref().map(|r| r.x_vertices()),
        "certificate": cert_summary,
    });
    Ok(report)
}

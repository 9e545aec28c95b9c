use std::path::Path;

use hypercount::absorb::{classify_set, AbsorberConfig};
use hypercount::bounds::theorem_bound;
use hypercount::combinat::subsets;
use hypercount::factors::{
    count_f_factors, find_f_factor, matching_zero_cycle_relation, verify_factor, FactorDecomposition, FactorSpec,
};
use hypercount::partition::{check_good, random_bisection, size_vector, wilson_interval, Partition};
use hypercount::paths::{validate_ell_cycle, validate_ell_path, validate_power_cycle, EllCycle, EllPath, PowerCycle};
use hypercount::stitch::{exact_count, is_respecting, pipeline, PipelineConfig, SeedSchedule, Target};
use hypercount::{Budget, GoodnessSpec, Hypergraph, Vertex};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::generate::{clique_pattern, planted_cycle, planted_factor, planted_path, Family, Planted};
use crate::report::{emit, Report, RunConfig};
use crate::{
    at_stage, AbsorbArgs, Cli, CliError, Command, Common, CountArgs, FactorsArgs, GenerateArgs, GoodnessArgs,
    PartitionArgs, Sha256Schedule, StitchArgs, TargetArgs, TargetKind, VerifyArgs,
};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let report = match &cli.command {
        Command::Generate(a) => return generate(c, a),
        Command::Partition(a) => partition(c, a)?,
        Command::Stitch(a) => stitch(c, a)?,
        Command::Count(a) => count(c, a)?,
        Command::Factors(a) => factors(c, a)?,
        Command::AbsorbClassify(a) => absorb_classify(c, a)?,
        Command::Verify(a) => verify(c, a)?,
    };
    emit(c.out.as_deref(), &report.render(c.format)?)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("reading {}: {e}", path.display())))
}

fn load_host(path: &Path) -> Result<Hypergraph, CliError> {
    Hypergraph::parse_edge_list(&read(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn config(c: &Common, command: &str, input: Option<&Path>, params: Value) -> RunConfig {
    let Value::Object(params) = params else {
        unreachable!("parameters are built as JSON objects")
    };
    RunConfig {
        command: command.to_string(),
        input: input.map(|p| p.display().to_string()),
        out: c.out.as_ref().map(|p| p.display().to_string()),
        format: c.format,
        seed: c.seed,
        seed_schedule: "sha256",
        budget: c.budget,
        workers: c.workers,
        precision_bits: c.precision_bits,
        params,
    }
}

fn goodness_params(g: &GoodnessArgs) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("m".into(), json!(g.m));
    m.insert("delta".into(), json!(g.delta.to_string()));
    m.insert("gamma".into(), json!(g.gamma.to_string()));
    m
}

fn merged(mut a: Map<String, Value>, b: Value) -> Value {
    if let Value::Object(b) = b {
        a.extend(b);
    }
    Value::Object(a)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library results serialize")
}

fn generate(c: &Common, a: &GenerateArgs) -> Result<(), CliError> {
    let seed = Sha256Schedule::new(c.seed).seed("generate", 0);
    let need_ell = || {
        a.ell
            .ok_or_else(|| CliError::Invalid("--ell is required for this family".into()))
    };
    let noise = a.p.unwrap_or(0.0);
    let (host, planted) = match a.family {
        Family::Complete => (Hypergraph::complete(a.n, a.k)?, None),
        Family::Binomial => {
            let p =
                a.p.ok_or_else(|| CliError::Invalid("--p is required for the binomial family".into()))?;
            (hypercount::gen_random(a.n, a.k, p, seed)?, None)
        }
        Family::PlantedCycle => {
            let ell = need_ell()?;
            let (h, cyc) = planted_cycle(a.n, a.k, ell, noise, seed)?;
            (
                h,
                Some(Planted::Cycle {
                    ell,
                    order: cyc.order().to_vec(),
                }),
            )
        }
        Family::PlantedPath => {
            let ell = need_ell()?;
            let (h, path) = planted_path(a.n, a.k, ell, noise, seed)?;
            (
                h,
                Some(Planted::Path {
                    ell,
                    order: path.order().to_vec(),
                }),
            )
        }
        Family::PlantedFactor => {
            let t = a.t.unwrap_or(a.k);
            let (h, f) = planted_factor(a.n, &clique_pattern(t, a.k)?, noise, seed)?;
            (h, Some(Planted::Factor { t, copies: f.copies }))
        }
    };
    let text = host.to_edge_list();
    let Some(out) = c.out.as_deref() else {
        return emit(None, &text);
    };
    emit(Some(out), &text)?;
    let params = json!({"family": a.family, "n": a.n, "k": a.k, "ell": a.ell, "t": a.t, "p": a.p});
    let report = Report {
        config: config(c, "generate", None, params),
        result: json!({
            "n": host.n(),
            "k": host.k(),
            "edges": host.edge_count(),
            "planted": planted,
        }),
    };
    emit(None, &report.render(c.format)?)
}

fn spec_of(g: &GoodnessArgs) -> Result<GoodnessSpec, CliError> {
    GoodnessSpec::new(g.delta, g.gamma).map_err(at_stage("goodness parameters"))
}

fn check_ell(k: usize, ell: usize) -> Result<(), CliError> {
    if ell == 0 || ell >= k {
        return Err(CliError::Invalid(format!(
            "need 1 <= ell <= k-1, got k = {k}, ell = {ell}"
        )));
    }
    Ok(())
}

fn partition(c: &Common, a: &PartitionArgs) -> Result<Report, CliError> {
    let h = load_host(&a.input)?;
    let k = h.k();
    let divisor = match (a.ell, a.t) {
        (Some(ell), _) => {
            check_ell(k, ell)?;
            k - ell
        }
        (None, Some(t)) => t,
        (None, None) => 1,
    };
    if a.trials == 0 {
        return Err(CliError::Invalid("--trials must be at least 1".into()));
    }
    let spec = spec_of(&a.goodness)?;
    let sv = size_vector(h.n(), a.goodness.m, divisor, k).map_err(at_stage("size_vector"))?;
    let level = spec.half_slack();
    let sched = Sha256Schedule::new(c.seed);
    let outcomes = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let seed = sched.seed("partition", i);
            let (p, trace) = random_bisection(&h, &sv, &spec, seed)?;
            let report = check_good(&h, &p, level)?;
            Ok((seed, p, trace, report))
        })
        .collect::<hypercount::Result<Vec<_>>>()
        .map_err(at_stage("random_bisection"))?;

    let good = outcomes.iter().filter(|o| o.3.good).count() as u64;
    let trials: Vec<Value> = outcomes
        .iter()
        .enumerate()
        .map(|(i, (seed, _, trace, rep))| {
            json!({
                "trial": i,
                "seed": seed,
                "good": rep.good,
                "violation_count": rep.violation_count,
                "min_ratio": rep.min_ratio.as_ref().map(|r| r.to_string()),
                "level_events": trace.levels.iter().map(|l| l.all_events()).collect::<Vec<_>>(),
                "refinement_implies_events": trace.refinement_implies_events(),
            })
        })
        .collect();
    let (seed0, p0, trace0, rep0) = &outcomes[0];
    let params = merged(
        goodness_params(&a.goodness),
        json!({"ell": a.ell, "t": a.t, "trials": a.trials}),
    );
    Ok(Report {
        config: config(c, "partition", Some(&a.input), params),
        result: json!({
            "size_vector": sv,
            "goodness_level": level.to_string(),
            "trials": a.trials,
            "good": good,
            "goodness_fraction": good as f64 / a.trials as f64,
            "interval": wilson_interval(good, a.trials),
            "records": trials,
            "first": {
                "seed": seed0,
                "blocks": p0.blocks(),
                "goodness": rep0,
                "trace": trace0,
            },
        }),
    })
}

fn load_pattern(path: &Path, k: usize) -> Result<FactorSpec, CliError> {
    let pattern = load_host(path)?;
    if pattern.k() != k {
        return Err(CliError::Invalid(format!(
            "pattern {} is {}-uniform but the host is {k}-uniform",
            path.display(),
            pattern.k()
        )));
    }
    Ok(FactorSpec::new(pattern)?)
}

fn factor_spec(k: usize, t: Option<usize>, pattern: Option<&Path>) -> Result<FactorSpec, CliError> {
    match pattern {
        Some(p) => load_pattern(p, k),
        None => Ok(clique_pattern(t.unwrap_or(k), k)?),
    }
}

fn target_of(h: &Hypergraph, a: &TargetArgs) -> Result<Target, CliError> {
    let k = h.k();
    match a.target {
        TargetKind::Cycle => {
            let ell = a
                .ell
                .ok_or_else(|| CliError::Invalid("--ell is required for cycles".into()))?;
            check_ell(k, ell)?;
            Ok(Target::Cycle { ell })
        }
        TargetKind::Power => {
            let t =
                a.t.ok_or_else(|| CliError::Invalid("--t is required for powers of tight cycles".into()))?;
            Ok(Target::Power { t })
        }
        TargetKind::Factor => Ok(Target::Factor {
            spec: factor_spec(k, a.t, a.pattern.as_deref())?,
            degree: None,
        }),
        TargetKind::Path => Err(CliError::Invalid("--target path is only supported by verify".into())),
    }
}

fn target_params(a: &TargetArgs) -> Value {
    json!({
        "target": format!("{:?}", a.target).to_lowercase(),
        "ell": a.ell,
        "t": a.t,
        "pattern": a.pattern.as_ref().map(|p| p.display().to_string()),
    })
}

fn stitch(c: &Common, a: &StitchArgs) -> Result<Report, CliError> {
    let h = load_host(&a.input)?;
    let mut target = target_of(&h, &a.target)?;
    if let (Target::Factor { degree, .. }, Some(d), Some(mu)) = (&mut target, a.d, a.mu) {
        *degree = Some((d, mu));
    }
    let mut cfg = PipelineConfig::new(target, a.goodness.m, spec_of(&a.goodness)?, a.trials);
    cfg.stitch_all = a.stitch_all;
    cfg.junction_retries = a.junction_retries;
    cfg.block_nodes = c.budget;
    cfg.exact_nodes = a.exact.then_some(c.budget);
    cfg.samples = a.samples;
    cfg.precision_bits = c.precision_bits;
    let report = pipeline(&h, &cfg, &Sha256Schedule::new(c.seed)).map_err(at_stage("pipeline"))?;
    let params = merged(
        goodness_params(&a.goodness),
        merged(
            target_params(&a.target).as_object().cloned().unwrap_or_default(),
            json!({
                "trials": a.trials,
                "stitch_all": a.stitch_all,
                "junction_retries": a.junction_retries,
                "exact": a.exact,
                "samples": a.samples,
                "d": a.d,
                "mu": a.mu.map(|m| m.to_string()),
            }),
        ),
    );
    Ok(Report {
        config: config(c, "stitch", Some(&a.input), params),
        result: to_value(&report),
    })
}

fn count(c: &Common, a: &CountArgs) -> Result<Report, CliError> {
    let h = load_host(&a.input)?;
    let target = target_of(&h, &a.target)?;
    let exact = exact_count(&h, &target, c.budget).map_err(at_stage("count"))?;
    let bound = match a.c {
        None => Value::Null,
        Some(cst) => {
            let t = match &target {
                Target::Cycle { .. } => None,
                Target::Power { t } => Some(*t as u64),
                Target::Factor { spec, .. } => Some(spec.t() as u64),
            };
            let b = theorem_bound(h.n() as u64, cst, t, c.precision_bits).map_err(at_stage("theorem_bound"))?;
            json!({
                "c": cst.to_string(),
                "t": t,
                "bound": b,
                "certainly_at_most_count": b.certainly_at_most(&exact, c.precision_bits),
            })
        }
    };
    let params = merged(
        target_params(&a.target).as_object().cloned().unwrap_or_default(),
        json!({"c": a.c.map(|x| x.to_string())}),
    );
    Ok(Report {
        config: config(c, "count", Some(&a.input), params),
        result: json!({"n": h.n(), "k": h.k(), "count": exact.to_string(), "theorem_bound": bound}),
    })
}

fn factors(c: &Common, a: &FactorsArgs) -> Result<Report, CliError> {
    let h = load_host(&a.input)?;
    let spec = factor_spec(h.k(), a.t, a.pattern.as_deref())?;
    let found = find_f_factor(&h, &spec, &Budget::new(c.budget)).map_err(at_stage("find_f_factor"))?;
    let verified = found.as_ref().map(|f| verify_factor(&h, &spec, f));
    let count = if a.count {
        Some(
            count_f_factors(&h, &spec, &Budget::new(c.budget))
                .map_err(at_stage("count_f_factors"))?
                .to_string(),
        )
    } else {
        None
    };
    let relation = if a.relation {
        if spec.t() != h.k() || spec.pattern().edge_count() != 1 {
            return Err(CliError::Invalid("--relation needs the single-edge pattern".into()));
        }
        Some(matching_zero_cycle_relation(&h, &Budget::new(c.budget)).map_err(at_stage("matching relation"))?)
    } else {
        None
    };
    let params = json!({
        "t": a.t,
        "pattern": a.pattern.as_ref().map(|p| p.display().to_string()),
        "count": a.count,
        "relation": a.relation,
    });
    Ok(Report {
        config: config(c, "factors", Some(&a.input), params),
        result: json!({
            "pattern_t": spec.t(),
            "pattern_edges": spec.pattern().edges(),
            "factor": found,
            "verified": verified,
            "count": count,
            "relation": relation,
        }),
    })
}

fn absorb_classify(c: &Common, a: &AbsorbArgs) -> Result<Report, CliError> {
    let h = load_host(&a.input)?;
    let k = h.k();
    check_ell(k, a.ell)?;
    let cfg = AbsorberConfig::new(a.beta, a.t, k)?;
    let all: Vec<Vertex> = (0..h.n() as Vertex).collect();
    let budget = Budget::new(c.budget);
    let classified = subsets(&all, k - a.ell)
        .into_par_iter()
        .map(|s| classify_set(&h, a.ell, &s, &cfg, &budget).map(|r| (s, r)))
        .collect::<hypercount::Result<Vec<_>>>()
        .map_err(at_stage("classify_set"))?;
    let good = classified.iter().filter(|(_, r)| r.good).count();
    let required = classified.first().map(|(_, r)| r.required.to_string());
    let sets: Vec<Value> = classified
        .iter()
        .map(|(s, r)| json!({"set": s, "count": r.count.to_string(), "good": r.good}))
        .collect();
    let params = json!({"ell": a.ell, "t": a.t, "beta": a.beta.to_string()});
    Ok(Report {
        config: config(c, "absorb-classify", Some(&a.input), params),
        result: json!({
            "required": required,
            "sets": classified.len(),
            "good": good,
            "bad": classified.len() - good,
            "classified": sets,
        }),
    })
}

enum Certificate {
    Order(Vec<Vertex>),
    Copies(Vec<Vec<Vertex>>),
}

fn parse_certificate(text: &str) -> Result<Certificate, CliError> {
    let bad = || CliError::Invalid("certificate is neither a vertex order nor a list of factor copies".into());
    let Ok(value) = serde_json::from_str::<Value>(text) else {
        return text
            .split_whitespace()
            .map(|t| t.parse::<Vertex>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()
            .map(Certificate::Order);
    };
    let value = match value {
        Value::Object(mut m) => m.remove("order").or_else(|| m.remove("copies")).ok_or_else(bad)?,
        other => other,
    };
    if let Ok(order) = serde_json::from_value::<Vec<Vertex>>(value.clone()) {
        return Ok(Certificate::Order(order));
    }
    serde_json::from_value::<Vec<Vec<Vertex>>>(value)
        .map(Certificate::Copies)
        .map_err(|_| bad())
}

fn verify(c: &Common, a: &VerifyArgs) -> Result<Report, CliError> {
    let h = load_host(&a.input)?;
    let k = h.k();
    let cert = parse_certificate(&read(&a.certificate)?)?;
    let structural = |e: hypercount::Error| -> Result<bool, CliError> {
        match e {
            hypercount::Error::InvalidStructure(_) | hypercount::Error::Divisibility { .. } => Ok(false),
            other => Err(other.into()),
        }
    };
    let (valid, order) = match (a.target.target, cert) {
        (TargetKind::Factor, Certificate::Copies(copies)) => {
            let spec = factor_spec(k, a.target.t, a.target.pattern.as_deref())?;
            (verify_factor(&h, &spec, &FactorDecomposition { copies }), None)
        }
        (TargetKind::Factor, Certificate::Order(_)) => {
            return Err(CliError::Invalid("factor certificates are lists of copies".into()))
        }
        (_, Certificate::Copies(_)) => return Err(CliError::Invalid("expected a vertex order".into())),
        (kind, Certificate::Order(order)) => {
            let valid = match kind {
                TargetKind::Cycle | TargetKind::Path => {
                    let ell = a
                        .target
                        .ell
                        .ok_or_else(|| CliError::Invalid("--ell is required".into()))?;
                    check_ell(k, ell)?;
                    if kind == TargetKind::Cycle {
                        match EllCycle::new(k, ell, order.clone()) {
                            Ok(cyc) => order.len() == h.n() && validate_ell_cycle(&h, &cyc)?,
                            Err(e) => structural(e)?,
                        }
                    } else {
                        match EllPath::new(k, ell, order.clone()) {
                            Ok(p) => validate_ell_path(&h, &p)?,
                            Err(e) => structural(e)?,
                        }
                    }
                }
                TargetKind::Power => {
                    let t = a.target.t.ok_or_else(|| CliError::Invalid("--t is required".into()))?;
                    match PowerCycle::new(k, t, order.clone()) {
                        Ok(pc) => order.len() == h.n() && validate_power_cycle(&h, &pc)?,
                        Err(e) => structural(e)?,
                    }
                }
                TargetKind::Factor => unreachable!("handled above"),
            };
            (valid, Some(order))
        }
    };
    let respecting = match (&a.partition, order) {
        (Some(path), Some(order)) if a.target.target != TargetKind::Path => {
            let p = Partition::parse_text(h.n(), &read(path)?)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            Some(order.len() == h.n() && is_respecting(&order, &p)?)
        }
        (Some(_), _) => return Err(CliError::Invalid("--partition applies to cycle certificates".into())),
        (None, _) => None,
    };
    let params = merged(
        target_params(&a.target).as_object().cloned().unwrap_or_default(),
        json!({
            "certificate": a.certificate.display().to_string(),
            "partition": a.partition.as_ref().map(|p| p.display().to_string()),
        }),
    );
    Ok(Report {
        config: config(c, "verify", Some(&a.input), params),
        result: json!({"valid": valid, "respecting": respecting}),
    })
}

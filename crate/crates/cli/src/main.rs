mod format;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use joinmetric::boolean::{check_signed_measure, normalize, parse_bool_expr, zeta_with, Strategy};
use joinmetric::closure::{delta_closure, nabla_closure, tiha};
use joinmetric::fixpoint::{ideal_length, is_fixed_point, sigma_variant_bounds, FixpointOptions, Start, Variant};
use joinmetric::hom::{
    banach_mazur, ell_primes, hom_ideal_length, product_inequality_witness, quotient_category_witness,
    submultiplicativity_witness, Category, Ext, HomLengths,
};
use joinmetric::inequality::{check_inequalities_with, check_table_with, CheckOptions, Flag, MetricFlags};
use joinmetric::length::LengthFn;
use joinmetric::monoid::{Elem, Monoid};
use joinmetric::num::{parse_rational, render, to_f64, Rational};
use joinmetric::quotient::quotient;
use joinmetric::set_model::{random_monotone_instance, random_set_instance, SetModel};
use joinmetric::{DistanceKind, DistanceTable};
use serde_json::{json, Value};

use format::{bail_invalid, instance_to_file, is_invalid, load_category, load_instance, Instance};

/// Information distances on finite abelian idempotent monoids.
///
/// INSTANCE is a JSON instance file or one of the built-ins `fix_p2`, `fix_bad`.
/// Reports go to stdout as JSON, a short summary to stderr.
#[derive(Parser, Debug)]
#[command(name = "joinmetric", version)]
struct Cli {
    /// Render numbers as decimals instead of exact rationals.
    #[arg(long, global = true)]
    float: bool,
    /// Worker threads for exhaustive checks.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    D,
    Sigma,
    Nonmono,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::D => Variant::D,
            VariantArg::Sigma => Variant::Sigma,
            VariantArg::Nonmono => Variant::Nonmono,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RandomKind {
    Set,
    Monotone,
}

#[derive(clap::Args, Debug)]
struct IterArgs {
    #[arg(long, value_enum, default_value = "d")]
    variant: VariantArg,
    /// Also stop once no entry changes by this much.
    #[arg(long, value_parser = parse_rational_arg)]
    tol: Option<Rational>,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the monoid axioms and the length function.
    Validate { instance: String },
    /// Print the distance tables d and σ (or σ_p with --p).
    Distances {
        instance: String,
        /// Exponent p ≥ 1 for σ_p.
        #[arg(long, value_parser = parse_rational_arg)]
        p: Option<Rational>,
    },
    /// Evaluate every inequality flag, with witnesses.
    Check {
        instance: String,
        /// Seed for sampled checks on large instances.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Forced Δ-, ∇- and combined closures of d or σ.
    Close {
        instance: String,
        #[arg(long, value_enum, default_value = "d")]
        variant: VariantArg,
    },
    /// Iterate to the ideal length function.
    Fixpoint {
        instance: String,
        #[command(flatten)]
        iter: IterArgs,
    },
    /// Evaluate ζ on a Boolean expression over the elements.
    Zeta {
        instance: String,
        /// e.g. "{1} & ~{2}" or "({x} | {y}) \ {z}".
        #[arg(long)]
        expr: Option<String>,
        /// Run the signed-measure identities on all non-neutral elements.
        #[arg(long)]
        check: bool,
    },
    /// Metric quotient of d (or of the ideal d with --ideal).
    Quotient {
        instance: String,
        #[arg(long)]
        ideal: bool,
        #[command(flatten)]
        iter: IterArgs,
    },
    /// Hom-set lengths and product inequalities of a category file.
    Hom {
        category: String,
        /// Replace the lengths by the ideal hom lengths.
        #[arg(long)]
        ideal: bool,
        #[arg(long, value_parser = parse_rational_arg)]
        tol: Option<Rational>,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
    },
    /// Banach–Mazur-like distance between objects of a category file.
    BanachMazur {
        category: String,
        /// Object name or index; all pairs when omitted.
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        ideal: bool,
        #[arg(long, value_parser = parse_rational_arg)]
        tol: Option<Rational>,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
    },
    /// Print a seeded random instance file.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "set")]
        kind: RandomKind,
        #[arg(long, default_value_t = 8)]
        max_elements: usize,
        #[arg(long, default_value_t = 6)]
        max_points: usize,
        #[arg(long, default_value_t = 32)]
        max_family: usize,
    },
    /// Closed-form set-model distances (and ζ with --expr) for a `sets` instance.
    Oracle {
        instance: String,
        #[arg(long)]
        expr: Option<String>,
    },
}

fn parse_rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

struct Out {
    float: bool,
}

impl Out {
    fn num(&self, r: &Rational) -> Value {
        if self.float {
            json!(to_f64(r))
        } else {
            Value::String(render(r, false))
        }
    }

    fn ext(&self, e: &Ext) -> Value {
        match e {
            Ext::Finite(r) => self.num(r),
            Ext::Infinite => Value::String("inf".into()),
        }
    }

    fn values(&self, v: &[Rational]) -> Value {
        Value::Array(v.iter().map(|r| self.num(r)).collect())
    }

    fn length(&self, l: &LengthFn) -> Value {
        json!({ "mode": l.mode().to_string(), "labels": l.monoid().labels(), "values": self.values(l.values()) })
    }

    fn table(&self, t: &DistanceTable) -> Value {
        let n = t.monoid().len();
        let rows: Vec<Value> = t.values().chunks(n).map(|r| self.values(r)).collect();
        json!({ "kind": t.kind().to_string(), "labels": t.monoid().labels(), "rows": rows })
    }
}

fn labels(m: &Monoid, xs: &[Elem]) -> Vec<String> {
    xs.iter().map(|&x| m.label(x).to_string()).collect()
}

fn flag(m: &Monoid, f: &Flag) -> Value {
    json!({ "holds": f.holds, "witness": f.witness.as_ref().map(|w| labels(m, w)) })
}

fn flags(m: &Monoid, f: &MetricFlags) -> Value {
    json!({
        "delta": flag(m, &f.delta),
        "second_delta": flag(m, &f.second_delta),
        "nabla": flag(m, &f.nabla),
        "weak_nabla": flag(m, &f.weak_nabla),
        "very_weak_nabla": flag(m, &f.very_weak_nabla),
    })
}

fn check_opts(jobs: usize, seed: u64) -> CheckOptions {
    CheckOptions { jobs: jobs.max(1), seed, ..CheckOptions::default() }
}

fn run_fixpoint(l: &LengthFn, iter: &IterArgs) -> Result<joinmetric::fixpoint::FixpointResult> {
    let opts = FixpointOptions { tol: iter.tol.clone(), max_iter: iter.max_iter, ..FixpointOptions::default() };
    ideal_length(Start::Length(l.clone()), iter.variant.into(), &opts).or_else(bail_invalid)
}

/// Lengths on the category, replaced by the ideal ones when asked.
fn category_lengths(
    path: &str,
    ideal: bool,
    tol: Option<&Rational>,
    max_iter: usize,
) -> Result<(Category, HomLengths, Option<(usize, bool)>)> {
    let loaded = load_category(path)?;
    if !ideal {
        return Ok((loaded.category, loaded.lengths, None));
    }
    let r = hom_ideal_length(&loaded.category, &loaded.lengths, tol, max_iter).or_else(bail_invalid)?;
    Ok((loaded.category, r.lengths, Some((r.iterations, r.exact))))
}

fn object_index(cat: &Category, key: &str) -> Result<usize> {
    if let Some(i) = cat.objects.iter().position(|o| o.name == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < cat.objects.len() => Ok(i),
        _ => bail_invalid(format!("no object {key:?}")),
    }
}

fn set_family_labels(sm: &SetModel) -> Vec<Vec<String>> {
    let pts = sm.instance.points();
    sm.instance
        .family()
        .iter()
        .filter(|&&mask| mask != 0)
        .map(|&mask| (0..pts.len()).filter(|i| mask >> i & 1 == 1).map(|i| pts[i].clone()).collect())
        .collect()
}

/// Runs one subcommand; returns the JSON report, a summary line and whether
/// the outcome counts as a validation failure.
fn run(cli: &Cli) -> Result<(Value, String, bool)> {
    let out = Out { float: cli.float };
    Ok(match &cli.command {
        Command::Validate { instance } => {
            let inst = load_instance(instance)?;
            let l = inst.length()?;
            let summary = format!("monoid OK, length OK ({})", l.mode());
            (json!({ "elements": inst.monoid.len(), "length": out.length(l) }), summary, false)
        }
        Command::Distances { instance, p } => {
            let inst = load_instance(instance)?;
            let l = inst.length()?;
            let mut report = json!({
                "d": out.table(&l.table(DistanceKind::D)),
                "sigma": out.table(&l.table(DistanceKind::Sigma)),
            });
            if let Some(p) = p {
                let t = l.sigma_p_table(to_f64(p)).or_else(bail_invalid)?;
                let n = t.monoid().len();
                let rows: Vec<Vec<f64>> = t.values().chunks(n).map(<[f64]>::to_vec).collect();
                report["sigma_p"] = json!({ "p": out.num(p), "labels": t.monoid().labels(), "rows": rows });
            }
            (report, format!("{} elements", inst.monoid.len()), false)
        }
        Command::Check { instance, seed } => {
            let inst = load_instance(instance)?;
            let l = inst.length()?;
            let r = check_inequalities_with(l, &check_opts(cli.jobs, *seed));
            let m = l.monoid();
            let summary = format!(
                "d: delta {}, nabla {}",
                if r.d.delta.holds { "holds" } else { "fails" },
                if r.d.nabla.holds { "holds" } else { "fails" }
            );
            let report = json!({
                "mode": r.mode.to_string(),
                "sampled": r.sampled,
                "d": flags(m, &r.d),
                "sigma": r.sigma.as_ref().map(|f| flags(m, f)),
                "delta_increasing": r.delta_increasing.as_ref().map(|f| flag(m, f)),
                "intersection_increasing": r.intersection_increasing.as_ref().map(|f| flag(m, f)),
                "equivalent_conditions": r.equivalence_flags(),
            });
            (report, summary, false)
        }
        Command::Close { instance, variant } => {
            let inst = load_instance(instance)?;
            let t = Variant::from(*variant).table_of(inst.length()?);
            let (tilde, hat, both) = (delta_closure(&t), nabla_closure(&t), tiha(&t));
            let f = check_table_with(&both, &check_opts(cli.jobs, 0));
            let report = json!({
                "input": out.table(&t),
                "delta_closure": out.table(&tilde),
                "nabla_closure": out.table(&hat),
                "closure": out.table(&both),
                "closure_flags": flags(&inst.monoid, &f),
                "extracted_length": out.values(&both.extract_length()),
            });
            (report, format!("closure changed input: {}", both != t), false)
        }
        Command::Fixpoint { instance, iter } => {
            let inst = load_instance(instance)?;
            let r = run_fixpoint(inst.length()?, iter)?;
            let m = r.length.monoid();
            let d_inf = r.length.table(DistanceKind::D);
            let steps: Vec<Value> = r
                .trace
                .steps
                .iter()
                .map(|s| {
                    json!({
                        "length": out.values(&s.length),
                        "max_change": out.num(&s.max_change),
                        "closure_is_length_table": s.tiha_is_length_table,
                    })
                })
                .collect();
            let mut report = json!({
                "variant": r.trace.variant.to_string(),
                "iterations": r.trace.iterations,
                "converged": r.trace.converged,
                "descending": r.trace.descending,
                "dropped_steps": r.trace.dropped,
                "steps": steps,
                "length": out.length(&r.length),
                "table": out.table(&r.table),
                "d_flags": flags(m, &check_table_with(&d_inf, &check_opts(cli.jobs, 0))),
                "fixed_point": (r.trace.variant != Variant::Nonmono).then(|| {
                    let f = is_fixed_point(&r.length);
                    json!({ "fixed": f.is_fixed(), "checks_agree": f.agree() })
                }),
                "ratio_min_mean": r.ratio_min_mean.as_ref().map(|(a, b)| json!([out.num(a), out.num(b)])),
            });
            if r.trace.variant == Variant::Sigma {
                let b = sigma_variant_bounds(&r);
                report["sigma_bounds"] = json!({
                    "steps_hold": b.steps_hold,
                    "step_witness": b.step_witness,
                    "limit_holds": b.limit_holds,
                    "strict_somewhere": b.strict_somewhere,
                });
            }
            (report, format!("converged after {} iterations", r.trace.iterations), false)
        }
        Command::Zeta { instance, expr, check } => {
            let inst = load_instance(instance)?;
            let l = inst.length()?;
            let mut report = json!({});
            let mut summary = String::new();
            let mut failed = false;
            if let Some(text) = expr {
                let e = parse_bool_expr(text, &inst.monoid).or_else(bail_invalid)?;
                let z = zeta_with(l, &e, Strategy::TruthTable).or_else(bail_invalid)?;
                let terms = normalize(&e, Strategy::Shannon).or_else(bail_invalid)?.terms.len();
                report["expr"] = json!(e.display(&inst.monoid).to_string());
                report["zeta"] = out.num(&z);
                report["dnf_terms"] = json!(terms);
                summary = format!("zeta = {}", render(&z, cli.float));
            }
            if *check {
                let atoms: Vec<Elem> = inst.monoid.elements().filter(|&x| x != inst.monoid.neutral()).collect();
                let r = check_signed_measure(l, &atoms);
                failed = !r.ok();
                report["signed_measure"] =
                    json!({ "checked": r.checked, "failures": r.failures, "positivity": r.positivity, "ok": r.ok() });
                summary = format!("{summary}{}signed measure {}", if summary.is_empty() { "" } else { ", " }, if failed { "FAILS" } else { "OK" });
            }
            if expr.is_none() && !check {
                return bail_invalid("give --expr and/or --check");
            }
            (report, summary, failed)
        }
        Command::Quotient { instance, ideal, iter } => {
            let inst = load_instance(instance)?;
            let l = inst.length()?;
            let t = if *ideal { run_fixpoint(l, iter)?.table } else { Variant::from(iter.variant).table_of(l) };
            let q = quotient(&t).or_else(bail_invalid)?;
            let classes: Vec<Vec<String>> = q.classes.iter().map(|c| labels(&inst.monoid, c)).collect();
            let report = json!({
                "classes": classes,
                "projection": q.projection,
                "quotient": instance_to_file(&q.quotient, Some(&q.induced_length)),
                "metric": out.table(&q.metric),
                "faithful": q.metric.is_faithful(),
                "well_defined": q.well_defined,
                "induced_length_matches": q.induced_length_matches(),
            });
            (report, format!("{} classes", q.classes.len()), !q.well_defined)
        }
        Command::Hom { category, ideal, tol, max_iter } => {
            let (cat, lengths, iterations) = category_lengths(category, *ideal, tol.as_ref(), *max_iter)?;
            let homsets: Vec<Value> = cat
                .homsets
                .iter()
                .enumerate()
                .map(|(p, hs)| {
                    json!({
                        "source": cat.objects[hs.source].name,
                        "target": cat.objects[hs.target].name,
                        "maps": hs.monoid.labels(),
                        "ell_prime": ell_primes(&cat, hs).iter().map(|e| out.ext(e)).collect::<Vec<_>>(),
                        "length": out.values(lengths.ell[p].values()),
                    })
                })
                .collect();
            let witness = product_inequality_witness(&cat, &lengths.d, &lengths.ell);
            let ell = &lengths.ell;
            let submult = submultiplicativity_witness(&cat, &|p, x| ell[p].value(x).clone());
            let qcat = quotient_category_witness(&cat, &lengths.d);
            let report = json!({
                "objects": cat.objects.iter().map(|o| o.name.clone()).collect::<Vec<_>>(),
                "homsets": homsets,
                "ideal_iterations": iterations.map(|(n, _)| n),
                "ideal_exact": iterations.map(|(_, e)| e),
                "distribution_laws": cat.distribution_laws_hold(),
                "product_inequalities": witness.is_none(),
                "product_witness": witness.map(|w| json!([w.left, w.homset, w.u, w.v, w.factor_homset, w.x])),
                "submultiplicative": submult.is_none(),
                "submultiplicativity_witness": submult,
                "quotient_category": qcat.is_none(),
            });
            let maps: usize = cat.homsets.iter().map(|h| h.len()).sum();
            (report, format!("{} objects, {} maps", cat.objects.len(), maps), false)
        }
        Command::BanachMazur { category, from, to, ideal, tol, max_iter } => {
            let (cat, lengths, _) = category_lengths(category, *ideal, tol.as_ref(), *max_iter)?;
            let pairs: Vec<(usize, usize)> = match (from, to) {
                (Some(a), Some(b)) => vec![(object_index(&cat, a)?, object_index(&cat, b)?)],
                (None, None) => {
                    let k = cat.objects.len();
                    (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).collect()
                }
                _ => return bail_invalid("give both --from and --to, or neither"),
            };
            let entries: Vec<Value> = pairs
                .iter()
                .map(|&(i, j)| {
                    let bm = banach_mazur(&cat, &lengths.ell, i, j);
                    let log = if bm.log.is_finite() { json!(bm.log) } else { json!(bm.log.to_string()) };
                    json!({
                        "from": cat.objects[i].name,
                        "to": cat.objects[j].name,
                        "product": bm.product.as_ref().map(|r| out.num(r)),
                        "log": log,
                    })
                })
                .collect();
            (json!({ "distances": entries }), format!("{} pairs", pairs.len()), false)
        }
        Command::Random { seed, kind, max_elements, max_points, max_family } => match kind {
            RandomKind::Set => {
                let sm = random_set_instance(*seed, *max_points, *max_family);
                let weights: serde_json::Map<String, Value> = sm
                    .instance
                    .points()
                    .iter()
                    .zip(sm.instance.weights())
                    .map(|(p, w)| (p.clone(), Value::String(w.to_string())))
                    .collect();
                let report = json!({ "sets": { "sets": set_family_labels(&sm), "weights": weights } });
                (report, format!("set instance with {} elements", sm.monoid.len()), false)
            }
            RandomKind::Monotone => {
                let (m, l) = random_monotone_instance(*seed, *max_elements);
                let report = serde_json::to_value(instance_to_file(&m, Some(&l)))?;
                (report, format!("monotone instance with {} elements", m.len()), false)
            }
        },
        Command::Oracle { instance, expr } => {
            let inst = load_instance(instance)?;
            let Some(sm) = &inst.set_model else {
                return bail_invalid("oracle needs an instance given by a `sets` block");
            };
            let Instance { monoid, .. } = &inst;
            let n = monoid.len();
            let pairs = || (0..n).flat_map(|a| (0..n).map(move |b| (a, b)));
            let od: Vec<Rational> = pairs().map(|(a, b)| sm.instance.oracle_d(a, b)).collect();
            let os: Vec<Rational> = pairs().map(|(a, b)| sm.instance.oracle_sigma(a, b)).collect();
            let l = &sm.length;
            let d_ok = l.table(DistanceKind::D).values() == &od[..];
            let s_ok = l.table(DistanceKind::Sigma).values() == &os[..];
            let table = |v: &[Rational]| -> Value { Value::Array(v.chunks(n).map(|r| out.values(r)).collect()) };
            let mut report = json!({
                "labels": monoid.labels(),
                "oracle_d": table(&od),
                "oracle_sigma": table(&os),
                "d_matches": d_ok,
                "sigma_matches": s_ok,
            });
            let mut ok = d_ok && s_ok;
            if let Some(text) = expr {
                let e = parse_bool_expr(text, monoid).or_else(bail_invalid)?;
                let oz = sm.instance.oracle_zeta(&e).or_else(bail_invalid)?;
                let z = zeta_with(l, &e, Strategy::TruthTable).or_else(bail_invalid)?;
                report["oracle_zeta"] = out.num(&oz);
                report["zeta"] = out.num(&z);
                report["zeta_matches"] = json!(oz == z);
                ok &= oz == z;
            }
            (report, format!("oracle {}", if ok { "agrees" } else { "DISAGREES" }), !ok)
        }
    })
}

/// Missing or unreadable files are usage errors.
fn is_usage(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).context("joinmetric") {
        Ok((report, summary, failed)) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("JSON values serialize"));
            eprintln!("{summary}");
            ExitCode::from(u8::from(failed))
        }
        Err(e) => {
            let code = if is_invalid(&e) {
                println!("{}", json!({ "error": format!("{:#}", e.root_cause()) }));
                1
            } else if is_usage(&e) {
                2
            } else {
                1
            };
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

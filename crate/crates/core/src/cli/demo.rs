use std::sync::Arc;

use clap::ValueEnum;
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use crate::alignment::{alignment_tau, library_cases};
use crate::convex::ConvexFn;
use crate::error::Result;
use crate::grid::Grid;
use crate::mono::sequence::{head, pair, tail, SeqKind};
use crate::norm::BaseNorm;
use crate::optim::{uniform_vec, Budget};
use crate::report::{Record, Report, Verdict};
use crate::sets::{certify_quasidense, density_gap, LPositiveSet};
use crate::space::SnSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoName {
    Tail,
    HeadsAndTails,
    Gossez,
    Rockafellar,
    Alignment,
}

const TAIL_N: usize = 60;
const SEQ_N: usize = 100;
const SEQ_SAMPLES: usize = 1000;

fn e_star(n: usize) -> DVector<f64> {
    let mut p = vec![0.0; n];
    p.extend(vec![1.0; n + 1]);
    DVector::from_vec(p)
}

fn tail_demo(budget: &Budget, report: &mut Report) -> Result<()> {
    let set = LPositiveSet::sequence_operator(SeqKind::Tail, TAIL_N)?;
    let g = density_gap(&set, &e_star(TAIL_N), budget)?;
    let worst = g.restart_values.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Record::new(
        "r_L((x, Tx) - (0, e*)) stays above 1/4",
        "tail-operator-bound",
        Verdict::from_bool(worst >= 0.25 - 1e-9),
        Some(worst),
        json!({ "n": TAIL_N, "restart_values": g.restart_values }),
    ));
    report.push(Record::new(
        "best value found",
        "tail-operator-bound",
        Verdict::Info,
        Some(g.gap),
        json!({ "lower_bound": g.lower_bound }),
    ));
    let cert = certify_quasidense(&set, &[e_star(TAIL_N)], budget)?;
    report.push(Record::new(
        "tail operator is not quasidense",
        "tail-operator-bound",
        Verdict::from_bool(cert.is_refuted()),
        Some(cert.max_gap()),
        json!({ "verdict": cert.verdict }),
    ));
    Ok(())
}

fn samples(budget: &Budget, stream: u64) -> Vec<Vec<f64>> {
    let mut r = budget.rng(stream);
    (0..SEQ_SAMPLES).map(|_| uniform_vec(&mut r, SEQ_N, 1.0)).collect()
}

fn heads_and_tails(budget: &Budget, report: &mut Report) -> Result<()> {
    let xs = samples(budget, 0x4ead);
    let mut diff: f64 = 0.0;
    let mut margin = f64::INFINITY;
    for x in &xs {
        let t = pair(x, &tail(x));
        let h = pair(x, &head(x));
        let sigma: f64 = x.iter().sum();
        diff = diff.max((h - t).abs());
        margin = margin.min(t - 0.5 * sigma * sigma);
    }
    report.push(Record::new(
        "<x, Hx> = <x, Tx>",
        "heads-and-tails-identity",
        Verdict::from_bool(diff <= 1e-12),
        Some(diff),
        json!({ "n": SEQ_N, "samples": SEQ_SAMPLES }),
    ));
    report.push(Record::new(
        "<x, Tx> >= sigma^2 / 2",
        "tail-pairing-bound",
        Verdict::from_bool(margin >= -1e-12),
        Some(margin),
        json!({ "n": SEQ_N, "samples": SEQ_SAMPLES }),
    ));
    Ok(())
}

fn gossez(budget: &Budget, report: &mut Report) -> Result<()> {
    let g = SeqKind::GOSSEZ;
    let xs = samples(budget, 0x6055);
    let worst = xs.iter().map(|x| pair(x, &g.apply(x)).abs()).fold(0.0, f64::max);
    report.push(Record::new(
        "<x, Gx> = 0 for G = T - H",
        "gossez-operator",
        Verdict::from_bool(worst <= 1e-12),
        Some(worst),
        json!({ "n": SEQ_N, "samples": SEQ_SAMPLES }),
    ));
    let n = 20;
    let set = LPositiveSet::sequence_operator(g, n)?;
    let gap = density_gap(&set, &e_star(n), budget)?;
    report.push(Record::new(
        "density gap of G at (0, e*)",
        "gossez-operator",
        Verdict::Info,
        Some(gap.gap),
        json!({ "n": n, "lower_bound": gap.lower_bound }),
    ));
    let neg = LPositiveSet::sequence_operator(SeqKind::Combo(-1.0, 1.0), n)?;
    let gap = density_gap(&neg, &e_star(n), budget)?;
    report.push(Record::new(
        "density gap of -G at (0, e*)",
        "gossez-operator",
        Verdict::Info,
        Some(gap.gap),
        json!({ "n": n }),
    ));
    Ok(())
}

fn rockafellar(budget: &Budget, report: &mut Report) -> Result<()> {
    let space = Arc::new(SnSpace::product(1, BaseNorm::Euclidean));
    let probes = Grid::cube(2, -2.0, 2.0, 0.5)?.points();
    for (name, k) in [
        ("x^2 / 2", ConvexFn::half_square(1)),
        ("|x|", ConvexFn::abs()),
        ("indicator of [0, 1]", ConvexFn::indicator_box(vec![0.0], vec![1.0])),
    ] {
        let set = LPositiveSet::subdifferential_graph(space.clone(), k)?;
        let cert = certify_quasidense(&set, &probes, budget)?;
        let max = cert.max_gap();
        report.push(Record::new(
            format!("subdifferential of {name} is quasidense"),
            "subdifferential-quasidense",
            Verdict::from_bool(max <= 1e-6),
            Some(max),
            json!({ "probes": probes.len() }),
        ));
    }
    Ok(())
}

fn alignment(budget: &Budget, report: &mut Report) -> Result<()> {
    for c in library_cases() {
        let r = alignment_tau(&c.set, &c.w, &c.ws, c.alpha, c.beta, budget)?;
        let ok = r.spread <= 1e-4 && r.residual() <= 1e-4;
        report.push(Record::new(
            format!("tau for {}", c.name),
            "negative-alignment-tau",
            Verdict::from_bool(ok),
            Some(r.tau),
            json!({ "alpha": c.alpha, "beta": c.beta, "w": c.w, "w_star": c.ws, "spread": r.spread, "residual": r.residual(), "witness": r.witness }),
        ));
    }
    Ok(())
}

pub fn run(name: DemoName, budget: &Budget, report: &mut Report) -> Result<()> {
    match name {
        DemoName::Tail => tail_demo(budget, report),
        DemoName::HeadsAndTails => heads_and_tails(budget, report),
        DemoName::Gossez => gossez(budget, report),
        DemoName::Rockafellar => rockafellar(budget, report),
        DemoName::Alignment => alignment(budget, report),
    }
}

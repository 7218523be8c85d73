//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero on any failure outside `KNOWN_FAILURES`.
//!
//! Tolerances are pinned here rather than taken from library constants, and
//! every derived reference value is recomputed in this file.

use std::process::ExitCode;

use rand::Rng;
use replab::bounds::slud_lower_bound;
use replab::experiments::{
    default_grids, figure3_surface, occupancy_campaign, oracle_agreement_campaign, pruning_probability_campaign,
    size_growth_campaign, CampaignConfig, OracleCheckConfig, PruneProbMode, DEFAULT_LAMBDA_GRID,
};
use replab::generators::{
    gen_figure1_instance, leaf_biased_set, noise_pruning_set, random_tree, safe_node_tree, NoiseModel, Routing,
    TreeShape,
};
use replab::normal::normal_cdf;
use replab::oracle::{optimal_pruning, DEFAULT_LEAF_CAP};
use replab::prune::trace_assert_theorem2;
use replab::rng::trial_rng;
use replab::structure::{corollary3_holds, safe_nodes, theorem4_predicate};
use replab::{iterative_prune, rep_prune, rep_prune_train_labeled, tree_json, Labeling};

mod common;
use common::{exact_upper_tail, phi_series};

const SEED: u64 = 20_240_601;
/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_900_4;

/// The per-p minimum of the uniform-routing surface leaves `[1.0, 1.5]` for
/// most p; the measured band is reported on the line.
const KNOWN_FAILURES: &[&str] = &["9c"];

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn check(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        let known = KNOWN_FAILURES.contains(&id);
        let status = if pass { "PASS" } else { "FAIL" };
        let note = if !pass && known { "  [known failure, see README]" } else { "" };
        println!("{status} {id:<3} {name}: {detail}{note}");
        if !pass && !known {
            self.failed.push(id.to_string());
        }
    }
}

fn oracle_equivalence(s: &mut Suite) {
    let report = oracle_agreement_campaign(OracleCheckConfig::new(5000, SEED)).unwrap();
    s.check(
        "1",
        "sweep equals brute-force optimum",
        report.instances >= 1000 && report.disagreements == 0 && report.agreements == report.instances,
        format!(
            "{} instances (<= {} leaves), {} disagreements",
            report.instances, report.max_leaves, report.disagreements
        ),
    );
}

fn trace_invariants(s: &mut Suite) {
    let total = 10_000u64;
    let mut bad = 0u64;
    let mut nodes = 0usize;
    for i in 0..total {
        let rng = &mut trial_rng(SEED, 2, i);
        let shape = [TreeShape::Uniform, TreeShape::RandomBst, TreeShape::Balanced][i as usize % 3];
        let tree = random_tree(rng.gen_range(0..40), shape, rng);
        let n = rng.gen_range(0..=200);
        let fidelity = rng.gen_range(0.5..=1.0);
        let data = leaf_biased_set(&tree, n, fidelity, rng).unwrap();
        let t = tree.classified(&data).unwrap();
        nodes += t.len();
        let out = rep_prune(&t).unwrap();
        if !trace_assert_theorem2(&out.trace, &t).unwrap() || !corollary3_holds(&out.trace, &t).unwrap() {
            bad += 1;
        }
    }
    s.check(
        "2",
        "retention invariants on every trace",
        bad == 0,
        format!("{total} traces, {nodes} nodes, {bad} violations"),
    );
}

fn collapse_characterisation(s: &mut Suite) {
    let total = 12_000u64;
    let (mut mismatches, mut collapsed) = (0u64, 0u64);
    for i in 0..total {
        let rng = &mut trial_rng(SEED, 3, i);
        let k = 1 + (i % 8) as usize;
        let p = [0.55, 0.6, 0.75][(i / 8 % 3) as usize];
        let tree = safe_node_tree(k, 2, rng).unwrap();
        let n = rng.gen_range(1..=64);
        let data = noise_pruning_set(&tree, &NoiseModel::new(p, Routing::Direct).unwrap(), n, rng).unwrap();
        let t = tree.classified(&data).unwrap();
        let out = rep_prune(&t).unwrap();
        let verdict = theorem4_predicate(&t, &out.tree, &safe_nodes(&t).unwrap()).unwrap();
        collapsed += u64::from(out.tree.is_single_leaf());
        mismatches += u64::from(verdict.collapses != out.tree.is_single_leaf());
    }
    s.check(
        "3",
        "collapse iff safe-node predicate",
        mismatches == 0 && collapsed > 0 && collapsed < total,
        format!("{total} instances, {collapsed} collapsed, {mismatches} mismatches"),
    );
}

/// `Φ((p − ½)r / √(r p (1 − p)))^(k/2)` with `r = 2n/k`, via the series Φ.
fn collapse_bound(n: u64, k: u64, p: f64) -> f64 {
    let r = 2.0 * n as f64 / k as f64;
    phi_series((p - 0.5) * r / (r * p * (1.0 - p)).sqrt()).powf(k as f64 / 2.0)
}

fn collapse_bound_domination(s: &mut Suite) {
    let (k, n, trials) = (8u64, 64u64, 100_000u64);
    for (idx, p) in [0.55, 0.6, 0.7].into_iter().enumerate() {
        let r = pruning_probability_campaign(k, n, p, PruneProbMode::EventLevel, CampaignConfig::new(trials, SEED))
            .unwrap();
        let bound = collapse_bound(n, k, p);
        let est = r.pruned.successes as f64 / trials as f64;
        let ci_high = est + Z99 * (est * (1.0 - est) / trials as f64).sqrt();
        let consistent = (r.bound - bound).abs() < 1e-12 && (r.pruned.ci_high - ci_high).abs() < 1e-12;
        s.check(
            &format!("4{}", ['a', 'b', 'c'][idx]),
            "collapse frequency below bound",
            r.trials == trials && consistent && ci_high <= bound,
            format!("k={k} n={n} p={p}: estimate {est:.5}, 99% upper {ci_high:.5} <= bound {bound:.5}"),
        );
    }
}

fn slud_validity(s: &mut Suite) {
    let (mut checked, mut worst) = (0u64, f64::NEG_INFINITY);
    for m in 1..=30u64 {
        for qi in 1..=10 {
            let q = qi as f64 * 0.05;
            let (lo, hi) = (m as f64 * q, m as f64 * (1.0 - q));
            for h in lo.ceil() as u64..=hi.floor() as u64 {
                let h = h as f64;
                let Ok(bound) = slud_lower_bound(m, q, h) else { continue };
                worst = worst.max(bound - exact_upper_tail(m, q, h));
                checked += 1;
            }
        }
    }
    s.check(
        "5",
        "normal lower bound under exact binomial tail",
        checked > 1000 && worst <= 1e-12,
        format!("{checked} (m, q, integer h) points, max bound - exact = {worst:.3e}"),
    );
}

fn growth_rate(s: &mut Suite) {
    let p = 0.5;
    let t_list = [51usize, 101, 201, 401];
    let r = size_growth_campaign(p, &t_list, CampaignConfig::new(2000, SEED), None).unwrap();
    let mut worst_z = 0.0f64;
    for row in &r.rows {
        let predicted = 2.0 * (row.t as f64 - 1.0) * p * (1.0 - p) + 1.0;
        worst_z = worst_z.max((row.mean_leaves - predicted).abs() / row.std_err);
    }
    let at_101 = r.rows.iter().find(|row| row.t == 101).map(|row| row.mean_leaves).unwrap();
    let slope = r.fit.unwrap().slope;
    let target = 2.0 * p * (1.0 - p);
    let rel = (slope - target).abs() / target;
    s.check(
        "6a",
        "mean leaf count of minimal trees",
        worst_z <= 3.0,
        format!("reps 2000, t {t_list:?}: max |z| = {worst_z:.2}, mean at t=101 {at_101:.2} (predicted 51.0)"),
    );
    s.check(
        "6b",
        "growth slope",
        rel <= 0.05,
        format!("slope {slope:.4} vs {target}, relative error {rel:.4}"),
    );
}

fn empty_bins(s: &mut Suite) {
    let (k, n) = (100u64, 500u64);
    let r = occupancy_campaign(k, n, 1.0, &[], CampaignConfig::new(100_000, SEED)).unwrap();
    let exact = 100.0 * 0.99f64.powi(500);
    let z = (r.empty.mean - exact).abs() / r.empty.std_err;
    let gap = exact - 100.0 * (-5.0f64).exp();
    let gap_err = (r.empty_approx_gap - gap).abs();
    s.check(
        "7a",
        "mean empty count",
        z <= 3.0,
        format!("mean {:.5} vs {exact:.5}, |z| = {z:.2}", r.empty.mean),
    );
    s.check(
        "7b",
        "gap to exponential approximation",
        gap_err <= 1e-12,
        format!("reported {:.15}, direct {gap:.15}", r.empty_approx_gap),
    );
}

fn concentration(s: &mut Suite) {
    let (k, n) = (100u64, 500u64);
    let r = occupancy_campaign(k, n, 1.0, &DEFAULT_LAMBDA_GRID, CampaignConfig::new(100_000, SEED)).unwrap();
    let mu = 100.0 * 0.99f64.powi(500);
    let (kf, nf) = (k as f64, n as f64);
    let (mut ok, mut consistent) = (true, true);
    let mut tightest = (f64::INFINITY, 0.0);
    for row in &r.deviations {
        let l2 = row.lambda * row.lambda;
        let q_bound = 2.0 * (-2.0 * l2 / nf).exp();
        let z_bound = 2.0 * (-l2 * (kf - 0.5) / (kf * kf - mu * mu)).exp();
        let p_bound = 2.0 * (-l2 / (2.0 * nf)).exp() + 2.0 * (-l2 * (kf - 0.5) / (4.0 * (kf * kf - mu * mu))).exp();
        consistent &= [(row.small_bound, q_bound), (row.empty_bound, z_bound), (row.difference_bound, p_bound)]
            .iter()
            .all(|(a, b)| (a - b).abs() <= 1e-12);
        for (prop, bound) in [(row.small, q_bound), (row.empty, z_bound), (row.difference, p_bound)] {
            ok &= prop.ci_high <= bound;
            if bound - prop.ci_high < tightest.0 {
                tightest = (bound - prop.ci_high, row.lambda);
            }
        }
    }
    s.check(
        "8",
        "deviation bounds dominate",
        ok && consistent,
        format!(
            "{} lambdas x 3 statistics, smallest margin {:.4} at lambda {}",
            r.deviations.len(),
            tightest.0,
            tightest.1
        ),
    );
}

/// The uniform-routing bound recomputed with the series Φ.
fn surface_value(n: u64, k: u64, p: f64, c: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let m = nf / kf;
    let eq = kf * phi_series((c - 1.0) * m / (m * (1.0 - 1.0 / kf)).sqrt());
    let ep = eq - kf * (-m).exp();
    if ep <= 0.0 {
        return 1.0;
    }
    let r = c * m;
    let base = if p == 1.0 { 1.0 } else { phi_series((p - 0.5) * r / (r * p * (1.0 - p)).sqrt()) };
    base.powf(ep)
}

fn surface(s: &mut Suite) {
    let (k, n) = (100u64, 500u64);
    let (ps, cs) = default_grids();
    let surf = figure3_surface(k, n, &ps, &cs).unwrap();
    let mut worst = 0.0f64;
    let mut v = vec![vec![0.0; cs.len()]; ps.len()];
    for (i, &p) in ps.iter().enumerate() {
        for (j, &c) in cs.iter().enumerate() {
            v[i][j] = surface_value(n, k, p, c);
            worst = worst.max((v[i][j] - surf.bound(i, j)).abs());
        }
    }
    let claims = surf.claims();

    let plateau = (0..ps.len())
        .filter(|&i| ps[i] <= 0.7 + 1e-12)
        .flat_map(|i| (0..cs.len()).filter(|&j| cs[j] >= 1.0 - 1e-12).map(move |j| (i, j)))
        .map(|(i, j)| v[i][j])
        .fold(0.0, f64::max);
    let varying: Vec<usize> = (0..ps.len()).filter(|&i| v[i].iter().any(|&x| x != v[i][0])).collect();
    let small_c = varying.iter().map(|&i| v[i][0]).fold(f64::INFINITY, f64::min);
    let j1 = cs.iter().position(|&c| (c - 1.0).abs() < 1e-12).unwrap();
    let at = |p: f64| ps.iter().position(|&x| (x - p).abs() < 1e-12).unwrap();
    let (low, mid, high) = (v[at(0.7)][j1], v[at(0.76)][j1], v[at(0.84)][j1]);
    let argmins: Vec<(f64, f64)> = varying
        .iter()
        .map(|&i| {
            let j = (0..cs.len()).min_by(|&a, &b| v[i][a].total_cmp(&v[i][b])).unwrap();
            (ps[i], cs[j])
        })
        .collect();
    let inside: Vec<f64> = argmins.iter().filter(|(_, c)| (1.0..=1.5 + 1e-12).contains(c)).map(|(p, _)| *p).collect();

    s.check(
        "9",
        "surface values",
        worst <= 1e-9,
        format!("{}x{} grid, max difference from series recomputation {worst:.2e}", ps.len(), cs.len()),
    );
    s.check(
        "9a",
        "plateau for moderate p and c",
        plateau <= 1e-3 && claims.plateau_holds,
        format!("max bound over p <= 0.7, c in [1, 2] is {plateau:.2e}"),
    );
    s.check(
        "9b",
        "steep rise as c -> 0 and around p = 0.75",
        small_c >= 0.25 && low < 1e-3 && high > 0.25 && low < mid && mid < high && claims.small_c_rise_holds
            && claims.p_rise_holds,
        format!("min bound at c = {} is {small_c:.3}; at c = 1: p 0.70 {low:.2e}, 0.76 {mid:.3}, 0.84 {high:.3}", cs[0]),
    );
    let band = inside.first().zip(inside.last());
    let sample: Vec<String> = argmins
        .iter()
        .filter(|(p, _)| [0.55, 0.6, 0.7, 0.8, 0.9].iter().any(|x| (x - p).abs() < 1e-12))
        .map(|(p, c)| format!("{p}->{c}"))
        .collect();
    s.check(
        "9c",
        "per-p minimum over c inside [1.0, 1.5]",
        inside.len() == argmins.len() && claims.minimum_in_band_holds,
        format!(
            "{}/{} rows inside, band p in {:?}; argmin c: {}",
            inside.len(),
            argmins.len(),
            band.map(|(a, b)| (*a, *b)),
            sample.join(" ")
        ),
    );
    assert_eq!(claims.minimum_in_band_holds, inside.len() == argmins.len());
    let counts: Vec<String> =
        surf.contours.iter().map(|c| format!("{}: {} polylines", c.level, c.polylines.len())).collect();
    s.check(
        "9d",
        "0.25 and 0.5 level curves",
        surf.contours.len() == 2 && claims.contours_emitted,
        counts.join(", "),
    );
}

fn divergence(s: &mut Suite) {
    let (tree, data) = gen_figure1_instance();
    let t = tree.classified(&data).unwrap();
    let train = rep_prune_train_labeled(&t).unwrap();
    let rep = rep_prune(&t).unwrap();
    let train_ok = train.tree.is_single_leaf() && train.tree.root().label() == Some(0) && train.error == 2;
    let rep_ok = rep.tree.len() == 3 && rep.error == 0 && rep.tree.leaf_count() == 2;
    s.check(
        "10a",
        "labeling variants diverge",
        train_ok && rep_ok,
        format!(
            "train-labeled: {} node(s), {} errors; pruning-labeled: {} nodes, {} errors",
            train.tree.len(),
            train.error,
            rep.tree.len(),
            rep.error
        ),
    );

    // Persist the first witness and re-check it from disk.
    let report = oracle_agreement_campaign(OracleCheckConfig::new(5000, SEED)).unwrap();
    let persisted = report.first_iterative_witness.as_ref().map(|w| {
        let path = std::env::temp_dir().join(format!("replab_iterative_witness_{}.json", std::process::id()));
        std::fs::write(&path, serde_json::to_string(&w.tree).unwrap()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        tree_json::from_str(&text).unwrap()
    });
    let recheck = persisted.map(|t| {
        let it = iterative_prune(&t).unwrap();
        let best = optimal_pruning(&t, Labeling::PruningMajority, DEFAULT_LEAF_CAP).unwrap();
        (it.error, best.best_error)
    });
    s.check(
        "10b",
        "iterative variant can be suboptimal",
        report.iterative_suboptimal >= 1 && matches!(recheck, Some((a, b)) if a > b),
        format!(
            "{} of {} instances; first witness rechecked from disk: iterative/optimal errors {:?}",
            report.iterative_suboptimal, report.instances, recheck
        ),
    );
}

fn normal_kernel(s: &mut Suite) {
    let rng = &mut trial_rng(SEED, 11, 0);
    let (mut worst, mut worst_sym) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        let x = if i < 400 { -10.0 + 20.0 * i as f64 / 399.0 } else { rng.gen_range(-12.0..12.0) };
        worst = worst.max((normal_cdf(x) - phi_series(x)).abs());
        worst_sym = worst_sym.max((normal_cdf(x) + normal_cdf(-x) - 1.0).abs());
    }
    s.check(
        "11",
        "normal CDF accuracy and symmetry",
        worst <= 1e-12 && worst_sym <= 1e-12,
        format!("1000 points: max error {worst:.2e}, max symmetry defect {worst_sym:.2e}"),
    );
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: Vec::new() };
    oracle_equivalence(&mut suite);
    trace_invariants(&mut suite);
    collapse_characterisation(&mut suite);
    collapse_bound_domination(&mut suite);
    slud_validity(&mut suite);
    growth_rate(&mut suite);
    empty_bins(&mut suite);
    concentration(&mut suite);
    surface(&mut suite);
    divergence(&mut suite);
    normal_kernel(&mut suite);
    if suite.failed.is_empty() {
        println!("acceptance: all criteria pass apart from known failures {KNOWN_FAILURES:?}");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {:?}", suite.failed);
        ExitCode::FAILURE
    }
}

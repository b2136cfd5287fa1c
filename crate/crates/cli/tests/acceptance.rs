//! Acceptance suite: one PASS/FAIL line per criterion, exit status nonzero
//! if any fails. Runs without the test harness so lines always print.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gwsot_core::agents::{ScriptedAgent, ScriptedPolicy};
use gwsot_core::grid::{apply_action, is_correct, manhattan, max_steps};
use gwsot_core::harness::{run_trial, ExperimentConfig, TrialRecord};
use gwsot_core::metrics::{efficiency, success_rate};
use gwsot_core::sir::{decode, encode};
use gwsot_core::{Action, Coord, GridState, SirType};
use gwsot_probe::decoder::{fit_all_layers, shuffle_labels};
use gwsot_probe::mask::export_ablation_mask;
use gwsot_probe::synthetic::{
    independent_family, planted_common_family, planted_grid, planted_units, random_units, shared_specific_family,
    SubspaceScales, SyntheticSpec,
};
use gwsot_probe::units::ScanResult;
use gwsot_probe::{
    common_units, cross_sir_matrix, shuffle_control, split_dataset, unit_feature_scan, AblationMask, ActivationDataset,
    Feature, LayerSelection,
};
use gwsot_stats::{
    bonferroni, logistic_irls, permutation_test_r2, welch_t_test, wilcoxon_exact, wilcoxon_normal, DesignMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- task rules

fn task_rules() -> Check {
    let start = Instant::now();
    let n = 5;
    let mut states = Vec::new();
    for gy in 0..n {
        for gx in 0..n {
            for ay in 0..n {
                for ax in 0..n {
                    if (ax, ay) != (gx, gy) {
                        states.push(GridState::new(n, Coord::new(ax, ay), Coord::new(gx, gy)).map_err(|e| e.to_string())?);
                    }
                }
            }
        }
    }
    ensure(states.len() == 600, || format!("{} states", states.len()))?;
    ensure(GridState::enumerate_open(n).len() == 600, || "enumerate_open disagrees".into())?;
    for s in &states {
        let mut any = false;
        for a in Action::ALL {
            // Up is y−1: the origin sits at the top-left.
            let (dx, dy): (i64, i64) = match a {
                Action::Up => (0, -1),
                Action::Down => (0, 1),
                Action::Left => (-1, 0),
                Action::Right => (1, 0),
            };
            let (nx, ny) = (s.agent.x as i64 + dx, s.agent.y as i64 + dy);
            let inside = (0..n as i64).contains(&nx) && (0..n as i64).contains(&ny);
            let target = if inside { Coord::new(nx as usize, ny as usize) } else { s.agent };
            let expect_correct = manhattan(target, s.goal) < manhattan(s.agent, s.goal);
            any |= expect_correct;
            let got = is_correct(*s, a).map_err(|e| e.to_string())?;
            ensure(got == expect_correct, || format!("{s:?} {a:?}: is_correct {got}"))?;
            let (next, moved) = apply_action(*s, a);
            ensure(next.agent == target && moved == inside && next.goal == s.goal, || format!("{s:?} {a:?} -> {next:?}"))?;
            if !inside {
                ensure(next == *s, || "wall bump changed the state".into())?;
            }
        }
        ensure(any, || format!("{s:?} has no correct action"))?;
    }
    ensure(max_steps(5) == 10, || format!("max_steps(5) = {}", max_steps(5)))?;
    let elapsed = start.elapsed();
    within(Duration::from_secs(1), elapsed)?;
    Ok(format!("600 states, 2400 actions checked, max_steps(5) = 10, {elapsed:.2?}"))
}

// --------------------------------------------------------------------- codec

fn codec() -> Check {
    let start = Instant::now();
    let mut cases = 0;
    for s in GridState::enumerate_open(5) {
        for sir in SirType::ALL {
            let text = encode(&s, sir).map_err(|e| e.to_string())?;
            let again = encode(&s, sir).map_err(|e| e.to_string())?;
            ensure(text.as_bytes() == again.as_bytes(), || format!("{sir:?} not deterministic"))?;
            let back = decode(&text, sir).map_err(|e| format!("{sir:?} {s:?}: {e}"))?;
            ensure(back == s, || format!("{sir:?}: {s:?} came back as {back:?}"))?;
            cases += 1;
        }
    }
    ensure(cases == 3600, || format!("{cases} cases"))?;
    let elapsed = start.elapsed();
    within(Duration::from_secs(5), elapsed)?;
    Ok(format!("{cases} round trips, {elapsed:.2?}"))
}

// ----------------------------------------------------------------- baselines

fn run_policy(policy: ScriptedPolicy, sir: SirType, trials: usize, seed: u64) -> Result<Vec<TrialRecord>, String> {
    let mut config = ExperimentConfig::scripted(policy, trials, seed);
    config.sir_types = vec![sir];
    let agent = ScriptedAgent(policy);
    config
        .plan()
        .iter()
        .map(|spec| run_trial(spec, &agent).map_err(|e| e.to_string()))
        .collect()
}

fn optimal_agent() -> Check {
    for sir in SirType::ALL {
        let trials = run_policy(ScriptedPolicy::Optimal, sir, 1000, 17)?;
        let rate = success_rate(&trials).map_err(|e| e.to_string())?;
        ensure(rate == 1.0, || format!("{sir:?}: success rate {rate}"))?;
        for t in &trials {
            let e = efficiency(t).map_err(|e| e.to_string())?;
            ensure(e == 1.0, || format!("{}: efficiency {e}", t.trial_id))?;
        }
    }
    Ok("6 x 1000 trials, success 1.0, every efficiency 1.0".into())
}

/// Exact success probability of a uniform random walk within `budget`
/// steps, from powers of the absorbing transition matrix, averaged over the
/// trial start law (goal uniform; agent uniform over cells at distance >= 2).
fn markov_oracle(n: usize, budget: usize) -> f64 {
    let cells = n * n;
    let mut total = 0.0;
    for g in 0..cells {
        let mut p = vec![vec![0.0; cells]; cells];
        for s in 0..cells {
            if s == g {
                p[s][s] = 1.0;
                continue;
            }
            let (x, y) = ((s % n) as i64, (s / n) as i64);
            for (dx, dy) in [(0, -1), (0, 1), (-1, 0), (1, 0)] {
                let (nx, ny) = (x + dx, y + dy);
                let t = if nx < 0 || ny < 0 || nx >= n as i64 || ny >= n as i64 { s } else { (ny * n as i64 + nx) as usize };
                p[s][t] += 0.25;
            }
        }
        let mut dist: Vec<Vec<f64>> = (0..cells).map(|s| (0..cells).map(|t| f64::from(u8::from(s == t))).collect()).collect();
        for _ in 0..budget {
            dist = dist
                .iter()
                .map(|row| (0..cells).map(|t| (0..cells).map(|k| row[k] * p[k][t]).sum()).collect())
                .collect();
        }
        let starts: Vec<usize> = (0..cells)
            .filter(|&s| (s % n).abs_diff(g % n) + (s / n).abs_diff(g / n) >= 2)
            .collect();
        total += starts.iter().map(|&s| dist[s][g]).sum::<f64>() / starts.len() as f64 / cells as f64;
    }
    total
}

fn random_baseline() -> Check {
    let oracle = markov_oracle(5, 10);
    let trials = run_policy(ScriptedPolicy::Random, SirType::JsonCoords, 10_000, 2024)?;
    let rate = success_rate(&trials).map_err(|e| e.to_string())?;
    ensure((rate - oracle).abs() <= 0.02, || format!("simulated {rate:.4}, oracle {oracle:.4}"))?;
    Ok(format!("simulated {rate:.4}, Markov oracle {oracle:.4}"))
}

// --------------------------------------------------------------------- stats

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn log_likelihood(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let eta = b0 + b1 * xi;
            if yi == 1.0 {
                -(1.0 + (-eta).exp()).ln()
            } else {
                -(1.0 + eta.exp()).ln()
            }
        })
        .sum()
}

fn grid_argmax(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut c0, mut c1, mut half) = (0.0, 0.0, 4.0);
    while half > 1e-5 {
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in 0..=40 {
            for j in 0..=40 {
                let b0 = c0 - half + half * i as f64 / 20.0;
                let b1 = c1 - half + half * j as f64 / 20.0;
                let ll = log_likelihood(x, y, b0, b1);
                if ll > best.0 {
                    best = (ll, b0, b1);
                }
            }
        }
        (c0, c1) = (best.1, best.2);
        half /= 8.0;
    }
    (c0, c1)
}

fn stats_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_irls: f64 = 0.0;
    for _ in 0..3 {
        let x: Vec<f64> = (0..100).map(|_| 2.0 * normal(&mut rng)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| f64::from(rng.random::<f64>() < 1.0 / (1.0 + (1.0 - 0.5 * xi).exp())))
            .collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
        let d = DesignMatrix::from_rows(vec!["intercept".into(), "x".into()], &rows).map_err(|e| e.to_string())?;
        let fit = logistic_irls(&d, &y).map_err(|e| e.to_string())?;
        let (g0, g1) = grid_argmax(&x, &y);
        worst_irls = worst_irls.max((fit.coefficients[0] - g0).abs()).max((fit.coefficients[1] - g1).abs());
    }
    ensure(worst_irls < 1e-3, || format!("IRLS off the likelihood grid by {worst_irls:e}"))?;

    let mut worst_w: f64 = 0.0;
    for n in 20..=25 {
        for shift in [0.0, 0.25, 0.5, 0.8] {
            let d: Vec<f64> = (0..n).map(|_| normal(&mut rng) + shift).collect();
            let e = wilcoxon_exact(&d).map_err(|e| e.to_string())?.p_value;
            let a = wilcoxon_normal(&d).map_err(|e| e.to_string())?.p_value;
            worst_w = worst_w.max((e - a).abs());
        }
    }
    ensure(worst_w < 0.02, || format!("Wilcoxon exact vs normal gap {worst_w}"))?;

    let a = [2.1, 3.4, 1.9, 5.0, 4.2];
    let b = [6.3, 5.1, 7.7, 4.9, 6.0];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (va, vb) = (var(&a) / 5.0, var(&b) / 5.0);
    let t = (mean(&a) - mean(&b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / 4.0 + vb * vb / 4.0);
    let p = 2.0 * StudentsT::new(0.0, 1.0, df).map_err(|e| e.to_string())?.cdf(-t.abs());
    let w = welch_t_test(&a, &b).map_err(|e| e.to_string())?;
    ensure(
        (w.statistic - t).abs() < 1e-6 && (w.df.unwrap_or(f64::NAN) - df).abs() < 1e-6 && (w.p_value - p).abs() < 1e-6,
        || format!("Welch ({}, {:?}, {}) vs ({t}, {df}, {p})", w.statistic, w.df, w.p_value),
    )?;

    for (p, m, want) in [(1e-9, 131_072, 1.31072e-4), (0.01, 1, 0.01), (0.3, 10, 1.0), (0.0, 5, 0.0)] {
        let got = bonferroni(p, m);
        ensure(got == want || (got - want).abs() <= 1e-18, || format!("bonferroni({p}, {m}) = {got}"))?;
    }
    let null: Vec<f64> = (0..99).map(|i| i as f64 / 100.0).collect();
    for (obs, want) in [(0.995, 1.0 / 100.0), (0.5, 50.0 / 100.0), (-1.0, 1.0)] {
        let got = permutation_test_r2(obs, &null).map_err(|e| e.to_string())?.p_value;
        ensure((got - want).abs() < 1e-15, || format!("permutation p({obs}) = {got}, want {want}"))?;
    }
    let elapsed = start.elapsed();
    within(Duration::from_secs(30), elapsed)?;
    Ok(format!(
        "IRLS gap {worst_irls:.1e}, Wilcoxon gap {worst_w:.4}, Welch t = {t:.4} exact, {elapsed:.2?}"
    ))
}

// --------------------------------------------------------------------- probe

fn scans(family: &[ActivationDataset], f: Feature) -> Result<Vec<ScanResult>, String> {
    family.iter().map(|d| unit_feature_scan(d, f).map_err(|e| e.to_string())).collect()
}

fn probe_planted() -> Check {
    let start = Instant::now();
    let spec = SyntheticSpec::default();

    let ds = planted_grid(&spec, SirType::JsonCoords, 1);
    let split = split_dataset(ds.n_records(), 0.9, 0).map_err(|e| e.to_string())?;
    let scores = fit_all_layers(&ds, &split).map_err(|e| e.to_string())?;
    let min_test = scores.iter().map(|s| s.r2_test).fold(f64::INFINITY, f64::min);
    ensure(min_test >= 0.95, || format!("planted test R2 {min_test}"))?;
    let shuffled = fit_all_layers(&shuffle_labels(&ds, 1), &split).map_err(|e| e.to_string())?;
    let max_shuffled = shuffled.iter().map(|s| s.r2_test).fold(f64::NEG_INFINITY, f64::max);
    ensure(max_shuffled < 0.0, || format!("shuffled-label R2 {max_shuffled}"))?;

    let mut clean = 0;
    let mut missed = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let planted = random_units(spec.n_layers, spec.hidden_dim, 1, &mut rng);
        let data = planted_units(&spec, SirType::JsonCoords, Feature::AgentX, &planted, seed);
        let found = unit_feature_scan(&data, Feature::AgentX).map_err(|e| e.to_string())?.significant_set();
        if !planted.is_subset(&found) {
            missed += 1;
        } else if found == planted {
            clean += 1;
        }
    }
    let recovery = format!("{clean}/100 runs exact recovery ({missed} with a missed unit)");

    let (family, common) = planted_common_family(&spec, Feature::AgentX, 8, 4, 3);
    let planted_scans = scans(&family, Feature::AgentX)?;
    let refs: Vec<&ScanResult> = planted_scans.iter().collect();
    let recovered = common_units(&refs, 6).map_err(|e| e.to_string())?;
    let control = shuffle_control(&refs, 6, 100, 0).map_err(|e| e.to_string())?;
    let planted_p = control.test.as_ref().map_or(f64::NAN, |t| t.p_value);

    let independent = independent_family(&spec, Feature::AgentX, 26, 4);
    let ind_scans = scans(&independent, Feature::AgentX)?;
    let ind_refs: Vec<&ScanResult> = ind_scans.iter().collect();
    let mut ind_notes = Vec::new();
    let mut ind_sig = false;
    for k in [6, 2] {
        let c = shuffle_control(&ind_refs, k, 100, 0).map_err(|e| e.to_string())?;
        ind_sig |= c.significant();
        ind_notes.push(format!("k={k}: p={}", c.test.as_ref().map_or("undefined".into(), |t| format!("{:.3}", t.p_value))));
    }

    let elapsed = start.elapsed();
    ensure(missed == 0 && clean >= 95, || recovery.clone())?;
    ensure(common.is_subset(&recovered), || "planted common units not all recovered".into())?;
    ensure(control.significant(), || format!("planted-common shuffle control p = {planted_p}"))?;
    ensure(!ind_sig, || format!("independent construction significant ({})", ind_notes.join(", ")))?;
    within(Duration::from_secs(120), elapsed)?;
    Ok(format!(
        "min test R2 {min_test:.4}, max shuffled R2 {max_shuffled:.3}, {recovery}, planted-common p {planted_p:.4}, independent {}, {elapsed:.1?}",
        ind_notes.join(" ")
    ))
}

fn cross_sir_structure() -> Check {
    let spec = SyntheticSpec::default();
    let mut good = 0;
    for seed in 0..50u64 {
        let family = shared_specific_family(&spec, SubspaceScales::default(), 500 + seed);
        let refs: Vec<&ActivationDataset> = family.iter().collect();
        let m = cross_sir_matrix(&refs, LayerSelection::AllAveraged, 0.9, seed).map_err(|e| e.to_string())?;
        let ordered = SirType::ALL.iter().enumerate().all(|(i, sir)| {
            let sib = sir.sibling().index();
            let cross = (0..6)
                .filter(|&j| SirType::ALL[j].class() != sir.class())
                .map(|j| m[i][j])
                .fold(f64::NEG_INFINITY, f64::max);
            m[i][i] > m[i][sib] && m[i][sib] > cross
        });
        good += usize::from(ordered);
    }
    ensure(good * 100 >= 95 * 50, || format!("ordering held in {good}/50 runs"))?;
    Ok(format!("diagonal > same-class > cross-class in {good}/50 runs"))
}

fn mask_round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(286);
    for (i, per_layer) in [0usize, 1, 9, 40].into_iter().enumerate() {
        let units: BTreeSet<(usize, usize)> = if per_layer == 0 {
            BTreeSet::new()
        } else {
            random_units(32, 4096, per_layer, &mut rng)
        };
        let path = dir.path().join(format!("m{i}.json"));
        export_ablation_mask(units.clone(), "model", 32, 4096, &path).map_err(|e| e.to_string())?;
        let back = AblationMask::load_checked(&path, 32, 4096).map_err(|e| e.to_string())?;
        ensure(back.entries == units && back.model_id == "model", || format!("{} entries changed on reload", units.len()))?;
    }
    let units: BTreeSet<_> = random_units(26, 4096, 11, &mut rng);
    let path = dir.path().join("286.json");
    export_ablation_mask(units.clone(), "model", 32, 4096, &path).map_err(|e| e.to_string())?;
    ensure(AblationMask::load(&path).map_err(|e| e.to_string())?.len() == 286, || "286-entry mask".into())?;

    ensure(AblationMask::new("m", [(32, 0)], 32, 4096).is_err(), || "layer 32 accepted".into())?;
    ensure(AblationMask::new("m", [(0, 4096)], 32, 4096).is_err(), || "unit 4096 accepted".into())?;
    let out = dir.path().join("bad.json");
    ensure(export_ablation_mask([(5, 5000)], "m", 32, 4096, &out).is_err() && !out.exists(), || "export wrote a bad mask".into())?;
    ensure(AblationMask::load_checked(&path, 8, 4096).is_err(), || "load_checked ignored the layer count".into())?;
    Ok("empty/8/288/1280/286-entry masks round-trip; out-of-range layer and unit rejected".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("task rules", task_rules),
        ("codec round trip", codec),
        ("optimal agent", optimal_agent),
        ("random baseline vs Markov oracle", random_baseline),
        ("statistics oracles", stats_oracles),
        ("probe planted-signal suite", probe_planted),
        ("cross-encoding structure", cross_sir_structure),
        ("ablation mask round trip", mask_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.1?}]", t.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{:.1?}]", t.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

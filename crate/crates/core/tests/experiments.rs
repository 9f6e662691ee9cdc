use expweight::experiments::*;
use expweight::model::exact_risk;

fn tikhonov_sobolev(replications: usize) -> Scenario {
    Scenario {
        name: "tikhonov-sobolev".into(),
        n: 500,
        sigma: 0.05,
        mean: MeanSpec::Sobolev { amplitude: 1.0, smoothness: 1.0 },
        family: FamilySpec::Tikhonov {
            spectrum: SpectrumSpec::polynomial(2.0),
            alpha: GridSpec { min: 1e-8, max: 0.5, count: 50, spacing: Spacing::Geometric },
        },
        beta: 4.0,
        replications,
        seed: 42,
    }
}

#[test]
fn zero_mean_two_member_family_stays_below_the_bound() {
    let s = Scenario {
        name: "zero-two".into(),
        n: 20,
        sigma: 1.0,
        mean: MeanSpec::Zero,
        family: FamilySpec::Custom { members: vec![vec![0.0; 20], vec![1.0; 20]] },
        beta: 4.0,
        replications: 100_000,
        seed: 1,
    };
    let rep = run_scenario(&s).unwrap();
    assert_eq!(rep.oracle_risk, 0.0);
    assert!(rep.bound_log.is_finite());
    assert!(rep.remainder_ew <= rep.bound_log + CONFIDENCE * rep.mc_risk_ew.se);
    assert!(rep.passed(), "{:?}", rep.verdicts.iter().filter(|v| !v.passed).collect::<Vec<_>>());

    // The member bound with the raw priors is far below the aggregate's risk here.
    let run = ScenarioRun::execute(&Scenario { replications: 20_000, ..s }, &RunOptions::default()).unwrap();
    let risk = run.stat(|r| r.loss_ew);
    assert!(risk.mean > member_kl_bound(&run, false) + CONFIDENCE * risk.se);
    assert!(risk.mean <= member_kl_bound(&run, true) + CONFIDENCE * risk.se);
}

#[test]
fn sobolev_tikhonov_risk_sits_between_oracle_and_bound() {
    let rep = run_scenario(&tikhonov_sobolev(10_000)).unwrap();
    let slack = CONFIDENCE * rep.mc_risk_ew.se;
    assert!(rep.mc_risk_ew.mean >= rep.oracle_risk - slack);
    assert!(rep.mc_risk_ew.mean <= rep.oracle_risk + rep.bound_log + slack);
    assert!(rep.passed());
    assert_eq!(rep.verdicts.len(), 1 + 101 + 1 + 1);
}

#[test]
fn oracle_matches_independent_scan_and_runs_repeat_exactly() {
    let s = tikhonov_sobolev(300);
    let rep = run_scenario(&s).unwrap();
    let ctx = s.context().unwrap();
    let scan = ctx
        .family
        .members()
        .iter()
        .map(|h| exact_risk(h, &ctx.mu, s.sigma).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(rep.oracle_risk, scan);
    assert_eq!(rep, run_scenario(&s).unwrap());
}

#[test]
fn h_eps_diagnostic_is_finite_and_above_ure_minimizer() {
    let s = tikhonov_sobolev(500);
    let beta = s.beta;
    let d = diagnose_h_eps(&s, 1.0 / (10.0 * beta)).unwrap();
    assert!(d.mean_sq_norm.mean.is_finite() && d.reference.is_finite() && d.empirical_c.is_finite());
    let run = ScenarioRun::execute(&s, &RunOptions::default()).unwrap();
    let ure_norm = run.stat(|r| r.ure_sq_norm);
    assert!(d.mean_sq_norm.mean >= ure_norm.mean);
    assert!(diagnose_h_eps(&s, 1.0 / (5.0 * beta)).is_err());
}

#[test]
fn small_beta_verdicts_are_flagged() {
    let s = Scenario { beta: 0.5, ..tikhonov_sobolev(200) };
    let rep = run_scenario(&s).unwrap();
    assert!(!rep.theory_applicable);
    for v in &rep.verdicts {
        let theory = matches!(v.check, Check::WeightedUre | Check::KlOracle | Check::LogRemainder);
        assert_eq!(v.theory_applicable, !theory, "{v:?}");
    }
    assert!(rep.passed() || rep.verdicts.iter().all(|v| v.passed || !v.theory_applicable));
}

#[test]
fn point_mass_lambda_matches_member_term() {
    // With one member and pi = 1 both displays reduce to that member's risk.
    let s = Scenario {
        name: "single".into(),
        n: 30,
        sigma: 1.0,
        mean: MeanSpec::Constant { amplitude: 0.3 },
        family: FamilySpec::Custom { members: vec![vec![0.7; 30]] },
        beta: 4.0,
        replications: 1000,
        seed: 8,
    };
    let run = ScenarioRun::execute(&s, &RunOptions::default()).unwrap();
    for v in verify_kl_oracle_bound(&run, 5).unwrap() {
        assert_eq!(v.rhs, run.member_risks[0]);
    }
    let diff = run.stat(|r| r.loss_ew - r.weighted_ure);
    assert!(diff.mean.abs() <= CONFIDENCE * diff.se);
}

#[test]
fn sweep_scales_reach_their_targets() {
    let base = Scenario { replications: 200, ..tikhonov_sobolev(200) };
    let targets = [1.0, 10.0, 100.0];
    let scales = scales_for_targets(&base, &targets).unwrap();
    let sweep = remainder_sweep(&base, &scales, &RunOptions::default()).unwrap();
    for (row, t) in sweep.rows.iter().zip(targets) {
        assert!((row.oracle_over_sigma2 - t).abs() <= 1e-8 * t);
    }
    let ratios: Vec<f64> = sweep.rows.iter().map(SweepRow::shape_ratio).collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(verify_log_remainder_bound(&sweep).bound_holds());
}

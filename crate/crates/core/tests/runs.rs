use arlda::suite::{build, OracleKind, ProblemId};
use arlda::{audit_run, brute_force_phi, AccuracyFloor, AlgoConstants, ExitStatus};

#[test]
fn adversarial_runs_pass_every_audit() {
    for id in ProblemId::ALL {
        let p = build::<f64>(id, (!id.dim_is_fixed()).then(|| id.default_dim().min(3))).unwrap();
        for monotonic in [false, true] {
            let mut c = AlgoConstants::<f64>::default().with_epsilon(1e-3);
            c.monotonic = monotonic;
            let ev = p.evaluator(OracleKind::Adversarial, 5, AccuracyFloor::default()).unwrap();
            let out = arlda::run(&p.spec, &c, ev).unwrap();
            assert!(out.report.status.is_exit(), "{id}: {:?}", out.report.status);
            let failed: Vec<_> = audit_run(&p.spec, &c, &out.records).into_iter().filter(|f| !f.pass).collect();
            assert!(failed.is_empty(), "{id} monotonic={monotonic}: {failed:?}");
        }
    }
}

#[test]
fn audit_catches_a_corrupted_omega() {
    let p = build::<f64>(ProblemId::Quad, None).unwrap();
    let c = AlgoConstants::<f64>::default().with_epsilon(1e-3);
    let ev = p.evaluator(OracleKind::Exact, 0, AccuracyFloor::default()).unwrap();
    let mut out = arlda::run(&p.spec, &c, ev).unwrap();
    out.records[0].omega *= 2.0;
    let findings = audit_run(&p.spec, &c, &out.records);
    assert!(findings.iter().any(|f| !f.pass && f.check == "omega-rule"));
}

#[test]
fn audit_catches_a_corrupted_decrease() {
    let p = build::<f64>(ProblemId::RosenbrockPen, None).unwrap();
    let c = AlgoConstants::<f64>::default().with_epsilon(1e-3);
    let ev = p.evaluator(OracleKind::Exact, 0, AccuracyFloor::default()).unwrap();
    let mut out = arlda::run(&p.spec, &c, ev).unwrap();
    let r = out.records.iter_mut().find(|r| r.step_computed()).unwrap();
    r.dellbar += 1e6;
    let findings = audit_run(&p.spec, &c, &out.records);
    assert!(findings.iter().any(|f| !f.pass && f.check == "dell-error"));
}

#[test]
fn single_precision_runs_terminate() {
    for id in [ProblemId::Quad, ProblemId::Lasso1d, ProblemId::RosenbrockPen] {
        let p = build::<f32>(id, None).unwrap();
        let c = AlgoConstants::<f32>::default().with_epsilon(1e-2);
        let ev = p.evaluator(OracleKind::Exact, 0, AccuracyFloor::default()).unwrap();
        let out = arlda::run(&p.spec, &c, ev).unwrap();
        assert!(out.report.status.is_exit(), "{id}: {:?}", out.report.status);
        let phi = brute_force_phi(&p.spec, &out.report.x, 100).unwrap();
        assert!(phi <= 1e-2 + 1e-4, "{id}: {phi}");
    }
}

#[test]
fn coarse_floors_stall_with_a_noise_bound() {
    let p = build::<f64>(ProblemId::LassoNd, None).unwrap();
    let c = AlgoConstants::<f64>::default().with_epsilon(1e-6);
    let ev = p.evaluator(OracleKind::Noise, 1, AccuracyFloor::uniform(1e-4)).unwrap();
    let out = arlda::run(&p.spec, &c, ev).unwrap();
    assert!(matches!(out.report.status, ExitStatus::AccuracyStalled(_)));
    let b = out.report.noisy_optimality_bound.unwrap();
    assert!(b.is_finite() && b > 0.0);
}

#[test]
fn smaller_epsilon_never_needs_fewer_successful_iterations_on_quad() {
    let p = build::<f64>(ProblemId::Quad, None).unwrap();
    let mut last = 0;
    for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        let c = AlgoConstants::<f64>::default().with_epsilon(eps);
        let ev = p.evaluator(OracleKind::Exact, 0, AccuracyFloor::default()).unwrap();
        let out = arlda::run(&p.spec, &c, ev).unwrap();
        assert!(out.report.status.is_exit());
        assert!(out.report.successful >= last, "eps={eps}");
        last = out.report.successful;
    }
}

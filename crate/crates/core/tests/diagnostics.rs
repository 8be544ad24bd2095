use std::f64::consts::PI;

use muskat_core::config::{InitialData, Mode, SimConfig};
use muskat_core::curve::run_curve;
use muskat_core::diagnostics::{
    all_verdicts, h12_trace, kernel_identity_errors, verdict_blowup, verdict_h12_inequality,
    verdict_l2_balance, verdict_max_principle, verdict_slope, verdict_turning, verdict_wiener,
    TheoremId, TheoremVerdict, VerdictStatus,
};
use muskat_core::graph::run_graph;
use muskat_core::runlog::{RunLog, RunStatus, SnapshotData};

fn graph_log(n: usize, t: f64, init: InitialData) -> RunLog {
    let mut cfg = SimConfig::graph(n, t, init);
    cfg.report_interval = Some(t / 40.0);
    run_graph(&cfg).unwrap()
}

fn small_cosine(amplitude: f64) -> InitialData {
    InitialData::Cosine {
        amplitude,
        wavenumber: 1,
    }
}

fn status(v: &TheoremVerdict) -> VerdictStatus {
    v.status
}

#[test]
fn stable_run_passes_and_each_corruption_is_caught() {
    let log = graph_log(64, 0.4, small_cosine(0.25));
    let quad = log.config.quad;
    for v in all_verdicts(&log) {
        assert_eq!(v.status, VerdictStatus::Holds, "{v:?}");
        assert!(v.worst_margin.is_finite());
    }
    let late = log.reports.len() - 1;

    let mut bad = log.clone();
    bad.reports[late].l_inf = 2.0 * bad.reports[0].l_inf;
    assert_eq!(
        status(&verdict_max_principle(&bad)),
        VerdictStatus::Violated
    );

    let mut bad = log.clone();
    let last = bad.snapshots.len() - 1;
    if let SnapshotData::Graph(f) = &bad.snapshots[last].data {
        bad.snapshots[last].data = SnapshotData::Graph(f.scale(3.0));
    }
    assert_eq!(
        status(&verdict_l2_balance(&bad, &quad)),
        VerdictStatus::Violated
    );

    let mut bad = log.clone();
    bad.reports[late].lipschitz = bad.reports[0].lipschitz + 1e-3;
    assert_eq!(status(&verdict_slope(&bad)), VerdictStatus::Violated);

    let mut bad = log.clone();
    bad.reports[late].wiener1 = bad.reports[0].wiener1 + 1e-3;
    assert_eq!(status(&verdict_wiener(&bad)), VerdictStatus::Violated);

    let mut bad = log.clone();
    bad.reports[late].hs_half = 10.0 * bad.reports[0].hs_half;
    assert_eq!(
        status(&verdict_h12_inequality(&bad)),
        VerdictStatus::Violated
    );

    let mut bad = log.clone();
    bad.reports[late].blowup_proxy = 2.0 * bad.config.blowup_threshold;
    let v = verdict_blowup(&bad);
    assert_eq!(v.status, VerdictStatus::Violated);
    assert!(v.details.contains("crossed"));
}

#[test]
fn violated_always_exceeds_tolerance() {
    let log = graph_log(32, 0.2, small_cosine(0.1));
    let mut bad = log.clone();
    let l0 = bad.reports[0].l_inf;
    let prev = bad.reports[4].l_inf;
    // below the 1e-6 relative tolerance
    bad.reports[5].l_inf = prev + 5e-7 * l0;
    assert_eq!(status(&verdict_max_principle(&bad)), VerdictStatus::Holds);
    bad.reports[5].l_inf = prev + 2e-6 * l0;
    let v = verdict_max_principle(&bad);
    assert_eq!(v.status, VerdictStatus::Violated);
    assert!(v.worst_margin > 1e-6 * l0);
}

#[test]
fn verdicts_survive_a_disk_round_trip() {
    let log = graph_log(32, 0.2, small_cosine(0.2));
    let dir = tempfile::tempdir().unwrap();
    log.write(dir.path()).unwrap();
    let back = RunLog::load(dir.path()).unwrap();
    assert_eq!(all_verdicts(&log), all_verdicts(&back));
}

#[test]
fn thresholds_decide_applicability() {
    let steep = graph_log(64, 0.05, InitialData::SlopeProfile { slope: 3.0 });
    assert_eq!(status(&verdict_slope(&steep)), VerdictStatus::NotApplicable);
    let wide = graph_log(32, 0.05, small_cosine(0.4));
    assert_eq!(status(&verdict_wiener(&wide)), VerdictStatus::NotApplicable);
    let under = verdict_wiener(&graph_log(32, 0.05, small_cosine(0.15)));
    assert_eq!(under.status, VerdictStatus::Holds);
    assert!(under
        .details
        .contains("also below the classical threshold 0.2"));
    let over = verdict_wiener(&graph_log(32, 0.05, small_cosine(0.3)));
    assert_eq!(over.status, VerdictStatus::Holds);
    assert!(over
        .details
        .contains("not below the classical threshold 0.2"));

    let mut cfg = SimConfig::graph(32, 0.05, small_cosine(0.1));
    cfg.rho_bar = 2.0;
    let log = run_graph(&cfg).unwrap();
    assert_eq!(
        status(&verdict_h12_inequality(&log)),
        VerdictStatus::NotApplicable
    );
    assert_eq!(status(&verdict_max_principle(&log)), VerdictStatus::Holds);
}

#[test]
fn unstable_growth_crosses_the_blowup_threshold() {
    let mut cfg = SimConfig::graph(
        64,
        1.0,
        InitialData::Cosine {
            amplitude: 1e-3,
            wavenumber: 8,
        },
    );
    cfg.rho_bar = -PI;
    cfg.unstable = true;
    cfg.blowup_threshold = 2.0;
    let log = run_graph(&cfg).unwrap();
    assert_eq!(log.status, RunStatus::BlowupSuspected);
    let proxies: Vec<f64> = log.reports.iter().map(|r| r.blowup_proxy).collect();
    assert!(proxies.windows(2).all(|w| w[1] > w[0]), "{proxies:?}");
    let v = verdict_blowup(&log);
    assert_eq!(v.status, VerdictStatus::Violated);
    assert!(v.details.contains("crossed"));
    for v in all_verdicts(&log) {
        if v.theorem_id != TheoremId::BlowupCriterion {
            assert_eq!(v.status, VerdictStatus::NotApplicable, "{v:?}");
        }
    }
}

#[test]
fn linear_h12_constant_is_one() {
    let log = graph_log(64, 0.5, small_cosine(1e-5));
    let tr = h12_trace(&log.reports);
    assert!((tr.c_impl[0] - 1.0).abs() < 1e-12);
    assert!(tr.c_impl.iter().all(|c| *c <= 1.0 + 1e-9));
    let v = verdict_h12_inequality(&log);
    assert!((v.worst_margin - 1.0).abs() < 1e-9);
}

#[test]
fn turning_verdict_checks_the_sign_prediction() {
    let mut cfg = SimConfig::graph(
        128,
        0.5,
        InitialData::TurningProfile {
            steepness: 0.98,
            height: 2.0,
        },
    );
    cfg.mode = Mode::Curve;
    let log = run_curve(&cfg).unwrap();
    assert_eq!(log.status, RunStatus::Turned);
    let v = verdict_turning(&log, &cfg.quad);
    assert_eq!(v.status, VerdictStatus::Holds, "{v:?}");
    let mut bad = log.clone();
    bad.status = RunStatus::Completed;
    bad.turning_time = None;
    assert_eq!(
        status(&verdict_turning(&bad, &cfg.quad)),
        VerdictStatus::Violated
    );
    assert_eq!(all_verdicts(&log).len(), 1);
}

#[test]
fn kernel_identities_hold_on_a_small_corpus() {
    let e = kernel_identity_errors(2, 7).unwrap();
    assert!(e.second_difference < 1e-10, "{e:?}");
    assert!(e.second_difference_adaptive < 1e-8, "{e:?}");
    assert!(e.diff_rewrite < 1e-10, "{e:?}");
}

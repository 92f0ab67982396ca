//! Trajectories, samplers and study plumbing.

use ucusum::mcsim::{map_replications, trajectory_rows};
use ucusum::{
    bivariate_normal_sampler, gmd_normal_triple, prefix_u, BuiltinKernel, DistSpec, DriftSpec,
    LrvConfig, Scenario, Study,
};

fn gmd_scenario(tau: Option<f64>, post: Option<DistSpec>, runs: usize, seed: u64) -> Scenario {
    Scenario {
        label: "traj".into(),
        kernel: BuiltinKernel::Gmd,
        n: 4000,
        tau_star: tau,
        pre: DistSpec::normal(0.0, 1.0),
        post,
        runs,
        seed,
        alpha: 0.05,
        lrv: LrvConfig::default(),
    }
}

#[test]
fn trajectory_tracks_fixed_alternative_drift() {
    let tau = 1.0 / 3.0;
    let s = gmd_scenario(Some(tau), Some(DistSpec::normal(0.0, 2.0)), 200, 41);
    let drift = DriftSpec::new(tau, &gmd_normal_triple(1.0, 2.0).unwrap()).unwrap();
    let prepared = s.prepare().unwrap();
    let sups = map_replications(&prepared, s.runs, |x| {
        trajectory_rows(x, &s.kernel, Some(&drift))
            .unwrap()
            .iter()
            .map(|r| (r.d_full - r.psi1.unwrap()).abs())
            .fold(0.0_f64, f64::max)
    });
    let close = sups.iter().filter(|d| **d <= 0.06).count();
    assert!(close >= 190, "{close}/200 within 0.06");
}

#[test]
fn null_trajectories_stay_small() {
    let s = gmd_scenario(None, None, 200, 42);
    let prepared = s.prepare().unwrap();
    let sups = map_replications(&prepared, s.runs, |x| {
        trajectory_rows(x, &s.kernel, None)
            .unwrap()
            .iter()
            .map(|r| r.d_full.abs().max(r.d_last.abs()))
            .fold(0.0_f64, f64::max)
    });
    let bounded = sups.iter().filter(|d| **d <= 0.3).count();
    assert!(bounded >= 198, "{bounded}/200 bounded by 0.3");
}

#[test]
fn bivariate_sampler_has_arcsine_kendall_tau() {
    for (rho, want) in [(0.0, 0.0), (0.5, 1.0 / 3.0), (-0.5, -1.0 / 3.0)] {
        let series = bivariate_normal_sampler(rho, 43).unwrap().series(100_000);
        let tau = prefix_u(&BuiltinKernel::Kendall, &series)
            .unwrap()
            .at(100_000);
        assert!((tau - want).abs() <= 0.01, "rho {rho}: tau {tau}");
    }
}

const STUDY: &str = r#"{
    "title": "demo",
    "kernel": "gmd",
    "sizes": [40, 80],
    "runs": 30,
    "seed": 7,
    "designs": [
        {"label": "NH", "pre": {"family": "normal"}},
        {"label": "Alt1", "tau_star": 0.5,
         "pre": {"family": "normal"},
         "post": {"family": "normal", "sd": {"rule": "sigma_local", "c": 3}}}
    ]
}"#;

#[test]
fn study_runs_from_json() {
    let study: Study = serde_json::from_str(STUDY).unwrap();
    let table = study.run().unwrap();
    assert_eq!(table.rows.len(), 4);
    let alt = table.find("Alt1", Some(0.5), 80).unwrap();
    assert_eq!(alt.runs, 30);
    let csv = table.to_csv();
    assert_eq!(csv.lines().count(), 1 + 8);
    assert!(csv.starts_with("label,kernel,n,tau_star,method,"));
    let text = table.to_text();
    assert!(text.contains("Alt1") && text.contains("FvsL"));
    let again: Study = serde_json::from_str(STUDY).unwrap();
    assert_eq!(again.run().unwrap(), table);
}

#[test]
fn study_validation_names_the_design() {
    let mut study: Study = serde_json::from_str(STUDY).unwrap();
    study.designs[1].tau_star = Some(1.5);
    let err = study.validate().unwrap_err().to_string();
    assert!(err.contains("Alt1"), "{err}");
}

#[test]
fn kendall_studies_cap_large_runs() {
    let study: Study = serde_json::from_str(
        r#"{"kernel": "kendall", "sizes": [63, 4000], "runs": 2000, "seed": 1,
            "designs": [{"label": "NH", "pre": {"family": "bivariate_normal", "rho": 0}}]}"#,
    )
    .unwrap();
    let runs: Vec<usize> = study.scenarios().iter().map(|s| s.runs).collect();
    assert_eq!(runs, vec![2000, 500]);
}

//! GLM regression tests on the Swedish third-party motor data (1977).
//!
//! Expected BIC values were computed with an independent reference
//! implementation (numpy/scipy IRLS with the same likelihood conventions)
//! and are frozen here to twelve significant digits.

use fcbma::glm::{fit, Family, ModelTemplate};
use fcbma::{CollapsingScheme, ConstraintSet, Dataset, Partition};
use std::sync::Arc;

fn motorins() -> Dataset {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/motorins.csv");
    let text = std::fs::read_to_string(path).expect("data/motorins.csv present in the repository");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        ["Kilometres", "Zone", "Bonus", "Make", "Insured", "Claims", "Payment"]
    );
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); 7];
    for line in lines {
        for (i, field) in line.split(',').enumerate() {
            cols[i].push(field.to_string());
        }
    }
    let num = |v: &[String]| -> Vec<f64> { v.iter().map(|s| s.parse().unwrap()).collect() };
    let claims = num(&cols[5]);
    let payment = num(&cols[6]);
    let severity: Vec<f64> = payment
        .iter()
        .zip(&claims)
        .map(|(&p, &c)| if c > 0.0 { p / c } else { 0.0 })
        .collect();
    Dataset::builder()
        .factor("Kilometres", cols[0].clone())
        .factor("Zone", cols[1].clone())
        .factor("Bonus", cols[2].clone())
        .factor("Make", cols[3].clone())
        .numeric("Insured", num(&cols[4]))
        .numeric("Claims", claims)
        .numeric("Payment", payment)
        .numeric("Severity", severity)
        .build()
        .unwrap()
}

fn frequency_template(data: &Dataset) -> Arc<ModelTemplate> {
    Arc::new(
        ModelTemplate::new(Family::Poisson, "Claims")
            .with_exposure("Insured")
            .add_factor_from(data, "Kilometres", ConstraintSet::none())
            .unwrap()
            .add_factor_from(data, "Zone", ConstraintSet::none())
            .unwrap()
            .add_factor_from(data, "Bonus", ConstraintSet::none())
            .unwrap()
            .add_factor_from(data, "Make", ConstraintSet::none())
            .unwrap(),
    )
}

fn severity_template(data: &Dataset) -> Arc<ModelTemplate> {
    Arc::new(
        ModelTemplate::new(Family::Gamma, "Severity")
            .with_weight("Claims")
            .add_factor_from(data, "Kilometres", ConstraintSet::none())
            .unwrap()
            .add_factor_from(data, "Zone", ConstraintSet::none())
            .unwrap()
            .add_factor_from(data, "Bonus", ConstraintSet::none())
            .unwrap()
            .add_factor_from(data, "Make", ConstraintSet::none())
            .unwrap(),
    )
}

fn scheme_with(template: &ModelTemplate, changes: &[(&str, &str)]) -> CollapsingScheme {
    let mut scheme = template.identity_scheme();
    for (factor, partition) in changes {
        scheme = scheme
            .with_partition(factor, partition.parse::<Partition>().unwrap())
            .unwrap();
    }
    scheme
}

#[test]
fn dataset_shape_matches_the_published_description() {
    let d = motorins();
    assert_eq!(d.n_rows(), 1797);
    assert_eq!(d.factor("Kilometres").unwrap().n_levels(), 5);
    assert_eq!(d.factor("Zone").unwrap().n_levels(), 7);
    assert_eq!(d.factor("Bonus").unwrap().n_levels(), 7);
    assert_eq!(d.factor("Make").unwrap().n_levels(), 9);
    let claims: f64 = d.numeric("Claims").unwrap().iter().sum();
    assert_eq!(claims, 113_171.0);
}

#[test]
fn severity_bics_match_reference_values() {
    let d = motorins();
    let t = severity_template(&d);
    let cases = [
        (vec![], 1_878_170.959_846),
        (vec![("Kilometres", "12233")], 1_878_161.351_978),
        (vec![("Kilometres", "12344")], 1_878_164.825_542),
        (vec![("Kilometres", "12234")], 1_878_167.482_205),
        (vec![("Make", "(1)(26)(3)(4)(5)(7)(8)(9)")], 1_878_164.185_236),
    ];
    for (changes, want) in cases {
        let m = fit(&d, &t, &scheme_with(&t, &changes)).unwrap();
        assert!(m.converged);
        assert!(
            (m.bic - want).abs() < 0.01,
            "changes {changes:?}: got {:.6}, want {want:.6}",
            m.bic
        );
        assert_eq!(m.n_obs, 1797);
    }
}

#[test]
fn frequency_bics_match_reference_values() {
    let d = motorins();
    let t = frequency_template(&d);
    let cases = [
        (vec![], 10_314.721_121),
        (vec![("Make", "(1,8)(2)(3)(4)(5)(6)(7,9)")], 10_301.105_633),
        (
            vec![("Zone", "(1)(2)(3)(4,7)(5)(6)"), ("Make", "(1,8)(2)(3)(4)(5)(6)(7,9)")],
            10_297.194_614,
        ),
    ];
    for (changes, want) in cases {
        let m = fit(&d, &t, &scheme_with(&t, &changes)).unwrap();
        assert!(m.converged);
        assert!(
            (m.bic - want).abs() < 0.01,
            "changes {changes:?}: got {:.6}, want {want:.6}",
            m.bic
        );
    }
}

#[test]
fn four_factor_severity_candidate_matches_reference() {
    let d = motorins();
    let t = severity_template(&d);
    let scheme = scheme_with(
        &t,
        &[
            ("Kilometres", "(1)(23)(45)"),
            ("Zone", "(1)(2,7)(3,5)(4)(6)"),
            ("Bonus", "(1)(2)(3,6)(4)(5)(7)"),
            ("Make", "(1)(2,6)(3)(4)(5)(7)(8)(9)"),
        ],
    );
    let m = fit(&d, &t, &scheme).unwrap();
    assert!((m.bic - 1_878_133.836_773).abs() < 0.01, "got {:.6}", m.bic);
}

#[test]
fn score_equations_vanish_at_convergence() {
    let d = motorins();
    for (t, resp) in [
        (frequency_template(&d), "Claims"),
        (severity_template(&d), "Severity"),
    ] {
        let m = fit(&d, &t, &t.identity_scheme()).unwrap();
        let mu = m.predict(&d).unwrap();
        let y = d.numeric(resp).unwrap();
        let w: Vec<f64> = match &t.weight {
            Some(col) => d.numeric(col).unwrap().to_vec(),
            None => vec![1.0; d.n_rows()],
        };
        // log link score per column j: sum_i w_i (y_i - mu_i) * s_i * x_ij
        // with s_i = 1 for Poisson and 1/mu_i for Gamma
        let mut scores: Vec<f64> = Vec::new();
        let mut scales: Vec<f64> = Vec::new();
        for spec in &t.factors {
            let col = d.factor(&spec.name).unwrap();
            for level in 1..spec.levels.len() {
                let mut s = 0.0;
                let mut scale = 1.0;
                for i in 0..d.n_rows() {
                    if w[i] == 0.0 {
                        continue;
                    }
                    if col.codes()[i] as usize == level {
                        let si = match t.family {
                            Family::Poisson => 1.0,
                            Family::Gamma => 1.0 / mu[i],
                        };
                        s += w[i] * (y[i] - mu[i]) * si;
                        scale += w[i] * mu[i] * si;
                    }
                }
                scores.push(s);
                scales.push(scale);
            }
        }
        for (s, scale) in scores.iter().zip(&scales) {
            assert!(
                (s / scale).abs() < 1e-6,
                "score {s} at scale {scale} for {resp}"
            );
        }
    }
}

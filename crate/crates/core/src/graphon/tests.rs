use approx::assert_relative_eq;

use super::*;

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn two_block(b01: f64) -> Graphon {
    Graphon::Step(BlockModel::uniform(&[vec![0.0, b01], vec![b01, 0.0]]).unwrap())
}

#[test]
fn eval_examples() {
    let c = Graphon::constant(1.0).unwrap();
    assert_eq!(c.eval(Point::Unit(0.3), Point::Unit(0.7)).unwrap(), 1.0);
    let w = Graphon::power_law_sum(0.5).unwrap();
    assert_eq!(w.eval(Point::Unit(0.0), Point::Unit(0.0)).unwrap(), 0.5);
    assert_eq!(two_block(2.0).eval(Point::Unit(0.25), Point::Unit(0.75)).unwrap(), 2.0);
}

#[test]
fn eval_domain_errors() {
    let w = Graphon::power_law_product(0.5).unwrap();
    assert!(matches!(w.eval(Point::Unit(1.5), Point::Unit(0.2)), Err(Error::Domain(_))));
    assert!(matches!(w.eval(Point::Unit(1.0), Point::Unit(0.2)), Err(Error::Domain(_))));
    let mm = Graphon::mixed_membership(vec![1.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert!(matches!(mm.eval(Point::Unit(0.5), Point::Unit(0.5)), Err(Error::Domain(_))));
    assert!(matches!(
        mm.eval(Point::Simplex(&[0.7, 0.7]), Point::Simplex(&[0.5, 0.5])),
        Err(Error::Domain(_))
    ));
    assert_eq!(
        mm.eval(Point::Simplex(&[0.25, 0.75]), Point::Simplex(&[0.5, 0.5])).unwrap(),
        0.5
    );
}

#[test]
fn power_law_parameter_range() {
    assert!(Graphon::power_law_sum(0.0).is_err());
    assert!(Graphon::power_law_product(1.0).is_err());
}

#[test]
fn lp_norm_examples() {
    assert_eq!(two_block(2.0).lp_norm(1.0, &q()).unwrap().value, 1.0);
    let c = Graphon::constant(0.7).unwrap();
    for p in [1.0, 2.0, 3.5] {
        assert_relative_eq!(c.lp_norm(p, &q()).unwrap().value, 0.7, epsilon = 1e-15);
    }
    assert_eq!(Graphon::power_law_product(0.5).unwrap().lp_norm(1.0, &q()).unwrap().value, 1.0);
}

#[test]
fn registered_masses_match_quadrature() {
    // ‖W‖₁ is closed form for every family; confirm it by integrating
    let ones = [
        Graphon::power_law_product(0.5).unwrap(),
        Graphon::power_law_sum(0.3).unwrap(),
        Graphon::named("four_xy").unwrap(),
        Graphon::named("three_min").unwrap(),
    ];
    for w in ones {
        let e = w.integrate_unit(&|v| v, &[], (0.0, 1.0), (0.0, 1.0), &q()).unwrap();
        assert_relative_eq!(e.value, 1.0, max_relative = 1e-6);
        assert!(e.error < 1e-5);
    }
}

#[test]
fn product_norm_matches_closed_form() {
    // ‖g⊗g‖_p = ‖g‖_p², ‖g‖_p^p = (1-α)^p / (1-αp)
    for (alpha, p) in [(0.5, 1.5), (0.3, 2.0), (0.25, 3.0)] {
        let gp = ((1.0f64 - alpha).powf(p) / (1.0 - alpha * p)).powf(1.0 / p);
        let e = Graphon::power_law_product(alpha).unwrap().lp_norm(p, &q()).unwrap();
        assert_relative_eq!(e.value, gp * gp, max_relative = 1e-5);
    }
}

#[test]
fn divergent_norm_is_an_integrability_error() {
    let w = Graphon::power_law_sum(0.5).unwrap();
    assert!(matches!(w.lp_norm(2.0, &q()), Err(Error::Integrability(_))));
    assert!(matches!(w.tail_rho(0.1, 2.5, &q()), Err(Error::Integrability(_))));
}

#[test]
fn normalize_examples() {
    let n = Graphon::constant(4.0).unwrap().normalize(&q()).unwrap();
    assert_eq!(n, Graphon::constant(1.0).unwrap());
    let w = Graphon::power_law_sum(0.4).unwrap();
    assert_eq!(w.normalize(&q()).unwrap(), w);
    let s = Graphon::Step(BlockModel::uniform(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap());
    let expect = Graphon::Step(BlockModel::uniform(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap());
    assert_eq!(s.normalize(&q()).unwrap(), expect);
    assert!(matches!(
        Graphon::constant(0.0).unwrap().normalize(&q()),
        Err(Error::Degenerate(_))
    ));
    let a = Graphon::Analytic {
        kernel: named_kernel("four_xy").unwrap(),
        scale: 3.0,
    };
    let n = a.normalize(&q()).unwrap();
    assert_relative_eq!(n.lp_norm(1.0, &q()).unwrap().value, 1.0, epsilon = 1e-8);
    let mm = Graphon::mixed_membership(vec![0.5, 2.0], vec![3.0, 1.0, 1.0, 5.0]).unwrap();
    let n = mm.normalize(&q()).unwrap();
    assert_relative_eq!(n.lp_norm(1.0, &q()).unwrap().value, 1.0, epsilon = 1e-12);
}

#[test]
fn mixed_membership_mass_closed_form() {
    // E[p] = α/Σα, so ‖W‖₁ = m^T B m
    let mm = Graphon::mixed_membership(vec![1.0, 3.0], vec![2.0, 1.0, 1.0, 4.0]).unwrap();
    let m = [0.25, 0.75];
    let expect = 2.0 * m[0] * m[0] + 2.0 * m[0] * m[1] + 4.0 * m[1] * m[1];
    assert_relative_eq!(mm.lp_norm(1.0, &q()).unwrap().value, expect, epsilon = 1e-15);
}

#[test]
fn degree_examples() {
    assert_eq!(two_block(2.0).degree(Point::Unit(0.1)).unwrap(), 1.0);
    let w = Graphon::power_law_product(0.5).unwrap();
    assert_eq!(w.degree(Point::Unit(0.0)).unwrap(), 0.5);
    let w = Graphon::power_law_sum(0.5).unwrap();
    assert_relative_eq!(w.degree(Point::Unit(0.75)).unwrap(), 1.0, epsilon = 1e-15);
    assert!(matches!(
        Graphon::constant(2.0).unwrap().degree(Point::Unit(0.5)),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn degree_integrates_to_mass() {
    for w in [
        Graphon::power_law_sum(0.5).unwrap(),
        Graphon::power_law_product(0.3).unwrap(),
        Graphon::named("three_min").unwrap(),
        Graphon::named("four_xy").unwrap(),
    ] {
        let e = quadrature::integrate(
            |x| w.degree(Point::Unit(x)).unwrap(),
            0.0,
            1.0,
            &quadrature::graded_toward_zero(40).iter().map(|t| 1.0 - t).collect::<Vec<_>>(),
            &q(),
        );
        assert_relative_eq!(e.value, 1.0, max_relative = 1e-6);
    }
}

#[test]
fn three_min_degree_matches_quadrature() {
    let k = named_kernel("three_min").unwrap();
    for x in [0.1, 0.5, 0.9] {
        let e = quadrature::integrate(|y| (k.eval)(x, y), 0.0, 1.0, &[x], &q());
        assert_relative_eq!((k.degree.unwrap())(x), e.value, epsilon = 1e-12);
    }
}

#[test]
fn degree_cdf_examples() {
    let c = Graphon::constant(1.0).unwrap();
    assert_eq!(c.degree_cdf(0.999).unwrap().value, 0.0);
    assert_eq!(c.degree_cdf(1.0).unwrap().value, 1.0);
    let w = Graphon::power_law_product(0.5).unwrap();
    assert_relative_eq!(w.degree_cdf(1.0).unwrap().value, 0.75, epsilon = 1e-15);
    let w = Graphon::power_law_sum(0.5).unwrap();
    assert_relative_eq!(w.degree_cdf(1.0).unwrap().value, 0.75, epsilon = 1e-15);
    assert_eq!(w.degree_cdf(0.1).unwrap().value, 0.0);
    assert_eq!(w.degree_cdf(1.0).unwrap().std_error, None);
}

#[test]
fn power_law_cdf_agrees_with_monte_carlo() {
    for w in [Graphon::power_law_sum(0.5).unwrap(), Graphon::power_law_product(0.3).unwrap()] {
        let exact = w.degree_distribution(0, 0).unwrap();
        let mc = Cdf::Step {
            cdf: StepCdf::from_samples(&w.monte_carlo_degrees(100_000, 9).unwrap()).unwrap(),
            provenance: Provenance::MonteCarlo,
        };
        for lambda in [0.6, 0.8, 1.0, 1.5, 3.0] {
            let f = exact.eval(lambda);
            let se = (f * (1.0 - f) / 1e5).sqrt();
            assert!((mc.eval(lambda) - f).abs() <= 3.0 * se + 1e-12, "λ = {lambda}");
        }
    }
}

#[test]
fn monte_carlo_cdf_reports_error() {
    let k = named_kernel("three_min").unwrap();
    let w = Graphon::Analytic { kernel: k, scale: 1.0 };
    let v = w.degree_cdf(1.0).unwrap();
    // W_x = 3x - 1.5x² ≤ 1 ⇔ x ≤ 1 - 1/√3
    let exact = 1.0 - 1.0 / 3f64.sqrt();
    let se = v.std_error.unwrap();
    assert!(se > 0.0);
    assert!((v.value - exact).abs() <= 4.0 * se);
}

#[test]
fn tail_examples() {
    let w = two_block(4.0);
    assert_eq!(w.tail_rho(0.5, 1.0, &q()).unwrap().value, 1.0);
    assert_eq!(w.tail_rho(0.25, 1.0, &q()).unwrap().value, 0.0);
    let a = Graphon::named("four_xy").unwrap();
    assert_eq!(a.tail_rho(0.25, 2.0, &q()).unwrap().value, 0.0);
}

/// E[(½(U+V) − L)^+] for U, V with density ½u⁻³ on [½, ∞) (the law of g
/// under α = ½), integrated by hand.
fn power_law_sum_tail_half(level: f64) -> f64 {
    let a = 2.0 * level;
    let b = a - 0.5;
    let part_a = 0.0625
        * ((2.0 - 1.0 / (2.0 * b * b)) / a + (2.0 - 1.0 / b) / (a * a) + 2.0 * (2.0 * a - 1.0).ln() / a.powi(3));
    let part_b = 0.25 * (1.0 / b + (1.0 - a) / (2.0 * b * b));
    part_a + part_b
}

#[test]
fn power_law_tail_matches_hand_integral() {
    let w = Graphon::power_law_sum(0.5).unwrap();
    for rho in [0.5, 0.1, 1e-2, 1e-3, 1e-4] {
        let e = w.tail_rho(rho, 1.0, &q()).unwrap();
        let expect = power_law_sum_tail_half(1.0 / rho);
        assert_relative_eq!(e.value, expect, max_relative = 1e-5);
    }
}

#[test]
fn power_law_product_tail_by_change_of_variables() {
    // with U = g(S), P(U > u) = ((1-α)/u)^{1/α}; for α = ½ the product tail
    // E[(UV − L)^+] = ∫ P(UV > v) dv over v > L, and P(UV > v) for
    // v ≥ 1/4 is (1/(16 v²))(1 + 2 ln(4v)).
    let w = Graphon::power_law_product(0.5).unwrap();
    for rho in [0.1, 1e-3] {
        let l: f64 = 1.0 / rho;
        // ∫_L^∞ (1 + 2 ln 4v)/(16 v²) dv = (3 + 2 ln 4L) / (16 L)
        let expect = (3.0 + 2.0 * (4.0 * l).ln()) / (16.0 * l);
        let e = w.tail_rho(rho, 1.0, &q()).unwrap();
        assert_relative_eq!(e.value, expect, max_relative = 1e-5);
    }
}

#[test]
fn step_average_examples() {
    let halves = IntervalPartition::uniform(2).unwrap();
    let w = Graphon::named("four_xy").unwrap();
    let m = w.step_average(&halves, &q()).unwrap();
    assert_relative_eq!(m.b(0, 0), 0.25, epsilon = 1e-12);
    assert_relative_eq!(m.b(0, 1), 0.75, epsilon = 1e-12);
    assert_relative_eq!(m.b(1, 1), 2.25, epsilon = 1e-12);

    let c = Graphon::constant(0.3).unwrap();
    let p = IntervalPartition::new(vec![0.0, 0.2, 0.9, 1.0]).unwrap();
    let m = c.step_average(&p, &q()).unwrap();
    assert!(m.b_flat().iter().all(|&v| (v - 0.3).abs() < 1e-15));

    let s = two_block(2.0);
    let m = s.step_average(&halves, &q()).unwrap();
    assert_eq!(m.b_flat(), &[0.0, 2.0, 2.0, 0.0]);
    // a refinement keeps the block values
    let quarters = IntervalPartition::uniform(4).unwrap();
    let m = s.step_average(&quarters, &q()).unwrap();
    assert_eq!(m.b(0, 1), 0.0);
    assert_eq!(m.b(1, 2), 2.0);
}

#[test]
fn interval_partition_validation() {
    assert!(IntervalPartition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    assert!(IntervalPartition::new(vec![0.1, 1.0]).is_err());
    assert_eq!(IntervalPartition::uniform(3).unwrap().k(), 3);
}

#[test]
fn json_round_trip() {
    let texts = [
        r#"{"kind":"step","p":[0.5,0.5],"b_upper":[0,2,0]}"#,
        r#"{"kind":"power_law_sum","alpha":0.5}"#,
        r#"{"kind":"power_law_product","alpha":0.25}"#,
        r#"{"kind":"mixed_membership","alpha":[1,2],"b_upper":[1,0.5,2]}"#,
        r#"{"kind":"named","name":"four_xy"}"#,
        r#"{"kind":"named","name":"three_min","scale":2.0}"#,
    ];
    for t in texts {
        let w = Graphon::from_json(t).unwrap();
        let back = Graphon::from_json(&w.to_json()).unwrap();
        assert_eq!(back, w);
    }
    assert!(Graphon::from_json(r#"{"kind":"named","name":"nope"}"#).is_err());
    assert!(Graphon::from_json(r#"{"kind":"power_law_sum","alpha":1.5}"#).is_err());
}

#[test]
fn pair_kernel_matches_eval() {
    let latent = Latent::Unit(vec![0.05, 0.4, 0.77, 0.999]);
    for w in [
        two_block(3.0),
        Graphon::power_law_sum(0.5).unwrap(),
        Graphon::power_law_product(0.2).unwrap(),
        Graphon::named("three_min").unwrap(),
    ] {
        let pk = PairKernel::new(&w, &latent).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e = w.eval(latent.point(i), latent.point(j)).unwrap();
                assert_relative_eq!(pk.get(i, j), e, max_relative = 1e-14);
            }
        }
    }
    let mm = Graphon::mixed_membership(vec![1.0, 1.0, 1.0], vec![1., 2., 3., 2., 4., 5., 3., 5., 6.]).unwrap();
    let latent = Latent::Simplex(vec![vec![0.2, 0.3, 0.5], vec![1.0, 0.0, 0.0], vec![0.1, 0.8, 0.1]]);
    let pk = PairKernel::new(&mm, &latent).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let e = mm.eval(latent.point(i), latent.point(j)).unwrap();
            assert_relative_eq!(pk.get(i, j), e, max_relative = 1e-14);
        }
    }
}

#[test]
fn dirichlet_draws_lie_in_simplex() {
    let mut rng = stream_rng(3, Stream::Latent);
    for _ in 0..1000 {
        let x = sample_dirichlet(&[0.3, 1.0, 2.5], &mut rng).unwrap();
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

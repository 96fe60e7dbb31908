use proptest::prelude::*;
use sr_core::expr::parse_expr;

fn coords() -> Vec<String> {
    vec!["x".into(), "y".into(), "z".into()]
}

/// Random expressions over x, y, z that are finite everywhere.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-30i32..30).prop_map(|c| format!("{}", c as f64 / 10.0)),
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(String::from),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({}) + ({})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({}) - ({})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({}) * ({})", a, b)),
            (inner.clone(), 1u32..4).prop_map(|(a, p)| format!("({})^{}", a, p)),
            inner.clone().prop_map(|a| format!("-({})", a)),
            inner.clone().prop_map(|a| format!("sin({})", a)),
            inner.clone().prop_map(|a| format!("cos({})", a)),
            inner.clone().prop_map(|a| format!("atan({})", a)),
            inner.clone().prop_map(|a| format!("exp(({}) / 4)", a)),
            inner.prop_map(|a| format!("(1 + ({})^2)^-1", a)),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 3)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printing_round_trips(text in expr_text(), x in point()) {
        let c = coords();
        let e = parse_expr(&text, &c).unwrap();
        let printed = e.to_string();
        let again = parse_expr(&printed, &c).unwrap();
        prop_assert_eq!(&again.to_string(), &printed);
        let (a, b) = (e.evaluate(&x).unwrap(), again.evaluate(&x).unwrap());
        prop_assert!(a == b || (a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn derivative_matches_central_difference(text in expr_text(), x in point(), axis in 0usize..3) {
        let c = coords();
        let e = parse_expr(&text, &c).unwrap();
        let d = e.differentiate(axis).evaluate(&x).unwrap();
        let h = 1e-5 * (1.0 + x[axis].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[axis] += h;
        xm[axis] -= h;
        // fourth-order stencil keeps truncation error far below the bound
        let mut xpp = x.clone();
        let mut xmm = x.clone();
        xpp[axis] += 2.0 * h;
        xmm[axis] -= 2.0 * h;
        let f = |p: &[f64]| e.evaluate(p).unwrap();
        let fd = (8.0 * (f(&xp) - f(&xm)) - (f(&xpp) - f(&xmm))) / (12.0 * h);
        let scale = 1.0 + d.abs() + f(&x).abs();
        prop_assert!((fd - d).abs() <= 1e-6 * scale, "{}: fd {} vs {}", text, fd, d);
    }

    #[test]
    fn differentiation_is_linear(
        f in expr_text(),
        g in expr_text(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        x in point(),
        axis in 0usize..3,
    ) {
        let c = coords();
        let combined = parse_expr(&format!("({:?}) * ({}) + ({:?}) * ({})", a, f, b, g), &c).unwrap();
        let lhs = combined.differentiate(axis).evaluate(&x).unwrap();
        let df = parse_expr(&f, &c).unwrap().differentiate(axis).evaluate(&x).unwrap();
        let dg = parse_expr(&g, &c).unwrap().differentiate(axis).evaluate(&x).unwrap();
        let rhs = a * df + b * dg;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + (a * df).abs() + (b * dg).abs()));
    }
}

#[test]
fn domain_errors_name_the_subexpression() {
    let c = coords();
    let e = parse_expr("log(x) + sqrt(y)", &c).unwrap();
    let err = e.evaluate(&[-1.0, 1.0, 0.0]).unwrap_err().to_string();
    assert!(err.contains("log"), "{}", err);
    assert!(parse_expr("1/x", &c).unwrap().evaluate(&[0.0, 0.0, 0.0]).is_err());
}

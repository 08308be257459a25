use super::*;
use crate::interval::rational;
use proptest::prelude::*;

fn counts(tp: u64, tn: u64, p: u64, n: u64) -> ConfusionCounts {
    ConfusionCounts::new(tp, tn, p, n).unwrap()
}

fn value(id: ScoreId, c: &ConfusionCounts) -> f64 {
    id.definition()
        .evaluate(c, &ScoreParams::default())
        .unwrap()
        .to_f64()
}

/// A tight rational interval around the exact value of a score.
fn bracket(v: &ScoreValue) -> Interval {
    let f = v.to_f64();
    let slack = 1e-9 * (1.0 + f.abs());
    let lo = Rational::from_float(f - slack).unwrap();
    let hi = Rational::from_float(f + slack).unwrap();
    let iv = Interval::new(lo, hi).unwrap();
    assert!(v.lies_in(&iv), "bracket misses {v:?}");
    iv
}

fn inversion_contains(inv: &Inversion, x: u64) -> bool {
    match inv {
        Inversion::WholeLine => true,
        Inversion::Set(s) => s.contains(&integer(x)),
    }
}

#[test]
fn names_and_aliases() {
    for id in ScoreId::ALL {
        assert_eq!(id.name().parse::<ScoreId>().unwrap(), id);
    }
    assert_eq!(resolve_name("Recall").unwrap().id, ScoreId::Sens);
    assert_eq!(resolve_name("precision").unwrap().id, ScoreId::Ppv);
    assert_eq!(
        resolve_name("f1").unwrap(),
        ResolvedName {
            id: ScoreId::Fbp,
            unit_beta: true
        }
    );
    assert_eq!(resolve_name("f1n").unwrap().id, ScoreId::Fbn);
    assert_eq!(resolve_name("balanced-accuracy").unwrap().id, ScoreId::Bacc);
    assert!(resolve_name("acuracy").is_none());
}

#[test]
fn forward_values_on_a_known_matrix() {
    // p=40, n=70, tp=30, tn=62: fp=8, fn=10.
    let c = counts(30, 62, 40, 70);
    let close = |id, expected: f64| {
        let got = value(id, &c);
        assert!((got - expected).abs() < 1e-12, "{id}: {got} vs {expected}");
    };
    close(ScoreId::Acc, 92.0 / 110.0);
    close(ScoreId::Sens, 0.75);
    close(ScoreId::Spec, 62.0 / 70.0);
    close(ScoreId::Ppv, 30.0 / 38.0);
    close(ScoreId::Npv, 62.0 / 72.0);
    close(ScoreId::Fbp, 60.0 / 78.0);
    close(ScoreId::Fbn, 124.0 / 142.0);
    close(ScoreId::Gm, (0.75f64 * 62.0 / 70.0).sqrt());
    close(ScoreId::Fm, (30.0f64 / 38.0 * 0.75).sqrt());
    close(ScoreId::Mk, 30.0 / 38.0 + 62.0 / 72.0 - 1.0);
    close(ScoreId::Bm, 0.75 + 62.0 / 70.0 - 1.0);
    close(
        ScoreId::Mcc,
        (30.0 * 62.0 - 8.0 * 10.0) / (40.0f64 * 70.0 * 38.0 * 72.0).sqrt(),
    );
    close(ScoreId::Lrp, 0.75 / (8.0 / 70.0));
    close(ScoreId::Lrn, 0.25 / (62.0 / 70.0));
    let (s, q) = (0.75f64, 8.0 / 70.0);
    close(ScoreId::Pt, ((s * q).sqrt() - q) / (s - q));
    close(ScoreId::Dor, 30.0 * 62.0 / 80.0);
    close(ScoreId::Ji, 30.0 / 48.0);
    close(ScoreId::Bacc, (0.75 + 62.0 / 70.0) / 2.0);
    let ppv = 30.0 / 38.0;
    let npv = 62.0 / 72.0;
    let f1p = 2.0 * ppv * 0.75 / (ppv + 0.75);
    let f1n = 2.0 * npv * (62.0 / 70.0) / (npv + 62.0 / 70.0);
    close(ScoreId::Upm, 2.0 * f1p * f1n / (f1p + f1n));
    let acc = 92.0 / 110.0;
    let pe = (38.0 * 40.0 + 72.0 * 70.0) / (110.0f64 * 110.0);
    close(ScoreId::Kappa, (acc - pe) / (1.0 - pe));
}

#[test]
fn undefined_cases() {
    let def = |id: ScoreId| id.definition();
    let params = ScoreParams::default();
    let no_predicted_positive = counts(0, 5, 3, 5);
    assert!(def(ScoreId::Ppv)
        .evaluate(&no_predicted_positive, &params)
        .is_err());
    assert!(def(ScoreId::Fm)
        .evaluate(&no_predicted_positive, &params)
        .is_err());
    assert!(def(ScoreId::Mk)
        .evaluate(&no_predicted_positive, &params)
        .is_err());
    assert!(def(ScoreId::Mcc)
        .evaluate(&no_predicted_positive, &params)
        .is_err());
    assert!(def(ScoreId::Lrp)
        .evaluate(&no_predicted_positive, &params)
        .is_err());
    let no_predicted_negative = counts(3, 0, 3, 5);
    assert!(def(ScoreId::Npv)
        .evaluate(&no_predicted_negative, &params)
        .is_err());
    assert!(def(ScoreId::Lrn)
        .evaluate(&no_predicted_negative, &params)
        .is_err());
    assert!(def(ScoreId::Dor)
        .evaluate(&no_predicted_negative, &params)
        .is_err());
    // sens equals 1 - spec: the prevalence threshold is undefined.
    assert!(def(ScoreId::Pt)
        .evaluate(&counts(2, 2, 4, 4), &params)
        .is_err());
    assert!(def(ScoreId::Upm)
        .evaluate(&counts(0, 0, 4, 4), &params)
        .is_err());
    assert!(def(ScoreId::Upm)
        .evaluate(&counts(0, 1, 4, 4), &params)
        .is_ok());
    for id in [
        ScoreId::Acc,
        ScoreId::Fbp,
        ScoreId::Fbn,
        ScoreId::Ji,
        ScoreId::Kappa,
    ] {
        assert!(def(id).evaluate(&counts(0, 0, 4, 4), &params).is_ok());
    }
}

#[test]
fn beta_changes_f_scores() {
    let c = counts(30, 62, 40, 70);
    let p2 = ScoreParams::new(integer(2), integer(1)).unwrap();
    let got = ScoreId::Fbp
        .definition()
        .evaluate(&c, &p2)
        .unwrap()
        .to_f64();
    let ppv = 30.0 / 38.0;
    let expected = 5.0 * ppv * 0.75 / (4.0 * ppv + 0.75);
    assert!((got - expected).abs() < 1e-12);
    assert!(ScoreParams::new(integer(0), integer(1)).is_err());
}

#[test]
fn accuracy_inversion_example() {
    let def = ScoreId::Acc.definition();
    let value = Interval::new(rational(926, 1000), rational(928, 1000)).unwrap();
    let inv = def.invert(&value, Unknown::Tn, 30, 40, 70, &ScoreParams::default());
    let Inversion::Set(set) = inv else {
        panic!("expected an interval")
    };
    assert_eq!(
        set.intervals(),
        &[Interval::new(rational(7186, 100), rational(7208, 100)).unwrap()]
    );
    assert!(set.clip(&Interval::from_ints(0, 70).unwrap()).is_empty());
}

#[test]
fn independent_scores() {
    let sens = ScoreId::Sens.definition();
    let params = ScoreParams::default();
    let hit = Interval::new(rational(74, 100), rational(76, 100)).unwrap();
    let miss = Interval::new(rational(80, 100), rational(81, 100)).unwrap();
    assert_eq!(
        sens.invert(&hit, Unknown::Tn, 30, 40, 70, &params),
        Inversion::WholeLine
    );
    assert!(sens
        .invert(&miss, Unknown::Tn, 30, 40, 70, &params)
        .is_empty());
}

#[test]
fn out_of_range_values_are_clipped() {
    let acc = ScoreId::Acc.definition();
    let value = Interval::new(rational(11, 10), rational(12, 10)).unwrap();
    assert!(acc
        .invert(&value, Unknown::Tn, 3, 5, 5, &ScoreParams::default())
        .is_empty());
}

#[test]
fn registry_rejects_duplicates() {
    let mut reg = ScoreRegistry::builtin();
    assert_eq!(reg.names().count(), 20);
    let mut custom = (*ScoreId::Acc.definition()).clone();
    assert!(reg.register(custom.clone()).is_err());
    custom.name = "my_acc".into();
    custom.builtin = None;
    reg.register(custom).unwrap();
    assert!(reg.get("my_acc").is_some());
    assert!(reg.get("recall").is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Every inverse encloses the figure that produced the score value.
    #[test]
    fn inversion_round_trips(
        p in 1u64..300, n in 1u64..300,
        tp_frac in 0.0f64..=1.0, tn_frac in 0.0f64..=1.0,
        bp in 1i64..4, bm in 1i64..4,
    ) {
        let tp = (tp_frac * p as f64).round() as u64;
        let tn = (tn_frac * n as f64).round() as u64;
        let c = counts(tp, tn, p, n);
        let params = ScoreParams::new(rational(bp, 2), rational(bm, 2)).unwrap();
        for id in ScoreId::ALL {
            let def = id.definition();
            let Ok(v) = def.evaluate(&c, &params) else { continue };
            let iv = match &v {
                ScoreValue::Exact(x) => Interval::point(x.clone()),
                ScoreValue::Surd { .. } => bracket(&v),
            };
            let inv_tn = def.invert(&iv, Unknown::Tn, tp, p, n, &params);
            prop_assert!(inversion_contains(&inv_tn, tn), "{id} tn: {inv_tn:?} misses {tn} ({c:?})");
            let inv_tp = def.invert(&iv, Unknown::Tp, tn, p, n, &params);
            prop_assert!(inversion_contains(&inv_tp, tp), "{id} tp: {inv_tp:?} misses {tp} ({c:?})");
        }
    }

    /// Exact surd comparisons agree with floating point away from ties.
    #[test]
    fn surd_membership_matches_float(
        p in 1u64..200, n in 1u64..200,
        tp_frac in 0.0f64..=1.0, tn_frac in 0.0f64..=1.0,
        lo in -1.0f64..1.0, width in 0.0f64..0.5,
    ) {
        let tp = (tp_frac * p as f64).round() as u64;
        let tn = (tn_frac * n as f64).round() as u64;
        let c = counts(tp, tn, p, n);
        let iv = Interval::new(
            Rational::from_float(lo).unwrap(),
            Rational::from_float(lo + width).unwrap(),
        ).unwrap();
        for id in [ScoreId::Gm, ScoreId::Fm, ScoreId::Mcc, ScoreId::Pt] {
            let Ok(v) = id.definition().evaluate(&c, &ScoreParams::default()) else { continue };
            let f = v.to_f64();
            if (f - lo).abs() > 1e-9 && (f - lo - width).abs() > 1e-9 {
                prop_assert_eq!(v.lies_in(&iv), lo <= f && f <= lo + width);
            }
        }
    }
}

fn random_counts() -> impl Strategy<Value = ConfusionCounts> {
    (1u64..500, 1u64..500, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(p, n, a, b)| {
        let tp = (a * p as f64).round() as u64;
        let tn = (b * n as f64).round() as u64;
        ConfusionCounts::new(tp, tn, p, n).unwrap()
    })
}

fn eval(id: ScoreId, c: &ConfusionCounts) -> Option<ScoreValue> {
    id.definition().evaluate(c, &ScoreParams::default()).ok()
}

proptest! {
    /// Scaling every figure by the same factor leaves each score unchanged.
    #[test]
    fn scale_invariance(c in random_counts(), alpha in prop::sample::select(vec![2u64, 3, 7])) {
        let scaled = c.scaled(alpha);
        for id in ScoreId::ALL {
            let (a, b) = (eval(id, &c), eval(id, &scaled));
            prop_assert_eq!(a.is_some(), b.is_some());
            let (Some(a), Some(b)) = (a, b) else { continue };
            match (&a, &b) {
                (ScoreValue::Exact(x), ScoreValue::Exact(y)) => prop_assert_eq!(x, y),
                _ => {
                    prop_assert!(id.is_radical());
                    let (x, y) = (a.to_f64(), b.to_f64());
                    prop_assert!((x - y).abs() <= x.abs().max(y.abs()) * 2f64.powi(-30));
                }
            }
        }
    }

    /// Identities between scores from their original definitions.
    #[test]
    fn definitional_identities(c in random_counts()) {
        let f = |id| eval(id, &c).map(|v| v.to_f64());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        let (sens, spec) = (f(ScoreId::Sens).unwrap(), f(ScoreId::Spec).unwrap());
        prop_assert!(close(f(ScoreId::Bacc).unwrap(), (sens + spec) / 2.0));
        prop_assert!(close(f(ScoreId::Bm).unwrap(), sens + spec - 1.0));
        prop_assert!(close(f(ScoreId::Gm).unwrap().powi(2), sens * spec));
        if let (Some(dor), Some(lrp), Some(lrn)) = (f(ScoreId::Dor), f(ScoreId::Lrp), f(ScoreId::Lrn)) {
            if lrn > 0.0 {
                prop_assert!(close(dor, lrp / lrn));
            }
        }
        if let (Some(mcc), Some(mk)) = (f(ScoreId::Mcc), f(ScoreId::Mk)) {
            prop_assert!(close(mcc * mcc, f(ScoreId::Bm).unwrap() * mk));
        }
        if let (Some(mk), Some(ppv), Some(npv)) = (f(ScoreId::Mk), f(ScoreId::Ppv), f(ScoreId::Npv)) {
            prop_assert!(close(mk, ppv + npv - 1.0));
        }
        if let Some(upm) = f(ScoreId::Upm) {
            let (fp, fn_) = (f(ScoreId::Fbp).unwrap(), f(ScoreId::Fbn).unwrap());
            if fp + fn_ > 0.0 {
                prop_assert!(close(upm, 2.0 * fp * fn_ / (fp + fn_)));
            }
        }
    }

    /// A wider value interval never shrinks the inverse set.
    #[test]
    fn wider_values_invert_to_supersets(
        c in random_counts(),
        id in prop::sample::select(ScoreId::ALL.to_vec()),
        extra in 1i64..100,
    ) {
        let Some(v) = eval(id, &c) else { return Ok(()) };
        let narrow = bracket(&v);
        let pad = rational(extra, 10_000);
        let wide = Interval::new(narrow.lo() - &pad, narrow.hi() + &pad).unwrap();
        let params = ScoreParams::default();
        let def = id.definition();
        for (unknown, known) in [(Unknown::Tn, c.tp), (Unknown::Tp, c.tn)] {
            let a = def.invert(&narrow, unknown, known, c.p, c.n, &params);
            let b = def.invert(&wide, unknown, known, c.p, c.n, &params);
            match (a, b) {
                (_, Inversion::WholeLine) => {}
                (Inversion::WholeLine, Inversion::Set(_)) => prop_assert!(false, "{id}: narrowing gave WholeLine"),
                (Inversion::Set(a), Inversion::Set(b)) => prop_assert_eq!(a.intersect(&b), a),
            }
        }
    }
}

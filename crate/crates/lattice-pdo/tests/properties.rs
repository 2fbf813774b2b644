//! Property tests: expression print/parse stability and the exact model
//! identities under random data.

use num_complex::Complex64;
use proptest::prelude::*;

use lattice_pdo::dsl::{self, Family, Func, SymbolExpr};
use lattice_pdo::quantize::apply;
use lattice_pdo::symbol::Symbol;
use lattice_pdo::{forward_fourier, inverse_fourier, LatticeFunction, LatticeModel};

fn leaf() -> impl Strategy<Value = SymbolExpr> {
    prop_oneof![
        (0.0f64..1000.0).prop_map(SymbolExpr::Number),
        Just(SymbolExpr::ImaginaryUnit),
        Just(SymbolExpr::Pi),
        Just(SymbolExpr::Hbar),
        Just(SymbolExpr::AbsK),
        Just(SymbolExpr::AbsL),
        (prop_oneof![Just(Family::K), Just(Family::L), Just(Family::Theta)], 0usize..3)
            .prop_map(|(f, a)| SymbolExpr::Var(f, a)),
        prop_oneof![Just(Family::K), Just(Family::L)].prop_map(SymbolExpr::SqNorm),
        prop_oneof![Just("a"), Just("b"), Just("gam"), Just("mu0"), Just("zz")]
            .prop_map(|s| SymbolExpr::Param(s.to_string())),
    ]
}

fn expr_strategy() -> impl Strategy<Value = SymbolExpr> {
    leaf().prop_recursive(5, 64, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| SymbolExpr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| SymbolExpr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| SymbolExpr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| SymbolExpr::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| SymbolExpr::Neg(Box::new(a))),
            (inner.clone(), -4i32..=4).prop_map(|(a, n)| SymbolExpr::Pow(Box::new(a), n)),
            (
                prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp), Just(Func::Sqrt)],
                inner,
            )
                .prop_map(|(f, a)| SymbolExpr::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn printing_then_parsing_is_the_identity(ast in expr_strategy()) {
        let printed = ast.to_string();
        let reparsed = dsl::parse(&printed)
            .unwrap_or_else(|e| panic!("printed `{printed}` failed to reparse: {e}"));
        prop_assert_eq!(&ast, &reparsed, "printed form `{}`", printed);
    }

    #[test]
    fn fourier_pair_is_unitary_and_invertible(
        seed_values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        m_half in 1usize..9,
    ) {
        let m = 2 * m_half;
        let model = LatticeModel::new(1, 0.5, m).unwrap();
        let values: Vec<Complex64> = (0..m)
            .map(|i| {
                let (re, im) = seed_values[i % seed_values.len()];
                Complex64::new(re, im)
            })
            .collect();
        let f = LatticeFunction::from_values(&model, values).unwrap();
        let hat = forward_fourier(&f);
        prop_assert!((f.l2_norm() - hat.grid_l2_norm()).abs() < 1e-12);
        let back = inverse_fourier(&hat);
        for (a, b) in back.values.iter().zip(&f.values) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn shifting_by_a_full_period_is_the_identity(
        steps in -3i64..=3,
        m_half in 1usize..9,
    ) {
        let m = 2 * m_half;
        let model = LatticeModel::new(2, 1.0, m).unwrap();
        for idx in 0..model.size() {
            let wrapped = model.shift(idx, 0, steps * m as i64);
            prop_assert_eq!(wrapped, idx);
        }
    }

    #[test]
    fn quantization_is_linear(
        re_a in -2.0f64..2.0, im_a in -2.0f64..2.0,
        re_b in -2.0f64..2.0, im_b in -2.0f64..2.0,
        seed in 0u64..32,
    ) {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let sigma = Symbol::from_fn(&model, |k, t| {
            Complex64::new(k[0] + (2.0 * std::f64::consts::PI * t[0]).cos(), t[0])
        });
        let mk = |s: u64| {
            LatticeFunction::from_values(
                &model,
                (0..8).map(|i| {
                    let x = ((s + 1) as f64 * (i as f64 + 0.37)).sin();
                    Complex64::new(x, -0.5 * x)
                }).collect(),
            ).unwrap()
        };
        let f = mk(seed);
        let g = mk(seed + 101);
        let a = Complex64::new(re_a, im_a);
        let b = Complex64::new(re_b, im_b);
        let lhs = apply(&sigma, &f.scale(a).add(&g.scale(b)).unwrap()).unwrap();
        let rhs = apply(&sigma, &f).unwrap().scale(a)
            .add(&apply(&sigma, &g).unwrap().scale(b)).unwrap();
        for (x, y) in lhs.values.iter().zip(&rhs.values) {
            prop_assert!((x - y).norm() < 1e-11);
        }
    }
}
